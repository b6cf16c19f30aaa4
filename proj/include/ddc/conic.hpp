#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "ddc/numkern.hpp"
#include "ddc/parallel.hpp"

namespace ddc {

// One LMI block F0 + sum_i x_i * Fi <= 0 (negative semidefinite). All
// matrices are symmetric and share the block side; Fi has one entry per
// decision variable.
struct LmiBlock {
  Matrix F0;
  std::vector<Matrix> Fi;
};

enum class SdpObjectiveKind { Feasibility, MinLinear, MaxLogDetBlock };

// Block-LMI problem, affine in scalar decision variables. Strict
// inequalities are encoded by the caller shifting the constant term by
// -eps*I. For MaxLogDetBlock, blocks[logdet_block] is read as the
// positive-definite matrix -F(x) whose log-determinant is maximized.
struct SdpProblem {
  int num_vars = 0;
  std::vector<LmiBlock> blocks;
  SdpObjectiveKind objective = SdpObjectiveKind::Feasibility;
  Vector min_linear_cost;  // MinLinear only
  int logdet_block = -1;   // MaxLogDetBlock only
  std::vector<int> nonneg;  // variables constrained x_i >= 0

  void validate() const;  // throws MalformedProblem
};

struct SolverOptions {
  double feas_tol = 1e-8;
  // Margin callers use to turn strict LMIs into "<= -eps*I"; kept here so
  // every synthesis path shares one default.
  double strict_margin = 1e-6;
  int max_newton_iters = 200;
  double gap_tol = 1e-9;
  double mu_factor = 10.0;
  ExecMode exec = ExecMode::OpenMP;
  std::optional<Vector> x0;
  bool verbose = false;
};

enum class SdpStatus { Optimal, Feasible, Infeasible, NumericalFailure };

struct SdpSolution {
  Vector x;
  SdpStatus status = SdpStatus::NumericalFailure;
  double worst_eig = 0.0;        // max over blocks of lambda_max(F(x))
  double objective_value = 0.0;  // c'x, or logdet of the designated block
  int iterations = 0;            // Newton steps spent
  double infeasibility_margin = 0.0;  // converged phase-1 value when Infeasible
};

// Primal barrier/Newton path-following on the decision variables.
// Deterministic: fixed initialization and step rules, and the parallel
// Hessian assembly computes each entry independently, so results do not
// depend on the thread count.
SdpSolution solve(const SdpProblem& problem, const SolverOptions& opts = {});

// Residual report, independent of the solver path: per-block max eigenvalue
// of F(x) (nonneg bounds appended as 1x1 blocks -x_i).
struct VerifyReport {
  std::vector<double> block_max_eig;
  double worst = 0.0;
  bool within(double tol) const { return worst <= tol; }
};
VerifyReport verify(const SdpProblem& problem, const Vector& x);

// Plain-text dump/load for debugging. Format:
//   sdp <num_vars> <num_blocks>
//   objective feasibility | minlinear c_0 .. c_{d-1} | maxlogdet <block>
//   nonneg <k> i_1 .. i_k
//   block <side>          (then (1 + num_vars) matrices F0, F1, ... row-major)
void dump_problem(const SdpProblem& problem, std::ostream& os);
SdpProblem load_problem(std::istream& is);

const char* to_string(SdpStatus s);

}  // namespace ddc
