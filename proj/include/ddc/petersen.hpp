#pragma once

#include <cstdint>
#include <optional>

#include "ddc/numkern.hpp"
#include "ddc/parallel.hpp"

namespace ddc {

// Data of the uncertainty elimination check: decide whether
//   C + E F G + G' F' E' < 0 (or <= 0) for every F with F'F <= Fbar,
// which holds iff some multiplier lambda > 0 satisfies
//   C + lambda E E' + lambda^{-1} G' Fbar G < 0 (resp. <= 0).
struct PetersenInstance {
  SymMatrix C;     // n x n
  Matrix E;        // n x p
  Matrix G;        // q x n
  SymMatrix Fbar;  // q x q, PSD
  Matrix Phi;      // q x q with Phi'Phi = Fbar

  int n() const { return C.dim(); }
  int p() const { return static_cast<int>(E.cols()); }
  int q() const { return static_cast<int>(G.rows()); }
};

// Validates dimensions and Fbar >= 0, and computes Phi.
PetersenInstance make_instance(const SymMatrix& C, const Matrix& E, const Matrix& G,
                               const SymMatrix& Fbar);

struct MultiplierCertificate {
  double lambda = 0.0;       // > 0
  double residual_eig = 0.0; // max eigenvalue of C + lambda EE' + lambda^{-1} G' Fbar G
};

// Max eigenvalue of the multiplier expression at a given lambda.
double multiplier_residual(const PetersenInstance& inst, double lambda);

// True iff the multiplier inequality holds strictly at lambda.
bool strict_holds_with(const PetersenInstance& inst, double lambda);

// 1-D search over log lambda of the max-eigenvalue curve (convex in lambda,
// hence unimodal): coarse grid over lambda in [1e-12, 1e12], then
// golden-section refinement. Returns nullopt when the curve minimum fails
// the strict (resp. nonstrict) threshold.
std::optional<MultiplierCertificate> find_multiplier(const PetersenInstance& inst, bool strict);

struct UniversalCheckReport {
  bool holds = false;
  Matrix worst_f;        // the worst violator (or tightest point) found
  double worst_value = 0.0;  // max eigenvalue of C + EFG + G'F'E' at worst_f
};

// Sampled check of the for-all side: F = U*Phi over N draws with ||U|| <= 1
// (80% on the boundary), plus the deterministic candidates F = 0 and the
// worst-case construction +/-F along each eigenvector of C. Deterministic
// per (seed, index) and independent of the execution mode.
UniversalCheckReport sampled_universal_check(const PetersenInstance& inst, int num_samples,
                                             bool strict, std::uint64_t seed,
                                             ExecMode exec = ExecMode::OpenMP);

// Constructive maximizer of (x'Fy)^2 over F'F <= Phi'Phi:
//   F = x y' Phi'Phi / (|x| |Phi y|),
// attaining |x|^2 |Phi y|^2. Throws DegenerateInput when x = 0 or Phi y = 0
// (the maximum is 0, attained by F = 0).
Matrix worst_case_pair(const Vector& x, const Vector& y, const Matrix& phi);

}  // namespace ddc
