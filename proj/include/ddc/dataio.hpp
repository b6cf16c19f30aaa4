#pragma once

#include <optional>
#include <string>
#include <utility>

#include "ddc/numkern.hpp"
#include "ddc/polynomial.hpp"

namespace ddc {

enum class TimeMode { DiscreteTime, ContinuousTime, Polynomial };

struct NoiseBound {
  enum class Kind { Energy, Instantaneous };
  Kind kind = Kind::Instantaneous;
  Matrix delta;             // energy bound factor (n x n); the bound is delta*delta'
  double inst_delta = 0.0;  // instantaneous |d|^2 <= inst_delta
};

// One open-loop experiment log: T samples of input, state, and successor
// (next state in discrete time, state derivative otherwise), column per
// sample.
struct ExperimentData {
  TimeMode mode = TimeMode::DiscreteTime;
  Vector times;
  Matrix inputs;      // m x T
  Matrix states;      // n x T
  Matrix successors;  // n x T
  NoiseBound noise;

  int T() const { return static_cast<int>(states.cols()); }
  int n() const { return static_cast<int>(states.rows()); }
  int m() const { return static_cast<int>(inputs.rows()); }
};

// Known regressors for the polynomial pipeline: Z maps the state to N
// monomials, W is an M x m matrix of monomials multiplying the input.
struct PolyRegressors {
  std::vector<Polynomial> Z;
  MatrixPolynomial W;

  int N() const { return static_cast<int>(Z.size()); }
  int M() const { return W.rows(); }
  int m() const { return W.cols(); }
  int num_vars() const { return Z.empty() ? 0 : Z[0].num_vars(); }

  Vector eval_Z(const Vector& x) const;
  Matrix eval_W(const Vector& x) const;
};

// Assembled regression data: X1 = [A B] * regressor_stack + disturbance,
// with the disturbance energy bounded by delta*delta'.
struct DataMatrices {
  TimeMode mode = TimeMode::DiscreteTime;
  Matrix X1;               // n x T
  Matrix regressor_stack;  // (n+m) x T, or (N+M) x T in polynomial mode
  Matrix delta;            // n x n
  int n = 0;
  int input_width = 0;  // m, or M in polynomial mode

  int T() const { return static_cast<int>(X1.cols()); }
  int p() const { return static_cast<int>(regressor_stack.rows()); }
};

// CSV schema: header "t,u1..um,x1..xn,s1..sn", one row per sample.
ExperimentData load_experiment(const std::string& path, TimeMode mode);
void save_experiment(const ExperimentData& exp, const std::string& path);

// Noise sidecar (.json or .toml):
//   noise = { type = "instantaneous", delta = 0.1 }
//   noise = { type = "energy", Delta = [[...], ...] }
NoiseBound load_noise_config(const std::string& path);

DataMatrices build_data_matrices(const ExperimentData& exp,
                                 const std::optional<PolyRegressors>& regressors = std::nullopt);

// Full row rank check of the regressor stack. tol < 0 selects the default
// 1e-8 * sigma_max. Returns (ok, smallest singular value).
std::pair<bool, double> check_rank(const DataMatrices& dm, double tol = -1.0);

// Convert an instantaneous bound |d|^2 <= delta over T samples into the
// energy bound factor sqrt(T*delta) * I.
Matrix energy_bound_from_instantaneous(double delta, int T, int n);

}  // namespace ddc
