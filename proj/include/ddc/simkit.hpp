#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "ddc/dataio.hpp"
#include "ddc/numkern.hpp"
#include "ddc/polynomial.hpp"

namespace ddc {

// Ground-truth system used for data generation and closed-loop rollouts.
struct SystemSpec {
  enum class Kind { LinearDT, LinearCT, PolynomialCT };
  Kind kind = Kind::LinearDT;
  Matrix A;  // n x n (linear) or n x N coefficients over Z(x) (polynomial)
  Matrix B;  // n x m (linear) or n x M coefficients over W(x) (polynomial)
  std::optional<PolyRegressors> regressors;  // polynomial only

  int n() const { return static_cast<int>(A.rows()); }
  int m() const {
    return kind == Kind::PolynomialCT ? regressors->m() : static_cast<int>(B.cols());
  }
  // Vector field / step map value at (x, u, d).
  Vector rhs(const Vector& x, const Vector& u, const Vector& d) const;
};

struct InputSignal {
  enum class Kind { UniformRandom, SweepSine, Custom };
  Kind kind = Kind::UniformRandom;
  double lo = -1.0, hi = 1.0;      // UniformRandom
  std::uint64_t seed = 0;
  double fmin = 0.0, fmax = 0.8, amp = 2.0;  // SweepSine
  Matrix table;                    // Custom: m x T, zero-order hold
};

struct DisturbanceSignal {
  enum class Kind { None, SinCos };
  Kind kind = Kind::None;
  double delta = 0.0;  // |d(t)|^2 <= delta (equality for even n)
  double freq = 0.4;
};

struct SignalSpec {
  InputSignal input;
  DisturbanceSignal disturbance;
  int horizon = 100;      // T samples
  double spacing = 1.0;   // sample spacing (and DT time step)
  Vector x0;              // defaults to zero
};

// Run the open-loop experiment: exact stepping in discrete time, RK4 with
// substep spacing/20 in continuous time. Successor columns hold x(t_{i+1})
// in discrete time and the exact vector-field value xdot(t_i) otherwise.
ExperimentData generate_experiment(const SystemSpec& sys, const SignalSpec& sig);

struct Controller {
  enum class Kind { LinearGain, PolynomialLaw };
  Kind kind = Kind::LinearGain;
  Matrix K;                       // m x n
  std::vector<Polynomial> law;    // m entries k_i(x)
};

struct Trajectory {
  Vector times;
  Matrix states;   // n x (steps+1)
  Matrix inputs;   // m x steps
  Vector v_values; // V along the trajectory when a certificate is attached
  bool diverged = false;
};

Trajectory simulate_closed_loop(const SystemSpec& sys, const Controller& ctrl, const Vector& x0,
                                int steps, double spacing,
                                const DisturbanceSignal& dist = {},
                                const std::optional<Polynomial>& lyapunov = std::nullopt);

// Trajectory CSV: t,x1..xn,u1..um,V
void save_trajectory(const Trajectory& traj, const std::string& path);

// Classical RK4 over [t0, t1] with the given number of substeps.
Vector rk4_integrate(const std::function<Vector(const Vector&, double)>& rhs, Vector x,
                     double t0, double t1, int substeps);

// Disturbance sample d(t): paired cos/sin components scaled so |d|^2 = delta
// for even n (and <= delta otherwise).
Vector sincos_disturbance(int n, double delta, double freq, double t);

}  // namespace ddc
