#include "ddc/simkit.hpp"

#include <cmath>
#include <fstream>

#include "ddc/rng.hpp"

namespace ddc {

Vector SystemSpec::rhs(const Vector& x, const Vector& u, const Vector& d) const {
  if (kind == Kind::PolynomialCT) {
    const auto& reg = *regressors;
    return A * reg.eval_Z(x) + B * (reg.eval_W(x) * u) + d;
  }
  return A * x + B * u + d;
}

Vector sincos_disturbance(int n, double delta, double freq, double t) {
  Vector d = Vector::Zero(n);
  if (delta <= 0 || n == 0) return d;
  const int pairs = (n + 1) / 2;
  const double amp = std::sqrt(delta / pairs);
  const double a = 2.0 * M_PI * freq * t;
  for (int i = 0; i < n; ++i) d(i) = (i % 2 == 0) ? amp * std::cos(a) : amp * std::sin(a);
  return d;
}

namespace {

Vector input_at(const InputSignal& in, int m, int sample_index, double t, double t_end) {
  switch (in.kind) {
    case InputSignal::Kind::UniformRandom: {
      RandomStream rs(in.seed, static_cast<std::uint64_t>(sample_index));
      Vector u(m);
      for (int i = 0; i < m; ++i) u(i) = rs.uniform(in.lo, in.hi);
      return u;
    }
    case InputSignal::Kind::SweepSine: {
      // linear chirp, cosine phase: instantaneous frequency ramps
      // fmin -> fmax over t_end
      const double f = in.fmin + (in.fmax - in.fmin) * t / (2.0 * std::max(t_end, 1e-12));
      return Vector::Constant(m, in.amp * std::cos(2.0 * M_PI * f * t));
    }
    case InputSignal::Kind::Custom: {
      if (in.table.rows() != m || sample_index >= in.table.cols())
        throw DimensionError("input signal: custom table too short");
      return in.table.col(sample_index);
    }
  }
  return Vector::Zero(m);
}

Vector disturbance_at(const DisturbanceSignal& d, int n, double t) {
  if (d.kind == DisturbanceSignal::Kind::None) return Vector::Zero(n);
  return sincos_disturbance(n, d.delta, d.freq, t);
}

// One RK4 macro-step of width h for xdot = rhs(x, t) with 20 substeps.
template <typename Rhs>
Vector rk4_step(const Rhs& rhs, Vector x, double t0, double h) {
  const int substeps = 20;
  const double hs = h / substeps;
  double t = t0;
  for (int s = 0; s < substeps; ++s) {
    const Vector k1 = rhs(x, t);
    const Vector k2 = rhs(x + 0.5 * hs * k1, t + 0.5 * hs);
    const Vector k3 = rhs(x + 0.5 * hs * k2, t + 0.5 * hs);
    const Vector k4 = rhs(x + hs * k3, t + hs);
    x += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += hs;
  }
  return x;
}

}  // namespace

Vector rk4_integrate(const std::function<Vector(const Vector&, double)>& rhs, Vector x,
                     double t0, double t1, int substeps) {
  if (substeps < 1) throw DomainError("rk4_integrate: substeps must be >= 1");
  const double hs = (t1 - t0) / substeps;
  double t = t0;
  for (int s = 0; s < substeps; ++s) {
    const Vector k1 = rhs(x, t);
    const Vector k2 = rhs(x + 0.5 * hs * k1, t + 0.5 * hs);
    const Vector k3 = rhs(x + 0.5 * hs * k2, t + 0.5 * hs);
    const Vector k4 = rhs(x + hs * k3, t + hs);
    x += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += hs;
  }
  return x;
}

ExperimentData generate_experiment(const SystemSpec& sys, const SignalSpec& sig) {
  const int n = sys.n();
  const int m = sys.m();
  const int T = sig.horizon;
  if (T < 1) throw DomainError("generate_experiment: horizon must be >= 1");
  const double dt = sig.spacing;
  const double t_end = T * dt;

  ExperimentData exp;
  exp.mode = sys.kind == SystemSpec::Kind::LinearDT ? TimeMode::DiscreteTime
             : sys.kind == SystemSpec::Kind::LinearCT ? TimeMode::ContinuousTime
                                                      : TimeMode::Polynomial;
  exp.times.resize(T);
  exp.inputs.resize(m, T);
  exp.states.resize(n, T);
  exp.successors.resize(n, T);
  if (sig.disturbance.kind == DisturbanceSignal::Kind::SinCos) {
    exp.noise.kind = NoiseBound::Kind::Instantaneous;
    exp.noise.inst_delta = sig.disturbance.delta;
  } else {
    exp.noise.kind = NoiseBound::Kind::Instantaneous;
    exp.noise.inst_delta = 0.0;
  }

  Vector x = sig.x0.size() == n ? sig.x0 : Vector::Zero(n);

  if (sys.kind == SystemSpec::Kind::LinearDT) {
    for (int i = 0; i < T; ++i) {
      const double t = i * dt;
      const Vector u = input_at(sig.input, m, i, t, t_end);
      const Vector d = disturbance_at(sig.disturbance, n, t);
      exp.times(i) = t;
      exp.inputs.col(i) = u;
      exp.states.col(i) = x;
      x = sys.rhs(x, u, d);
      exp.successors.col(i) = x;
    }
    return exp;
  }

  // continuous time: the input is sampled-and-held for UniformRandom/Custom
  // and evaluated continuously for SweepSine
  const bool continuous_input = sig.input.kind == InputSignal::Kind::SweepSine;
  for (int i = 0; i < T; ++i) {
    const double t = i * dt;
    const Vector u_i = input_at(sig.input, m, i, t, t_end);
    const Vector d_i = disturbance_at(sig.disturbance, n, t);
    exp.times(i) = t;
    exp.inputs.col(i) = u_i;
    exp.states.col(i) = x;
    exp.successors.col(i) = sys.rhs(x, u_i, d_i);  // exact derivative at the sample
    auto rhs = [&](const Vector& xx, double tt) {
      const Vector u = continuous_input ? input_at(sig.input, m, i, tt, t_end) : u_i;
      return sys.rhs(xx, u, disturbance_at(sig.disturbance, n, tt));
    };
    x = rk4_step(rhs, x, t, dt);
  }
  return exp;
}

Trajectory simulate_closed_loop(const SystemSpec& sys, const Controller& ctrl, const Vector& x0,
                                int steps, double spacing, const DisturbanceSignal& dist,
                                const std::optional<Polynomial>& lyapunov) {
  const int n = sys.n();
  const int m = sys.m();
  if ((ctrl.kind == Controller::Kind::LinearGain &&
       (ctrl.K.rows() != m || ctrl.K.cols() != n)) ||
      (ctrl.kind == Controller::Kind::PolynomialLaw && static_cast<int>(ctrl.law.size()) != m))
    throw DimensionError("simulate_closed_loop: controller dimensions do not match the system");

  auto control = [&](const Vector& x) {
    if (ctrl.kind == Controller::Kind::LinearGain) return Vector(ctrl.K * x);
    Vector u(m);
    for (int i = 0; i < m; ++i) u(i) = ctrl.law[i].eval(x);
    return u;
  };

  Trajectory traj;
  traj.times.resize(steps + 1);
  traj.states.resize(n, steps + 1);
  traj.inputs.resize(m, steps);
  if (lyapunov) traj.v_values.resize(steps + 1);

  Vector x = x0;
  traj.states.col(0) = x;
  traj.times(0) = 0.0;
  if (lyapunov) traj.v_values(0) = lyapunov->eval(x);

  for (int i = 0; i < steps; ++i) {
    const double t = i * spacing;
    const Vector u = control(x);
    traj.inputs.col(i) = u;
    if (sys.kind == SystemSpec::Kind::LinearDT) {
      x = sys.rhs(x, u, disturbance_at(dist, n, t));
    } else {
      auto rhs = [&](const Vector& xx, double tt) {
        return sys.rhs(xx, control(xx), disturbance_at(dist, n, tt));
      };
      x = rk4_step(rhs, x, t, spacing);
    }
    traj.times(i + 1) = (i + 1) * spacing;
    traj.states.col(i + 1) = x;
    if (lyapunov) traj.v_values(i + 1) = lyapunov->eval(x);
    if (x.norm() > 1e9) {
      traj.diverged = true;
      traj.times.conservativeResize(i + 2);
      traj.states.conservativeResize(n, i + 2);
      traj.inputs.conservativeResize(m, i + 1);
      if (lyapunov) traj.v_values.conservativeResize(i + 2);
      break;
    }
  }
  return traj;
}

void save_trajectory(const Trajectory& traj, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ParseError("trajectory: cannot write '" + path + "'");
  f.precision(17);
  const int n = static_cast<int>(traj.states.rows());
  const int m = static_cast<int>(traj.inputs.rows());
  f << "t";
  for (int i = 0; i < n; ++i) f << ",x" << (i + 1);
  for (int i = 0; i < m; ++i) f << ",u" << (i + 1);
  f << ",V\n";
  for (int k = 0; k < traj.times.size(); ++k) {
    f << traj.times(k);
    for (int i = 0; i < n; ++i) f << "," << traj.states(i, k);
    for (int i = 0; i < m; ++i) f << "," << (k < traj.inputs.cols() ? traj.inputs(i, k) : 0.0);
    f << "," << (traj.v_values.size() > k ? traj.v_values(k) : 0.0);
    f << "\n";
  }
}

}  // namespace ddc
