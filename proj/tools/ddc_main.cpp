// Command-line front end: generate experiments, build consistency sets,
// synthesize controllers, verify them, and roll out closed loops.
//
// Exit codes: 0 success; 2 infeasible / not found / verification violations
// (a mathematical answer, not a crash); 1 runtime failure; 64 usage errors.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ddc/dataio.hpp"
#include "ddc/ellipsoid.hpp"
#include "ddc/linsynth.hpp"
#include "ddc/simkit.hpp"
#include "ddc/sospoly.hpp"
#include "ddc/toml.hpp"
#include "json.hpp"

namespace {

using namespace ddc;
using nlohmann::json;

constexpr int kExitInfeasible = 2;

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot write '" + path + "'");
  f << content;
}

Matrix matrix_from_toml(const toml::Value& v) {
  const auto& rows = v.as_array();
  const int r = static_cast<int>(rows.size());
  const int c = r ? static_cast<int>(rows[0].as_array().size()) : 0;
  Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    const auto& row = rows[i].as_array();
    if (static_cast<int>(row.size()) != c) throw ParseError("config: ragged matrix");
    for (int j = 0; j < c; ++j) m(i, j) = row[j].as_double();
  }
  return m;
}

Vector vector_from_toml(const toml::Value& v) {
  const auto& vals = v.as_array();
  Vector out(static_cast<int>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) out(static_cast<int>(i)) = vals[i].as_double();
  return out;
}

PolyRegressors regressors_from_table(const toml::Table& t, int num_vars) {
  PolyRegressors reg;
  const toml::Value* z = toml::find(t, "Z");
  const toml::Value* w = toml::find(t, "W");
  if (!z || !w) throw ParseError("config: polynomial system needs Z and W regressor lists");
  for (const auto& e : z->as_array())
    reg.Z.push_back(Polynomial::parse(e.as_string(), num_vars));
  const auto& wrows = w->as_array();
  const int mrows = static_cast<int>(wrows.size());
  const int mcols = mrows ? static_cast<int>(wrows[0].as_array().size()) : 0;
  reg.W = MatrixPolynomial(mrows, mcols, num_vars);
  for (int i = 0; i < mrows; ++i) {
    const auto& row = wrows[i].as_array();
    for (int j = 0; j < mcols; ++j)
      reg.W.at(i, j) = Polynomial::parse(row[j].as_string(), num_vars);
  }
  return reg;
}

PolyRegressors load_regressors(const std::string& path) {
  toml::Table t = toml::parse_file(path);
  const int nv = static_cast<int>(toml::get_int_or(t, "vars", 0));
  if (nv < 1) throw ParseError("regressors: missing 'vars'");
  return regressors_from_table(t, nv);
}

SystemSpec system_from_config(const toml::Table& cfg) {
  SystemSpec sys;
  const std::string kind = toml::get_string(cfg, "system.kind");
  const toml::Value* a = toml::find(cfg, "system.A");
  const toml::Value* b = toml::find(cfg, "system.B");
  if (!a || !b) throw ParseError("config: system needs A and B");
  sys.A = matrix_from_toml(*a);
  sys.B = matrix_from_toml(*b);
  if (kind == "linear-dt") {
    sys.kind = SystemSpec::Kind::LinearDT;
  } else if (kind == "linear-ct") {
    sys.kind = SystemSpec::Kind::LinearCT;
  } else if (kind == "polynomial-ct") {
    sys.kind = SystemSpec::Kind::PolynomialCT;
    sys.regressors =
        regressors_from_table(toml::find(cfg, "system")->as_table(), static_cast<int>(sys.A.rows()));
  } else {
    throw ParseError("config: unknown system.kind '" + kind + "'");
  }
  return sys;
}

SignalSpec signal_from_config(const toml::Table& cfg) {
  SignalSpec sig;
  const std::string type = toml::get_string_or(cfg, "signal.type", "uniform");
  if (type == "uniform") {
    sig.input.kind = InputSignal::Kind::UniformRandom;
    sig.input.lo = toml::get_double_or(cfg, "signal.lo", -1.0);
    sig.input.hi = toml::get_double_or(cfg, "signal.hi", 1.0);
  } else if (type == "sweep") {
    sig.input.kind = InputSignal::Kind::SweepSine;
    sig.input.fmin = toml::get_double_or(cfg, "signal.fmin", 0.0);
    sig.input.fmax = toml::get_double_or(cfg, "signal.fmax", 0.8);
    sig.input.amp = toml::get_double_or(cfg, "signal.amp", 2.0);
  } else {
    throw ParseError("config: unknown signal.type '" + type + "'");
  }
  sig.input.seed = static_cast<std::uint64_t>(toml::get_int_or(cfg, "signal.seed", 0));
  sig.horizon = static_cast<int>(toml::get_int_or(cfg, "signal.T", 100));
  sig.spacing = toml::get_double_or(cfg, "signal.spacing", 1.0);
  if (const toml::Value* x0 = toml::find(cfg, "signal.x0")) sig.x0 = vector_from_toml(*x0);
  const std::string ntype = toml::get_string_or(cfg, "noise.type", "none");
  if (ntype == "sincos") {
    sig.disturbance.kind = DisturbanceSignal::Kind::SinCos;
    sig.disturbance.delta = toml::get_double(cfg, "noise.delta");
    sig.disturbance.freq = toml::get_double_or(cfg, "noise.freq", 0.4);
  } else if (ntype != "none") {
    throw ParseError("config: unknown noise.type '" + ntype + "'");
  }
  return sig;
}

TimeMode mode_from_string(const std::string& s) {
  if (s == "dt") return TimeMode::DiscreteTime;
  if (s == "ct") return TimeMode::ContinuousTime;
  if (s == "poly") return TimeMode::Polynomial;
  throw ParseError("unknown mode '" + s + "' (expected dt, ct, or poly)");
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

struct Summary {
  json j;
  std::string path;

  Summary(const std::string& command, const std::string& out_path) : path(out_path) {
    j["schema_version"] = 1;
    j["command"] = command;
  }
  ~Summary() {
    if (!path.empty()) {
      std::ofstream f(path);
      if (f) f << j.dump(2) << "\n";
    }
  }
};

DataMatrices load_data_matrices(const std::string& data_path, const std::string& noise_path,
                                TimeMode mode, const std::string& regressors_path) {
  ExperimentData exp = load_experiment(data_path, mode);
  exp.noise = load_noise_config(noise_path);
  std::optional<PolyRegressors> reg;
  if (mode == TimeMode::Polynomial) {
    if (regressors_path.empty()) throw ParseError("polynomial mode needs --regressors");
    reg = load_regressors(regressors_path);
  }
  return build_data_matrices(exp, reg);
}

int cmd_generate(const std::string& config_path, const std::string& out,
                 const std::string& noise_out, const std::string& summary_path) {
  toml::Table cfg = toml::parse_file(config_path);
  SystemSpec sys = system_from_config(cfg);
  SignalSpec sig = signal_from_config(cfg);
  ExperimentData exp = generate_experiment(sys, sig);
  save_experiment(exp, out);
  if (!noise_out.empty()) {
    std::ostringstream ss;
    ss << "noise = { type = \"instantaneous\", delta = " << exp.noise.inst_delta << " }\n";
    spit(noise_out, ss.str());
  }
  Summary s("generate", summary_path);
  s.j["samples"] = exp.T();
  s.j["state_dim"] = exp.n();
  s.j["input_dim"] = exp.m();
  s.j["data"] = out;
  std::cout << "generate: wrote " << exp.T() << " samples to " << out << "\n";
  return 0;
}

int cmd_ingest(const std::string& data, const std::string& noise, const std::string& mode_str,
               const std::string& regressors_path, const std::string& out,
               const std::string& summary_path) {
  const TimeMode mode = mode_from_string(mode_str);
  DataMatrices dm = load_data_matrices(data, noise, mode, regressors_path);
  auto [ok, smin] = check_rank(dm);
  Summary s("ingest", summary_path);
  s.j["rank_ok"] = ok;
  s.j["smallest_singular_value"] = smin;
  if (!ok) throw RankDeficient("regressor stack is rank deficient (sigma_min = " +
                               std::to_string(smin) + "); collect more data");
  MatrixEllipsoid e = consistency_set(dm);
  spit(out, ellipsoid_to_json(e));
  s.j["ellipsoid"] = out;
  s.j["size_measure"] = size_measure(e);
  s.j["center"] = matrix_to_json(e.center.transpose());
  std::cout << "ingest: consistency set written to " << out
            << " (size measure " << size_measure(e) << ")\n";
  return 0;
}

int cmd_overapprox(const std::string& data, double delta, const std::string& mode_str,
                   const std::string& regressors_path, const std::string& out,
                   const std::string& summary_path) {
  const TimeMode mode = mode_from_string(mode_str);
  ExperimentData exp = load_experiment(data, mode);
  std::vector<OverapproxPoint> pts(exp.T());
  std::optional<PolyRegressors> reg;
  if (mode == TimeMode::Polynomial) {
    if (regressors_path.empty()) throw ParseError("polynomial mode needs --regressors");
    reg = load_regressors(regressors_path);
  }
  for (int i = 0; i < exp.T(); ++i) {
    pts[i].successor = exp.successors.col(i);
    if (reg) {
      pts[i].regressor = reg->eval_Z(exp.states.col(i));
      pts[i].input = reg->eval_W(exp.states.col(i)) * exp.inputs.col(i);
    } else {
      pts[i].regressor = exp.states.col(i);
      pts[i].input = exp.inputs.col(i);
    }
  }
  SolverOptions opts;
  opts.max_newton_iters = 800;
  MatrixEllipsoid e = overapproximate(pts, delta, opts);
  spit(out, ellipsoid_to_json(e));
  Summary s("overapprox", summary_path);
  s.j["ellipsoid"] = out;
  s.j["delta"] = delta;
  s.j["points"] = exp.T();
  s.j["size_measure"] = size_measure(e);
  std::cout << "overapprox: ellipsoid written to " << out
            << " (size measure " << size_measure(e) << ")\n";
  return 0;
}

int cmd_synth_lin(TimeMode mode, const std::string& ellipsoid_path, const std::string& data,
                  const std::string& noise, const std::string& form_str, const std::string& out,
                  const std::string& summary_path) {
  MatrixEllipsoid e = !ellipsoid_path.empty()
                          ? ellipsoid_from_json(slurp(ellipsoid_path))
                          : consistency_set(load_data_matrices(
                                data, noise, mode, ""));
  const LmiForm form = form_str == "center" ? LmiForm::CenterShape : LmiForm::BlockABC;
  SynthResult res = mode == TimeMode::DiscreteTime ? synth_dt(e, form) : synth_ct(e, form);
  Summary s("synth", summary_path);
  s.j["mode"] = mode == TimeMode::DiscreteTime ? "dt" : "ct";
  s.j["form"] = form_str;
  s.j["status"] = to_string(res.status);
  s.j["solver_iterations"] = res.iterations;
  if (!res.certificate) {
    s.j["infeasibility_margin"] = res.infeasibility_margin;
    if (res.status == SdpStatus::Infeasible) {
      std::cout << "synth: infeasible (margin " << res.infeasibility_margin
                << "); no quadratic robust stabilizer exists for this set\n";
      return kExitInfeasible;
    }
    throw NumericalFailure("synthesis failed: " + std::string(to_string(res.status)));
  }
  spit(out, certificate_to_json(*res.certificate));
  auto rep = verify_robust(e, *res.certificate, 200, 0);
  s.j["certificate"] = out;
  s.j["lmi_residual"] = res.certificate->lmi_residual;
  s.j["verify"] = {{"worst_residual", rep.worst_residual},
                   {"violations", rep.violations},
                   {"worst_closed_loop", rep.worst_closed_loop}};
  s.j["K"] = matrix_to_json(res.certificate->K);
  std::cout << "synth: certificate written to " << out
            << " (worst sampled residual " << rep.worst_residual << ")\n";
  return 0;
}

int cmd_synth_poly(const std::string& ellipsoid_path, const std::string& regressors_path,
                   const std::string& init_cert_path, const std::string& degrees_str,
                   const std::string& l1_str, double eps_lambda, int iters, bool run_all,
                   const std::string& out, const std::string& summary_path) {
  MatrixEllipsoid e = ellipsoid_from_json(slurp(ellipsoid_path));
  PolyRegressors reg = load_regressors(regressors_path);
  const int nx = reg.num_vars();

  AlternationConfig config;
  config.eps_lambda = eps_lambda;
  config.max_iterations = iters;
  config.stop_on_certificate = !run_all;
  if (!degrees_str.empty()) {
    std::istringstream ss(degrees_str);
    char comma;
    if (!(ss >> config.degrees.V.lo >> comma >> config.degrees.V.hi >> comma >>
          config.degrees.k.lo >> comma >> config.degrees.k.hi >> comma >>
          config.degrees.lambda.lo >> comma >> config.degrees.lambda.hi))
      throw ParseError("--degrees expects 'Vlo,Vhi,klo,khi,lamlo,lamhi'");
  }
  if (!l1_str.empty()) {
    config.l1 = Polynomial::parse(l1_str, nx);
  } else {
    Polynomial l1(nx);
    for (int j = 0; j < nx; ++j) {
      MultiIndex mi(nx, 0);
      mi[j] = 2;
      l1.add_term(mi, 1e-3);
    }
    config.l1 = l1;
  }
  LinearCertificate lin = certificate_from_json(slurp(init_cert_path));
  config.v_init = quadratic_form_poly(lin.P.inverse());
  config.solver.max_newton_iters = 600;

  AlternationResult res = alternate_synthesis(e, reg, config);
  Summary s("synth-poly", summary_path);
  s.j["iterations"] = res.iterations;
  s.j["diagnostics"] = res.diagnostics;
  if (!res.certificate) {
    s.j["status"] = "NotFound";
    std::cout << "synth-poly: no certificate within " << iters << " iterations\n"
              << res.diagnostics;
    return kExitInfeasible;
  }
  spit(out, poly_certificate_to_json(*res.certificate));
  s.j["status"] = "Found";
  s.j["certificate"] = out;
  s.j["V"] = res.certificate->V.to_string();
  s.j["k"] = res.certificate->k[0].to_string();
  std::cout << "synth-poly: certificate written to " << out << " after " << res.iterations
            << " iteration(s)\n";
  return 0;
}

int cmd_verify(const std::string& cert_path, const std::string& ellipsoid_path,
               const std::string& data, const std::string& noise, const std::string& mode_str,
               const std::string& regressors_path, int samples, std::uint64_t seed,
               double grid_lo, double grid_hi, int grid_points,
               const std::string& summary_path) {
  const std::string cert_text = slurp(cert_path);
  const json cj = json::parse(cert_text);
  Summary s("verify", summary_path);
  s.j["samples"] = samples;

  MatrixEllipsoid e = !ellipsoid_path.empty()
                          ? ellipsoid_from_json(slurp(ellipsoid_path))
                          : consistency_set(load_data_matrices(data, noise,
                                                               mode_from_string(mode_str),
                                                               regressors_path));
  if (cj.contains("V")) {
    PolyCertificate cert = poly_certificate_from_json(cert_text);
    PolyRegressors reg = load_regressors(regressors_path);
    PolyVerifyReport rep =
        verify_poly(e, cert, reg, {grid_lo, grid_hi, grid_points}, samples, seed);
    s.j["min_v_margin"] = rep.min_v_margin;
    s.j["min_lambda_margin"] = rep.min_lambda_margin;
    s.j["worst_decrease"] = rep.worst_decrease;
    s.j["clean"] = rep.clean();
    std::cout << "verify: decrease margin " << rep.worst_decrease << ", V margin "
              << rep.min_v_margin << (rep.clean() ? " (clean)" : " (violations)") << "\n";
    return rep.clean() ? 0 : kExitInfeasible;
  }
  LinearCertificate cert = certificate_from_json(cert_text);
  RobustVerifyReport rep = verify_robust(e, cert, samples, seed);
  s.j["worst_residual"] = rep.worst_residual;
  s.j["center_residual"] = rep.center_residual;
  s.j["violations"] = rep.violations;
  s.j["worst_closed_loop"] = rep.worst_closed_loop;
  std::cout << "verify: " << rep.models_tested << " models, worst residual "
            << rep.worst_residual << ", violations " << rep.violations << "\n";
  return rep.violations == 0 ? 0 : kExitInfeasible;
}

int cmd_simulate(const std::string& config_path, const std::string& cert_path, const std::string& x0_str,
                 int steps, double spacing, const std::string& out,
                 const std::string& summary_path) {
  toml::Table cfg = toml::parse_file(config_path);
  SystemSpec sys = system_from_config(cfg);
  const std::string cert_text = slurp(cert_path);
  const json cj = json::parse(cert_text);
  Controller ctrl;
  std::optional<Polynomial> lyap;
  if (cj.contains("V")) {
    PolyCertificate cert = poly_certificate_from_json(cert_text);
    ctrl.kind = Controller::Kind::PolynomialLaw;
    ctrl.law = cert.k;
    lyap = cert.V;
  } else {
    LinearCertificate cert = certificate_from_json(cert_text);
    ctrl.kind = Controller::Kind::LinearGain;
    ctrl.K = cert.K;
    lyap = quadratic_form_poly(cert.P.inverse());
  }
  Vector x0(sys.n());
  {
    std::istringstream ss(x0_str);
    std::string tok;
    int i = 0;
    while (std::getline(ss, tok, ',') && i < sys.n()) x0(i++) = std::stod(tok);
    if (i != sys.n()) throw ParseError("--x0 needs " + std::to_string(sys.n()) + " components");
  }
  Trajectory traj = simulate_closed_loop(sys, ctrl, x0, steps, spacing, {}, lyap);
  save_trajectory(traj, out);
  Summary s("simulate", summary_path);
  s.j["diverged"] = traj.diverged;
  s.j["final_norm"] = traj.states.col(traj.states.cols() - 1).norm();
  s.j["trajectory"] = out;
  std::cout << "simulate: " << (traj.diverged ? "DIVERGED" : "ok") << ", final |x| = "
            << traj.states.col(traj.states.cols() - 1).norm() << ", wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-driven robust controller synthesis from noisy experiments"};
  app.require_subcommand(1);

  std::string config, out, noise_out, summary, data, noise, mode = "dt", regressors, ellipsoid;
  std::string cert, form = "abc", degrees, l1, init_cert, x0 = "1,1";
  double delta = 0.1, eps_lambda = 1e-3, grid_lo = -2.0, grid_hi = 2.0, spacing = 1.0;
  int samples = 1000, iters = 15, grid_points = 21, steps = 200;
  std::uint64_t seed = 0;
  bool run_all = false;

  auto* gen = app.add_subcommand("generate", "simulate an open-loop experiment");
  gen->add_option("--config", config)->required();
  gen->add_option("--out", out)->required();
  gen->add_option("--noise-out", noise_out);
  gen->add_option("--summary", summary);

  auto* ing = app.add_subcommand("ingest", "build the data-consistency ellipsoid");
  ing->add_option("--data", data)->required();
  ing->add_option("--noise-config", noise)->required();
  ing->add_option("--mode", mode)->check(CLI::IsMember({"dt", "ct", "poly"}));
  ing->add_option("--regressors", regressors);
  ing->add_option("--out", out)->required();
  ing->add_option("--summary", summary);

  auto* ova = app.add_subcommand("overapprox",
                                 "min-volume ellipsoid for an instantaneous noise bound");
  ova->add_option("--data", data)->required();
  ova->add_option("--delta", delta)->required();
  ova->add_option("--mode", mode)->check(CLI::IsMember({"ct", "poly"}));
  ova->add_option("--regressors", regressors);
  ova->add_option("--out", out)->required();
  ova->add_option("--summary", summary);

  auto add_synth_opts = [&](CLI::App* cmd) {
    cmd->add_option("--ellipsoid", ellipsoid);
    cmd->add_option("--data", data);
    cmd->add_option("--noise-config", noise);
    cmd->add_option("--form", form)->check(CLI::IsMember({"abc", "center"}));
    cmd->add_option("--out", out)->required();
    cmd->add_option("--summary", summary);
  };
  auto* sdt = app.add_subcommand("synth-lin-dt", "discrete-time robust state feedback");
  add_synth_opts(sdt);
  auto* sct = app.add_subcommand("synth-lin-ct", "continuous-time robust state feedback");
  add_synth_opts(sct);

  auto* spo = app.add_subcommand("synth-poly", "polynomial state feedback via SOS alternation");
  spo->add_option("--ellipsoid", ellipsoid)->required();
  spo->add_option("--regressors", regressors)->required();
  spo->add_option("--init-cert", init_cert)->required();
  spo->add_option("--degrees", degrees, "Vlo,Vhi,klo,khi,lamlo,lamhi");
  spo->add_option("--l1", l1);
  spo->add_option("--eps-lambda", eps_lambda);
  spo->add_option("--iters", iters);
  spo->add_flag("--run-all-iters", run_all);
  spo->add_option("--out", out)->required();
  spo->add_option("--summary", summary);

  auto* ver = app.add_subcommand("verify", "robust verification of a certificate");
  ver->add_option("--cert", cert)->required();
  ver->add_option("--ellipsoid", ellipsoid);
  ver->add_option("--data", data);
  ver->add_option("--noise-config", noise);
  ver->add_option("--mode", mode);
  ver->add_option("--regressors", regressors);
  ver->add_option("--samples", samples);
  ver->add_option("--seed", seed);
  ver->add_option("--grid-lo", grid_lo);
  ver->add_option("--grid-hi", grid_hi);
  ver->add_option("--grid-points", grid_points);
  ver->add_option("--summary", summary);

  auto* sim = app.add_subcommand("simulate", "closed-loop rollout with a certificate");
  sim->add_option("--system", config)->required();
  sim->add_option("--cert", cert)->required();
  sim->add_option("--x0", x0);
  sim->add_option("--steps", steps);
  sim->add_option("--spacing", spacing);
  sim->add_option("--out", out)->required();
  sim->add_option("--summary", summary);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  try {
    if (gen->parsed()) return cmd_generate(config, out, noise_out, summary);
    if (ing->parsed()) return cmd_ingest(data, noise, mode, regressors, out, summary);
    if (ova->parsed()) return cmd_overapprox(data, delta, mode, regressors, out, summary);
    if (sdt->parsed())
      return cmd_synth_lin(TimeMode::DiscreteTime, ellipsoid, data, noise, form, out, summary);
    if (sct->parsed())
      return cmd_synth_lin(TimeMode::ContinuousTime, ellipsoid, data, noise, form, out, summary);
    if (spo->parsed())
      return cmd_synth_poly(ellipsoid, regressors, init_cert, degrees, l1, eps_lambda, iters,
                            run_all, out, summary);
    if (ver->parsed())
      return cmd_verify(cert, ellipsoid, data, noise, mode, regressors, samples, seed, grid_lo,
                        grid_hi, grid_points, summary);
    if (sim->parsed()) return cmd_simulate(config, cert, x0, steps, spacing, out, summary);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 64;
}
