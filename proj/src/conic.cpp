#include "ddc/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

namespace ddc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Scaled svec so that <svec(A), svec(B)> = tr(A*B) for symmetric A, B.
void svec_into(const Matrix& t, double* out) {
  const int s = static_cast<int>(t.rows());
  const double r2 = std::sqrt(2.0);
  int k = 0;
  for (int j = 0; j < s; ++j) {
    out[k++] = t(j, j);
    for (int i = j + 1; i < s; ++i) out[k++] = r2 * t(i, j);
  }
}

struct BlockWork {
  Matrix F0;
  std::vector<Matrix> Fi;   // only the active ones
  std::vector<int> active;  // variable index per entry of Fi
  int side = 0;
};

struct EvalState {
  bool feasible = false;
  double barrier = 0.0;  // sum of weighted block barriers + nonneg barrier
  std::vector<Eigen::LLT<Matrix>> llts;
  std::vector<double> logdets;
};

class Engine {
 public:
  Engine(const SdpProblem& p, const SolverOptions& opts) : p_(p), opts_(opts), d_(p.num_vars) {
    blocks_.reserve(p.blocks.size());
    scale_ = 1.0;
    for (const auto& b : p.blocks) {
      BlockWork w;
      w.side = static_cast<int>(b.F0.rows());
      w.F0 = 0.5 * (b.F0 + b.F0.transpose());
      scale_ = std::max(scale_, w.F0.cwiseAbs().maxCoeff());
      for (int i = 0; i < d_; ++i) {
        if (b.Fi[i].size() == 0 || b.Fi[i].isZero(0.0)) continue;
        w.active.push_back(i);
        w.Fi.push_back(0.5 * (b.Fi[i] + b.Fi[i].transpose()));
      }
      blocks_.push_back(std::move(w));
    }
    nu_ = static_cast<double>(p.nonneg.size());
    for (const auto& b : blocks_) nu_ += b.side;
  }

  double scale() const { return scale_; }
  double nu() const { return nu_; }

  // Exact worst eigenvalue over the original blocks (and nonneg bounds).
  double worst_eig(const Vector& x) const {
    double worst = -kInf;
    for (const auto& b : blocks_) {
      Matrix f = b.F0;
      for (size_t k = 0; k < b.active.size(); ++k) f += x(b.active[k]) * b.Fi[k];
      Eigen::SelfAdjointEigenSolver<Matrix> es(f, Eigen::EigenvaluesOnly);
      worst = std::max(worst, es.eigenvalues().maxCoeff());
    }
    for (int i : p_.nonneg) worst = std::max(worst, -x(i));
    return worst;
  }

  // Evaluate barrier at augmented point (x, t); t shifts every block by t*I
  // and every nonneg bound to x_i + t >= 0. Pass t = 0 in phase 2.
  EvalState eval(const Vector& x, double t, bool phase1, const std::vector<double>& w) const {
    EvalState st;
    st.llts.reserve(blocks_.size());
    st.logdets.reserve(blocks_.size());
    double barrier = 0.0;
    for (size_t b = 0; b < blocks_.size(); ++b) {
      const auto& bw = blocks_[b];
      Matrix s = -bw.F0;
      for (size_t k = 0; k < bw.active.size(); ++k) s -= x(bw.active[k]) * bw.Fi[k];
      if (phase1) s += t * Matrix::Identity(bw.side, bw.side);
      st.llts.emplace_back(s);
      if (st.llts.back().info() != Eigen::Success) return st;
      double ld = 0.0;
      const auto& l = st.llts.back().matrixLLT();
      for (int i = 0; i < bw.side; ++i) {
        const double piv = l(i, i);
        if (!(piv > 0.0)) return st;
        ld += std::log(piv);
      }
      ld *= 2.0;
      st.logdets.push_back(ld);
      barrier -= w[b] * ld;
    }
    for (int i : p_.nonneg) {
      const double v = x(i) + (phase1 ? t : 0.0);
      if (!(v > 0.0)) return st;
      barrier -= std::log(v);
    }
    if (!std::isfinite(barrier)) return st;
    st.feasible = true;
    st.barrier = barrier;
    return st;
  }

  // Gradient and Hessian of the weighted barrier at (x, t). Output dimension
  // is d (+1 for t in phase 1, appended last). Each Hessian entry is
  // computed independently, so the OpenMP path is bit-identical to the
  // serial one.
  void assemble(const Vector& x, double t, bool phase1, const std::vector<double>& w,
                const EvalState& st, Vector& g, Matrix& h) const {
    const int dim = d_ + (phase1 ? 1 : 0);
    g = Vector::Zero(dim);
    h = Matrix::Zero(dim, dim);
    for (size_t b = 0; b < blocks_.size(); ++b) {
      const auto& bw = blocks_[b];
      const int na = static_cast<int>(bw.active.size()) + (phase1 ? 1 : 0);
      if (na == 0) continue;
      const int svec_dim = bw.side * (bw.side + 1) / 2;
      RowMat rows(na, svec_dim);
      Vector traces(na);
      const auto& llt = st.llts[b];
      parallel_for(na, opts_.exec, [&](std::int64_t k) {
        Matrix f;
        if (phase1 && k == na - 1)
          f = -Matrix::Identity(bw.side, bw.side);
        else
          f = bw.Fi[k];
        // T = L^{-1} F L^{-T}
        Matrix a = llt.matrixL().solve(f);
        Matrix tt = llt.matrixL().solve(a.transpose());
        tt = 0.5 * (tt + tt.transpose());
        svec_into(tt, rows.row(k).data());
        traces(k) = tt.trace();
      });
      const double wb = w[b];
      for (int k = 0; k < na; ++k) {
        const int vi = (phase1 && k == na - 1) ? dim - 1 : bw.active[k];
        g(vi) += wb * traces(k);
      }
      // lower triangle of the per-block Gram, one independent dot per entry
      const std::int64_t npairs = static_cast<std::int64_t>(na) * (na + 1) / 2;
      Matrix hb(na, na);
      parallel_for(npairs, opts_.exec, [&](std::int64_t idx) {
        // map idx -> (i, j), j <= i
        const std::int64_t i = static_cast<std::int64_t>((std::sqrt(8.0 * idx + 1.0) - 1.0) / 2.0);
        std::int64_t ii = i;
        while (ii * (ii + 1) / 2 > idx) --ii;
        while ((ii + 1) * (ii + 2) / 2 <= idx) ++ii;
        const std::int64_t j = idx - ii * (ii + 1) / 2;
        hb(ii, j) = rows.row(ii).dot(rows.row(j));
      });
      for (int i = 0; i < na; ++i) {
        const int vi = (phase1 && i == na - 1) ? dim - 1 : bw.active[i];
        for (int j = 0; j <= i; ++j) {
          const int vj = (phase1 && j == na - 1) ? dim - 1 : bw.active[j];
          const double v = wb * hb(i, j);
          h(vi, vj) += v;
          if (vi != vj) h(vj, vi) += v;
        }
      }
    }
    for (int i : p_.nonneg) {
      const double v = x(i) + (phase1 ? t : 0.0);
      const double inv = 1.0 / v;
      g(i) -= inv;
      h(i, i) += inv * inv;
      if (phase1) {
        g(dim - 1) -= inv;
        h(i, dim - 1) += inv * inv;
        h(dim - 1, i) += inv * inv;
        h(dim - 1, dim - 1) += inv * inv;
      }
    }
  }

  const SdpProblem& p_;
  SolverOptions opts_;
  std::vector<BlockWork> blocks_;
  int d_;
  double scale_ = 1.0;
  double nu_ = 0.0;
};

struct PathResult {
  Vector x;        // augmented point (includes t in phase 1)
  bool converged = false;
  bool early_stop = false;
  bool cap_hit = false;
  bool breakdown = false;
};

// Follow the central path of: minimize eta * (c'z + logdet_weight * -logdet S_B)
// over the barrier of all blocks. `z` is the augmented variable. The
// early-stop predicate is checked after every Newton step; the stage
// predicate after each re-centering, with the current duality-gap bound.
template <typename StopFn, typename StageFn>
PathResult follow_path(const Engine& eng, const SolverOptions& opts, bool phase1,
                       const Vector& c, int logdet_obj_block, Vector z0, double obj_scale_hint,
                       int* newton_budget, const StopFn& early_stop, const StageFn& stage_stop) {
  PathResult res;
  res.x = std::move(z0);
  const int dim = static_cast<int>(res.x.size());
  const int d = phase1 ? dim - 1 : dim;

  auto weights = [&](double eta) {
    std::vector<double> w(eng.p_.blocks.size(), 1.0);
    if (!phase1 && logdet_obj_block >= 0) w[logdet_obj_block] = 1.0 + eta;
    return w;
  };
  double eta = std::max(1.0, eng.nu() / std::max(1.0, obj_scale_hint));
  Vector x = res.x.head(d);
  double t = phase1 ? res.x(dim - 1) : 0.0;
  std::vector<double> w = weights(eta);
  EvalState st = eng.eval(x, t, phase1, w);
  if (!st.feasible) {
    res.breakdown = true;
    return res;
  }

  const int max_inner = 60;
  while (true) {
    // loose re-centering mid-path; tighter near the end of the path
    const double inner_tol =
        (eng.nu() / eta <= 100.0 * opts.gap_tol * std::max(1.0, std::abs(c.dot(res.x)) + 1.0))
            ? 1e-7
            : 1e-3;
    double prev_dec2 = kInf;
    double last_dec2 = kInf;
    for (int inner = 0; inner < max_inner; ++inner) {
      if (*newton_budget <= 0) {
        res.cap_hit = true;
        return res;
      }
      Vector g;
      Matrix h;
      eng.assemble(x, t, phase1, w, st, g, h);
      // The logdet objective is already folded into the block weights; only
      // the linear objective part is added here.
      Vector gpsi = g + eta * c;
      // Jacobi-scaled Newton solve: the bound barriers put curvatures of
      // wildly different magnitude on the diagonal, and solving the raw
      // system loses the descent property to roundoff.
      Vector dscale(dim);
      for (int i = 0; i < dim; ++i) dscale(i) = std::sqrt(std::max(h(i, i), 1e-12));
      Matrix hs = h.array() / (dscale * dscale.transpose()).array();
      Vector gs = gpsi.array() / dscale.array();
      double reg = 1e-12 * std::max(1.0, hs.trace() / dim);
      Vector step;
      for (int attempt = 0;; ++attempt) {
        Matrix hr = hs + reg * Matrix::Identity(dim, dim);
        Eigen::LDLT<Matrix> ldlt(hr);
        step = (-ldlt.solve(gs).array() / dscale.array()).matrix();
        if (ldlt.info() == Eigen::Success && step.allFinite()) break;
        reg *= 1e4;
        if (attempt >= 3) {
          res.breakdown = true;
          return res;
        }
      }
      --(*newton_budget);
      const double descent = gpsi.dot(step);
      const double decrement2 = std::max(0.0, -descent);
      last_dec2 = decrement2;
      if (decrement2 / 2.0 <= inner_tol) break;
      // numerical floor: no further progress is coming
      if (decrement2 >= 0.9 * prev_dec2 && decrement2 <= 1e-4) break;
      prev_dec2 = decrement2;

      const double psi_base = st.barrier + eta * c.dot(res.x);
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        Vector z_try = res.x + alpha * step;
        Vector x_try = z_try.head(d);
        const double t_try = phase1 ? z_try(dim - 1) : 0.0;
        EvalState st_try = eng.eval(x_try, t_try, phase1, w);
        if (st_try.feasible) {
          const double psi_try = st_try.barrier + eta * c.dot(z_try);
          if (psi_try <= psi_base + 0.25 * alpha * descent) {
            res.x = z_try;
            x = x_try;
            t = t_try;
            st = std::move(st_try);
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (opts.verbose)
        std::cerr << "conic: eta=" << eta << " psi=" << st.barrier + eta * c.dot(res.x)
                  << " dec2=" << decrement2 << " t=" << t
                  << " budget=" << *newton_budget << (accepted ? "" : " STALL") << "\n";
      if (!accepted) break;  // stalled; treat stage as converged
      if (early_stop(x, t)) {
        res.early_stop = true;
        return res;
      }
    }
    const bool centered = last_dec2 <= 1e-3;
    if (centered && stage_stop(x, t, eng.nu() / eta)) {
      res.early_stop = true;
      return res;
    }
    const double fcur = std::abs(c.dot(res.x)) +
                        ((!phase1 && logdet_obj_block >= 0) ? std::abs(st.logdets[logdet_obj_block]) : 0.0);
    if (eng.nu() / eta <= opts.gap_tol * std::max(1.0, fcur)) {
      res.converged = true;
      return res;
    }
    eta *= opts.mu_factor;
    w = weights(eta);
    st = eng.eval(x, t, phase1, w);
    if (!st.feasible) {
      res.breakdown = true;
      return res;
    }
  }
}

}  // namespace

void SdpProblem::validate() const {
  if (num_vars < 0) throw MalformedProblem("num_vars < 0");
  if (objective == SdpObjectiveKind::MinLinear && min_linear_cost.size() != num_vars)
    throw MalformedProblem("MinLinear cost length mismatch");
  if (objective == SdpObjectiveKind::MaxLogDetBlock &&
      (logdet_block < 0 || logdet_block >= static_cast<int>(blocks.size())))
    throw MalformedProblem("logdet block index out of range");
  for (int i : nonneg)
    if (i < 0 || i >= num_vars) throw MalformedProblem("nonneg index out of range");
  for (const auto& b : blocks) {
    if (b.F0.rows() != b.F0.cols() || b.F0.rows() < 1)
      throw MalformedProblem("block F0 must be square and nonempty");
    if (static_cast<int>(b.Fi.size()) != num_vars)
      throw MalformedProblem("block Fi count must equal num_vars");
    for (const auto& f : b.Fi)
      if (f.size() != 0 && (f.rows() != b.F0.rows() || f.cols() != b.F0.cols()))
        throw MalformedProblem("block Fi dimension mismatch");
    if (!b.F0.allFinite()) throw MalformedProblem("block F0 has non-finite entries");
  }
}

SdpSolution solve(const SdpProblem& problem, const SolverOptions& opts) {
  problem.validate();
  Engine eng(problem, opts);
  const int d = problem.num_vars;

  SdpSolution sol;
  sol.x = Vector::Zero(d);
  if (opts.x0 && opts.x0->size() == d) sol.x = *opts.x0;

  int budget = opts.max_newton_iters;
  const double feas_stop = -std::max(1e3 * opts.feas_tol, 1e-8 * eng.scale());
  const double p2_margin = -std::max(1e2 * opts.feas_tol, 1e-9 * eng.scale());

  double w0 = eng.worst_eig(sol.x);
  const bool want_opt = problem.objective != SdpObjectiveKind::Feasibility;
  const double start_margin = want_opt ? p2_margin : feas_stop;

  if (w0 > start_margin) {
    // phase 1: minimize t with blocks shifted by t*I
    Vector z0(d + 1);
    z0.head(d) = sol.x;
    z0(d) = w0 + std::max(1.0, 0.1 * std::abs(w0));
    Vector c = Vector::Zero(d + 1);
    c(d) = 1.0;
    bool infeasible_certified = false;
    auto stop = [&](const Vector& x, double) { return eng.worst_eig(x) <= start_margin; };
    // once the duality-gap bound proves min_t t > feas_tol, stop searching
    auto stage = [&](const Vector&, double t, double gap) {
      if (t - 2.0 * gap > opts.feas_tol) {
        infeasible_certified = true;
        return true;
      }
      return false;
    };
    PathResult pr = follow_path(eng, opts, /*phase1=*/true, c, -1, z0, std::abs(z0(d)), &budget,
                                stop, stage);
    sol.x = pr.x.head(d);
    sol.iterations = opts.max_newton_iters - budget;
    sol.worst_eig = eng.worst_eig(sol.x);
    if (infeasible_certified || (pr.converged && sol.worst_eig > opts.feas_tol)) {
      sol.status = SdpStatus::Infeasible;
      sol.infeasibility_margin = sol.worst_eig;
      return sol;
    }
    if (pr.breakdown || pr.cap_hit) {
      if (sol.worst_eig <= opts.feas_tol && !want_opt) {
        sol.status = SdpStatus::Feasible;
        return sol;
      }
      sol.status = SdpStatus::NumericalFailure;
      return sol;
    }
  } else {
    sol.worst_eig = w0;
  }

  if (!want_opt) {
    sol.worst_eig = eng.worst_eig(sol.x);
    sol.status = sol.worst_eig <= opts.feas_tol ? SdpStatus::Feasible : SdpStatus::NumericalFailure;
    return sol;
  }

  // phase 2
  sol.worst_eig = eng.worst_eig(sol.x);
  if (sol.worst_eig >= 0.0) {
    // marginally feasible at best; no interior to optimize over
    sol.status = sol.worst_eig <= opts.feas_tol ? SdpStatus::Feasible : SdpStatus::NumericalFailure;
    return sol;
  }
  Vector c = Vector::Zero(d);
  int logdet_block = -1;
  if (problem.objective == SdpObjectiveKind::MinLinear) c = problem.min_linear_cost;
  if (problem.objective == SdpObjectiveKind::MaxLogDetBlock) logdet_block = problem.logdet_block;

  auto no_stop = [](const Vector&, double) { return false; };
  auto no_stage = [](const Vector&, double, double) { return false; };
  std::vector<double> w1(problem.blocks.size(), 1.0);
  EvalState st0 = eng.eval(sol.x, 0.0, false, w1);
  double hint = std::abs(c.dot(sol.x));
  if (logdet_block >= 0 && st0.feasible) hint = std::max(hint, std::abs(st0.logdets[logdet_block]));
  PathResult pr = follow_path(eng, opts, /*phase1=*/false, c, logdet_block, sol.x, hint, &budget,
                              no_stop, no_stage);
  sol.x = pr.x;
  sol.iterations = opts.max_newton_iters - budget;
  sol.worst_eig = eng.worst_eig(sol.x);
  if (pr.breakdown || pr.cap_hit || !pr.converged) {
    sol.status = SdpStatus::NumericalFailure;
    if (sol.worst_eig <= opts.feas_tol) sol.status = SdpStatus::Feasible;
  } else {
    sol.status = sol.worst_eig <= opts.feas_tol ? SdpStatus::Optimal : SdpStatus::NumericalFailure;
  }
  if (problem.objective == SdpObjectiveKind::MinLinear) {
    sol.objective_value = problem.min_linear_cost.dot(sol.x);
  } else if (logdet_block >= 0) {
    EvalState st = eng.eval(sol.x, 0.0, false, w1);
    sol.objective_value = st.feasible ? st.logdets[logdet_block] : -kInf;
  }
  return sol;
}

VerifyReport verify(const SdpProblem& problem, const Vector& x) {
  problem.validate();
  if (x.size() != problem.num_vars) throw MalformedProblem("verify: x length mismatch");
  VerifyReport rep;
  rep.worst = -kInf;
  for (const auto& b : problem.blocks) {
    Matrix f = 0.5 * (b.F0 + b.F0.transpose());
    for (int i = 0; i < problem.num_vars; ++i)
      if (b.Fi[i].size() != 0) f += x(i) * 0.5 * (b.Fi[i] + b.Fi[i].transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(f, Eigen::EigenvaluesOnly);
    rep.block_max_eig.push_back(es.eigenvalues().maxCoeff());
    rep.worst = std::max(rep.worst, rep.block_max_eig.back());
  }
  for (int i : problem.nonneg) {
    rep.block_max_eig.push_back(-x(i));
    rep.worst = std::max(rep.worst, -x(i));
  }
  return rep;
}

void dump_problem(const SdpProblem& problem, std::ostream& os) {
  os.precision(17);
  os << "sdp " << problem.num_vars << " " << problem.blocks.size() << "\n";
  os << "objective ";
  switch (problem.objective) {
    case SdpObjectiveKind::Feasibility:
      os << "feasibility";
      break;
    case SdpObjectiveKind::MinLinear:
      os << "minlinear";
      for (int i = 0; i < problem.num_vars; ++i) os << " " << problem.min_linear_cost(i);
      break;
    case SdpObjectiveKind::MaxLogDetBlock:
      os << "maxlogdet " << problem.logdet_block;
      break;
  }
  os << "\n";
  os << "nonneg " << problem.nonneg.size();
  for (int i : problem.nonneg) os << " " << i;
  os << "\n";
  for (const auto& b : problem.blocks) {
    const int s = static_cast<int>(b.F0.rows());
    os << "block " << s << "\n";
    auto put = [&](const Matrix& m) {
      for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) os << (j ? " " : "") << (m.size() ? m(i, j) : 0.0);
        os << "\n";
      }
    };
    put(b.F0);
    for (const auto& f : b.Fi) put(f);
  }
}

SdpProblem load_problem(std::istream& is) {
  SdpProblem p;
  std::string tok;
  if (!(is >> tok) || tok != "sdp") throw ParseError("dump: expected 'sdp'");
  size_t nblocks = 0;
  if (!(is >> p.num_vars >> nblocks)) throw ParseError("dump: bad header");
  if (!(is >> tok) || tok != "objective") throw ParseError("dump: expected 'objective'");
  std::string kind;
  is >> kind;
  if (kind == "feasibility") {
    p.objective = SdpObjectiveKind::Feasibility;
  } else if (kind == "minlinear") {
    p.objective = SdpObjectiveKind::MinLinear;
    p.min_linear_cost.resize(p.num_vars);
    for (int i = 0; i < p.num_vars; ++i)
      if (!(is >> p.min_linear_cost(i))) throw ParseError("dump: bad cost");
  } else if (kind == "maxlogdet") {
    p.objective = SdpObjectiveKind::MaxLogDetBlock;
    if (!(is >> p.logdet_block)) throw ParseError("dump: bad logdet index");
  } else {
    throw ParseError("dump: unknown objective '" + kind + "'");
  }
  if (!(is >> tok) || tok != "nonneg") throw ParseError("dump: expected 'nonneg'");
  size_t k = 0;
  is >> k;
  p.nonneg.resize(k);
  for (auto& i : p.nonneg)
    if (!(is >> i)) throw ParseError("dump: bad nonneg index");
  for (size_t b = 0; b < nblocks; ++b) {
    if (!(is >> tok) || tok != "block") throw ParseError("dump: expected 'block'");
    int s = 0;
    if (!(is >> s) || s < 1) throw ParseError("dump: bad block size");
    auto get = [&](Matrix& m) {
      m.resize(s, s);
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
          if (!(is >> m(i, j))) throw ParseError("dump: bad matrix entry");
    };
    LmiBlock blk;
    get(blk.F0);
    blk.Fi.resize(p.num_vars);
    for (int i = 0; i < p.num_vars; ++i) get(blk.Fi[i]);
    p.blocks.push_back(std::move(blk));
  }
  p.validate();
  return p;
}

const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "Optimal";
    case SdpStatus::Feasible: return "Feasible";
    case SdpStatus::Infeasible: return "Infeasible";
    case SdpStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

}  // namespace ddc
