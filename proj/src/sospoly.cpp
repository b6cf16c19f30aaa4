#include "ddc/sospoly.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddc/petersen.hpp"
#include "ddc/rng.hpp"
#include "json.hpp"

namespace ddc {

AffinePoly AffinePoly::fixed(const Polynomial& p) {
  AffinePoly a(p.num_vars());
  a.c0 = p;
  return a;
}

void AffinePoly::add(const AffinePoly& o) {
  c0 += o.c0;
  for (const auto& [v, m] : o.lin) {
    bool merged = false;
    for (auto& [w, mm] : lin) {
      if (w == v) {
        mm += m;
        merged = true;
        break;
      }
    }
    if (!merged) lin.emplace_back(v, m);
  }
}

void AffinePoly::add_fixed(const Polynomial& p) { c0 += p; }

AffinePoly AffinePoly::times(const Polynomial& f) const {
  AffinePoly r(num_x());
  r.c0 = c0 * f;
  for (const auto& [v, m] : lin) {
    Polynomial prod = m * f;
    if (!prod.is_zero()) r.lin.emplace_back(v, prod);
  }
  return r;
}

AffinePoly AffinePoly::scaled(double s) const {
  AffinePoly r(num_x());
  r.c0 = c0 * s;
  if (s != 0.0)
    for (const auto& [v, m] : lin) r.lin.emplace_back(v, m * s);
  return r;
}

Polynomial AffinePoly::evaluate(const Vector& decision_values) const {
  Polynomial p = c0;
  for (const auto& [v, m] : lin) p += m * decision_values(v);
  return p;
}

MatrixPolynomial GramCertificate::reproduce() const {
  const int rows = target.rows();
  const int nx = target.num_vars();
  std::vector<int> off(rows + 1, 0);
  for (int k = 0; k < rows; ++k) off[k + 1] = off[k] + row_bases[k].size();
  MatrixPolynomial out(rows, rows, nx);
  for (int k = 0; k < rows; ++k) {
    for (int l = k; l < rows; ++l) {
      Polynomial e(nx);
      for (int a = 0; a < row_bases[k].size(); ++a) {
        for (int b = 0; b < row_bases[l].size(); ++b) {
          const double g = G(off[k] + a, off[l] + b);
          if (g == 0.0) continue;
          MultiIndex m(nx);
          for (int i = 0; i < nx; ++i) m[i] = row_bases[k][a][i] + row_bases[l][b][i];
          e.add_term(m, g);
        }
      }
      out.at(k, l) = e;
      if (l != k) out.at(l, k) = e;
    }
  }
  return out;
}

double GramCertificate::reproduction_error() const {
  const MatrixPolynomial got = reproduce();
  double worst = 0.0;
  for (int k = 0; k < target.rows(); ++k) {
    for (int l = k; l < target.rows(); ++l) {
      Polynomial diff = got.at(k, l) - target.at(k, l);
      for (const auto& [m, c] : diff.terms()) worst = std::max(worst, std::abs(c));
    }
  }
  return worst;
}

namespace {

// degree window of everything an affine polynomial can produce; (0, -1) for
// the identically-zero case
std::pair<int, int> affine_window(const AffinePoly& a) {
  int lo = std::numeric_limits<int>::max(), hi = -1;
  auto upd = [&](const Polynomial& p) {
    if (p.is_zero()) return;
    lo = std::min(lo, p.min_degree());
    hi = std::max(hi, p.degree());
  };
  upd(a.c0);
  for (const auto& [v, m] : a.lin) upd(m);
  if (hi < 0) return {0, -1};
  return {lo, hi};
}

MonomialBasis half_basis(int nx, const std::pair<int, int>& window) {
  if (window.second < 0) return MonomialBasis(std::vector<MultiIndex>{});
  const int lo = (window.first + 1) / 2;
  const int hi = window.second / 2;
  if (hi < lo) return MonomialBasis(std::vector<MultiIndex>{});
  return MonomialBasis::degree_range(nx, lo, hi);
}

// product with at most one affine side
AffinePoly product(const AffinePoly& a, const AffinePoly& b) {
  if (!a.lin.empty() && !b.lin.empty())
    throw BilinearityError("sos program: both factors of a product are free");
  if (b.lin.empty()) return a.times(b.c0);
  return b.times(a.c0);
}

class ProgramBuilder {
 public:
  explicit ProgramBuilder(int nx) : nx_(nx) {}

  int register_decision(const std::string& name, const MonomialBasis& support) {
    decisions_.push_back({name, support, next_var_});
    next_var_ += support.size();
    return decisions_.back().offset;
  }

  AffinePoly decision(const std::string& name) const {
    for (const auto& d : decisions_) {
      if (d.name != name) continue;
      AffinePoly a(nx_);
      for (int j = 0; j < d.support.size(); ++j)
        a.lin.emplace_back(d.offset + j, Polynomial::monomial(nx_, d.support[j]));
      return a;
    }
    throw DomainError("sos program: unknown decision polynomial '" + name + "'");
  }

  void add_sos(const std::string& tag, int rows, std::vector<MonomialBasis> bases,
               std::vector<AffinePoly> entries) {
    SosProgram::Constraint c;
    c.tag = tag;
    c.rows = rows;
    c.bases = std::move(bases);
    c.entries = std::move(entries);
    constraints_.push_back(std::move(c));
  }

  void add_sos_scalar(const std::string& tag, const AffinePoly& entry,
                      const MonomialBasis& basis) {
    add_sos(tag, 1, {basis}, {entry});
  }

  SosProgram build() const;

 private:
  int nx_;
  int next_var_ = 0;
  std::vector<SosProgram::DecisionSlot> decisions_;
  std::vector<SosProgram::Constraint> constraints_;
};

SosProgram ProgramBuilder::build() const {
  SosProgram prog;
  prog.decisions = decisions_;
  prog.constraints = constraints_;
  prog.num_x = nx_;
  prog.num_coeff_vars = next_var_;

  int total_vars = next_var_;
  for (auto& con : prog.constraints) {
    int side = 0;
    for (const auto& b : con.bases) side += b.size();
    con.side = side;
    con.gram_offset = total_vars;
    total_vars += side * (side + 1) / 2;
  }

  // coefficient-matching equalities: gram expansion minus the affine target
  struct Row {
    std::map<int, double> coeffs;
    double rhs = 0.0;
  };
  std::vector<Row> rows;
  for (const auto& con : prog.constraints) {
    std::vector<int> off(con.rows + 1, 0);
    for (int k = 0; k < con.rows; ++k) off[k + 1] = off[k] + con.bases[k].size();
    for (int k = 0; k < con.rows; ++k) {
      for (int l = k; l < con.rows; ++l) {
        std::map<MultiIndex, Row, GradedLexLess> acc;
        for (int a = 0; a < con.bases[k].size(); ++a) {
          for (int b = 0; b < con.bases[l].size(); ++b) {
            MultiIndex m(nx_);
            for (int i = 0; i < nx_; ++i) m[i] = con.bases[k][a][i] + con.bases[l][b][i];
            int u = off[k] + a, v = off[l] + b;
            if (u > v) std::swap(u, v);
            const int var = con.gram_offset + v * (v + 1) / 2 + u;
            acc[m].coeffs[var] += 1.0;
          }
        }
        const AffinePoly& e = con.entries[k * con.rows + l];
        for (const auto& [m, c] : e.c0.terms()) acc[m].rhs += c;
        for (const auto& [var, mult] : e.lin)
          for (const auto& [m, c] : mult.terms()) acc[m].coeffs[var] -= c;
        for (auto& [m, row] : acc) rows.push_back(std::move(row));
      }
    }
  }

  const int nrows = static_cast<int>(rows.size());
  Matrix a = Matrix::Zero(nrows, total_vars);
  Vector b = Vector::Zero(nrows);
  for (int r = 0; r < nrows; ++r) {
    for (const auto& [var, c] : rows[r].coeffs) a(r, var) = c;
    b(r) = rows[r].rhs;
  }

  // one rank-revealing QR of A' yields the minimum-norm particular solution
  // and an orthonormal null-space basis
  Eigen::ColPivHouseholderQR<Matrix> qr(a.transpose());
  const int rank = static_cast<int>(qr.rank());
  Vector pb = qr.colsPermutation().transpose() * b;
  Vector w = Vector::Zero(total_vars);
  if (rank > 0) {
    w.head(rank) = qr.matrixR()
                       .topLeftCorner(rank, rank)
                       .template triangularView<Eigen::Upper>()
                       .transpose()
                       .solve(pb.head(rank));
  }
  prog.particular = qr.householderQ() * w;
  const double resid =
      nrows ? (a * prog.particular - b).cwiseAbs().maxCoeff() : 0.0;
  prog.build_residual = resid;
  if (resid > 1e-7 * std::max(1.0, b.cwiseAbs().maxCoeff())) {
    prog.inconsistent = true;
    return prog;
  }
  Matrix tail = Matrix::Zero(total_vars, total_vars - rank);
  for (int j = 0; j < total_vars - rank; ++j) tail(rank + j, j) = 1.0;
  prog.null_basis = qr.householderQ() * tail;

  // one LMI block -G <= 0 per SOS constraint
  const int d = total_vars - rank;
  prog.problem.num_vars = d;
  prog.problem.objective = SdpObjectiveKind::Feasibility;
  for (const auto& con : prog.constraints) {
    if (con.side == 0) continue;
    auto unsvec = [&](const auto& vec, double sign) {
      Matrix g = Matrix::Zero(con.side, con.side);
      int idx = 0;
      for (int v = 0; v < con.side; ++v)
        for (int u = 0; u <= v; ++u) {
          g(u, v) = g(v, u) = sign * vec(con.gram_offset + idx);
          ++idx;
        }
      return g;
    };
    LmiBlock blk;
    blk.F0 = unsvec(prog.particular, -1.0);
    blk.Fi.reserve(d);
    for (int i = 0; i < d; ++i) blk.Fi.push_back(unsvec(prog.null_basis.col(i), -1.0));
    prog.problem.blocks.push_back(std::move(blk));
  }
  return prog;
}

}  // namespace

SosProgram::Decoded SosProgram::decode(const Vector& x) const {
  if (x.size() != problem.num_vars) throw DimensionError("sos decode: solution length mismatch");
  const Vector full = particular + null_basis * x;
  Decoded out;
  for (const auto& slot : decisions) {
    Polynomial p(num_x);
    for (int j = 0; j < slot.support.size(); ++j) p.add_term(slot.support[j], full(slot.offset + j));
    out.polys[slot.name] = p;
  }
  const Vector coeffs = full.head(num_coeff_vars);
  for (const auto& con : constraints) {
    GramCertificate cert;
    cert.row_bases = con.bases;
    Matrix g = Matrix::Zero(con.side, con.side);
    int idx = 0;
    for (int v = 0; v < con.side; ++v)
      for (int u = 0; u <= v; ++u) {
        g(u, v) = g(v, u) = full(con.gram_offset + idx);
        ++idx;
      }
    cert.G = SymMatrix(con.side ? g : Matrix::Zero(1, 1));
    cert.target = MatrixPolynomial(con.rows, con.rows, num_x);
    for (int k = 0; k < con.rows; ++k)
      for (int l = k; l < con.rows; ++l) {
        Polynomial e = con.entries[k * con.rows + l].evaluate(coeffs);
        cert.target.at(k, l) = e;
        if (l != k) cert.target.at(l, k) = e;
      }
    if (con.side) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(cert.G.mat(), Eigen::EigenvaluesOnly);
      cert.min_eig = es.eigenvalues().minCoeff();
    }
    out.grams.push_back(std::move(cert));
  }
  return out;
}

SosProgramSolution solve_program(const SosProgram& prog, const SolverOptions& opts) {
  SosProgramSolution out;
  if (prog.inconsistent) {
    out.status = SdpStatus::Infeasible;
    return out;
  }
  SdpSolution sol = solve(prog.problem, opts);
  out.status = sol.status;
  out.iterations = sol.iterations;
  if (sol.status == SdpStatus::Feasible || sol.status == SdpStatus::Optimal)
    out.decoded = prog.decode(sol.x);
  return out;
}

namespace {

SosOutcome decompose_impl(const MatrixPolynomial& target, const MonomialBasis& basis,
                          const SolverOptions& opts) {
  if (target.degree() > 2 * basis.max_degree())
    throw BasisTooSmall("sos_decompose: target degree " + std::to_string(target.degree()) +
                        " exceeds twice the basis degree");
  ProgramBuilder builder(target.num_vars());
  std::vector<MonomialBasis> bases(target.rows(), basis);
  std::vector<AffinePoly> entries;
  entries.reserve(static_cast<size_t>(target.rows()) * target.rows());
  for (int k = 0; k < target.rows(); ++k)
    for (int l = 0; l < target.rows(); ++l)
      entries.push_back(AffinePoly::fixed(target.at(k, l)));
  builder.add_sos("target", target.rows(), bases, entries);
  SosProgram prog = builder.build();
  SosProgramSolution sol = solve_program(prog, opts);
  SosOutcome out;
  out.status = sol.status;
  if (sol.decoded) out.certificate = sol.decoded->grams[0];
  if (sol.status == SdpStatus::NumericalFailure)
    throw NumericalFailure("sos_decompose: solver failed");
  return out;
}

}  // namespace

SosOutcome sos_decompose(const Polynomial& p, const MonomialBasis& basis,
                         const SolverOptions& opts) {
  MatrixPolynomial mp(1, 1, p.num_vars());
  mp.at(0, 0) = p;
  return decompose_impl(mp, basis, opts);
}

SosOutcome sos_decompose(const MatrixPolynomial& p, const MonomialBasis& basis,
                         const SolverOptions& opts) {
  if (p.rows() != p.cols()) throw DimensionError("sos_decompose: matrix target must be square");
  return decompose_impl(p, basis, opts);
}

namespace {

void validate_degrees(const PolyDegrees& d) {
  auto chk = [](const DegreeWindow& w, int min_lo, const char* what) {
    if (w.lo < min_lo || w.hi < w.lo)
      throw DegreeMismatch(std::string("sos program: bad degree window for ") + what);
  };
  chk(d.V, 1, "V");
  chk(d.k, 1, "k");
  chk(d.lambda, 0, "lambda");
  chk(d.l2, 1, "l2");
  chk(d.s1, 0, "s1");
  chk(d.s2, 0, "s2");
}

Matrix inv_sqrt_of(const SymMatrix& a) {
  const EigDecomposition ed = sym_eig(a);
  Vector inv(a.dim());
  for (int i = 0; i < a.dim(); ++i) {
    if (ed.eigenvalues(i) <= 0.0)
      throw RankDeficient("sos program: uncertainty shape is not positive definite");
    inv(i) = 1.0 / std::sqrt(ed.eigenvalues(i));
  }
  return ed.basis * inv.asDiagonal() * ed.basis.transpose();
}

struct LocalTerms {
  Polynomial l0;
  double c = 0.0;
  bool active = false;
};

SosProgram build_program_impl(const MatrixEllipsoid& set, const PolyRegressors& reg,
                              const PolyDegrees& degrees, const Polynomial& l1,
                              double eps_lambda, const FixedSide& fixed, double eps_l2,
                              const LocalTerms& local) {
  validate_degrees(degrees);
  const int nx = reg.num_vars();
  const int n = set.n();
  const int q = set.p();
  const int m = reg.m();
  if (reg.N() + reg.M() != q)
    throw DimensionError("sos program: regressor widths do not match the uncertainty set");
  if (l1.num_vars() != nx) throw DimensionError("sos program: l1 variable count mismatch");
  if (eps_lambda <= 0) throw DomainError("sos program: eps_lambda must be positive");

  const bool v_fixed = std::holds_alternative<FixedV>(fixed);
  ProgramBuilder builder(nx);

  // decision polynomials (structural zeros at the origin come from the
  // minimum degrees)
  AffinePoly lambda_aff(nx);
  std::vector<AffinePoly> k_aff;
  std::vector<AffinePoly> grad_v(n, AffinePoly(nx));
  if (v_fixed) {
    const Polynomial& v = std::get<FixedV>(fixed).V;
    if (v.num_vars() != nx) throw DimensionError("sos program: fixed V variable count mismatch");
    for (int i = 0; i < m; ++i) {
      builder.register_decision("k" + std::to_string(i + 1),
                                MonomialBasis::degree_range(nx, degrees.k.lo, degrees.k.hi));
      k_aff.push_back(builder.decision("k" + std::to_string(i + 1)));
    }
    builder.register_decision("lambda",
                              MonomialBasis::degree_range(nx, degrees.lambda.lo, degrees.lambda.hi));
    lambda_aff = builder.decision("lambda");
    for (int j = 0; j < nx; ++j) grad_v[j] = AffinePoly::fixed(v.derivative(j));
  } else {
    const auto& kl = std::get<FixedKLambda>(fixed);
    if (static_cast<int>(kl.k.size()) != m)
      throw DimensionError("sos program: fixed controller has wrong input count");
    builder.register_decision("V", MonomialBasis::degree_range(nx, degrees.V.lo, degrees.V.hi));
    const auto& vslot = builder.decision("V");
    for (int j = 0; j < nx; ++j) {
      AffinePoly g(nx);
      for (const auto& [var, mono] : vslot.lin) {
        Polynomial d = mono.derivative(j);
        if (!d.is_zero()) g.lin.emplace_back(var, d);
      }
      grad_v[j] = g;
    }
    for (int i = 0; i < m; ++i) k_aff.push_back(AffinePoly::fixed(kl.k[i]));
    lambda_aff = AffinePoly::fixed(kl.lambda);
  }
  builder.register_decision("l2", MonomialBasis::degree_range(nx, degrees.l2.lo, degrees.l2.hi));
  AffinePoly l2_aff = builder.decision("l2");

  AffinePoly s2_aff(nx);
  if (local.active) {
    builder.register_decision("s2", MonomialBasis::degree_range(nx, degrees.s2.lo, degrees.s2.hi));
    s2_aff = builder.decision("s2");
  }

  // stacked regressor column [Z; W k]
  std::vector<AffinePoly> zwk(q, AffinePoly(nx));
  for (int i = 0; i < reg.N(); ++i) zwk[i].add_fixed(reg.Z[i]);
  for (int a = 0; a < reg.M(); ++a)
    for (int i = 0; i < m; ++i) {
      const Polynomial& w_ai = reg.W.at(a, i);
      if (w_ai.is_zero()) continue;
      zwk[reg.N() + a].add(k_aff[i].times(w_ai));
    }

  const Matrix a_inv_sqrt = inv_sqrt_of(set.bigA);
  const Matrix q_sqrt = psd_sqrt(set.shape).mat();

  // decrease matrix M, stored negated as the SOS target
  const int r = 1 + q + n;
  std::vector<AffinePoly> target(static_cast<size_t>(r) * r, AffinePoly(nx));
  auto at = [&](int k, int l) -> AffinePoly& { return target[static_cast<size_t>(k) * r + l]; };

  // (0,0): -(l2 + gradV' Zc' [Z; Wk]) [+ s2 (l0 - c) in the local variant]
  {
    AffinePoly e = l2_aff.scaled(-1.0);
    for (int t = 0; t < q; ++t) {
      Polynomial zct(nx);  // sum_j Zc(t, j) dV_j when V is fixed
      AffinePoly term(nx);
      if (v_fixed) {
        for (int j = 0; j < n; ++j)
          if (set.center(t, j) != 0.0) zct += grad_v[j].c0 * set.center(t, j);
        term = zwk[t].times(zct).scaled(-1.0);
      } else {
        // zwk is fixed here; gradV carries the decision variables
        AffinePoly sum(nx);
        for (int j = 0; j < n; ++j)
          if (set.center(t, j) != 0.0) sum.add(grad_v[j].scaled(set.center(t, j)));
        term = sum.times(zwk[t].c0).scaled(-1.0);
      }
      e.add(term);
    }
    if (local.active) {
      Polynomial shift = local.l0 - Polynomial::constant(nx, local.c);
      e.add(s2_aff.times(shift));
    }
    at(0, 0) = e;
  }
  // (0, 1+i): -(A^{-1/2} [Z; Wk])_i
  for (int i = 0; i < q; ++i) {
    AffinePoly e(nx);
    for (int t = 0; t < q; ++t)
      if (a_inv_sqrt(i, t) != 0.0) e.add(zwk[t].scaled(-a_inv_sqrt(i, t)));
    at(0, 1 + i) = e;
  }
  // (0, 1+q+i): -(lambda * Q^{1/2} gradV')_i
  for (int i = 0; i < n; ++i) {
    AffinePoly gq(nx);
    for (int j = 0; j < n; ++j)
      if (q_sqrt(i, j) != 0.0) gq.add(grad_v[j].scaled(q_sqrt(i, j)));
    at(0, 1 + q + i) = product(lambda_aff, gq).scaled(-1.0);
  }
  // diagonals: lambda and 4 lambda
  for (int i = 0; i < q; ++i) at(1 + i, 1 + i) = lambda_aff;
  for (int i = 0; i < n; ++i) at(1 + q + i, 1 + q + i) = lambda_aff.scaled(4.0);

  // row bases from the diagonal supports
  std::vector<MonomialBasis> bases;
  bases.push_back(half_basis(nx, affine_window(at(0, 0))));
  const MonomialBasis lam_basis = half_basis(nx, affine_window(lambda_aff));
  for (int i = 0; i < q + n; ++i) bases.push_back(lam_basis);
  builder.add_sos("decrease", r, bases, target);

  if (v_fixed) {
    // multiplier positivity: lambda - eps_lambda in S
    AffinePoly mult = lambda_aff;
    mult.add_fixed(Polynomial::constant(nx, -eps_lambda));
    builder.add_sos_scalar("multiplier", mult, half_basis(nx, affine_window(mult)));
  } else {
    // positivity and radial unboundedness: V - l1 [+ s1 (l0 - c)] in S
    AffinePoly pd = builder.decision("V");
    pd.add_fixed(l1 * -1.0);
    if (local.active) {
      builder.register_decision("s1", MonomialBasis::degree_range(nx, degrees.s1.lo, degrees.s1.hi));
      AffinePoly s1_aff = builder.decision("s1");
      pd.add(s1_aff.times(local.l0 - Polynomial::constant(nx, local.c)));
      builder.add_sos_scalar("s1", s1_aff, half_basis(nx, affine_window(s1_aff)));
    }
    builder.add_sos_scalar("positivity", pd, half_basis(nx, affine_window(pd)));
  }

  // l2 stays positive definite: l2 - eps_l2 |x|^2 in S
  {
    AffinePoly pos = l2_aff;
    Polynomial sq(nx);
    for (int j = 0; j < nx; ++j) {
      MultiIndex mi(nx, 0);
      mi[j] = 2;
      sq.add_term(mi, -eps_l2);
    }
    pos.add_fixed(sq);
    builder.add_sos_scalar("l2", pos, half_basis(nx, affine_window(pos)));
  }

  if (local.active)
    builder.add_sos_scalar("s2", s2_aff, half_basis(nx, affine_window(s2_aff)));

  return builder.build();
}

}  // namespace

SosProgram build_global_program(const MatrixEllipsoid& set, const PolyRegressors& reg,
                                const PolyDegrees& degrees, const Polynomial& l1,
                                double eps_lambda, const FixedSide& fixed, double eps_l2) {
  return build_program_impl(set, reg, degrees, l1, eps_lambda, fixed, eps_l2, {});
}

SosProgram build_local_program(const MatrixEllipsoid& set, const PolyRegressors& reg,
                               const PolyDegrees& degrees, const Polynomial& l0, double c,
                               const Polynomial& l1, double eps_lambda, const FixedSide& fixed,
                               double eps_l2) {
  if (c <= 0) throw DomainError("local program: c must be positive");
  if (l0.coeff(MultiIndex(l0.num_vars(), 0)) != 0.0)
    throw DomainError("local program: l0 must vanish at the origin");
  LocalTerms local{l0, c, true};
  return build_program_impl(set, reg, degrees, l1, eps_lambda, fixed, eps_l2, local);
}

AlternationResult alternate_synthesis(const MatrixEllipsoid& set, const PolyRegressors& reg,
                                      const AlternationConfig& config) {
  const int nx = reg.num_vars();
  if (config.v_init.is_zero() || config.v_init.num_vars() != nx)
    throw DimensionError("alternation: v_init must be a nonzero polynomial in the state");
  if (config.v_init.coeff(MultiIndex(nx, 0)) != 0.0)
    throw DomainError("alternation: v_init must vanish at the origin");

  AlternationResult res;
  std::ostringstream diag;
  Polynomial v_cur = config.v_init;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    // half-program 1: controller and multiplier with V fixed
    SosProgram pk = build_global_program(set, reg, config.degrees, config.l1, config.eps_lambda,
                                         FixedV{v_cur}, config.eps_l2);
    SosProgramSolution sk = solve_program(pk, config.solver);
    if (!sk.decoded) {
      diag << "round " << iter + 1 << ": controller step " << to_string(sk.status) << "\n";
      break;
    }
    std::vector<Polynomial> k;
    for (int i = 0;; ++i) {
      auto it = sk.decoded->polys.find("k" + std::to_string(i + 1));
      if (it == sk.decoded->polys.end()) break;
      k.push_back(it->second);
    }
    Polynomial lambda = sk.decoded->polys.at("lambda");
    GramCertificate mult_witness;
    for (size_t ci = 0; ci < pk.constraints.size(); ++ci)
      if (pk.constraints[ci].tag == "multiplier") mult_witness = sk.decoded->grams[ci];

    // half-program 2: V with controller and multiplier fixed
    SosProgram pv = build_global_program(set, reg, config.degrees, config.l1, config.eps_lambda,
                                         FixedKLambda{k, lambda}, config.eps_l2);
    SosProgramSolution sv = solve_program(pv, config.solver);
    if (!sv.decoded) {
      diag << "round " << iter + 1 << ": Lyapunov step " << to_string(sv.status) << "\n";
      break;
    }
    Polynomial v_new = sv.decoded->polys.at("V");

    PolyCertificate cert;
    cert.V = v_new;
    cert.k = k;
    cert.lambda = lambda;
    cert.l2 = sv.decoded->polys.at("l2");
    cert.l1 = config.l1;
    cert.eps_lambda = config.eps_lambda;
    cert.degrees = config.degrees;
    cert.gram_witnesses.clear();
    for (size_t ci = 0; ci < pv.constraints.size(); ++ci)
      cert.gram_witnesses.push_back(sv.decoded->grams[ci]);
    cert.gram_witnesses.push_back(mult_witness);
    res.certificate = cert;
    res.iterations = iter + 1;

    if (config.stop_on_certificate) break;
    const Polynomial dv = v_new - v_cur;
    double delta = 0.0, scale = 0.0;
    for (const auto& [mi, c] : dv.terms()) delta = std::max(delta, std::abs(c));
    for (const auto& [mi, c] : v_new.terms()) scale = std::max(scale, std::abs(c));
    v_cur = v_new;
    if (delta <= 1e-7 * std::max(1.0, scale)) break;  // fixed point
  }
  if (!res.certificate) {
    diag << "no complete certificate within " << config.max_iterations << " iterations";
  }
  res.diagnostics = diag.str();
  return res;
}

PolyVerifyReport verify_poly(const MatrixEllipsoid& set, const PolyCertificate& cert,
                             const PolyRegressors& reg, const GridSpec& grid, int model_samples,
                             std::uint64_t seed, ExecMode exec) {
  const int nx = reg.num_vars();
  const int n = set.n();
  const int q = set.p();
  if (grid.points < 1) throw DomainError("verify_poly: grid needs at least one point");

  // cartesian grid over [lo, hi]^nx
  std::int64_t total = 1;
  for (int i = 0; i < nx; ++i) total *= grid.points;
  if (total > 2'000'000) throw DomainError("verify_poly: grid too large");

  std::vector<ConsistentModel> models;
  if (model_samples > 0) {
    models = sample(set, (model_samples + 1) / 2, SampleMode::Boundary, seed);
    auto interior = sample(set, model_samples / 2 + 1, SampleMode::Interior, seed + 1);
    models.insert(models.end(), interior.begin(), interior.end());
  }
  models.push_back({set.center, Provenance::Center});

  const Matrix a_inv_sqrt = inv_sqrt_of(set.bigA);
  const Matrix q_sqrt = psd_sqrt(set.shape).mat();
  const auto grad = poly_grad(cert.V);

  std::vector<double> v_margin(total), lam_margin(total), dec_worst(total);
  parallel_for(total, exec, [&](std::int64_t idx) {
    Vector x(nx);
    std::int64_t rem = idx;
    for (int i = 0; i < nx; ++i) {
      const int step = static_cast<int>(rem % grid.points);
      rem /= grid.points;
      x(i) = grid.points == 1 ? grid.lo
                              : grid.lo + (grid.hi - grid.lo) * step / (grid.points - 1);
    }
    v_margin[idx] = cert.V.eval(x) - cert.l1.eval(x);
    lam_margin[idx] = cert.lambda.eval(x) - cert.eps_lambda;

    Vector zwk(q);
    zwk.head(reg.N()) = reg.eval_Z(x);
    Vector kx(reg.m());
    for (int i = 0; i < reg.m(); ++i) kx(i) = cert.k[i].eval(x);
    zwk.tail(reg.M()) = reg.eval_W(x) * kx;
    Vector gv(n);
    for (int j = 0; j < n; ++j) gv(j) = grad[j].eval(x);
    const double l2x = cert.l2.eval(x);

    double worst = -std::numeric_limits<double>::infinity();
    auto decrease_at = [&](const Matrix& z) {
      return gv.dot(z.transpose() * zwk) + l2x;
    };
    for (const auto& mdl : models) worst = std::max(worst, decrease_at(mdl.Z));
    // pointwise worst-case boundary models
    const Vector wvec = a_inv_sqrt * zwk;
    const Vector uvec = q_sqrt * gv;
    if (wvec.norm() > 1e-12 && uvec.norm() > 1e-12) {
      const Matrix ups = worst_case_pair(wvec, uvec, Matrix::Identity(n, n));
      worst = std::max(worst, decrease_at(Matrix(set.center + a_inv_sqrt * ups * q_sqrt)));
      worst = std::max(worst, decrease_at(Matrix(set.center - a_inv_sqrt * ups * q_sqrt)));
    }
    dec_worst[idx] = worst;
  });

  PolyVerifyReport rep;
  rep.grid_points = static_cast<int>(total);
  rep.models = static_cast<int>(models.size());
  rep.min_v_margin = *std::min_element(v_margin.begin(), v_margin.end());
  rep.min_lambda_margin = *std::min_element(lam_margin.begin(), lam_margin.end());
  rep.worst_decrease = *std::max_element(dec_worst.begin(), dec_worst.end());
  return rep;
}

namespace {

nlohmann::json mat_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix mat_from(const nlohmann::json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows ? static_cast<int>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

}  // namespace

std::string poly_certificate_to_json(const PolyCertificate& cert) {
  nlohmann::json j;
  const int nx = cert.V.num_vars();
  j["num_vars"] = nx;
  j["V"] = cert.V.to_string();
  nlohmann::json karr = nlohmann::json::array();
  for (const auto& k : cert.k) karr.push_back(k.to_string());
  j["k"] = karr;
  j["lambda"] = cert.lambda.to_string();
  j["l2"] = cert.l2.to_string();
  j["l1"] = cert.l1.to_string();
  j["eps_lambda"] = cert.eps_lambda;
  if (cert.s1) j["s1"] = cert.s1->to_string();
  if (cert.s2) j["s2"] = cert.s2->to_string();
  if (cert.c > 0) j["c"] = cert.c;
  nlohmann::json grams = nlohmann::json::array();
  for (const auto& g : cert.gram_witnesses) {
    nlohmann::json gj;
    gj["G"] = mat_json(g.G.mat());
    gj["min_eig"] = g.min_eig;
    nlohmann::json bases = nlohmann::json::array();
    for (const auto& b : g.row_bases) {
      nlohmann::json bj = nlohmann::json::array();
      for (const auto& mi : b.monomials()) bj.push_back(mi);
      bases.push_back(bj);
    }
    gj["row_bases"] = bases;
    grams.push_back(gj);
  }
  j["gram_witnesses"] = grams;
  return j.dump(2);
}

PolyCertificate poly_certificate_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& ex) {
    throw ParseError(std::string("poly certificate json: ") + ex.what());
  }
  PolyCertificate cert;
  const int nx = j.at("num_vars").get<int>();
  cert.V = Polynomial::parse(j.at("V").get<std::string>(), nx);
  for (const auto& ks : j.at("k")) cert.k.push_back(Polynomial::parse(ks.get<std::string>(), nx));
  cert.lambda = Polynomial::parse(j.at("lambda").get<std::string>(), nx);
  cert.l2 = Polynomial::parse(j.at("l2").get<std::string>(), nx);
  cert.l1 = Polynomial::parse(j.at("l1").get<std::string>(), nx);
  cert.eps_lambda = j.value("eps_lambda", 1e-3);
  if (j.contains("s1")) cert.s1 = Polynomial::parse(j["s1"].get<std::string>(), nx);
  if (j.contains("s2")) cert.s2 = Polynomial::parse(j["s2"].get<std::string>(), nx);
  cert.c = j.value("c", 0.0);
  if (j.contains("gram_witnesses")) {
    for (const auto& gj : j["gram_witnesses"]) {
      GramCertificate g;
      g.G = SymMatrix(mat_from(gj.at("G")));
      g.min_eig = gj.value("min_eig", 0.0);
      for (const auto& bj : gj.at("row_bases")) {
        std::vector<MultiIndex> monos;
        for (const auto& mi : bj) monos.push_back(mi.get<MultiIndex>());
        g.row_bases.push_back(MonomialBasis(monos));
      }
      g.target = MatrixPolynomial(static_cast<int>(g.row_bases.size()),
                                  static_cast<int>(g.row_bases.size()), nx);
      cert.gram_witnesses.push_back(std::move(g));
    }
  }
  return cert;
}

Polynomial quadratic_form_poly(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  Polynomial p(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      MultiIndex mi(n, 0);
      mi[i] += 1;
      mi[j] += 1;
      const double c = i == j ? m(i, j) : m(i, j) + m(j, i);
      if (c != 0.0) p.add_term(mi, c);
    }
  }
  return p;
}

}  // namespace ddc
