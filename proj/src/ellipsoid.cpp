#include "ddc/ellipsoid.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "ddc/rng.hpp"
#include "json.hpp"

namespace ddc {

namespace {

Matrix inv_sqrt(const SymMatrix& a) {
  const EigDecomposition ed = sym_eig(a);
  Vector inv_roots(a.dim());
  for (int i = 0; i < a.dim(); ++i) {
    if (ed.eigenvalues(i) <= 0.0)
      throw RankDeficient("matrix ellipsoid: bigA is not positive definite");
    inv_roots(i) = 1.0 / std::sqrt(ed.eigenvalues(i));
  }
  return ed.basis * inv_roots.asDiagonal() * ed.basis.transpose();
}

}  // namespace

MatrixEllipsoid make_ellipsoid(const SymMatrix& bigA, const Matrix& bigB, const SymMatrix& bigC) {
  if (bigB.rows() != bigA.dim() || bigC.dim() != bigB.cols())
    throw DimensionError("make_ellipsoid: block dimensions do not fit");
  const auto def = definiteness(bigA);
  if (def.cls != DefinitenessClass::PosDef)
    throw RankDeficient("make_ellipsoid: bigA must be positive definite (got " +
                        std::string(to_string(def.cls)) + ")");
  MatrixEllipsoid e;
  e.bigA = bigA;
  e.bigB = bigB;
  e.bigC = bigC;
  Eigen::LLT<Matrix> llt(bigA.mat());
  e.center = -llt.solve(bigB);
  e.shape = SymMatrix(bigB.transpose() * llt.solve(bigB) - bigC.mat());
  return e;
}

MatrixEllipsoid consistency_set(const DataMatrices& dm) {
  const Matrix& stack = dm.regressor_stack;
  const Matrix ddt = dm.delta * dm.delta.transpose();
  SymMatrix bigA(Matrix(stack * stack.transpose()));
  Matrix bigB = -stack * dm.X1.transpose();
  SymMatrix bigC(Matrix(dm.X1 * dm.X1.transpose() - ddt));
  return make_ellipsoid(bigA, bigB, bigC);
}

Matrix ls_center(const DataMatrices& dm) {
  return (dm.X1 * pinv(dm.regressor_stack)).transpose();
}

bool contains(const MatrixEllipsoid& e, const Matrix& z, double tol) {
  if (z.rows() != e.p() || z.cols() != e.n())
    throw DimensionError("contains: member dimensions do not match the ellipsoid");
  const Matrix d = z - e.center;
  const Matrix gap = e.shape.mat() - d.transpose() * e.bigA.mat() * d;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (gap + gap.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

std::vector<ConsistentModel> sample(const MatrixEllipsoid& e, int count, SampleMode mode,
                                    std::uint64_t seed) {
  if (count < 1) throw DomainError("sample: count must be >= 1");
  const Matrix a_inv_sqrt = inv_sqrt(e.bigA);
  const Matrix q_sqrt = psd_sqrt(e.shape).mat();
  std::vector<ConsistentModel> out(count);
  for (int i = 0; i < count; ++i) {
    RandomStream rs(seed, static_cast<std::uint64_t>(i));
    Matrix u = rs.gaussian_matrix(e.p(), e.n());
    Eigen::JacobiSVD<Matrix> svd(u);
    const double nrm = svd.singularValues()(0);
    if (nrm > 0) u /= nrm;
    Provenance prov = Provenance::BoundarySample;
    if (mode == SampleMode::Interior) {
      u *= rs.uniform();
      prov = Provenance::InteriorSample;
    }
    out[i] = {e.center + a_inv_sqrt * u * q_sqrt, prov};
  }
  return out;
}

double size_measure(const MatrixEllipsoid& e) {
  const auto eq = sym_eig(e.shape).eigenvalues;
  const auto ea = sym_eig(e.bigA).eigenvalues;
  const double tol = 1e-12 * std::max(1.0, std::abs(eq(e.n() - 1)));
  double log_q = 0.0;
  for (int i = 0; i < eq.size(); ++i) {
    if (eq(i) <= tol) return 0.0;
    log_q += std::log(eq(i));
  }
  double log_a = 0.0;
  for (int i = 0; i < ea.size(); ++i) log_a += std::log(ea(i));
  return std::exp(0.5 * e.p() * log_q - 0.5 * e.n() * log_a);
}

double norm_bound(const MatrixEllipsoid& e) {
  const double lam_min = sym_eig(e.bigA).eigenvalues(0);
  const Matrix q_sqrt = psd_sqrt(e.shape).mat();
  Eigen::JacobiSVD<Matrix> svd_q(q_sqrt);
  Eigen::JacobiSVD<Matrix> svd_c(e.center);
  return svd_c.singularValues()(0) + svd_q.singularValues()(0) / std::sqrt(lam_min);
}

Matrix boundary_factor(const MatrixEllipsoid& e, const Matrix& z, double rank_tol) {
  // Rank decision happens on the eigenvalues of Q itself: rounding noise of
  // size eps in Q inflates to sqrt(eps) in Q^{1/2} and would defeat any
  // cutoff applied after the square root.
  const EigDecomposition ed = sym_eig(e.shape);
  const double mu_max = std::max(0.0, ed.eigenvalues(e.n() - 1));
  if (rank_tol < 0) rank_tol = 1e-9 * std::max(1.0, mu_max);
  std::vector<int> pos;
  for (int i = 0; i < e.n(); ++i)
    if (ed.eigenvalues(i) > rank_tol) pos.push_back(i);
  if (pos.empty()) return Matrix::Zero(e.p(), e.n());  // point ellipsoid
  Matrix t1(e.n(), static_cast<int>(pos.size()));
  Vector lam_inv(static_cast<int>(pos.size()));
  for (size_t k = 0; k < pos.size(); ++k) {
    t1.col(static_cast<int>(k)) = ed.basis.col(pos[k]);
    lam_inv(static_cast<int>(k)) = 1.0 / std::sqrt(ed.eigenvalues(pos[k]));
  }
  const Matrix a_sqrt = psd_sqrt(e.bigA).mat();
  return a_sqrt * (z - e.center) * t1 * lam_inv.asDiagonal() * t1.transpose();
}

MatrixEllipsoid overapproximate(const std::vector<OverapproxPoint>& points, double delta,
                                const SolverOptions& opts) {
  if (points.empty()) throw DomainError("overapproximate: need at least one point");
  if (delta < 0) throw DomainError("overapproximate: delta must be >= 0");
  const int n = static_cast<int>(points[0].successor.size());
  const int pz = static_cast<int>(points[0].regressor.size());
  const int pu = static_cast<int>(points[0].input.size());
  const int p = pz + pu;
  const int T = static_cast<int>(points.size());
  for (const auto& pt : points)
    if (pt.successor.size() != n || pt.regressor.size() != pz || pt.input.size() != pu)
      throw DimensionError("overapproximate: ragged point dimensions");

  // variable layout: upper triangle of bigA (column-major), then bigB, then tau
  const int na = p * (p + 1) / 2;
  const int nb = p * n;
  const int d = na + nb + T;
  auto a_index = [&](int i, int j) {  // i <= j
    return j * (j + 1) / 2 + i;
  };

  SdpProblem prob;
  prob.num_vars = d;

  const int side = n + 2 * p;
  LmiBlock big;
  big.F0 = Matrix::Zero(side, side);
  big.F0.topLeftCorner(n, n) = -Matrix::Identity(n, n);
  big.Fi.assign(d, Matrix());
  // bigA entries appear in block (2,2) and -bigA in block (3,3)
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i <= j; ++i) {
      Matrix f = Matrix::Zero(side, side);
      f(n + i, n + j) = f(n + j, n + i) = 1.0;
      f(n + p + i, n + p + j) = f(n + p + j, n + p + i) = -1.0;
      big.Fi[a_index(i, j)] = f;
    }
  }
  // bigB appears in blocks (2,1) and (3,1)
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < p; ++i) {
      Matrix f = Matrix::Zero(side, side);
      f(n + i, j) = f(j, n + i) = 1.0;
      f(n + p + i, j) = f(j, n + p + i) = 1.0;
      big.Fi[na + j * p + i] = f;
    }
  }
  // tau_k multiplies -[gamma_k, beta_k'; beta_k, alpha_k] in the top-left 2x2
  for (int k = 0; k < T; ++k) {
    const auto& pt = points[k];
    Vector reg(p);
    reg.head(pz) = pt.regressor;
    reg.tail(pu) = pt.input;
    const Matrix gamma = -delta * Matrix::Identity(n, n) + pt.successor * pt.successor.transpose();
    const Matrix beta = -reg * pt.successor.transpose();
    const Matrix alpha = reg * reg.transpose();
    Matrix f = Matrix::Zero(side, side);
    f.topLeftCorner(n, n) = -gamma;
    f.block(n, 0, p, n) = -beta;
    f.block(0, n, n, p) = -beta.transpose();
    f.block(n, n, p, p) = -alpha;
    big.Fi[na + nb + k] = f;
  }
  prob.blocks.push_back(std::move(big));

  // bigA > 0, also the log-det objective block
  LmiBlock apd;
  apd.F0 = Matrix::Zero(p, p);
  apd.Fi.assign(d, Matrix());
  for (int j = 0; j < p; ++j)
    for (int i = 0; i <= j; ++i) {
      Matrix f = Matrix::Zero(p, p);
      f(i, j) = f(j, i) = -1.0;
      apd.Fi[a_index(i, j)] = f;
    }
  prob.blocks.push_back(std::move(apd));
  prob.objective = SdpObjectiveKind::MaxLogDetBlock;
  prob.logdet_block = 1;
  for (int k = 0; k < T; ++k) prob.nonneg.push_back(na + nb + k);

  SolverOptions o = opts;
  o.max_newton_iters = std::max(o.max_newton_iters, 400);
  SdpSolution sol = solve(prob, o);
  if (sol.status == SdpStatus::Infeasible)
    throw SolverInfeasible("overapproximate: containment program infeasible (margin " +
                           std::to_string(sol.infeasibility_margin) + ")");
  if (sol.status != SdpStatus::Optimal && sol.status != SdpStatus::Feasible)
    throw DegenerateData("overapproximate: solver failed; data may not excite every direction");

  Matrix a(p, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i <= j; ++i) a(i, j) = a(j, i) = sol.x(a_index(i, j));
  Matrix b(p, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < p; ++i) b(i, j) = sol.x(na + j * p + i);
  const auto def = definiteness(SymMatrix(a));
  if (def.cls != DefinitenessClass::PosDef)
    throw DegenerateData("overapproximate: returned bigA is not positive definite");
  Eigen::LLT<Matrix> llt(0.5 * (a + a.transpose()));
  const Matrix c = b.transpose() * llt.solve(b) - Matrix::Identity(n, n);
  return make_ellipsoid(SymMatrix(a), b, SymMatrix(c));
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const int rows = static_cast<int>(j.size());
  if (rows == 0) return Matrix(0, 0);
  const int cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols) throw ParseError("json: ragged matrix");
    for (int jj = 0; jj < cols; ++jj) m(i, jj) = j[i][jj].get<double>();
  }
  return m;
}

}  // namespace

std::string ellipsoid_to_json(const MatrixEllipsoid& e) {
  nlohmann::json j;
  j["n"] = e.n();
  j["p"] = e.p();
  j["A"] = matrix_to_json(e.bigA.mat());
  j["B"] = matrix_to_json(e.bigB);
  j["C"] = matrix_to_json(e.bigC.mat());
  return j.dump(2);
}

MatrixEllipsoid ellipsoid_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& ex) {
    throw ParseError(std::string("ellipsoid json: ") + ex.what());
  }
  const Matrix a = matrix_from_json(j.at("A"));
  const Matrix b = matrix_from_json(j.at("B"));
  const Matrix c = matrix_from_json(j.at("C"));
  return make_ellipsoid(SymMatrix(a), b, SymMatrix(c));
}

}  // namespace ddc
