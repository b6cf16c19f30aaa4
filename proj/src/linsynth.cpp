#include "ddc/linsynth.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>

#include "ddc/parallel.hpp"
#include "json.hpp"

namespace ddc {

namespace {

// Decision layout: upper triangle of P (column-major), then Y row-major.
struct VarLayout {
  int n, m;
  int num_p() const { return n * (n + 1) / 2; }
  int dim() const { return num_p() + m * n; }
  Matrix unpack_p(const Vector& v) const {
    Matrix p(n, n);
    int k = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i <= j; ++i) {
        p(i, j) = p(j, i) = v(k);
        ++k;
      }
    return p;
  }
  Matrix unpack_y(const Vector& v) const {
    Matrix y(m, n);
    int k = num_p();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) y(i, j) = v(k++);
    return y;
  }
};

// Build an LMI block from an affine matrix-valued map by probing it at the
// origin and at unit coordinates (exact for affine maps).
LmiBlock block_from_affine(int dim, const std::function<Matrix(const Vector&)>& map) {
  LmiBlock blk;
  blk.F0 = map(Vector::Zero(dim));
  blk.Fi.resize(dim);
  for (int i = 0; i < dim; ++i) {
    Vector e = Vector::Zero(dim);
    e(i) = 1.0;
    Matrix fi = map(e) - blk.F0;
    blk.Fi[i] = fi.isZero(0.0) ? Matrix() : fi;
  }
  return blk;
}

SynthResult synth_common(const MatrixEllipsoid& raw, TimeMode mode, LmiForm form,
                         const SolverOptions& opts) {
  const int p = raw.p();
  const int n = raw.n();
  const int m = p - n;
  if (m < 1) throw DimensionError("synthesis: ellipsoid has no input channels");
  const VarLayout lay{n, m};

  // Jointly scaling (bigA, bigB, bigC) leaves the uncertainty set unchanged
  // and the LMI feasibility invariant (absorb the factor into P, Y), so
  // normalize bigA to O(1); B and C ride along with the same factor.
  const double scale = std::max(1.0, raw.bigA.mat().cwiseAbs().maxCoeff());
  const MatrixEllipsoid e = make_ellipsoid(SymMatrix(Matrix(raw.bigA.mat() / scale)),
                                           raw.bigB / scale,
                                           SymMatrix(Matrix(raw.bigC.mat() / scale)));
  const double eps = opts.strict_margin;
  const double mu = 1e-6;  // floor P >= mu*I so K = Y P^{-1} stays computable

  auto stacked = [&](const Vector& v) {
    Matrix py(p, n);  // [P; Y]
    py.topRows(n) = lay.unpack_p(v);
    py.bottomRows(m) = lay.unpack_y(v);
    return py;
  };

  std::function<Matrix(const Vector&)> main_lmi;
  if (mode == TimeMode::DiscreteTime && form == LmiForm::BlockABC) {
    main_lmi = [&](const Vector& v) {
      const Matrix P = lay.unpack_p(v);
      const Matrix py = stacked(v);
      Matrix M = Matrix::Zero(2 * n + p, 2 * n + p);
      M.topLeftCorner(n, n) = -P - e.bigC.mat();
      M.block(n, n, n, n) = -P;
      M.block(n, 2 * n, n, p) = py.transpose();
      M.block(2 * n, n, p, n) = py;
      M.block(2 * n, 0, p, n) = e.bigB;
      M.block(0, 2 * n, n, p) = e.bigB.transpose();
      M.bottomRightCorner(p, p) = -e.bigA.mat();
      return M;
    };
  } else if (mode == TimeMode::DiscreteTime) {
    main_lmi = [&](const Vector& v) {
      const Matrix P = lay.unpack_p(v);
      const Matrix py = stacked(v);
      const Matrix zcpy = e.center.transpose() * py;  // Zc' [P; Y], n x n
      Matrix M = Matrix::Zero(2 * n + p, 2 * n + p);
      M.topLeftCorner(n, n) = -P + e.shape.mat();
      M.block(0, n, n, n) = -zcpy;
      M.block(n, 0, n, n) = -zcpy.transpose();
      M.block(n, n, n, n) = -P;
      M.block(n, 2 * n, n, p) = py.transpose();
      M.block(2 * n, n, p, n) = py;
      M.bottomRightCorner(p, p) = -e.bigA.mat();
      return M;
    };
  } else if (form == LmiForm::BlockABC) {
    main_lmi = [&](const Vector& v) {
      const Matrix py = stacked(v);
      Matrix M = Matrix::Zero(n + p, n + p);
      M.topLeftCorner(n, n) = -e.bigC.mat();
      M.block(0, n, n, p) = (e.bigB - py).transpose();
      M.block(n, 0, p, n) = e.bigB - py;
      M.bottomRightCorner(p, p) = -e.bigA.mat();
      return M;
    };
  } else {
    main_lmi = [&](const Vector& v) {
      const Matrix py = stacked(v);
      const Matrix zcpy = py.transpose() * e.center;  // [P;Y]' Zc, n x n
      Matrix M = Matrix::Zero(n + p, n + p);
      M.topLeftCorner(n, n) = zcpy + zcpy.transpose() + e.shape.mat();
      M.block(0, n, n, p) = py.transpose();
      M.block(n, 0, p, n) = py;
      M.bottomRightCorner(p, p) = -e.bigA.mat();
      return M;
    };
  }

  SdpProblem prob;
  prob.num_vars = lay.dim();
  {
    auto shifted = [&](const Vector& v) -> Matrix {
      const Matrix M = main_lmi(v);
      return M + eps * Matrix::Identity(M.rows(), M.cols());
    };
    prob.blocks.push_back(block_from_affine(lay.dim(), shifted));
  }
  prob.blocks.push_back(block_from_affine(lay.dim(), [&](const Vector& v) -> Matrix {
    return -lay.unpack_p(v) + mu * Matrix::Identity(n, n);
  }));

  SdpSolution sol = solve(prob, opts);
  SynthResult res;
  res.status = sol.status;
  res.iterations = sol.iterations;
  if (sol.status == SdpStatus::Infeasible) {
    res.infeasibility_margin = scale * sol.infeasibility_margin;
    return res;
  }
  if (sol.status != SdpStatus::Feasible && sol.status != SdpStatus::Optimal) return res;

  LinearCertificate cert;
  cert.mode = mode;
  cert.P = scale * lay.unpack_p(sol.x);  // undo the block normalization
  cert.Y = scale * lay.unpack_y(sol.x);
  Eigen::LLT<Matrix> llt(cert.P);
  if (llt.info() != Eigen::Success) {
    res.status = SdpStatus::NumericalFailure;
    return res;
  }
  cert.K = llt.solve(cert.Y.transpose()).transpose();
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(main_lmi(sol.x), Eigen::EigenvaluesOnly);
    cert.lmi_residual = scale * es.eigenvalues().maxCoeff();
  }
  res.certificate = cert;
  return res;
}

}  // namespace

SynthResult synth_dt(const MatrixEllipsoid& e, LmiForm form, const SolverOptions& opts) {
  return synth_common(e, TimeMode::DiscreteTime, form, opts);
}

SynthResult synth_ct(const MatrixEllipsoid& e, LmiForm form, const SolverOptions& opts) {
  return synth_common(e, TimeMode::ContinuousTime, form, opts);
}

double lyapunov_residual(const LinearCertificate& cert, const Matrix& z) {
  const int n = static_cast<int>(cert.P.rows());
  const Matrix a = z.transpose().leftCols(n);
  const Matrix b = z.transpose().rightCols(z.rows() - n);
  const Matrix acl = a + b * cert.K;
  Matrix r;
  if (cert.mode == TimeMode::DiscreteTime)
    r = acl * cert.P * acl.transpose() - cert.P;
  else
    r = acl * cert.P + cert.P * acl.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (r + r.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double closed_loop_measure(const LinearCertificate& cert, const Matrix& z) {
  const int n = static_cast<int>(cert.P.rows());
  const Matrix a = z.transpose().leftCols(n);
  const Matrix b = z.transpose().rightCols(z.rows() - n);
  const Matrix acl = a + b * cert.K;
  Eigen::EigenSolver<Matrix> es(acl);
  double v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const auto ev = es.eigenvalues()(i);
    v = std::max(v, cert.mode == TimeMode::DiscreteTime ? std::abs(ev) : ev.real());
  }
  return v;
}

RobustVerifyReport verify_robust(const MatrixEllipsoid& e, const LinearCertificate& cert,
                                 int samples, std::uint64_t seed, ExecMode exec,
                                 const std::optional<Matrix>& true_model) {
  RobustVerifyReport rep;
  rep.center_residual = lyapunov_residual(cert, e.center);

  const int nb = samples / 2;
  std::vector<ConsistentModel> models = sample(e, std::max(1, nb), SampleMode::Boundary, seed);
  if (samples - nb > 0) {
    auto interior = sample(e, samples - nb, SampleMode::Interior, seed + 1);
    models.insert(models.end(), interior.begin(), interior.end());
  }
  models.push_back({e.center, Provenance::Center});
  if (true_model) models.push_back({*true_model, Provenance::Explicit});

  const int total = static_cast<int>(models.size());
  std::vector<double> residuals(total), measures(total);
  parallel_for(total, exec, [&](std::int64_t i) {
    residuals[i] = lyapunov_residual(cert, models[i].Z);
    measures[i] = closed_loop_measure(cert, models[i].Z);
  });

  rep.models_tested = total;
  rep.worst_residual = -std::numeric_limits<double>::infinity();
  rep.worst_closed_loop = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < total; ++i) {
    rep.worst_residual = std::max(rep.worst_residual, residuals[i]);
    rep.worst_closed_loop = std::max(rep.worst_closed_loop, measures[i]);
    if (residuals[i] > 0) ++rep.violations;
  }
  if (true_model) rep.true_residual = residuals[total - 1];
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

std::string certificate_to_json(const LinearCertificate& cert) {
  nlohmann::json j;
  j["mode"] = cert.mode == TimeMode::DiscreteTime ? "dt" : "ct";
  j["K"] = mat_json(cert.K);
  j["P"] = mat_json(cert.P);
  j["Y"] = mat_json(cert.Y);
  j["lmi_residual"] = cert.lmi_residual;
  return j.dump(2);
}

LinearCertificate certificate_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& ex) {
    throw ParseError(std::string("certificate json: ") + ex.what());
  }
  LinearCertificate cert;
  cert.mode = j.at("mode").get<std::string>() == "dt" ? TimeMode::DiscreteTime
                                                      : TimeMode::ContinuousTime;
  cert.K = mat_from(j.at("K"));
  cert.P = mat_from(j.at("P"));
  cert.Y = mat_from(j.at("Y"));
  cert.lmi_residual = j.value("lmi_residual", 0.0);
  return cert;
}

}  // namespace ddc
