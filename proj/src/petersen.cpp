#include "ddc/petersen.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <iostream>

#include "ddc/rng.hpp"

namespace ddc {

namespace {

double max_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double instance_scale(const PetersenInstance& inst) {
  double s = 1.0;
  s = std::max(s, inst.C.mat().cwiseAbs().maxCoeff());
  const Matrix ee = inst.E * inst.E.transpose();
  const Matrix gg = inst.G.transpose() * inst.Fbar.mat() * inst.G;
  if (ee.size()) s = std::max(s, ee.cwiseAbs().maxCoeff());
  if (gg.size()) s = std::max(s, gg.cwiseAbs().maxCoeff());
  return s;
}

}  // namespace

PetersenInstance make_instance(const SymMatrix& C, const Matrix& E, const Matrix& G,
                               const SymMatrix& Fbar) {
  if (E.rows() != C.dim() || G.cols() != C.dim() || Fbar.dim() != G.rows())
    throw DimensionError("petersen: inconsistent instance dimensions");
  PetersenInstance inst{C, E, G, Fbar, psd_sqrt(Fbar).mat()};
  return inst;
}

double multiplier_residual(const PetersenInstance& inst, double lambda) {
  if (lambda <= 0) throw DomainError("petersen: lambda must be positive");
  const Matrix m = inst.C.mat() + lambda * inst.E * inst.E.transpose() +
                   (1.0 / lambda) * inst.G.transpose() * inst.Fbar.mat() * inst.G;
  return max_eig(m);
}

bool strict_holds_with(const PetersenInstance& inst, double lambda) {
  const double tol = 1e-9 * instance_scale(inst);
  return multiplier_residual(inst, lambda) < -tol;
}

std::optional<MultiplierCertificate> find_multiplier(const PetersenInstance& inst, bool strict) {
  const double tol = 1e-9 * instance_scale(inst);
  // coarse grid on log10(lambda)
  const int grid_points = 241;
  double best_log = 0.0, best_val = std::numeric_limits<double>::infinity();
  int minima = 0;
  double prev = 0.0, prev2 = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double lg = -12.0 + 24.0 * i / (grid_points - 1);
    const double v = multiplier_residual(inst, std::pow(10.0, lg));
    if (v < best_val) {
      best_val = v;
      best_log = lg;
    }
    if (i >= 2 && prev < prev2 && prev < v) ++minima;
    prev2 = prev;
    prev = v;
  }
  if (minima > 1)
    std::cerr << "petersen: multiplier curve shows " << minima
              << " grid minima; relying on the dense grid\n";
  // golden-section refinement around the best grid point
  const double step = 24.0 / (grid_points - 1);
  double lo = best_log - step, hi = best_log + step;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = multiplier_residual(inst, std::pow(10.0, x1));
  double f2 = multiplier_residual(inst, std::pow(10.0, x2));
  for (int it = 0; it < 120; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = multiplier_residual(inst, std::pow(10.0, x1));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = multiplier_residual(inst, std::pow(10.0, x2));
    }
  }
  const double lam = std::pow(10.0, f1 <= f2 ? x1 : x2);
  const double val = std::min(f1, f2);
  const bool ok = strict ? (val < -tol) : (val <= tol);
  if (!ok) return std::nullopt;
  return MultiplierCertificate{lam, val};
}

UniversalCheckReport sampled_universal_check(const PetersenInstance& inst, int num_samples,
                                             bool strict, std::uint64_t seed, ExecMode exec) {
  if (num_samples < 1) throw DomainError("sampled_universal_check: N must be >= 1");
  const double tol = 1e-9 * instance_scale(inst);
  auto value_at = [&](const Matrix& f) {
    return max_eig(inst.C.mat() + inst.E * f * inst.G +
                   inst.G.transpose() * f.transpose() * inst.E.transpose());
  };

  UniversalCheckReport rep;
  rep.worst_f = Matrix::Zero(inst.p(), inst.q());
  rep.worst_value = value_at(rep.worst_f);

  // deterministic candidates: worst-case pair along each eigenvector of C
  const EigDecomposition ed = sym_eig(inst.C);
  for (int k = 0; k < inst.n(); ++k) {
    const Vector x = ed.basis.col(k);
    const Vector ex = inst.E.transpose() * x;
    const Vector gx = inst.G * x;
    if (ex.norm() < 1e-14 || (inst.Phi * gx).norm() < 1e-14) continue;
    const Matrix f = worst_case_pair(ex, gx, inst.Phi);
    for (const double sgn : {1.0, -1.0}) {
      const double v = value_at(sgn * f);
      if (v > rep.worst_value) {
        rep.worst_value = v;
        rep.worst_f = sgn * f;
      }
    }
  }

  // sampled candidates, boundary-biased
  std::vector<double> vals(num_samples);
  std::vector<Matrix> fs(num_samples);
  parallel_for(num_samples, exec, [&](std::int64_t i) {
    RandomStream rs(seed, static_cast<std::uint64_t>(i));
    Matrix u = rs.gaussian_matrix(inst.p(), inst.Phi.rows());
    Eigen::JacobiSVD<Matrix> svd(u);
    const double nrm = svd.singularValues()(0);
    if (nrm > 0) u /= nrm;
    if (rs.uniform() >= 0.8) u *= rs.uniform();  // 20% interior
    fs[i] = u * inst.Phi;
    vals[i] = value_at(fs[i]);
  });
  for (int i = 0; i < num_samples; ++i) {
    if (vals[i] > rep.worst_value) {
      rep.worst_value = vals[i];
      rep.worst_f = fs[i];
    }
  }
  rep.holds = strict ? (rep.worst_value < -tol) : (rep.worst_value <= tol);
  return rep;
}

Matrix worst_case_pair(const Vector& x, const Vector& y, const Matrix& phi) {
  if (phi.cols() != y.size()) throw DimensionError("worst_case_pair: Phi/y dimension mismatch");
  const Vector phi_y = phi * y;
  const double nx = x.norm(), npy = phi_y.norm();
  if (nx < 1e-300 || npy < 1e-300)
    throw DegenerateInput("worst_case_pair: x = 0 or Phi*y = 0 (maximum is 0 at F = 0)");
  return x * (y.transpose() * phi.transpose() * phi) / (nx * npy);
}

}  // namespace ddc
