#include "ddc/numkern.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace ddc {

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw DimensionError("SymMatrix: input must be square and nonempty");
  m_ = 0.5 * (m + m.transpose());
}

EigDecomposition sym_eig(const SymMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.mat());
  if (es.info() != Eigen::Success)
    throw NumericalFailure("sym_eig: eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

SymMatrix psd_sqrt(const SymMatrix& s, double tol) {
  const EigDecomposition ed = sym_eig(s);
  const double scale = std::max(std::abs(ed.eigenvalues(0)),
                                std::abs(ed.eigenvalues(s.dim() - 1)));
  if (tol < 0) tol = 1e-9 * std::max(1.0, scale);
  Vector roots(s.dim());
  for (int i = 0; i < s.dim(); ++i) {
    const double ev = ed.eigenvalues(i);
    if (ev < -tol) throw NotPsd("psd_sqrt: eigenvalue " + std::to_string(ev) + " below -tol");
    roots(i) = std::sqrt(std::max(ev, 0.0));
  }
  return SymMatrix(ed.basis * roots.asDiagonal() * ed.basis.transpose());
}

Matrix pinv(const Matrix& m) {
  if (m.size() == 0) return m.transpose();
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  const double cut = std::max(m.rows(), m.cols()) *
                     std::numeric_limits<double>::epsilon() * smax;
  Vector inv = svd.singularValues();
  for (int i = 0; i < inv.size(); ++i) inv(i) = (inv(i) > cut) ? 1.0 / inv(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Definiteness definiteness(const SymMatrix& s, double tol) {
  if (tol <= 0) throw DomainError("definiteness: tol must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericalFailure("definiteness: eigensolver did not converge");
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(s.dim() - 1);
  const double band = tol * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  DefinitenessClass cls;
  if (lo > band)
    cls = DefinitenessClass::PosDef;
  else if (lo >= -band && hi > band)
    cls = DefinitenessClass::PosSemiDef;
  else if (hi < -band)
    cls = DefinitenessClass::NegDef;
  else if (hi <= band && lo < -band)
    cls = DefinitenessClass::NegSemiDef;
  else if (lo >= -band && hi <= band)
    cls = DefinitenessClass::PosSemiDef;  // numerically zero matrix
  else
    cls = DefinitenessClass::Indefinite;
  return {cls, lo, hi, band};
}

const char* to_string(DefinitenessClass c) {
  switch (c) {
    case DefinitenessClass::PosDef: return "PosDef";
    case DefinitenessClass::PosSemiDef: return "PosSemiDef";
    case DefinitenessClass::Indefinite: return "Indefinite";
    case DefinitenessClass::NegSemiDef: return "NegSemiDef";
    case DefinitenessClass::NegDef: return "NegDef";
  }
  return "?";
}

}  // namespace ddc
