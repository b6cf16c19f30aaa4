#pragma once

#include <Eigen/Dense>

#include "ddc/errors.hpp"

namespace ddc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Dense real symmetric matrix. Construction symmetrizes as (S + S^T)/2, so
// entries(i,j) == entries(j,i) holds exactly afterwards; downstream formulas
// rely on that.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(int n) { return SymMatrix(Matrix::Identity(n, n)); }
  static SymMatrix zero(int n) { return SymMatrix(Matrix::Zero(n, n)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Matrix m_;
};

enum class DefinitenessClass { PosDef, PosSemiDef, Indefinite, NegSemiDef, NegDef };

struct Definiteness {
  DefinitenessClass cls;
  double min_eig;
  double max_eig;
  double tol;  // zero band actually used
};

struct EigDecomposition {
  Vector eigenvalues;  // ascending
  Matrix basis;        // orthogonal, columns are eigenvectors
};

// Eigendecomposition of a symmetric matrix. Throws NumericalFailure if the
// iteration does not converge.
EigDecomposition sym_eig(const SymMatrix& s);

// Unique positive semidefinite square root. Eigenvalues in (-tol, 0) are
// clamped to zero; anything below -tol throws NotPsd. tol < 0 selects the
// default scale-aware band 1e-9 * max(1, ||S||).
SymMatrix psd_sqrt(const SymMatrix& s, double tol = -1.0);

// Moore-Penrose pseudoinverse (SVD-based); defined for every matrix.
Matrix pinv(const Matrix& m);

// Classify sign definiteness from the eigenvalue extremes; tol scales the
// zero band as tol * max(1, ||S||).
Definiteness definiteness(const SymMatrix& s, double tol = 1e-9);

const char* to_string(DefinitenessClass c);

}  // namespace ddc
