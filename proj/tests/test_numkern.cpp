#include <Eigen/Dense>

#include "ddc/numkern.hpp"
#include "ddc/rng.hpp"
#include "doctest.h"

using namespace ddc;

namespace {

Matrix random_symmetric(int n, std::uint64_t seed) {
  RandomStream rs(seed);
  Matrix g = rs.gaussian_matrix(n, n);
  return 0.5 * (g + g.transpose());
}

double mp_axiom_residual(const Matrix& m, const Matrix& mp) {
  double r = (m * mp * m - m).norm();
  r = std::max(r, (mp * m * mp - mp).norm());
  r = std::max(r, ((m * mp).transpose() - m * mp).norm());
  r = std::max(r, ((mp * m).transpose() - mp * m).norm());
  return r;
}

}  // namespace

TEST_CASE("sym_eig on diagonal and exchange matrices") {
  Matrix d = Vector::LinSpaced(2, 0, 1).asDiagonal();
  d(0, 0) = 4.0;
  d(1, 1) = 9.0;
  auto ed = sym_eig(SymMatrix(d));
  CHECK(ed.eigenvalues(0) == doctest::Approx(4.0));
  CHECK(ed.eigenvalues(1) == doctest::Approx(9.0));
  CHECK((ed.basis.cwiseAbs() - Matrix::Identity(2, 2)).norm() < 1e-12);

  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  auto ex = sym_eig(SymMatrix(x));
  CHECK(ex.eigenvalues(0) == doctest::Approx(-1.0));
  CHECK(ex.eigenvalues(1) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig reconstructs random symmetric matrices") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Matrix s = random_symmetric(5, seed);
    auto ed = sym_eig(SymMatrix(s));
    Matrix back = ed.basis * ed.eigenvalues.asDiagonal() * ed.basis.transpose();
    CHECK((back - s).norm() <= 1e-10);
    CHECK((ed.basis.transpose() * ed.basis - Matrix::Identity(5, 5)).norm() <= 1e-12);
    for (int i = 0; i + 1 < 5; ++i) CHECK(ed.eigenvalues(i) <= ed.eigenvalues(i + 1));
  }
}

TEST_CASE("psd_sqrt basics") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 9.0;
  Matrix r = psd_sqrt(SymMatrix(d)).mat();
  CHECK(r(0, 0) == doctest::Approx(2.0));
  CHECK(r(1, 1) == doctest::Approx(3.0));
  CHECK(std::abs(r(0, 1)) < 1e-14);

  CHECK(psd_sqrt(SymMatrix::zero(3)).mat().norm() == 0.0);

  RandomStream rs(7);
  Matrix g = rs.gaussian_matrix(3, 3);
  Matrix m = g.transpose() * g;
  Matrix root = psd_sqrt(SymMatrix(m)).mat();
  CHECK((root * root - m).norm() <= 1e-9);

  Matrix ind = Matrix::Zero(2, 2);
  ind(0, 0) = 1.0;
  ind(1, 1) = -1.0;
  CHECK_THROWS_AS(psd_sqrt(SymMatrix(ind)), NotPsd);
}

TEST_CASE("psd_sqrt squares back on random PSD matrices") {
  for (std::uint64_t seed = 10; seed < 16; ++seed) {
    RandomStream rs(seed);
    Matrix g = rs.gaussian_matrix(8, 8);
    Matrix m = g.transpose() * g;
    auto def = definiteness(SymMatrix(m));
    REQUIRE((def.cls == DefinitenessClass::PosDef || def.cls == DefinitenessClass::PosSemiDef));
    Matrix r = psd_sqrt(SymMatrix(m)).mat();
    CHECK((r * r - m).norm() <= 1e-8 * std::max(1.0, m.norm()));
  }
}

TEST_CASE("pinv basics and axioms") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1.0;
  CHECK((pinv(d) - d).norm() < 1e-14);

  Matrix inv2(2, 2);
  inv2 << 2, 1, 1, 3;
  CHECK((inv2 * pinv(inv2) - Matrix::Identity(2, 2)).norm() < 1e-12);

  Matrix wide(2, 3);
  wide << 1, 0, 1, 0, 2, -1;
  Matrix mp = pinv(wide);
  Matrix closed = wide.transpose() * (wide * wide.transpose()).inverse();
  CHECK((mp - closed).norm() < 1e-12);
  CHECK(mp_axiom_residual(wide, mp) <= 1e-10);
}

TEST_CASE("pinv on random rank-deficient matrices") {
  for (std::uint64_t seed = 3; seed < 8; ++seed) {
    RandomStream rs(seed);
    Matrix b = rs.gaussian_matrix(6, 2);
    Matrix c = rs.gaussian_matrix(2, 4);
    Matrix m = b * c;  // rank 2
    Matrix mp = pinv(m);
    CHECK((m * mp * m - m).norm() <= 1e-10 * std::max(1.0, m.norm()));
    CHECK((mp * m * mp - mp).norm() <= 1e-10 * std::max(1.0, mp.norm()));
  }
}

TEST_CASE("definiteness classification") {
  CHECK(definiteness(SymMatrix::identity(3)).cls == DefinitenessClass::PosDef);

  Matrix d10 = Matrix::Zero(2, 2);
  d10(0, 0) = 1.0;
  CHECK(definiteness(SymMatrix(d10)).cls == DefinitenessClass::PosSemiDef);

  Matrix pm = Matrix::Zero(2, 2);
  pm(0, 0) = 1.0;
  pm(1, 1) = -1.0;
  CHECK(definiteness(SymMatrix(pm)).cls == DefinitenessClass::Indefinite);

  CHECK(definiteness(SymMatrix(Matrix(-Matrix::Identity(2, 2)))).cls == DefinitenessClass::NegDef);

  Matrix nsd = Matrix::Zero(2, 2);
  nsd(1, 1) = -1.0;
  CHECK(definiteness(SymMatrix(nsd)).cls == DefinitenessClass::NegSemiDef);

  CHECK_THROWS_AS(definiteness(SymMatrix::identity(2), -1.0), DomainError);
}

TEST_CASE("SymMatrix symmetrizes exactly") {
  RandomStream rs(42);
  Matrix g = rs.gaussian_matrix(6, 6);
  SymMatrix s(g);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) CHECK(s(i, j) == s(j, i));
  CHECK_THROWS_AS(SymMatrix(Matrix::Zero(2, 3)), DimensionError);
}
