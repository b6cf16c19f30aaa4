#include "ddc/petersen.hpp"
#include "ddc/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ddc;

namespace {

PetersenInstance scalar_instance(double c, double e, double g, double fbar) {
  return make_instance(SymMatrix(Matrix::Constant(1, 1, c)), Matrix::Constant(1, 1, e),
                       Matrix::Constant(1, 1, g), SymMatrix(Matrix::Constant(1, 1, fbar)));
}

PetersenInstance random_instance(std::uint64_t seed, int n, int p, int q, double shift) {
  RandomStream rs(seed);
  Matrix c = rs.gaussian_matrix(n, n);
  c = -(c * c.transpose()) - shift * Matrix::Identity(n, n);
  Matrix e = 0.3 * rs.gaussian_matrix(n, p);
  Matrix g = 0.3 * rs.gaussian_matrix(q, n);
  Matrix f = rs.gaussian_matrix(q, q);
  return make_instance(SymMatrix(c), e, g, SymMatrix(Matrix(0.1 * f * f.transpose())));
}

}  // namespace

TEST_CASE("strict multiplier check on scalar instances") {
  auto inst = scalar_instance(-1, 1, 1, 0.16);
  CHECK(strict_holds_with(inst, 0.4));  // -1 + 0.4 + 0.4 = -0.2
  auto boundary = scalar_instance(-1, 1, 1, 0.25);
  CHECK_FALSE(strict_holds_with(boundary, 0.5));  // exactly 0
  auto reduced = scalar_instance(-1, 0, 1, 0.0);  // reduces to C < 0
  CHECK(strict_holds_with(reduced, 1.0));
  CHECK_THROWS_AS(strict_holds_with(inst, 0.0), DomainError);
  CHECK_THROWS_AS(strict_holds_with(inst, -1.0), DomainError);
}

TEST_CASE("multiplier search finds the analytic minimum") {
  auto inst = scalar_instance(-1, 1, 1, 0.16);
  auto cert = find_multiplier(inst, true);
  REQUIRE(cert.has_value());
  // min over lambda of lambda + 0.16/lambda is 0.8 at lambda = 0.4
  CHECK(cert->lambda == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(cert->residual_eig == doctest::Approx(-0.2).epsilon(1e-9));
  CHECK(strict_holds_with(inst, cert->lambda));

  auto boundary = scalar_instance(-1, 1, 1, 0.25);
  CHECK_FALSE(find_multiplier(boundary, true).has_value());   // strict fails at 0
  CHECK(find_multiplier(boundary, false).has_value());        // nonstrict holds

  auto trivial = random_instance(3, 2, 2, 2, 1.0);
  auto t2 = make_instance(trivial.C, Matrix::Zero(2, 2), Matrix::Zero(2, 2), SymMatrix::zero(2));
  auto c2 = find_multiplier(t2, true);
  REQUIRE(c2.has_value());
  CHECK(c2->residual_eig < 0);
}

TEST_CASE("sampled universal check agrees with scalar sweeps") {
  auto inst = scalar_instance(-1, 1, 1, 0.16);
  auto rep = sampled_universal_check(inst, 1000, true, 0);
  CHECK(rep.holds);
  CHECK(rep.worst_value == doctest::Approx(-0.2).epsilon(1e-9));
  CHECK(rep.worst_value == doctest::Approx(oracles::scalar_for_all_max(-1, 1, 1, 0.16)).epsilon(1e-9));

  auto boundary = scalar_instance(-1, 1, 1, 0.25);
  auto rep2 = sampled_universal_check(boundary, 1000, true, 0);
  CHECK_FALSE(rep2.holds);
  CHECK(std::abs(rep2.worst_f(0, 0)) == doctest::Approx(0.5).epsilon(1e-9));
  auto rep2n = sampled_universal_check(boundary, 1000, false, 0);
  CHECK(rep2n.holds);

  auto zero_bound = scalar_instance(-1, 1, 1, 0.0);
  auto rep3 = sampled_universal_check(zero_bound, 1, true, 0);
  CHECK(rep3.holds);
  CHECK(rep3.worst_value == doctest::Approx(-1.0));
}

TEST_CASE("serial and parallel universal checks agree bitwise") {
  auto inst = random_instance(9, 3, 2, 2, 0.5);
  auto a = sampled_universal_check(inst, 500, true, 42, ExecMode::Serial);
  auto b = sampled_universal_check(inst, 500, true, 42, ExecMode::OpenMP);
  CHECK(a.holds == b.holds);
  CHECK(a.worst_value == b.worst_value);
  CHECK((a.worst_f - b.worst_f).norm() == 0.0);
}

TEST_CASE("sufficiency: found multipliers pass the sampled check") {
  int found = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const int n = 2 + static_cast<int>(seed % 3);
    const int p = 1 + static_cast<int>(seed % 3);
    const int q = 1 + static_cast<int>((seed / 3) % 3);
    auto inst = random_instance(seed, n, p, q, 0.4);
    auto cert = find_multiplier(inst, true);
    if (!cert) continue;
    ++found;
    auto rep = sampled_universal_check(inst, 2000, true, seed);
    CHECK(rep.holds);
    CHECK(rep.worst_value <= cert->residual_eig + 1e-7);
  }
  CHECK(found >= 10);
}

TEST_CASE("scalar necessity: search agrees with the dense sweep") {
  RandomStream rs(123);
  for (int trial = 0; trial < 60; ++trial) {
    const double c = -std::abs(rs.normal()) - 0.05;
    const double e = rs.normal();
    const double g = rs.normal();
    const double fbar = std::abs(rs.normal()) * 0.3;
    auto inst = scalar_instance(c, e, g, fbar);
    const double sweep = oracles::scalar_for_all_max(c, e, g, fbar);
    auto cert = find_multiplier(inst, true);
    if (sweep < -1e-7) {
      CHECK(cert.has_value());
    } else if (sweep > 1e-7) {
      CHECK_FALSE(cert.has_value());
    }
  }
}

TEST_CASE("worst-case pair attains the variable-elimination bound") {
  Vector x(2), y(1);
  x << 1, 0;
  y << 1;
  Matrix phi = Matrix::Identity(1, 1);
  Matrix f = worst_case_pair(x, y, phi);
  const double attained = x.dot(f * y);
  CHECK(attained * attained == doctest::Approx(1.0));

  CHECK_THROWS_AS(worst_case_pair(Vector::Zero(2), y, phi), DegenerateInput);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RandomStream rs(700 + seed);
    Vector xx = rs.gaussian_vector(3);
    Vector yy = rs.gaussian_vector(2);
    Matrix pp = rs.gaussian_matrix(2, 2);
    if ((pp * yy).norm() < 1e-9) continue;
    Matrix ff = worst_case_pair(xx, yy, pp);
    // admissible: F'F <= Phi'Phi
    Matrix slack = pp.transpose() * pp - ff.transpose() * ff;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (slack + slack.transpose()),
                                             Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
    const double bound = xx.squaredNorm() * (pp * yy).squaredNorm();
    const double got = std::pow(xx.dot(ff * yy), 2);
    CHECK(got == doctest::Approx(bound).epsilon(1e-9));
    // Monte-Carlo: no admissible F exceeds the bound
    for (int k = 0; k < 2000; ++k) {
      RandomStream rk(800 + seed, k);
      Matrix u = rk.gaussian_matrix(3, 2);
      Eigen::JacobiSVD<Matrix> svd(u);
      if (svd.singularValues()(0) > 0) u /= svd.singularValues()(0);
      Matrix fr = u * pp;
      CHECK(std::pow(xx.dot(fr * yy), 2) <= bound * (1 + 1e-9) + 1e-12);
    }
  }
}

TEST_CASE("quadratic multiplier existence on qualifying triples") {
  // random PSD A, PSD C, ND B with the pointwise discriminant condition
  int qualifying = 0;
  for (std::uint64_t seed = 0; seed < 40 && qualifying < 10; ++seed) {
    RandomStream rs(1000 + seed);
    const int r = 2 + static_cast<int>(seed % 2);
    Matrix ga = rs.gaussian_matrix(r, r);
    Matrix gc = rs.gaussian_matrix(r, r);
    Matrix a = 0.05 * ga * ga.transpose();
    Matrix c = 0.05 * gc * gc.transpose();
    Matrix gb = rs.gaussian_matrix(r, r);
    Matrix b = -(gb * gb.transpose()) - Matrix::Identity(r, r);
    // verify the discriminant condition by dense direction sampling
    bool qualifies = true;
    for (int k = 0; k < 4000 && qualifies; ++k) {
      Vector w = RandomStream(2000 + seed, k).gaussian_vector(r);
      w.normalize();
      const double bw = w.dot(b * w);
      if (bw * bw - 4.0 * w.dot(a * w) * w.dot(c * w) <= 0) qualifies = false;
    }
    if (!qualifies) continue;
    ++qualifying;
    auto lam = oracles::quadratic_multiplier_search(a, b, c);
    CHECK(lam.has_value());
  }
  CHECK(qualifying >= 10);
}
