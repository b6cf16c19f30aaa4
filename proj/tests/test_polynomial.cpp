#include "ddc/polynomial.hpp"
#include "ddc/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ddc;

TEST_CASE("eval and gradient on simple polynomials") {
  Polynomial p = Polynomial::parse("x1^2 + 2*x2", 2);
  auto g = poly_grad(p);
  CHECK(g[0] == Polynomial::parse("2*x1", 2));
  CHECK(g[1] == Polynomial::parse("2", 2));

  Polynomial q = Polynomial::parse("x1^2*x2", 2);
  Vector x(2);
  x << 2, 3;
  CHECK(poly_eval(q, x) == doctest::Approx(12.0));
}

TEST_CASE("gradient matches central finite differences") {
  RandomStream rs(11);
  Polynomial p(3);
  for (int t = 0; t < 12; ++t) {
    MultiIndex m(3);
    for (int i = 0; i < 3; ++i) m[i] = static_cast<int>(rs.next_u64() % 3);
    p.add_term(m, rs.normal());
  }
  auto g = poly_grad(p);
  for (int pt = 0; pt < 20; ++pt) {
    Vector x = RandomStream(200 + pt).gaussian_vector(3);
    Vector fd = oracles::fd_gradient(p, x);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(g[i].eval(x) - fd(i)) <= 1e-6 * std::max(1.0, std::abs(fd(i))));
  }
}

TEST_CASE("text format round trips") {
  Polynomial p = Polynomial::parse("1.5*x1^2*x2 - 0.25*x2^3 + 2 - x1", 2);
  Polynomial q = Polynomial::parse(p.to_string(), 2);
  CHECK(p == q);
  CHECK(Polynomial::parse("0", 2).is_zero());
  CHECK_THROWS_AS(Polynomial::parse("2*y1", 2), ParseError);
  CHECK_THROWS_AS(Polynomial::parse("", 2), ParseError);
}

TEST_CASE("arithmetic keeps the term map clean") {
  Polynomial a = Polynomial::parse("x1 + x2", 2);
  Polynomial b = Polynomial::parse("x1 - x2", 2);
  Polynomial prod = a * b;  // x1^2 - x2^2
  CHECK(prod == Polynomial::parse("x1^2 - x2^2", 2));
  Polynomial zero = a - a;
  CHECK(zero.is_zero());
  CHECK(zero.terms().empty());
  CHECK(a.degree() == 1);
  CHECK(prod.degree() == 2);
  CHECK(prod.min_degree() == 2);
}

TEST_CASE("monomial basis generation is canonical") {
  MonomialBasis b = MonomialBasis::degree_range(2, 0, 2);
  CHECK(b.size() == 6);  // 1, x1, x2, x1^2, x1x2, x2^2
  CHECK(total_degree(b[0]) == 0);
  CHECK(total_degree(b[5]) == 2);
  for (int i = 0; i + 1 < b.size(); ++i) CHECK(GradedLexLess{}(b[i], b[i + 1]));

  MonomialBasis w = MonomialBasis::degree_range(2, 1, 3);
  CHECK(w.size() == 2 + 3 + 4);

  Vector x(2);
  x << 2, 3;
  Vector v = b.eval(x);
  CHECK(v(0) == 1.0);
  CHECK(v.sum() == doctest::Approx(1 + 2 + 3 + 4 + 6 + 9));
}

TEST_CASE("matrix polynomial evaluation") {
  MatrixPolynomial mp(2, 2, 2);
  mp.at(0, 0) = Polynomial::parse("x1", 2);
  mp.at(0, 1) = Polynomial::parse("x2^2", 2);
  mp.at(1, 0) = Polynomial::parse("1", 2);
  Vector x(2);
  x << 3, 2;
  Matrix v = mp.eval(x);
  CHECK(v(0, 0) == 3.0);
  CHECK(v(0, 1) == 4.0);
  CHECK(v(1, 1) == 0.0);
  CHECK(mp.degree() == 2);
}
