#include <Eigen/Eigenvalues>

#include "ddc/linsynth.hpp"
#include "ddc/rng.hpp"
#include "ddc/simkit.hpp"
#include "ddc/sospoly.hpp"
#include "doctest.h"

using namespace ddc;

namespace {

// ellipsoid around a nominal scalar model [a b]' with radius rho: bigA = I,
// Q = rho^2 I via C = Zc'Zc - rho^2
MatrixEllipsoid scalar_model_set(double a, double b, double rho) {
  Matrix zc(2, 1);
  zc << a, b;
  SymMatrix bigA = SymMatrix::identity(2);
  Matrix bigB = -zc;
  SymMatrix bigC(Matrix(zc.transpose() * zc - rho * rho * Matrix::Identity(1, 1)));
  return make_ellipsoid(bigA, bigB, bigC);
}

PolyRegressors linear_regressors_1d() {
  PolyRegressors reg;
  reg.Z = {Polynomial::parse("x1", 1)};
  reg.W = MatrixPolynomial::from_constant(Matrix::Identity(1, 1), 1);
  return reg;
}

}  // namespace

TEST_CASE("perfect square decomposes over (1, x)") {
  Polynomial p = Polynomial::parse("x1^2 - 2*x1 + 1", 1);
  MonomialBasis basis = MonomialBasis::degree_range(1, 0, 1);
  SosOutcome out = sos_decompose(p, basis);
  REQUIRE(out.certificate.has_value());
  CHECK(out.certificate->min_eig >= -1e-8);
  CHECK(out.certificate->reproduction_error() <= 1e-7);
}

TEST_CASE("odd polynomial is rejected") {
  Polynomial p = Polynomial::parse("x1", 1);
  MonomialBasis basis = MonomialBasis::degree_range(1, 0, 1);
  SosOutcome out = sos_decompose(p, basis);
  CHECK_FALSE(out.certificate.has_value());
}

TEST_CASE("degree guard") {
  Polynomial p = Polynomial::parse("x1^4", 1);
  MonomialBasis basis = MonomialBasis::degree_range(1, 0, 1);
  CHECK_THROWS_AS(sos_decompose(p, basis), BasisTooSmall);
}

TEST_CASE("the classical nonnegative-but-not-sos sextic is rejected") {
  Polynomial motzkin = Polynomial::parse("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1", 2);
  MonomialBasis basis = MonomialBasis::degree_range(2, 0, 3);
  SosOutcome out = sos_decompose(motzkin, basis);
  CHECK_FALSE(out.certificate.has_value());
  CHECK(out.status == SdpStatus::Infeasible);
}

TEST_CASE("random sums of squares round trip") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomStream rs(3000 + seed);
    const int nx = 2;
    MonomialBasis basis = MonomialBasis::degree_range(nx, 0, 2);
    // p = sum of 3 squares of random quadratics
    Polynomial p(nx);
    for (int s = 0; s < 3; ++s) {
      Polynomial f(nx);
      for (int j = 0; j < basis.size(); ++j) f.add_term(basis[j], rs.normal());
      p += f * f;
    }
    SosOutcome out = sos_decompose(p, basis);
    REQUIRE(out.certificate.has_value());
    CHECK(out.certificate->min_eig >= -1e-8);
    CHECK(out.certificate->reproduction_error() <= 1e-7 * std::max(1.0, std::abs(p.coeff(MultiIndex(nx, 0)))));
  }
}

TEST_CASE("matrix sos decomposition") {
  // [[x^2+1, x],[x, 1]] = B' G B over basis (1, x) per row
  MatrixPolynomial mp(2, 2, 1);
  mp.at(0, 0) = Polynomial::parse("x1^2 + 1", 1);
  mp.at(0, 1) = Polynomial::parse("x1", 1);
  mp.at(1, 0) = Polynomial::parse("x1", 1);
  mp.at(1, 1) = Polynomial::parse("1", 1);
  MonomialBasis basis = MonomialBasis::degree_range(1, 0, 1);
  SosOutcome out = sos_decompose(mp, basis);
  REQUIRE(out.certificate.has_value());
  CHECK(out.certificate->reproduction_error() <= 1e-7);
}

TEST_CASE("global program on a scalar toy system") {
  // true system xdot = x + u with small model uncertainty
  MatrixEllipsoid set = scalar_model_set(1.0, 1.0, 0.05);
  PolyRegressors reg = linear_regressors_1d();
  PolyDegrees deg;
  deg.V = {2, 2};
  deg.k = {1, 3};
  deg.lambda = {0, 2};
  deg.l2 = {2, 2};
  Polynomial l1 = Polynomial::parse("0.001*x1^2", 1);

  SosProgram prog = build_global_program(set, reg, deg, l1, 1e-3,
                                         FixedV{Polynomial::parse("x1^2", 1)});
  REQUIRE_FALSE(prog.inconsistent);
  SosProgramSolution sol = solve_program(prog);
  REQUIRE(sol.decoded.has_value());
  const Polynomial k = sol.decoded->polys.at("k1");
  // linear gain must stabilize every consistent model: x(1 + k1) < 0 nearby
  const double k_lin = k.coeff({1});
  CHECK(1.0 + k_lin < 0);
  for (const auto& g : sol.decoded->grams) {
    CHECK(g.min_eig >= -1e-8);
    CHECK(g.reproduction_error() <= 1e-6);
  }
}

TEST_CASE("bilinearity and degree guards") {
  MatrixEllipsoid set = scalar_model_set(1.0, 1.0, 0.05);
  PolyRegressors reg = linear_regressors_1d();
  PolyDegrees deg;
  deg.V = {2, 0};  // invalid window
  CHECK_THROWS_AS(build_global_program(set, reg, deg, Polynomial::parse("0.001*x1^2", 1), 1e-3,
                                       FixedV{Polynomial::parse("x1^2", 1)}),
                  DegreeMismatch);
}

TEST_CASE("alternation on the scalar toy converges quickly") {
  MatrixEllipsoid set = scalar_model_set(1.0, 1.0, 0.05);
  PolyRegressors reg = linear_regressors_1d();
  AlternationConfig config;
  config.degrees.V = {2, 2};
  config.degrees.k = {1, 3};
  config.degrees.lambda = {0, 2};
  config.degrees.l2 = {2, 2};
  config.l1 = Polynomial::parse("0.001*x1^2", 1);
  config.v_init = Polynomial::parse("x1^2", 1);
  config.max_iterations = 3;
  AlternationResult res = alternate_synthesis(set, reg, config);
  REQUIRE(res.certificate.has_value());
  CHECK(res.iterations <= 3);
  const PolyCertificate& cert = *res.certificate;
  CHECK(cert.V.coeff({2}) > 0);
  CHECK(cert.k[0].coeff({1}) < -1.0);

  PolyVerifyReport rep = verify_poly(set, cert, reg, {-1.0, 1.0, 11}, 50, 0);
  CHECK(rep.clean(1e-7));

  // destabilizing controller is caught on the grid
  PolyCertificate bad = cert;
  bad.k = {Polynomial(1)};  // k = 0: open loop xdot = x is unstable
  PolyVerifyReport repbad = verify_poly(set, bad, reg, {-1.0, 1.0, 11}, 50, 0);
  CHECK_FALSE(repbad.clean(1e-7));
  CHECK(repbad.worst_decrease > 0);
}

TEST_CASE("zero iteration cap returns not-found") {
  MatrixEllipsoid set = scalar_model_set(1.0, 1.0, 0.05);
  PolyRegressors reg = linear_regressors_1d();
  AlternationConfig config;
  config.l1 = Polynomial::parse("0.001*x1^2", 1);
  config.v_init = Polynomial::parse("x1^2", 1);
  config.max_iterations = 0;
  AlternationResult res = alternate_synthesis(set, reg, config);
  CHECK_FALSE(res.certificate.has_value());
  CHECK(res.diagnostics.find("no complete certificate") != std::string::npos);
}

TEST_CASE("local program accepts the globally feasible toy") {
  MatrixEllipsoid set = scalar_model_set(1.0, 1.0, 0.05);
  PolyRegressors reg = linear_regressors_1d();
  PolyDegrees deg;
  deg.V = {2, 2};
  deg.k = {1, 3};
  deg.lambda = {0, 2};
  deg.l2 = {2, 2};
  Polynomial l0 = Polynomial::parse("x1^2", 1);
  Polynomial l1 = Polynomial::parse("0.001*x1^2", 1);
  SosProgram prog = build_local_program(set, reg, deg, l0, 1.0, l1, 1e-3,
                                        FixedV{Polynomial::parse("x1^2", 1)});
  SosProgramSolution sol = solve_program(prog);
  REQUIRE(sol.decoded.has_value());
  // the multipliers must come back certified nonnegative
  for (size_t ci = 0; ci < prog.constraints.size(); ++ci) {
    if (prog.constraints[ci].tag == "s2") CHECK(sol.decoded->grams[ci].min_eig >= -1e-8);
  }
  CHECK_THROWS_AS(build_local_program(set, reg, deg, l0, -1.0, l1, 1e-3,
                                      FixedV{Polynomial::parse("x1^2", 1)}),
                  DomainError);
}

TEST_CASE("pointwise block condition matches the expanded scalar inequality") {
  // at fixed x and lambda > 0 the 3x3 decrease block is <= 0 iff the
  // schur-expanded scalar inequality holds
  RandomStream rs(909);
  MatrixEllipsoid set = scalar_model_set(0.7, 1.2, 0.3);
  PolyRegressors reg = linear_regressors_1d();
  const Matrix a_inv_sqrt = psd_sqrt(SymMatrix(Matrix(set.bigA.mat().inverse()))).mat();
  const Matrix q_sqrt = psd_sqrt(set.shape).mat();
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const double x = rs.uniform(-2.0, 2.0);
    const double lambda = std::exp(rs.uniform(-2.0, 2.0));
    const double l2 = rs.uniform(-0.5, 0.5);
    const double dv = rs.uniform(-2.0, 2.0);   // dV/dx at x
    const double kx = rs.uniform(-3.0, 3.0);   // k(x)
    Vector zwk(2);
    zwk << x, kx;
    const double lin = dv * (set.center.transpose() * zwk)(0);
    // 3x3 block of the decrease condition
    Matrix blk = Matrix::Zero(4, 4);
    blk(0, 0) = l2 + lin;
    blk.block(1, 0, 2, 1) = a_inv_sqrt * zwk;
    blk.block(0, 1, 1, 2) = (a_inv_sqrt * zwk).transpose();
    blk(3, 0) = blk(0, 3) = lambda * (q_sqrt * Vector::Constant(1, dv))(0);
    blk(1, 1) = blk(2, 2) = -lambda;
    blk(3, 3) = -4 * lambda;
    Eigen::SelfAdjointEigenSolver<Matrix> es(blk, Eigen::EigenvaluesOnly);
    const bool block_holds = es.eigenvalues().maxCoeff() <= 1e-10;
    // expanded scalar form
    const double quad = (zwk.transpose() * set.bigA.mat().inverse() * zwk)(0) / lambda;
    const double shape_term = lambda * dv * set.shape(0, 0) * dv / 4.0;
    const bool scalar_holds = -l2 >= lin + quad + shape_term - 1e-10;
    CHECK(block_holds == scalar_holds);
    ++checked;
  }
  CHECK(checked == 40);
}

TEST_CASE("quadratic form helper") {
  Matrix m(2, 2);
  m << 2, 1, 1, 3;
  Polynomial p = quadratic_form_poly(m);
  Vector x(2);
  x << 0.7, -1.3;
  CHECK(p.eval(x) == doctest::Approx((x.transpose() * m * x)(0)));
}

TEST_CASE("poly certificate json round trip") {
  PolyCertificate cert;
  cert.V = Polynomial::parse("x1^2 + 0.5*x1*x2 + x2^2", 2);
  cert.k = {Polynomial::parse("-x1 - 2*x2", 2)};
  cert.lambda = Polynomial::parse("0.1 + x1^2", 2);
  cert.l2 = Polynomial::parse("0.001*x1^2 + 0.001*x2^2", 2);
  cert.l1 = cert.l2;
  cert.eps_lambda = 1e-3;
  GramCertificate g;
  g.row_bases = {MonomialBasis::degree_range(2, 0, 1)};
  g.G = SymMatrix::identity(3);
  g.target = MatrixPolynomial(1, 1, 2);
  g.min_eig = 1.0;
  cert.gram_witnesses.push_back(g);
  PolyCertificate back = poly_certificate_from_json(poly_certificate_to_json(cert));
  CHECK(back.V == cert.V);
  CHECK(back.k[0] == cert.k[0]);
  CHECK(back.lambda == cert.lambda);
  CHECK((back.gram_witnesses[0].G.mat() - g.G.mat()).norm() == 0.0);
}
