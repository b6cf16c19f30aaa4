#include <cmath>
#include <sstream>

#include "ddc/conic.hpp"
#include "ddc/rng.hpp"
#include "doctest.h"

using namespace ddc;

namespace {

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }

SdpProblem scalar_problem(double f0, double f1) {
  SdpProblem p;
  p.num_vars = 1;
  LmiBlock b;
  b.F0 = m1(f0);
  b.Fi = {m1(f1)};
  p.blocks.push_back(b);
  return p;
}

}  // namespace

TEST_CASE("feasible scalar LMI") {
  SdpProblem p = scalar_problem(-1.0, 1.0);
  SdpSolution s = solve(p);
  REQUIRE(s.status == SdpStatus::Feasible);
  CHECK(s.x(0) <= 1.0 + 1e-8);
  CHECK(verify(p, s.x).within(1e-8));
}

TEST_CASE("constant positive block is infeasible") {
  SdpProblem p = scalar_problem(1.0, 0.0);
  SdpSolution s = solve(p);
  REQUIRE(s.status == SdpStatus::Infeasible);
  CHECK(s.infeasibility_margin == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("feasibility requiring phase 1") {
  // x >= 2 encoded as 2 - x <= 0; start x = 0 is infeasible
  SdpProblem p = scalar_problem(2.0, -1.0);
  SdpSolution s = solve(p);
  REQUIRE(s.status == SdpStatus::Feasible);
  CHECK(s.x(0) >= 2.0 - 1e-8);
  CHECK(verify(p, s.x).within(1e-8));
}

TEST_CASE("min linear objective attains the analytic optimum") {
  // minimize x s.t. x >= 2, x >= 0
  SdpProblem p = scalar_problem(2.0, -1.0);
  p.objective = SdpObjectiveKind::MinLinear;
  p.min_linear_cost = Vector::Ones(1);
  p.nonneg = {0};
  SdpSolution s = solve(p);
  REQUIRE(s.status == SdpStatus::Optimal);
  CHECK(std::abs(s.x(0) - 2.0) <= 1e-6);
  CHECK(verify(p, s.x).within(1e-8));
}

TEST_CASE("max logdet block with separable analytic optimum") {
  // A = diag(x1, x2) <= diag(1, 4); maximize logdet A
  SdpProblem p;
  p.num_vars = 2;
  LmiBlock cap;
  cap.F0 = Matrix::Zero(2, 2);
  cap.F0(0, 0) = -1.0;
  cap.F0(1, 1) = -4.0;
  Matrix e11 = Matrix::Zero(2, 2), e22 = Matrix::Zero(2, 2);
  e11(0, 0) = 1.0;
  e22(1, 1) = 1.0;
  cap.Fi = {e11, e22};
  p.blocks.push_back(cap);
  LmiBlock pd;  // encodes -A <= 0; the solver reads it as A > 0
  pd.F0 = Matrix::Zero(2, 2);
  pd.Fi = {-e11, -e22};
  p.blocks.push_back(pd);
  p.objective = SdpObjectiveKind::MaxLogDetBlock;
  p.logdet_block = 1;
  SdpSolution s = solve(p);
  REQUIRE(s.status == SdpStatus::Optimal);
  CHECK(std::abs(s.x(0) - 1.0) <= 1e-5);
  CHECK(std::abs(s.x(1) - 4.0) <= 1e-5);
  CHECK(std::abs(s.objective_value - std::log(4.0)) <= 1e-5);
}

TEST_CASE("verify reports the violation magnitude") {
  SdpProblem p = scalar_problem(-1.0, 1.0);
  Vector bad(1);
  bad << 1.5;
  VerifyReport rep = verify(p, bad);
  CHECK(rep.block_max_eig[0] == doctest::Approx(0.5));
  CHECK_FALSE(rep.within(1e-8));
}

TEST_CASE("deterministic: repeated solves agree bitwise") {
  RandomStream rs(5);
  SdpProblem p;
  p.num_vars = 4;
  for (int b = 0; b < 2; ++b) {
    LmiBlock blk;
    Matrix g = rs.gaussian_matrix(3, 3);
    blk.F0 = -(g * g.transpose()) - Matrix::Identity(3, 3);
    for (int i = 0; i < 4; ++i) {
      Matrix f = rs.gaussian_matrix(3, 3);
      blk.Fi.push_back(0.5 * (f + f.transpose()));
    }
    p.blocks.push_back(blk);
  }
  SdpSolution a = solve(p);
  SdpSolution b = solve(p);
  REQUIRE(a.status == b.status);
  CHECK(a.x == b.x);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("random interior-point instances are reported feasible") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    RandomStream rs(100 + seed);
    const int d = 3 + static_cast<int>(seed % 3);
    const int side = 2 + static_cast<int>(seed % 4);
    Vector xhat = rs.gaussian_vector(d);
    SdpProblem p;
    p.num_vars = d;
    for (int nb = 0; nb < 2; ++nb) {
      LmiBlock blk;
      for (int i = 0; i < d; ++i) {
        Matrix f = rs.gaussian_matrix(side, side);
        blk.Fi.push_back(0.5 * (f + f.transpose()));
      }
      Matrix g = rs.gaussian_matrix(side, side);
      Matrix slack = g * g.transpose() + 0.1 * Matrix::Identity(side, side);
      blk.F0 = -slack;
      for (int i = 0; i < d; ++i) blk.F0 -= xhat(i) * blk.Fi[i];
      p.blocks.push_back(blk);
    }
    SdpSolution s = solve(p);
    REQUIRE(s.status == SdpStatus::Feasible);
    CHECK(verify(p, s.x).within(1e-8));
  }
}

TEST_CASE("malformed problems are rejected") {
  SdpProblem p = scalar_problem(-1.0, 1.0);
  p.blocks[0].Fi.push_back(m1(0.0));
  CHECK_THROWS_AS(solve(p), MalformedProblem);

  SdpProblem q = scalar_problem(-1.0, 1.0);
  CHECK_THROWS_AS(verify(q, Vector::Zero(2)), MalformedProblem);
}

TEST_CASE("dump/load round trip") {
  SdpProblem p = scalar_problem(2.0, -1.0);
  p.objective = SdpObjectiveKind::MinLinear;
  p.min_linear_cost = Vector::Ones(1);
  p.nonneg = {0};
  std::stringstream ss;
  dump_problem(p, ss);
  SdpProblem q = load_problem(ss);
  CHECK(q.num_vars == p.num_vars);
  CHECK(q.nonneg == p.nonneg);
  CHECK(q.blocks.size() == p.blocks.size());
  CHECK((q.blocks[0].F0 - p.blocks[0].F0).norm() == 0.0);
  SdpSolution s = solve(q);
  CHECK(s.status == SdpStatus::Optimal);
  CHECK(std::abs(s.x(0) - 2.0) <= 1e-6);
}
