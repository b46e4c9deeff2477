#include <dieroll/sdp.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace dieroll;
using testutil::rng_for;

#include "sdp_fixtures.hpp"

using testutil::add_sum_constraints;
using testutil::lambda_max_problem;
using testutil::random_feasible_pair;

TEST_CASE("scalar equality block") {
  CMatrix c = CMatrix::Identity(1, 1);
  SdpProblem p;
  p.block_sizes = {1};
  p.objective = {c};
  p.constraints = {{{{0, {{0, 0, 1.0}}}}, 0.7}};
  p.finalize();
  const auto sol = solve(p);
  REQUIRE(sol.status == SdpStatus::optimal);
  REQUIRE(sol.primal_value == Catch::Approx(0.7).margin(1e-7));
  REQUIRE(sol.x[0](0, 0).real() == Catch::Approx(0.7).margin(1e-7));
}

TEST_CASE("largest-eigenvalue problems match the eigendecomposition oracle") {
  auto rng = rng_for(21);
  for (int n = 2; n <= 12; ++n) {
    for (int rep = 0; rep < 3; ++rep) {
      const CMatrix c = (rep % 2 == 0) ? testutil::random_hermitian(n, rng)
                                       : testutil::random_real_symmetric(n, rng);
      const double oracle = max_eigenvalue(c);
      const auto sol = solve(lambda_max_problem(c));
      REQUIRE(sol.status == SdpStatus::optimal);
      REQUIRE(sol.primal_value == Catch::Approx(oracle).margin(1e-7));
    }
  }
}

TEST_CASE("two orthogonal states are perfectly distinguishable") {
  // POVM {M_1, M_2} on a 2-dimensional space, maximizing
  // (1/2)(<M_1, diag(1,0)> + <M_2, diag(0,1)>) subject to M_1 + M_2 = I.
  SdpProblem p;
  p.block_sizes = {2, 2};
  CMatrix c1 = CMatrix::Zero(2, 2), c2 = CMatrix::Zero(2, 2);
  c1(0, 0) = 0.5;
  c2(1, 1) = 0.5;
  p.objective = {c1, c2};
  add_sum_constraints(p, {0, 1}, CMatrix::Identity(2, 2));
  p.finalize();
  const auto sol = solve(p);
  REQUIRE(sol.status == SdpStatus::optimal);
  REQUIRE(sol.primal_value == Catch::Approx(1.0).margin(1e-7));
}

TEST_CASE("optimal solutions satisfy the reported invariants") {
  auto rng = rng_for(22);
  const CMatrix c = testutil::random_hermitian(6, rng);
  const auto p = lambda_max_problem(c);
  const auto sol = solve(p);
  REQUIRE(sol.status == SdpStatus::optimal);
  REQUIRE(std::abs(sol.primal_value - sol.dual_value) <=
          1e-8 * (1.0 + std::abs(sol.primal_value)));
  const auto rep = verify_feasible_pair(p, sol.x, sol.y);
  REQUIRE(rep.primal_ok);
  REQUIRE(rep.dual_ok);
  REQUIRE(rep.primal_residual <= 1e-8 * (1.0 + p.rhs.norm()));
  REQUIRE(rep.x_min_eig >= -1e-9);
  REQUIRE(rep.s_min_eig >= -1e-9);
  REQUIRE(std::abs(rep.gap) <= 2e-8 * (1.0 + std::abs(sol.primal_value)));
}

TEST_CASE("verifier flags a broken primal equality") {
  auto rng = rng_for(23);
  const CMatrix c = testutil::random_hermitian(4, rng);
  const auto p = lambda_max_problem(c);
  auto sol = solve(p);
  REQUIRE(sol.status == SdpStatus::optimal);
  std::vector<CMatrix> scaled = sol.x;
  scaled[0] *= 0.5;
  const auto rep = verify_feasible_pair(p, scaled, sol.y);
  REQUIRE_FALSE(rep.primal_ok);
}

TEST_CASE("weak duality holds on random feasible pairs") {
  auto rng = rng_for(24);
  for (int rep = 0; rep < 200; ++rep) {
    const auto pair = random_feasible_pair(rng);
    const auto report = verify_feasible_pair(pair.prob, pair.x, pair.y);
    INFO("rep " << rep);
    REQUIRE(report.primal_ok);
    REQUIRE(report.dual_ok);
    REQUIRE(report.gap >= -1e-9);
  }
}

TEST_CASE("solver is deterministic") {
  auto rng = rng_for(25);
  const CMatrix c = testutil::random_hermitian(7, rng);
  const auto p = lambda_max_problem(c);
  const auto a = solve(p);
  const auto b = solve(p);
  REQUIRE(a.iterations == b.iterations);
  REQUIRE(a.primal_value == b.primal_value);
  REQUIRE(a.dual_value == b.dual_value);
  REQUIRE(max_abs(a.x[0] - b.x[0]) == 0.0);
}

TEST_CASE("iteration cap is reported") {
  auto rng = rng_for(26);
  const CMatrix c = testutil::random_hermitian(6, rng);
  SolveOptions opts;
  opts.max_iters = 2;
  const auto sol = solve(lambda_max_problem(c), opts);
  REQUIRE(sol.status == SdpStatus::max_iters);
  REQUIRE_FALSE(sol.message.empty());
}

TEST_CASE("primal infeasibility is diagnosed") {
  CMatrix c = CMatrix::Identity(2, 2);
  SdpProblem p;
  p.block_sizes = {2};
  p.objective = {c};
  p.constraints = {{{{0, {{0, 0, 1.0}, {1, 1, 1.0}}}}, -1.0}};
  p.finalize();
  const auto sol = solve(p);
  REQUIRE(sol.status != SdpStatus::optimal);
  REQUIRE_FALSE(sol.message.empty());
}

TEST_CASE("problem validation rejects malformed input") {
  SdpProblem p;
  p.block_sizes = {2};
  p.objective = {CMatrix::Identity(2, 2)};
  p.constraints = {{{{0, {{0, 0, 1.0}, {1, 1, 1.0}}}}, 1.0},
                   {{{0, {{0, 0, 2.0}, {1, 1, 2.0}}}}, 2.0}};
  p.finalize();
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);  // dependent rows

  SdpProblem q;
  q.block_sizes = {2};
  CMatrix bad = CMatrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  q.objective = {bad};  // not Hermitian
  q.constraints = {{{{0, {{0, 0, 1.0}}}}, 1.0}};
  q.finalize();
  REQUIRE_THROWS_AS(q.validate(), std::invalid_argument);

  SdpProblem r;
  r.block_sizes = {2};
  r.objective = {CMatrix::Identity(2, 2)};
  r.constraints = {{{{0, {{1, 0, 1.0}}}}, 1.0}};  // row > col
  r.finalize();
  REQUIRE_THROWS_AS(r.validate(), std::invalid_argument);
}

TEST_CASE("complex data rides the real embedding transparently") {
  // A constraint pinning the imaginary part of an off-diagonal entry forces
  // a genuinely complex optimizer.
  auto rng = rng_for(27);
  CMatrix c = CMatrix::Zero(2, 2);
  c(0, 1) = Complex(0.0, -1.0);
  c(1, 0) = Complex(0.0, 1.0);
  SdpProblem p = lambda_max_problem(c);
  const auto sol = solve(p);
  REQUIRE(sol.status == SdpStatus::optimal);
  REQUIRE(sol.primal_value == Catch::Approx(1.0).margin(1e-7));
  // The optimizer is the projector onto the top eigenvector, which has a
  // genuinely imaginary off-diagonal part.
  REQUIRE(std::abs(sol.x[0](0, 1).imag()) > 0.4);
  REQUIRE(hermiticity_defect(sol.x[0]) < 1e-12);
}
