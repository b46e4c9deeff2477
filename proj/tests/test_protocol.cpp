#include <dieroll/protocol.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "test_util.hpp"

using namespace dieroll;

TEST_CASE("subset enumeration is lexicographic and complete") {
  const auto t2 = subsets_lex(3, 2);
  REQUIRE(t2 == std::vector<std::vector<int>>{{1, 2}, {1, 3}, {2, 3}});
  const auto t1 = subsets_lex(4, 1);
  REQUIRE(t1 == std::vector<std::vector<int>>{{1}, {2}, {3}, {4}});
  REQUIRE(subsets_lex(4, 4) == std::vector<std::vector<int>>{{1, 2, 3, 4}});
  for (int d = 1; d <= 8; ++d)
    for (int m = 1; m <= d; ++m) {
      const auto subs = subsets_lex(d, m);
      REQUIRE(static_cast<long long>(subs.size()) == binomial(d, m));
      for (std::size_t i = 1; i < subs.size(); ++i)
        REQUIRE(std::lexicographical_compare(subs[i - 1].begin(),
                                             subs[i - 1].end(),
                                             subs[i].begin(), subs[i].end()));
    }
}

TEST_CASE("binomial coefficients") {
  REQUIRE(binomial(4, 2) == 6);
  REQUIRE(binomial(12, 5) == 792);
  REQUIRE(binomial(12, 4) == 495);
  REQUIRE(binomial(5, 0) == 1);
  REQUIRE(binomial(5, 6) == 0);
}

TEST_CASE("outcome map is a bijection in a for every fixed b") {
  for (int d = 2; d <= 10; ++d) {
    for (int b = 1; b <= d; ++b) {
      std::set<int> seen;
      for (int a = 1; a <= d; ++a) {
        const int out = outcome_of(a, b, d);
        REQUIRE(out >= 1);
        REQUIRE(out <= d);
        seen.insert(out);
      }
      REQUIRE(static_cast<int>(seen.size()) == d);
    }
  }
  REQUIRE(outcome_of(1, 1, 6) == 1);
  REQUIRE(outcome_of(6, 6, 6) == 5);
  REQUIRE(outcome_of(3, 5, 6) == 1);
}

TEST_CASE("two-outcome singleton protocol has orthonormal basis states") {
  const auto p = build_subset_protocol(2, 1);
  REQUIRE(p.d == 2);
  REQUIRE(p.dims.dim_a == 2);
  REQUIRE(p.dims.dim_b == 2);
  CVector e0 = CVector::Zero(4), e3 = CVector::Zero(4);
  e0(0) = 1.0;
  e3(3) = 1.0;
  REQUIRE(max_abs(CMatrix(p.states[0] - e0)) < 1e-15);
  REQUIRE(max_abs(CMatrix(p.states[1] - e3)) < 1e-15);
  p.validate();
}

TEST_CASE("pair-subset protocol on four outcomes has uniform overlaps") {
  const auto p = build_subset_protocol(4, 2);
  REQUIRE(p.dims.dim_a == 6);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const Complex ov = p.states[a].dot(p.states[b]);
      if (a == b)
        REQUIRE(std::abs(ov - 1.0) < 1e-12);
      else
        REQUIRE(std::abs(ov - 1.0 / 3.0) < 1e-12);
    }
}

TEST_CASE("state family Gram matrix has constant off-diagonal") {
  for (auto [d, m] : {std::pair{5, 3}, {6, 2}, {7, 5}}) {
    const auto p = build_subset_protocol(d, m);
    const double expect = static_cast<double>(m - 1) / (d - 1);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        const Complex ov = p.states[a].dot(p.states[b]);
        REQUIRE(std::abs(ov.imag()) < 1e-15);
        REQUIRE(std::abs(ov.real() - (a == b ? 1.0 : expect)) < 1e-12);
      }
  }
}

TEST_CASE("construction rejects bad parameters") {
  REQUIRE_THROWS_AS(build_subset_protocol(3, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_subset_protocol(3, 5), std::invalid_argument);
  REQUIRE_THROWS_AS(build_subset_protocol(30, 15), std::invalid_argument);
  REQUIRE_NOTHROW(build_subset_protocol(12, 4));  // C(12,4) = 495 <= 512
  REQUIRE_THROWS_AS(build_subset_protocol(12, 5), std::invalid_argument);
}

TEST_CASE("reduced states of the singleton protocol are basis projectors") {
  const auto rho = reduced_states(build_subset_protocol(2, 1));
  CMatrix d0 = CMatrix::Zero(2, 2), d1 = CMatrix::Zero(2, 2);
  d0(0, 0) = 1.0;
  d1(1, 1) = 1.0;
  REQUIRE(max_abs(rho[0] - d0) < 1e-15);
  REQUIRE(max_abs(rho[1] - d1) < 1e-15);
}

TEST_CASE("reduced states are uniform over the subsets containing a") {
  const int d = 5, m = 2;
  const auto p = build_subset_protocol(d, m);
  const auto rho = reduced_states(p);
  const auto subs = subsets_lex(d, m);
  const double w = 1.0 / static_cast<double>(binomial(d - 1, m - 1));
  for (int a = 1; a <= d; ++a) {
    CMatrix expect = CMatrix::Zero(p.dims.dim_b, p.dims.dim_b);
    for (std::size_t s = 0; s < subs.size(); ++s)
      if (std::find(subs[s].begin(), subs[s].end(), a) != subs[s].end())
        expect(s, s) = w;
    REQUIRE(max_abs(rho[a - 1] - expect) < 1e-12);
    REQUIRE(std::abs(rho[a - 1].trace().real() - 1.0) < 1e-12);
    REQUIRE(psd_check(rho[a - 1]).certified);
  }
}

TEST_CASE("each basis projector appears in exactly m reduced sums") {
  // Summing the unnormalized subset projectors over all a gives m times the
  // identity: each subset contains exactly m elements.
  for (auto [d, m] : {std::pair{4, 2}, {6, 3}, {7, 5}}) {
    const auto p = build_subset_protocol(d, m);
    const auto rho = reduced_states(p);
    CMatrix sum = CMatrix::Zero(p.dims.dim_b, p.dims.dim_b);
    const double c = static_cast<double>(binomial(d - 1, m - 1));
    for (const auto& r : rho) sum += c * r;
    REQUIRE(max_abs(sum - CMatrix(static_cast<double>(m) *
                                  CMatrix::Identity(p.dims.dim_b,
                                                    p.dims.dim_b))) < 1e-12);
  }
}

TEST_CASE("classical cheat values are exact rationals") {
  REQUIRE(classical_cheat_values({4, 2}) ==
          std::pair{Rational(1, 2), Rational(1, 2)});
  REQUIRE(classical_cheat_values({2, 1}) ==
          std::pair{Rational(1, 2), Rational(1, 1)});
  REQUIRE(classical_cheat_values({9, 3}) ==
          std::pair{Rational(1, 3), Rational(1, 3)});
}

TEST_CASE("chi-squared critical values match standard tables") {
  REQUIRE(chi_squared_critical(3, 0.999) == Catch::Approx(16.266).margin(5e-3));
  REQUIRE(chi_squared_critical(1, 0.999) == Catch::Approx(10.828).margin(5e-3));
  REQUIRE(chi_squared_critical(9, 0.999) == Catch::Approx(27.877).margin(5e-3));
}

TEST_CASE("honest quantum simulation is uniform and never aborts") {
  const auto p = build_subset_protocol(4, 2);
  const auto r = simulate_honest(p, 7, 100000);
  REQUIRE(r.aborts == 0);
  long total = 0;
  for (long c : r.histogram) total += c;
  REQUIRE(total == 100000);
  REQUIRE(r.chi_squared() < chi_squared_critical(3, 0.999));
  for (const auto& t : r.transcripts) {
    REQUIRE(t.accepted);
    REQUIRE(t.outcome == outcome_of(t.a, t.b, 4));
  }
}

TEST_CASE("single-trial simulation yields one accepted transcript") {
  const auto p = build_subset_protocol(3, 2);
  const auto r = simulate_honest(p, 0, 1);
  REQUIRE(r.transcripts.size() == 1);
  REQUIRE(r.transcripts[0].accepted);
  REQUIRE(r.transcripts[0].outcome >= 1);
  REQUIRE(r.transcripts[0].outcome <= 3);
}

TEST_CASE("classical simulation frequencies stay within five sigma") {
  const ClassicalSubsetProtocol p{5, 2};
  const long n = 100000;
  const auto r = simulate_honest(p, 3, n);
  const double sigma = std::sqrt(0.2 * 0.8 / static_cast<double>(n));
  for (long c : r.histogram) {
    const double freq = static_cast<double>(c) / static_cast<double>(n);
    REQUIRE(std::abs(freq - 0.2) < 5.0 * sigma);
  }
}

TEST_CASE("simulation is deterministic per seed") {
  const auto p = build_subset_protocol(6, 3);
  const auto a = simulate_honest(p, 42, 5000);
  const auto b = simulate_honest(p, 42, 5000);
  REQUIRE(a.histogram == b.histogram);
  const auto c = simulate_honest(p, 43, 5000);
  REQUIRE(a.histogram != c.histogram);
}

TEST_CASE("protocol validation catches broken states") {
  auto p = build_subset_protocol(3, 1);
  p.states[0] *= 0.9;
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
  auto q = build_subset_protocol(3, 1);
  q.states.pop_back();
  REQUIRE_THROWS_AS(q.validate(), std::invalid_argument);
}
