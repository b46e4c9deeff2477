// Die-rolling-by-integer-commitment protocols: the bipartite state family
// representation, the subset-state construction, the classical subset
// protocol, and honest-execution simulation.
#pragma once

#include <dieroll/matrix.hpp>
#include <dieroll/rat.hpp>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace dieroll {

/// Lexicographically ordered m-subsets of {1,...,d}.
inline std::vector<std::vector<int>> subsets_lex(int d, int m) {
  if (m < 0 || m > d) throw std::invalid_argument("subsets_lex: bad m");
  std::vector<std::vector<int>> out;
  std::vector<int> cur(m);
  for (int i = 0; i < m; ++i) cur[i] = i + 1;
  while (true) {
    out.push_back(cur);
    int i = m - 1;
    while (i >= 0 && cur[i] == d - (m - 1 - i)) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < m; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// A D-outcome die-rolling protocol given by the committed state family
/// |psi_a> on A (x) B. Bob's verification measurement is the projector
/// onto |psi_a| once a is revealed.
struct DricProtocol {
  int d = 0;
  BipartiteDims dims;
  std::vector<CVector> states;  // length d, each of dimension dims.total()
  std::string label;

  // Set when constructed by build_subset_protocol; enables closed-form
  // strategies and certificates.
  std::optional<std::pair<int, int>> subset_params;

  void validate() const {
    dims.validate();
    if (d < 1) throw std::invalid_argument("DricProtocol: D must be >= 1");
    if (static_cast<int>(states.size()) != d)
      throw std::invalid_argument("DricProtocol: need exactly D states");
    for (const auto& s : states) {
      if (s.size() != dims.total())
        throw std::invalid_argument("DricProtocol: state dimension mismatch");
      if (std::abs(s.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("DricProtocol: state is not unit norm");
    }
  }
};

struct ClassicalSubsetProtocol {
  int d = 0;
  int m = 0;

  void validate() const {
    if (d < 1 || m < 1 || m > d)
      throw std::invalid_argument("ClassicalSubsetProtocol: need 1 <= m <= D");
  }
};

/// Outcome map d = ((a-1 + b-1) mod D) + 1 over 1-based a, b. For fixed b
/// the map a -> d is a bijection on [D].
inline int outcome_of(int a, int b, int d_sides) {
  return (a - 1 + b - 1) % d_sides + 1;
}

struct HonestTranscript {
  int a = 0;
  int b = 0;
  int outcome = 0;
  bool accepted = false;
};

inline constexpr int kDefaultDimensionCap = 512;

/// The subset-state protocol: basis vectors indexed by the lexicographically
/// ordered m-subsets of [D], and
///   |psi_a> = binom(D-1, m-1)^{-1/2} sum_{S : a in S} |S>|S>.
inline DricProtocol build_subset_protocol(int d, int m,
                                          int dim_cap = kDefaultDimensionCap) {
  if (d < 1 || m < 1 || m > d)
    throw std::invalid_argument("build_subset_protocol: need 1 <= m <= D");
  const long long dim = binomial(d, m);
  if (dim > dim_cap)
    throw std::invalid_argument("build_subset_protocol: C(D,m) = " +
                                std::to_string(dim) + " exceeds cap " +
                                std::to_string(dim_cap));
  const auto subs = subsets_lex(d, m);
  const int n = static_cast<int>(dim);
  const double amp = 1.0 / std::sqrt(static_cast<double>(binomial(d - 1, m - 1)));

  DricProtocol p;
  p.d = d;
  p.dims = {n, n};
  p.label = "subset D=" + std::to_string(d) + " m=" + std::to_string(m);
  p.subset_params = {{d, m}};
  p.states.resize(d);
  for (int a = 1; a <= d; ++a) {
    CVector psi = CVector::Zero(n * n);
    for (int s = 0; s < n; ++s) {
      const auto& set = subs[s];
      if (std::find(set.begin(), set.end(), a) != set.end())
        psi(s * n + s) = amp;
    }
    p.states[a - 1] = psi;
  }
  return p;
}

/// rho_a = Tr_A(|psi_a><psi_a|), one per outcome.
inline std::vector<CMatrix> reduced_states(const DricProtocol& p) {
  std::vector<CMatrix> out;
  out.reserve(p.states.size());
  for (const auto& s : p.states)
    out.push_back(partial_trace_A_pure(s, p.dims));
  return out;
}

/// Exact closed forms P_A* = m/D, P_B* = 1/m.
inline std::pair<Rational, Rational> classical_cheat_values(
    const ClassicalSubsetProtocol& p) {
  p.validate();
  return {Rational(p.m, p.d), Rational(1, p.m)};
}

/// Draw from {0,...,n-1}; rejection sampling so results do not depend on the
/// standard library's distribution implementation.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

struct SimulationResult {
  std::vector<long> histogram;  // outcome counts, index d-1
  std::vector<HonestTranscript> transcripts;
  long aborts = 0;

  /// Pearson chi-squared statistic against the uniform distribution.
  double chi_squared() const {
    long total = 0;
    for (long c : histogram) total += c;
    const double expect =
        static_cast<double>(total) / static_cast<double>(histogram.size());
    double stat = 0;
    for (long c : histogram) {
      const double diff = static_cast<double>(c) - expect;
      stat += diff * diff / expect;
    }
    return stat;
  }
};

/// Upper critical value of the chi-squared distribution: the statistic
/// exceeds this with probability 1 - level under the null hypothesis.
inline double chi_squared_critical(int dof, double level) {
  if (dof < 1) throw std::invalid_argument("chi_squared_critical: dof >= 1");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("chi_squared_critical: level in (0,1)");
  return boost::math::quantile(boost::math::chi_squared(dof), level);
}

/// Honest run of the quantum protocol: Alice commits a uniform a, Bob sends a
/// uniform b, Alice reveals, Bob's projective check accepts with probability
/// |<psi_a|psi_a>|^2 = 1 for unit-norm states.
inline SimulationResult simulate_honest(const DricProtocol& p,
                                        std::uint64_t seed, long trials) {
  p.validate();
  if (trials < 1) throw std::invalid_argument("simulate_honest: trials >= 1");
  std::mt19937_64 rng(seed);
  SimulationResult r;
  r.histogram.assign(p.d, 0);
  r.transcripts.reserve(trials);
  std::vector<double> accept_prob(p.d);
  for (int a = 0; a < p.d; ++a) {
    const double n2 = p.states[a].squaredNorm();
    accept_prob[a] = n2 * n2;
  }
  for (long t = 0; t < trials; ++t) {
    HonestTranscript tr;
    tr.a = static_cast<int>(uniform_below(rng, p.d)) + 1;
    tr.b = static_cast<int>(uniform_below(rng, p.d)) + 1;
    tr.accepted = accept_prob[tr.a - 1] >= 1.0 - 1e-12;
    tr.outcome = outcome_of(tr.a, tr.b, p.d);
    if (tr.accepted)
      ++r.histogram[tr.outcome - 1];
    else
      ++r.aborts;
    r.transcripts.push_back(tr);
  }
  return r;
}

/// Honest run of the classical protocol: Bob picks a uniform m-subset, Alice
/// a uniform element of it.
inline SimulationResult simulate_honest(const ClassicalSubsetProtocol& p,
                                        std::uint64_t seed, long trials) {
  p.validate();
  if (trials < 1) throw std::invalid_argument("simulate_honest: trials >= 1");
  std::mt19937_64 rng(seed);
  const auto subs = subsets_lex(p.d, p.m);
  SimulationResult r;
  r.histogram.assign(p.d, 0);
  r.transcripts.reserve(trials);
  for (long t = 0; t < trials; ++t) {
    const auto& set = subs[uniform_below(rng, subs.size())];
    const int d = set[uniform_below(rng, set.size())];
    HonestTranscript tr;
    tr.a = d;  // Alice's selection doubles as the outcome
    tr.b = 0;
    tr.outcome = d;
    tr.accepted = true;
    ++r.histogram[d - 1];
    r.transcripts.push_back(tr);
  }
  return r;
}

}  // namespace dieroll
