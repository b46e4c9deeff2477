// Gate runner: nine end-to-end checks with pinned tolerances and runtime
// budgets. Prints one [PASS]/[FAIL] line per check and exits nonzero if any
// fail. Unlike the unit suites, every check here exercises public entry
// points only (CLI binary, analyze, balance, verify, qsd, solve).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <dieroll/balancing.hpp>
#include <dieroll/bounds.hpp>
#include <dieroll/cheating.hpp>
#include <dieroll/protocol.hpp>
#include <dieroll/rat.hpp>
#include <dieroll/sdp.hpp>

#include "sdp_fixtures.hpp"
#include "test_util.hpp"

#ifndef DIEROLL_CLI_PATH
#error "DIEROLL_CLI_PATH must point at the built binary"
#endif

namespace {

using namespace dieroll;

struct Gate {
  int id = 0;
  std::string title;
  bool pass = true;
  std::string detail;
  double seconds = 0.0;
  double budget = 0.0;  // 0 = untimed
};

void fail(Gate& g, const std::string& msg) {
  g.pass = false;
  if (!g.detail.empty()) g.detail += "; ";
  g.detail += msg;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

template <class F>
Gate run_gate(int id, const std::string& title, double budget, F&& body) {
  Gate g;
  g.id = id;
  g.title = title;
  g.budget = budget;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(g);
  } catch (const std::exception& e) {
    fail(g, std::string("exception: ") + e.what());
  }
  g.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();
  if (budget > 0.0 && g.seconds > budget)
    fail(g, "runtime " + fmt(g.seconds) + "s exceeds budget " + fmt(budget) +
               "s");
  return g;
}

struct SolvedProduct {
  std::string label;
  int d = 0;
  double product = 0.0;
};

// --- 1: the CLI reproduces the golden percentage table ---------------------

void gate_table(Gate& g) {
  const std::string cmd =
      "\"" DIEROLL_CLI_PATH "\" table --check > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (code != 0) fail(g, "table --check exited with " + std::to_string(code));
}

// --- 2: SDP optima equal the closed forms on all small subset protocols ----

void gate_solver_exactness(Gate& g, std::vector<SolvedProduct>& products) {
  for (int d = 2; d <= 7; ++d) {
    for (int m = 1; m <= d; ++m) {
      if (binomial(d, m) > 21) continue;
      const DricProtocol p = build_subset_protocol(d, m);
      const CheatReport rep = analyze(p, AnalyzeMode::solve);
      if (!rep.bob_solver_primal || !rep.alice_solver_primal) {
        fail(g, p.label + ": solver values missing");
        continue;
      }
      const double bob_err = std::abs(*rep.bob_solver_primal - 1.0 / m);
      const double alice_err =
          std::abs(*rep.alice_solver_primal - static_cast<double>(m) / d);
      if (bob_err > 1e-6)
        fail(g, p.label + ": |bob - 1/m| = " + fmt(bob_err));
      if (alice_err > 1e-6)
        fail(g, p.label + ": |alice - m/D| = " + fmt(alice_err));
      products.push_back(
          {p.label, d, *rep.bob_solver_primal * *rep.alice_solver_primal});
    }
  }
}

// --- 3: strategy and certificate values agree without any solve ------------

void gate_certificate_sandwich(Gate& g) {
  const double tol = 1e-9 + 1e-8;  // 1e-9 + D * (1e-8 / D)
  for (int d = 2; d <= 12; ++d) {
    for (int m = 1; m <= d; ++m) {
      if (binomial(d, m) > 512) continue;
      const DricProtocol p = build_subset_protocol(d, m);
      const CheatReport rep = analyze(p, AnalyzeMode::certify);
      if (!rep.bob_certificate_ok || !rep.alice_certificate_ok) {
        fail(g, p.label + ": certificate rejected");
        continue;
      }
      const double bob_gap = rep.p_bob_upper - rep.p_bob_lower;
      const double alice_gap = rep.p_alice_upper - rep.p_alice_lower;
      if (std::abs(bob_gap) > tol)
        fail(g, p.label + ": bob sandwich gap " + fmt(bob_gap));
      if (std::abs(alice_gap) > tol)
        fail(g, p.label + ": alice sandwich gap " + fmt(alice_gap));
      if (std::abs(rep.p_bob_lower - 1.0 / m) > 1e-9)
        fail(g, p.label + ": bob strategy value off 1/m");
      if (std::abs(rep.p_alice_lower - static_cast<double>(m) / d) > 1e-9)
        fail(g, p.label + ": alice strategy value off m/D");
    }
  }
}

// --- 4: the product of optimal cheats saturates the 1/D floor --------------

void gate_product_floor(Gate& g, const std::vector<SolvedProduct>& products) {
  for (int d = 2; d <= 12; ++d) {
    for (int m = 1; m <= d; ++m) {
      if (binomial(d, m) > 512) continue;
      const Rational prod = Rational(m, d) * Rational(1, m);
      if (prod != Rational(1, d))
        fail(g, "exact product != 1/D at D=" + std::to_string(d) +
                    " m=" + std::to_string(m));
    }
  }
  if (products.empty()) fail(g, "no solved protocols were collected");
  for (const auto& sp : products) {
    const double floor_v = 1.0 / sp.d - 1e-6;
    if (sp.product < floor_v)
      fail(g, sp.label + ": solved product " + fmt(sp.product) + " < " +
                  fmt(floor_v));
  }
}

// --- 5: balancing pipeline certifies at the closed-form bound --------------

void gate_balanced_pipeline(Gate& g, std::vector<SolvedProduct>& products) {
  for (int d : {3, 5, 6, 7, 8, 10}) {
    const BalanceResult res = best_balanced_subset(d);
    const double qb = to_double(quantum_bound(d));
    const double slack = 1e-8 + kDefaultTransportZeta * (d - 1);
    const auto reduced = reduced_states(res.transformed);
    const auto brep = verify_bob_certificate(reduced, res.certificates.bob);
    const auto arep = verify_alice_certificate(reduced, res.certificates.alice);
    if (!brep.ok) fail(g, "D=" + std::to_string(d) + ": bob cert rejected");
    if (!arep.ok) fail(g, "D=" + std::to_string(d) + ": alice cert rejected");
    if (brep.value > qb + 1e-6 + slack)
      fail(g, "D=" + std::to_string(d) + ": bob value " + fmt(brep.value) +
                  " above bound " + fmt(qb));
    if (arep.s > qb + 1e-6 + slack)
      fail(g, "D=" + std::to_string(d) + ": alice value " + fmt(arep.s) +
                  " above bound " + fmt(qb));
    if (d == 3 || d == 5 || d == 6) {
      const CheatReport rep = analyze(res.transformed, AnalyzeMode::solve);
      if (!rep.bob_solver_primal || !rep.alice_solver_primal) {
        fail(g, "D=" + std::to_string(d) + ": transformed solve incomplete");
        continue;
      }
      if (*rep.bob_solver_primal > qb + 1e-6 + slack)
        fail(g, "D=" + std::to_string(d) + ": solved bob " +
                    fmt(*rep.bob_solver_primal) + " above bound");
      if (*rep.alice_solver_primal > qb + 1e-6 + slack)
        fail(g, "D=" + std::to_string(d) + ": solved alice " +
                    fmt(*rep.alice_solver_primal) + " above bound");
      products.push_back(
          {"balanced D=" + std::to_string(d), d,
           *rep.bob_solver_primal * *rep.alice_solver_primal});
    }
  }
}

// --- 6: certificate values transport by the closed-form laws ---------------

void gate_transport_laws(Gate& g) {
  for (int seed = 1; seed <= 20; ++seed) {
    auto rng = testutil::rng_for(900 + seed);
    const int d = 3 + static_cast<int>(rng() % 5);   // 3..7
    const int na = 2 + static_cast<int>(rng() % 3);  // 2..4
    const int nb = 2 + static_cast<int>(rng() % 2);  // 2..3 (<= d)
    DricProtocol p;
    p.d = d;
    p.dims = {na, nb};
    p.label = "random seed " + std::to_string(seed);
    for (int a = 0; a < d; ++a)
      p.states.push_back(testutil::random_state(na * nb, rng));
    p.validate();
    const double t =
        0.1 + 0.8 * std::uniform_real_distribution<double>(0, 1)(rng);

    // Feasible input certificates for an arbitrary protocol: a scaled
    // identity dominating every rho_a / D, and diagonal Z_a with
    // <Z_a^{-1}, rho_a> = D / (1 + u_a) <= D.
    const auto reduced = reduced_states(p);
    double lam = 0.0;
    for (const auto& rho : reduced)
      lam = std::max(lam, max_eigenvalue(rho));
    BobCertificate bc{(lam / d) * CMatrix::Identity(nb, nb)};
    const double beta = nb * lam / d;
    AliceCertificate ac;
    ac.form = CertificateForm::inverse_form;
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      const double c =
          (1.0 + 0.5 * std::uniform_real_distribution<double>(0, 1)(rng)) / d;
      ac.z.push_back(c * CMatrix::Identity(nb, nb));
      s += c;
    }
    ac.s = s;
    if (!verify_bob_certificate(reduced, bc).ok ||
        !verify_alice_certificate(reduced, ac).ok) {
      fail(g, p.label + ": input certificates rejected");
      continue;
    }

    for (const Direction dir : {Direction::reduce_bob, Direction::reduce_alice}) {
      const CertificatePair out = transport_certificates(p, dir, t, {bc, ac});
      const DricProtocol ext = dir == Direction::reduce_bob
                                   ? extend_reduce_bob(p, t)
                                   : extend_reduce_alice(p, t);
      const auto ext_reduced = reduced_states(ext);
      const auto br = verify_bob_certificate(ext_reduced, out.bob);
      const auto ar = verify_alice_certificate(ext_reduced, out.alice);
      if (!br.ok || !ar.ok) {
        fail(g, p.label + ": transported certificates rejected");
        continue;
      }
      const bool to_bob = dir == Direction::reduce_bob;
      const double bob_law = (1 - t) * beta + (to_bob ? t / d : t);
      const double alice_law = (1 - t) * s + (to_bob ? t : t / d);
      const double alice_slack =
          to_bob ? 0.0 : kDefaultTransportZeta * (d - 1);
      if (std::abs(br.value - bob_law) > 1e-6)
        fail(g, p.label + ": bob law off by " + fmt(br.value - bob_law));
      if (std::abs(ar.s - alice_law) > 1e-6 + alice_slack)
        fail(g, p.label + ": alice law off by " + fmt(ar.s - alice_law));
    }
  }
}

// --- 7: discrimination bound below optimum; certificate witnesses tight ----

void gate_discrimination(Gate& g) {
  for (int seed = 1; seed <= 100; ++seed) {
    auto rng = testutil::rng_for(seed);
    const int n = 2 + static_cast<int>(rng() % 3);    // 2..4 states
    const int dim = 2 + static_cast<int>(rng() % 5);  // 2..6
    QsdEnsemble e;
    for (int i = 0; i < n; ++i) {
      CMatrix rho = testutil::random_psd(dim, rng);
      rho += 1e-6 * CMatrix::Identity(dim, dim);
      rho /= rho.trace().real();
      e.states.push_back(CMatrix(0.5 * (rho + rho.adjoint())));
    }
    std::vector<double> pri(n);
    for (auto& v : pri)
      v = 0.05 + std::uniform_real_distribution<double>(0, 1)(rng);
    const double total = std::accumulate(pri.begin(), pri.end(), 0.0);
    for (auto& v : pri) v /= total;
    pri[0] += 1.0 - std::accumulate(pri.begin(), pri.end(), 0.0);
    e.priors = pri;
    e.validate();

    std::vector<CMatrix> wit;
    for (int i = 0; i < n; ++i) {
      CMatrix w = testutil::random_psd(dim, rng);
      w += 1e-3 * CMatrix::Identity(dim, dim);
      w /= inner(w, e.states[i]);  // scale to <W, rho> = 1
      wit.push_back(w);
    }
    const double bound = qsd_lower_bound(wit, e);
    const double opt = qsd_optimum(e);
    if (bound > opt + 1e-7)
      fail(g, "seed " + std::to_string(seed) + ": bound " + fmt(bound) +
                  " above optimum " + fmt(opt));
  }

  for (int d = 2; d <= 7; ++d) {
    for (int m = 1; m <= d; ++m) {
      const auto cert = subset_alice_certificate(d, m);
      const auto wit = certificate_to_qsd_witness(cert, d);
      const QsdEnsemble e =
          uniform_ensemble(reduced_states(build_subset_protocol(d, m)));
      const double bound = qsd_lower_bound(wit, e);
      const double opt = qsd_optimum(e);
      const double tightness = d * cert.eps + 1e-7;
      if (opt - bound > tightness)
        fail(g, "D=" + std::to_string(d) + " m=" + std::to_string(m) +
                    ": optimum - bound = " + fmt(opt - bound) + " > " +
                    fmt(tightness));
      if (bound > opt + 1e-7)
        fail(g, "D=" + std::to_string(d) + " m=" + std::to_string(m) +
                    ": bound above optimum");
    }
  }
}

// --- 8: solver oracle agreement and weak duality ---------------------------

void gate_solver_oracle(Gate& g) {
  for (int n = 2; n <= 12; ++n) {
    for (int seed = 0; seed < 20; ++seed) {
      auto rng = testutil::rng_for(1000 * n + seed);
      const CMatrix c = (seed % 2 == 0)
                            ? testutil::random_hermitian(n, rng)
                            : testutil::random_real_symmetric(n, rng);
      const double oracle = max_eigenvalue(c);
      const auto sol = solve(testutil::lambda_max_problem(c));
      if (sol.status != SdpStatus::optimal) {
        fail(g, "n=" + std::to_string(n) + " seed " + std::to_string(seed) +
                    ": " + sol.message);
        continue;
      }
      if (std::abs(sol.primal_value - oracle) > 1e-7)
        fail(g, "n=" + std::to_string(n) + " seed " + std::to_string(seed) +
                    ": off oracle by " + fmt(sol.primal_value - oracle));
    }
  }
  auto rng = testutil::rng_for(24);
  for (int rep = 0; rep < 200; ++rep) {
    const auto pair = testutil::random_feasible_pair(rng);
    const auto report = verify_feasible_pair(pair.prob, pair.x, pair.y);
    if (!report.primal_ok || !report.dual_ok)
      fail(g, "pair " + std::to_string(rep) + ": infeasible by construction");
    if (report.gap < -1e-9)
      fail(g, "pair " + std::to_string(rep) + ": duality gap " +
                  fmt(report.gap));
  }
}

// --- 9: honest runs produce a uniform die roll -----------------------------

void gate_uniformity(Gate& g) {
  for (int d : {2, 4, 6, 10}) {
    const int m = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
    const DricProtocol p = build_subset_protocol(d, m);
    const auto r = simulate_honest(p, 0xD1CE + d, 100000);
    if (r.aborts != 0)
      fail(g, "D=" + std::to_string(d) + ": honest run aborted");
    const double stat = r.chi_squared();
    const double crit = chi_squared_critical(d - 1, 0.999);
    if (stat >= crit)
      fail(g, "D=" + std::to_string(d) + ": chi-squared " + fmt(stat) +
                  " >= critical " + fmt(crit));
  }
}

}  // namespace

int main() {
  std::vector<SolvedProduct> products;
  std::vector<Gate> gates;
  gates.push_back(run_gate(
      1, "CLI table --check reproduces the golden percentages for D=2..10",
      1.0, gate_table));
  gates.push_back(run_gate(
      2, "SDP optima equal 1/m and m/D on all subset protocols with C<=21",
      120.0, [&](Gate& g) { gate_solver_exactness(g, products); }));
  gates.push_back(run_gate(
      3, "strategy/certificate sandwich pins both cheat values, no solves",
      30.0, gate_certificate_sandwich));
  gates.push_back(run_gate(
      5, "balanced protocols verify and certify at the closed-form bound",
      300.0, [&](Gate& g) { gate_balanced_pipeline(g, products); }));
  gates.push_back(run_gate(
      4, "cheat product: exactly 1/D closed form, >= 1/D - 1e-6 solved", 0.0,
      [&](Gate& g) { gate_product_floor(g, products); }));
  gates.push_back(run_gate(
      6, "certificate values obey the transport laws on random protocols",
      0.0, gate_transport_laws));
  gates.push_back(run_gate(
      7, "discrimination bound <= optimum; certificate witnesses tight",
      120.0, gate_discrimination));
  gates.push_back(run_gate(
      8, "solver matches the eigenvalue oracle; weak duality holds", 0.0,
      gate_solver_oracle));
  gates.push_back(run_gate(
      9, "honest simulation passes the 99.9% uniformity test", 30.0,
      gate_uniformity));

  std::sort(gates.begin(), gates.end(),
            [](const Gate& a, const Gate& b) { return a.id < b.id; });
  bool all_pass = true;
  for (const auto& g : gates) {
    all_pass = all_pass && g.pass;
    std::printf("[%s] %d. %s (%.2fs", g.pass ? "PASS" : "FAIL", g.id,
                g.title.c_str(), g.seconds);
    if (g.budget > 0.0) std::printf(" / budget %.0fs", g.budget);
    std::printf(")\n");
    if (!g.pass) std::printf("       %s\n", g.detail.c_str());
  }
  std::printf("%s\n", all_pass ? "all criteria satisfied"
                               : "ACCEPTANCE FAILED");
  return all_pass ? 0 : 1;
}
