#pragma once

// Closed-form reference bounds on cheating probabilities for die-rolling
// protocols, exact where the formulas are rational, plus the minimum-error
// state-discrimination bound used to certify them from witness operators.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <dieroll/cheating.hpp>
#include <dieroll/rat.hpp>

namespace dieroll {

namespace detail {
inline void require_sides(int d, const char* who) {
  if (d < 2)
    throw std::invalid_argument(std::string(who) + ": need D >= 2");
}
}  // namespace detail

/// Best max-cheat value achievable with classical subset commitments:
/// min{ ceil(sqrt(D))/D, 1/floor(sqrt(D)) }.
inline Rational classical_bound(int d) {
  detail::require_sides(d, "classical_bound");
  const long long f = isqrt_floor(d), c = isqrt_ceil(d);
  return std::min(Rational(c, d), Rational(1, f));
}

/// Universal floor on max{P_A*, P_B*} for any D-outcome protocol: 1/sqrt(D).
inline double kitaev_bound(int d) {
  detail::require_sides(d, "kitaev_bound");
  return 1.0 / std::sqrt(static_cast<double>(d));
}

/// Max cheat value of the earlier three-message integer-commitment protocol:
/// max{ (D+1)/(2D), (2D-1)/D^2 }.
inline Rational as10_bound(int d) {
  detail::require_sides(d, "as10_bound");
  return std::max(Rational(d + 1, 2LL * d),
                  Rational(2LL * d - 1, static_cast<long long>(d) * d));
}

/// Max cheat value reached by balancing the better of the two square-root
/// subset sizes: min{ (D+f)/(D(f+1)), (1+c)/(D+c) } with f = floor(sqrt(D)),
/// c = ceil(sqrt(D)). Agrees with best_balanced_subset(D).bound.
inline Rational quantum_bound(int d) {
  detail::require_sides(d, "quantum_bound");
  const long long f = isqrt_floor(d), c = isqrt_ceil(d);
  return std::min(Rational(d + f, d * (f + 1)), Rational(1 + c, d + c));
}

/// floor(100 * v) for v >= 0 (companion to the exact rational version).
inline int floor_percent(double v) {
  if (v < 0.0) throw std::invalid_argument("floor_percent: negative value");
  return static_cast<int>(std::floor(100.0 * v));
}

struct BoundsRow {
  int d = 0;
  Rational classical;
  int classical_pct = 0;
  Rational quantum;
  int quantum_pct = 0;
  double kitaev = 0.0;
  int kitaev_pct = 0;
  Rational as10;
  int as10_pct = 0;
};

inline BoundsRow bounds_row(int d) {
  BoundsRow row;
  row.d = d;
  row.classical = classical_bound(d);
  row.classical_pct = floor_percent(row.classical);
  row.quantum = quantum_bound(d);
  row.quantum_pct = floor_percent(row.quantum);
  row.kitaev = kitaev_bound(d);
  row.kitaev_pct = floor_percent(row.kitaev);
  row.as10 = as10_bound(d);
  row.as10_pct = floor_percent(row.as10);
  return row;
}

inline std::vector<BoundsRow> build_bounds_table(int d_max, int d_min = 2) {
  if (d_min < 2 || d_max < d_min)
    throw std::invalid_argument("build_bounds_table: need 2 <= d_min <= d_max");
  std::vector<BoundsRow> rows;
  rows.reserve(d_max - d_min + 1);
  for (int d = d_min; d <= d_max; ++d) rows.push_back(bounds_row(d));
  return rows;
}

// ---------------------------------------------------------------------------
// Minimum-error discrimination of an ensemble of states

struct QsdEnsemble {
  std::vector<CMatrix> states;  // density matrices, all of equal dimension
  std::vector<double> priors;   // nonnegative, summing to 1

  int size() const { return static_cast<int>(states.size()); }
  int dim() const {
    return states.empty() ? 0 : static_cast<int>(states[0].rows());
  }

  void validate() const {
    if (states.empty())
      throw std::invalid_argument("QsdEnsemble: no states");
    if (priors.size() != states.size())
      throw std::invalid_argument("QsdEnsemble: priors size mismatch");
    const int n = dim();
    double prior_sum = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
      const CMatrix& rho = states[i];
      if (rho.rows() != n || rho.cols() != n)
        throw std::invalid_argument("QsdEnsemble: state dimension mismatch");
      if (hermiticity_defect(rho) > 1e-10)
        throw std::invalid_argument("QsdEnsemble: state " + std::to_string(i) +
                                    " is not Hermitian");
      if (std::abs(rho.trace().real() - 1.0) > 1e-10)
        throw std::invalid_argument("QsdEnsemble: state " + std::to_string(i) +
                                    " is not trace-1");
      if (min_eigenvalue(rho) < -1e-10)
        throw std::invalid_argument("QsdEnsemble: state " + std::to_string(i) +
                                    " is not positive semidefinite");
      if (!(priors[i] >= 0.0))
        throw std::invalid_argument("QsdEnsemble: negative prior " +
                                    std::to_string(i));
      prior_sum += priors[i];
    }
    if (std::abs(prior_sum - 1.0) > 1e-12)
      throw std::invalid_argument("QsdEnsemble: priors sum to " +
                                  std::to_string(prior_sum) + ", expected 1");
  }
};

inline QsdEnsemble uniform_ensemble(std::vector<CMatrix> states) {
  QsdEnsemble e;
  const double p = 1.0 / static_cast<double>(states.size());
  e.priors.assign(states.size(), p);
  e.states = std::move(states);
  return e;
}

/// Optimal success probability of identifying which ensemble member was
/// drawn; solved as the POVM optimization (value of the best strategy).
inline double qsd_optimum(const QsdEnsemble& e, const SolveOptions& opts = {}) {
  e.validate();
  if (e.dim() > kBobSolveCap)
    throw std::invalid_argument("qsd_optimum: dimension " +
                                std::to_string(e.dim()) +
                                " above solve cap " +
                                std::to_string(kBobSolveCap));
  const SdpProblem prob = discrimination_sdp(e.states, e.priors);
  const SdpSolution sol = solve(prob, opts);
  if (sol.status != SdpStatus::optimal)
    throw std::runtime_error("qsd_optimum: solver did not converge: " +
                             (sol.message.empty() ? to_string(sol.status)
                                                  : sol.message));
  return sol.primal_value;
}

/// Guaranteed-achievable success probability from witness operators W_i
/// satisfying <W_i, rho_i> <= 1: returns lambda_min((sum_i W_i^{-1})^{-1}).
/// Reads only the states (never the priors); the bound holds for any priors.
inline double qsd_lower_bound(const std::vector<CMatrix>& witnesses,
                              const QsdEnsemble& e) {
  e.validate();
  const int n = e.size();
  if (static_cast<int>(witnesses.size()) != n)
    throw std::invalid_argument("qsd_lower_bound: need one witness per state");
  const int dim = e.dim();

  CMatrix inv_sum = CMatrix::Zero(dim, dim);
  double worst_inner = -1.0;
  int worst_index = -1;
  for (int i = 0; i < n; ++i) {
    if (witnesses[i].rows() != dim || witnesses[i].cols() != dim)
      throw std::invalid_argument("qsd_lower_bound: witness " +
                                  std::to_string(i) + " dimension mismatch");
    const CMatrix w = 0.5 * (witnesses[i] + witnesses[i].adjoint());
    Eigen::LLT<CMatrix> llt(w);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("qsd_lower_bound: witness " +
                                  std::to_string(i) +
                                  " is not positive definite");
    const double ip = inner(w, e.states[i]);
    if (ip > worst_inner) {
      worst_inner = ip;
      worst_index = i;
    }
    // Re-symmetrize the solved inverse: exact arithmetic keeps it Hermitian,
    // floating point does not quite.
    const CMatrix wi = llt.solve(CMatrix::Identity(dim, dim));
    inv_sum += 0.5 * (wi + wi.adjoint());
  }
  if (worst_inner > 1.0 + 1e-10) {
    std::ostringstream msg;
    msg << "qsd_lower_bound: witness " << worst_index
        << " violates <W, rho> <= 1 (value " << worst_inner << ")";
    throw std::invalid_argument(msg.str());
  }
  // lambda_min(S^{-1}) = 1 / lambda_max(S) for positive definite S.
  return 1.0 / max_eigenvalue(inv_sum);
}

/// Canonical feasible witnesses for a bare ensemble: each W_i is the
/// projector onto its state's support plus weight 1/(n*eps) off-support,
/// normalized so <W_i, rho_i> = 1 exactly. For orthogonal pure states the
/// resulting witness bound approaches 1 as eps shrinks; for full-rank states
/// every W_i is the identity. Default eps = 1e-8 / n.
inline std::vector<CMatrix> support_witnesses(const QsdEnsemble& e,
                                              double support_tol = 1e-9,
                                              double eps = -1.0) {
  e.validate();
  const int n = e.size();
  const int dim = e.dim();
  if (eps <= 0.0) eps = 1e-8 / n;
  if (!(support_tol > 0.0))
    throw std::invalid_argument("support_witnesses: need support_tol > 0");
  std::vector<CMatrix> out;
  out.reserve(n);
  const double off_weight = 1.0 / (n * eps);
  for (int i = 0; i < n; ++i) {
    const EighResult es = eigh(e.states[i]);
    CMatrix w = CMatrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) {
      const CVector v = es.eigenvectors.col(k);
      w += (es.eigenvalues(k) > support_tol ? 1.0 : off_weight) *
           (v * v.adjoint());
    }
    w = 0.5 * (w + w.adjoint());
    const double ip = inner(w, e.states[i]);
    if (!(ip > 0.0))
      throw std::invalid_argument(
          "support_witnesses: state " + std::to_string(i) +
          " has no overlap with its own support (degenerate input)");
    out.push_back(CMatrix(w / ip));
  }
  return out;
}

/// Witnesses W_a = (D * Z_a)^{-1} from an inverse-form commitment
/// certificate; feasible for qsd_lower_bound because <Z_a^{-1}, rho_a> <= D.
inline std::vector<CMatrix> certificate_to_qsd_witness(
    const AliceCertificate& cert, int d) {
  detail::require_sides(d, "certificate_to_qsd_witness");
  if (cert.form != CertificateForm::inverse_form)
    throw std::invalid_argument(
        "certificate_to_qsd_witness: need an inverse-form certificate");
  if (static_cast<int>(cert.z.size()) != d)
    throw std::invalid_argument(
        "certificate_to_qsd_witness: certificate has " +
        std::to_string(cert.z.size()) + " blocks, expected " +
        std::to_string(d));
  std::vector<CMatrix> out;
  out.reserve(d);
  for (int a = 0; a < d; ++a) {
    const CMatrix scaled =
        0.5 * static_cast<double>(d) * (cert.z[a] + cert.z[a].adjoint());
    Eigen::LLT<CMatrix> llt(scaled);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("certificate_to_qsd_witness: Z block " +
                                  std::to_string(a) +
                                  " is not positive definite");
    const int dim = static_cast<int>(scaled.rows());
    const CMatrix w = llt.solve(CMatrix::Identity(dim, dim));
    out.push_back(CMatrix(0.5 * (w + w.adjoint())));
  }
  return out;
}

}  // namespace dieroll
