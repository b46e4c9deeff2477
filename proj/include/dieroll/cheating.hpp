// Optimal-cheating analysis for die-rolling protocols: explicit strategies
// (lower bounds), dual certificates (upper bounds), the SDP formulations for
// both parties, and exact closed forms for the subset construction.
#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "matrix.hpp"
#include "protocol.hpp"
#include "sdp.hpp"

namespace dieroll {

// ---------------------------------------------------------------------------
// Strategies and certificates

/// Cheating Bob declares outcome `a` by measuring his half with POVM element
/// `measurement[a-1]`; the success probability against honest Alice is
/// (1/D) sum_a <rho_a, M_a>.
struct BobStrategy {
  std::vector<CMatrix> measurement;
};

/// Feasible point of Bob's dual SDP: X >= rho_a / D for every outcome a.
/// Certifies P_B* <= Tr(X).
struct BobCertificate {
  CMatrix x;
};

/// Two interchangeable ways to state Alice's certificate, differing only in
/// how the per-outcome condition is checked:
///  - operator_form:  Z_a >= 0 and I_A (x) Z_a >= (1/D) |psi_a><psi_a|
///  - inverse_form:   Z_a > 0  and <Z_a^{-1}, rho_a> <= D
/// For positive definite Z_a the two conditions are equivalent; the inverse
/// form only touches the B side, so it stays cheap in large dimensions.
enum class CertificateForm { operator_form, inverse_form };

inline const char* to_string(CertificateForm f) {
  return f == CertificateForm::operator_form ? "operator" : "inverse";
}

/// Feasible point of Alice's dual SDP: per-outcome condition (see
/// CertificateForm) plus s*I >= sum_a Z_a. Certifies P_A* <= s.
struct AliceCertificate {
  double s = 0.0;
  std::vector<CMatrix> z;  // Z_a acting on B, one per outcome
  CertificateForm form = CertificateForm::operator_form;
  double eps = 0.0;  // diagonal padding used by closed-form constructions
};

/// Cheating Alice commits so that Bob's marginal is `commitment`; after
/// Bob's reply b she holds the joint state purifications[b-1] (pure case) or
/// joint_states[b-1] (general case) and reveals the unique a that maps reply
/// b to `target`. Exactly one of the two representations is populated.
struct AliceStrategy {
  CMatrix commitment;
  std::vector<CVector> purifications;
  std::vector<CMatrix> joint_states;
  int target = 1;

  bool pure() const { return !purifications.empty(); }
};

/// The unique reveal a with outcome_of(a, b, d) == target (1-based).
inline int reveal_for_outcome(int target, int b, int d_sides) {
  return ((target - b) % d_sides + d_sides) % d_sides + 1;
}

// ---------------------------------------------------------------------------
// Strategy evaluation and sanity checks

inline double bob_strategy_value(const std::vector<CMatrix>& reduced,
                                 const BobStrategy& strat) {
  const int d = static_cast<int>(reduced.size());
  if (d == 0 || static_cast<int>(strat.measurement.size()) != d)
    throw std::invalid_argument(
        "bob_strategy_value: need one POVM element per outcome");
  double acc = 0.0;
  for (int a = 0; a < d; ++a) acc += inner(reduced[a], strat.measurement[a]);
  return acc / d;
}

inline double bob_strategy_value(const DricProtocol& p,
                                 const BobStrategy& strat) {
  return bob_strategy_value(reduced_states(p), strat);
}

inline double alice_strategy_value(const DricProtocol& p,
                                   const AliceStrategy& strat) {
  const int d = p.d;
  const auto count = strat.pure() ? strat.purifications.size()
                                  : strat.joint_states.size();
  if (static_cast<int>(count) != d)
    throw std::invalid_argument(
        "alice_strategy_value: need one joint state per reply");
  double acc = 0.0;
  for (int b = 1; b <= d; ++b) {
    const CVector& psi = p.states[reveal_for_outcome(strat.target, b, d) - 1];
    if (strat.pure()) {
      acc += std::norm(psi.dot(strat.purifications[b - 1]));
    } else {
      const CMatrix& sigma = strat.joint_states[b - 1];
      acc += (psi.adjoint() * sigma * psi)(0, 0).real();
    }
  }
  return acc / d;
}

struct StrategyCheck {
  bool ok = false;
  double max_violation = 0.0;
};

/// POVM validity: every element PSD, elements sum to the identity.
inline StrategyCheck check_bob_strategy(const BobStrategy& strat,
                                        double tol = 1e-7) {
  if (strat.measurement.empty())
    throw std::invalid_argument("check_bob_strategy: empty POVM");
  const int n = static_cast<int>(strat.measurement[0].rows());
  CMatrix sum = CMatrix::Zero(n, n);
  double viol = 0.0;
  for (const auto& m : strat.measurement) {
    if (m.rows() != n || m.cols() != n)
      throw std::invalid_argument("check_bob_strategy: element size mismatch");
    viol = std::max(viol, hermiticity_defect(m));
    viol = std::max(
        viol, std::max(0.0, -min_eigenvalue(CMatrix(0.5 * (m + m.adjoint())))));
    sum += m;
  }
  viol = std::max(viol, max_abs(sum - CMatrix::Identity(n, n)));
  return {viol <= tol, viol};
}

/// Commitment consistency: Bob's marginal is a density matrix and every
/// per-reply joint state reduces to it (so Bob cannot tell replies apart
/// before Alice reveals).
inline StrategyCheck check_alice_strategy(const DricProtocol& p,
                                          const AliceStrategy& strat,
                                          double tol = 1e-7) {
  const int d = p.d;
  const auto count = strat.pure() ? strat.purifications.size()
                                  : strat.joint_states.size();
  if (static_cast<int>(count) != d)
    throw std::invalid_argument(
        "check_alice_strategy: need one joint state per reply");
  double viol = hermiticity_defect(strat.commitment);
  viol = std::max(viol, std::abs(strat.commitment.trace().real() - 1.0));
  viol = std::max(viol, std::max(0.0, -min_eigenvalue(CMatrix(
                            0.5 * (strat.commitment +
                                   strat.commitment.adjoint())))));
  for (int b = 0; b < d; ++b) {
    CMatrix marginal;
    if (strat.pure()) {
      marginal = partial_trace_A_pure(strat.purifications[b], p.dims);
    } else {
      const CMatrix& sigma = strat.joint_states[b];
      viol = std::max(viol, std::max(0.0, -min_eigenvalue(CMatrix(
                                0.5 * (sigma + sigma.adjoint())))));
      marginal = partial_trace_A(sigma, p.dims);
    }
    viol = std::max(viol, max_abs(marginal - strat.commitment));
  }
  return {viol <= tol, viol};
}

// ---------------------------------------------------------------------------
// Certificate verification

struct BobCertificateReport {
  bool ok = false;
  double value = 0.0;       // Tr(X), the certified upper bound on P_B*
  double min_margin = 0.0;  // smallest eigenvalue of X - rho_a/D over all a
};

inline BobCertificateReport verify_bob_certificate(
    const std::vector<CMatrix>& reduced, const BobCertificate& cert,
    double psd_tol = -1.0) {
  const int d = static_cast<int>(reduced.size());
  if (d == 0) throw std::invalid_argument("verify_bob_certificate: no states");
  if (!is_hermitian(cert.x))
    throw std::invalid_argument("verify_bob_certificate: X is not Hermitian");
  BobCertificateReport rep;
  rep.value = cert.x.trace().real();
  rep.min_margin = std::numeric_limits<double>::infinity();
  rep.ok = true;
  for (int a = 0; a < d; ++a) {
    if (reduced[a].rows() != cert.x.rows())
      throw std::invalid_argument("verify_bob_certificate: size mismatch");
    const CMatrix diff = cert.x - reduced[a] / static_cast<double>(d);
    const auto chk = psd_check(0.5 * (diff + diff.adjoint()), psd_tol);
    rep.min_margin = std::min(rep.min_margin, chk.lambda_min);
    rep.ok = rep.ok && chk.certified;
  }
  return rep;
}

inline BobCertificateReport verify_bob_certificate(const DricProtocol& p,
                                                   const BobCertificate& cert,
                                                   double psd_tol = -1.0) {
  return verify_bob_certificate(reduced_states(p), cert, psd_tol);
}

struct AliceCertificateReport {
  bool ok = false;
  double s = 0.0;            // the certified upper bound on P_A*
  double sum_margin = 0.0;   // smallest eigenvalue of s*I - sum_a Z_a
  // Per-outcome margin: operator form reports the smallest eigenvalue of
  // I (x) Z_a - (1/D)|psi_a><psi_a|; inverse form reports
  // min_a (D - <Z_a^{-1}, rho_a>). Either must be >= -tolerance.
  double pointwise_margin = 0.0;
};

/// Dense operator-form checks build D matrices of side dim_a*dim_b; keep a
/// guard so huge protocols fail loudly instead of thrashing (use the inverse
/// form there).
inline constexpr int kOperatorFormVerifyCap = 4096;

namespace detail {

inline void common_alice_checks(const std::vector<CMatrix>& z, int dim_b,
                                int d) {
  if (static_cast<int>(z.size()) != d)
    throw std::invalid_argument(
        "verify_alice_certificate: need one Z per outcome");
  for (const auto& zb : z)
    if (zb.rows() != dim_b || zb.cols() != dim_b)
      throw std::invalid_argument("verify_alice_certificate: Z size mismatch");
}

inline std::pair<bool, double> sum_condition(const AliceCertificate& cert,
                                             int dim_b, double psd_tol) {
  CMatrix gap = cert.s * CMatrix::Identity(dim_b, dim_b);
  for (const auto& zb : cert.z) gap -= zb;
  const auto chk = psd_check(0.5 * (gap + gap.adjoint()), psd_tol);
  return {chk.certified, chk.lambda_min};
}

}  // namespace detail

/// Inverse-form verification: only needs the reduced states (B side).
inline AliceCertificateReport verify_alice_certificate(
    const std::vector<CMatrix>& reduced, const AliceCertificate& cert,
    double psd_tol = -1.0, double inner_tol = -1.0) {
  if (cert.form != CertificateForm::inverse_form)
    throw std::invalid_argument(
        "verify_alice_certificate: reduced-state overload handles the inverse "
        "form only; pass the full protocol for the operator form");
  const int d = static_cast<int>(reduced.size());
  if (d == 0)
    throw std::invalid_argument("verify_alice_certificate: no states");
  const int nb = static_cast<int>(reduced[0].rows());
  detail::common_alice_checks(cert.z, nb, d);
  if (inner_tol < 0) inner_tol = 1e-9 * d;

  AliceCertificateReport rep;
  rep.s = cert.s;
  rep.pointwise_margin = std::numeric_limits<double>::infinity();
  rep.ok = true;
  for (int a = 0; a < d; ++a) {
    const CMatrix zh = 0.5 * (cert.z[a] + cert.z[a].adjoint());
    Eigen::LLT<CMatrix> llt(zh);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument(
          "verify_alice_certificate: Z_" + std::to_string(a + 1) +
          " is not positive definite; the inverse form needs Z_a > 0");
    const double ip = llt.solve(reduced[a]).trace().real();
    if (!std::isfinite(ip))
      throw std::invalid_argument(
          "verify_alice_certificate: Z_" + std::to_string(a + 1) +
          " is numerically singular");
    rep.pointwise_margin = std::min(rep.pointwise_margin, d - ip);
    rep.ok = rep.ok && (ip <= d + inner_tol);
  }
  const auto [sum_ok, sum_margin] = detail::sum_condition(cert, nb, psd_tol);
  rep.sum_margin = sum_margin;
  rep.ok = rep.ok && sum_ok;
  return rep;
}

/// Operator-form verification (dispatches to the inverse form when asked).
inline AliceCertificateReport verify_alice_certificate(
    const DricProtocol& p, const AliceCertificate& cert, double psd_tol = -1.0,
    double inner_tol = -1.0) {
  if (cert.form == CertificateForm::inverse_form)
    return verify_alice_certificate(reduced_states(p), cert, psd_tol,
                                    inner_tol);
  const int d = p.d;
  const int na = p.dims.dim_a, nb = p.dims.dim_b;
  detail::common_alice_checks(cert.z, nb, d);
  if (na * nb > kOperatorFormVerifyCap)
    throw std::invalid_argument(
        "verify_alice_certificate: joint dimension " + std::to_string(na * nb) +
        " exceeds operator-form cap " + std::to_string(kOperatorFormVerifyCap) +
        "; use an inverse-form certificate");

  AliceCertificateReport rep;
  rep.s = cert.s;
  rep.pointwise_margin = std::numeric_limits<double>::infinity();
  rep.ok = true;
  const CMatrix id_a = CMatrix::Identity(na, na);
  for (int a = 0; a < d; ++a) {
    const CVector& psi = p.states[a];
    CMatrix gap = kron(id_a, 0.5 * (cert.z[a] + cert.z[a].adjoint()));
    gap.noalias() -= (psi * psi.adjoint()) / static_cast<double>(d);
    const auto chk = psd_check(gap, psd_tol);
    rep.pointwise_margin = std::min(rep.pointwise_margin, chk.lambda_min);
    rep.ok = rep.ok && chk.certified;
  }
  const auto [sum_ok, sum_margin] = detail::sum_condition(cert, nb, psd_tol);
  rep.sum_margin = sum_margin;
  rep.ok = rep.ok && sum_ok;
  return rep;
}

/// For positive definite Z_a the inverse-form condition <Z_a^{-1}, rho_a> <= D
/// is equivalent to the operator-form condition, so the same matrices can be
/// re-tagged without change.
inline AliceCertificate to_operator_form(const AliceCertificate& cert) {
  AliceCertificate out = cert;
  out.form = CertificateForm::operator_form;
  return out;
}

// ---------------------------------------------------------------------------
// SDP formulations

/// Maximum success probability of discriminating `states` drawn with
/// `priors`:  max sum_i p_i <rho_i, M_i>  s.t.  sum_i M_i = I, M_i >= 0.
/// Real-valued data is kept in the real symmetric picture (the optimum is
/// unchanged by restricting to real POVMs there).
inline SdpProblem discrimination_sdp(const std::vector<CMatrix>& states,
                                     const std::vector<double>& priors) {
  const int d = static_cast<int>(states.size());
  if (d == 0) throw std::invalid_argument("discrimination_sdp: no states");
  if (static_cast<int>(priors.size()) != d)
    throw std::invalid_argument("discrimination_sdp: priors size mismatch");
  const int n = static_cast<int>(states[0].rows());
  bool complex_data = false;
  for (const auto& st : states) {
    if (st.rows() != n || st.cols() != n)
      throw std::invalid_argument("discrimination_sdp: state size mismatch");
    if (st.imag().cwiseAbs().maxCoeff() != 0.0) complex_data = true;
  }
  for (double p : priors)
    if (!(p >= 0.0))
      throw std::invalid_argument("discrimination_sdp: negative prior");

  SdpProblem prob;
  prob.block_sizes.assign(d, n);
  prob.objective.reserve(d);
  for (int i = 0; i < d; ++i) {
    const CMatrix h = 0.5 * (states[i] + states[i].adjoint());
    prob.objective.push_back(priors[i] * h);
  }
  for (int r = 0; r < n; ++r) {
    for (int c = r; c < n; ++c) {
      SdpConstraint real_part;
      real_part.rhs = (r == c) ? 1.0 : 0.0;
      for (int i = 0; i < d; ++i)
        real_part.terms.push_back({i, {{r, c, Complex(1.0, 0.0)}}});
      prob.constraints.push_back(std::move(real_part));
      if (complex_data && r < c) {
        SdpConstraint imag_part;
        imag_part.rhs = 0.0;
        for (int i = 0; i < d; ++i)
          imag_part.terms.push_back({i, {{r, c, Complex(0.0, 1.0)}}});
        prob.constraints.push_back(std::move(imag_part));
      }
    }
  }
  prob.finalize();
  return prob;
}

/// Bob's optimal-cheating SDP: discriminate the reduced states under uniform
/// priors. Primal blocks are his POVM elements.
inline SdpProblem bob_sdp(const DricProtocol& p) {
  p.validate();
  return discrimination_sdp(reduced_states(p),
                            std::vector<double>(p.d, 1.0 / p.d));
}

/// X = A*(y) restricted to any block, recovered from the dual multipliers of
/// a discrimination SDP (every block sees the same A*(y)).
inline BobCertificate bob_certificate_from_solution(const SdpProblem& prob,
                                                    const SdpSolution& sol) {
  const auto slack = prob.dual_slack(sol.y);
  CMatrix x = slack[0] + prob.objective[0];
  return {0.5 * (x + x.adjoint())};
}

inline BobStrategy bob_strategy_from_solution(const SdpSolution& sol) {
  return {sol.x};
}

/// Alice's optimal-cheating SDP toward outcome `target`:
///   max (1/D) sum_b <|psi_{a(b)}><psi_{a(b)}|, sigma_b>
///   s.t. Tr_A(sigma_b) = xi for every reply b, Tr(xi) = 1,
///        sigma_b >= 0, xi >= 0,
/// where a(b) is the reveal that maps reply b to `target`. The optimum is the
/// same for every target: relabeling replies b -> b + (t'-t) carries an
/// optimal solution for target t to one for t', because the constraint set is
/// symmetric under permuting the sigma_b and the objective permutes along.
struct AliceSdp {
  SdpProblem problem;
  int d = 0;
  int dim_a = 0;
  int dim_b = 0;
  int target = 1;
  std::vector<int> reveal_for_reply;  // a(b), 1-based, indexed by b-1
};

inline AliceSdp alice_sdp(const DricProtocol& p, int target = 1) {
  p.validate();
  if (target < 1 || target > p.d)
    throw std::invalid_argument("alice_sdp: target out of range");
  const int d = p.d;
  const int na = p.dims.dim_a, nb = p.dims.dim_b;
  const int n = na * nb;
  bool complex_data = false;
  for (const auto& st : p.states)
    if (st.imag().cwiseAbs().maxCoeff() != 0.0) complex_data = true;

  AliceSdp out;
  out.d = d;
  out.dim_a = na;
  out.dim_b = nb;
  out.target = target;

  SdpProblem& prob = out.problem;
  prob.block_sizes.assign(d, n);
  prob.block_sizes.push_back(nb);  // the commitment marginal xi
  const int xi = d;

  for (int b = 1; b <= d; ++b) {
    const int a = reveal_for_outcome(target, b, d);
    out.reveal_for_reply.push_back(a);
    const CVector& psi = p.states[a - 1];
    prob.objective.push_back((psi * psi.adjoint()) / static_cast<double>(d));
  }
  prob.objective.push_back(CMatrix::Zero(nb, nb));

  {
    SdpConstraint trace_one;
    trace_one.rhs = 1.0;
    ConstraintTerm term;
    term.block = xi;
    for (int r = 0; r < nb; ++r) term.entries.push_back({r, r, 1.0});
    trace_one.terms.push_back(std::move(term));
    prob.constraints.push_back(std::move(trace_one));
  }
  for (int b = 0; b < d; ++b) {
    for (int r = 0; r < nb; ++r) {
      for (int c = r; c < nb; ++c) {
        SdpConstraint real_part;
        real_part.rhs = 0.0;
        ConstraintTerm on_sigma;
        on_sigma.block = b;
        for (int ia = 0; ia < na; ++ia)
          on_sigma.entries.push_back({ia * nb + r, ia * nb + c, 1.0});
        real_part.terms.push_back(std::move(on_sigma));
        real_part.terms.push_back({xi, {{r, c, Complex(-1.0, 0.0)}}});
        prob.constraints.push_back(std::move(real_part));
        if (complex_data && r < c) {
          SdpConstraint imag_part;
          imag_part.rhs = 0.0;
          ConstraintTerm on_sigma_im;
          on_sigma_im.block = b;
          for (int ia = 0; ia < na; ++ia)
            on_sigma_im.entries.push_back(
                {ia * nb + r, ia * nb + c, Complex(0.0, 1.0)});
          imag_part.terms.push_back(std::move(on_sigma_im));
          imag_part.terms.push_back({xi, {{r, c, Complex(0.0, -1.0)}}});
          prob.constraints.push_back(std::move(imag_part));
        }
      }
    }
  }
  prob.finalize();
  return out;
}

inline AliceStrategy alice_strategy_from_solution(const AliceSdp& asdp,
                                                  const SdpSolution& sol) {
  AliceStrategy st;
  st.joint_states.assign(sol.x.begin(), sol.x.begin() + asdp.d);
  st.commitment = sol.x[asdp.d];
  st.target = asdp.target;
  return st;
}

/// The dual multipliers of alice_sdp assemble into a certificate: on block b,
/// A*(y) = I_A (x) Z_{a(b)}, so Z_{a(b)} = Tr_A(slack + objective) / dim_a,
/// and s is the multiplier of the trace constraint, i.e. the dual value.
inline AliceCertificate alice_certificate_from_solution(const AliceSdp& asdp,
                                                        const SdpSolution& sol) {
  const auto slack = asdp.problem.dual_slack(sol.y);
  AliceCertificate cert;
  cert.form = CertificateForm::operator_form;
  cert.s = sol.dual_value;
  cert.z.resize(asdp.d);
  const BipartiteDims dims{asdp.dim_a, asdp.dim_b};
  for (int b = 0; b < asdp.d; ++b) {
    const CMatrix ay = slack[b] + asdp.problem.objective[b];
    const CMatrix zb = partial_trace_A(ay, dims) / static_cast<double>(asdp.dim_a);
    cert.z[asdp.reveal_for_reply[b] - 1] = 0.5 * (zb + zb.adjoint());
  }
  return cert;
}

// ---------------------------------------------------------------------------
// Closed forms for the subset construction

/// Slack target for the default closed-form Alice certificate: with
/// eps = kDefaultAliceCertificateSlack / D the certified s exceeds m/D by
/// exactly kDefaultAliceCertificateSlack.
inline constexpr double kDefaultAliceCertificateSlack = 1e-8;

/// M_a = (1/m) sum_{S containing a} |S><S|; value is exactly 1/m.
inline BobStrategy subset_bob_strategy(int d, int m,
                                       int dim_cap = kDefaultDimensionCap) {
  ClassicalSubsetProtocol{d, m}.validate();
  const long long dim = binomial(d, m);
  if (dim > dim_cap)
    throw std::invalid_argument("subset_bob_strategy: dimension exceeds cap");
  const int n = static_cast<int>(dim);
  const auto subs = subsets_lex(d, m);
  BobStrategy strat;
  strat.measurement.assign(d, CMatrix::Zero(n, n));
  for (int s = 0; s < n; ++s)
    for (int a : subs[s])
      strat.measurement[a - 1](s, s) = 1.0 / m;
  return strat;
}

/// X = I / (D * binom(D-1, m-1)); Tr(X) = 1/m and X - rho_a/D = 0 on the
/// support of rho_a, so the certificate is tight.
inline BobCertificate subset_bob_certificate(int d, int m,
                                             int dim_cap = kDefaultDimensionCap) {
  ClassicalSubsetProtocol{d, m}.validate();
  const long long dim = binomial(d, m);
  if (dim > dim_cap)
    throw std::invalid_argument("subset_bob_certificate: dimension exceeds cap");
  const int n = static_cast<int>(dim);
  const double scale = 1.0 / (static_cast<double>(d) * binomial(d - 1, m - 1));
  return {scale * CMatrix::Identity(n, n)};
}

/// Alice commits the uniform superposition over all m-subsets; every reveal
/// passes with probability m/D, independent of the reply, so the strategy
/// value is exactly m/D for every target.
inline AliceStrategy subset_alice_strategy(int d, int m,
                                           int dim_cap = kDefaultDimensionCap) {
  ClassicalSubsetProtocol{d, m}.validate();
  const long long dim = binomial(d, m);
  if (dim > dim_cap)
    throw std::invalid_argument("subset_alice_strategy: dimension exceeds cap");
  const int n = static_cast<int>(dim);
  CVector t = CVector::Zero(static_cast<Eigen::Index>(n) * n);
  const double amp = 1.0 / std::sqrt(static_cast<double>(n));
  for (int s = 0; s < n; ++s) t(static_cast<Eigen::Index>(s) * n + s) = amp;
  AliceStrategy strat;
  strat.commitment = CMatrix::Identity(n, n) / static_cast<double>(n);
  strat.purifications.assign(d, t);
  strat.target = 1;
  return strat;
}

/// Inverse-form certificate Z_a = (1/D) P_a + eps (I - P_a), where P_a
/// projects onto the subsets containing a. Then <Z_a^{-1}, rho_a> = D exactly
/// and sum_a Z_a = (m/D + eps(D-m)) I, so s = m/D + eps*D is feasible with
/// slack eps*m.
inline AliceCertificate subset_alice_certificate(
    int d, int m, std::optional<double> eps_opt = std::nullopt,
    int dim_cap = kDefaultDimensionCap) {
  ClassicalSubsetProtocol{d, m}.validate();
  const long long dim = binomial(d, m);
  if (dim > dim_cap)
    throw std::invalid_argument(
        "subset_alice_certificate: dimension exceeds cap");
  const double eps = eps_opt.value_or(kDefaultAliceCertificateSlack / d);
  if (!(eps > 0))
    throw std::invalid_argument("subset_alice_certificate: eps must be > 0");
  const int n = static_cast<int>(dim);
  const auto subs = subsets_lex(d, m);
  AliceCertificate cert;
  cert.form = CertificateForm::inverse_form;
  cert.eps = eps;
  cert.s = static_cast<double>(m) / d + eps * d;
  cert.z.assign(d, eps * CMatrix::Identity(n, n));
  for (int s = 0; s < n; ++s)
    for (int a : subs[s])
      cert.z[a - 1](s, s) = 1.0 / d;
  return cert;
}

// ---------------------------------------------------------------------------
// Turning Alice's certificate into a cheating strategy for Bob

/// Pad Z_1 so the sum condition is tight, then M_a = Z_a / s is a POVM. For a
/// feasible inverse-form certificate its value is at least 1/(s*D), because
/// <rho_a, Z_a> <Z_a^{-1}, rho_a> >= (Tr rho_a)^2 = 1 gives
/// <rho_a, Z_a> >= 1/D per outcome.
inline BobStrategy bob_strategy_from_alice_certificate(
    const AliceCertificate& cert) {
  if (cert.z.empty())
    throw std::invalid_argument(
        "bob_strategy_from_alice_certificate: empty certificate");
  if (!(cert.s > 0))
    throw std::invalid_argument(
        "bob_strategy_from_alice_certificate: need s > 0");
  const int n = static_cast<int>(cert.z[0].rows());
  CMatrix pad = cert.s * CMatrix::Identity(n, n);
  for (const auto& zb : cert.z) pad -= zb;
  BobStrategy strat;
  strat.measurement.reserve(cert.z.size());
  for (std::size_t a = 0; a < cert.z.size(); ++a) {
    CMatrix m = cert.z[a];
    if (a == 0) m += pad;
    m /= cert.s;
    strat.measurement.push_back(0.5 * (m + m.adjoint()));
  }
  return strat;
}

// ---------------------------------------------------------------------------
// One-call analysis

enum class AnalyzeMode { certify, solve, both };

inline const char* to_string(AnalyzeMode m) {
  switch (m) {
    case AnalyzeMode::certify: return "certify";
    case AnalyzeMode::solve: return "solve";
    default: return "both";
  }
}

/// Solver size caps: Alice's SDP carries D blocks of side dim_a*dim_b and
/// Bob's a Schur complement of side dim_b^2.
inline constexpr int kAliceSolveCap = 576;  // dim_a * dim_b
inline constexpr int kBobSolveCap = 48;     // dim_b

struct CheatReport {
  std::string label;
  int d = 0;
  bool closed_form_used = false;
  bool solver_used = false;
  // Bracketing: lower bounds come from explicit strategies (or the SDP
  // primal), upper bounds from verified certificates (or the SDP dual).
  double p_alice_lower = 0.0;
  double p_alice_upper = 1.0;
  double p_bob_lower = 0.0;
  double p_bob_upper = 1.0;
  double kitaev_product = 0.0;  // p_alice_lower * p_bob_lower
  bool bob_certificate_ok = false;
  bool alice_certificate_ok = false;
  BobStrategy bob_strategy;
  BobCertificate bob_certificate;
  AliceStrategy alice_strategy;
  AliceCertificate alice_certificate;
  std::optional<double> bob_solver_primal, bob_solver_dual;
  std::optional<double> alice_solver_primal, alice_solver_dual;
  std::string notes;
};

inline CheatReport analyze(const DricProtocol& p,
                           AnalyzeMode mode = AnalyzeMode::both,
                           const SolveOptions& opts = {}) {
  p.validate();
  CheatReport rep;
  rep.label = p.label;
  rep.d = p.d;

  const bool has_closed = p.subset_params.has_value();
  const bool can_solve = p.dims.dim_a * p.dims.dim_b <= kAliceSolveCap &&
                         p.dims.dim_b <= kBobSolveCap;
  if (mode == AnalyzeMode::certify && !has_closed)
    throw std::invalid_argument(
        "analyze: no closed form known for this protocol; use solve mode");
  if (mode == AnalyzeMode::solve && !can_solve)
    throw std::invalid_argument(
        "analyze: dimensions exceed the solver caps (dim_a*dim_b <= " +
        std::to_string(kAliceSolveCap) + ", dim_b <= " +
        std::to_string(kBobSolveCap) + ")");
  bool want_solve = mode != AnalyzeMode::certify;
  if (mode == AnalyzeMode::both && !can_solve) {
    if (!has_closed)
      throw std::invalid_argument(
          "analyze: no closed form and dimensions exceed the solver caps");
    want_solve = false;
    rep.notes = "solver skipped: dimensions exceed the solver caps";
  }

  const auto reduced = reduced_states(p);

  if (has_closed && mode != AnalyzeMode::solve) {
    const auto [dd, mm] = *p.subset_params;
    rep.closed_form_used = true;
    rep.bob_strategy = subset_bob_strategy(dd, mm);
    rep.bob_certificate = subset_bob_certificate(dd, mm);
    rep.alice_strategy = subset_alice_strategy(dd, mm);
    rep.alice_certificate = subset_alice_certificate(dd, mm);
    rep.p_bob_lower = bob_strategy_value(reduced, rep.bob_strategy);
    const auto bob_rep = verify_bob_certificate(reduced, rep.bob_certificate);
    rep.bob_certificate_ok = bob_rep.ok;
    rep.p_bob_upper = bob_rep.value;
    rep.p_alice_lower = alice_strategy_value(p, rep.alice_strategy);
    const auto alice_rep =
        verify_alice_certificate(reduced, rep.alice_certificate);
    rep.alice_certificate_ok = alice_rep.ok;
    rep.p_alice_upper = alice_rep.s;
  }

  if (want_solve) {
    rep.solver_used = true;
    const SdpProblem bprob = bob_sdp(p);
    const SdpSolution bsol = solve(bprob, opts);
    if (bsol.status != SdpStatus::optimal)
      throw std::runtime_error("analyze: Bob SDP did not converge: " +
                               (bsol.message.empty() ? to_string(bsol.status)
                                                     : bsol.message));
    rep.bob_solver_primal = bsol.primal_value;
    rep.bob_solver_dual = bsol.dual_value;

    const AliceSdp asdp = alice_sdp(p);
    const SdpSolution asol = solve(asdp.problem, opts);
    if (asol.status != SdpStatus::optimal)
      throw std::runtime_error("analyze: Alice SDP did not converge: " +
                               (asol.message.empty() ? to_string(asol.status)
                                                     : asol.message));
    rep.alice_solver_primal = asol.primal_value;
    rep.alice_solver_dual = asol.dual_value;

    if (rep.closed_form_used) {
      rep.p_bob_lower = std::max(rep.p_bob_lower, bsol.primal_value);
      rep.p_bob_upper = std::min(rep.p_bob_upper, bsol.dual_value);
      rep.p_alice_lower = std::max(rep.p_alice_lower, asol.primal_value);
      rep.p_alice_upper = std::min(rep.p_alice_upper, asol.dual_value);
    } else {
      rep.bob_strategy = bob_strategy_from_solution(bsol);
      rep.bob_certificate = bob_certificate_from_solution(bprob, bsol);
      rep.alice_strategy = alice_strategy_from_solution(asdp, asol);
      rep.alice_certificate = alice_certificate_from_solution(asdp, asol);
      const auto bob_rep =
          verify_bob_certificate(reduced, rep.bob_certificate, 1e-7);
      rep.bob_certificate_ok = bob_rep.ok;
      const auto alice_rep =
          verify_alice_certificate(p, rep.alice_certificate, 1e-7);
      rep.alice_certificate_ok = alice_rep.ok;
      rep.p_bob_lower = bsol.primal_value;
      rep.p_bob_upper = bsol.dual_value;
      rep.p_alice_lower = asol.primal_value;
      rep.p_alice_upper = asol.dual_value;
    }
  }

  rep.kitaev_product = rep.p_alice_lower * rep.p_bob_lower;
  return rep;
}

}  // namespace dieroll
