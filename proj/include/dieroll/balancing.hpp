// Balancing transformations: extend both Hilbert spaces with orthogonal
// directions and mix weight t into the commitment states to trade one
// party's cheating probability against the other's. Dual certificates are
// transported along the transformation in closed form, so the balanced
// protocol comes with verified upper bounds and no new solves.
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cheating.hpp"
#include "matrix.hpp"
#include "protocol.hpp"
#include "rat.hpp"

namespace dieroll {

/// Which party's cheating probability the transformation pushes down
/// (the other party's moves up toward the balance point).
enum class Direction { reduce_bob, reduce_alice };

inline const char* to_string(Direction d) {
  return d == Direction::reduce_bob ? "reduce_bob" : "reduce_alice";
}

/// Free positive constant in the reduce_alice certificate transport; its
/// (D-1)*zeta contribution is part of the certified slack.
inline constexpr double kDefaultTransportZeta = 1e-10;

namespace detail {

inline void require_open_unit(double t, const char* who) {
  if (!(t > 0.0 && t < 1.0))
    throw std::invalid_argument(std::string(who) + ": need 0 < t < 1");
}

}  // namespace detail

/// Append one orthogonal direction to each side and form
///   |psi'_a> = sqrt(1-t)|psi_a> + sqrt(t)|perp>|perp>.
/// All states share the new direction, so they move closer together:
/// overlaps become (1-t)<psi_a|psi_a'> + t and the reduced states become
/// (1-t) rho_a (+) t. Bob's cheating drops toward 1/D, Alice's rises.
inline DricProtocol extend_reduce_bob(const DricProtocol& p, double t) {
  p.validate();
  detail::require_open_unit(t, "extend_reduce_bob");
  const int na = p.dims.dim_a, nb = p.dims.dim_b;
  const int na2 = na + 1, nb2 = nb + 1;
  const double keep = std::sqrt(1.0 - t), add = std::sqrt(t);

  DricProtocol out;
  out.d = p.d;
  out.dims = {na2, nb2};
  out.label = p.label + " + reduce_bob t=" + std::to_string(t);
  out.states.reserve(p.d);
  for (const auto& psi : p.states) {
    CVector v = CVector::Zero(static_cast<Eigen::Index>(na2) * nb2);
    for (int ia = 0; ia < na; ++ia)
      for (int ib = 0; ib < nb; ++ib)
        v(static_cast<Eigen::Index>(ia) * nb2 + ib) =
            keep * psi(static_cast<Eigen::Index>(ia) * nb + ib);
    v(static_cast<Eigen::Index>(na) * nb2 + nb) = add;
    out.states.push_back(std::move(v));
  }
  out.validate();
  return out;
}

/// Append D orthogonal directions |perp_1..perp_D> to each side and form
///   |psi'_a> = sqrt(1-t)|psi_a> + sqrt(t)|perp_a>|perp_a>.
/// Each state gets its own direction, so they move apart: overlaps shrink to
/// (1-t)<psi_a|psi_a'> for a != a' and the reduced states become
/// (1-t) rho_a (+) t|perp_a><perp_a|. Alice's cheating drops toward 1/D,
/// Bob's rises.
inline DricProtocol extend_reduce_alice(const DricProtocol& p, double t) {
  p.validate();
  detail::require_open_unit(t, "extend_reduce_alice");
  const int d = p.d;
  const int na = p.dims.dim_a, nb = p.dims.dim_b;
  const int na2 = na + d, nb2 = nb + d;
  const double keep = std::sqrt(1.0 - t), add = std::sqrt(t);

  DricProtocol out;
  out.d = d;
  out.dims = {na2, nb2};
  out.label = p.label + " + reduce_alice t=" + std::to_string(t);
  out.states.reserve(d);
  for (int a = 0; a < d; ++a) {
    const CVector& psi = p.states[a];
    CVector v = CVector::Zero(static_cast<Eigen::Index>(na2) * nb2);
    for (int ia = 0; ia < na; ++ia)
      for (int ib = 0; ib < nb; ++ib)
        v(static_cast<Eigen::Index>(ia) * nb2 + ib) =
            keep * psi(static_cast<Eigen::Index>(ia) * nb + ib);
    v(static_cast<Eigen::Index>(na + a) * nb2 + (nb + a)) = add;
    out.states.push_back(std::move(v));
  }
  out.validate();
  return out;
}

struct CertificatePair {
  BobCertificate bob;
  AliceCertificate alice;
};

/// Carry certificates for the original protocol to the extended one in
/// closed form. With beta = Tr(X) and s the input Alice value:
///   reduce_bob:   Tr(X') = (1-t)beta + t/D,  s' = (1-t)s + t
///   reduce_alice: Tr(X') = (1-t)beta + t,    s' = (1-t)s + t/D + zeta(D-1)
/// The Alice input must be strictly feasible in the inverse form (Z_a > 0);
/// the output is again inverse-form with the same property.
inline CertificatePair transport_certificates(
    const DricProtocol& p, Direction dir, double t, const CertificatePair& in,
    double zeta = kDefaultTransportZeta) {
  p.validate();
  detail::require_open_unit(t, "transport_certificates");
  if (!(zeta > 0.0))
    throw std::invalid_argument("transport_certificates: need zeta > 0");
  const int d = p.d;
  const int nb = p.dims.dim_b;
  if (in.bob.x.rows() != nb || in.bob.x.cols() != nb)
    throw std::invalid_argument("transport_certificates: X size mismatch");
  const AliceCertificate& ac = in.alice;
  if (ac.form != CertificateForm::inverse_form)
    throw std::invalid_argument(
        "transport_certificates: Alice certificate must be inverse-form");
  if (!(ac.s > 0.0))
    throw std::invalid_argument("transport_certificates: need s > 0");
  if (static_cast<int>(ac.z.size()) != d)
    throw std::invalid_argument("transport_certificates: need one Z per outcome");
  for (const auto& z : ac.z) {
    if (z.rows() != nb || z.cols() != nb)
      throw std::invalid_argument("transport_certificates: Z size mismatch");
    Eigen::LLT<CMatrix> llt(CMatrix(0.5 * (z + z.adjoint())));
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument(
          "transport_certificates: input Z_a not positive definite "
          "(strict feasibility required)");
  }

  const int grow = (dir == Direction::reduce_bob) ? 1 : d;
  const int nb2 = nb + grow;
  const double s = ac.s;

  CertificatePair out;
  out.bob.x = CMatrix::Zero(nb2, nb2);
  out.bob.x.topLeftCorner(nb, nb) = (1.0 - t) * in.bob.x;
  out.alice.form = CertificateForm::inverse_form;
  out.alice.eps = ac.eps;
  out.alice.z.assign(d, CMatrix());

  if (dir == Direction::reduce_bob) {
    out.bob.x(nb, nb) = t / d;
    const double eps_perp = (s * (1.0 - t) + t) / d;
    const double delta = (1.0 - t) + t / s;
    for (int a = 0; a < d; ++a) {
      CMatrix z = CMatrix::Zero(nb2, nb2);
      z.topLeftCorner(nb, nb) = delta * ac.z[a];
      z(nb, nb) = eps_perp;
      out.alice.z[a] = std::move(z);
    }
    out.alice.s = (1.0 - t) * s + t;
  } else {
    for (int c = 0; c < d; ++c) out.bob.x(nb + c, nb + c) = t / d;
    const double eps_perp = (1.0 - t) * s + t / d;
    const double delta = (1.0 - t) + t / (d * s);
    for (int a = 0; a < d; ++a) {
      CMatrix z = CMatrix::Zero(nb2, nb2);
      z.topLeftCorner(nb, nb) = delta * ac.z[a];
      for (int c = 0; c < d; ++c) z(nb + c, nb + c) = (c == a) ? eps_perp : zeta;
      out.alice.z[a] = std::move(z);
    }
    out.alice.s = (1.0 - t) * s + t / d + zeta * (d - 1);
  }
  return out;
}

/// Mixing weight at which the two transported upper bounds coincide:
/// t = |beta - alpha| / ((1 - 1/D) + |beta - alpha|). The direction is the
/// one that lowers the currently larger value; alpha == beta needs no
/// transformation at all.
struct OptimalT {
  double t = 0.0;
  bool no_op = false;
  std::optional<Direction> direction;
};

inline OptimalT optimal_t(double alpha, double beta, int d) {
  if (d < 2) throw std::invalid_argument("optimal_t: need D >= 2");
  if (!(alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && beta <= 1.0))
    throw std::invalid_argument("optimal_t: alpha, beta must lie in (0, 1]");
  OptimalT out;
  if (alpha == beta) {
    out.no_op = true;
    return out;
  }
  const double gap = std::abs(beta - alpha);
  out.t = gap / ((1.0 - 1.0 / d) + gap);
  out.direction =
      beta > alpha ? Direction::reduce_bob : Direction::reduce_alice;
  return out;
}

inline double optimal_t(double alpha, double beta, int d, Direction dir) {
  const OptimalT ot = optimal_t(alpha, beta, d);
  if (ot.no_op)
    throw std::invalid_argument("optimal_t: alpha == beta needs no transform");
  if (*ot.direction != dir)
    throw std::invalid_argument(
        "optimal_t: requested direction contradicts the ordering of "
        "alpha and beta");
  return ot.t;
}

/// Balanced max-cheat value reachable from a protocol with values alpha
/// (Alice) and beta (Bob):
///   (D max{alpha,beta} - min{alpha,beta}) / (D|alpha - beta| + D - 1),
/// which is < max{alpha,beta} when they differ and equals them when not.
inline Rational balanced_bound(const Rational& alpha, const Rational& beta,
                               int d) {
  if (d < 2) throw std::invalid_argument("balanced_bound: need D >= 2");
  if (alpha <= Rational(0) || alpha > Rational(1) || beta <= Rational(0) ||
      beta > Rational(1))
    throw std::invalid_argument("balanced_bound: alpha, beta must lie in (0, 1]");
  const Rational hi = std::max(alpha, beta);
  const Rational lo = std::min(alpha, beta);
  return (Rational(d) * hi - lo) / (Rational(d) * (hi - lo) + Rational(d - 1));
}

inline double balanced_bound(double alpha, double beta, int d) {
  if (d < 2) throw std::invalid_argument("balanced_bound: need D >= 2");
  if (!(alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && beta <= 1.0))
    throw std::invalid_argument("balanced_bound: alpha, beta must lie in (0, 1]");
  const double hi = std::max(alpha, beta);
  const double lo = std::min(alpha, beta);
  return (d * hi - lo) / (d * (hi - lo) + (d - 1));
}

struct BalanceResult {
  DricProtocol transformed;
  double t = 0.0;
  std::optional<Direction> direction;  // empty when no transformation applied
  double alpha = 0.0;                  // input Alice value
  double beta = 0.0;                   // input Bob value
  CertificatePair certificates;        // transported (inputs when no-op)
  double bound = 0.0;                  // balanced_bound(alpha, beta, D)
  int source_m = 0;                    // subset size chosen by the pipeline
};

/// One balancing round: pick direction and t from (alpha, beta), extend the
/// protocol, transport the certificates. alpha == beta returns the protocol
/// unchanged with t = 0.
inline BalanceResult balance_protocol(const DricProtocol& p, double alpha,
                                      double beta, const CertificatePair& certs,
                                      double zeta = kDefaultTransportZeta) {
  p.validate();
  BalanceResult res;
  res.alpha = alpha;
  res.beta = beta;
  res.bound = balanced_bound(alpha, beta, p.d);
  const OptimalT ot = optimal_t(alpha, beta, p.d);
  if (ot.no_op) {
    res.transformed = p;
    res.certificates = certs;
    return res;
  }
  res.t = ot.t;
  res.direction = ot.direction;
  res.transformed = (*ot.direction == Direction::reduce_bob)
                        ? extend_reduce_bob(p, ot.t)
                        : extend_reduce_alice(p, ot.t);
  res.certificates = transport_certificates(p, *ot.direction, ot.t, certs, zeta);
  return res;
}

/// Best balanced subset protocol for a D-sided roll: evaluate both candidate
/// subset sizes m = floor(sqrt(D)) and m = ceil(sqrt(D)) by their exact
/// balanced bounds, build the winner (ties go to the smaller state space),
/// and apply one balancing round (more via `rounds`, using the transported
/// certificate values as the next round's inputs).
inline BalanceResult best_balanced_subset(int d, int rounds = 1,
                                          double zeta = kDefaultTransportZeta) {
  if (d < 2) throw std::invalid_argument("best_balanced_subset: need D >= 2");
  if (rounds < 1)
    throw std::invalid_argument("best_balanced_subset: need rounds >= 1");
  const long long mf = isqrt_floor(d), mc = isqrt_ceil(d);
  int best_m = static_cast<int>(mf);
  Rational best_bound =
      balanced_bound(Rational(mf, d), Rational(1, mf), d);
  if (mc != mf) {
    const Rational cb = balanced_bound(Rational(mc, d), Rational(1, mc), d);
    const bool better =
        cb < best_bound ||
        (cb == best_bound && binomial(d, static_cast<int>(mc)) <
                                 binomial(d, static_cast<int>(best_m)));
    if (better) {
      best_m = static_cast<int>(mc);
      best_bound = cb;
    }
  }

  const DricProtocol p = build_subset_protocol(d, best_m);
  CertificatePair certs{subset_bob_certificate(d, best_m),
                        subset_alice_certificate(d, best_m)};
  BalanceResult res = balance_protocol(
      p, static_cast<double>(best_m) / d, 1.0 / best_m, certs, zeta);
  res.source_m = best_m;
  for (int round = 1; round < rounds; ++round) {
    const double alpha = res.certificates.alice.s;
    const double beta = res.certificates.bob.x.trace().real();
    if (alpha == beta) break;
    BalanceResult next = balance_protocol(res.transformed, alpha, beta,
                                          res.certificates, zeta);
    next.source_m = best_m;
    res = std::move(next);
  }
  return res;
}

}  // namespace dieroll
