// Standard-form semidefinite programming over block-diagonal Hermitian
// variables:
//
//   maximize    <C, X>
//   subject to  <A_i, X> = b_i   (i = 1..m)
//               X >= 0           (block-diagonal, Hermitian)
//
// with a dense primal-dual path-following interior-point solver
// (Nesterov-Todd scaling, Mehrotra predictor-corrector, dense Schur
// complement solve) and an independent feasibility/duality-gap verifier.
//
// Complex Hermitian blocks are handled through the standard real symmetric
// embedding [[Re, -Im], [Im, Re]]; blocks whose data is exactly real skip the
// embedding and are solved at their native size.
#pragma once

#include <dieroll/matrix.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dieroll {

/// One Hermitian coefficient at (row, col) with row <= col; the mirrored
/// entry (col, row) carries the conjugate implicitly.
struct ConstraintEntry {
  int row = 0;
  int col = 0;
  Complex value;
};

/// The part of one constraint matrix living on one block.
struct ConstraintTerm {
  int block = 0;
  std::vector<ConstraintEntry> entries;
};

struct SdpConstraint {
  std::vector<ConstraintTerm> terms;
  double rhs = 0.0;
};

enum class SdpStatus { optimal, max_iters, infeasible_detected };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::max_iters: return "max_iters";
    case SdpStatus::infeasible_detected: return "infeasible_detected";
  }
  return "unknown";
}

struct SolveOptions {
  double gap_target = 1e-8;
  int max_iters = 200;
};

struct SdpProblem {
  std::vector<int> block_sizes;
  std::vector<CMatrix> objective;  // one Hermitian matrix per block
  std::vector<SdpConstraint> constraints;
  RVector rhs;  // filled from constraints by finalize()

  int num_blocks() const { return static_cast<int>(block_sizes.size()); }
  int num_constraints() const { return static_cast<int>(constraints.size()); }

  /// Copies per-constraint rhs values into the rhs vector.
  void finalize() {
    rhs.resize(num_constraints());
    for (int i = 0; i < num_constraints(); ++i) rhs(i) = constraints[i].rhs;
  }

  /// Dense complex-picture constraint matrix for block `b` of constraint `i`
  /// (diagnostics and tests; the solver itself stays sparse).
  CMatrix constraint_matrix(int i, int b) const {
    CMatrix a = CMatrix::Zero(block_sizes[b], block_sizes[b]);
    for (const auto& term : constraints[i].terms) {
      if (term.block != b) continue;
      for (const auto& e : term.entries) {
        a(e.row, e.col) += e.value;
        if (e.row != e.col) a(e.col, e.row) += std::conj(e.value);
      }
    }
    return a;
  }

  /// <A_i, X> over complex-picture blocks.
  double constraint_value(int i, const std::vector<CMatrix>& x) const {
    Complex acc = 0.0;
    for (const auto& term : constraints[i].terms) {
      const CMatrix& xb = x[term.block];
      for (const auto& e : term.entries) {
        if (e.row == e.col)
          acc += e.value * xb(e.row, e.row);
        else
          acc += e.value * xb(e.col, e.row) +
                 std::conj(e.value) * xb(e.row, e.col);
      }
    }
    return acc.real();
  }

  /// Dual slack S = A*(y) - C in the complex picture.
  std::vector<CMatrix> dual_slack(const RVector& y) const {
    std::vector<CMatrix> s;
    s.reserve(num_blocks());
    for (int b = 0; b < num_blocks(); ++b)
      s.push_back(CMatrix(-objective[b]));
    for (int i = 0; i < num_constraints(); ++i) {
      for (const auto& term : constraints[i].terms) {
        CMatrix& sb = s[term.block];
        for (const auto& e : term.entries) {
          sb(e.row, e.col) += y(i) * e.value;
          if (e.row != e.col) sb(e.col, e.row) += y(i) * std::conj(e.value);
        }
      }
    }
    return s;
  }

  /// Structural checks plus a Gram-matrix rank test of the constraint maps.
  void validate() const {
    if (block_sizes.empty())
      throw std::invalid_argument("SdpProblem: no blocks");
    for (int n : block_sizes)
      if (n < 1) throw std::invalid_argument("SdpProblem: block size < 1");
    if (static_cast<int>(objective.size()) != num_blocks())
      throw std::invalid_argument("SdpProblem: objective/block count mismatch");
    for (int b = 0; b < num_blocks(); ++b) {
      if (objective[b].rows() != block_sizes[b] ||
          objective[b].cols() != block_sizes[b])
        throw std::invalid_argument("SdpProblem: objective size mismatch");
      if (!is_hermitian(objective[b]))
        throw std::invalid_argument("SdpProblem: objective not Hermitian");
    }
    if (rhs.size() != num_constraints())
      throw std::invalid_argument("SdpProblem: call finalize() before use");
    for (int i = 0; i < num_constraints(); ++i) {
      if (!std::isfinite(constraints[i].rhs))
        throw std::invalid_argument("SdpProblem: non-finite rhs");
      bool any = false;
      for (const auto& term : constraints[i].terms) {
        if (term.block < 0 || term.block >= num_blocks())
          throw std::invalid_argument("SdpProblem: bad block index");
        const int n = block_sizes[term.block];
        for (const auto& e : term.entries) {
          if (e.row < 0 || e.col < e.row || e.col >= n)
            throw std::invalid_argument(
                "SdpProblem: entry indices must satisfy 0 <= row <= col < n");
          if (e.row == e.col && std::abs(e.value.imag()) > 1e-14)
            throw std::invalid_argument(
                "SdpProblem: diagonal entries must be real");
          if (!std::isfinite(e.value.real()) || !std::isfinite(e.value.imag()))
            throw std::invalid_argument("SdpProblem: non-finite entry");
          if (std::abs(e.value) > 0) any = true;
        }
      }
      if (!any)
        throw std::invalid_argument("SdpProblem: constraint " +
                                    std::to_string(i) + " has no entries");
    }
    check_constraint_independence();
  }

 private:
  void check_constraint_independence() const {
    const int m = num_constraints();
    if (m == 0) return;
    RMatrix gram = RMatrix::Zero(m, m);
    // <A_i, A_k> accumulated blockwise over shared sparse entries.
    for (int b = 0; b < num_blocks(); ++b) {
      std::vector<std::pair<int, const std::vector<ConstraintEntry>*>> active;
      for (int i = 0; i < m; ++i)
        for (const auto& term : constraints[i].terms)
          if (term.block == b) active.push_back({i, &term.entries});
      for (std::size_t ii = 0; ii < active.size(); ++ii) {
        for (std::size_t kk = ii; kk < active.size(); ++kk) {
          double acc = 0.0;
          for (const auto& e : *active[ii].second) {
            for (const auto& f : *active[kk].second) {
              if (e.row != f.row || e.col != f.col) continue;
              const double dot =
                  e.value.real() * f.value.real() +
                  e.value.imag() * f.value.imag();
              acc += (e.row == e.col) ? dot : 2.0 * dot;
            }
          }
          gram(active[ii].first, active[kk].first) += acc;
          if (active[ii].first != active[kk].first)
            gram(active[kk].first, active[ii].first) += acc;
        }
      }
    }
    Eigen::LDLT<RMatrix> ldlt(gram);
    const RVector d = ldlt.vectorD();
    const double dmax = d.maxCoeff();
    if (dmax <= 0 || d.minCoeff() <= 1e-10 * dmax)
      throw std::invalid_argument(
          "SdpProblem: constraint maps are linearly dependent");
  }
};

struct SdpSolution {
  std::vector<CMatrix> x;  // primal blocks, complex picture
  RVector y;               // dual multipliers
  std::vector<CMatrix> s;  // dual slack blocks, complex picture
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;  // dual_value - primal_value
  int iterations = 0;
  SdpStatus status = SdpStatus::max_iters;
  std::string message;
};

struct FeasibilityReport {
  double gap = 0.0;  // <b,y> - <C,X>
  double primal_residual = 0.0;
  double x_min_eig = 0.0;
  double s_min_eig = 0.0;
  bool primal_ok = false;
  bool dual_ok = false;
};

inline double max_block_norm(const std::vector<CMatrix>& blocks) {
  double m = 0.0;
  for (const auto& b : blocks) m = std::max(m, frobenius_norm(b));
  return m;
}

/// Independent weak-duality check of a candidate primal/dual pair. The dual
/// slack is recomputed from y, so only (X, y) need to be supplied.
inline FeasibilityReport verify_feasible_pair(const SdpProblem& prob,
                                              const std::vector<CMatrix>& x,
                                              const RVector& y,
                                              double feas_tol = 1e-7,
                                              double psd_tol = -1.0) {
  if (static_cast<int>(x.size()) != prob.num_blocks())
    throw std::invalid_argument("verify_feasible_pair: block count mismatch");
  if (y.size() != prob.num_constraints())
    throw std::invalid_argument("verify_feasible_pair: dual size mismatch");
  FeasibilityReport rep;
  double primal = 0.0;
  for (int b = 0; b < prob.num_blocks(); ++b)
    primal += inner(prob.objective[b], x[b]);
  rep.gap = prob.rhs.dot(y) - primal;

  double res2 = 0.0;
  for (int i = 0; i < prob.num_constraints(); ++i) {
    const double r = prob.constraint_value(i, x) - prob.rhs(i);
    res2 += r * r;
  }
  rep.primal_residual = std::sqrt(res2);

  rep.x_min_eig = std::numeric_limits<double>::infinity();
  for (const auto& xb : x) {
    const CMatrix sym = 0.5 * (xb + xb.adjoint());
    rep.x_min_eig = std::min(rep.x_min_eig, min_eigenvalue(sym));
  }
  const auto slack = prob.dual_slack(y);
  rep.s_min_eig = std::numeric_limits<double>::infinity();
  for (const auto& sb : slack) {
    const CMatrix sym = 0.5 * (sb + sb.adjoint());
    rep.s_min_eig = std::min(rep.s_min_eig, min_eigenvalue(sym));
  }

  double psd_cut = psd_tol;
  if (psd_cut < 0) {
    int nmax = 1;
    for (int n : prob.block_sizes) nmax = std::max(nmax, n);
    psd_cut = 1e-9 * nmax;
  }
  rep.primal_ok =
      rep.primal_residual <= feas_tol * (1.0 + prob.rhs.norm()) &&
      rep.x_min_eig >= -psd_cut * (1.0 + max_block_norm(x));
  rep.dual_ok = rep.s_min_eig >= -psd_cut * (1.0 + max_block_norm(slack));
  return rep;
}

namespace detail {

struct REntry {
  int r = 0;
  int c = 0;  // r <= c; off-diagonal entries stand for both (r,c) and (c,r)
  double v = 0.0;
};

/// Exact in-place symmetrization. The temporary matters: assigning an
/// expression that reads m.transpose() back into m reads half-written
/// entries and leaves an asymmetric residue.
inline void symmetrize(RMatrix& m) {
  m = RMatrix(0.5 * (m + m.transpose()));
}

/// Real symmetric view of the problem: complex blocks are embedded as
/// [[Re, -Im], [Im, Re]] with objective and constraints scaled by 1/2 so that
/// inner products in the embedded space match the complex picture.
struct RealForm {
  std::vector<int> n;          // embedded block sizes
  std::vector<bool> embedded;  // per block
  std::vector<RMatrix> c;      // embedded objectives
  // by_block[b] = (constraint index, entries on this block)
  std::vector<std::vector<std::pair<int, std::vector<REntry>>>> by_block;
  int total_dim = 0;

  explicit RealForm(const SdpProblem& prob) {
    const int nb = prob.num_blocks();
    n.resize(nb);
    embedded.assign(nb, false);
    for (int b = 0; b < nb; ++b) {
      bool complex_data = prob.objective[b].imag().cwiseAbs().maxCoeff() > 0.0;
      for (const auto& con : prob.constraints)
        for (const auto& term : con.terms)
          if (term.block == b)
            for (const auto& e : term.entries)
              if (e.value.imag() != 0.0) complex_data = true;
      embedded[b] = complex_data;
      n[b] = complex_data ? 2 * prob.block_sizes[b] : prob.block_sizes[b];
      total_dim += n[b];
    }
    c.resize(nb);
    for (int b = 0; b < nb; ++b) {
      const int nn = prob.block_sizes[b];
      if (!embedded[b]) {
        c[b] = prob.objective[b].real();
      } else {
        c[b].resize(2 * nn, 2 * nn);
        const RMatrix re = prob.objective[b].real();
        const RMatrix im = prob.objective[b].imag();
        c[b].topLeftCorner(nn, nn) = 0.5 * re;
        c[b].bottomRightCorner(nn, nn) = 0.5 * re;
        c[b].topRightCorner(nn, nn) = -0.5 * im;
        c[b].bottomLeftCorner(nn, nn) = 0.5 * im;
      }
    }
    by_block.resize(nb);
    for (int i = 0; i < prob.num_constraints(); ++i) {
      for (const auto& term : prob.constraints[i].terms) {
        const int b = term.block;
        const int nn = prob.block_sizes[b];
        std::vector<REntry> out;
        out.reserve(term.entries.size() * (embedded[b] ? 4 : 1));
        for (const auto& e : term.entries) {
          const double re = e.value.real();
          const double im = e.value.imag();
          if (!embedded[b]) {
            if (re != 0.0) out.push_back({e.row, e.col, re});
            continue;
          }
          if (e.row == e.col) {
            out.push_back({e.row, e.row, 0.5 * re});
            out.push_back({nn + e.row, nn + e.row, 0.5 * re});
          } else {
            if (re != 0.0) {
              out.push_back({e.row, e.col, 0.5 * re});
              out.push_back({nn + e.row, nn + e.col, 0.5 * re});
            }
            if (im != 0.0) {
              out.push_back({e.row, nn + e.col, -0.5 * im});
              out.push_back({e.col, nn + e.row, 0.5 * im});
            }
          }
        }
        if (!out.empty()) by_block[b].push_back({i, std::move(out)});
      }
    }
  }

  /// <A_i, Y> for all i in the embedded space.
  RVector apply(const std::vector<RMatrix>& y_blocks, int m) const {
    RVector out = RVector::Zero(m);
    for (std::size_t b = 0; b < by_block.size(); ++b) {
      const RMatrix& yb = y_blocks[b];
      for (const auto& [ci, entries] : by_block[b]) {
        double acc = 0.0;
        for (const auto& e : entries)
          acc += (e.r == e.c) ? e.v * yb(e.r, e.r) : 2.0 * e.v * yb(e.r, e.c);
        out(ci) += acc;
      }
    }
    return out;
  }

  /// A*(y) accumulated into dense embedded blocks.
  std::vector<RMatrix> adjoint(const RVector& y) const {
    std::vector<RMatrix> out;
    out.reserve(n.size());
    for (int nn : n) out.push_back(RMatrix::Zero(nn, nn));
    for (std::size_t b = 0; b < by_block.size(); ++b) {
      for (const auto& [ci, entries] : by_block[b]) {
        const double w = y(ci);
        if (w == 0.0) continue;
        for (const auto& e : entries) {
          out[b](e.r, e.c) += w * e.v;
          if (e.r != e.c) out[b](e.c, e.r) += w * e.v;
        }
      }
    }
    return out;
  }

  /// Schur matrix H(i,k) = sum_b Tr(A_i W_b A_k W_b) from sparse entries.
  RMatrix schur(const std::vector<RMatrix>& w, int m) const {
    RMatrix h = RMatrix::Zero(m, m);
    for (std::size_t b = 0; b < by_block.size(); ++b) {
      const RMatrix& wb = w[b];
      const auto& active = by_block[b];
      for (std::size_t ii = 0; ii < active.size(); ++ii) {
        const auto& ei = active[ii].second;
        for (std::size_t kk = ii; kk < active.size(); ++kk) {
          const auto& ek = active[kk].second;
          double acc = 0.0;
          for (const auto& e : ei) {
            if (e.r == e.c) {
              const auto wrow = wb.row(e.r);
              for (const auto& f : ek) {
                if (f.r == f.c)
                  acc += e.v * f.v * wrow(f.r) * wrow(f.r);
                else
                  acc += 2.0 * e.v * f.v * wrow(f.r) * wrow(f.c);
              }
            } else {
              const auto wp = wb.row(e.r);
              const auto wq = wb.row(e.c);
              for (const auto& f : ek) {
                if (f.r == f.c)
                  acc += 2.0 * e.v * f.v * wq(f.r) * wp(f.r);
                else
                  acc += 2.0 * e.v * f.v *
                         (wq(f.r) * wp(f.c) + wq(f.c) * wp(f.r));
              }
            }
          }
          h(active[ii].first, active[kk].first) += acc;
          if (active[ii].first != active[kk].first)
            h(active[kk].first, active[ii].first) += acc;
        }
      }
    }
    return h;
  }
};

/// Estimate of the smallest eigenvalue of a symmetric matrix by power
/// iteration on a shifted copy. Deliberately approximate: every step length
/// derived from it is re-verified by a Cholesky factorization.
inline double min_eig_estimate(const RMatrix& m, int iters = 48) {
  const int n = static_cast<int>(m.rows());
  if (n == 0) return 0.0;
  if (n == 1) return m(0, 0);
  const double shift = m.cwiseAbs().rowwise().sum().maxCoeff();
  if (shift == 0.0) return 0.0;
  RVector v(n);
  for (int i = 0; i < n; ++i) v(i) = (i % 2 == 0) ? 1.0 : -0.5;
  v.normalize();
  for (int it = 0; it < iters; ++it) {
    RVector w = shift * v - m * v;
    const double nw = w.norm();
    if (nw == 0.0) break;
    v = w / nw;
  }
  return v.dot(m * v);
}

/// Largest step alpha in (0, 1] with Lambda + alpha * delta_hat kept positive
/// definite across all blocks, using the 0.98 step fraction and Cholesky
/// verification with backtracking.
inline double step_length(const std::vector<RVector>& lam,
                          const std::vector<RMatrix>& delta_hat) {
  double alpha = 1.0;
  std::vector<RMatrix> scaled(delta_hat.size());
  for (std::size_t b = 0; b < delta_hat.size(); ++b) {
    const RVector inv_sqrt = lam[b].cwiseSqrt().cwiseInverse();
    scaled[b] = inv_sqrt.asDiagonal() * delta_hat[b] * inv_sqrt.asDiagonal();
    const double emin = min_eig_estimate(scaled[b]);
    if (emin < 0.0) alpha = std::min(alpha, 0.98 / (-emin));
  }
  const int n_backtrack = 80;
  for (int attempt = 0; attempt < n_backtrack; ++attempt) {
    bool ok = true;
    for (std::size_t b = 0; b < scaled.size() && ok; ++b) {
      const int nn = static_cast<int>(scaled[b].rows());
      RMatrix trial = alpha * scaled[b];
      trial.diagonal().array() += 1.0;
      Eigen::LLT<RMatrix> llt(trial);
      if (llt.info() != Eigen::Success) ok = false;
      else {
        for (int i = 0; i < nn; ++i)
          if (llt.matrixLLT()(i, i) <= 0.0) { ok = false; break; }
      }
    }
    if (ok) return alpha;
    alpha *= 0.8;
  }
  return 0.0;
}

}  // namespace detail

/// Dense primal-dual interior-point solve. Deterministic for fixed inputs;
/// single-threaded; throws std::runtime_error on numerical breakdown.
inline SdpSolution solve(const SdpProblem& prob, const SolveOptions& opts = {}) {
  prob.validate();
  const int nb = prob.num_blocks();
  const int m = prob.num_constraints();
  detail::RealForm rf(prob);
  const int n_total = rf.total_dim;

  // Initialization: identity scaled by problem norms; y = 0.
  double cnorm2 = 0.0;
  for (const auto& cb : rf.c) cnorm2 += cb.squaredNorm();
  const double cnorm = std::sqrt(cnorm2);
  const double bnorm = prob.rhs.norm();
  const double tau_p = std::max(1.0, bnorm);
  const double tau_d = std::max(1.0, cnorm);

  std::vector<RMatrix> x, s;
  for (int b = 0; b < nb; ++b) {
    x.push_back(tau_p * RMatrix::Identity(rf.n[b], rf.n[b]));
    s.push_back(tau_d * RMatrix::Identity(rf.n[b], rf.n[b]));
  }
  RVector y = RVector::Zero(m);

  const double feas_eps_p = 1e-8 * (1.0 + bnorm);
  const double feas_eps_d = 1e-8 * (1.0 + cnorm);

  SdpSolution sol;
  auto finish = [&](SdpStatus st, const std::string& msg, int it) {
    sol.status = st;
    sol.message = msg;
    sol.iterations = it;
    sol.y = y;
    sol.x.clear();
    for (int b = 0; b < nb; ++b) {
      const int nn = prob.block_sizes[b];
      if (!rf.embedded[b]) {
        sol.x.push_back(x[b].cast<Complex>());
      } else {
        CMatrix xb(nn, nn);
        for (int p = 0; p < nn; ++p)
          for (int q = 0; q < nn; ++q)
            xb(p, q) = Complex(
                0.5 * (x[b](p, q) + x[b](nn + p, nn + q)),
                0.5 * (x[b](nn + p, q) - x[b](p, nn + q)));
        sol.x.push_back(hermitize(xb));
      }
    }
    sol.s.clear();
    for (int b = 0; b < nb; ++b) {
      const int nn = prob.block_sizes[b];
      if (!rf.embedded[b]) {
        sol.s.push_back(s[b].cast<Complex>());
      } else {
        // The embedded slack tracks half the complex-picture slack, so the
        // reassembly omits the 1/2 used for the primal block.
        CMatrix sb(nn, nn);
        for (int p = 0; p < nn; ++p)
          for (int q = 0; q < nn; ++q)
            sb(p, q) = Complex(s[b](p, q) + s[b](nn + p, nn + q),
                               s[b](nn + p, q) - s[b](p, nn + q));
        sol.s.push_back(CMatrix(0.5 * (sb + sb.adjoint())));
      }
    }
    double primal = 0.0;
    for (int b = 0; b < nb; ++b) primal += (rf.c[b].array() * x[b].array()).sum();
    sol.primal_value = primal;
    sol.dual_value = prob.rhs.dot(y);
    sol.gap = sol.dual_value - sol.primal_value;
    return sol;
  };

  int stalls = 0;
  for (int iter = 0; iter <= opts.max_iters; ++iter) {
    // Residuals and convergence test.
    const RVector ax = rf.apply(x, m);
    const RVector r_p = prob.rhs - ax;
    std::vector<RMatrix> r_d = rf.adjoint(y);
    double dres2 = 0.0;
    for (int b = 0; b < nb; ++b) {
      r_d[b] = rf.c[b] + s[b] - r_d[b];  // C + S - A*(y)
      dres2 += r_d[b].squaredNorm();
    }
    const double pres = r_p.norm();
    const double dres = std::sqrt(dres2);
    double primal = 0.0;
    for (int b = 0; b < nb; ++b) primal += (rf.c[b].array() * x[b].array()).sum();
    const double dual = prob.rhs.dot(y);
    const double rel_gap = std::abs(primal - dual) / (1.0 + std::abs(primal));

    if (pres <= feas_eps_p && dres <= feas_eps_d && rel_gap <= opts.gap_target)
      return finish(SdpStatus::optimal, "converged", iter);
    if (std::abs(primal) > 1e12 || std::abs(dual) > 1e12 ||
        (y.size() > 0 && y.lpNorm<Eigen::Infinity>() > 1e13))
      return finish(SdpStatus::infeasible_detected,
                    "objective divergence; problem likely infeasible or "
                    "unbounded", iter);
    if (iter == opts.max_iters)
      return finish(SdpStatus::max_iters, "iteration cap reached", iter);

    // Nesterov-Todd scaling per block.
    std::vector<RMatrix> g(nb), ginv(nb), w(nb);
    std::vector<RVector> lam(nb);
    double mu_num = 0.0;
    for (int b = 0; b < nb; ++b) {
      Eigen::LLT<RMatrix> llt(x[b]);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error(
            "sdp solve: primal iterate lost positive definiteness");
      const RMatrix lx = llt.matrixL();
      const RMatrix k = lx.transpose() * s[b] * lx;
      Eigen::SelfAdjointEigenSolver<RMatrix> es(
          0.5 * (k + k.transpose()));
      if (es.info() != Eigen::Success)
        throw std::runtime_error("sdp solve: scaling eigendecomposition failed");
      const RVector lam2 = es.eigenvalues();
      if (lam2.minCoeff() <= 0.0)
        throw std::runtime_error(
            "sdp solve: dual iterate lost positive definiteness");
      lam[b] = lam2.cwiseSqrt();
      mu_num += lam2.sum();
      const RVector lam_isqrt = lam[b].cwiseSqrt().cwiseInverse();
      g[b] = lx * es.eigenvectors() * lam_isqrt.asDiagonal();
      // G^{-1} = Lambda^{1/2} Q^T L^{-1} via a triangular solve.
      RMatrix linv_t = llt.matrixL().solve(RMatrix::Identity(rf.n[b], rf.n[b]));
      ginv[b] = lam[b].cwiseSqrt().asDiagonal() * es.eigenvectors().transpose() *
                linv_t;
      w[b] = g[b] * g[b].transpose();
    }
    const double mu = mu_num / n_total;

    // Schur complement, factored once per iteration.
    Eigen::LLT<RMatrix> hfac;
    Eigen::LDLT<RMatrix> hfac_ldlt;
    bool use_ldlt = false;
    RMatrix h;
    if (m > 0) {
      h = rf.schur(w, m);
      hfac.compute(h);
      if (hfac.info() != Eigen::Success) {
        hfac_ldlt.compute(h);
        if (hfac_ldlt.info() != Eigen::Success)
          throw std::runtime_error("sdp solve: Schur factorization failed");
        use_ldlt = true;
      }
    }

    auto newton = [&](const std::vector<RMatrix>& r_c, RVector& dy,
                      std::vector<RMatrix>& dx, std::vector<RMatrix>& ds) {
      std::vector<RMatrix> rhs_blocks(nb);
      for (int b = 0; b < nb; ++b)
        rhs_blocks[b] = r_c[b] + w[b] * r_d[b] * w[b];
      if (m > 0) {
        const RVector rhs_y = rf.apply(rhs_blocks, m) - r_p;
        dy = use_ldlt ? RVector(hfac_ldlt.solve(rhs_y))
                      : RVector(hfac.solve(rhs_y));
      } else {
        dy.resize(0);
      }
      ds = rf.adjoint(dy);
      dx.resize(nb);
      for (int b = 0; b < nb; ++b) {
        ds[b] -= r_d[b];
        dx[b] = r_c[b] - w[b] * ds[b] * w[b];
        detail::symmetrize(dx[b]);
      }
    };

    auto scale_pair = [&](const std::vector<RMatrix>& dx,
                          const std::vector<RMatrix>& ds,
                          std::vector<RMatrix>& dxh,
                          std::vector<RMatrix>& dsh) {
      dxh.resize(nb);
      dsh.resize(nb);
      for (int b = 0; b < nb; ++b) {
        dxh[b] = ginv[b] * dx[b] * ginv[b].transpose();
        detail::symmetrize(dxh[b]);
        dsh[b] = g[b].transpose() * ds[b] * g[b];
        detail::symmetrize(dsh[b]);
      }
    };

    // Predictor (affine scaling direction): R_c = -X.
    std::vector<RMatrix> r_c(nb);
    for (int b = 0; b < nb; ++b) r_c[b] = -x[b];
    RVector dy_aff;
    std::vector<RMatrix> dx_aff, ds_aff, dxh_aff, dsh_aff;
    newton(r_c, dy_aff, dx_aff, ds_aff);
    scale_pair(dx_aff, ds_aff, dxh_aff, dsh_aff);
    const double ap_aff = detail::step_length(lam, dxh_aff);
    const double ad_aff = detail::step_length(lam, dsh_aff);

    double mu_aff_num = 0.0;
    for (int b = 0; b < nb; ++b) {
      const RMatrix xa = RMatrix(lam[b].asDiagonal()) + ap_aff * dxh_aff[b];
      const RMatrix sa = RMatrix(lam[b].asDiagonal()) + ad_aff * dsh_aff[b];
      mu_aff_num += (xa.array() * sa.array()).sum();
    }
    const double mu_aff = std::max(0.0, mu_aff_num) / n_total;
    const double sigma =
        std::min(1.0, std::max(0.0, std::pow(mu_aff / mu, 3.0)));

    // Corrector with Mehrotra second-order term.
    for (int b = 0; b < nb; ++b) {
      const int nn = rf.n[b];
      RMatrix mhat = -0.5 * (dxh_aff[b] * dsh_aff[b] +
                             dsh_aff[b] * dxh_aff[b]);
      mhat.diagonal().array() += sigma * mu;
      mhat.diagonal() -= lam[b].cwiseAbs2();
      RMatrix rhat(nn, nn);
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j)
          rhat(i, j) = mhat(i, j) * 2.0 / (lam[b](i) + lam[b](j));
      r_c[b] = g[b] * rhat * g[b].transpose();
      detail::symmetrize(r_c[b]);
    }
    RVector dy;
    std::vector<RMatrix> dx, ds, dxh, dsh;
    newton(r_c, dy, dx, ds);
    scale_pair(dx, ds, dxh, dsh);
    const double ap = detail::step_length(lam, dxh);
    const double ad = detail::step_length(lam, dsh);

    // Commit a step only after verifying the stepped point stays strictly
    // inside the cone: the fraction-to-boundary bound is computed in scaled
    // coordinates, and mapping it back can overshoot by rounding when the
    // scaling is ill-conditioned. Shrinking on Cholesky failure makes the
    // next iteration's factorization succeed by construction.
    auto commit_step = [&](std::vector<RMatrix>& z,
                           const std::vector<RMatrix>& dz, double alpha) {
      for (int attempt = 0; attempt < 60 && alpha > 1e-16; ++attempt) {
        bool ok = true;
        for (int b = 0; b < nb && ok; ++b) {
          RMatrix trial = z[b] + alpha * dz[b];
          detail::symmetrize(trial);
          Eigen::LLT<RMatrix> llt(trial);
          if (llt.info() != Eigen::Success) {
            ok = false;
            break;
          }
          for (int i = 0; i < rf.n[b]; ++i)
            if (llt.matrixLLT()(i, i) <= 0.0) {
              ok = false;
              break;
            }
        }
        if (ok) {
          for (int b = 0; b < nb; ++b) {
            z[b] += alpha * dz[b];
            detail::symmetrize(z[b]);
          }
          return alpha;
        }
        alpha *= 0.7;
      }
      return 0.0;
    };
    const double ap_used = commit_step(x, dx, ap);
    const double ad_used = commit_step(s, ds, ad);
    y += ad_used * dy;

    if (ap_used < 1e-10 && ad_used < 1e-10) {
      if (++stalls >= 3) {
        const bool feasible = pres <= 1e-6 * (1.0 + bnorm) &&
                              dres <= 1e-6 * (1.0 + cnorm);
        return finish(feasible ? SdpStatus::max_iters
                               : SdpStatus::infeasible_detected,
                      feasible ? "search stalled near the solution"
                               : "search stalled with large residuals",
                      iter);
      }
    } else {
      stalls = 0;
    }
  }
  return finish(SdpStatus::max_iters, "iteration cap reached", opts.max_iters);
}

}  // namespace dieroll
