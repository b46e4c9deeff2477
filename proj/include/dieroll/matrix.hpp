// Dense complex-Hermitian linear algebra kernel: Kronecker products,
// partial traces over the first tensor factor, Hermitian eigendecomposition
// and positive-semidefiniteness certification.
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace dieroll {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Dimensions of a bipartite space A (x) B. Composite index convention,
/// fixed repo-wide: i = iA * dim_b + iB.
struct BipartiteDims {
  int dim_a = 1;
  int dim_b = 1;

  int total() const { return dim_a * dim_b; }

  void validate() const {
    if (dim_a < 1 || dim_b < 1)
      throw std::invalid_argument("BipartiteDims: dimensions must be >= 1");
  }
};

inline double frobenius_norm(const CMatrix& a) { return a.norm(); }

inline double max_abs(const CMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline bool all_finite(const CMatrix& a) { return a.allFinite(); }

/// max |A - A^dagger| entrywise.
inline double hermiticity_defect(const CMatrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  return max_abs(a - a.adjoint());
}

inline bool is_hermitian(const CMatrix& a, double tol) {
  return a.rows() == a.cols() && hermiticity_defect(a) <= tol;
}

inline bool is_hermitian(const CMatrix& a) {
  return is_hermitian(a, 1e-12 * std::max(1.0, frobenius_norm(a)));
}

/// Symmetrize (A + A^dagger)/2 after checking the defect is within
/// 1e-10 * max(1, ||A||_F). Larger violations are an error, never silently
/// repaired.
inline CMatrix hermitize(const CMatrix& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("hermitize: matrix must be square");
  const double tol = 1e-10 * std::max(1.0, frobenius_norm(a));
  if (hermiticity_defect(a) > tol)
    throw std::invalid_argument("hermitize: matrix is not Hermitian (defect " +
                                std::to_string(hermiticity_defect(a)) + ")");
  return 0.5 * (a + a.adjoint().eval());
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

/// Trace out the A factor: result[iB,jB] = sum_iA M[(iA,iB),(iA,jB)].
inline CMatrix partial_trace_A(const CMatrix& m, const BipartiteDims& dims) {
  dims.validate();
  const int da = dims.dim_a, db = dims.dim_b;
  if (m.rows() != dims.total() || m.cols() != dims.total())
    throw std::invalid_argument("partial_trace_A: matrix is " +
                                std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + ", expected " +
                                std::to_string(dims.total()) + " square");
  CMatrix out = CMatrix::Zero(db, db);
  for (int ia = 0; ia < da; ++ia)
    out += m.block(ia * db, ia * db, db, db);
  return out;
}

/// Tr_A(|v><v|) computed without materializing the outer product.
inline CMatrix partial_trace_A_pure(const CVector& v, const BipartiteDims& dims) {
  dims.validate();
  if (v.size() != dims.total())
    throw std::invalid_argument("partial_trace_A_pure: vector is " +
                                std::to_string(v.size()) + ", expected " +
                                std::to_string(dims.total()));
  CMatrix out = CMatrix::Zero(dims.dim_b, dims.dim_b);
  for (int ia = 0; ia < dims.dim_a; ++ia) {
    const auto seg = v.segment(ia * dims.dim_b, dims.dim_b);
    if (seg.isZero(0.0)) continue;  // skip empty blocks (cheap for sparse states)
    out.noalias() += seg * seg.adjoint();
  }
  return out;
}

struct EighResult {
  RVector eigenvalues;   // ascending
  CMatrix eigenvectors;  // columns, unitary
};

/// Hermitian eigendecomposition. Input must be Hermitian within
/// 1e-10 * max(1, ||A||_F); it is symmetrized before decomposition.
inline EighResult eigh(const CMatrix& a) {
  const CMatrix h = hermitize(a);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigh: eigendecomposition failed to converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

inline double min_eigenvalue(const CMatrix& a) {
  const CMatrix h = hermitize(a);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("min_eigenvalue: eigendecomposition failed");
  return es.eigenvalues()(0);
}

inline double max_eigenvalue(const CMatrix& a) {
  const CMatrix h = hermitize(a);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("max_eigenvalue: eigendecomposition failed");
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

struct PsdCheck {
  bool certified = false;
  double lambda_min = 0.0;
};

/// Default PSD tolerance: 1e-9 * n * max(1, ||A||_F).
inline double default_psd_tol(const CMatrix& a) {
  return 1e-9 * static_cast<double>(a.rows()) *
         std::max(1.0, frobenius_norm(a));
}

/// Certify A >= -tol * I. Pass tol < 0 to use the default tolerance.
inline PsdCheck psd_check(const CMatrix& a, double tol = -1.0) {
  if (tol < 0) tol = default_psd_tol(a);
  const double lmin = min_eigenvalue(a);
  return {lmin >= -tol, lmin};
}

/// Re(<A, B>) = Re Tr(A^dagger B); real for Hermitian pairs.
inline double inner(const CMatrix& a, const CMatrix& b) {
  return a.conjugate().cwiseProduct(b).sum().real();
}

}  // namespace dieroll
