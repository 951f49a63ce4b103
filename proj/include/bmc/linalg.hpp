#ifndef BMC_LINALG_HPP_
#define BMC_LINALG_HPP_

// Dense kernels for small matrices: exponential, Van Loan integrals,
// principal logarithm and stationary vectors. Every function is pure and
// templated on the Eigen expression it receives.

#include <cmath>
#include <complex>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "bmc/errors.hpp"

namespace bmc {

/// Residual tolerance for structural identities (row sums, stationarity).
inline constexpr double kStructuralTol = 1e-10;
/// Tolerance used when checking integrals against an oracle.
inline constexpr double kIntegralTol = 1e-8;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseRowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

enum class ChainKind { generator, stochastic };

namespace detail {

template <typename Derived>
void require_square_finite(const Eigen::MatrixBase<Derived> &a,
                           const char *op) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    std::ostringstream os;
    os << op << ": expected a non-empty square matrix, got " << a.rows()
       << "x" << a.cols();
    throw DimensionError(os.str());
  }
  if (!a.allFinite()) {
    throw DomainError(std::string(op) + ": non-finite entry in input");
  }
}

template <typename Derived>
typename Derived::Scalar norm1(const Eigen::MatrixBase<Derived> &a) {
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

// Diagonal Pade approximant r_m(A) = (V - U)^{-1} (V + U) of degree m.
template <typename Scalar>
DenseMatrix<Scalar> pade_exp(const DenseMatrix<Scalar> &a, int degree) {
  using M = DenseMatrix<Scalar>;
  const Eigen::Index n = a.rows();
  const M id = M::Identity(n, n);
  const M a2 = a * a;
  M u, v;
  switch (degree) {
  case 3: {
    const Scalar b[] = {120, 60, 12, 1};
    u = a * (b[3] * a2 + b[1] * id);
    v = b[2] * a2 + b[0] * id;
    break;
  }
  case 5: {
    const Scalar b[] = {30240, 15120, 3360, 420, 30, 1};
    const M a4 = a2 * a2;
    u = a * (b[5] * a4 + b[3] * a2 + b[1] * id);
    v = b[4] * a4 + b[2] * a2 + b[0] * id;
    break;
  }
  case 7: {
    const Scalar b[] = {17297280, 8648640, 1995840, 277200,
                        25200,    1512,    56,      1};
    const M a4 = a2 * a2;
    const M a6 = a4 * a2;
    u = a * (b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
    v = b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
    break;
  }
  case 9: {
    const Scalar b[] = {17643225600.0, 8821612800.0, 2075673600.0,
                        302702400.0,   30270240.0,   2162160.0,
                        110880.0,      3960.0,       90.0,
                        1.0};
    const M a4 = a2 * a2;
    const M a6 = a4 * a2;
    const M a8 = a6 * a2;
    u = a * (b[9] * a8 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
    v = b[8] * a8 + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
    break;
  }
  default: {
    const Scalar b[] = {64764752532480000.0, 32382376266240000.0,
                        7771770303897600.0,  1187353796428800.0,
                        129060195264000.0,   10559470521600.0,
                        670442572800.0,      33522128640.0,
                        1323241920.0,        40840800.0,
                        960960.0,            16380.0,
                        182.0,               1.0};
    const M a4 = a2 * a2;
    const M a6 = a4 * a2;
    u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 +
             b[5] * a4 + b[3] * a2 + b[1] * id);
    v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
        b[2] * a2 + b[0] * id;
    break;
  }
  }
  return (v - u).partialPivLu().solve(v + u);
}

} // namespace detail

/// Matrix exponential by scaling and squaring with a diagonal Pade
/// approximant; the degree (3, 5, 7, 9 or 13) and the number of squarings
/// follow from the 1-norm of the argument.
template <typename Derived>
DenseMatrix<typename Derived::Scalar>
expm(const Eigen::MatrixBase<Derived> &a) {
  using Scalar = typename Derived::Scalar;
  detail::require_square_finite(a, "expm");
  DenseMatrix<Scalar> x = a;
  const Scalar norm = detail::norm1(x);

  constexpr int degrees[] = {3, 5, 7, 9};
  constexpr double thetas[] = {1.495585217958292e-2, 2.539398330063230e-1,
                               9.504178996162932e-1, 2.097847961257068e0};
  for (int k = 0; k < 4; ++k) {
    if (norm <= thetas[k]) {
      return detail::pade_exp<Scalar>(x, degrees[k]);
    }
  }
  constexpr double theta13 = 5.371920351148152e0;
  int squarings = 0;
  if (norm > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    x /= std::ldexp(Scalar(1), squarings);
  }
  DenseMatrix<Scalar> result = detail::pade_exp<Scalar>(x, 13);
  for (int s = 0; s < squarings; ++s) {
    result = (result * result).eval();
  }
  return result;
}

/// Integral of exp(A (tau - y)) B exp(C y) over y in [0, tau], read off as
/// the upper-right block of exp([[A, B], [0, C]] tau).
template <typename DA, typename DB, typename DC>
DenseMatrix<typename DA::Scalar>
van_loan_integral(const Eigen::MatrixBase<DA> &a, const Eigen::MatrixBase<DB> &b,
                  const Eigen::MatrixBase<DC> &c, typename DA::Scalar tau) {
  using Scalar = typename DA::Scalar;
  const Eigen::Index r = a.rows();
  if (a.cols() != r || b.rows() != r || b.cols() != r || c.rows() != r ||
      c.cols() != r || r == 0) {
    throw DimensionError("van_loan_integral: A, B, C must share one square "
                         "shape");
  }
  if (!(tau >= 0) || !std::isfinite(tau)) {
    throw DomainError("van_loan_integral: tau must be finite and >= 0");
  }
  if (tau == 0) {
    return DenseMatrix<Scalar>::Zero(r, r);
  }
  DenseMatrix<Scalar> block = DenseMatrix<Scalar>::Zero(2 * r, 2 * r);
  block.topLeftCorner(r, r) = a * tau;
  block.topRightCorner(r, r) = b * tau;
  block.bottomRightCorner(r, r) = c * tau;
  return expm(block).topRightCorner(r, r);
}

namespace detail {

// Principal square root by the product form of the Denman-Beavers
// iteration.
template <typename Scalar>
DenseMatrix<Scalar> sqrtm_db(const DenseMatrix<Scalar> &a) {
  using M = DenseMatrix<Scalar>;
  const Eigen::Index n = a.rows();
  const M id = M::Identity(n, n);
  M m = a;
  M y = a;
  const Scalar tol = Scalar(64) * Eigen::NumTraits<Scalar>::epsilon() *
                     static_cast<Scalar>(n);
  for (int it = 0; it < 100; ++it) {
    Eigen::FullPivLU<M> lu(m);
    if (!lu.isInvertible()) {
      throw LogmFailure("principal_logm: singular iterate in square root");
    }
    const M minv = lu.inverse();
    y = (y * (id + minv) / Scalar(2)).eval();
    m = ((id + (m + minv) / Scalar(2)) / Scalar(2)).eval();
    if (!m.allFinite() || !y.allFinite()) {
      throw LogmFailure("principal_logm: square root iteration diverged");
    }
    if (norm1(M(m - id)) <= tol) {
      return y;
    }
  }
  throw LogmFailure("principal_logm: square root iteration did not converge");
}

} // namespace detail

/// Principal logarithm by inverse scaling and squaring: repeated principal
/// square roots bring the argument near the identity, where the series
/// 2 atanh((X - I)(X + I)^{-1}) converges fast. Throws LogmFailure when an
/// eigenvalue lies on the closed negative real axis, an iteration breaks
/// down, or exp of the result fails to reproduce the argument.
template <typename Derived>
DenseMatrix<typename Derived::Scalar>
principal_logm(const Eigen::MatrixBase<Derived> &r_in) {
  using Scalar = typename Derived::Scalar;
  using M = DenseMatrix<Scalar>;
  detail::require_square_finite(r_in, "principal_logm");
  const M r = r_in;
  const Eigen::Index n = r.rows();
  const M id = M::Identity(n, n);
  const Scalar eps = Eigen::NumTraits<Scalar>::epsilon();

  Eigen::EigenSolver<M> eig(r, false);
  if (eig.info() != Eigen::Success) {
    throw LogmFailure("principal_logm: eigenvalue computation failed");
  }
  const Scalar scale = std::max(Scalar(1), detail::norm1(r));
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::complex<Scalar> lambda = eig.eigenvalues()(k);
    if (std::abs(lambda.imag()) <= Scalar(1e3) * eps * scale &&
        lambda.real() <= Scalar(1e3) * eps * scale) {
      std::ostringstream os;
      os << "principal_logm: eigenvalue " << lambda.real()
         << " on the closed negative real axis";
      throw LogmFailure(os.str());
    }
  }

  M x = r;
  int roots = 0;
  while (detail::norm1(M(x - id)) > Scalar(0.25)) {
    if (++roots > 64) {
      throw LogmFailure("principal_logm: too many square roots");
    }
    x = detail::sqrtm_db<Scalar>(x);
  }

  // (x + I)^{-1} (x - I); the two factors commute.
  const M z = (x + id).partialPivLu().solve(M(x - id));
  const M z2 = z * z;
  M power = z;
  M series = z;
  for (int j = 3; j < 400; j += 2) {
    power = (power * z2).eval();
    const M term = power / static_cast<Scalar>(j);
    series += term;
    if (detail::norm1(term) <= eps * std::max(Scalar(1e-300), detail::norm1(series))) {
      break;
    }
  }
  M result = series * std::ldexp(Scalar(2), roots);
  if (!result.allFinite()) {
    throw LogmFailure("principal_logm: non-finite result");
  }
  const M back = expm(result);
  if (detail::norm1(M(back - r)) > Scalar(1e-8) * scale) {
    throw LogmFailure("principal_logm: exp(log R) does not reproduce R");
  }
  return result;
}

/// Unique probability row vector v with v M = 0 (generator) or v M = v
/// (stochastic). One equation of the singular system is replaced by the
/// normalization and the bordered system is solved by full-pivot LU.
template <typename Derived>
DenseRowVector<typename Derived::Scalar>
stationary_row_vector(const Eigen::MatrixBase<Derived> &m, ChainKind kind) {
  using Scalar = typename Derived::Scalar;
  using M = DenseMatrix<Scalar>;
  detail::require_square_finite(m, "stationary_row_vector");
  const Eigen::Index n = m.rows();
  M system = m.transpose();
  if (kind == ChainKind::stochastic) {
    system -= M::Identity(n, n);
  }
  system.row(n - 1).setOnes();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rhs =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
  rhs(n - 1) = 1;

  Eigen::FullPivLU<M> lu(system);
  lu.setThreshold(Scalar(1e-12));
  if (!lu.isInvertible()) {
    throw NonUniqueStationary(
        "stationary_row_vector: null space is not one-dimensional");
  }
  DenseRowVector<Scalar> v = lu.solve(rhs).transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (v(i) < 0) {
      if (v(i) < -Scalar(1e-10)) {
        throw NonUniqueStationary(
            "stationary_row_vector: solution has a negative entry");
      }
      v(i) = 0;
    }
  }
  v /= v.sum();
  return v;
}

} // namespace bmc

#endif // BMC_LINALG_HPP_
