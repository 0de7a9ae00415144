#pragma once

// Dense complex operator algebra shared by every higher module: the free
// resolvent, its anti-Hermitian/Hermitian split, operator norms and the
// "(1 - A)^{-1} B" solves that appear throughout the formalism.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scatterkit/errors.hpp"

namespace scatterkit {

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using ComplexMatrix = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using ComplexVector = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
using RealVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

/// Condition estimates above this abort a solve in double precision.
inline constexpr double kDefaultConditionLimit = 1e12;

/// Floor used when normalizing residuals by an operator norm, so that the
/// free-particle case reports 0 instead of 0/0.
inline constexpr double kNormFloor = 1e-30;

/// Complex energy z = e0 + i eps with eps > 0. The conjugate is derived on
/// demand and never stored.
template <typename Real>
class SpectralParameter {
 public:
  SpectralParameter(Real e0, Real eps) : e0_(e0), eps_(eps) {
    if (!std::isfinite(static_cast<double>(e0)) || !std::isfinite(static_cast<double>(eps))) {
      throw Error(ErrorKind::invalid_input, "spectral parameter must be finite");
    }
    if (!(eps > Real(0))) {
      throw Error(ErrorKind::domain, "spectral parameter needs eps > 0, got " +
                                         std::to_string(static_cast<double>(eps)));
    }
  }

  Real e0() const { return e0_; }
  Real eps() const { return eps_; }
  Complex<Real> z() const { return {e0_, eps_}; }
  Complex<Real> z_conj() const { return {e0_, -eps_}; }

 private:
  Real e0_;
  Real eps_;
};

/// Spectrum of the free Hamiltonian; H0 is diagonal in the working basis.
template <typename Real>
class FreeSpectrum {
 public:
  FreeSpectrum() = default;

  explicit FreeSpectrum(RealVector<Real> eigenvalues) : values_(std::move(eigenvalues)) {
    if (values_.size() == 0) {
      throw Error(ErrorKind::invalid_input, "free spectrum must be non-empty");
    }
    for (Eigen::Index k = 0; k < values_.size(); ++k) {
      if (!std::isfinite(static_cast<double>(values_(k))) || values_(k) < Real(0)) {
        throw Error(ErrorKind::invalid_input,
                    "free spectrum entries must be finite and nonnegative (index " +
                        std::to_string(k) + ")");
      }
    }
  }

  explicit FreeSpectrum(const std::vector<Real>& eigenvalues)
      : FreeSpectrum(Eigen::Map<const RealVector<Real>>(eigenvalues.data(),
                                                         static_cast<Eigen::Index>(eigenvalues.size()))) {}

  Eigen::Index dim() const { return values_.size(); }
  const RealVector<Real>& eigenvalues() const { return values_; }
  Real min() const { return values_.minCoeff(); }
  Real max() const { return values_.maxCoeff(); }
  Real width() const { return values_.maxCoeff() - values_.minCoeff(); }

 private:
  RealVector<Real> values_;
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const auto v = m(i, j);
      if (!std::isfinite(static_cast<double>(std::real(v))) ||
          !std::isfinite(static_cast<double>(std::imag(v)))) {
        return false;
      }
    }
  }
  return true;
}

template <typename Derived>
void require_square_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::shape_mismatch, std::string(what) + " must be square");
  }
  if (!all_finite(m)) {
    throw Error(ErrorKind::invalid_input, std::string(what) + " has non-finite entries");
  }
}

template <typename DerivedA, typename DerivedB>
void require_same_shape(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                        const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::shape_mismatch, std::string("shape mismatch in ") + what);
  }
}

/// Spectral norm (largest singular value).
template <typename Derived>
auto op_norm(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  if (!all_finite(m)) {
    throw Error(ErrorKind::invalid_input, "op_norm: non-finite entries");
  }
  if (m.size() == 0) return Real(0);
  using Plain = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Plain dense = m;
  Eigen::JacobiSVD<Plain> svd(dense);
  return svd.singularValues().size() ? Real(svd.singularValues()(0)) : Real(0);
}

/// Frobenius norm, reported alongside op_norm for cross-checking.
template <typename Derived>
auto frobenius_norm(const Eigen::MatrixBase<Derived>& m) {
  return m.norm();
}

/// ||M - M^+|| / max(||M||, floor).
template <typename Derived>
auto hermiticity_defect(const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  const Real n = op_norm(m);
  return op_norm(m - m.adjoint()) / std::max(n, Real(kNormFloor));
}

/// G0(z) = (z - H0)^{-1}, exact and diagonal.
template <typename Real>
ComplexMatrix<Real> resolvent_free(const FreeSpectrum<Real>& h0, Complex<Real> z) {
  const auto& lam = h0.eigenvalues();
  ComplexMatrix<Real> g = ComplexMatrix<Real>::Zero(lam.size(), lam.size());
  for (Eigen::Index k = 0; k < lam.size(); ++k) {
    g(k, k) = Real(1) / (z - lam(k));
  }
  return g;
}

template <typename Real>
ComplexMatrix<Real> resolvent_free(const FreeSpectrum<Real>& h0, const SpectralParameter<Real>& z) {
  return resolvent_free(h0, z.z());
}

template <typename Real>
struct GreenSplit {
  ComplexMatrix<Real> g0;  ///< G0(z)
  ComplexMatrix<Real> g1;  ///< anti-Hermitian part (G0(z) - G0(z~)) / 2
  ComplexMatrix<Real> g2;  ///< Hermitian part (G0(z) + G0(z~)) / 2
};

/// Splits G0(z) into anti-Hermitian and Hermitian parts. Diagonal entries are
/// -i eps/d and (E0 - l)/d with d = (E0 - l)^2 + eps^2.
template <typename Real>
GreenSplit<Real> green_split(const FreeSpectrum<Real>& h0, const SpectralParameter<Real>& z) {
  const auto& lam = h0.eigenvalues();
  const Eigen::Index n = lam.size();
  GreenSplit<Real> out{ComplexMatrix<Real>::Zero(n, n), ComplexMatrix<Real>::Zero(n, n),
                       ComplexMatrix<Real>::Zero(n, n)};
  const Complex<Real> zp = z.z();
  const Complex<Real> zm = z.z_conj();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex<Real> gp = Real(1) / (zp - lam(k));
    const Complex<Real> gm = Real(1) / (zm - lam(k));
    out.g0(k, k) = gp;
    out.g1(k, k) = (gp - gm) / Real(2);
    out.g2(k, k) = (gp + gm) / Real(2);
  }
  return out;
}

template <typename Real>
struct GreenLimitRow {
  Real eps;
  Real g1_norm;       ///< ||G1(z)||
  Real g2_pv_deviation;  ///< ||G2(z) - diag(1/(e0 - l_k))||
};

/// Tracks how G1 and G2 approach their eps -> 0 limits at an off-spectrum
/// energy. On the discrete model G1 vanishes like eps and G2 approaches the
/// principal-value resolvent like eps^2.
template <typename Real>
std::vector<GreenLimitRow<Real>> green_limits_check(const FreeSpectrum<Real>& h0, Real e0,
                                                    const std::vector<Real>& eps_sequence) {
  const auto& lam = h0.eigenvalues();
  for (Eigen::Index k = 0; k < lam.size(); ++k) {
    const Real scale = std::max(Real(1), std::abs(lam(k)));
    if (std::abs(e0 - lam(k)) <= Real(64) * std::numeric_limits<Real>::epsilon() * scale) {
      throw Error(ErrorKind::degenerate,
                  "green_limits_check: e0 coincides with a free eigenvalue; the limit is "
                  "distributional there");
    }
  }
  ComplexMatrix<Real> pv = ComplexMatrix<Real>::Zero(lam.size(), lam.size());
  for (Eigen::Index k = 0; k < lam.size(); ++k) pv(k, k) = Real(1) / (e0 - lam(k));

  std::vector<GreenLimitRow<Real>> rows;
  rows.reserve(eps_sequence.size());
  for (Real eps : eps_sequence) {
    const auto split = green_split(h0, SpectralParameter<Real>(e0, eps));
    rows.push_back({eps, op_norm(split.g1), op_norm(split.g2 - pv)});
  }
  return rows;
}

/// Solves (1 - a) X = b by LU with partial pivoting and one step of
/// iterative refinement. Throws NearSingularError when the reciprocal
/// condition estimate says the result cannot be trusted.
template <typename DerivedA, typename DerivedB>
auto solve_operator_equation(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                             double condition_limit = kDefaultConditionLimit,
                             const std::string& label = "(1 - A) X = B") {
  using Scalar = typename DerivedA::Scalar;
  using Plain = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  require_square_finite(a, "operator A");
  if (b.rows() != a.rows()) {
    throw Error(ErrorKind::shape_mismatch, "solve_operator_equation: row count mismatch");
  }
  if (!all_finite(b)) {
    throw Error(ErrorKind::invalid_input, "solve_operator_equation: B has non-finite entries");
  }
  const Plain m = Plain::Identity(a.rows(), a.cols()) - a;
  Eigen::PartialPivLU<Plain> lu(m);
  const double rcond = static_cast<double>(lu.rcond());
  double condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  // rcond() is unreliable for exactly singular factors; the pivot ratio bounds it from below
  const auto pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double pmin = static_cast<double>(pivots.minCoeff());
  const double pmax = static_cast<double>(pivots.maxCoeff());
  condition = std::max(condition, pmin > 0.0 ? pmax / pmin : std::numeric_limits<double>::infinity());
  // measured against the identity, so a uniformly tiny 1 - A (a pole) also counts
  const double norm1 = static_cast<double>(m.cwiseAbs().colwise().sum().maxCoeff());
  if (norm1 < 1.0) condition /= norm1;
  if (!(condition <= condition_limit)) {
    throw NearSingularError(condition, label);
  }
  Plain x = lu.solve(b);
  const Plain r = b - m * x;
  x += lu.solve(r);
  return x;
}

/// Residual ||(1 - a) X - b|| for a solution X.
template <typename DA, typename DX, typename DB>
auto operator_equation_residual(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DX>& x,
                                const Eigen::MatrixBase<DB>& b) {
  return op_norm(x - a * x - b);
}

}  // namespace scatterkit
