#pragma once

// Pair-channel operators: two-body T and K matrices, their Heitler
// interrelations and pair unitarity, plus a continuum s-wave momentum-grid
// solver with an analytic separable (Yamaguchi) oracle.

#include <algorithm>
#include <compare>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Eigenvalues>

#include "scatterkit/linop.hpp"

namespace scatterkit {

/// Unordered particle pair (m, n), 1-based, stored with m < n.
struct PairChannel {
  int m = 1;
  int n = 2;

  PairChannel() = default;
  PairChannel(int a, int b) : m(std::min(a, b)), n(std::max(a, b)) {
    if (a == b || m < 1) {
      throw Error(ErrorKind::invalid_input,
                  "pair channel needs two distinct positive particle indices");
    }
  }

  auto operator<=>(const PairChannel&) const = default;

  std::string label() const { return std::to_string(m) + std::to_string(n); }
};

/// All C = N(N-1)/2 channels of an N-particle system in lexicographic order.
inline std::vector<PairChannel> all_channels(int n_particles) {
  std::vector<PairChannel> out;
  for (int m = 1; m <= n_particles; ++m) {
    for (int n = m + 1; n <= n_particles; ++n) out.emplace_back(m, n);
  }
  return out;
}

/// v = strength * g g^+.
template <typename Real>
struct SeparablePotential {
  Real strength{};
  ComplexVector<Real> form_factor;
};

/// Hermitian pair potential, either a dense matrix or a rank-one separable
/// form. An all-zero potential marks an inert channel.
template <typename Real>
class PairPotential {
 public:
  static PairPotential dense(ComplexMatrix<Real> v) {
    require_square_finite(v, "pair potential");
    if (v.size() > 0 && hermiticity_defect(v) > Real(1e-14) && op_norm(v) > Real(0)) {
      throw Error(ErrorKind::invalid_input, "dense pair potential is not Hermitian");
    }
    PairPotential p;
    p.form_ = std::move(v);
    return p;
  }

  static PairPotential separable(Real strength, ComplexVector<Real> g) {
    if (!std::isfinite(static_cast<double>(strength))) {
      throw Error(ErrorKind::invalid_input, "separable strength must be finite");
    }
    if (g.size() == 0 || !all_finite(g) || g.norm() == Real(0)) {
      throw Error(ErrorKind::invalid_input, "separable form factor must be finite and nonzero");
    }
    PairPotential p;
    p.form_ = SeparablePotential<Real>{strength, std::move(g)};
    return p;
  }

  static PairPotential zero(Eigen::Index dim) {
    return dense(ComplexMatrix<Real>::Zero(dim, dim));
  }

  bool is_separable() const { return std::holds_alternative<SeparablePotential<Real>>(form_); }

  const SeparablePotential<Real>& as_separable() const {
    return std::get<SeparablePotential<Real>>(form_);
  }

  Eigen::Index dim() const {
    if (is_separable()) return as_separable().form_factor.size();
    return std::get<ComplexMatrix<Real>>(form_).rows();
  }

  /// Dense materialization (lambda g g^+ for the separable form).
  ComplexMatrix<Real> matrix() const {
    if (is_separable()) {
      const auto& s = as_separable();
      return s.strength * (s.form_factor * s.form_factor.adjoint());
    }
    return std::get<ComplexMatrix<Real>>(form_);
  }

  bool is_inert() const {
    if (is_separable()) return as_separable().strength == Real(0);
    return std::get<ComplexMatrix<Real>>(form_).isZero(0);
  }

  PairPotential scaled(Real s) const {
    PairPotential p = *this;
    if (is_separable()) {
      std::get<SeparablePotential<Real>>(p.form_).strength *= s;
    } else {
      std::get<ComplexMatrix<Real>>(p.form_) *= s;
    }
    return p;
  }

 private:
  PairPotential() = default;
  std::variant<ComplexMatrix<Real>, SeparablePotential<Real>> form_;
};

/// T_a = v + v G0 T_a, solved as (1 - v G0)^{-1} v.
template <typename Real>
ComplexMatrix<Real> solve_t_pair(const PairPotential<Real>& v, const ComplexMatrix<Real>& g0,
                                 double condition_limit = kDefaultConditionLimit) {
  const ComplexMatrix<Real> vm = v.matrix();
  require_same_shape(vm, g0, "solve_t_pair");
  return solve_operator_equation(vm * g0, vm, condition_limit,
                                 "two-body T: 1 - v G0 (pole of the pair channel)");
}

/// K_a = v + v G2 K_a. Hermitian whenever v and G2 are.
template <typename Real>
ComplexMatrix<Real> solve_k_pair(const PairPotential<Real>& v, const ComplexMatrix<Real>& g2,
                                 double condition_limit = kDefaultConditionLimit) {
  const ComplexMatrix<Real> vm = v.matrix();
  require_same_shape(vm, g2, "solve_k_pair");
  return solve_operator_equation(vm * g2, vm, condition_limit, "two-body K: 1 - v G2");
}

/// K_a = (1 + T_a G1)^{-1} T_a.
template <typename Real>
ComplexMatrix<Real> k_from_t(const ComplexMatrix<Real>& t, const ComplexMatrix<Real>& g1,
                             double condition_limit = kDefaultConditionLimit) {
  require_same_shape(t, g1, "k_from_t");
  return solve_operator_equation(ComplexMatrix<Real>(-t * g1), t, condition_limit,
                                 "1 + T_a G1");
}

/// ||T - K - T G1 K|| / max(||T||, floor).
template <typename Real>
Real two_body_heitler_residual(const ComplexMatrix<Real>& t, const ComplexMatrix<Real>& k,
                               const ComplexMatrix<Real>& g1) {
  require_same_shape(t, k, "two_body_heitler_residual");
  require_same_shape(t, g1, "two_body_heitler_residual");
  return op_norm(t - k - t * g1 * k) / std::max(op_norm(t), Real(kNormFloor));
}

/// ||T - T^+ - 2 T^+ G1 T||, unnormalized.
template <typename Real>
Real pair_unitarity_defect(const ComplexMatrix<Real>& t, const ComplexMatrix<Real>& g1) {
  require_same_shape(t, g1, "pair_unitarity_defect");
  return op_norm(t - t.adjoint() - Real(2) * t.adjoint() * g1 * t);
}

// ---------------------------------------------------------------------------
// Continuum s-wave grid (units hbar = 2 mu = 1, so E = k^2).

/// Momentum quadrature on (0, cutoff] plus the on-shell momentum.
template <typename Real>
struct GridSpec {
  RealVector<Real> nodes;
  RealVector<Real> weights;
  Real cutoff{};
  Real on_shell_momentum{};

  Eigen::Index size() const { return nodes.size(); }

  void validate() const {
    if (nodes.size() < 16 || weights.size() != nodes.size()) {
      throw Error(ErrorKind::invalid_input, "grid needs at least 16 nodes with matching weights");
    }
    if (!(cutoff > Real(0))) throw Error(ErrorKind::invalid_input, "grid cutoff must be positive");
    for (Eigen::Index j = 0; j < nodes.size(); ++j) {
      if (!(nodes(j) > Real(0)) || nodes(j) > cutoff || !(weights(j) > Real(0))) {
        throw Error(ErrorKind::invalid_input, "grid nodes must lie in (0, cutoff] with positive weights");
      }
      if (j > 0 && !(nodes(j) > nodes(j - 1))) {
        throw Error(ErrorKind::invalid_input, "grid nodes must be strictly increasing");
      }
    }
    if (!(on_shell_momentum > Real(0)) || !(on_shell_momentum < cutoff)) {
      throw Error(ErrorKind::invalid_input, "on-shell momentum must lie in (0, cutoff)");
    }
  }
};

template <typename Real>
struct GridSolution {
  ComplexVector<Real> half_off_shell;  ///< T(q_j, k_on) at the grid nodes
  Complex<Real> on_shell;              ///< T(k_on, k_on)
};

/// Solves T(p, k) = V(p, k) + int_0^cutoff dq q^2 V(p, q) T(q, k) / (E - q^2 + i eps)
/// for V(p, q) = strength g(p) g(q) at E = k_on^2.
///
/// eps == 0 requests the eps -> 0 limit: the Green function is split into a
/// principal value handled by subtracting the on-shell integrand, plus the
/// -i pi delta(E - q^2) term; the on-shell point joins the grid as an extra
/// unknown. eps > 0 integrates the regular kernel directly and recovers the
/// on-shell value by Nystrom interpolation.
template <typename Real>
GridSolution<Real> grid_ls_solve(Real strength, const std::function<Real(Real)>& form_factor,
                                 const GridSpec<Real>& grid, Real eps = Real(0),
                                 double condition_limit = kDefaultConditionLimit) {
  grid.validate();
  if (eps < Real(0)) throw Error(ErrorKind::domain, "grid_ls_solve: eps must be >= 0");
  const Eigen::Index n = grid.size();
  const Real k = grid.on_shell_momentum;
  const Real e = k * k;
  const auto& q = grid.nodes;
  const auto& w = grid.weights;
  const Real pi = Real(3.14159265358979323846264338327950288L);

  RealVector<Real> g(n + 1);
  for (Eigen::Index j = 0; j < n; ++j) g(j) = form_factor(q(j));
  g(n) = form_factor(k);

  GridSolution<Real> out;
  if (eps == Real(0)) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(q(j) - k) <= Real(1e-9) * k) {
        throw Error(ErrorKind::degenerate,
                    "on-shell momentum collides with a grid node; regrid or shift k_on");
      }
    }
    ComplexVector<Real> d(n + 1);
    Real subtraction = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Real denom = e - q(j) * q(j);
      d(j) = w(j) * q(j) * q(j) / denom;
      subtraction += w(j) / denom;
    }
    const Real pv_analytic = std::log((grid.cutoff + k) / (grid.cutoff - k)) / (Real(2) * k);
    d(n) = Complex<Real>(k * k * (pv_analytic - subtraction), -pi * k / Real(2));

    const ComplexMatrix<Real> vmat = (strength * (g * g.transpose())).template cast<Complex<Real>>();
    const ComplexMatrix<Real> kernel = vmat * d.asDiagonal();
    const ComplexMatrix<Real> rhs = vmat.col(n);
    const ComplexMatrix<Real> t =
        solve_operator_equation(kernel, rhs, condition_limit, "grid Lippmann-Schwinger kernel");
    out.half_off_shell = t.col(0).head(n);
    out.on_shell = t(n, 0);
    return out;
  }

  const Complex<Real> z(e, eps);
  ComplexVector<Real> d(n);
  for (Eigen::Index j = 0; j < n; ++j) d(j) = w(j) * q(j) * q(j) / (z - q(j) * q(j));
  const RealVector<Real> gn = g.head(n);
  const ComplexMatrix<Real> vmat = (strength * (gn * gn.transpose())).template cast<Complex<Real>>();
  const ComplexMatrix<Real> kernel = vmat * d.asDiagonal();
  const ComplexMatrix<Real> rhs = (strength * g(n) * gn).template cast<Complex<Real>>();
  const ComplexMatrix<Real> t =
      solve_operator_equation(kernel, rhs, condition_limit, "grid Lippmann-Schwinger kernel");
  out.half_off_shell = t.col(0);
  Complex<Real> on = strength * g(n) * g(n);
  for (Eigen::Index j = 0; j < n; ++j) on += strength * g(n) * g(j) * d(j) * t(j, 0);
  out.on_shell = on;
  return out;
}

// ---------------------------------------------------------------------------
// Yamaguchi form factor g(p) = 1 / (p^2 + beta^2), closed forms with a sharp
// momentum cutoff.

template <typename Real>
Real yamaguchi_form_factor(Real p, Real beta) {
  return Real(1) / (p * p + beta * beta);
}

namespace detail {

// int_0^L dq / (q^2 + b^2) and int_0^L dq / (q^2 + b^2)^2.
template <typename Real>
std::pair<Real, Real> lorentz_moments(Real beta, Real cutoff) {
  const Real b2 = beta * beta;
  const Real at = std::atan(cutoff / beta) / beta;
  return {at, (cutoff / (cutoff * cutoff + b2) + at) / (Real(2) * b2)};
}

}  // namespace detail

/// I(E + i0) = int_0^L dq q^2 g(q)^2 / (E + i0 - q^2) for E = k^2 > 0.
template <typename Real>
Complex<Real> yamaguchi_loop_integral(Real k, Real beta, Real cutoff) {
  const Real pi = Real(3.14159265358979323846264338327950288L);
  const Real kk = k * k;
  const Real b2 = beta * beta;
  // q^2 / ((q^2+b^2)^2 (K - q^2)) = A/(K - q^2) + A/(q^2 + b^2) + C/(q^2 + b^2)^2
  const Real a = kk / ((kk + b2) * (kk + b2));
  const Real c = -b2 / (kk + b2);
  const auto [m1, m2] = detail::lorentz_moments(beta, cutoff);
  const Real pv = std::log((cutoff + k) / (cutoff - k)) / (Real(2) * k);
  return Complex<Real>(a * pv + a * m1 + c * m2, -a * pi / (Real(2) * k));
}

/// Same integral at a negative energy E = -kappa^2 (real valued).
template <typename Real>
Real yamaguchi_loop_integral_bound(Real kappa, Real beta, Real cutoff) {
  if (std::abs(kappa - beta) < Real(1e-6) * beta) {
    // removable singularity of the partial-fraction form at kappa = beta
    const Real h = Real(1e-4) * beta;
    return (yamaguchi_loop_integral_bound(beta - h, beta, cutoff) +
            yamaguchi_loop_integral_bound(beta + h, beta, cutoff)) /
           Real(2);
  }
  const Real kk = -kappa * kappa;
  const Real b2 = beta * beta;
  const Real a = kk / ((kk + b2) * (kk + b2));
  const Real c = -b2 / (kk + b2);
  const auto [m1, m2] = detail::lorentz_moments(beta, cutoff);
  const Real neg = -std::atan(cutoff / kappa) / kappa;  // int dq / (K - q^2)
  return a * neg + a * m1 + c * m2;
}

/// On-shell T = tau(E) g(k)^2 with tau = 1 / (1/strength - I(E + i0)).
template <typename Real>
Complex<Real> yamaguchi_on_shell_t(Real strength, Real beta, Real k, Real cutoff) {
  if (strength == Real(0)) return {0, 0};
  const Real gk = yamaguchi_form_factor(k, beta);
  return gk * gk / (Real(1) / strength - yamaguchi_loop_integral(k, beta, cutoff));
}

/// Bound-state energy -kappa^2 from 1 = strength * I(-kappa^2), or nullopt
/// when the channel does not bind. Bisection in kappa.
template <typename Real>
std::optional<Real> yamaguchi_bound_energy(Real strength, Real beta, Real cutoff) {
  if (!(strength < Real(0))) return std::nullopt;
  auto f = [&](Real kappa) { return strength * yamaguchi_loop_integral_bound(kappa, beta, cutoff) - Real(1); };
  Real lo = Real(1e-12) * beta;
  if (f(lo) < Real(0)) return std::nullopt;
  Real hi = beta;
  while (f(hi) > Real(0)) {
    hi *= Real(2);
    if (hi > Real(1e8) * beta) throw Error(ErrorKind::no_convergence, "yamaguchi_bound_energy: no bracket");
  }
  for (int it = 0; it < 400 && hi - lo > std::numeric_limits<Real>::epsilon() * hi; ++it) {
    const Real mid = (lo + hi) / Real(2);
    (f(mid) > Real(0) ? lo : hi) = mid;
  }
  const Real kappa = (lo + hi) / Real(2);
  return -kappa * kappa;
}

// ---------------------------------------------------------------------------
// Bound states on the negative real axis.

/// Energy scale fixing the bound-state search bracket [-100 scale, 0].
template <typename Real>
Real binding_energy_scale(const std::vector<PairPotential<Real>>& potentials) {
  Real scale = 1;
  for (const auto& v : potentials) scale = std::max(scale, op_norm(v.matrix()));
  return scale;
}

/// Deepest bound state of H0 + v below zero, or nullopt. Separable channels
/// bisect the scalar pole condition 1 = lambda g^+ (E - H0)^{-1} g; dense
/// channels bisect on the largest eigenvalue of the Hermitian kernel
/// |E - H0|^{-1/2} (-v) |E - H0|^{-1/2}, which is nondecreasing in E.
template <typename Real>
std::optional<Real> channel_binding_energy(const PairPotential<Real>& v, const FreeSpectrum<Real>& h0,
                                           Real scale) {
  if (v.dim() != h0.dim()) {
    throw Error(ErrorKind::shape_mismatch, "channel_binding_energy: potential/spectrum dimension mismatch");
  }
  if (v.is_inert()) return std::nullopt;
  const auto& lam = h0.eigenvalues();
  const Real lo0 = Real(-100) * scale;
  const Real hi0 = std::min(Real(0), h0.min()) - Real(1e-12) * scale;

  std::function<Real(Real)> excess;  // > 0 once E is at or above the deepest level
  ComplexMatrix<Real> vm;
  if (v.is_separable()) {
    const auto& s = v.as_separable();
    excess = [&lam, &s](Real e) {
      Real acc = 0;
      for (Eigen::Index k = 0; k < lam.size(); ++k) acc += std::norm(s.form_factor(k)) / (e - lam(k));
      return s.strength * acc - Real(1);
    };
  } else {
    vm = v.matrix();
    excess = [&lam, &vm](Real e) {
      RealVector<Real> d(lam.size());
      for (Eigen::Index k = 0; k < lam.size(); ++k) d(k) = Real(1) / std::sqrt(lam(k) - e);
      ComplexMatrix<Real> b = -(d.asDiagonal() * vm * d.asDiagonal());
      b = (b + b.adjoint()).eval() / Real(2);
      Eigen::SelfAdjointEigenSolver<ComplexMatrix<Real>> es(b, Eigen::EigenvaluesOnly);
      return es.eigenvalues().maxCoeff() - Real(1);
    };
  }

  if (excess(hi0) < Real(0)) return std::nullopt;
  if (excess(lo0) >= Real(0)) {
    throw Error(ErrorKind::no_convergence,
                "bound-state search: level lies below the bracket [" + std::to_string(static_cast<double>(lo0)) +
                    ", " + std::to_string(static_cast<double>(hi0)) + "]");
  }
  Real lo = lo0;
  Real hi = hi0;
  int it = 0;
  for (; it < 500; ++it) {
    if (hi - lo <= Real(4) * std::numeric_limits<Real>::epsilon() * std::max(Real(1), std::abs(lo))) break;
    const Real mid = lo + (hi - lo) / Real(2);
    if (mid <= lo || mid >= hi) break;
    (excess(mid) >= Real(0) ? hi : lo) = mid;
  }
  if (it == 500) {
    throw Error(ErrorKind::no_convergence,
                "bound-state bisection did not converge; bracket [" + std::to_string(static_cast<double>(lo)) +
                    ", " + std::to_string(static_cast<double>(hi)) + "]");
  }
  return (lo + hi) / Real(2);
}

/// |E_B_min|: largest binding magnitude over all channels, 0 if none bind.
template <typename Real>
Real min_binding_energy(const std::vector<PairPotential<Real>>& potentials, const FreeSpectrum<Real>& h0) {
  if (potentials.empty()) {
    throw Error(ErrorKind::invalid_input, "min_binding_energy needs at least one channel potential");
  }
  const Real scale = binding_energy_scale(potentials);
  Real deepest = 0;
  for (const auto& v : potentials) {
    if (auto eb = channel_binding_energy(v, h0, scale)) deepest = std::max(deepest, std::abs(*eb));
  }
  return deepest;
}

}  // namespace scatterkit
