#pragma once

// Quantitative checks of the asymptotic regime and of unitarity: smallness
// norms, second-order accuracy scale, commutator and product-expansion
// residuals, unitarity defects and approximation-error scans.

#include <atomic>
#include <exception>
#include <optional>
#include <thread>

#include <Eigen/Eigenvalues>

#include "scatterkit/multibody.hpp"

namespace scatterkit {

/// Tolerances and thresholds; every value used is echoed into outputs.
struct Thresholds {
  double smallness = 1e-2;            ///< "small norm" threshold for the regime search
  double identity = 1e-10;            ///< exact-identity residuals (relative)
  double pair_unitarity = 1e-12;      ///< two-body unitarity, relative to max(1, ||T_a||^2)
  double hermiticity = 1e-12;         ///< K Hermiticity (relative)
  double osborn = 1e-14;              ///< Osborn vs unitary impulse (absolute)
  double condition_limit = kDefaultConditionLimit;

  bool operator==(const Thresholds&) const = default;
};

/// ||T - T^+ - 2 T^+ G1 T||, unnormalized.
template <typename Real>
Real unitarity_defect_abs(const ComplexMatrix<Real>& t, const ComplexMatrix<Real>& g1) {
  require_same_shape(t, g1, "unitarity_defect");
  return op_norm(t - t.adjoint() - Real(2) * t.adjoint() * g1 * t);
}

/// ||T - T^+ - 2 T^+ G1 T|| / max(||T||, floor).
template <typename Real>
Real unitarity_defect(const ComplexMatrix<Real>& t, const ComplexMatrix<Real>& g1) {
  return unitarity_defect_abs(t, g1) / std::max(op_norm(t), Real(kNormFloor));
}

/// max over ordered channel pairs (a, b), a == b included, of ||T_a G1 T_b G1||.
template <typename Real>
Real second_order_norm(const ChannelOperatorSet<Real>& t_pairs, const ComplexMatrix<Real>& g1) {
  std::vector<ComplexMatrix<Real>> tg;
  for (const auto& t : t_pairs.operators()) tg.push_back(t * g1);
  Real best = 0;
  for (const auto& a : tg) {
    for (const auto& b : tg) best = std::max(best, op_norm(a * b));
  }
  return best;
}

/// max over a != b of ||[1 + T_a G1, 1 + T_b G1]||.
template <typename Real>
Real commutator_residual(const ChannelOperatorSet<Real>& t_pairs, const ComplexMatrix<Real>& g1) {
  std::vector<ComplexMatrix<Real>> tg;
  for (const auto& t : t_pairs.operators()) tg.push_back(t * g1);
  const Eigen::Index d = g1.rows();
  const ComplexMatrix<Real> id = ComplexMatrix<Real>::Identity(d, d);
  Real best = 0;
  for (std::size_t a = 0; a < tg.size(); ++a) {
    for (std::size_t b = a + 1; b < tg.size(); ++b) {
      const ComplexMatrix<Real> x = id + tg[a];
      const ComplexMatrix<Real> y = id + tg[b];
      best = std::max(best, op_norm(x * y - y * x));
    }
  }
  return best;
}

/// ||prod_b (1 + T_b G1) - (1 + sum_b T_b G1)||, product taken left to right
/// in lexicographic channel order.
template <typename Real>
Real product_expansion_residual(const ChannelOperatorSet<Real>& t_pairs, const ComplexMatrix<Real>& g1) {
  const Eigen::Index d = g1.rows();
  const ComplexMatrix<Real> id = ComplexMatrix<Real>::Identity(d, d);
  ComplexMatrix<Real> product = id;
  ComplexMatrix<Real> linear = id;
  for (const auto& t : t_pairs.operators()) {
    const ComplexMatrix<Real> tg = t * g1;
    product = (product * (id + tg)).eval();
    linear += tg;
  }
  return op_norm(product - linear);
}

/// max over ordered triples of ||T_a G1 T_b G1 T_c||; the scale of the terms
/// the unitarity reduction throws away.
template <typename Real>
Real third_order_norm(const ChannelOperatorSet<Real>& t_pairs, const ComplexMatrix<Real>& g1) {
  std::vector<ComplexMatrix<Real>> tg;
  for (const auto& t : t_pairs.operators()) tg.push_back(t * g1);
  Real best = 0;
  for (const auto& a : tg) {
    for (const auto& b : tg) {
      const ComplexMatrix<Real> ab = a * b;
      for (const auto& c : t_pairs.operators()) best = std::max(best, op_norm(ab * c));
    }
  }
  return best;
}

template <typename Real>
struct ReductionCheck {
  /// T - T^+ of the unitary impulse T after inserting two-body unitarity:
  /// sum_a (2 T_a^+ G1 T_a + sum_{b != a} T_b G1 T_a + sum_{b != a} T_a^+ G1 T_b^+).
  ComplexMatrix<Real> lhs_reduced;
  /// 2 T^+ G1 T kept to second order: 2 sum_{a, g} T_a^+ G1 T_g.
  ComplexMatrix<Real> rhs_reduced;
  Real gap{};  ///< ||lhs_reduced - rhs_reduced||
  /// Both sides carried to the end of the chain (daggers dropped) agree to
  /// rounding; ||2 sum_{a,b} T_a G1 T_b - (sum_a 2 T_a G1 T_a + cross terms)||.
  Real reduced_form_gap{};
  Real third_order_scale{};  ///< third_order_norm of the inputs
};

/// Re-derives the unitarity of the unitary impulse solution from pair
/// unitarity, keeping both sides of T - T^+ = 2 T^+ G1 T at second order.
/// The gap collects only third-order products, which is what the derivation
/// neglects.
template <typename Real>
ReductionCheck<Real> unitarity_reduction_check(const ChannelOperatorSet<Real>& t_pairs,
                                               const ComplexMatrix<Real>& g1) {
  const auto& t = t_pairs.operators();
  for (std::size_t a = 0; a < t.size(); ++a) {
    const Real n = op_norm(t[a]);
    const Real rel = pair_unitarity_defect(t[a], g1) / std::max(Real(1), n * n);
    if (rel > Real(1e-8)) {
      throw Error(ErrorKind::invalid_input, "unitarity_reduction_check: channel (" +
                                                t_pairs.channels()[a].label() +
                                                ") violates two-body unitarity (" +
                                                std::to_string(static_cast<double>(rel)) + ")");
    }
  }
  const Eigen::Index d = g1.rows();
  ReductionCheck<Real> out;
  out.lhs_reduced = ComplexMatrix<Real>::Zero(d, d);
  out.rhs_reduced = ComplexMatrix<Real>::Zero(d, d);
  ComplexMatrix<Real> chain_end = ComplexMatrix<Real>::Zero(d, d);  // sum_a (2 TaG1Ta + sum_b!=a (TbG1Ta + TaG1Tb))
  ComplexMatrix<Real> double_sum = ComplexMatrix<Real>::Zero(d, d);

  for (std::size_t a = 0; a < t.size(); ++a) {
    const ComplexMatrix<Real> ta_dag = t[a].adjoint();
    out.lhs_reduced += Real(2) * ta_dag * g1 * t[a];
    chain_end += Real(2) * t[a] * g1 * t[a];
    for (std::size_t b = 0; b < t.size(); ++b) {
      out.rhs_reduced += Real(2) * ta_dag * g1 * t[b];
      double_sum += Real(2) * t[a] * g1 * t[b];
      if (b == a) continue;
      out.lhs_reduced += t[b] * g1 * t[a] + ta_dag * g1 * t[b].adjoint();
      chain_end += t[b] * g1 * t[a] + t[a] * g1 * t[b];
    }
  }
  out.gap = op_norm(out.lhs_reduced - out.rhs_reduced);
  out.reduced_form_gap = op_norm(chain_end - double_sum);
  out.third_order_scale = third_order_norm(t_pairs, g1);
  return out;
}

template <typename Real>
struct ChannelSmallness {
  PairChannel channel;
  Real norm_t_g0{};    ///< ||T_a G0||
  Real norm_t_g1{};    ///< ||T_a G1||
  Real norm_k_g2{};    ///< ||K_a G2||
  Real born_t{};       ///< ||T_a - v_a|| / ||v_a||
  Real born_k{};       ///< ||K_a - v_a|| / ||v_a||
  Real heitler_born_residual{};  ///< ||T_a - v_a - T_a G1 v_a|| / ||v_a||
  Real born_v_g0{};    ///< ||v_a G0||, the Born-level kernel estimate
};

template <typename Real>
struct SmallnessReport {
  std::vector<ChannelSmallness<Real>> channels;

  /// Largest value of one column over channels.
  template <typename Field>
  Real max_of(Field field) const {
    Real best = 0;
    for (const auto& c : channels) best = std::max(best, c.*field);
    return best;
  }
};

template <typename Real>
SmallnessReport<Real> smallness_report(const ScatteringSystem<Real>& sys, const SpectralParameter<Real>& z,
                                       double condition_limit = kDefaultConditionLimit) {
  const auto split = green_split(sys.h0(), z);
  const auto tp = pair_t_set(sys, split.g0, condition_limit);
  const auto kp = pair_k_set(sys, split.g2, condition_limit);
  SmallnessReport<Real> out;
  for (std::size_t a = 0; a < sys.channel_count(); ++a) {
    const ComplexMatrix<Real> v = sys.channels()[a].potential.matrix();
    const Real vn = std::max(op_norm(v), Real(kNormFloor));
    const auto& t = tp[a];
    const auto& k = kp[a];
    ChannelSmallness<Real> c;
    c.channel = sys.channels()[a].channel;
    c.norm_t_g0 = op_norm(t * split.g0);
    c.norm_t_g1 = op_norm(t * split.g1);
    c.norm_k_g2 = op_norm(k * split.g2);
    c.born_t = op_norm(t - v) / vn;
    c.born_k = op_norm(k - v) / vn;
    c.heitler_born_residual = op_norm(t - v - t * split.g1 * v) / vn;
    c.born_v_g0 = op_norm(v * split.g0);
    out.channels.push_back(c);
  }
  return out;
}

/// Spectral radius of the Faddeev kernel (blocks T_a G0 off the diagonal);
/// below 1 the Neumann iteration of the component equations converges.
template <typename Real>
Real faddeev_kernel_radius(const ChannelOperatorSet<Real>& t_pairs, const ComplexMatrix<Real>& g0) {
  const auto c = static_cast<Eigen::Index>(t_pairs.size());
  const Eigen::Index d = g0.rows();
  ComplexMatrix<Real> kernel = ComplexMatrix<Real>::Zero(c * d, c * d);
  for (Eigen::Index a = 0; a < c; ++a) {
    const ComplexMatrix<Real> f = t_pairs[a] * g0;
    for (Eigen::Index b = 0; b < c; ++b) {
      if (a != b) kernel.block(a * d, b * d, d, d) = f;
    }
  }
  Eigen::ComplexEigenSolver<ComplexMatrix<Real>> es(kernel, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Everything measured for one (system, z).
template <typename Real>
struct DiagnosticsReport {
  Real e0{};
  Real eps{};
  Real e_b_min{};
  SmallnessReport<Real> smallness;

  Real second_order{};
  Real commutator{};
  Real product_residual{};

  Real defect_exact{};
  Real defect_impulse{};
  Real defect_uia{};
  std::optional<Real> defect_linearized;  ///< nullopt when 1 - sum K_a G1 is near-singular

  Real relerr_impulse{};
  Real relerr_uia{};
  std::optional<Real> relerr_linearized;

  Real reduction_gap{};
  Real reduction_side{};  ///< ||lhs_reduced||
  std::optional<Real> faddeev_radius;

  std::vector<std::string> skipped_fields() const {
    std::vector<std::string> out;
    if (!defect_linearized) out.emplace_back("defect_linearized");
    if (!relerr_linearized) out.emplace_back("relerr_linearized");
    if (!faddeev_radius) out.emplace_back("faddeev_radius");
    return out;
  }
};

/// Full diagnostics at one energy. Throws NearSingularError when the exact
/// T or a pair solve does not exist there.
template <typename Real>
DiagnosticsReport<Real> evaluate_diagnostics(const ScatteringSystem<Real>& sys, const SpectralParameter<Real>& z,
                                             Real e_b_min, double condition_limit = kDefaultConditionLimit) {
  DiagnosticsReport<Real> r;
  r.e0 = z.e0();
  r.eps = z.eps();
  r.e_b_min = e_b_min;
  const auto split = green_split(sys.h0(), z);
  const ComplexMatrix<Real> t_exact = exact_t(sys, z, condition_limit);
  const auto tp = pair_t_set(sys, split.g0, condition_limit);
  const auto kp = pair_k_set(sys, split.g2, condition_limit);
  r.smallness = smallness_report(sys, z, condition_limit);

  r.second_order = second_order_norm(tp, split.g1);
  r.commutator = commutator_residual(tp, split.g1);
  r.product_residual = product_expansion_residual(tp, split.g1);

  const Real exact_norm = std::max(op_norm(t_exact), Real(kNormFloor));
  const ComplexMatrix<Real> t_imp = impulse_t(tp);
  const ComplexMatrix<Real> t_uia = unitary_impulse_t(tp, split.g1);
  r.defect_exact = unitarity_defect(t_exact, split.g1);
  r.defect_impulse = unitarity_defect(t_imp, split.g1);
  r.defect_uia = unitarity_defect(t_uia, split.g1);
  r.relerr_impulse = op_norm(t_imp - t_exact) / exact_norm;
  r.relerr_uia = op_norm(t_uia - t_exact) / exact_norm;
  try {
    const ComplexMatrix<Real> t_lin = linearized_t(kp, split.g1, condition_limit);
    r.defect_linearized = unitarity_defect(t_lin, split.g1);
    r.relerr_linearized = op_norm(t_lin - t_exact) / exact_norm;
  } catch (const NearSingularError&) {
  }

  const auto red = unitarity_reduction_check(tp, split.g1);
  r.reduction_gap = red.gap;
  r.reduction_side = op_norm(red.lhs_reduced);
  r.faddeev_radius = faddeev_kernel_radius(tp, split.g0);
  return r;
}

template <typename Real>
struct ScanResult {
  std::vector<SpectralParameter<Real>> grid;
  /// One entry per grid point, in grid order; nullopt marks a skipped point.
  std::vector<std::optional<DiagnosticsReport<Real>>> rows;
  std::vector<std::string> skip_reasons;  ///< parallel to rows, empty when not skipped

  std::vector<std::size_t> skipped() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i]) out.push_back(i);
    }
    return out;
  }
};

/// Diagnostics over an energy grid. Points where the exact T does not exist
/// (pole proximity) are skipped and flagged; more than half skipped is an
/// error. Rows are computed on up to `threads` workers and stored by grid
/// index, so the result does not depend on scheduling.
template <typename Real>
ScanResult<Real> approximation_error_scan(const ScatteringSystem<Real>& sys,
                                          const std::vector<SpectralParameter<Real>>& energy_grid,
                                          double condition_limit = kDefaultConditionLimit, unsigned threads = 1) {
  ScanResult<Real> out;
  out.grid = energy_grid;
  out.rows.resize(energy_grid.size());
  out.skip_reasons.resize(energy_grid.size());
  const Real e_b_min = min_binding_energy(sys.potentials(), sys.h0());

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(energy_grid.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < energy_grid.size(); i = next++) {
      try {
        out.rows[i] = evaluate_diagnostics(sys, energy_grid[i], e_b_min, condition_limit);
      } catch (const NearSingularError& e) {
        out.skip_reasons[i] = e.what();
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(energy_grid.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  const auto skipped = out.skipped().size();
  if (!energy_grid.empty() && 2 * skipped > energy_grid.size()) {
    throw Error(ErrorKind::degenerate, "scan degenerate: " + std::to_string(skipped) + " of " +
                                           std::to_string(energy_grid.size()) +
                                           " grid points skipped near poles");
  }
  return out;
}

}  // namespace scatterkit
