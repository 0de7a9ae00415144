#pragma once

// N-particle assembly on a flat d-dimensional model space: the exact
// Lippmann-Schwinger T, Faddeev components, the Heitler K split, and the
// approximation hierarchy (impulse, linearized K, unitary impulse, Osborn).

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "scatterkit/twobody.hpp"

namespace scatterkit {

template <typename Real>
struct ChannelPotential {
  PairChannel channel;
  PairPotential<Real> potential;
};

/// N >= 3 particles, free spectrum and one Hermitian potential per pair
/// channel (inert channels carry zero). Channels are kept in lexicographic
/// order.
template <typename Real>
class ScatteringSystem {
 public:
  ScatteringSystem(int n_particles, FreeSpectrum<Real> h0, std::vector<ChannelPotential<Real>> channels)
      : n_particles_(n_particles), h0_(std::move(h0)), channels_(std::move(channels)) {
    if (n_particles_ < 3) {
      throw Error(ErrorKind::invalid_input, "scattering system needs at least 3 particles");
    }
    std::sort(channels_.begin(), channels_.end(),
              [](const auto& a, const auto& b) { return a.channel < b.channel; });
    const auto expected = all_channels(n_particles_);
    if (channels_.size() != expected.size()) {
      throw Error(ErrorKind::invalid_input, "system needs exactly N(N-1)/2 = " +
                                                std::to_string(expected.size()) + " channels, got " +
                                                std::to_string(channels_.size()));
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (channels_[i].channel != expected[i]) {
        throw Error(ErrorKind::invalid_input, "channel list incomplete or duplicated near (" +
                                                  expected[i].label() + ")");
      }
      if (channels_[i].potential.dim() != h0_.dim()) {
        throw Error(ErrorKind::shape_mismatch, "channel (" + expected[i].label() +
                                                   ") potential dimension differs from H0");
      }
    }
  }

  int n_particles() const { return n_particles_; }
  Eigen::Index dim() const { return h0_.dim(); }
  std::size_t channel_count() const { return channels_.size(); }
  const FreeSpectrum<Real>& h0() const { return h0_; }
  const std::vector<ChannelPotential<Real>>& channels() const { return channels_; }

  std::vector<PairChannel> channel_labels() const {
    std::vector<PairChannel> out;
    for (const auto& c : channels_) out.push_back(c.channel);
    return out;
  }

  std::vector<PairPotential<Real>> potentials() const {
    std::vector<PairPotential<Real>> out;
    for (const auto& c : channels_) out.push_back(c.potential);
    return out;
  }

  /// V = sum_a v_a.
  ComplexMatrix<Real> total_potential() const {
    ComplexMatrix<Real> v = ComplexMatrix<Real>::Zero(dim(), dim());
    for (const auto& c : channels_) v += c.potential.matrix();
    return v;
  }

  ScatteringSystem scaled(Real s) const {
    auto copy = channels_;
    for (auto& c : copy) c.potential = c.potential.scaled(s);
    return ScatteringSystem(n_particles_, h0_, std::move(copy));
  }

 private:
  int n_particles_;
  FreeSpectrum<Real> h0_;
  std::vector<ChannelPotential<Real>> channels_;
};

enum class OperatorKind { t_pair, k_pair, t_component, k_component, script_t };

/// One matrix per channel, iterated in lexicographic channel order.
template <typename Real>
class ChannelOperatorSet {
 public:
  ChannelOperatorSet(OperatorKind kind, std::vector<PairChannel> channels, std::vector<ComplexMatrix<Real>> ops)
      : kind_(kind), channels_(std::move(channels)), ops_(std::move(ops)) {
    if (channels_.size() != ops_.size() || channels_.empty()) {
      throw Error(ErrorKind::invalid_input, "channel operator set: one operator per channel required");
    }
    for (std::size_t i = 1; i < ops_.size(); ++i) {
      if (ops_[i].rows() != ops_[0].rows() || ops_[i].cols() != ops_[0].cols()) {
        throw Error(ErrorKind::shape_mismatch, "channel operator set: operators differ in dimension");
      }
      if (!(channels_[i - 1] < channels_[i])) {
        throw Error(ErrorKind::invalid_input, "channel operator set: channels must be strictly ordered");
      }
    }
  }

  OperatorKind kind() const { return kind_; }
  std::size_t size() const { return ops_.size(); }
  Eigen::Index dim() const { return ops_.front().rows(); }
  const std::vector<PairChannel>& channels() const { return channels_; }
  const std::vector<ComplexMatrix<Real>>& operators() const { return ops_; }
  const ComplexMatrix<Real>& operator[](std::size_t i) const { return ops_[i]; }

  const ComplexMatrix<Real>& at(const PairChannel& c) const {
    for (std::size_t i = 0; i < channels_.size(); ++i) {
      if (channels_[i] == c) return ops_[i];
    }
    throw Error(ErrorKind::invalid_input, "channel (" + c.label() + ") not in operator set");
  }

  ComplexMatrix<Real> sum() const {
    ComplexMatrix<Real> s = ComplexMatrix<Real>::Zero(dim(), dim());
    for (const auto& m : ops_) s += m;
    return s;
  }

  /// Copy with the operator of one channel replaced.
  ChannelOperatorSet with(const PairChannel& c, ComplexMatrix<Real> m) const {
    auto ops = ops_;
    for (std::size_t i = 0; i < channels_.size(); ++i) {
      if (channels_[i] == c) {
        ops[i] = std::move(m);
        return ChannelOperatorSet(kind_, channels_, std::move(ops));
      }
    }
    throw Error(ErrorKind::invalid_input, "channel (" + c.label() + ") not in operator set");
  }

 private:
  OperatorKind kind_;
  std::vector<PairChannel> channels_;
  std::vector<ComplexMatrix<Real>> ops_;
};

namespace detail {

inline std::string energy_tag(double e0, double eps) {
  std::ostringstream os;
  os.precision(17);
  os << "z = " << e0 << " + i " << eps;
  return os.str();
}

/// Solves X_a = R_a + F_a sum_{b != a} X_b as one assembled (C d) x (C d)
/// block system.
template <typename Real>
std::vector<ComplexMatrix<Real>> solve_coupled_components(const std::vector<ComplexMatrix<Real>>& factors,
                                                          const std::vector<ComplexMatrix<Real>>& rhs,
                                                          double condition_limit, const std::string& label) {
  const auto c = static_cast<Eigen::Index>(factors.size());
  const Eigen::Index d = factors.front().rows();
  ComplexMatrix<Real> kernel = ComplexMatrix<Real>::Zero(c * d, c * d);
  ComplexMatrix<Real> b(c * d, d);
  for (Eigen::Index a = 0; a < c; ++a) {
    for (Eigen::Index bb = 0; bb < c; ++bb) {
      if (a != bb) kernel.block(a * d, bb * d, d, d) = factors[a];
    }
    b.block(a * d, 0, d, d) = rhs[a];
  }
  const ComplexMatrix<Real> x = solve_operator_equation(kernel, b, condition_limit, label);
  std::vector<ComplexMatrix<Real>> out;
  out.reserve(factors.size());
  for (Eigen::Index a = 0; a < c; ++a) out.push_back(x.block(a * d, 0, d, d));
  return out;
}

}  // namespace detail

/// Pair T_a for every channel at z (channel context added to pole errors).
template <typename Real>
ChannelOperatorSet<Real> pair_t_set(const ScatteringSystem<Real>& sys, const ComplexMatrix<Real>& g0,
                                    double condition_limit = kDefaultConditionLimit) {
  std::vector<ComplexMatrix<Real>> ops;
  for (const auto& c : sys.channels()) {
    try {
      ops.push_back(solve_t_pair(c.potential, g0, condition_limit));
    } catch (const NearSingularError& e) {
      throw e.annotated("channel (" + c.channel.label() + ")");
    }
  }
  return {OperatorKind::t_pair, sys.channel_labels(), std::move(ops)};
}

/// Pair K_a for every channel.
template <typename Real>
ChannelOperatorSet<Real> pair_k_set(const ScatteringSystem<Real>& sys, const ComplexMatrix<Real>& g2,
                                    double condition_limit = kDefaultConditionLimit) {
  std::vector<ComplexMatrix<Real>> ops;
  for (const auto& c : sys.channels()) {
    try {
      ops.push_back(solve_k_pair(c.potential, g2, condition_limit));
    } catch (const NearSingularError& e) {
      throw e.annotated("channel (" + c.channel.label() + ")");
    }
  }
  return {OperatorKind::k_pair, sys.channel_labels(), std::move(ops)};
}

/// Exact T = (1 - V G0)^{-1} V; the ground truth for every approximation.
template <typename Real>
ComplexMatrix<Real> exact_t(const ScatteringSystem<Real>& sys, const SpectralParameter<Real>& z,
                            double condition_limit = kDefaultConditionLimit) {
  const ComplexMatrix<Real> v = sys.total_potential();
  const ComplexMatrix<Real> g0 = resolvent_free(sys.h0(), z);
  return solve_operator_equation(v * g0, v, condition_limit,
                                 "N-body T: 1 - V G0 at " + detail::energy_tag(z.e0(), z.eps()));
}

/// Faddeev components T^a = T_a + T_a G0 sum_{b != a} T^b.
template <typename Real>
ChannelOperatorSet<Real> faddeev_solve(const ScatteringSystem<Real>& sys, const SpectralParameter<Real>& z,
                                       double condition_limit = kDefaultConditionLimit) {
  const ComplexMatrix<Real> g0 = resolvent_free(sys.h0(), z);
  const auto tp = pair_t_set(sys, g0, condition_limit);
  std::vector<ComplexMatrix<Real>> factors;
  for (const auto& t : tp.operators()) factors.push_back(t * g0);
  auto comps = detail::solve_coupled_components(
      factors, tp.operators(), condition_limit,
      "Faddeev block system at " + detail::energy_tag(z.e0(), z.eps()));
  return {OperatorKind::t_component, sys.channel_labels(), std::move(comps)};
}

/// Exact K = (1 - V G2)^{-1} V.
template <typename Real>
ComplexMatrix<Real> heitler_exact_k(const ScatteringSystem<Real>& sys, const SpectralParameter<Real>& z,
                                    double condition_limit = kDefaultConditionLimit) {
  const ComplexMatrix<Real> v = sys.total_potential();
  const auto split = green_split(sys.h0(), z);
  return solve_operator_equation(v * split.g2, v, condition_limit,
                                 "N-body K: 1 - V G2 at " + detail::energy_tag(z.e0(), z.eps()));
}

/// T = (1 - K G1)^{-1} K.
template <typename Real>
ComplexMatrix<Real> t_from_k_full(const ComplexMatrix<Real>& k, const ComplexMatrix<Real>& g1,
                                  double condition_limit = kDefaultConditionLimit) {
  require_same_shape(k, g1, "t_from_k_full");
  return solve_operator_equation(k * g1, k, condition_limit, "1 - K G1");
}

/// K components K^a = K_a + K_a G2 sum_{b != a} K^b.
template <typename Real>
ChannelOperatorSet<Real> k_components_solve(const ScatteringSystem<Real>& sys, const SpectralParameter<Real>& z,
                                            double condition_limit = kDefaultConditionLimit) {
  const auto split = green_split(sys.h0(), z);
  const auto kp = pair_k_set(sys, split.g2, condition_limit);
  std::vector<ComplexMatrix<Real>> factors;
  for (const auto& k : kp.operators()) factors.push_back(k * split.g2);
  auto comps = detail::solve_coupled_components(
      factors, kp.operators(), condition_limit,
      "K-component block system at " + detail::energy_tag(z.e0(), z.eps()));
  return {OperatorKind::k_component, sys.channel_labels(), std::move(comps)};
}

/// Impulse approximation: sum_a T_a.
template <typename Real>
ComplexMatrix<Real> impulse_t(const ChannelOperatorSet<Real>& t_pairs) {
  return t_pairs.sum();
}

/// Linearized-K solution (1 - sum_a K_a G1)^{-1} sum_b K_b.
template <typename Real>
ComplexMatrix<Real> linearized_t(const ChannelOperatorSet<Real>& k_pairs, const ComplexMatrix<Real>& g1,
                                 double condition_limit = kDefaultConditionLimit) {
  const ComplexMatrix<Real> ksum = k_pairs.sum();
  require_same_shape(ksum, g1, "linearized_t");
  return solve_operator_equation(ksum * g1, ksum, condition_limit, "1 - sum_a K_a G1");
}

template <typename Real>
struct ScriptTComponents {
  ChannelOperatorSet<Real> direct;       ///< (1 - sum K_a G1)^{-1} K_b
  ChannelOperatorSet<Real> transformed;  ///< the same built from {T_a} and G1 only
};

/// Channel pieces of the linearized solution, computed twice: directly from
/// the pair K matrices, and after substituting K_a = (1 + T_a G1)^{-1} T_a,
///   (1 - (1 + T_b G1) sum_{a != b} (1 + T_a G1)^{-1} T_a G1)^{-1} T_b.
template <typename Real>
ScriptTComponents<Real> script_t_components(const ChannelOperatorSet<Real>& t_pairs,
                                            const ChannelOperatorSet<Real>& k_pairs,
                                            const ComplexMatrix<Real>& g1,
                                            double condition_limit = kDefaultConditionLimit) {
  if (t_pairs.channels() != k_pairs.channels()) {
    throw Error(ErrorKind::invalid_input, "script_t_components: T and K sets cover different channels");
  }
  const Eigen::Index d = g1.rows();
  const ComplexMatrix<Real> id = ComplexMatrix<Real>::Identity(d, d);
  const ComplexMatrix<Real> ksum = k_pairs.sum();

  std::vector<ComplexMatrix<Real>> direct;
  {
    const ComplexMatrix<Real> a = ksum * g1;
    for (std::size_t b = 0; b < k_pairs.size(); ++b) {
      direct.push_back(solve_operator_equation(a, k_pairs[b], condition_limit, "direct: 1 - sum_a K_a G1"));
    }
  }

  // (1 + T_a G1)^{-1} T_a G1 for every channel
  std::vector<ComplexMatrix<Real>> dressed;
  for (std::size_t a = 0; a < t_pairs.size(); ++a) {
    const ComplexMatrix<Real> tg = t_pairs[a] * g1;
    dressed.push_back(solve_operator_equation(ComplexMatrix<Real>(-tg), tg, condition_limit,
                                              "transformed: 1 + T_" + t_pairs.channels()[a].label() + " G1"));
  }
  std::vector<ComplexMatrix<Real>> transformed;
  for (std::size_t b = 0; b < t_pairs.size(); ++b) {
    ComplexMatrix<Real> inner = ComplexMatrix<Real>::Zero(d, d);
    for (std::size_t a = 0; a < t_pairs.size(); ++a) {
      if (a != b) inner += dressed[a];
    }
    const ComplexMatrix<Real> a_op = (id + t_pairs[b] * g1) * inner;
    transformed.push_back(solve_operator_equation(a_op, t_pairs[b], condition_limit,
                                                  "transformed: outer factor for channel " +
                                                      t_pairs.channels()[b].label()));
  }
  return {ChannelOperatorSet<Real>(OperatorKind::script_t, t_pairs.channels(), std::move(direct)),
          ChannelOperatorSet<Real>(OperatorKind::script_t, t_pairs.channels(), std::move(transformed))};
}

/// The single-scattering term of channel b dressed by on-shell rescattering
/// off every other channel: (1 + sum_{g != b} T_g G1) T_b.
template <typename Real>
ComplexMatrix<Real> unitary_impulse_term(const ChannelOperatorSet<Real>& t_pairs, const ComplexMatrix<Real>& g1,
                                         std::size_t b) {
  const Eigen::Index d = g1.rows();
  ComplexMatrix<Real> factor = ComplexMatrix<Real>::Identity(d, d);
  for (std::size_t g = 0; g < t_pairs.size(); ++g) {
    if (g != b) factor += t_pairs[g] * g1;
  }
  return factor * t_pairs[b];
}

/// Unitary impulse approximation sum_b (1 + sum_{g != b} T_g G1) T_b.
/// Products only, no inversion.
template <typename Real>
ComplexMatrix<Real> unitary_impulse_t(const ChannelOperatorSet<Real>& t_pairs, const ComplexMatrix<Real>& g1) {
  require_same_shape(t_pairs[0], g1, "unitary_impulse_t");
  ComplexMatrix<Real> t = ComplexMatrix<Real>::Zero(g1.rows(), g1.cols());
  for (std::size_t b = 0; b < t_pairs.size(); ++b) t += unitary_impulse_term(t_pairs, g1, b);
  return t;
}

/// Osborn fixed-centers form (1 + T_13 G1) T_12 + (1 + T_12 G1) T_13.
template <typename Real>
ComplexMatrix<Real> osborn_t(const ComplexMatrix<Real>& t12, const ComplexMatrix<Real>& t13,
                             const ComplexMatrix<Real>& g1) {
  require_same_shape(t12, t13, "osborn_t");
  require_same_shape(t12, g1, "osborn_t");
  const ComplexMatrix<Real> id = ComplexMatrix<Real>::Identity(g1.rows(), g1.cols());
  ComplexMatrix<Real> out = (id + t13 * g1) * t12;
  out += (id + t12 * g1) * t13;
  return out;
}

}  // namespace scatterkit
