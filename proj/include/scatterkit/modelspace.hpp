#pragma once

// Reproducible model systems: seeded flat instances, a structured N = 3
// ring instance, Yamaguchi momentum grids and energy grids.

#include <array>
#include <cstdint>
#include <numbers>
#include <random>

#include "scatterkit/multibody.hpp"

namespace scatterkit {

enum class PotentialKind { dense_hermitian, separable_rank1 };
enum class SpectrumKind { linear, quadratic, explicit_list };
enum class GridSpacing { linear, logarithmic };

struct ModelConfig {
  int n_particles = 3;
  int dim = 12;
  std::uint64_t seed = 42;
  double coupling_scale = 0.1;
  PotentialKind potential_kind = PotentialKind::dense_hermitian;
  SpectrumKind h0_kind = SpectrumKind::linear;
  double h0_spacing = 1.0;              ///< Delta for linear / quadratic spectra
  std::vector<double> h0_values;        ///< used when h0_kind == explicit_list
  std::vector<PairChannel> inert_channels;

  bool operator==(const ModelConfig&) const = default;
};

struct EnergyGridSpec {
  double e_min = 1.0;
  double e_max = 100.0;
  int points = 2;
  GridSpacing spacing = GridSpacing::logarithmic;
  double eps = 0.1;

  bool operator==(const EnergyGridSpec&) const = default;
};

inline void validate(const ModelConfig& cfg) {
  if (cfg.n_particles < 3) throw Error(ErrorKind::config, "model.n_particles must be >= 3");
  if (cfg.dim < 2) throw Error(ErrorKind::config, "model.dim must be >= 2");
  if (!std::isfinite(cfg.coupling_scale)) throw Error(ErrorKind::config, "model.coupling_scale must be finite");
  if (cfg.h0_kind == SpectrumKind::explicit_list) {
    if (static_cast<int>(cfg.h0_values.size()) != cfg.dim) {
      throw Error(ErrorKind::config, "model.h0.values must list exactly dim eigenvalues");
    }
  } else if (!(cfg.h0_spacing > 0.0)) {
    throw Error(ErrorKind::config, "model.h0.spacing must be positive");
  }
  const auto valid = all_channels(cfg.n_particles);
  for (const auto& c : cfg.inert_channels) {
    if (std::find(valid.begin(), valid.end(), c) == valid.end()) {
      throw Error(ErrorKind::config, "inert channel (" + c.label() + ") does not exist for this N");
    }
  }
}

inline void validate(const EnergyGridSpec& g) {
  if (!(g.e_min > 0.0) || !(g.e_max > g.e_min) || !std::isfinite(g.e_max)) {
    throw Error(ErrorKind::config, "grid needs 0 < e_min < e_max");
  }
  if (g.points < 2) throw Error(ErrorKind::config, "grid.points must be >= 2");
  if (!(g.eps > 0.0) || !std::isfinite(g.eps)) throw Error(ErrorKind::config, "grid.eps must be > 0");
}

template <typename Real = double>
FreeSpectrum<Real> build_spectrum(const ModelConfig& cfg) {
  RealVector<Real> lam(cfg.dim);
  for (int k = 0; k < cfg.dim; ++k) {
    switch (cfg.h0_kind) {
      case SpectrumKind::linear: lam(k) = Real(k) * Real(cfg.h0_spacing); break;
      case SpectrumKind::quadratic: lam(k) = Real(k) * Real(k) * Real(cfg.h0_spacing); break;
      case SpectrumKind::explicit_list: lam(k) = Real(cfg.h0_values[k]); break;
    }
  }
  return FreeSpectrum<Real>(std::move(lam));
}

/// Hermitian matrix with standard-normal real and imaginary parts, Hermitized
/// and normalized to unit spectral norm.
template <typename Real, typename Rng>
ComplexMatrix<Real> random_unit_hermitian(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix<Real> a(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      a(i, j) = Complex<Real>(Real(re), Real(im));
    }
  }
  ComplexMatrix<Real> h = (a + a.adjoint()) / Real(2);
  return h / op_norm(h);
}

template <typename Real, typename Rng>
ComplexVector<Real> random_unit_vector(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexVector<Real> g(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    g(i) = Complex<Real>(Real(re), Real(im));
  }
  return g / g.norm();
}

/// Flat model: every non-inert channel gets an independent seeded potential
/// of spectral norm |s| (dense) or strength s with a unit form factor
/// (separable). The random stream is drawn for every channel, inert or not,
/// so marking a channel inert leaves the others unchanged.
template <typename Real = double>
ScatteringSystem<Real> build_flat_model(const ModelConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  const Real s = Real(cfg.coupling_scale);
  std::vector<ChannelPotential<Real>> channels;
  for (const auto& c : all_channels(cfg.n_particles)) {
    const bool inert = std::find(cfg.inert_channels.begin(), cfg.inert_channels.end(), c) !=
                       cfg.inert_channels.end();
    if (cfg.potential_kind == PotentialKind::dense_hermitian) {
      ComplexMatrix<Real> v = random_unit_hermitian<Real>(cfg.dim, rng);
      if (inert || s == Real(0)) {
        channels.push_back({c, PairPotential<Real>::zero(cfg.dim)});
      } else {
        channels.push_back({c, PairPotential<Real>::dense(s * v)});
      }
    } else {
      ComplexVector<Real> g = random_unit_vector<Real>(cfg.dim, rng);
      if (inert || s == Real(0)) {
        channels.push_back({c, PairPotential<Real>::zero(cfg.dim)});
      } else {
        channels.push_back({c, PairPotential<Real>::separable(s, std::move(g))});
      }
    }
  }
  return ScatteringSystem<Real>(cfg.n_particles, build_spectrum<Real>(cfg), std::move(channels));
}

/// Index of the basis state (k1, k2) in the zero-total-momentum sector of
/// three particles on the ring Z_d; k3 = -(k1 + k2) mod d.
inline Eigen::Index ring_state_index(int k1, int k2, int d) { return static_cast<Eigen::Index>(k1) * d + k2; }

/// Three particles on a ring of d momentum states, restricted to total
/// momentum zero (dimension d^2). The pair potential is a d x d matrix in the
/// momentum of the lower-index particle of the pair; it conserves the pair's
/// total momentum and leaves the spectator untouched. Kinetic energy per
/// particle is min(k, d - k)^2.
template <typename Real = double>
ScatteringSystem<Real> build_tensor_model_n3(int per_particle_dim, const PairPotential<Real>& pair_potential) {
  const int d = per_particle_dim;
  if (d < 2 || d > 4) throw Error(ErrorKind::config, "per_particle_dim must be between 2 and 4");
  if (pair_potential.dim() != d) {
    throw Error(ErrorKind::config, "pair potential must act on the per-particle space (dim d)");
  }
  const Eigen::Index dim = static_cast<Eigen::Index>(d) * d;
  auto wrap = [d](int k) { return ((k % d) + d) % d; };
  auto kinetic = [d](int k) { const int m = std::min(k, d - k); return Real(m * m); };

  RealVector<Real> lam(dim);
  for (int k1 = 0; k1 < d; ++k1) {
    for (int k2 = 0; k2 < d; ++k2) {
      lam(ring_state_index(k1, k2, d)) = kinetic(k1) + kinetic(k2) + kinetic(wrap(-k1 - k2));
    }
  }

  const ComplexMatrix<Real> w = pair_potential.matrix();
  auto momenta = [&](int k1, int k2) { return std::array<int, 3>{k1, k2, wrap(-k1 - k2)}; };

  std::vector<ChannelPotential<Real>> channels;
  for (const auto& c : all_channels(3)) {
    const int pm = c.m - 1;
    const int pn = c.n - 1;
    const int spectator = 3 - pm - pn;
    ComplexMatrix<Real> v = ComplexMatrix<Real>::Zero(dim, dim);
    for (int a1 = 0; a1 < d; ++a1) {
      for (int a2 = 0; a2 < d; ++a2) {
        const auto ka = momenta(a1, a2);
        for (int b1 = 0; b1 < d; ++b1) {
          for (int b2 = 0; b2 < d; ++b2) {
            const auto kb = momenta(b1, b2);
            if (ka[spectator] != kb[spectator]) continue;
            // pair momentum is conserved automatically once the spectator's is
            v(ring_state_index(a1, a2, d), ring_state_index(b1, b2, d)) = w(ka[pm], kb[pm]);
          }
        }
      }
    }
    if (pair_potential.is_inert()) {
      channels.push_back({c, PairPotential<Real>::zero(dim)});
    } else {
      channels.push_back({c, PairPotential<Real>::dense(std::move(v))});
    }
  }
  return ScatteringSystem<Real>(3, FreeSpectrum<Real>(std::move(lam)), std::move(channels));
}

/// Permutation matrix exchanging particles 2 and 3 on the ring model.
template <typename Real = double>
ComplexMatrix<Real> ring_exchange_23(int per_particle_dim) {
  const int d = per_particle_dim;
  const Eigen::Index dim = static_cast<Eigen::Index>(d) * d;
  ComplexMatrix<Real> p = ComplexMatrix<Real>::Zero(dim, dim);
  for (int k1 = 0; k1 < d; ++k1) {
    for (int k2 = 0; k2 < d; ++k2) {
      const int k3 = ((-k1 - k2) % d + d) % d;
      p(ring_state_index(k1, k3, d), ring_state_index(k1, k2, d)) = Real(1);
    }
  }
  return p;
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
template <typename Real = double>
std::pair<RealVector<Real>, RealVector<Real>> gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorKind::invalid_input, "gauss_legendre needs n >= 1");
  RealVector<Real> x(n);
  RealVector<Real> w(n);
  const Real pi = std::numbers::pi_v<Real>;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Real z = std::cos(pi * (Real(i) + Real(0.75)) / (Real(n) + Real(0.5)));
    Real dp = 0;
    for (int it = 0; it < 100; ++it) {
      Real p0 = 1;
      Real p1 = z;
      for (int k = 2; k <= n; ++k) {
        const Real p2 = ((Real(2 * k - 1)) * z * p1 - Real(k - 1) * p0) / Real(k);
        p0 = p1;
        p1 = p2;
      }
      dp = Real(n) * (z * p1 - p0) / (z * z - Real(1));
      const Real dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) <= Real(4) * std::numeric_limits<Real>::epsilon()) break;
    }
    x(i) = -z;
    x(n - 1 - i) = z;
    w(i) = Real(2) / ((Real(1) - z * z) * dp * dp);
    w(n - 1 - i) = w(i);
  }
  return {x, w};
}

/// Continuum Yamaguchi channel on a Gauss-Legendre momentum grid.
template <typename Real = double>
struct YamaguchiModel {
  Real beta{};
  Real strength{};
  GridSpec<Real> grid;
  /// Discretized potential on H0 = diag(q_j^2): g_j = sqrt(w_j) q_j g(q_j),
  /// so g^+ f(H0) g approximates int dq q^2 g(q)^2 f(q^2).
  PairPotential<Real> potential;
  FreeSpectrum<Real> h0;

  Real form_factor(Real p) const { return yamaguchi_form_factor(p, beta); }
};

template <typename Real = double>
YamaguchiModel<Real> build_yamaguchi_grid(Real beta, Real strength, int nodes, Real cutoff,
                                          Real on_shell_momentum) {
  if (nodes < 16) throw Error(ErrorKind::config, "Yamaguchi grid needs at least 16 nodes");
  if (!(beta > Real(0))) throw Error(ErrorKind::config, "Yamaguchi beta must be positive");
  if (!(cutoff > beta)) throw Error(ErrorKind::config, "cutoff must exceed beta (cutoff >> beta expected)");
  auto [x, w] = gauss_legendre<Real>(nodes);
  GridSpec<Real> grid;
  grid.nodes = (x.array() + Real(1)) * (cutoff / Real(2));
  grid.weights = w * (cutoff / Real(2));
  grid.cutoff = cutoff;
  grid.on_shell_momentum = on_shell_momentum;
  grid.validate();

  ComplexVector<Real> g(nodes);
  RealVector<Real> lam(nodes);
  for (int j = 0; j < nodes; ++j) {
    const Real q = grid.nodes(j);
    g(j) = std::sqrt(grid.weights(j)) * q * yamaguchi_form_factor(q, beta);
    lam(j) = q * q;
  }
  auto potential = strength == Real(0) ? PairPotential<Real>::zero(nodes)
                                       : PairPotential<Real>::separable(strength, std::move(g));
  return {beta, strength, std::move(grid), std::move(potential), FreeSpectrum<Real>(std::move(lam))};
}

template <typename Real = double>
GridSolution<Real> grid_ls_solve(const YamaguchiModel<Real>& model, Real eps = Real(0),
                                 double condition_limit = kDefaultConditionLimit) {
  const Real beta = model.beta;
  return grid_ls_solve<Real>(model.strength, [beta](Real p) { return yamaguchi_form_factor(p, beta); },
                             model.grid, eps, condition_limit);
}

/// Ordered grid of spectral parameters sharing one eps.
template <typename Real = double>
std::vector<SpectralParameter<Real>> energy_grid(const EnergyGridSpec& spec) {
  validate(spec);
  std::vector<SpectralParameter<Real>> out;
  out.reserve(static_cast<std::size_t>(spec.points));
  for (int i = 0; i < spec.points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(spec.points - 1);
    double e = 0;
    if (spec.spacing == GridSpacing::linear) {
      e = spec.e_min + t * (spec.e_max - spec.e_min);
    } else {
      e = std::pow(10.0, std::log10(spec.e_min) + t * (std::log10(spec.e_max) - std::log10(spec.e_min)));
    }
    if (i == 0) e = spec.e_min;
    if (i == spec.points - 1) e = spec.e_max;
    out.emplace_back(Real(e), Real(spec.eps));
  }
  return out;
}

}  // namespace scatterkit
