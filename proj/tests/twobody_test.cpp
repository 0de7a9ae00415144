#include "doctest.h"
#include "oracles.hpp"

using namespace scatterkit;
using oracle::cd;
using oracle::Matrix;
using oracle::Vector;

namespace {

// mpmath, 40 digits: PV integral by subtraction plus the -i pi delta term
const cd kYamaguchiT_attractive(-0.25635256511634495681, -0.83030967588408789347);  // lambda=-3, beta=1, k=0.7, L=100
const cd kYamaguchiT_repulsive(0.070275973728899679971, -0.010301737468093840365);  // lambda=0.5, beta=1, k=1.3, L=100
const double kYamaguchiBound_L100 = -0.28621354526228987218;                          // lambda=-3, beta=1
const double kYamaguchiBound_L200 = -0.28621426370586487233;

double rel(cd a, cd b) { return std::abs(a - b) / std::abs(b); }

PairPotential<double> random_separable(int dim, unsigned seed, double strength) {
  std::mt19937_64 rng(seed);
  return PairPotential<double>::separable(strength, random_unit_vector<double>(dim, rng));
}

}  // namespace

TEST_CASE("pair channels") {
  const PairChannel c(3, 1);
  CHECK(c.m == 1);
  CHECK(c.n == 3);
  CHECK(c.label() == "13");
  CHECK(PairChannel(1, 3) == PairChannel(3, 1));
  CHECK_THROWS_AS(PairChannel(2, 2), Error);
  CHECK(all_channels(3).size() == 3);
  const auto c4 = all_channels(4);
  REQUIRE(c4.size() == 6);
  CHECK(c4.front() == PairChannel(1, 2));
  CHECK(c4.back() == PairChannel(3, 4));
  CHECK(std::is_sorted(c4.begin(), c4.end()));
}

TEST_CASE("pair potential forms") {
  Matrix nonherm = Matrix::Zero(2, 2);
  nonherm(0, 1) = 1.0;
  CHECK_THROWS_AS(PairPotential<double>::dense(nonherm), Error);
  CHECK_THROWS_AS(PairPotential<double>::separable(1.0, Vector::Zero(3)), Error);
  const auto z = PairPotential<double>::zero(4);
  CHECK(z.is_inert());
  const auto s = random_separable(5, 2, -0.3);
  CHECK(s.is_separable());
  CHECK(hermiticity_defect(s.matrix()) <= 1e-15);
  CHECK(op_norm(s.matrix()) == doctest::Approx(0.3).epsilon(1e-13));
  CHECK(op_norm(s.scaled(2.0).matrix() - 2.0 * s.matrix()) == 0.0);
}

TEST_CASE("zero potential gives zero T and K") {
  const auto h0 = oracle::linear_spectrum(4);
  const auto sp = green_split(h0, SpectralParameter<double>(1.5, 0.1));
  const auto v = PairPotential<double>::zero(4);
  CHECK(op_norm(solve_t_pair(v, sp.g0)) == 0.0);
  CHECK(op_norm(solve_k_pair(v, sp.g2)) == 0.0);
}

TEST_CASE("separable T matches the closed form lambda g g^+ / (1 - lambda g^+ G0 g)") {
  const auto h0 = oracle::linear_spectrum(10, 0.5);
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const double lambda = seed % 2 ? 0.4 : -0.7;
    const auto v = random_separable(10, seed, lambda);
    const auto& g = v.as_separable().form_factor;
    for (double e0 : {0.25, 1.7, 6.0}) {
      const auto sp = green_split(h0, SpectralParameter<double>(e0, 0.05));
      const Matrix t = solve_t_pair(v, sp.g0);
      const cd tau = lambda / (1.0 - lambda * (g.adjoint() * sp.g0 * g)(0, 0));
      const Matrix ref = tau * g * g.adjoint();
      CHECK(op_norm(t - ref) <= 1e-12 * op_norm(ref));
      const Matrix k = solve_k_pair(v, sp.g2);
      const double kappa = lambda / (1.0 - lambda * (g.adjoint() * sp.g2 * g)(0, 0).real());
      CHECK(op_norm(k - kappa * g * g.adjoint()) <= 1e-12 * std::abs(kappa));
    }
  }
}

TEST_CASE("two-body Heitler relations and unitarity on random dense pairs") {
  const auto h0 = oracle::linear_spectrum(12);
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const auto v = PairPotential<double>::dense(oracle::random_hermitian(12, seed, 0.3));
    for (double e0 : {0.5, 3.3, 7.7, 15.0, 40.0}) {
      const auto sp = green_split(h0, SpectralParameter<double>(e0, 0.25));
      const Matrix t = solve_t_pair(v, sp.g0);
      const Matrix k = solve_k_pair(v, sp.g2);
      const double tn = op_norm(t);
      CHECK(hermiticity_defect(k) <= 1e-12);
      CHECK(two_body_heitler_residual(t, k, sp.g1) <= 1e-10);
      CHECK(op_norm(k_from_t(t, sp.g1) - k) <= 1e-10 * std::max(op_norm(k), 1e-30));
      CHECK(pair_unitarity_defect(t, sp.g1) <= 1e-12 * std::max(1.0, tn * tn));
      // Lippmann-Schwinger residual
      CHECK(op_norm(t - v.matrix() - v.matrix() * sp.g0 * t) <= 1e-12 * std::max(1.0, tn));
    }
  }
}

TEST_CASE("pole of a bound channel is reported as near-singular") {
  // single level H0 = 0, v = -1: T = v / (1 - v/z) has its pole at z = -1
  const FreeSpectrum<double> h0(std::vector<double>{0.0});
  Matrix vm(1, 1);
  vm(0, 0) = -1.0;
  const auto v = PairPotential<double>::dense(vm);
  const auto g0 = resolvent_free(h0, SpectralParameter<double>(-1.0, 1e-14));
  CHECK_THROWS_AS(solve_t_pair(v, g0), NearSingularError);
}

TEST_CASE("Yamaguchi closed form against frozen high-precision values") {
  CHECK(rel(yamaguchi_on_shell_t(-3.0, 1.0, 0.7, 100.0), kYamaguchiT_attractive) <= 1e-12);
  CHECK(rel(yamaguchi_on_shell_t(0.5, 1.0, 1.3, 100.0), kYamaguchiT_repulsive) <= 1e-12);
  CHECK(yamaguchi_on_shell_t(0.0, 1.0, 0.7, 100.0) == cd(0, 0));
  const auto eb100 = yamaguchi_bound_energy(-3.0, 1.0, 100.0);
  const auto eb200 = yamaguchi_bound_energy(-3.0, 1.0, 200.0);
  REQUIRE(eb100);
  REQUIRE(eb200);
  CHECK(*eb100 == doctest::Approx(kYamaguchiBound_L100).epsilon(1e-12));
  CHECK(*eb200 == doctest::Approx(kYamaguchiBound_L200).epsilon(1e-12));
  CHECK_FALSE(yamaguchi_bound_energy(0.5, 1.0, 100.0));
  CHECK_FALSE(yamaguchi_bound_energy(-1e-3, 1.0, 100.0));
}

TEST_CASE("Yamaguchi on-shell T obeys the optical relation Im(1/T) = pi k / 2") {
  for (double k : {0.1, 0.7, 2.0, 5.0}) {
    for (double lambda : {-3.0, -0.5, 0.8}) {
      const cd t = yamaguchi_on_shell_t(lambda, 1.0, k, 100.0);
      CHECK((1.0 / t).imag() == doctest::Approx(std::numbers::pi * k / 2).epsilon(1e-12));
    }
  }
}

TEST_CASE("grid Lippmann-Schwinger solver against the separable oracle") {
  const auto model = build_yamaguchi_grid<double>(1.0, -3.0, 200, 100.0, 0.7);
  const auto sol = grid_ls_solve(model);
  CHECK(rel(sol.on_shell, kYamaguchiT_attractive) <= 1e-6);
  CHECK((1.0 / sol.on_shell).imag() == doctest::Approx(std::numbers::pi * 0.7 / 2).epsilon(1e-10));

  // half-off-shell column: T(p, k) = g(p) g(k) tau(E)
  const cd tau = sol.on_shell / std::pow(yamaguchi_form_factor(0.7, 1.0), 2);
  for (Eigen::Index j = 0; j < model.grid.size(); j += 17) {
    const double q = model.grid.nodes(j);
    const cd ref = tau * yamaguchi_form_factor(q, 1.0) * yamaguchi_form_factor(0.7, 1.0);
    CHECK(std::abs(sol.half_off_shell(j) - ref) <= 1e-12 * std::abs(ref));
  }

  const auto rep = build_yamaguchi_grid<double>(1.0, 0.5, 200, 100.0, 1.3);
  CHECK(rel(grid_ls_solve(rep).on_shell, kYamaguchiT_repulsive) <= 1e-6);

  const auto free = build_yamaguchi_grid<double>(1.0, 0.0, 64, 100.0, 0.7);
  CHECK(grid_ls_solve(free).on_shell == cd(0, 0));
}

TEST_CASE("grid solver node doubling converges") {
  std::vector<cd> t;
  for (int n : {100, 200, 400}) t.push_back(grid_ls_solve(build_yamaguchi_grid<double>(1.0, -3.0, n, 100.0, 0.7)).on_shell);
  const double ratio = std::abs(t[2] - t[1]) / std::abs(t[1] - t[0]);
  CHECK(ratio < 0.25);
}

TEST_CASE("grid solver edge cases") {
  auto model = build_yamaguchi_grid<double>(1.0, -3.0, 32, 10.0, 0.7);
  model.grid.on_shell_momentum = model.grid.nodes(5);
  try {
    (void)grid_ls_solve(model);
    FAIL("expected a regrid error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate);
  }
  auto small = model.grid;
  small.nodes.conservativeResize(8);
  small.weights.conservativeResize(8);
  CHECK_THROWS_AS(small.validate(), Error);
  CHECK_THROWS_AS(build_yamaguchi_grid<double>(1.0, -3.0, 32, 10.0, 12.0), Error);
  CHECK_THROWS_AS(grid_ls_solve(model, -1.0), Error);
}

TEST_CASE("grid solver at finite eps approaches the eps -> 0 limit") {
  const auto model = build_yamaguchi_grid<double>(1.0, -3.0, 1200, 20.0, 0.7);
  const cd limit = grid_ls_solve(model).on_shell;
  std::vector<double> gaps;
  for (double eps : {0.4, 0.2, 0.1}) {
    gaps.push_back(std::abs(grid_ls_solve(model, eps).on_shell - limit) / std::abs(limit));
  }
  // first-order approach: halving eps roughly halves the gap
  CHECK(gaps[1] / gaps[0] < 0.7);
  CHECK(gaps[2] / gaps[1] < 0.7);
}

TEST_CASE("bound states") {
  SUBCASE("single level: H0 = 0, v = -1 binds at E = -1") {
    const FreeSpectrum<double> h0(std::vector<double>{0.0});
    Matrix vm(1, 1);
    vm(0, 0) = -1.0;
    const auto eb = channel_binding_energy(PairPotential<double>::dense(vm), h0, 1.0);
    REQUIRE(eb);
    CHECK(*eb == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("repulsive and inert channels do not bind") {
    const auto h0 = oracle::linear_spectrum(6);
    CHECK_FALSE(channel_binding_energy(random_separable(6, 1, 0.5), h0, 1.0));
    CHECK_FALSE(channel_binding_energy(PairPotential<double>::zero(6), h0, 1.0));
    CHECK(min_binding_energy<double>({PairPotential<double>::zero(6)}, h0) == 0.0);
  }
  SUBCASE("dense and separable searches agree, and E_B solves det(E - H0 - v) = 0") {
    const auto h0 = oracle::linear_spectrum(8, 0.5);
    for (unsigned seed = 1; seed <= 5; ++seed) {
      const auto sep = random_separable(8, seed, -2.0);
      const auto dense = PairPotential<double>::dense(sep.matrix());
      const auto a = channel_binding_energy(sep, h0, 2.0);
      const auto b = channel_binding_energy(dense, h0, 2.0);
      REQUIRE(a);
      REQUIRE(b);
      CHECK(*a == doctest::Approx(*b).epsilon(1e-10));
      Matrix h = h0.eigenvalues().cast<cd>().asDiagonal().toDenseMatrix();
      h += sep.matrix();
      Eigen::SelfAdjointEigenSolver<Matrix> es(h);
      CHECK(*a == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-10));
    }
  }
  SUBCASE("discretized Yamaguchi channel matches the analytic pole condition") {
    const auto model = build_yamaguchi_grid<double>(1.0, -3.0, 200, 100.0, 0.7);
    const double eb = min_binding_energy<double>({model.potential}, model.h0);
    CHECK(std::abs(eb - std::abs(kYamaguchiBound_L100)) <= 1e-8);
  }
  SUBCASE("level below the bracket is reported") {
    const FreeSpectrum<double> h0(std::vector<double>{0.0});
    Matrix vm(1, 1);
    vm(0, 0) = -500.0;
    try {
      (void)channel_binding_energy(PairPotential<double>::dense(vm), h0, 1.0);
      FAIL("expected no_convergence");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::no_convergence);
    }
  }
}

TEST_CASE("long double pair solve") {
  using LD = long double;
  const FreeSpectrum<LD> h0(std::vector<LD>{0.0L, 1.0L, 4.0L});
  ComplexVector<LD> g(3);
  g << 1.0L, 0.5L, 0.25L;
  const auto v = PairPotential<LD>::separable(-0.5L, g);
  const auto sp = green_split(h0, SpectralParameter<LD>(2.0L, 0.1L));
  const ComplexMatrix<LD> t = solve_t_pair(v, sp.g0);
  const LD tn = op_norm(t);
  CHECK(static_cast<double>(pair_unitarity_defect(t, sp.g1) / std::max(LD(1), tn * tn)) < 1e-16);
}
