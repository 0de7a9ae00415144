#include "doctest.h"
#include "oracles.hpp"

using namespace scatterkit;
using oracle::cd;
using oracle::Matrix;

TEST_CASE("spectral parameter rejects eps <= 0") {
  CHECK_THROWS_AS(SpectralParameter<double>(1.0, 0.0), Error);
  CHECK_THROWS_AS(SpectralParameter<double>(1.0, -1e-3), Error);
  try {
    SpectralParameter<double>(1.0, 0.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
  }
  const SpectralParameter<double> z(2.5, 0.25);
  CHECK(z.z() == cd(2.5, 0.25));
  CHECK(z.z_conj() == cd(2.5, -0.25));
}

TEST_CASE("free spectrum validation") {
  CHECK_THROWS_AS(FreeSpectrum<double>(std::vector<double>{}), Error);
  CHECK_THROWS_AS(FreeSpectrum<double>(std::vector<double>{0.0, -1.0}), Error);
  CHECK_THROWS_AS(FreeSpectrum<double>(std::vector<double>{0.0, NAN}), Error);
  const FreeSpectrum<double> h0(std::vector<double>{3.0, 1.0, 7.0});
  CHECK(h0.dim() == 3);
  CHECK(h0.min() == 1.0);
  CHECK(h0.width() == 6.0);
}

TEST_CASE("resolvent of the single level H0 = 0 at z = i") {
  const FreeSpectrum<double> h0(std::vector<double>{0.0});
  const auto g = resolvent_free(h0, SpectralParameter<double>(0.0, 1.0));
  CHECK(std::abs(g(0, 0) - cd(0, -1)) < 1e-15);
}

TEST_CASE("green split reproduces G0 and has the right symmetry") {
  const auto h0 = oracle::linear_spectrum(8, 0.7);
  for (double e0 : {-1.0, 0.35, 2.1, 9.0}) {
    for (double eps : {1e-3, 0.1, 2.0}) {
      const SpectralParameter<double> z(e0, eps);
      const auto s = green_split(h0, z);
      CHECK(op_norm(s.g1 + s.g2 - s.g0) <= 1e-14 * op_norm(s.g0));
      CHECK(op_norm(s.g1 + s.g1.adjoint()) <= 1e-15 * op_norm(s.g1));
      CHECK(op_norm(s.g2 - s.g2.adjoint()) <= 1e-15 * op_norm(s.g2));
      // direct inverse of (z - H0) as an independent oracle
      Matrix zh = -h0.eigenvalues().cast<cd>().asDiagonal().toDenseMatrix();
      zh.diagonal().array() += z.z();
      CHECK(op_norm(s.g0 - zh.inverse()) <= 1e-13 * op_norm(s.g0));
      const Matrix gm = resolvent_free(h0, z.z_conj());
      CHECK(op_norm(s.g1 - (s.g0 - gm) / 2.0) <= 1e-15 * op_norm(s.g0));
    }
  }
}

TEST_CASE("green split of H0 = [0, 2] at z = 1 + i") {
  const FreeSpectrum<double> h0(std::vector<double>{0.0, 2.0});
  const auto s = green_split(h0, SpectralParameter<double>(1.0, 1.0));
  CHECK(std::abs(s.g0(0, 0) - cd(0.5, -0.5)) < 1e-15);
  CHECK(std::abs(s.g0(1, 1) - cd(-0.5, -0.5)) < 1e-15);
  CHECK(std::abs(s.g1(0, 0) - cd(0, -0.5)) < 1e-15);
  CHECK(std::abs(s.g2(1, 1) - cd(-0.5, 0)) < 1e-15);
}

TEST_CASE("op_norm matches power iteration and known values") {
  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = 2.0;
  d(1, 1) = cd(0, -5);
  d(2, 2) = 1.0;
  CHECK(op_norm(d) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(op_norm(Matrix::Zero(4, 4)) == 0.0);
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const Matrix a = oracle::random_matrix(9, seed);
    CHECK(op_norm(a) == doctest::Approx(oracle::power_norm(a)).epsilon(1e-10));
    CHECK(op_norm(a) <= frobenius_norm(a) * (1 + 1e-14));
  }
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = cd(NAN, 0);
  CHECK_THROWS_AS(op_norm(bad), Error);
}

TEST_CASE("solve_operator_equation") {
  SUBCASE("A = 0 gives X = B") {
    const Matrix b = oracle::random_matrix(5, 3);
    const Matrix x = solve_operator_equation(Matrix::Zero(5, 5), b);
    CHECK(op_norm(x - b) == 0.0);
  }
  SUBCASE("residual is at roundoff for random well-conditioned systems") {
    for (unsigned seed = 1; seed <= 20; ++seed) {
      Matrix a = oracle::random_matrix(10, seed);
      a *= 0.5 / op_norm(a);
      const Matrix b = oracle::random_matrix(10, seed + 100);
      const Matrix x = solve_operator_equation(a, b);
      CHECK(operator_equation_residual(a, x, b) <= 1e-13 * op_norm(b));
      // Neumann series oracle
      Matrix ref = b;
      Matrix term = b;
      for (int k = 0; k < 80; ++k) {
        term = (a * term).eval();
        ref += term;
      }
      CHECK(op_norm(x - ref) <= 1e-12 * op_norm(ref));
    }
  }
  SUBCASE("singular system is reported with its condition estimate") {
    Matrix a = Matrix::Identity(3, 3);
    a(0, 0) = 0.0;
    try {
      (void)solve_operator_equation(a, Matrix::Identity(3, 3), 1e12, "probe");
      FAIL("expected NearSingularError");
    } catch (const NearSingularError& e) {
      CHECK(e.kind() == ErrorKind::near_singular);
      CHECK(e.quantity() == "probe");
      CHECK(e.condition() > 1e12);
    }
  }
  SUBCASE("shape and finiteness") {
    CHECK_THROWS_AS(solve_operator_equation(Matrix::Zero(3, 2), Matrix::Zero(3, 3)), Error);
    CHECK_THROWS_AS(solve_operator_equation(Matrix::Zero(3, 3), Matrix::Zero(2, 3)), Error);
  }
}

TEST_CASE("green limits: G1 -> 0 like eps, G2 -> PV like eps^2") {
  const auto h0 = oracle::linear_spectrum(6, 1.0);
  const std::vector<double> eps{1e-1, 5e-2, 2.5e-2, 1.25e-2, 6.25e-3};
  const auto rows = green_limits_check(h0, 2.5, eps);
  REQUIRE(rows.size() == eps.size());
  std::vector<double> g1, g2;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    g1.push_back(rows[i].g1_norm);
    g2.push_back(rows[i].g2_pv_deviation);
    if (i > 0) {
      CHECK(rows[i].g1_norm < rows[i - 1].g1_norm);
      CHECK(rows[i].g2_pv_deviation < rows[i - 1].g2_pv_deviation);
    }
  }
  CHECK(oracle::loglog_slope(eps, g1) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(oracle::loglog_slope(eps, g2) == doctest::Approx(2.0).epsilon(0.05));
  CHECK_THROWS_AS(green_limits_check(h0, 3.0, eps), Error);
}

TEST_CASE("hermiticity defect") {
  const Matrix h = oracle::random_hermitian(7, 5, 1.0);
  CHECK(hermiticity_defect(h) <= 1e-15);
  CHECK(hermiticity_defect(Matrix::Zero(3, 3)) == 0.0);
  Matrix a = Matrix::Zero(2, 2);
  a(0, 1) = 1.0;
  CHECK(hermiticity_defect(a) == doctest::Approx(1.0));
}

TEST_CASE("long double instantiation") {
  using LD = long double;
  const FreeSpectrum<LD> h0(std::vector<LD>{0.0L, 1.0L, 2.0L});
  const auto s = green_split(h0, SpectralParameter<LD>(0.5L, 0.125L));
  ComplexMatrix<LD> a = ComplexMatrix<LD>::Identity(3, 3) * Complex<LD>(0.25L, 0.0L);
  const auto x = solve_operator_equation(a, s.g0);
  CHECK(static_cast<double>(op_norm(ComplexMatrix<LD>(x - s.g0 / 0.75L))) < 1e-17);
}
