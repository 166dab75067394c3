#include <gtest/gtest.h>

#include <memory>

#include "helpers.hpp"
#include "scg/diagnostics.hpp"
#include "scg/solver_uni.hpp"
#include "scg/stochastic_source.hpp"

using namespace scg;
using namespace testing_support;

namespace {

double sine(double t) { return std::sin(2.0 * M_PI * t); }

SampleSet sine_samples(std::size_t n, std::uint64_t seed) {
  auto y = rayleigh_samples(RayleighSpec{0.25, 0.0625, seed}, n);
  std::vector<complex> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = sine(y[i]);
  return SampleSet(std::move(y), std::move(z));
}

}  // namespace

TEST(MseUniform, ExactLutIsWithinQuantization) {
  Grid g(1 << 16);
  auto u = LutFunction::sample(g, sine);
  EXPECT_LE(mse_uniform(u, sine, 1000), 1e-8);
}

TEST(MseUniform, ZeroAgainstSine) {
  LutFunction zero(Grid(1024));
  EXPECT_NEAR(mse_uniform(zero, sine, 1000), 0.5, 1e-3);
}

TEST(MseUniform, StableUnderRefinement) {
  LutFunction zero(Grid(1024));
  auto smooth = [](double t) { return std::exp(t) * std::cos(3.0 * t); };
  EXPECT_LT(std::abs(mse_uniform(zero, smooth, 2000) - mse_uniform(zero, smooth, 1000)), 1e-6);
  EXPECT_LT(std::abs(mse_uniform(zero, sine, 2000) - mse_uniform(zero, sine, 1000)), 1e-6);
}

TEST(MseUniform, NeedsTwoPoints) { EXPECT_THROW(mse_uniform(LutFunction(Grid(4)), sine, 1), domain_error); }

TEST(DeltaRatio, Endpoints) {
  Grid g(4096);
  auto basis = orthonormal_polynomials_3term(4, Density::uniform(g), g);
  auto s = sine_samples(80, 1);
  auto ubar = normal_eq_oracle(basis, s).ubar;
  LutFunction u0(g);
  EXPECT_EQ(delta_ratio(u0, ubar, s, ubar), 0.0);
  EXPECT_DOUBLE_EQ(delta_ratio(u0, u0, s, ubar), 1.0);
  EXPECT_EQ(delta_ratio(ubar, u0, s, ubar), 0.0);  // zero denominator sentinel
}

TEST(DeltaRatio, RandomSmallInstancesStayInUnitInterval) {
  std::mt19937_64 rng(7);
  int inside = 0;
  for (int t = 0; t < 100; ++t) {
    std::size_t m = 1 + static_cast<std::size_t>(t % 4);
    Grid g(2048);
    Density rho = t % 2 ? Density::uniform(g) : random_density(g, rng);
    auto basis = std::make_shared<const BasisSet>(mixed_basis(orthonormal_polynomials_3term(m, rho, g), rng));
    ScgState st(basis);
    for (int k = 0; k < 3; ++k) scg_step(st, sine_samples(50 + t, 1000 * t + k));
    auto s = sine_samples(50 + t, 1000 * t + 99);
    LutFunction before = st.u();
    scg_step(st, s);
    double d = delta_ratio(before, st.u(), s, normal_eq_oracle(*basis, s).ubar);
    if (d >= 0.0 && d <= 1.0 + 1e-9) ++inside;
  }
  EXPECT_EQ(inside, 100);
}

TEST(NormalEqOracle, OrthonormalExactGivesProjections) {
  Grid g(4096);
  Density rho = rayleigh_density(0.3, g);
  auto psi = orthonormal_polynomials_3term(6, rho, g);
  auto target = LutFunction::sample(g, sine);
  auto sol = normal_eq_oracle(psi, rho, target);
  for (std::size_t i = 0; i < 6; ++i)
    EXPECT_LE(std::abs(sol.coefficients(static_cast<Eigen::Index>(i)) - inner_exact(psi[i], target, rho)), 1e-10);
}

TEST(NormalEqOracle, InSpanTargetIsReproduced) {
  Grid g(4096);
  Density uni = Density::uniform(g);
  auto phi = monomial_basis(5, g);
  LutFunction target(g);
  for (std::size_t i = 0; i < 5; ++i) lut_axpy_inplace(target, complex(1.0 / (i + 1.0), 0.5 * i), phi[i]);
  auto sol = normal_eq_oracle(phi, uni, target);
  LutFunction d = lut_axpy(target, -1.0, sol.ubar);
  EXPECT_LE(inner_exact(d, d, uni).real(), 1e-16);
}

TEST(NormalEqOracle, MonomialSineAgreesWithCg) {
  Grid g(1 << 16);
  Density uni = Density::uniform(g);
  auto phi = monomial_basis(10, g);
  auto target = LutFunction::sample(g, sine);
  auto sol = normal_eq_oracle(phi, uni, target);
  auto cg = cg_solve(gram_schmidt(phi, uni), target, uni, 1e-30);
  LutFunction d = lut_axpy(cg.u, -1.0, sol.ubar);
  EXPECT_LE(std::sqrt(inner_exact(d, d, uni).real() / inner_exact(sol.ubar, sol.ubar, uni).real()), 1e-8);
}

TEST(NormalEqOracle, SingularSampleSystem) {
  Grid g(1024);
  auto basis = orthonormal_polynomials_3term(6, Density::uniform(g), g);
  EXPECT_THROW(normal_eq_oracle(basis, sine_samples(3, 1)), rank_error);
}

TEST(Identity, SampleErrorDecomposition) {
  std::mt19937_64 rng(41);
  Grid g(4096);
  auto basis = orthonormal_polynomials_3term(6, Density::uniform(g), g);
  for (int t = 0; t < 20; ++t) {
    auto s = sine_samples(100, 500 + t);
    auto ubar = normal_eq_oracle(basis, s).ubar;
    LutFunction u(g);
    std::normal_distribution<double> nd;
    for (std::size_t i = 0; i < basis.size(); ++i) lut_axpy_inplace(u, complex(nd(rng), nd(rng)), basis[i]);
    double h = sample_distance_sq(u, ubar, s);
    double j = sample_objective(u, s) - sample_objective(ubar, s);
    EXPECT_LE(std::abs(h - j), 1e-10 * h);
  }
}

TEST(ConditionNumber, SimpleMatrices) {
  EXPECT_NEAR(condition_number(Eigen::MatrixXcd::Identity(5, 5)), 1.0, 1e-14);
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 10.0;
  EXPECT_NEAR(condition_number(d), 10.0, 1e-12);
  Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(3, 3);
  z(0, 0) = 1.0;
  EXPECT_TRUE(std::isinf(condition_number(z)));
}

TEST(ConditionNumber, HilbertTen) {
  // Reference from a 50-digit eigenvalue computation.
  const double reference = 1.6026286870216883e13;
  Eigen::MatrixXcd h(10, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) h(i, j) = 1.0 / (i + j + 1);
  EXPECT_NEAR(condition_number(h) / reference, 1.0, 0.05);
}

TEST(ConditionNumber, OrthonormalizationNeverHurts) {
  std::mt19937_64 rng(8);
  Grid g(1 << 14);
  std::vector<Density> weights = {Density::uniform(g), rayleigh_density(0.3, g), random_density(g, rng)};
  for (const auto& rho : weights)
    for (std::size_t m : {3u, 6u, 9u}) {
      auto phi = monomial_basis(m, g);
      auto psi = gram_schmidt(phi, rho);
      EXPECT_LE(condition_number(covariance_matrix(psi, rho)), condition_number(covariance_matrix(phi, rho)));
    }
}
