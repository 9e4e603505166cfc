#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "commspec/errors.hpp"
#include "commspec/hypotest.hpp"
#include "commspec/simulate.hpp"

using namespace commspec;
using Eigen::MatrixXd;

namespace {

PairedSample correlated_sample(int p, int n, double rho, std::uint64_t seed) {
  PairedSample s;
  auto r1 = make_stream(seed, 0, StreamRole::z1), r2 = make_stream(seed, 0, StreamRole::z2);
  s.X1 = gen_innovations(p, n, InnovationKind::gaussian, r1);
  const MatrixXd V = gen_innovations(p, n, InnovationKind::gaussian, r2);
  s.X2 = rho * s.X1 + std::sqrt(1.0 - rho * rho) * V;
  return s;
}

}  // namespace

TEST(SpectralStat, Examples) {
  EXPECT_EQ(spectral_stat(ImagSpectrum({0.0, 0.0})), 0.0);
  EXPECT_DOUBLE_EQ(spectral_stat(ImagSpectrum({-1.0, 1.0})), 1.0);
  const PairedSample s = correlated_sample(40, 60, 0.0, 1);
  const MatrixXd S = commutator(s.X1, s.X2);
  EXPECT_NEAR(spectral_stat(eigenvalues_skew(S)), frobenius_stat(S), 1e-12);
}

TEST(PValue, Counting) {
  const std::vector<double> nulls = {1.0, 2.0, 3.0, 4.0, 5.0};
  EXPECT_EQ(p_value(0.5, nulls), 0.0);
  EXPECT_EQ(p_value(6.0, nulls), 1.0);
  EXPECT_DOUBLE_EQ(p_value(3.0, nulls), 0.6);
  double prev = 0.0;
  for (double t = 0.0; t <= 6.0; t += 0.1) {
    const double v = p_value(t, nulls);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Shrinkage, Values) {
  EXPECT_EQ(theoretical_shrinkage(0.0), 1.0);
  EXPECT_NEAR(theoretical_shrinkage(0.7), 0.7141, 1e-4);
  EXPECT_EQ(theoretical_shrinkage(0.3), theoretical_shrinkage(-0.3));
  EXPECT_THROW(theoretical_shrinkage(1.0), DomainError);
}

TEST(McNull, ReproducibleAndThreadIndependent) {
  const NullSigma I = UnivariateSpectralMeasure::point(1.0);
  const auto a = mc_null(20, 40, I, 1, 5, 1), b = mc_null(20, 40, I, 1, 5, 1);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a, b);
  const auto c = mc_null(20, 40, I, 16, 5, 1), d = mc_null(20, 40, I, 16, 5, 4);
  EXPECT_EQ(c, d);
  EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
}

TEST(McNull, MeanMatchesSecondMomentLaw) {
  const auto nulls = mc_null(100, 500, UnivariateSpectralMeasure::point(1.0), 200, 11);
  const double mean = std::accumulate(nulls.begin(), nulls.end(), 0.0) / nulls.size();
  EXPECT_NEAR(mean / std::sqrt(0.4), 1.0, 0.03);
}

TEST(McNull, KnownMatrixEqualsKnownSpectrumForIdentity) {
  const auto a = mc_null(30, 60, MatrixXd(MatrixXd::Identity(30, 30)), 8, 2);
  const auto b = mc_null(30, 60, UnivariateSpectralMeasure::point(1.0), 8, 2);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(McNull, VarianceShrinksWithDimension) {
  auto var = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / (v.size() - 1);
  };
  const NullSigma I = UnivariateSpectralMeasure::point(1.0);
  const double small = var(mc_null(30, 60, I, 200, 1)), large = var(mc_null(60, 120, I, 200, 1));
  EXPECT_GE(small, 2.0 * large);
}

TEST(Simplex, Projection) {
  const auto w = project_simplex({0.5, 2.0, -1.0});
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-15);
  EXPECT_EQ(w[2], 0.0);
  const auto same = project_simplex({0.2, 0.3, 0.5});
  EXPECT_NEAR(same[0], 0.2, 1e-15);
}

TEST(MpStieltjes, IdentityIsMarchenkoPastur) {
  // MP law with ratio c: m solves c z m^2 - (1 - c - z) m + 1 = 0.
  const double c = 0.2;
  const cplx z(1.0, 0.1);
  const cplx m = mp_stieltjes({1.0}, {1.0}, c, z);
  EXPECT_LT(std::abs(c * z * m * m - (1.0 - c - z) * m + 1.0), 1e-10);
  EXPECT_GT(m.imag(), 0.0);
}

TEST(EstimatePsd, IdentityTruth) {
  const PairedSample s = correlated_sample(100, 500, 0.0, 3);
  const auto eigs = sample_cov_eigs(s.X1);
  const EstimatedPSD est = estimate_psd(eigs, 0.2, default_psd_grid(eigs));
  double near_one = 0.0, total = 0.0;
  for (std::size_t k = 0; k < est.grid.size(); ++k) {
    ASSERT_GE(est.weights[k], 0.0);
    total += est.weights[k];
    if (std::abs(est.grid[k] - 1.0) <= 0.15) near_one += est.weights[k];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_GE(near_one, 0.85);
}

TEST(EstimatePsd, DegenerateInput) {
  const EstimatedPSD est = estimate_psd(std::vector<double>(10, 0.0), 0.5, {0.0});
  const auto m = est.measure();
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.atoms()[0].l, 0.0);
}

TEST(EstimatePsd, TwoAtomRecovery) {
  const int p = 200, n = 1000;
  auto rng = make_stream(4, 0, StreamRole::z1);
  MatrixXd X = gen_innovations(p, n, InnovationKind::gaussian, rng);
  X.bottomRows(p / 2) *= std::sqrt(2.0);
  const auto eigs = sample_cov_eigs(X);
  const auto grid = default_psd_grid(eigs);
  const EstimatedPSD est = estimate_psd(eigs, double(p) / n, grid);
  const double spacing = grid[1] - grid[0];
  double mass = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (std::abs(grid[k] - 1.0) <= spacing || std::abs(grid[k] - 2.0) <= spacing) mass += est.weights[k];
  EXPECT_GE(mass, 0.6);
}

TEST(RunTest, KnownSigmaPower) {
  TestConfig cfg;
  cfg.B = 200;
  cfg.seed = 1;
  const TestResult r = run_test(correlated_sample(100, 500, 0.5, 21), cfg);
  EXPECT_LE(r.p_value, 0.01);
  EXPECT_EQ(r.nulls.size(), 200u);
  EXPECT_DOUBLE_EQ(r.p_value, p_value(r.T_obs, r.nulls));
}

TEST(RunTest, CacheRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "commspec_cache_test";
  std::filesystem::remove_all(dir);
  TestConfig cfg;
  cfg.B = 20;
  cfg.seed = 2;
  cfg.cache_dir = dir.string();
  const PairedSample s = correlated_sample(20, 40, 0.0, 5);
  const TestResult a = run_test(s, cfg);
  EXPECT_FALSE(std::filesystem::is_empty(dir));
  const TestResult b = run_test(s, cfg);
  EXPECT_EQ(a.nulls, b.nulls);
  std::filesystem::remove_all(dir);
}

TEST(RunTest, DimensionMismatch) {
  PairedSample s;
  s.X1 = MatrixXd::Zero(3, 4);
  s.X2 = MatrixXd::Zero(3, 5);
  EXPECT_THROW(run_test(s, TestConfig{}), DomainError);
}
