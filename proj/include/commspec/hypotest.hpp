#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "commspec/measure.hpp"
#include "commspec/spectrum.hpp"

namespace commspec {

struct PairedSample {
  Eigen::MatrixXd X1;
  Eigen::MatrixXd X2;

  int p() const { return static_cast<int>(X1.rows()); }
  int n() const { return static_cast<int>(X1.cols()); }
  /// Throws DomainError on mismatched or empty dimensions.
  void validate() const;
};

/// Population spectrum fitted on a grid. Weights lie on the simplex.
struct EstimatedPSD {
  std::vector<double> grid;
  std::vector<double> weights;
  double fit_residual = 0.0;
  int iterations = 0;
  bool converged = true;

  /// Grid atoms with positive weight.
  UnivariateSpectralMeasure measure() const;
};

/// Known Sigma^{1/2} as a matrix, or a known spectrum (any basis gives the
/// same null law for Gaussian innovations), or an estimated spectrum.
using NullSigma = std::variant<Eigen::MatrixXd, UnivariateSpectralMeasure, EstimatedPSD>;

enum class SigmaMode { known, estimate };

struct TestConfig {
  int B = 1000;
  std::uint64_t seed = 0;
  SigmaMode sigma_mode = SigmaMode::known;
  /// Known mode: either a Sigma^{1/2} matrix or a spectrum. Identity when neither is set.
  std::optional<Eigen::MatrixXd> sigma_half;
  std::optional<UnivariateSpectralMeasure> sigma_spectrum;
  /// Estimate mode: number of grid points on [0, 3 * max sample eigenvalue].
  int psd_grid_points = 64;
  /// Average the estimates from X1 and X2 (otherwise X1 only).
  bool pooled = true;
  int threads = 0;
  /// Directory for cached null samples; empty disables caching.
  std::string cache_dir;

  void validate() const;
};

struct TestResult {
  double T_obs = 0.0;
  /// Null statistics sorted ascending.
  std::vector<double> nulls;
  double p_value = 0.0;
  std::optional<EstimatedPSD> psd;
  TestConfig config;
};

/// sqrt((1/p) sum lambda_j^2).
double spectral_stat(const ImagSpectrum& spec);
/// ||S||_F / sqrt(p); equal to spectral_stat of the spectrum of S.
double frobenius_stat(const Eigen::MatrixXd& S);

/// B draws of the statistic for S_0 = n^{-1} Sigma^{1/2} [Z1, Z2] Sigma^{1/2}
/// with Gaussian Z. Replicate b uses its own seeded streams, so the result
/// does not depend on the thread count. Sorted ascending.
std::vector<double> mc_null(int p, int n, const NullSigma& sigma, int B, std::uint64_t seed,
                            int threads = 0);

/// (1/B) #{T_b <= T_obs}.
double p_value(double T_obs, const std::vector<double>& nulls);

/// sqrt(1 - rho^2).
double theoretical_shrinkage(double rho);

/// Eigenvalues of X X^T / n, ascending.
std::vector<double> sample_cov_eigs(const Eigen::MatrixXd& X);

/// `points` equally spaced values on [0, 3 * max(eigs)].
std::vector<double> default_psd_grid(const std::vector<double>& eigs, int points = 64);

struct PsdFitOptions {
  int eval_points = 20;
  int max_iter = 500;
};

/// Least-squares fit of the Silverstein equation on a grid: weights w on the
/// simplex minimizing sum_j |m_w(z_j) - m_emp(z_j)|^2 at z_j = x_j + 0.1 i range,
/// by projected gradient with backtracking. Gradients use the implicit
/// derivative of the companion transform.
EstimatedPSD estimate_psd(const std::vector<double>& sample_cov_eigs, double c_n,
                          const std::vector<double>& grid, const PsdFitOptions& opt = {});

/// Model Stieltjes transform m(z) of the sample covariance LSD for a discrete
/// population spectrum, at z in C+.
cplx mp_stieltjes(const std::vector<double>& grid, const std::vector<double>& weights, double c,
                  cplx z);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(const std::vector<double>& v);

TestResult run_test(const PairedSample& sample, const TestConfig& cfg);

/// FNV-1a hash of a byte range.
std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t sigma_hash(const NullSigma& sigma);

}  // namespace commspec
