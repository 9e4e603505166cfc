#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "commspec/measure.hpp"
#include "commspec/spectrum.hpp"

namespace commspec {

enum class InnovationKind { gaussian, uniform, mixed };

struct InnovationSpec {
  InnovationKind kind = InnovationKind::gaussian;
  std::uint64_t seed = 0;
};

enum class ScalingKind { identity, commuting_diag, householder, haar };

struct ScalingSpec {
  ScalingKind kind = ScalingKind::identity;
  /// Joint eigenvalue law; required for every kind except identity.
  std::optional<BivariateSpectralMeasure> H;
  /// Householder rank; 0 means ceil(sqrt(p)).
  int k = 0;
};

std::string to_string(InnovationKind k);
std::string to_string(ScalingKind k);
InnovationKind parse_innovation_kind(const std::string& s);
ScalingKind parse_scaling_kind(const std::string& s);

/// Matrix roles within one replicate, used to split RNG streams.
enum class StreamRole : std::uint64_t { z1 = 1, z2 = 2, scaling = 3, basis1 = 4, basis2 = 5 };

/// Independent generator for (master seed, replicate, role).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replicate, StreamRole role);

/// p x n matrix of i.i.d. mean-zero, unit-variance entries. Uniform entries
/// lie in [-sqrt 3, sqrt 3]; mixed picks Gaussian or uniform per entry by a
/// fair coin.
Eigen::MatrixXd gen_innovations(int p, int n, InnovationKind kind, std::mt19937_64& rng);
Eigen::MatrixXd gen_innovations(int p, int n, const InnovationSpec& spec);

/// Orthogonal P = (V^T V)^{-1/2} V^T from a Gaussian V. Throws SingularError
/// if V^T V is numerically singular.
Eigen::MatrixXd haar_orthogonal(int p, std::mt19937_64& rng);

/// Symmetric orthogonal I - 2 U U^T with U a random p x k orthonormal frame.
Eigen::MatrixXd householder_orthogonal(int p, int k, std::mt19937_64& rng);

struct ScalingPair {
  Eigen::MatrixXd S1half;
  Eigen::MatrixXd S2half;
};

/// Square roots Sigma_1^{1/2}, Sigma_2^{1/2}. Eigenvalue pairs are p i.i.d.
/// draws from H; commuting_diag keeps them diagonal, householder and haar
/// rotate each into its own random orthogonal basis.
ScalingPair build_scaling(const ScalingSpec& spec, int p, std::uint64_t seed,
                          std::uint64_t replicate = 0);

/// n^{-1}(X1 X2^T - X2 X1^T), exactly antisymmetric.
Eigen::MatrixXd commutator(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2);
/// n^{-1}(X1 X2^T + X2 X1^T), exactly symmetric.
Eigen::MatrixXd anticommutator(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2);
/// Complex versions, used for structural identities.
Eigen::MatrixXcd commutator(const Eigen::MatrixXcd& X1, const Eigen::MatrixXcd& X2);
Eigen::MatrixXcd anticommutator(const Eigen::MatrixXcd& X1, const Eigen::MatrixXcd& X2);

/// ||S + S^T||_F / ||S||_F (0 for the zero matrix).
double skew_defect(const Eigen::MatrixXd& S);

/// Real lambda_j with eigenvalues i lambda_j, from the Hermitian matrix -iS.
/// Values within a few ulps of zero (relative to the spectral radius) are set
/// to exactly 0. Throws DomainError if S is not skew-symmetric.
ImagSpectrum eigenvalues_skew(const Eigen::MatrixXd& S);
ImagSpectrum eigenvalues_skew(const Eigen::MatrixXcd& S);

/// Eigenvalues of a real symmetric matrix, ascending.
std::vector<double> eigenvalues_sym(const Eigen::MatrixXd& S);

struct ExperimentConfig {
  int p = 0;
  int n = 0;
  InnovationKind innovation = InnovationKind::gaussian;
  ScalingSpec scaling;
  bool anti = false;
  double rho = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;

  void validate() const;
};

struct SpectrumSample {
  /// Sorted real coordinates: lambda_j of the eigenvalues i lambda_j of S-,
  /// or the (real) eigenvalues of S+.
  ImagSpectrum spectrum;
  int p = 0;
  int n = 0;
  ExperimentConfig config;
  /// ||S + S^T|| / ||S|| of the assembled commutator before symmetrization.
  double raw_skew_defect = 0.0;
};

/// Z1, V from the seeded streams; W = rho Z1 + sqrt(1 - rho^2) V;
/// X1 = Sigma_1^{1/2} Z1, X2 = Sigma_2^{1/2} W; spectrum of S- or S+.
SpectrumSample run_experiment(const ExperimentConfig& cfg);

/// n = round(p / c), at least 1.
int n_from_c(int p, double c);

}  // namespace commspec
