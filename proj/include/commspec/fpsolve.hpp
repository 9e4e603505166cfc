#pragma once

#include <complex>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "commspec/measure.hpp"

namespace commspec {

using cplx = std::complex<double>;

struct HPair {
  cplx h1 = 0.0;
  cplx h2 = 0.0;
  /// max_k |h_k - RHS_k(h)| / max(1, |h_k|) at the accepted iterate.
  double residual = 0.0;
  int iterations = 0;
  cplx z = 0.0;
};

struct SolverConfig {
  double tol = 1e-12;
  int max_iter = 20000;
  double damping = 0.5;
  double path_start_u = 50.0;
  int path_steps = 40;

  void validate() const;
};

enum class ModelMode { general, equal, identity };

/// Aspect ratio c = lim p/n together with the population spectrum H.
struct ModelSpec {
  double c = 1.0;
  std::variant<BivariateSpectralMeasure, UnivariateSpectralMeasure> H =
      UnivariateSpectralMeasure::point(1.0);
  ModelMode mode = ModelMode::identity;

  static ModelSpec identity(double c);
  static ModelSpec equal(double c, UnivariateSpectralMeasure H);
  static ModelSpec general(double c, BivariateSpectralMeasure H);

  void validate() const;
  /// H as a bivariate measure (univariate atoms l become (l, l)).
  BivariateSpectralMeasure bivariate() const;
  /// Mass of H at the origin.
  double zero_mass() const;
};

/// rho(z1, z2) = (z2, z1) / (1 + z1 z2). Throws PoleError when |1 + z1 z2| < 1e-14.
std::pair<cplx, cplx> rho(cplx z1, cplx z2);

/// sigma(z) = 2z / (1 + z^2). Throws PoleError when |1 + z^2| < 1e-14.
cplx sigma_fn(cplx z);

/// Right-hand sides of the fixed-point system at h (no residual bookkeeping).
std::pair<cplx, cplx> h_rhs(const ModelSpec& model, cplx z, cplx h1, cplx h2);

/// Solves h_k = int lambda_k dH / (-z + lambda^T rho(c h)) at z in C_L.
/// Accepts any mode; univariate H is embedded on the diagonal.
HPair solve_h_general(const ModelSpec& model, cplx z, const SolverConfig& cfg = {});

/// Same solver started from a given iterate (used for continuation).
HPair solve_h_from(const ModelSpec& model, cplx z, cplx h1, cplx h2,
                   const SolverConfig& cfg = {});

/// Equal-covariance case: h = int lambda dH / (-z + lambda sigma(c h)).
/// Returned as an HPair with h1 == h2.
HPair solve_h_equal(const ModelSpec& model, cplx z, const SolverConfig& cfg = {});

/// s_F(z) = (1/z)(2/c - 1) - (2/(c z)) / (1 + c^2 h1 h2).
cplx stieltjes_from_h(const HPair& h, double c, cplx z);

/// s_F(z) = int dH / (-z + lambda^T rho(c h)), the integral form.
cplx stieltjes_integral(const ModelSpec& model, const HPair& h, cplx z);

/// One HPair per target, each reached by continuation from
/// -path_start_u + i Im(target) with geometrically shrinking |Re z|.
std::vector<HPair> solve_path(const ModelSpec& model, const std::vector<cplx>& targets,
                              const SolverConfig& cfg = {});

/// Continuation along the vertical line Im z = x through every Re z = -eps in
/// `eps` (which must be decreasing). One HPair per eps.
std::vector<HPair> solve_ladder(const ModelSpec& model, double x, const std::vector<double>& eps,
                                const SolverConfig& cfg = {});

/// Stieltjes transform of s_F at z in C_L via continuation.
cplx stieltjes_at(const ModelSpec& model, cplx z, const SolverConfig& cfg = {});

/// Standard Stieltjes transform of the anti-commutator LSD at z in C+,
/// i.e. i s_F(iz).
cplx anti_stieltjes(const ModelSpec& model, cplx z, const SolverConfig& cfg = {});

}  // namespace commspec
