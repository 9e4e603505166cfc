#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace commspec {

using cplx = std::complex<double>;

/// Spectrum of a p x p skew-Hermitian matrix. The eigenvalues are i*vals[j];
/// only the real coordinates are stored, sorted ascending.
class ImagSpectrum {
 public:
  ImagSpectrum() = default;
  explicit ImagSpectrum(std::vector<double> vals);

  const std::vector<double>& vals() const noexcept { return vals_; }
  std::size_t p() const noexcept { return vals_.size(); }
  bool empty() const noexcept { return vals_.empty(); }

  double second_moment() const noexcept;

 private:
  std::vector<double> vals_;
};

/// (1/p) sum_j 1/(i*lambda_j - z). Requires Re z < 0.
cplx empirical_stieltjes(const ImagSpectrum& spec, cplx z);

/// Fraction of lambda_j <= x.
double esd_cdf_eval(const ImagSpectrum& spec, double x);

/// sup_x |ESD(x) - F(x)|, evaluated on both sides of every jump of the ESD.
/// F must be a distribution function (monotone, values in [0,1]).
double ks_distance(const ImagSpectrum& spec, const std::function<double(double)>& F);

/// KS distance between two ESDs.
double ks_distance(const ImagSpectrum& a, const ImagSpectrum& b);

struct RankTwoCoeffs {
  cplx alpha1, beta1, alpha2, beta2, D;
};

/// Coefficients of the rank-2 update identity
///   (B + u v* - v u*)^{-1} u = B^{-1}(alpha1 u + beta1 v),
///   (B + u v* - v u*)^{-1} v = B^{-1}(alpha2 v + beta2 u),
/// with <x, y> = x* B^{-1} y. Throws SingularError when the denominator of D
/// is below 1e-14 in modulus.
RankTwoCoeffs rank2_inverse_apply(const Eigen::MatrixXcd& B, const Eigen::VectorXcd& u,
                                  const Eigen::VectorXcd& v);

}  // namespace commspec
