#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace commspec {

struct BivariateAtom {
  double l1 = 0.0;
  double l2 = 0.0;
  double w = 0.0;
};

struct UnivariateAtom {
  double l = 0.0;
  double w = 0.0;
};

class UnivariateSpectralMeasure;

/// Discrete probability measure on R_+^2: the limiting joint spectral
/// distribution of a commuting pair (Sigma_1, Sigma_2).
///
/// Weights must sum to one. A sum within 1e-9 of one is renormalized on
/// construction; anything further away throws DomainError.
class BivariateSpectralMeasure {
 public:
  explicit BivariateSpectralMeasure(std::vector<BivariateAtom> atoms);

  static BivariateSpectralMeasure point(double l1, double l2);
  /// Embeds H on the diagonal: atom l becomes (l, l).
  static BivariateSpectralMeasure diagonal(const UnivariateSpectralMeasure& h);

  const std::vector<BivariateAtom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  double mean1() const noexcept;
  double mean2() const noexcept;
  double second_moment1() const noexcept;
  double second_moment2() const noexcept;
  /// Mass sitting at (0, 0).
  double zero_mass() const noexcept;
  /// True when every atom is (0, 0).
  bool is_zero() const noexcept;

 private:
  std::vector<BivariateAtom> atoms_;
};

/// Discrete probability measure on R_+ (population spectrum of a single Sigma).
class UnivariateSpectralMeasure {
 public:
  explicit UnivariateSpectralMeasure(std::vector<UnivariateAtom> atoms);

  static UnivariateSpectralMeasure point(double l);

  const std::vector<UnivariateAtom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  double mean() const noexcept;
  double second_moment() const noexcept;
  double zero_mass() const noexcept;
  bool is_zero() const noexcept;

  /// p eigenvalues whose empirical distribution is as close to this measure
  /// as integer counts allow (largest-remainder rounding of p * w).
  std::vector<double> allocate(std::size_t p) const;

 private:
  std::vector<UnivariateAtom> atoms_;
};

/// Equal-weight atoms at the mid-quantiles (k + 1/2)/n of a continuous law.
UnivariateSpectralMeasure discretize_quantiles(const std::function<double(double)>& quantile,
                                               std::size_t atoms = 64);

/// Same as UnivariateSpectralMeasure::allocate for pairs.
std::vector<BivariateAtom> allocate_pairs(const BivariateSpectralMeasure& h, std::size_t p);

}  // namespace commspec
