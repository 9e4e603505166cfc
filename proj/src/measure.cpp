#include "commspec/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "commspec/errors.hpp"

namespace commspec {
namespace {

constexpr double kExactTol = 1e-12;
constexpr double kRenormTol = 1e-9;

template <typename Atom>
void validate_and_normalize(std::vector<Atom>& atoms, const char* what) {
  if (atoms.empty()) throw DomainError(std::string(what) + ": measure has no atoms");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.w > 0.0) || !std::isfinite(a.w))
      throw DomainError(std::string(what) + ": atom weights must be positive and finite");
    total += a.w;
  }
  const double gap = std::abs(total - 1.0);
  if (gap > kRenormTol)
    throw DomainError(std::string(what) + ": weights sum to " + std::to_string(total) +
                      ", expected 1");
  if (gap > kExactTol)
    for (auto& a : atoms) a.w /= total;
}

// Largest-remainder rounding of p * w_k to integer counts summing to p.
std::vector<std::size_t> largest_remainder(const std::vector<double>& weights, std::size_t p) {
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> rem(weights.size());
  std::size_t used = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double exact = weights[k] * static_cast<double>(p);
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    used += counts[k];
    rem[k] = {exact - std::floor(exact), k};
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; used < p; ++j, ++used) ++counts[rem[j % rem.size()].second];
  return counts;
}

}  // namespace

BivariateSpectralMeasure::BivariateSpectralMeasure(std::vector<BivariateAtom> atoms)
    : atoms_(std::move(atoms)) {
  for (const auto& a : atoms_)
    if (!(a.l1 >= 0.0) || !(a.l2 >= 0.0) || !std::isfinite(a.l1) || !std::isfinite(a.l2))
      throw DomainError("bivariate measure: atom locations must be finite and nonnegative");
  validate_and_normalize(atoms_, "bivariate measure");
}

BivariateSpectralMeasure BivariateSpectralMeasure::point(double l1, double l2) {
  return BivariateSpectralMeasure({{l1, l2, 1.0}});
}

BivariateSpectralMeasure BivariateSpectralMeasure::diagonal(const UnivariateSpectralMeasure& h) {
  std::vector<BivariateAtom> atoms;
  atoms.reserve(h.size());
  for (const auto& a : h.atoms()) atoms.push_back({a.l, a.l, a.w});
  return BivariateSpectralMeasure(std::move(atoms));
}

double BivariateSpectralMeasure::mean1() const noexcept {
  double m = 0.0;
  for (const auto& a : atoms_) m += a.w * a.l1;
  return m;
}

double BivariateSpectralMeasure::mean2() const noexcept {
  double m = 0.0;
  for (const auto& a : atoms_) m += a.w * a.l2;
  return m;
}

double BivariateSpectralMeasure::second_moment1() const noexcept {
  double m = 0.0;
  for (const auto& a : atoms_) m += a.w * a.l1 * a.l1;
  return m;
}

double BivariateSpectralMeasure::second_moment2() const noexcept {
  double m = 0.0;
  for (const auto& a : atoms_) m += a.w * a.l2 * a.l2;
  return m;
}

double BivariateSpectralMeasure::zero_mass() const noexcept {
  double m = 0.0;
  for (const auto& a : atoms_)
    if (a.l1 == 0.0 && a.l2 == 0.0) m += a.w;
  return m;
}

bool BivariateSpectralMeasure::is_zero() const noexcept {
  return std::all_of(atoms_.begin(), atoms_.end(),
                     [](const auto& a) { return a.l1 == 0.0 && a.l2 == 0.0; });
}

UnivariateSpectralMeasure::UnivariateSpectralMeasure(std::vector<UnivariateAtom> atoms)
    : atoms_(std::move(atoms)) {
  for (const auto& a : atoms_)
    if (!(a.l >= 0.0) || !std::isfinite(a.l))
      throw DomainError("univariate measure: atom locations must be finite and nonnegative");
  validate_and_normalize(atoms_, "univariate measure");
}

UnivariateSpectralMeasure UnivariateSpectralMeasure::point(double l) {
  return UnivariateSpectralMeasure({{l, 1.0}});
}

double UnivariateSpectralMeasure::mean() const noexcept {
  double m = 0.0;
  for (const auto& a : atoms_) m += a.w * a.l;
  return m;
}

double UnivariateSpectralMeasure::second_moment() const noexcept {
  double m = 0.0;
  for (const auto& a : atoms_) m += a.w * a.l * a.l;
  return m;
}

double UnivariateSpectralMeasure::zero_mass() const noexcept {
  double m = 0.0;
  for (const auto& a : atoms_)
    if (a.l == 0.0) m += a.w;
  return m;
}

bool UnivariateSpectralMeasure::is_zero() const noexcept {
  return std::all_of(atoms_.begin(), atoms_.end(), [](const auto& a) { return a.l == 0.0; });
}

std::vector<double> UnivariateSpectralMeasure::allocate(std::size_t p) const {
  std::vector<double> w;
  w.reserve(atoms_.size());
  for (const auto& a : atoms_) w.push_back(a.w);
  const auto counts = largest_remainder(w, p);
  std::vector<double> out;
  out.reserve(p);
  for (std::size_t k = 0; k < atoms_.size(); ++k) out.insert(out.end(), counts[k], atoms_[k].l);
  return out;
}

std::vector<BivariateAtom> allocate_pairs(const BivariateSpectralMeasure& h, std::size_t p) {
  std::vector<double> w;
  for (const auto& a : h.atoms()) w.push_back(a.w);
  const auto counts = largest_remainder(w, p);
  std::vector<BivariateAtom> out;
  out.reserve(p);
  const double unit = 1.0 / static_cast<double>(p);
  for (std::size_t k = 0; k < h.size(); ++k)
    for (std::size_t j = 0; j < counts[k]; ++j) out.push_back({h.atoms()[k].l1, h.atoms()[k].l2, unit});
  return out;
}

UnivariateSpectralMeasure discretize_quantiles(const std::function<double(double)>& quantile,
                                               std::size_t atoms) {
  if (atoms == 0) throw DomainError("discretize_quantiles: need at least one atom");
  std::vector<UnivariateAtom> out;
  out.reserve(atoms);
  const double w = 1.0 / static_cast<double>(atoms);
  for (std::size_t k = 0; k < atoms; ++k)
    out.push_back({quantile((static_cast<double>(k) + 0.5) * w), w});
  return UnivariateSpectralMeasure(std::move(out));
}

}  // namespace commspec
