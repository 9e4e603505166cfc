#include "commspec/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "commspec/errors.hpp"

namespace commspec {

ImagSpectrum::ImagSpectrum(std::vector<double> vals) : vals_(std::move(vals)) {
  for (double v : vals_)
    if (!std::isfinite(v)) throw DomainError("ImagSpectrum: non-finite eigenvalue");
  std::sort(vals_.begin(), vals_.end());
}

double ImagSpectrum::second_moment() const noexcept {
  if (vals_.empty()) return 0.0;
  double s = 0.0;
  for (double v : vals_) s += v * v;
  return s / static_cast<double>(vals_.size());
}

cplx empirical_stieltjes(const ImagSpectrum& spec, cplx z) {
  if (!(z.real() < 0.0)) throw DomainError("empirical_stieltjes: need Re z < 0");
  if (spec.empty()) throw DomainError("empirical_stieltjes: empty spectrum");
  cplx acc = 0.0;
  for (double l : spec.vals()) acc += 1.0 / (cplx(0.0, l) - z);
  return acc / static_cast<double>(spec.p());
}

double esd_cdf_eval(const ImagSpectrum& spec, double x) {
  if (spec.empty()) return 0.0;
  const auto& v = spec.vals();
  const auto it = std::upper_bound(v.begin(), v.end(), x);
  return static_cast<double>(it - v.begin()) / static_cast<double>(v.size());
}

double ks_distance(const ImagSpectrum& spec, const std::function<double(double)>& F) {
  const auto& v = spec.vals();
  const double p = static_cast<double>(v.size());
  double best = 0.0;
  std::size_t j = 0;
  while (j < v.size()) {
    std::size_t k = j;
    while (k < v.size() && v[k] == v[j]) ++k;
    const double x = v[j];
    const double below = static_cast<double>(j) / p;
    const double above = static_cast<double>(k) / p;
    const double f_left = F(std::nextafter(x, -std::numeric_limits<double>::infinity()));
    const double f_at = F(x);
    best = std::max({best, std::abs(below - f_left), std::abs(above - f_at)});
    j = k;
  }
  return best;
}

double ks_distance(const ImagSpectrum& a, const ImagSpectrum& b) {
  return ks_distance(a, [&b](double x) { return esd_cdf_eval(b, x); });
}

RankTwoCoeffs rank2_inverse_apply(const Eigen::MatrixXcd& B, const Eigen::VectorXcd& u,
                                  const Eigen::VectorXcd& v) {
  if (B.rows() != B.cols() || u.size() != B.rows() || v.size() != B.rows())
    throw DomainError("rank2_inverse_apply: dimension mismatch");
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(B);
  const Eigen::VectorXcd Bu = lu.solve(u);
  const Eigen::VectorXcd Bv = lu.solve(v);
  const cplx uv = u.dot(Bv);  // u* B^{-1} v
  const cplx vu = v.dot(Bu);
  const cplx uu = u.dot(Bu);
  const cplx vv = v.dot(Bv);
  const cplx denom = (1.0 - uv) * (1.0 + vu) + uu * vv;
  if (std::abs(denom) < 1e-14) throw SingularError("rank2_inverse_apply: singular update");
  RankTwoCoeffs r;
  r.D = 1.0 / denom;
  r.alpha1 = (1.0 - uv) * r.D;
  r.beta1 = uu * r.D;
  r.alpha2 = (1.0 + vu) * r.D;
  r.beta2 = -vv * r.D;
  return r;
}

}  // namespace commspec
