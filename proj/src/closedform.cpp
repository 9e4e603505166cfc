#include "commspec/closedform.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "commspec/errors.hpp"

namespace commspec {
namespace {

constexpr double kPi = std::numbers::pi;

// Density on x >= 0 in a cancellation-free form. With a = -r1 x^2 + r3,
// g = d0 x^4 - d2 x^2 + d4 and A+- = a +- |x| sqrt(-g), one has
// A+ A- = (q0 x^2 - q2)^3, so the difference of cube roots becomes a ratio.
double density_positive(const SupportParams& sp, double x) {
  const double x2 = x * x;
  const double g = (sp.d0 * x2 - sp.d2) * x2 + sp.d4;
  if (!(g < 0.0)) return 0.0;
  const double root = std::sqrt(-g);
  const double a = -sp.r1 * x2 + sp.r3;
  const double ap = a + x * root;
  const double qq = sp.q0 * x2 - sp.q2;
  if (!(ap > 0.0) || !(qq > 0.0)) return 0.0;
  const double cp = std::cbrt(ap);
  const double cm = qq / cp;
  return std::sqrt(3.0) / kPi * root / (cp * cp + qq + cm * cm);
}

}  // namespace

SupportParams support_params(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("support_params: need c > 0");
  SupportParams sp;
  sp.c = c;
  const double c2 = c * c, c3 = c2 * c, c5 = c3 * c2, c6 = c3 * c3;
  const double cm2 = c - 2.0;
  sp.q0 = 1.0 / (3.0 * c2);
  sp.q2 = -cm2 * cm2 / (9.0 * c2);
  sp.r1 = -(c + 1.0) / (3.0 * c3);
  sp.r3 = -cm2 * cm2 * cm2 / (27.0 * c3);
  sp.d0 = 1.0 / (27.0 * c6);
  sp.d2 = (2.0 * c2 + 10.0 * c - 1.0) / (27.0 * c6);
  sp.d4 = cm2 * cm2 * cm2 / (27.0 * c5);
  sp.R_plus = 0.5 * ((2.0 * c2 + 10.0 * c - 1.0) + std::pow(4.0 * c + 1.0, 1.5));
  // Product of the roots is d4/d0 = c (c-2)^3; dividing avoids cancellation.
  sp.R_minus = c * cm2 * cm2 * cm2 / sp.R_plus;
  sp.U_c = std::sqrt(sp.R_plus);
  sp.L_c = sp.R_minus > 0.0 ? std::sqrt(sp.R_minus) : 0.0;
  return sp;
}

RQD rqd_eval(const SupportParams& sp, double x) {
  if (x == 0.0 || !std::isfinite(x)) throw DomainError("rqd_eval: need finite nonzero x");
  const double ax = std::abs(x);
  const double x2 = x * x;
  RQD out;
  out.r_abs = -sp.r1 / ax + sp.r3 / (ax * x2);
  out.q = sp.q0 - sp.q2 / x2;
  out.d = sp.d0 - sp.d2 / x2 + sp.d4 / (x2 * x2);
  return out;
}

bool in_support(const SupportParams& sp, double x) {
  const double x2 = x * x;
  return (sp.d0 * x2 - sp.d2) * x2 + sp.d4 < 0.0;
}

cplx identity_cubic(double c, cplx z, cplx m) {
  return ((c * c * z * m + (c * c - 2.0 * c)) * m + z) * m + 1.0;
}

std::array<cplx, 3> cardano_roots(double c, cplx z) {
  if (!(c > 0.0)) throw DomainError("cardano_roots: need c > 0");
  if (z == 0.0) throw DomainError("cardano_roots: need z != 0");
  const SupportParams sp = support_params(c);
  const cplx iz = 1.0 / z;
  const cplx iz2 = iz * iz;
  const cplx Q = sp.q0 + sp.q2 * iz2;
  const cplx R = sp.r1 * iz + sp.r3 * iz2 * iz;
  const cplx sq = std::sqrt(R * R + Q * Q * Q);
  const cplx w = std::abs(R + sq) >= std::abs(R - sq) ? R + sq : R - sq;
  cplx S0 = 0.0, T0 = 0.0;
  if (std::abs(w) > 0.0) {
    S0 = std::pow(w, 1.0 / 3.0);
    T0 = -Q / S0;
  }
  const cplx shift = -(1.0 - 2.0 / c) * iz / 3.0;
  const cplx om(-0.5, std::sqrt(3.0) / 2.0);
  const cplx om2 = std::conj(om);
  std::array<cplx, 3> roots = {shift + S0 + T0, shift + om * S0 + om2 * T0,
                               shift + om2 * S0 + om * T0};
  // A few Newton steps on the cubic remove the rounding from the cube roots.
  for (auto& m : roots) {
    for (int it = 0; it < 3; ++it) {
      const cplx f = identity_cubic(c, z, m);
      const cplx df = (3.0 * c * c * z * m + 2.0 * (c * c - 2.0 * c)) * m + z;
      if (std::abs(df) == 0.0) break;
      const cplx next = m - f / df;
      if (!(std::abs(identity_cubic(c, z, next)) < std::abs(f))) break;
      m = next;
    }
  }
  return roots;
}

RootSelection stieltjes_identity_select(double c, cplx z) {
  if (!(z.real() < 0.0)) throw DomainError("stieltjes_identity: need Re z < 0");
  const auto roots = cardano_roots(c, z);
  RootSelection sel{roots[0], 0};
  for (const auto& m : roots) {
    if (m.real() > 1e-12) ++sel.positive_count;
    if (m.real() > sel.value.real()) sel.value = m;
  }
  return sel;
}

cplx stieltjes_identity(double c, cplx z) {
  const auto sel = stieltjes_identity_select(c, z);
  if (sel.positive_count != 1)
    std::cerr << "stieltjes_identity: " << sel.positive_count
              << " roots with positive real part at z = " << z << ", using max-Re root\n";
  return sel.value;
}

std::optional<double> density_identity(double c, double x) {
  const SupportParams sp = support_params(c);
  if (x == 0.0) {
    if (c >= 2.0) return std::nullopt;
    return 1.0 / (kPi * std::sqrt(2.0 * c - c * c));
  }
  return density_positive(sp, std::abs(x));
}

double point_mass_identity(double c) {
  if (!(c > 0.0)) throw DomainError("point_mass_identity: need c > 0");
  return std::max(0.0, 1.0 - 2.0 / c);
}

namespace {

double integrate_density(const SupportParams& sp, double a, double b, bool second_moment) {
  if (!(b > a)) return 0.0;
  boost::math::quadrature::tanh_sinh<double> ts(10);
  auto f = [&sp, second_moment](double x) {
    const double v = density_positive(sp, x);
    return second_moment ? x * x * v : v;
  };
  return ts.integrate(f, a, b, 1e-13);
}

}  // namespace

IdentityCdf::IdentityCdf(double c, int cells)
    : sp_(support_params(c)), mass0_(point_mass_identity(c)) {
  if (cells < 1) throw DomainError("IdentityCdf: need at least one cell");
  nodes_.resize(static_cast<std::size_t>(cells) + 1);
  cum_.assign(nodes_.size(), 0.0);
  for (int k = 0; k <= cells; ++k)
    nodes_[k] = sp_.L_c + (sp_.U_c - sp_.L_c) * static_cast<double>(k) / cells;
  nodes_.back() = sp_.U_c;
  for (std::size_t k = 1; k < nodes_.size(); ++k)
    cum_[k] = cum_[k - 1] + integrate_density(sp_, nodes_[k - 1], nodes_[k], false);
}

double IdentityCdf::positive_part(double x) const {
  if (x <= nodes_.front()) return 0.0;
  if (x >= nodes_.back()) return cum_.back();
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  return cum_[k] + integrate_density(sp_, nodes_[k], x, false);
}

double IdentityCdf::operator()(double x) const {
  // Quadrature mass is rescaled so the tails are exactly 0 and 1.
  if (x <= -sp_.U_c) return 0.0;
  if (x >= sp_.U_c) return 1.0;
  const double half = 0.5 * (1.0 - mass0_);
  const double scale = cum_.back() > 0.0 ? half / cum_.back() : 0.0;
  if (x >= 0.0) return std::clamp(1.0 - half + scale * positive_part(x), 0.0, 1.0);
  return std::clamp(half - scale * positive_part(-x), 0.0, 1.0);
}

double identity_ac_mass(double c) {
  const SupportParams sp = support_params(c);
  return 2.0 * integrate_density(sp, sp.L_c, sp.U_c, false);
}

double identity_second_moment(double c) {
  const SupportParams sp = support_params(c);
  return 2.0 * integrate_density(sp, sp.L_c, sp.U_c, true);
}

}  // namespace commspec
