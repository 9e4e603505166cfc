#include "commspec/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>

#include "commspec/closedform.hpp"
#include "commspec/errors.hpp"
#include "commspec/parallel.hpp"

namespace commspec {
namespace {

constexpr double kPi = std::numbers::pi;

// First-order Richardson extrapolation over the two smallest eps.
double extrapolate(const EpsSchedule& sched, const std::vector<double>& vals) {
  const std::size_t n = vals.size();
  if (!sched.extrapolate || n < 2) return vals.back();
  const double e1 = sched.eps_list[n - 2], e2 = sched.eps_list[n - 1];
  return (e1 * vals[n - 1] - e2 * vals[n - 2]) / (e1 - e2);
}

bool stable_sequence(const std::vector<double>& vals, double estimate) {
  if (vals.size() < 2) return true;
  const double spread = std::abs(vals[vals.size() - 1] - vals[vals.size() - 2]);
  return !(spread > 0.05 * std::abs(estimate) && spread > 1e-3);
}

// (1/pi) Re s_ac(-eps + ix) for every eps in the schedule.
std::vector<double> density_sequence(const ModelSpec& model, double x, const EpsSchedule& sched,
                                     const SolverConfig& cfg, double atom) {
  const auto hs = solve_ladder(model, x, sched.eps_list, cfg);
  std::vector<double> vals(hs.size());
  for (std::size_t k = 0; k < hs.size(); ++k) {
    const cplx z(-sched.eps_list[k], x);
    const cplx s = stieltjes_from_h(hs[k], model.c, z) + atom / z;
    vals[k] = s.real() / kPi;
  }
  return vals;
}

}  // namespace

void EpsSchedule::validate() const {
  if (eps_list.empty()) throw DomainError("EpsSchedule: empty eps list");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] > 0.0)) throw DomainError("EpsSchedule: eps must be positive");
    if (k > 0 && !(eps_list[k] < eps_list[k - 1]))
      throw DomainError("EpsSchedule: eps must be strictly decreasing");
  }
}

double point_mass_zero(const ModelSpec& model, const EpsSchedule& sched, const SolverConfig& cfg) {
  sched.validate();
  const auto hs = solve_ladder(model, 0.0, sched.eps_list, cfg);
  std::vector<double> vals(hs.size());
  for (std::size_t k = 0; k < hs.size(); ++k) {
    const double e = sched.eps_list[k];
    vals[k] = e * stieltjes_from_h(hs[k], model.c, cplx(-e, 0.0)).real();
  }
  const double m = std::clamp(extrapolate(sched, vals), 0.0, 1.0);
  return m < kPointMassThreshold ? 0.0 : m;
}

DensityPoint density_at_detail(const ModelSpec& model, double x, const EpsSchedule& sched,
                               const SolverConfig& cfg, std::optional<double> atom) {
  sched.validate();
  if (!std::isfinite(x)) throw DomainError("density_at: x must be finite");
  const double m = atom ? *atom : point_mass_zero(model, sched, cfg);
  const auto vals = density_sequence(model, x, sched, cfg, m);
  DensityPoint out;
  out.unclamped = extrapolate(sched, vals);
  out.value = std::max(0.0, out.unclamped);
  out.stable = stable_sequence(vals, out.unclamped);
  return out;
}

double density_at(const ModelSpec& model, double x, const EpsSchedule& sched,
                  const SolverConfig& cfg) {
  const DensityPoint p = density_at_detail(model, x, sched, cfg);
  if (!p.stable)
    throw ConvergenceError("density_at: eps-sequence did not settle at x = " + std::to_string(x),
                           0.0);
  return p.value;
}

namespace {

using EpsVec = std::vector<double>;

EpsVec simpson(double width, const EpsVec& fl, const EpsVec& fm, const EpsVec& fr) {
  EpsVec out(fl.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = width / 6.0 * (fl[k] + 4.0 * fm[k] + fr[k]);
  return out;
}

// Adaptive Simpson on [l, r], one integral per eps sharing every evaluation.
EpsVec adaptive_panel(const std::function<EpsVec(double)>& f, double l, double r, const EpsVec& fl,
                      const EpsVec& fm, const EpsVec& fr, const EpsVec& whole, double tol, int depth) {
  const double m = 0.5 * (l + r);
  const EpsVec flm = f(0.5 * (l + m)), frm = f(0.5 * (m + r));
  const EpsVec left = simpson(m - l, fl, flm, fm), right = simpson(r - m, fm, frm, fr);
  double err = 0.0;
  EpsVec sum(whole.size());
  for (std::size_t k = 0; k < sum.size(); ++k) {
    sum[k] = left[k] + right[k];
    err = std::max(err, std::abs(sum[k] - whole[k]));
  }
  if (depth <= 0 || err <= 15.0 * tol) {
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += (sum[k] - whole[k]) / 15.0;
    return sum;
  }
  EpsVec a = adaptive_panel(f, l, m, fl, flm, fm, left, 0.5 * tol, depth - 1);
  const EpsVec b = adaptive_panel(f, m, r, fm, frm, fr, right, 0.5 * tol, depth - 1);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
  return a;
}

constexpr double kMassTol = 1e-7;
constexpr int kMaxPanelDepth = 30;

}  // namespace

double interval_mass(const ModelSpec& model, double a, double b, const EpsSchedule& sched,
                     const SolverConfig& cfg, int panels, int threads) {
  sched.validate();
  if (!(a < b)) throw DomainError("interval_mass: need a < b");
  if (panels < 1) throw DomainError("interval_mass: need at least one panel");
  const double m = point_mass_zero(model, sched, cfg);
  const auto f = [&](double x) { return density_sequence(model, x, sched, cfg, m); };
  const double h = (b - a) / panels;
  std::vector<EpsVec> pieces(static_cast<std::size_t>(panels));
  parallel_for(pieces.size(), threads, [&](std::size_t i) {
    const double l = a + h * static_cast<double>(i);
    const double r = i + 1 == pieces.size() ? b : l + h;
    const EpsVec fl = f(l), fm = f(0.5 * (l + r)), fr = f(r);
    pieces[i] = adaptive_panel(f, l, r, fl, fm, fr, simpson(r - l, fl, fm, fr), kMassTol / panels,
                               kMaxPanelDepth);
  });
  std::vector<double> per_eps(sched.eps_list.size(), 0.0);
  for (const auto& piece : pieces)
    for (std::size_t k = 0; k < per_eps.size(); ++k) per_eps[k] += piece[k];
  return extrapolate(sched, per_eps);
}

DensityCurve density_grid(const ModelSpec& model, const std::vector<double>& grid,
                          const EpsSchedule& sched, const SolverConfig& cfg, int threads) {
  sched.validate();
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw DomainError("density_grid: grid must be sorted");
  DensityCurve curve;
  curve.model = model;
  curve.point_mass_zero = point_mass_zero(model, sched, cfg);
  if (model.mode == ModelMode::identity) {
    const SupportParams sp = support_params(model.c);
    curve.support_lo = -sp.U_c;
    curve.support_hi = sp.U_c;
  }
  curve.xs = grid;
  curve.fs.assign(grid.size(), 0.0);
  std::vector<char> failed(grid.size(), 0);
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    try {
      const DensityPoint p = density_at_detail(model, grid[i], sched, cfg, curve.point_mass_zero);
      curve.fs[i] = p.value;
      failed[i] = p.stable ? 0 : 1;
    } catch (const std::exception&) {
      failed[i] = 1;
    }
  });
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (failed[i]) curve.failures.push_back(i);
  return curve;
}

DensityCurve density_grid_identity(double c, const std::vector<double>& grid) {
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw DomainError("density_grid: grid must be sorted");
  DensityCurve curve;
  curve.model = ModelSpec::identity(c);
  curve.point_mass_zero = point_mass_identity(c);
  const SupportParams sp = support_params(c);
  curve.support_lo = -sp.U_c;
  curve.support_hi = sp.U_c;
  curve.xs = grid;
  curve.fs.reserve(grid.size());
  for (double x : grid) curve.fs.push_back(density_identity(c, x).value_or(0.0));
  return curve;
}

double curve_mass(const DensityCurve& curve) {
  double acc = 0.0;
  for (std::size_t i = 1; i < curve.xs.size(); ++i)
    acc += 0.5 * (curve.fs[i] + curve.fs[i - 1]) * (curve.xs[i] - curve.xs[i - 1]);
  return acc;
}

std::function<double(double)> curve_cdf(const DensityCurve& curve) {
  auto xs = std::make_shared<std::vector<double>>(curve.xs);
  auto cum = std::make_shared<std::vector<double>>(curve.xs.size(), 0.0);
  for (std::size_t i = 1; i < xs->size(); ++i)
    (*cum)[i] = (*cum)[i - 1] +
                0.5 * (curve.fs[i] + curve.fs[i - 1]) * ((*xs)[i] - (*xs)[i - 1]);
  const double m = curve.point_mass_zero;
  const double total = cum->empty() ? 0.0 : cum->back();
  const double scale = total > 0.0 ? (1.0 - m) / total : 0.0;
  return [xs, cum, m, scale](double x) {
    double ac = 0.0;
    if (!xs->empty()) {
      if (x >= xs->back()) {
        ac = cum->back();
      } else if (x > xs->front()) {
        const auto it = std::upper_bound(xs->begin(), xs->end(), x);
        const std::size_t k = static_cast<std::size_t>(it - xs->begin()) - 1;
        const double t = (x - (*xs)[k]) / ((*xs)[k + 1] - (*xs)[k]);
        ac = (*cum)[k] + t * ((*cum)[k + 1] - (*cum)[k]);
      }
    }
    return std::clamp(ac * scale + (x >= 0.0 ? m : 0.0), 0.0, 1.0);
  };
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || !(hi >= lo))
    throw DomainError("grid: need finite lo <= hi and step > 0");
  const double span = (hi - lo) / step;
  const auto n = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + step * static_cast<double>(i);
  // Snap values that should be exactly zero.
  for (double& v : g)
    if (std::abs(v) < 1e-12 * step) v = 0.0;
  return g;
}

}  // namespace commspec
