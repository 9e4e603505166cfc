#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "commspec/fpsolve.hpp"

namespace commspec {

/// Distances -Re z at which s is evaluated before taking the limit.
struct EpsSchedule {
  std::vector<double> eps_list{1e-2, 1e-3, 1e-4};
  bool extrapolate = true;

  void validate() const;
};

struct DensityPoint {
  double value = 0.0;      ///< clamped at 0
  double unclamped = 0.0;  ///< extrapolated estimate before clamping
  /// False when the two smallest eps disagree by more than 5% (and 1e-3).
  bool stable = true;
};

/// Values below this are reported as no point mass.
inline constexpr double kPointMassThreshold = 1e-3;

/// lim eps s(-eps), extrapolated over the schedule. Values below 1e-3 are
/// reported as 0.
double point_mass_zero(const ModelSpec& model, const EpsSchedule& sched = {},
                       const SolverConfig& cfg = {});

/// (1/pi) lim Re s_ac(-eps + ix), where s_ac = s + m/z removes the atom of
/// mass m at the origin. Pass the atom when already known; otherwise it is
/// computed with point_mass_zero.
DensityPoint density_at_detail(const ModelSpec& model, double x, const EpsSchedule& sched = {},
                               const SolverConfig& cfg = {},
                               std::optional<double> atom = std::nullopt);

double density_at(const ModelSpec& model, double x, const EpsSchedule& sched = {},
                  const SolverConfig& cfg = {});

/// Mass of the absolutely continuous part on (a, b): Simpson on `panels`
/// equal panels of (1/pi) Re s_ac(-eps + ix), each refined adaptively, for
/// every eps; then the same extrapolation as density_at. The atom at zero is
/// not counted.
double interval_mass(const ModelSpec& model, double a, double b, const EpsSchedule& sched = {},
                     const SolverConfig& cfg = {}, int panels = 1000, int threads = 0);

struct DensityCurve {
  std::vector<double> xs;
  std::vector<double> fs;
  double point_mass_zero = 0.0;
  double support_lo = -std::numeric_limits<double>::infinity();
  double support_hi = std::numeric_limits<double>::infinity();
  /// Grid indices whose solve failed or whose eps-sequence was unstable.
  std::vector<std::size_t> failures;
  ModelSpec model;
};

/// Density on a sorted grid. Points whose eps sequence did not settle keep
/// their extrapolated value and are listed in `failures`.
DensityCurve density_grid(const ModelSpec& model, const std::vector<double>& grid,
                          const EpsSchedule& sched = {}, const SolverConfig& cfg = {},
                          int threads = 0);

/// Closed-form curve for the identity model on a grid. The value at x = 0
/// for c >= 2 (no density there) is written as 0.
DensityCurve density_grid_identity(double c, const std::vector<double>& grid);

/// Trapezoid integral of fs over xs.
double curve_mass(const DensityCurve& curve);

/// Distribution function built from a curve: trapezoid cumulative integral
/// of f, rescaled to total 1 - point_mass_zero, plus the atom at 0.
std::function<double(double)> curve_cdf(const DensityCurve& curve);

/// lo:hi:step grid, endpoints included when hit within rounding.
std::vector<double> make_grid(double lo, double hi, double step);

}  // namespace commspec
