#pragma once

#include <array>
#include <complex>
#include <optional>
#include <vector>

namespace commspec {

using cplx = std::complex<double>;

/// Coefficients of the identity-covariance cubic and the support of its
/// density. S_c = {x : L_c < |x| < U_c}.
struct SupportParams {
  double c = 0.0;
  double q0 = 0.0, q2 = 0.0;
  double r1 = 0.0, r3 = 0.0;
  double d0 = 0.0, d2 = 0.0, d4 = 0.0;
  double R_plus = 0.0, R_minus = 0.0;
  double L_c = 0.0, U_c = 0.0;
};

SupportParams support_params(double c);

struct RQD {
  double r_abs;
  double q;
  double d;
};

/// |r(x)|, q(x), d(x) on the imaginary axis z = ix. Throws DomainError at x = 0.
RQD rqd_eval(const SupportParams& sp, double x);

/// True when x lies in the open support S_c (x = 0 included for c < 2).
bool in_support(const SupportParams& sp, double x);

/// The three roots of c^2 z m^3 + (c^2 - 2c) m^2 + z m + 1 = 0.
std::array<cplx, 3> cardano_roots(double c, cplx z);

/// Value of the cubic at m.
cplx identity_cubic(double c, cplx z, cplx m);

struct RootSelection {
  cplx value;
  /// Number of roots with Re > 1e-12. Exactly one away from the support edges.
  int positive_count;
};

/// Stieltjes transform of the identity-covariance LSD at z in C_L: the root
/// of the cubic with positive real part (max real part when ambiguous).
RootSelection stieltjes_identity_select(double c, cplx z);
cplx stieltjes_identity(double c, cplx z);

/// Density of the identity LSD. Returns nullopt at x = 0 when c >= 2, where
/// no density exists. Zero outside S_c.
std::optional<double> density_identity(double c, double x);

/// max(0, 1 - 2/c).
double point_mass_identity(double c);

/// Tabulated distribution function of the identity LSD, including the atom
/// at zero. Cells are integrated with tanh-sinh quadrature, which copes with
/// the square-root edges of the density.
class IdentityCdf {
 public:
  explicit IdentityCdf(double c, int cells = 256);

  double operator()(double x) const;
  const SupportParams& params() const noexcept { return sp_; }
  double point_mass() const noexcept { return mass0_; }
  /// Integral of the density over the positive half-line.
  double half_mass() const noexcept { return cum_.back(); }

 private:
  double positive_part(double x) const;

  SupportParams sp_;
  double mass0_;
  std::vector<double> nodes_;
  std::vector<double> cum_;
};

/// Integral of the density over S_c, computed by tanh-sinh quadrature.
double identity_ac_mass(double c);
/// Integral of x^2 f_c(x) over S_c.
double identity_second_moment(double c);

}  // namespace commspec
