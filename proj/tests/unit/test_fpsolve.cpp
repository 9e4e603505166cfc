#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "commspec/closedform.hpp"
#include "commspec/errors.hpp"
#include "commspec/fpsolve.hpp"

using namespace commspec;

namespace {

const BivariateSpectralMeasure kFour(
    {{1.0, 1.0, 0.25}, {1.0, 2.0, 0.25}, {2.0, 1.0, 0.25}, {2.0, 2.0, 0.25}});

// Independent evaluation of the fixed-point map from its definition.
std::pair<cplx, cplx> rhs_oracle(const BivariateSpectralMeasure& H, double c, cplx z, cplx h1,
                                 cplx h2) {
  const cplx den = 1.0 + c * c * h1 * h2;
  const cplx r1 = c * h2 / den, r2 = c * h1 / den;
  cplx a = 0.0, b = 0.0;
  for (const auto& at : H.atoms()) {
    const cplx D = -z + at.l1 * r1 + at.l2 * r2;
    a += at.w * at.l1 / D;
    b += at.w * at.l2 / D;
  }
  return {a, b};
}

double back_substitution(const BivariateSpectralMeasure& H, double c, const HPair& h) {
  const auto [a, b] = rhs_oracle(H, c, h.z, h.h1, h.h2);
  return std::max(std::abs(a - h.h1) / std::max(1.0, std::abs(h.h1)),
                  std::abs(b - h.h2) / std::max(1.0, std::abs(h.h2)));
}

}  // namespace

TEST(Rho, Values) {
  const auto [a, b] = rho(0.0, 0.0);
  EXPECT_EQ(a, 0.0);
  EXPECT_EQ(b, 0.0);
  const auto [c, d] = rho(1.0, 1.0);
  EXPECT_DOUBLE_EQ(c.real(), 0.5);
  EXPECT_DOUBLE_EQ(d.real(), 0.5);
  EXPECT_THROW(rho(cplx(0, 1), cplx(0, 1)), PoleError);
}

TEST(Rho, MapsRightHalfPlaneToItself) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> re(1e-3, 4.0), im(-4.0, 4.0);
  for (int t = 0; t < 1000; ++t) {
    const auto [a, b] = rho(cplx(re(rng), im(rng)), cplx(re(rng), im(rng)));
    EXPECT_GT(a.real(), 0.0);
    EXPECT_GT(b.real(), 0.0);
  }
}

TEST(Sigma, ValuesAndRealPart) {
  EXPECT_EQ(sigma_fn(0.0), 0.0);
  EXPECT_DOUBLE_EQ(sigma_fn(1.0).real(), 1.0);
  EXPECT_THROW(sigma_fn(cplx(0, 1)), PoleError);
  // Re sigma(z) = sigma_2(z) Re z with sigma_2 = 2(1 + |z|^2)/|1 + z^2|^2.
  const cplx z(0.4, -1.3);
  const double s2 = 2.0 * (1.0 + std::norm(z)) / std::norm(1.0 + z * z);
  EXPECT_NEAR(sigma_fn(z).real(), s2 * z.real(), 1e-14);
}

TEST(SolveGeneral, DegenerateZeroMeasure) {
  const ModelSpec m = ModelSpec::general(1.0, BivariateSpectralMeasure::point(0.0, 0.0));
  const HPair h = solve_h_general(m, cplx(-0.3, 1.0));
  EXPECT_EQ(h.h1, 0.0);
  EXPECT_EQ(h.h2, 0.0);
}

TEST(SolveGeneral, IdentityAtomMatchesCubicRoot) {
  // Positive root of -10 m^3 - m^2 - 10 m + 1 (mpmath).
  const ModelSpec m = ModelSpec::general(1.0, BivariateSpectralMeasure::point(1.0, 1.0));
  const HPair h = solve_h_general(m, -10.0);
  EXPECT_NEAR(h.h1.real(), 0.0980938605511103492359, 1e-12);
  EXPECT_NEAR(h.h2.real(), 0.0980938605511103492359, 1e-12);
  EXPECT_NEAR(h.h1.imag(), 0.0, 1e-14);
}

TEST(SolveGeneral, NearAxisResidual) {
  const ModelSpec m = ModelSpec::general(1.0, BivariateSpectralMeasure::point(1.0, 1.0));
  const HPair h = solve_h_general(m, cplx(-0.01, 1.0));
  EXPECT_GT(h.h1.real(), 0.0);
  EXPECT_GT(h.h2.real(), 0.0);
  EXPECT_LE(h.residual, 1e-12);
  EXPECT_LE(back_substitution(m.bivariate(), 1.0, h), 1e-12);
}

TEST(SolveGeneral, LocationBoundAndPositivity) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> re(0.01, 3.0), im(-5.0, 5.0);
  for (double c : {0.5, 1.0, 3.0}) {
    const ModelSpec m = ModelSpec::general(c, kFour);
    for (int t = 0; t < 40; ++t) {
      const cplx z(-re(rng), im(rng));
      const HPair h = solve_h_general(m, z);
      EXPECT_GT(h.h1.real(), 0.0);
      EXPECT_GT(h.h2.real(), 0.0);
      EXPECT_LE(std::abs(h.h1), 1.5 / std::abs(z.real()) * (1 + 1e-9));
      EXPECT_LE(back_substitution(kFour, c, h), 1e-11);
      EXPECT_GT(stieltjes_from_h(h, c, z).real(), 0.0);
    }
  }
}

TEST(SolveEqual, LargeRealAsymptotics) {
  const ModelSpec m = ModelSpec::identity(1.0);
  const double y = 1e4;
  EXPECT_NEAR(y * solve_h_equal(m, -y).h1.real(), 1.0, 1e-3);
  for (double yy : {1e2, 1e3, 1e4}) {
    const cplx s = stieltjes_at(ModelSpec::equal(1.0, UnivariateSpectralMeasure({{1.0, 0.5}, {2.0, 0.5}})), -yy);
    EXPECT_LE(std::abs(yy * s - 1.0), 10.0 / yy);
  }
}

TEST(SolveEqual, AgreesWithClosedFormAtRandomPoints) {
  std::mt19937_64 rng(100);
  std::uniform_real_distribution<double> re(0.01, 4.0), im(-6.0, 6.0);
  for (double c : {0.5, 1.0, 2.0, 3.0, 4.0, 5.0}) {
    const ModelSpec m = ModelSpec::identity(c);
    for (int t = 0; t < 100; ++t) {
      const cplx z(-re(rng), im(rng));
      const HPair h = solve_h_equal(m, z);
      EXPECT_LT(std::abs(h.h1 - stieltjes_identity(c, z)), 1e-9) << c << " " << z;
    }
  }
}

TEST(SolveEqual, TwoAtomNearAxis) {
  const ModelSpec m = ModelSpec::equal(1.0, UnivariateSpectralMeasure({{1.0, 0.5}, {2.0, 0.5}}));
  const HPair h = solve_h_equal(m, cplx(-0.001, 1.5));
  EXPECT_LE(h.residual, 1e-12);
  EXPECT_GT(h.h1.real(), 0.0);
  EXPECT_THROW(solve_h_equal(ModelSpec::general(1.0, kFour), -1.0), DomainError);
}

TEST(StieltjesFromH, IdentityReturnsH) {
  const ModelSpec m = ModelSpec::identity(1.5);
  const cplx z(-0.2, 0.7);
  const HPair h = solve_h_equal(m, z);
  EXPECT_LT(std::abs(stieltjes_from_h(h, 1.5, z) - h.h1), 1e-12);
}

TEST(StieltjesFromH, VanishingProduct) {
  HPair h;
  h.h1 = 0.0;
  h.h2 = 0.3;
  const cplx z(-0.4, 1.1);
  EXPECT_LT(std::abs(stieltjes_from_h(h, 2.0, z) - (-1.0 / z)), 1e-15);
}

TEST(StieltjesFromH, IntegralAndAlgebraicFormsAgree) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> re(0.01, 4.0), im(-6.0, 6.0), cc(0.3, 5.0);
  for (int t = 0; t < 100; ++t) {
    const double c = cc(rng);
    const ModelSpec m = ModelSpec::general(c, kFour);
    const cplx z(-re(rng), im(rng));
    const HPair h = solve_h_general(m, z);
    EXPECT_LT(std::abs(stieltjes_integral(m, h, z) - stieltjes_from_h(h, c, z)), 1e-10);
  }
  const ModelSpec one = ModelSpec::general(1.0, BivariateSpectralMeasure::point(1.0, 1.0));
  const HPair h = solve_h_general(one, -10.0);
  EXPECT_LT(std::abs(stieltjes_integral(one, h, -10.0) - stieltjes_from_h(h, 1.0, -10.0)), 1e-13);
}

TEST(Symmetry, ConjugateInputsGiveConjugateOutputs) {
  const ModelSpec m = ModelSpec::general(2.0, kFour);
  for (const cplx z : {cplx(-0.05, 0.8), cplx(-1.0, 3.0), cplx(-0.2, 0.1)}) {
    const HPair a = solve_h_general(m, z), b = solve_h_general(m, std::conj(z));
    EXPECT_LT(std::abs(a.h1 - std::conj(b.h1)), 1e-11);
    EXPECT_LT(std::abs(a.h2 - std::conj(b.h2)), 1e-11);
    EXPECT_LT(std::abs(stieltjes_from_h(a, 2.0, z) - std::conj(stieltjes_from_h(b, 2.0, std::conj(z)))), 1e-11);
  }
}

TEST(Continuity, ShrinkingPerturbationOfH) {
  const cplx z(-0.1, 1.0);
  const HPair base = solve_h_equal(ModelSpec::identity(1.0), z);
  double prev = 1e300;
  for (double d : {0.1, 0.01, 0.001}) {
    const ModelSpec m = ModelSpec::equal(1.0, UnivariateSpectralMeasure({{1.0, 1.0 - d}, {2.0, d}}));
    const double diff = std::abs(solve_h_equal(m, z).h1 - base.h1);
    EXPECT_LT(diff, prev);
    prev = diff;
  }
  EXPECT_LT(prev, 1e-2);
}

TEST(Path, SingleTargetMatchesDirectSolve) {
  const ModelSpec m = ModelSpec::identity(1.0);
  const auto path = solve_path(m, {cplx(-5.0, 0.0)});
  ASSERT_EQ(path.size(), 1u);
  EXPECT_LT(std::abs(path[0].h1 - solve_h_equal(m, -5.0).h1), 1e-12);
}

TEST(Path, NearAxisLineResiduals) {
  const ModelSpec m = ModelSpec::general(1.0, kFour);
  std::vector<cplx> targets;
  for (double x = -4.0; x <= 4.0; x += 0.25) targets.emplace_back(-1e-4, x);
  const auto path = solve_path(m, targets);
  ASSERT_EQ(path.size(), targets.size());
  for (const auto& h : path) {
    EXPECT_LE(h.residual, 1e-12);
    EXPECT_GT(h.h1.real(), 0.0);
  }
}

TEST(Path, DensityAtZeroForIdentity) {
  const auto path = solve_path(ModelSpec::identity(1.0), {cplx(-1e-4, 0.0)});
  EXPECT_NEAR(stieltjes_from_h(path[0], 1.0, cplx(-1e-4, 0.0)).real(), 1.0, 1e-3);
}

TEST(Ladder, RejectsBadSchedules) {
  EXPECT_THROW(solve_ladder(ModelSpec::identity(1.0), 0.0, {1e-3, 1e-2}), DomainError);
}

TEST(Anti, RotationIdentity) {
  const ModelSpec m = ModelSpec::identity(1.0);
  const cplx g = anti_stieltjes(m, cplx(0.0, 10.0));
  const cplx want = cplx(0.0, 1.0) * solve_h_equal(m, -10.0).h1;
  EXPECT_LT(std::abs(g - want), 1e-12);
}

TEST(Anti, DensityAtZeroAndHerglotz) {
  const ModelSpec m = ModelSpec::identity(1.0);
  // G has density Im s_G(x + i eps) / pi; at x = 0 it equals f_1(0) = 1/pi.
  const cplx g = anti_stieltjes(m, cplx(0.0, 1e-5));
  EXPECT_NEAR(g.imag() / std::numbers::pi, 1.0 / std::numbers::pi, 1e-3);
  const ModelSpec m2 = ModelSpec::general(2.0, BivariateSpectralMeasure::point(1.0, 1.0));
  EXPECT_GT(anti_stieltjes(m2, cplx(1.0, 0.001)).imag(), 0.0);
  EXPECT_THROW(anti_stieltjes(m, cplx(1.0, -0.5)), DomainError);
}

TEST(SolverConfigTest, Validation) {
  SolverConfig cfg;
  cfg.damping = 0.0;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg.damping = 1.0;
  cfg.tol = -1.0;
  EXPECT_THROW(cfg.validate(), DomainError);
}
