#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <unsupported/Eigen/Polynomials>

#include "commspec/closedform.hpp"
#include "commspec/errors.hpp"

using namespace commspec;

namespace {
const double kCs[] = {0.5, 1.0, 2.0, 3.0, 4.0, 5.0};
}

TEST(SupportParams, FrozenEndpoints) {
  // mpmath evaluation of R_+ and R_-.
  const SupportParams s1 = support_params(1.0);
  EXPECT_NEAR(s1.U_c, 3.33019067678556121457, 1e-12);
  EXPECT_EQ(s1.L_c, 0.0);
  const SupportParams s5 = support_params(5.0);
  EXPECT_NEAR(s5.L_c, 1.17599115768941049076, 1e-12);
  EXPECT_NEAR(s5.U_c, 9.88013384509725759156, 1e-12);
  const SupportParams s2 = support_params(2.0);
  EXPECT_EQ(s2.d4, 0.0);
  EXPECT_EQ(s2.R_minus, 0.0);
  EXPECT_EQ(s2.L_c, 0.0);
}

TEST(SupportParams, Invariants) {
  for (double c : {0.1, 0.5, 1.0, 1.9, 2.0, 2.1, 3.0, 4.0, 5.0, 10.0}) {
    const SupportParams s = support_params(c);
    const double disc = s.d2 * s.d2 - 4.0 * s.d0 * s.d4;
    const double want = std::pow((4.0 * c + 1.0) / (9.0 * std::pow(c, 4)), 3);
    EXPECT_NEAR(disc / want, 1.0, 1e-10) << c;
    EXPECT_LT(s.L_c, s.U_c);
    EXPECT_EQ(s.L_c > 0.0, c > 2.0) << c;
    const double rp = 0.5 * ((2 * c * c + 10 * c - 1) + std::pow(4 * c + 1, 1.5));
    EXPECT_NEAR(s.R_plus / rp, 1.0, 1e-14);
  }
  EXPECT_THROW(support_params(0.0), DomainError);
}

TEST(Rqd, HandValuesAtCOne) {
  // q = 4/9, |r| = 19/27, d = -11/27 at c = 1, x = 1.
  const RQD v = rqd_eval(support_params(1.0), 1.0);
  EXPECT_NEAR(v.q, 4.0 / 9.0, 1e-15);
  EXPECT_NEAR(v.r_abs, 19.0 / 27.0, 1e-15);
  EXPECT_NEAR(v.d, -11.0 / 27.0, 1e-15);
  EXPECT_THROW(rqd_eval(support_params(1.0), 0.0), DomainError);
}

TEST(Rqd, SignOfDiscriminantMatchesSupport) {
  for (double c : kCs) {
    const SupportParams s = support_params(c);
    const double hi = 1.5 * s.U_c;
    for (int k = 1; k <= 10000; ++k) {
      const double x = hi * k / 10000.0;
      if (std::abs(x - s.U_c) < 1e-9 || std::abs(x - s.L_c) < 1e-9) continue;
      const RQD v = rqd_eval(s, x);
      const double rel = v.d / (std::abs(s.d0) + std::abs(s.d2) / (x * x) + std::abs(s.d4) / std::pow(x, 4));
      if (x > s.L_c && x < s.U_c) {
        ASSERT_LT(v.d, 0.0) << "c=" << c << " x=" << x;
        const double r2 = v.r_abs * v.r_abs;
        ASSERT_NEAR((-r2 + v.q * v.q * v.q - v.d) / std::max(r2, 1e-300), 0.0, 1e-10);
        const double vp = v.r_abs + std::sqrt(-v.d), vm = v.r_abs - std::sqrt(-v.d);
        ASSERT_GT(vp, vm);
        ASSERT_GT(vm, 0.0) << "c=" << c << " x=" << x;
      } else {
        ASSERT_GE(rel, -1e-12) << "c=" << c << " x=" << x;
      }
    }
  }
}

TEST(Cardano, FrozenRootsAtCOne) {
  // Real root of m^3 + m^2 + m - 1 (mpmath).
  const auto r = cardano_roots(1.0, -1.0);
  int hits = 0;
  for (const cplx& m : r) hits += std::abs(m - 0.543689012692076361571) < 1e-12;
  EXPECT_EQ(hits, 1);
  EXPECT_NEAR(stieltjes_identity(1.0, -1.0).real(), 0.543689012692076361571, 1e-12);
}

TEST(Cardano, CollapsedQuadraticTermAtCTwo) {
  // 4z m^3 + z m + 1 = 0 at z = -1: roots 1/2 and -1/4 +- 0.6614i.
  const auto r = cardano_roots(2.0, -1.0);
  for (const cplx& m : r) EXPECT_LT(std::abs(-4.0 * m * m * m - m + 1.0), 1e-12);
  EXPECT_NEAR(std::abs(stieltjes_identity(2.0, -1.0) - 0.5), 0.0, 1e-12);
}

TEST(Cardano, ResidualsAndVietaOnRandomPoints) {
  std::mt19937_64 rng(1000);
  std::uniform_real_distribution<double> lr(-4.0, 1.5), im(-15.0, 15.0);
  for (double c : kCs) {
    double worst = 0.0, worst_vieta = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const cplx z(-std::pow(10.0, lr(rng)), im(rng));
      const auto r = cardano_roots(c, z);
      for (const cplx& m : r)
        worst = std::max(worst, std::abs(identity_cubic(c, z, m)) / std::max(1.0, std::abs(z)));
      const cplx prod = r[0] * r[1] * r[2];
      const cplx want = -1.0 / (c * c * z);
      worst_vieta = std::max(worst_vieta, std::abs(prod - want) / std::abs(want));
    }
    EXPECT_LE(worst, 1e-9) << "c=" << c;
    EXPECT_LE(worst_vieta, 1e-9) << "c=" << c;
  }
}

TEST(Cardano, MatchesCompanionEigenvalueSolver) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> re(0.01, 5.0), im(-6.0, 6.0);
  for (double c : kCs) {
    for (int t = 0; t < 50; ++t) {
      const cplx z(-re(rng), im(rng));
      Eigen::Matrix<cplx, 4, 1> coeffs;
      coeffs << 1.0, z, c * c - 2.0 * c, c * c * z;
      Eigen::PolynomialSolver<cplx, 3> ps(coeffs);
      const auto r = cardano_roots(c, z);
      for (int k = 0; k < 3; ++k) {
        double best = 1e300;
        for (const cplx& m : r) best = std::min(best, std::abs(m - ps.roots()[k]));
        EXPECT_LT(best, 1e-8 * std::max(1.0, std::abs(ps.roots()[k])));
      }
    }
  }
}

TEST(StieltjesIdentity, SelectionAndAsymptotics) {
  const cplx s = stieltjes_identity(1.0, -1e4);
  EXPECT_NEAR(s.real() * 1e4, 1.0, 1e-6);
  EXPECT_NEAR(stieltjes_identity(1.0, -1e-6).real(), 1.0, 1e-3);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> re(0.05, 5.0), im(-6.0, 6.0);
  for (double c : kCs)
    for (int t = 0; t < 100; ++t) {
      const RootSelection sel = stieltjes_identity_select(c, cplx(-re(rng), im(rng)));
      EXPECT_EQ(sel.positive_count, 1);
      EXPECT_GT(sel.value.real(), 0.0);
    }
  EXPECT_THROW(stieltjes_identity(1.0, cplx(0.0, 1.0)), DomainError);
}

TEST(DensityIdentity, ValueAtZero) {
  EXPECT_NEAR(*density_identity(1.0, 0.0), 1.0 / std::numbers::pi, 1e-12);
  EXPECT_NEAR(*density_identity(0.5, 0.0), 1.0 / (std::numbers::pi * std::sqrt(0.75)), 1e-12);
  EXPECT_FALSE(density_identity(3.0, 0.0).has_value());
  EXPECT_FALSE(density_identity(2.0, 0.0).has_value());
}

TEST(DensityIdentity, SymmetryPositivityAndZeroOutside) {
  const double a = *density_identity(1.0, 2.0), b = *density_identity(1.0, -2.0);
  EXPECT_GT(a, 0.0);
  EXPECT_DOUBLE_EQ(a, b);
  EXPECT_EQ(*density_identity(1.0, 5.0), 0.0);
  const SupportParams s5 = support_params(5.0);
  EXPECT_EQ(*density_identity(5.0, 0.5 * s5.L_c), 0.0);
}

TEST(DensityIdentity, MatchesCubeRootDifferenceForm) {
  for (double c : kCs) {
    const SupportParams s = support_params(c);
    for (int k = 1; k < 200; ++k) {
      const double x = s.L_c + (s.U_c - s.L_c) * k / 200.0;
      const RQD v = rqd_eval(s, x);
      const double want = std::sqrt(3.0) / (2.0 * std::numbers::pi) *
                          (std::cbrt(v.r_abs + std::sqrt(-v.d)) - std::cbrt(v.r_abs - std::sqrt(-v.d)));
      EXPECT_NEAR(*density_identity(c, x), want, 1e-9 * std::max(1.0, want)) << c << " " << x;
    }
  }
}

TEST(DensityIdentity, PointMass) {
  EXPECT_EQ(point_mass_identity(1.0), 0.0);
  EXPECT_DOUBLE_EQ(point_mass_identity(4.0), 0.5);
  EXPECT_EQ(point_mass_identity(2.0), 0.0);
}

TEST(DensityIdentity, MassAndSecondMoment) {
  for (double c : kCs) {
    EXPECT_NEAR(identity_ac_mass(c) + point_mass_identity(c), 1.0, 1e-4) << c;
    EXPECT_NEAR(identity_second_moment(c) / (2.0 * c), 1.0, 5e-3) << c;
  }
}

TEST(IdentityCdfTest, LimitsAndAtom) {
  const IdentityCdf F1(1.0);
  EXPECT_EQ(F1(-100.0), 0.0);
  EXPECT_NEAR(F1(100.0), 1.0, 1e-6);
  EXPECT_NEAR(F1(0.0), 0.5, 1e-12);
  const IdentityCdf F4(4.0);
  EXPECT_NEAR(F4(0.0), 0.75, 1e-6);
  EXPECT_NEAR(F4(-1e-9), 0.25, 1e-6);
  double prev = 0.0;
  for (double x = -12.0; x <= 12.0; x += 0.01) {
    const double v = F4(x);
    ASSERT_GE(v, prev - 1e-15);
    prev = v;
  }
}
