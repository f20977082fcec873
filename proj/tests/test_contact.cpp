#include <gtest/gtest.h>

#include <random>

#include "patchplan/contact.hpp"

using namespace patchplan;

namespace {

Wrench make_wrench(double fx, double fy, double fz, double tx, double ty,
                   double tz) {
  Wrench w;
  w.force = Vec3(fx, fy, fz);
  w.moment = Vec3(tx, ty, tz);
  return w;
}

const FrictionLimitSurface kPaperSurface{2.2, 0.0134, 50.0};

}  // namespace

TEST(FrictionContains, PureNormalForce) {
  EXPECT_TRUE(friction_contains(kPaperSurface, make_wrench(0, 0, 10, 0, 0, 0)));
}

TEST(FrictionContains, NegativeNormalRejected) {
  EXPECT_FALSE(
      friction_contains(kPaperSurface, make_wrench(0, 0, -1, 0, 0, 0)));
}

TEST(FrictionContains, ShearBoundaryFromDirectEvaluation) {
  // mu * f_z = 22: the shear boundary of the ellipsoid.
  EXPECT_TRUE(
      friction_contains(kPaperSurface, make_wrench(22, 0, 10, 0, 0, 0)));
  EXPECT_FALSE(
      friction_contains(kPaperSurface, make_wrench(22.1, 0, 10, 0, 0, 0)));
}

TEST(FrictionContains, ZeroNormalContainsOnlyZeroWrench) {
  EXPECT_TRUE(friction_contains(kPaperSurface, make_wrench(0, 0, 0, 0, 0, 0)));
  EXPECT_FALSE(
      friction_contains(kPaperSurface, make_wrench(0.1, 0, 0, 0, 0, 0)));
  EXPECT_FALSE(
      friction_contains(kPaperSurface, make_wrench(0, 0, 0, 0, 0, 0.01)));
}

TEST(FrictionContains, InPlaneMomentsRejected) {
  EXPECT_FALSE(
      friction_contains(kPaperSurface, make_wrench(0, 0, 10, 0.1, 0, 0)));
}

TEST(FrictionContains, ShearRotationSymmetry) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> s(0.0, 1.3);
  for (int k = 0; k < 200; ++k) {
    const double fz = 5.0 + 20.0 * s(rng) / 1.3;
    const double shear = s(rng) * kPaperSurface.mu * fz;
    const double tz = 0.3 * kPaperSurface.k * kPaperSurface.mu * fz;
    const double a0 = u(rng), a1 = u(rng);
    const Wrench w0 = make_wrench(shear * std::cos(a0), shear * std::sin(a0),
                                  fz, 0, 0, tz);
    const Wrench w1 = make_wrench(shear * std::cos(a1), shear * std::sin(a1),
                                  fz, 0, 0, tz);
    EXPECT_EQ(friction_contains(kPaperSurface, w0),
              friction_contains(kPaperSurface, w1));
  }
}

TEST(FrictionContains, ShrinkTowardZeroStaysInside) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double fz = 1.0 + 30.0 * u(rng);
    const Wrench w = make_wrench(2.2 * fz * (2 * u(rng) - 1) * 0.9,
                                 2.2 * fz * (2 * u(rng) - 1) * 0.9, fz, 0, 0,
                                 0.0134 * 2.2 * fz * (2 * u(rng) - 1));
    if (!friction_contains(kPaperSurface, w)) continue;
    Wrench shrunk = w;
    shrunk.force.x() *= u(rng);
    shrunk.force.y() *= u(rng);
    shrunk.moment.z() *= u(rng);
    EXPECT_TRUE(friction_contains(kPaperSurface, shrunk));
  }
}

TEST(SpineContains, CapsAndZeroNormal) {
  const SpineLimitSurface spine{4.0, 4.0, 0.3};
  EXPECT_TRUE(spine_contains(spine, make_wrench(3, 0, 0, 0, 0, 0)));
  EXPECT_TRUE(spine_contains(spine, make_wrench(0, 0, 0, 0, 0, 0)));
  EXPECT_FALSE(spine_contains(spine, make_wrench(5, 0, 0, 0, 0, 0)));
  EXPECT_FALSE(spine_contains(spine, make_wrench(3, 0, 0.5, 0, 0, 0)));
}

TEST(PatchContains, PureSpineAtZeroNormal) {
  PatchLimitSurface patch{{2.2, 0.0134, 50.0}, {4.0, 4.0, 0.3}};
  EXPECT_TRUE(patch_contains(patch, make_wrench(3, 0, 0, 0, 0, 0)));
  EXPECT_FALSE(patch_contains(patch, make_wrench(5, 0, 0, 0, 0, 0)));
}

TEST(PatchContains, ZeroNormalSliceEqualsSpine) {
  PatchLimitSurface patch{{2.2, 0.0134, 50.0}, {4.0, 4.0, 0.3}};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  std::uniform_real_distribution<double> ut(-0.5, 0.5);
  for (int k = 0; k < 500; ++k) {
    const Wrench w = make_wrench(u(rng), u(rng), 0, 0, 0, ut(rng));
    EXPECT_EQ(patch_contains(patch, w), spine_contains(patch.spine, w));
  }
}

// Grid-search oracle over the spine decomposition with the friction part
// checked by direct ellipsoid evaluation; the closed-form componentwise
// shrink must agree away from the grid-resolution boundary shell.
TEST(PatchContains, MatchesGridSearchOracle) {
  PatchLimitSurface patch{{2.2, 0.0134, 50.0}, {4.0, 4.0, 0.3}};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int steps = 50;
  int checked = 0;
  for (int k = 0; k < 40; ++k) {
    const double fz = u(rng) < 0.2 ? 0.0 : 12.0 * u(rng);
    const Wrench w =
        make_wrench((2 * u(rng) - 1) * (patch.friction.mu * fz + 5.0),
                    (2 * u(rng) - 1) * (patch.friction.mu * fz + 5.0), fz, 0,
                    0, (2 * u(rng) - 1) * 0.6);
    bool oracle = false;
    for (int ix = -steps; ix <= steps && !oracle; ++ix) {
      for (int iy = -steps; iy <= steps && !oracle; ++iy) {
        for (int iz = -steps; iz <= steps && !oracle; ++iz) {
          Wrench fr = w;
          fr.force.x() -= patch.spine.fx_max * ix / steps;
          fr.force.y() -= patch.spine.fy_max * iy / steps;
          fr.moment.z() -= patch.spine.tz_max * iz / steps;
          if (friction_contains(patch.friction, fr)) oracle = true;
        }
      }
    }
    // Skip the thin shell where grid resolution decides differently from
    // the exact decomposition.
    Wrench inner = w, outer = w;
    inner.force.head<2>() *= 0.96;
    inner.moment.z() *= 0.96;
    outer.force.head<2>() *= 1.04;
    outer.moment.z() *= 1.04;
    if (patch_contains(patch, outer) != patch_contains(patch, inner)) continue;
    ++checked;
    EXPECT_EQ(patch_contains(patch, w), oracle)
        << "fx=" << w.force.x() << " fy=" << w.force.y() << " fz=" << fz
        << " tz=" << w.moment.z();
  }
  EXPECT_GT(checked, 20);
}

TEST(CouplePairedFingers, ResidualIsComponentwiseDifference) {
  EXPECT_EQ(couple_paired_fingers(make_wrench(1, 2, 9, 0, 0, 3),
                                  make_wrench(1, 2, -4, 0, 0, 3)),
            Vec3(0, 0, 0));
  EXPECT_EQ(couple_paired_fingers(make_wrench(2, 0, 0, 0, 0, 0),
                                  make_wrench(1, 0, 0, 0, 0, 0)),
            Vec3(1, 0, 0));
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int k = 0; k < 100; ++k) {
    const Wrench a = make_wrench(u(rng), u(rng), u(rng), 0, 0, u(rng));
    const Wrench b = make_wrench(u(rng), u(rng), u(rng), 0, 0, u(rng));
    const Vec3 res = couple_paired_fingers(a, b);
    EXPECT_DOUBLE_EQ(res.x(), a.force.x() - b.force.x());
    EXPECT_DOUBLE_EQ(res.y(), a.force.y() - b.force.y());
    EXPECT_DOUBLE_EQ(res.z(), a.moment.z() - b.moment.z());
  }
}

TEST(LinearizedFriction, ZeroTorsionPointsFeasibleForAnyGamma) {
  const auto family = linearized_friction_constraints(kPaperSurface);
  for (double gamma : {0.0, 1.0}) {
    std::array<double, kPatchSlotCount> v{};
    v[kSlotFx] = 10.0;
    v[kSlotFz] = 10.0;  // |f_x| <= mu f_z = 22
    v[kSlotGamma] = gamma;
    EXPECT_TRUE(family.feasible(v));
  }
}

TEST(LinearizedFriction, GammaIndicatorLogic) {
  const auto family = linearized_friction_constraints(kPaperSurface);
  std::array<double, kPatchSlotCount> v{};
  v[kSlotFz] = 10.0;
  v[kSlotMzPlus] = 1.0;
  v[kSlotMzMinus] = 1.0;
  v[kSlotMz] = 0.0;
  v[kSlotGamma] = 1.0;  // gamma = 1 forces m^z_- = 0
  EXPECT_FALSE(family.feasible(v));
  v[kSlotMzMinus] = 0.0;
  v[kSlotMz] = 1.0;
  EXPECT_FALSE(family.feasible(v));  // split equality broken
  v[kSlotMz] = 1.0;
  v[kSlotMzPlus] = 1.0;
  EXPECT_TRUE(family.feasible(v));
}

// Inner approximation: family-feasible points with one shear axis zero lie
// inside the exact ellipsoid (algebraic identity (1-a)^2 + a^2 <= 1),
// sampled at 10^4 points with zero violations.
TEST(LinearizedFriction, InnerApproximationOfEllipsoid) {
  const auto family = linearized_friction_constraints(kPaperSurface);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0;
  for (int k = 0; k < 10000; ++k) {
    const double fz = 0.5 + (kPaperSurface.f_max - 0.5) * u(rng);
    const double a = u(rng);  // |m^z| fraction of its window
    const double mz_mag = a * kPaperSurface.k * kPaperSurface.mu * fz;
    const double sign = u(rng) < 0.5 ? 1.0 : -1.0;
    const double shear_cap = kPaperSurface.mu * fz - mz_mag / kPaperSurface.k;
    const double fx = (2 * u(rng) - 1) * std::max(0.0, shear_cap);
    std::array<double, kPatchSlotCount> v{};
    v[kSlotFx] = fx;
    v[kSlotFz] = fz;
    v[kSlotMz] = sign * mz_mag;
    v[kSlotMzPlus] = sign > 0 ? mz_mag : 0.0;
    v[kSlotMzMinus] = sign > 0 ? 0.0 : mz_mag;
    v[kSlotGamma] = sign > 0 ? 1.0 : 0.0;
    ASSERT_TRUE(family.feasible(v, 1e-9));
    Wrench w;
    w.force = Vec3(fx, 0, fz);
    w.moment = Vec3(0, 0, v[kSlotMz]);
    if (!friction_contains(kPaperSurface, w)) ++violations;
  }
  EXPECT_EQ(violations, 0);
}
