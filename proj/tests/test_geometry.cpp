#include <gtest/gtest.h>

#include <random>

#include "patchplan/geometry.hpp"

using namespace patchplan;

TEST(TransformPoint, IdentityAndTranslation) {
  EXPECT_EQ(transform_point(RigidTransform::identity(), Vec3(1, 2, 3)),
            Vec3(1, 2, 3));
  RigidTransform lift{Mat3::Identity(), Vec3(0, 0, 1)};
  EXPECT_EQ(transform_point(lift, Vec3::Zero()), Vec3(0, 0, 1));
}

TEST(TransformPoint, InverseRoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const Vec3 euler(u(rng), u(rng), u(rng));
    RigidTransform t{rotation_zyx(euler), Vec3(u(rng), u(rng), u(rng))};
    const Vec3 p(u(rng), u(rng), u(rng));
    const Vec3 back = transform_point(t.inverse(), transform_point(t, p));
    EXPECT_LT((back - p).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(RigidTransform, GroupLaws) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const auto random_t = [&]() {
      return RigidTransform{rotation_zyx(Vec3(u(rng), u(rng), u(rng))),
                            Vec3(u(rng), u(rng), u(rng))};
    };
    const RigidTransform a = random_t(), b = random_t(), c = random_t();
    EXPECT_TRUE(a.is_orthonormal());
    EXPECT_TRUE((a * b).is_orthonormal());  // closure
    const Vec3 p(u(rng), u(rng), u(rng));
    const Vec3 assoc1 = transform_point((a * b) * c, p);
    const Vec3 assoc2 = transform_point(a * (b * c), p);
    EXPECT_LT((assoc1 - assoc2).cwiseAbs().maxCoeff(), 1e-9);
    const RigidTransform id = a * a.inverse();
    EXPECT_LT((id.rotation - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(id.translation.cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(TransformWrench, IdentityKeepsWrench) {
  Wrench w;
  w.force = Vec3(1, 2, 3);
  w.moment = Vec3(-1, 0.5, 2);
  const Wrench out = transform_wrench(RigidTransform::identity(), w);
  EXPECT_EQ(out.force, w.force);
  EXPECT_EQ(out.moment, w.moment);
}

TEST(TransformWrench, YawRotatesForce) {
  RigidTransform yaw{rot_z(M_PI / 2.0), Vec3::Zero()};
  Wrench w;
  w.force = Vec3(1, 0, 0);
  const Wrench out = transform_wrench(yaw, w, "rotated");
  EXPECT_LT((out.force - Vec3(0, 1, 0)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(out.frame, "rotated");
}

TEST(TransformWrench, CompositionMatchesSequentialApplication) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    RigidTransform t1{rotation_zyx(Vec3(u(rng), u(rng), u(rng))),
                      Vec3(u(rng), u(rng), u(rng))};
    RigidTransform t2{rotation_zyx(Vec3(u(rng), u(rng), u(rng))),
                      Vec3(u(rng), u(rng), u(rng))};
    Wrench w;
    w.force = Vec3(u(rng), u(rng), u(rng));
    w.moment = Vec3(u(rng), u(rng), u(rng));
    const Wrench composed = transform_wrench(t1 * t2, w);
    const Wrench sequential = transform_wrench(t1, transform_wrench(t2, w));
    // Oracle: the composed rotation matrix applied numerically.
    const Mat3 r = t1.rotation * t2.rotation;
    EXPECT_LT((composed.force - r * w.force).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((composed.force - sequential.force).cwiseAbs().maxCoeff(),
              1e-12);
    EXPECT_LT((composed.moment - sequential.moment).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(EulerRateMatrix, ZeroAnglesGivesIdentity) {
  EXPECT_LT((euler_rate_matrix(Vec3::Zero()) - Mat3::Identity())
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
}

// Finite-difference oracle: omega_hat = Rdot * R^T for R(theta(t)) with
// theta(t) = theta + t * thetadot.
TEST(EulerRateMatrix, MatchesRotationFiniteDifference) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  const double h = 1e-7;
  for (int k = 0; k < 100; ++k) {
    const Vec3 theta(u(rng), u(rng), u(rng));
    const Vec3 thetadot(u(rng), u(rng), u(rng));
    const Vec3 omega = euler_rate_matrix(theta) * thetadot;
    const Mat3 r_plus = rotation_zyx(theta + h * thetadot);
    const Mat3 r_minus = rotation_zyx(theta - h * thetadot);
    const Mat3 rdot = (r_plus - r_minus) / (2.0 * h);
    const Mat3 omega_hat = rdot * rotation_zyx(theta).transpose();
    const Mat3 expected = skew(omega);
    EXPECT_LT((omega_hat - expected).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(EulerRateMatrix, SingularityThrows) {
  EXPECT_THROW(euler_rate_matrix(Vec3(0, M_PI / 2.0, 0)), std::domain_error);
  EXPECT_THROW(euler_rate_matrix(Vec3(0, -M_PI / 2.0, 0)), std::domain_error);
  EXPECT_THROW(euler_rate_matrix(Vec3(0, M_PI / 2.0 - 5e-4, 0)),
               std::domain_error);
  EXPECT_NO_THROW(euler_rate_matrix(Vec3(0, M_PI / 2.0 - 2e-3, 0)));
}

TEST(EulerRateMatrixDerivative, MatchesFiniteDifference) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  const double h = 1e-6;
  for (int k = 0; k < 50; ++k) {
    const Vec3 theta(u(rng), u(rng), u(rng));
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 tp = theta, tm = theta;
      tp[axis] += h;
      tm[axis] -= h;
      const Mat3 fd = (euler_rate_matrix(tp) - euler_rate_matrix(tm)) /
                      (2.0 * h);
      const Mat3 an = euler_rate_matrix_derivative(theta, axis);
      EXPECT_LT((fd - an).cwiseAbs().maxCoeff(), 1e-7);
    }
  }
}

TEST(RotationDerivative, MatchesFiniteDifference) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  const double h = 1e-6;
  for (int k = 0; k < 50; ++k) {
    const Vec3 theta(u(rng), u(rng), u(rng));
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 tp = theta, tm = theta;
      tp[axis] += h;
      tm[axis] -= h;
      const Mat3 fd = (rotation_zyx(tp) - rotation_zyx(tm)) / (2.0 * h);
      const Mat3 an = rotation_zyx_derivative(theta, axis);
      EXPECT_LT((fd - an).cwiseAbs().maxCoeff(), 1e-7);
    }
  }
}
