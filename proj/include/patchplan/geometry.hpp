#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace patchplan {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Body pose: position in meters, orientation as Z-Y-X Euler angles
/// (roll about x, pitch about y, yaw about z), stored (roll, pitch, yaw).
/// Angles are free reals; no wrap-around normalization is applied.
struct Pose {
  Vec3 position = Vec3::Zero();
  Vec3 orientation = Vec3::Zero();
};

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

inline Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

inline Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

inline Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

/// Body-to-world rotation for Z-Y-X Euler angles (roll, pitch, yaw):
/// R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Mat3 rotation_zyx(const Vec3& euler) {
  return rot_z(euler.z()) * rot_y(euler.y()) * rot_x(euler.x());
}

/// Derivative of rotation_zyx with respect to euler component `axis` (0=roll,
/// 1=pitch, 2=yaw).
inline Mat3 rotation_zyx_derivative(const Vec3& euler, int axis) {
  const Mat3 dRx = skew(Vec3::UnitX()) * rot_x(euler.x());
  const Mat3 dRy = skew(Vec3::UnitY()) * rot_y(euler.y());
  const Mat3 dRz = skew(Vec3::UnitZ()) * rot_z(euler.z());
  switch (axis) {
    case 0:
      return rot_z(euler.z()) * rot_y(euler.y()) * dRx;
    case 1:
      return rot_z(euler.z()) * dRy * rot_x(euler.x());
    case 2:
      return dRz * rot_y(euler.y()) * rot_x(euler.x());
    default:
      throw std::invalid_argument("rotation_zyx_derivative: axis must be 0..2");
  }
}

/// Rigid transform mapping points from a source frame to a target frame:
/// p_target = rotation * p_source + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  static RigidTransform from_parts(const Mat3& r, const Vec3& t) {
    return {r, t};
  }

  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }

  /// Composition: (a * b)(p) == a(b(p)).
  friend RigidTransform operator*(const RigidTransform& a,
                                  const RigidTransform& b) {
    return {a.rotation * b.rotation,
            a.rotation * b.translation + a.translation};
  }

  bool is_orthonormal(double tol = 1e-9) const {
    const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
    return err.cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

inline Vec3 transform_point(const RigidTransform& t, const Vec3& p) {
  return t.rotation * p + t.translation;
}

/// 6D wrench: force in newtons, moment in newton-meters, expressed in the
/// frame named by `frame`.
struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 moment = Vec3::Zero();
  std::string frame = "world";

  bool finite() const {
    return force.allFinite() && moment.allFinite();
  }
};

/// Rotates a wrench into the transform's target frame. Force and moment are
/// colocated at the application point, so both transform by rotation alone;
/// lever-arm moments enter the dynamics explicitly via (r - p) x lambda.
inline Wrench transform_wrench(const RigidTransform& t, const Wrench& w,
                               std::string_view target_frame = {}) {
  Wrench out;
  out.force = t.rotation * w.force;
  out.moment = t.rotation * w.moment;
  out.frame = target_frame.empty() ? w.frame : std::string(target_frame);
  return out;
}

/// E(theta) with omega_world = E(theta) * thetadot for Z-Y-X Euler angles.
/// Columns: [Rz*Ry*ex, Rz*ey, ez]. Throws std::domain_error within 1e-3 rad
/// of the gimbal singularity at pitch = pi/2 + k*pi.
inline Mat3 euler_rate_matrix(const Vec3& euler) {
  const double pitch = euler.y();
  const double dist =
      std::abs(std::remainder(pitch - M_PI / 2.0, M_PI));
  if (dist <= 1e-3) {
    throw std::domain_error(
        "euler_rate_matrix: pitch within 1e-3 of the +-pi/2 singularity");
  }
  Mat3 e;
  e.col(0) = rot_z(euler.z()) * rot_y(euler.y()) * Vec3::UnitX();
  e.col(1) = rot_z(euler.z()) * Vec3::UnitY();
  e.col(2) = Vec3::UnitZ();
  return e;
}

/// dE/dtheta_axis, same convention as euler_rate_matrix.
inline Mat3 euler_rate_matrix_derivative(const Vec3& euler, int axis) {
  Mat3 d = Mat3::Zero();
  const Mat3 dRy = skew(Vec3::UnitY()) * rot_y(euler.y());
  const Mat3 dRz = skew(Vec3::UnitZ()) * rot_z(euler.z());
  if (axis == 1) {
    d.col(0) = rot_z(euler.z()) * dRy * Vec3::UnitX();
  } else if (axis == 2) {
    d.col(0) = dRz * rot_y(euler.y()) * Vec3::UnitX();
    d.col(1) = dRz * Vec3::UnitY();
  } else if (axis != 0) {
    throw std::invalid_argument(
        "euler_rate_matrix_derivative: axis must be 0..2");
  }
  return d;
}

/// World-frame angular velocity from Euler angles and rates.
inline Vec3 angular_velocity(const Vec3& euler, const Vec3& euler_rate) {
  return euler_rate_matrix(euler) * euler_rate;
}

}  // namespace patchplan
