#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "patchplan/geometry.hpp"

namespace patchplan {

/// Raised by scenario loading/validation; `field` is the JSON path of the
/// offending entry.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Robot constants. Fingers are indexed 0..n_f-1; gripper l owns fingers
/// 2l and 2l+1 (the paper's 2l-1 and 2l in one-based indexing).
struct RobotModel {
  double mass = 0.0;
  Mat3 inertia = Mat3::Identity();
  Vec3 gravity = Vec3(0, 0, -9.81);
  int limb_count = 0;

  // Per finger, in the body frame.
  std::vector<Vec3> nominal_offset;       // a^i
  std::vector<Vec3> offset_range;         // b^i, componentwise >= 0
  std::vector<Vec3> nominal_orientation;  // c^i
  std::vector<Vec3> orientation_range;    // d^i, componentwise >= 0

  // Per gripper: bounds on the finger-separation vector d^l.
  std::vector<Vec3> separation_lower;
  std::vector<Vec3> separation_upper;

  int finger_count() const { return 2 * limb_count; }
  int gripper_of(int finger) const { return finger / 2; }
  /// First and second finger of gripper l.
  std::array<int, 2> fingers_of(int gripper) const {
    return {2 * gripper, 2 * gripper + 1};
  }
};

/// Rectangular graspable patch on a climbing hold face.
struct GraspRegion {
  int id = 0;
  RigidTransform frame;  // world -> region; local z is the outward face normal
  Eigen::Vector2d extent = Eigen::Vector2d::Zero();  // half-widths in x, y
  double friction = 0.0;                             // mu_c
  double patch_radius = 0.0;                         // r_p
  double torsion_constant = 0.0;  // k_c = 0.67 * r_p, derived at load
  double normal_force_max = 0.0;  // f_max
  double spine_fx_max = 0.0;
  double spine_fy_max = 0.0;
  double spine_tz_max = 0.0;
  double yaw_tolerance = 0.0;
  /// Region a gripper's second finger must grasp when its first finger
  /// grasps this one (front/back face pairing). May equal `id` (a face a
  /// gripper may grasp with both fingers, e.g. flat ground).
  int paired_with = -1;

  Mat3 world_rotation() const { return frame.rotation.transpose(); }
  Vec3 world_normal() const { return world_rotation().col(2); }
  /// Yaw of the region frame's x axis in the world xy plane; fingers must
  /// align their yaw with this within yaw_tolerance to grasp.
  double grasp_yaw() const {
    const Vec3 x_axis = world_rotation().col(0);
    return std::atan2(x_axis.y(), x_axis.x());
  }
};

/// One face of a cuboid obstacle. The face frame's z axis points INWARD so
/// that "p outside face h" reads as an upper bound on the local z coordinate.
struct ObstacleFace {
  RigidTransform frame;       // world -> face frame, z inward, origin on face
  Vec3 normal = Vec3::Zero(); // n^{v_h} in the face frame (always +z)
  double offset = 0.0;        // s^{v_h}; outside <=> z_face(p) <= offset
  // World-space row of the same halfspace: outside <=> world_row . p <= world_offset.
  Vec3 world_row = Vec3::Zero();
  double world_offset = 0.0;
};

struct Obstacle {
  int id = 0;
  RigidTransform frame;  // world -> obstacle, origin at the cuboid center
  Vec3 half_extents = Vec3::Zero();
  std::vector<ObstacleFace> faces;  // derived; always 6 for cuboids

  /// Signed distance-like margin: max over faces of (world_offset - row.p).
  /// >= 0 iff p lies outside at least one face (i.e. outside the cuboid).
  double outside_margin(const Vec3& p) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& face : faces) {
      best = std::max(best, face.world_offset - face.world_row.dot(p));
    }
    return best;
  }
};

/// Componentwise box.
struct Box3 {
  Vec3 lower = Vec3::Constant(-1e30);
  Vec3 upper = Vec3::Constant(1e30);
};

/// Variable bounds defining the polytopes X, U, Y. Boxes apply uniformly
/// across fingers/regions; gripper separation boxes are per gripper.
struct VariableBounds {
  Box3 r, theta, rdot, thetadot, p, q;
  Box3 lambda, tau;
  Box3 f, m;
};

struct BodyState {
  Vec3 r = Vec3::Zero();
  Vec3 theta = Vec3::Zero();
  Vec3 rdot = Vec3::Zero();
  Vec3 thetadot = Vec3::Zero();
};

/// Full kinematic snapshot used for the initial state and the goal.
struct StateSnapshot {
  BodyState body;
  std::vector<Vec3> p;  // per finger, world frame
  std::vector<Vec3> q;  // per finger, world frame Euler angles
};

/// Diagonal weights; stored expanded so Q, R, S are PSD by construction.
struct CostWeights {
  Vec3 q_r = Vec3::Zero();
  Vec3 q_theta = Vec3::Zero();
  Vec3 q_rdot = Vec3::Zero();
  Vec3 q_thetadot = Vec3::Zero();
  Vec3 q_p = Vec3::Zero();  // applied to every finger position
  Vec3 q_q = Vec3::Zero();
  Vec3 q_d = Vec3::Zero();  // applied to every gripper separation
  Vec3 r_lambda = Vec3::Zero();
  Vec3 r_tau = Vec3::Zero();
  double s_alpha = 0.0;
  double s_beta = 0.0;
  double s_gamma = 0.0;
  double zeta_finger_z = 0.0;      // swing reward; negative lifts limbs
  std::vector<Vec3> xi;            // per gripper, separation reward
};

/// Experiment toggles from the scenario file (contact-model studies).
struct ExperimentConfig {
  /// Finger whose local normal force is pinned to zero on every region
  /// (-1 disables).
  int pin_zero_normal_finger = -1;
  /// When true, every in-contact wrench is pinned to (pinned_fx, pinned_mz)
  /// in local x / torsion.
  bool pin_contact_wrench = false;
  double pinned_fx = 0.0;
  double pinned_mz = 0.0;
  /// When false the linearized limit-surface rows are dropped from the MIQP
  /// (normal force stays bounded); used for the with/without comparison.
  bool enforce_patch_constraints = true;
};

struct SolverParams {
  double rho = 1.5;                  // consensus penalty, uniform default
  std::vector<double> rho_blocks;    // optional per-block override
  int admm_iterations = 10;
  double qp_tol = 1e-6;
  int qp_max_iter = 20000;
  double miqp_gap = 1e-4;
  int miqp_node_limit = 20000;
  double nlp_tol = 1e-4;
  int nlp_max_iter = 60;
  double big_m_margin = 0.10;        // per-row M = worst slack * (1 + margin)
  Vec3 kinematics_linearization = Vec3::Zero();
  bool early_stop = false;
  double stop_pos_residual = 0.03;   // m
  double stop_force_residual = 0.5;  // N
};

/// The single input artifact: robot, environment, horizon, weights, bounds,
/// and solver parameters.
struct Scenario {
  std::string name;
  int version = 1;

  RobotModel robot;
  std::vector<GraspRegion> regions;
  std::vector<Obstacle> obstacles;

  int horizon = 0;   // N
  double dt = 0.0;

  StateSnapshot initial;
  StateSnapshot goal;

  CostWeights weights;
  VariableBounds bounds;  // gripper separation boxes live on the robot

  double big_m = 0.0;  // audit cap; rows use per-row tightened values
  SolverParams solver;
  ExperimentConfig experiment;

  int region_count() const { return static_cast<int>(regions.size()); }
  int obstacle_count() const { return static_cast<int>(obstacles.size()); }
  int faces_per_obstacle() const { return 6; }

  int nx() const {
    return 12 + 6 * robot.finger_count() + 3 * robot.limb_count;
  }
  int nu() const { return 6 * robot.finger_count(); }
  int ny() const { return 6 * robot.finger_count() * region_count(); }
  /// Number of binaries per step: alpha + beta + gamma. Regions with a
  /// degenerate torsion range carry no gamma (and no m^z split).
  int nz() const {
    return static_cast<int>(alpha_count() + beta_count() + gamma_count());
  }
  int alpha_count() const { return robot.finger_count() * region_count(); }
  int beta_count() const {
    return robot.finger_count() * obstacle_count() * faces_per_obstacle();
  }
  int gamma_count() const {
    int n = 0;
    for (const auto& region : regions) {
      if (region_has_torsion(region)) n += robot.finger_count();
    }
    return n;
  }

  /// Whether a region can transmit torsion at all; when not, the gamma
  /// binary and the m^z split are elided (point contact).
  bool region_has_torsion(const GraspRegion& region) const {
    const double cap = region.torsion_constant * region.friction *
                           region.normal_force_max +
                       region.spine_tz_max;
    const double mbound =
        std::max(std::abs(bounds.m.lower.z()), std::abs(bounds.m.upper.z()));
    return cap > 1e-12 && mbound > 1e-12;
  }

  const GraspRegion* region_by_id(int id) const {
    for (const auto& region : regions) {
      if (region.id == id) return &region;
    }
    return nullptr;
  }

  void validate() const;
};

inline void Scenario::validate() const {
  const auto require = [](bool ok, const std::string& field,
                          const std::string& msg) {
    if (!ok) throw ScenarioError(field, msg);
  };
  require(horizon >= 2, "horizon.N", "horizon too short (N must be >= 2)");
  require(dt > 0.0, "horizon.dt", "dt must be positive");
  require(robot.mass > 0.0, "robot.mass", "mass must be positive");
  require(robot.limb_count >= 1, "robot.limbs", "need at least one limb");
  require((robot.inertia - robot.inertia.transpose()).cwiseAbs().maxCoeff() <
              1e-9,
          "robot.inertia", "inertia must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat3> eig(robot.inertia);
  require(eig.eigenvalues().minCoeff() > 0.0, "robot.inertia",
          "inertia must be positive definite");
  const int nf = robot.finger_count();
  require(static_cast<int>(robot.nominal_offset.size()) == nf,
          "robot.fingers", "need one finger entry per finger (n_f = 2*n_l)");
  for (int i = 0; i < nf; ++i) {
    require(robot.offset_range[i].minCoeff() >= 0.0,
            "robot.fingers[" + std::to_string(i) + "].offset_range",
            "range must be componentwise >= 0");
    require(robot.orientation_range[i].minCoeff() >= 0.0,
            "robot.fingers[" + std::to_string(i) + "].orientation_range",
            "range must be componentwise >= 0");
  }
  for (size_t c = 0; c < regions.size(); ++c) {
    const auto& region = regions[c];
    const std::string path = "regions[" + std::to_string(c) + "]";
    require(region.friction >= 0.0, path + ".friction", "mu must be >= 0");
    require(region.extent.minCoeff() > 0.0, path + ".extent",
            "extents must be positive");
    require(std::abs(region.torsion_constant - 0.67 * region.patch_radius) <
                1e-12,
            path + ".torsion_constant", "k_c must equal 0.67 * r_p");
    require(region.normal_force_max >= 0.0, path + ".normal_force_max",
            "cap must be >= 0");
    require(region.spine_fx_max >= 0.0 && region.spine_fy_max >= 0.0 &&
                region.spine_tz_max >= 0.0,
            path + ".spine_caps", "caps must be >= 0");
    require(region.frame.is_orthonormal(1e-9), path + ".frame",
            "rotation must be orthonormal with det +1");
    if (region.paired_with >= 0) {
      require(region_by_id(region.paired_with) != nullptr,
              path + ".paired_with", "references an unknown region id");
    }
  }
  for (size_t v = 0; v < obstacles.size(); ++v) {
    const auto& obstacle = obstacles[v];
    const std::string path = "obstacles[" + std::to_string(v) + "]";
    require(obstacle.half_extents.minCoeff() > 0.0, path + ".half_extents",
            "half-extents must be positive");
    require(obstacle.faces.size() == 6, path + ".faces",
            "cuboids must derive exactly 6 faces");
    for (const auto& face : obstacle.faces) {
      require(std::abs(face.normal.norm() - 1.0) < 1e-9, path + ".faces",
              "face normals must be unit length");
    }
  }
  require(static_cast<int>(initial.p.size()) == nf, "initial.p",
          "need one finger position per finger");
  require(static_cast<int>(goal.p.size()) == nf, "goal.p",
          "need one finger position per finger");
  require(solver.rho > 0.0, "solver.rho", "rho must be positive");
  require(big_m > 0.0, "big_m", "big-M cap must be positive");
  require(weights.q_r.minCoeff() >= 0.0 && weights.q_theta.minCoeff() >= 0.0 &&
              weights.q_rdot.minCoeff() >= 0.0 &&
              weights.q_thetadot.minCoeff() >= 0.0 &&
              weights.q_p.minCoeff() >= 0.0 && weights.q_q.minCoeff() >= 0.0 &&
              weights.q_d.minCoeff() >= 0.0,
          "weights.Q", "Q diagonal must be >= 0 (PSD)");
  require(weights.r_lambda.minCoeff() >= 0.0 &&
              weights.r_tau.minCoeff() >= 0.0,
          "weights.R", "R diagonal must be >= 0 (PSD)");
  require(weights.s_alpha >= 0.0 && weights.s_beta >= 0.0 &&
              weights.s_gamma >= 0.0,
          "weights.S", "S diagonal must be >= 0 (PSD)");
}

/// All continuous decision variables over the horizon. States run t = 0..N,
/// controls and local wrenches t = 0..N-1.
struct TrajectoryVariables {
  std::vector<Vec3> r, theta, rdot, thetadot;          // N+1
  std::vector<std::vector<Vec3>> p, q;                 // (N+1) x n_f
  std::vector<std::vector<Vec3>> d;                    // (N+1) x n_l
  std::vector<std::vector<Vec3>> lambda, tau;          // N x n_f
  std::vector<std::vector<std::vector<Vec3>>> f, m;    // N x n_f x C

  static TrajectoryVariables zeros(const Scenario& s) {
    TrajectoryVariables tv;
    const int N = s.horizon;
    const int nf = s.robot.finger_count();
    const int nl = s.robot.limb_count;
    const int C = s.region_count();
    tv.r.assign(N + 1, Vec3::Zero());
    tv.theta.assign(N + 1, Vec3::Zero());
    tv.rdot.assign(N + 1, Vec3::Zero());
    tv.thetadot.assign(N + 1, Vec3::Zero());
    tv.p.assign(N + 1, std::vector<Vec3>(nf, Vec3::Zero()));
    tv.q.assign(N + 1, std::vector<Vec3>(nf, Vec3::Zero()));
    tv.d.assign(N + 1, std::vector<Vec3>(nl, Vec3::Zero()));
    tv.lambda.assign(N, std::vector<Vec3>(nf, Vec3::Zero()));
    tv.tau.assign(N, std::vector<Vec3>(nf, Vec3::Zero()));
    tv.f.assign(N, std::vector<std::vector<Vec3>>(
                       nf, std::vector<Vec3>(C, Vec3::Zero())));
    tv.m = tv.f;
    return tv;
  }

  bool shapes_match(const Scenario& s) const {
    const size_t N = static_cast<size_t>(s.horizon);
    const size_t nf = static_cast<size_t>(s.robot.finger_count());
    const size_t nl = static_cast<size_t>(s.robot.limb_count);
    const size_t C = static_cast<size_t>(s.region_count());
    if (r.size() != N + 1 || theta.size() != N + 1 || rdot.size() != N + 1 ||
        thetadot.size() != N + 1 || p.size() != N + 1 || q.size() != N + 1 ||
        d.size() != N + 1 || lambda.size() != N || tau.size() != N ||
        f.size() != N || m.size() != N) {
      return false;
    }
    for (size_t t = 0; t <= N; ++t) {
      if (p[t].size() != nf || q[t].size() != nf || d[t].size() != nl)
        return false;
    }
    for (size_t t = 0; t < N; ++t) {
      if (lambda[t].size() != nf || tau[t].size() != nf || f[t].size() != nf ||
          m[t].size() != nf) {
        return false;
      }
      for (size_t i = 0; i < nf; ++i) {
        if (f[t][i].size() != C || m[t][i].size() != C) return false;
      }
    }
    return true;
  }
};

/// All binary decision variables over the horizon (t = 0..N-1).
struct DiscreteVariables {
  std::vector<std::vector<std::vector<int>>> alpha;  // N x n_f x C
  std::vector<std::vector<std::vector<std::vector<int>>>> beta;  // N x n_f x V x n_v
  std::vector<std::vector<std::vector<int>>> gamma;  // N x n_f x C

  static DiscreteVariables zeros(const Scenario& s) {
    DiscreteVariables dv;
    const int N = s.horizon;
    const int nf = s.robot.finger_count();
    const int C = s.region_count();
    const int V = s.obstacle_count();
    dv.alpha.assign(N, std::vector<std::vector<int>>(nf,
                   std::vector<int>(C, 0)));
    dv.gamma = dv.alpha;
    dv.beta.assign(
        N, std::vector<std::vector<std::vector<int>>>(
               nf, std::vector<std::vector<int>>(V, std::vector<int>(6, 0))));
    return dv;
  }

  bool shapes_match(const Scenario& s) const {
    const size_t N = static_cast<size_t>(s.horizon);
    const size_t nf = static_cast<size_t>(s.robot.finger_count());
    const size_t C = static_cast<size_t>(s.region_count());
    const size_t V = static_cast<size_t>(s.obstacle_count());
    if (alpha.size() != N || gamma.size() != N || beta.size() != N)
      return false;
    for (size_t t = 0; t < N; ++t) {
      if (alpha[t].size() != nf || gamma[t].size() != nf ||
          beta[t].size() != nf) {
        return false;
      }
      for (size_t i = 0; i < nf; ++i) {
        if (alpha[t][i].size() != C || gamma[t][i].size() != C ||
            beta[t][i].size() != V) {
          return false;
        }
        for (size_t v = 0; v < V; ++v) {
          if (beta[t][i][v].size() != 6) return false;
        }
      }
    }
    return true;
  }

  /// At most one contact region per (t, finger).
  bool single_contact_per_finger() const {
    for (const auto& per_t : alpha) {
      for (const auto& per_finger : per_t) {
        int sum = 0;
        for (int a : per_finger) sum += a;
        if (sum > 1) return false;
      }
    }
    return true;
  }
};

/// Derives the 6 cuboid faces of an obstacle from its frame and half-extents.
/// Face frames put z INWARD so the outer halfspace reads z_face(p) <= 0.
inline void derive_obstacle_faces(Obstacle& obstacle) {
  obstacle.faces.clear();
  const RigidTransform world_from_obstacle = obstacle.frame.inverse();
  const Mat3 R = world_from_obstacle.rotation;
  const Vec3 center = world_from_obstacle.translation;
  const std::array<Vec3, 6> outward = {
      Vec3::UnitX(),  -Vec3::UnitX(), Vec3::UnitY(),
      -Vec3::UnitY(), Vec3::UnitZ(),  -Vec3::UnitZ()};
  const std::array<double, 6> extent = {
      obstacle.half_extents.x(), obstacle.half_extents.x(),
      obstacle.half_extents.y(), obstacle.half_extents.y(),
      obstacle.half_extents.z(), obstacle.half_extents.z()};
  for (int h = 0; h < 6; ++h) {
    ObstacleFace face;
    const Vec3 outward_world = R * outward[h];
    const Vec3 face_center = center + extent[h] * outward_world;
    // Build a right-handed frame with z inward.
    const Vec3 z_axis = -outward_world;
    Vec3 x_axis = z_axis.unitOrthogonal();
    const Vec3 y_axis = z_axis.cross(x_axis);
    Mat3 world_from_face;
    world_from_face.col(0) = x_axis;
    world_from_face.col(1) = y_axis;
    world_from_face.col(2) = z_axis;
    face.frame = RigidTransform{world_from_face.transpose(),
                                -(world_from_face.transpose() * face_center)};
    face.normal = Vec3::UnitZ();
    face.offset = 0.0;
    face.world_row = z_axis;  // inward normal
    face.world_offset = z_axis.dot(face_center);
    obstacle.faces.push_back(face);
  }
}

}  // namespace patchplan
