#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "patchplan/contact.hpp"
#include "patchplan/geometry.hpp"
#include "patchplan/model.hpp"

namespace patchplan {

/// Per-family acceptance tolerances. Defaults mirror the convergence
/// thresholds used in the computation study (0.03 m / 0.5 N) with moment
/// and rotation values chosen at the same plot scale.
struct ToleranceSet {
  double dynamics_force = 0.5;     // N
  double dynamics_moment = 0.05;   // N*m
  double kinematics_pos = 0.03;    // m
  double kinematics_rot = 0.05;    // rad
  double contact_pos = 0.03;       // m (stationarity, membership)
  double contact_rot = 0.05;       // rad (yaw alignment)
  double contact_force = 0.5;      // N (zero-wrench, transform, coupling)
  double patch_membership = 1e-6;  // scaled by max(1, f_max)
  double collision = 1e-9;         // m of interior depth
  double bounds = 1e-9;
};

struct FamilyReport {
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool pass() const { return max_violation <= tolerance; }
};

/// Per-constraint-family verdicts from replaying a candidate against the
/// raw model equations. patch_violations is a boolean count (memberships
/// that fail the Minkowski test).
struct FeasibilityReport {
  FamilyReport dynamics_force;
  FamilyReport dynamics_moment;
  FamilyReport kinematics;
  FamilyReport contact_logic;
  FamilyReport collision;
  FamilyReport bounds;
  int patch_violations = 0;
  int patch_checked = 0;
  std::vector<double> force_residual_per_step;
  std::vector<double> moment_residual_per_step;

  bool pass() const {
    return dynamics_force.pass() && dynamics_moment.pass() &&
           kinematics.pass() && contact_logic.pass() && collision.pass() &&
           bounds.pass() && patch_violations == 0;
  }
};

namespace detail_verify {

inline double box_violation(const Vec3& v, const Vec3& lo, const Vec3& hi) {
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    worst = std::max(worst, lo[k] - v[k]);
    worst = std::max(worst, v[k] - hi[k]);
  }
  return worst;
}

inline Vec3 angular_velocity_of(const TrajectoryVariables& traj, int t) {
  return euler_rate_matrix(traj.theta[t]) * traj.thetadot[t];
}

}  // namespace detail_verify

/// Euclidean force/moment dynamics residual per step, by direct evaluation
/// of the Euler-discretized equations of motion.
inline void dynamics_residual_profile(const Scenario& s,
                                      const TrajectoryVariables& traj,
                                      std::vector<double>& force_res,
                                      std::vector<double>& moment_res) {
  force_res.clear();
  moment_res.clear();
  const Mat3& I = s.robot.inertia;
  for (int t = 0; t < s.horizon; ++t) {
    Vec3 total = s.robot.mass * s.robot.gravity;
    for (int i = 0; i < s.robot.finger_count(); ++i)
      total += traj.lambda[t][i];
    const Vec3 fres =
        s.robot.mass * (traj.rdot[t + 1] - traj.rdot[t]) / s.dt - total;
    force_res.push_back(fres.norm());

    const Vec3 w0 = detail_verify::angular_velocity_of(traj, t);
    const Vec3 w1 = detail_verify::angular_velocity_of(traj, t + 1);
    Vec3 mres = I * ((w1 - w0) / s.dt) + w0.cross(I * w0);
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      mres -= (traj.r[t] - traj.p[t][i]).cross(traj.lambda[t][i]) +
              traj.tau[t][i];
    }
    moment_res.push_back(mres.norm());
  }
}

/// Transcription-free oracle: replays (trajectory, binaries) against the
/// raw problem equations. Collision is a geometric point-outside-cuboid
/// test; patch membership uses the exact Minkowski decomposition.
inline FeasibilityReport verify(const Scenario& s,
                                const TrajectoryVariables& traj,
                                const DiscreteVariables& disc,
                                const ToleranceSet& tol = {}) {
  using detail_verify::box_violation;
  if (!traj.shapes_match(s) || !disc.shapes_match(s)) {
    throw std::invalid_argument("verify: shapes do not match the scenario");
  }
  FeasibilityReport rep;
  rep.dynamics_force.tolerance = tol.dynamics_force;
  rep.dynamics_moment.tolerance = tol.dynamics_moment;
  rep.kinematics.tolerance = 0.0;   // normalized units, see below
  rep.contact_logic.tolerance = 0.0;
  rep.collision.tolerance = tol.collision;
  rep.bounds.tolerance = tol.bounds;

  const int N = s.horizon;
  const int nf = s.robot.finger_count();

  dynamics_residual_profile(s, traj, rep.force_residual_per_step,
                            rep.moment_residual_per_step);
  for (double v : rep.force_residual_per_step)
    rep.dynamics_force.max_violation =
        std::max(rep.dynamics_force.max_violation, v);
  for (double v : rep.moment_residual_per_step)
    rep.dynamics_moment.max_violation =
        std::max(rep.dynamics_moment.max_violation, v);

  // Kinematics: exact reach boxes, orientation boxes, pairing identities,
  // and the state-integration identities. Positions are normalized by the
  // position tolerance and rotations by the rotation tolerance so the
  // family carries mixed units; pass means every entry <= 1.
  double kin = 0.0;
  const auto kin_pos = [&](double v) {
    kin = std::max(kin, v / tol.kinematics_pos);
  };
  const auto kin_rot = [&](double v) {
    kin = std::max(kin, v / tol.kinematics_rot);
  };
  for (int t = 0; t <= N; ++t) {
    const Mat3 world_to_body = rotation_zyx(traj.theta[t]).transpose();
    for (int i = 0; i < nf; ++i) {
      const Vec3 rel = world_to_body * (traj.p[t][i] - traj.r[t]);
      kin_pos(box_violation(
          rel, s.robot.nominal_offset[i] - s.robot.offset_range[i],
          s.robot.nominal_offset[i] + s.robot.offset_range[i]));
      const Vec3 qrel = traj.q[t][i] - traj.theta[t];
      kin_rot(box_violation(
          qrel, s.robot.nominal_orientation[i] - s.robot.orientation_range[i],
          s.robot.nominal_orientation[i] + s.robot.orientation_range[i]));
    }
    for (int l = 0; l < s.robot.limb_count; ++l) {
      const auto fingers = s.robot.fingers_of(l);
      kin_pos((traj.p[t][fingers[1]] - traj.p[t][fingers[0]] - traj.d[t][l])
                  .cwiseAbs()
                  .maxCoeff());
      kin_rot((traj.q[t][fingers[1]] - traj.q[t][fingers[0]])
                  .cwiseAbs()
                  .maxCoeff());
    }
    if (t == N) break;
    kin_pos((traj.r[t + 1] - traj.r[t] - s.dt * traj.rdot[t])
                .cwiseAbs()
                .maxCoeff());
    kin_rot((traj.theta[t + 1] - traj.theta[t] - s.dt * traj.thetadot[t])
                .cwiseAbs()
                .maxCoeff());
  }
  rep.kinematics.max_violation = kin;
  rep.kinematics.tolerance = 1.0;

  // Contact logic, wrench transforms and the paired-finger coupling.
  double contact = 0.0;
  const auto con_pos = [&](double v) {
    contact = std::max(contact, v / tol.contact_pos);
  };
  const auto con_rot = [&](double v) {
    contact = std::max(contact, v / tol.contact_rot);
  };
  const auto con_force = [&](double v) {
    contact = std::max(contact, v / tol.contact_force);
  };
  for (int t = 0; t < N; ++t) {
    for (int i = 0; i < nf; ++i) {
      int active = 0;
      for (int c = 0; c < s.region_count(); ++c) active += disc.alpha[t][i][c];
      if (active > 1) contact = std::max(contact, static_cast<double>(active));

      for (int c = 0; c < s.region_count(); ++c) {
        const GraspRegion& region = s.regions[c];
        if (disc.alpha[t][i][c] == 0) {
          con_force(traj.f[t][i][c].cwiseAbs().maxCoeff());
          con_force(traj.m[t][i][c].cwiseAbs().maxCoeff());
          continue;
        }
        // Stationarity over [t, t+1].
        con_pos((traj.p[t + 1][i] - traj.p[t][i]).cwiseAbs().maxCoeff());
        con_rot((traj.q[t + 1][i] - traj.q[t][i]).cwiseAbs().maxCoeff());
        // Region membership of (p, q).
        const Vec3 local = transform_point(region.frame, traj.p[t][i]);
        con_pos(std::max(
            {std::abs(local.x()) - region.extent.x(),
             std::abs(local.y()) - region.extent.y(), std::abs(local.z())}));
        con_rot(std::abs(traj.q[t][i].z() - region.grasp_yaw()) -
                region.yaw_tolerance);
        // Patch membership via the Minkowski decomposition.
        Wrench w;
        w.force = traj.f[t][i][c];
        w.moment = traj.m[t][i][c];
        w.frame = "region/" + std::to_string(region.id);
        const double scale =
            tol.patch_membership * std::max(1.0, region.normal_force_max);
        ++rep.patch_checked;
        if (!patch_contains(patch_surface_of(region), w, scale))
          ++rep.patch_violations;
      }

      // Wrench transform identities (Eq. 13 direction).
      Vec3 lam = Vec3::Zero(), tau = Vec3::Zero();
      for (int c = 0; c < s.region_count(); ++c) {
        const Mat3 R = s.regions[c].world_rotation();
        lam += R * traj.f[t][i][c];
        tau += R * traj.m[t][i][c];
      }
      con_force((traj.lambda[t][i] - lam).cwiseAbs().maxCoeff());
      con_force((traj.tau[t][i] - tau).cwiseAbs().maxCoeff());
    }

    // Paired fingers in simultaneous contact share shear and torsion.
    for (int l = 0; l < s.robot.limb_count; ++l) {
      const auto fingers = s.robot.fingers_of(l);
      int c1 = -1, c2 = -1;
      for (int c = 0; c < s.region_count(); ++c) {
        if (disc.alpha[t][fingers[0]][c]) c1 = c;
        if (disc.alpha[t][fingers[1]][c]) c2 = c;
      }
      if (c1 < 0 || c2 < 0) continue;
      Wrench w1, w2;
      w1.force = traj.f[t][fingers[0]][c1];
      w1.moment = traj.m[t][fingers[0]][c1];
      w2.force = traj.f[t][fingers[1]][c2];
      w2.moment = traj.m[t][fingers[1]][c2];
      con_force(couple_paired_fingers(w1, w2).cwiseAbs().maxCoeff());
    }
  }
  rep.contact_logic.max_violation = contact;
  rep.contact_logic.tolerance = 1.0;

  // Collision: geometric outside-at-least-one-face test, no binaries.
  for (int t = 0; t < N; ++t) {
    for (int i = 0; i < nf; ++i) {
      for (const auto& obstacle : s.obstacles) {
        const double margin = obstacle.outside_margin(traj.p[t][i]);
        if (margin < 0.0) {
          rep.collision.max_violation =
              std::max(rep.collision.max_violation, -margin);
        }
      }
    }
  }

  // Variable bounds (Eq. 7 polytopes).
  double bounds = 0.0;
  for (int t = 0; t <= N; ++t) {
    bounds = std::max(bounds, box_violation(traj.r[t], s.bounds.r.lower,
                                            s.bounds.r.upper));
    bounds = std::max(bounds, box_violation(traj.theta[t],
                                            s.bounds.theta.lower,
                                            s.bounds.theta.upper));
    bounds = std::max(bounds, box_violation(traj.rdot[t], s.bounds.rdot.lower,
                                            s.bounds.rdot.upper));
    bounds = std::max(bounds, box_violation(traj.thetadot[t],
                                            s.bounds.thetadot.lower,
                                            s.bounds.thetadot.upper));
    for (int i = 0; i < nf; ++i) {
      bounds = std::max(bounds, box_violation(traj.p[t][i], s.bounds.p.lower,
                                              s.bounds.p.upper));
      bounds = std::max(bounds, box_violation(traj.q[t][i], s.bounds.q.lower,
                                              s.bounds.q.upper));
    }
    for (int l = 0; l < s.robot.limb_count; ++l) {
      bounds = std::max(bounds,
                        box_violation(traj.d[t][l], s.robot.separation_lower[l],
                                      s.robot.separation_upper[l]));
    }
    if (t == N) break;
    for (int i = 0; i < nf; ++i) {
      bounds = std::max(bounds, box_violation(traj.lambda[t][i],
                                              s.bounds.lambda.lower,
                                              s.bounds.lambda.upper));
      bounds = std::max(bounds, box_violation(traj.tau[t][i],
                                              s.bounds.tau.lower,
                                              s.bounds.tau.upper));
      for (int c = 0; c < s.region_count(); ++c) {
        bounds = std::max(bounds, box_violation(traj.f[t][i][c],
                                                s.bounds.f.lower,
                                                s.bounds.f.upper));
        bounds = std::max(bounds, box_violation(traj.m[t][i][c],
                                                s.bounds.m.lower,
                                                s.bounds.m.upper));
      }
    }
  }
  rep.bounds.max_violation = bounds;
  return rep;
}

}  // namespace patchplan
