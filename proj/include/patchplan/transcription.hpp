#pragma once

#include <algorithm>
#include <vector>

#include "patchplan/constraints.hpp"
#include "patchplan/contact.hpp"
#include "patchplan/layout.hpp"
#include "patchplan/model.hpp"

namespace patchplan {

namespace detail_tr {

using Coeffs = std::vector<std::pair<int, double>>;

inline void expr_interval(const Coeffs& coeffs, const Eigen::VectorXd& lb,
                          const Eigen::VectorXd& ub, double& lo, double& hi) {
  lo = hi = 0.0;
  for (const auto& [j, c] : coeffs) {
    lo += std::min(c * lb[j], c * ub[j]);
    hi += std::max(c * lb[j], c * ub[j]);
  }
}

/// Emits big-M rows enforcing l <= coeffs.v + cst <= u when every binary in
/// `ones` equals 1 and every binary in `zeros` equals 0; vacuous otherwise.
/// Per-row M comes from the variable bounds plus the scenario margin. Rows
/// already implied by the bounds are skipped.
inline void add_implication(LinearConstraintSet& set, const Scenario& s,
                            const Coeffs& coeffs, double cst, double l,
                            double u, const std::vector<int>& ones,
                            const std::vector<int>& zeros,
                            const Eigen::VectorXd& lb,
                            const Eigen::VectorXd& ub) {
  const double margin = 1.0 + s.solver.big_m_margin;
  double lo, hi;
  expr_interval(coeffs, lb, ub, lo, hi);
  lo += cst;
  hi += cst;
  const auto link = [&](int row, double m) {
    for (int b : ones) set.add_big_m_link(b, {row}, m);
    for (int b : zeros) set.add_big_m_link(b, {row}, m);
  };
  if (u < kInf && hi > u) {
    double m = (hi - u) * margin;
    if (m > s.big_m)
      throw ScenarioError("big_m", "cap smaller than a required row M");
    Coeffs row = coeffs;
    double upper = u - cst + m * static_cast<double>(ones.size());
    for (int b : ones) row.emplace_back(b, m);
    for (int b : zeros) row.emplace_back(b, -m);
    link(set.add_row(row, -kInf, upper), m);
  }
  if (l > -kInf && lo < l) {
    double m = (l - lo) * margin;
    if (m > s.big_m)
      throw ScenarioError("big_m", "cap smaller than a required row M");
    Coeffs row = coeffs;
    double lower = l - cst - m * static_cast<double>(ones.size());
    for (int b : ones) row.emplace_back(b, -m);
    for (int b : zeros) row.emplace_back(b, m);
    link(set.add_row(row, lower, kInf), m);
  }
}

}  // namespace detail_tr

/// Identity bound rows, one per variable, rows 0..n-1 in variable order.
/// The MIQP branching machinery relies on this convention.
inline LinearConstraintSet build_variable_bound_rows(
    const Scenario& s, const VariableLayout& layout) {
  Eigen::VectorXd lb, ub;
  layout_bounds(s, layout, lb, ub);
  LinearConstraintSet set(layout.total_size());
  for (int j = 0; j < layout.total_size(); ++j) {
    set.add_row({{j, 1.0}}, lb[j], ub[j]);
  }
  return set;
}

/// Stage cost over the layout: tracking, control effort, swing reward,
/// finger-separation reward, and the mode-switching quadratic.
/// `body_cost_scale` divides the body-state share among per-limb blocks.
inline QuadraticObjective build_cost(const Scenario& s,
                                     const VariableLayout& layout,
                                     double body_cost_scale = 1.0) {
  QuadraticObjective obj(layout.total_size());
  const int N = s.horizon;
  const auto& w = s.weights;

  Eigen::VectorXd goal_body(12);
  goal_body << s.goal.body.r, s.goal.body.theta, s.goal.body.rdot,
      s.goal.body.thetadot;
  Eigen::VectorXd body_weight(12);
  body_weight << w.q_r, w.q_theta, w.q_rdot, w.q_thetadot;
  body_weight *= body_cost_scale;

  const auto add_tracking3 = [&](int off, const Vec3& weight,
                                 const Vec3& goal) {
    for (int k = 0; k < 3; ++k) {
      if (weight[k] == 0.0) continue;
      obj.add_diagonal(off + k, 2.0 * weight[k]);
      obj.add_linear(off + k, -2.0 * weight[k] * goal[k]);
      obj.add_constant(weight[k] * goal[k] * goal[k]);
    }
  };

  for (int t = 0; t <= N; ++t) {
    add_tracking3(layout.r(t), body_weight.segment<3>(0),
                  goal_body.segment<3>(0));
    add_tracking3(layout.theta(t), body_weight.segment<3>(3),
                  goal_body.segment<3>(3));
    add_tracking3(layout.rdot(t), body_weight.segment<3>(6),
                  goal_body.segment<3>(6));
    add_tracking3(layout.thetadot(t), body_weight.segment<3>(9),
                  goal_body.segment<3>(9));
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (!layout.has_finger(i)) continue;
      add_tracking3(layout.p(t, i), w.q_p, s.goal.p[i]);
      add_tracking3(layout.q(t, i), w.q_q, s.goal.q[i]);
    }
    for (int l = 0; l < s.robot.limb_count; ++l) {
      if (!layout.has_gripper(l)) continue;
      const auto fingers = s.robot.fingers_of(l);
      add_tracking3(layout.d(t, l), w.q_d,
                    s.goal.p[fingers[1]] - s.goal.p[fingers[0]]);
    }
    if (t == N) break;

    if (layout.has_u()) {
      for (int i = 0; i < s.robot.finger_count(); ++i) {
        if (!layout.has_finger(i)) continue;
        for (int k = 0; k < 3; ++k) {
          obj.add_diagonal(layout.lambda(t, i) + k, 2.0 * w.r_lambda[k]);
          obj.add_diagonal(layout.tau(t, i) + k, 2.0 * w.r_tau[k]);
        }
      }
    }
    // Swing reward on finger heights and the separation reward.
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (layout.has_finger(i))
        obj.add_linear(layout.p(t, i) + 2, w.zeta_finger_z);
    }
    for (int l = 0; l < s.robot.limb_count; ++l) {
      if (!layout.has_gripper(l)) continue;
      const auto fingers = s.robot.fingers_of(l);
      if (!layout.has_finger(fingers[0])) continue;
      for (int k = 0; k < 3; ++k) {
        obj.add_linear(layout.p(t, fingers[1]) + k, w.xi[l][k]);
        obj.add_linear(layout.p(t, fingers[0]) + k, -w.xi[l][k]);
      }
    }
    // Mode-switching cost between consecutive steps.
    if (layout.has_y() && t + 1 < N) {
      const auto switch_pair = [&](int a, int b, double weight) {
        if (a < 0 || b < 0 || weight == 0.0) return;
        obj.add_diagonal(a, 2.0 * weight);
        obj.add_diagonal(b, 2.0 * weight);
        obj.add_quadratic(a, b, -2.0 * weight);
      };
      for (int i = 0; i < s.robot.finger_count(); ++i) {
        if (!layout.has_finger(i)) continue;
        for (int c = 0; c < s.region_count(); ++c) {
          switch_pair(layout.alpha(t, i, c), layout.alpha(t + 1, i, c),
                      w.s_alpha);
          switch_pair(layout.gamma(t, i, c), layout.gamma(t + 1, i, c),
                      w.s_gamma);
        }
        for (int v = 0; v < s.obstacle_count(); ++v) {
          for (int h = 0; h < 6; ++h) {
            switch_pair(layout.beta(t, i, v, h), layout.beta(t + 1, i, v, h),
                        w.s_beta);
          }
        }
      }
    }
  }
  return obj;
}

/// Euler force dynamics and the kinematic integration rows:
///   M (rdot_{t+1} - rdot_t)/dt = sum_i lambda_t^i (+ slack) + M g
///   r_{t+1} = r_t + dt rdot_t,   theta_{t+1} = theta_t + dt thetadot_t.
inline LinearConstraintSet build_linear_dynamics(const Scenario& s,
                                                 const VariableLayout& layout) {
  LinearConstraintSet set(layout.total_size());
  const double M_dt = s.robot.mass / s.dt;
  for (int t = 0; t < s.horizon; ++t) {
    for (int k = 0; k < 3; ++k) {
      detail_tr::Coeffs row = {{layout.rdot(t + 1) + k, M_dt},
                               {layout.rdot(t) + k, -M_dt}};
      if (layout.has_u()) {
        for (int i = 0; i < s.robot.finger_count(); ++i) {
          if (layout.has_finger(i))
            row.emplace_back(layout.lambda(t, i) + k, -1.0);
        }
      }
      for (int l = 0; l < s.robot.limb_count; ++l) {
        if (layout.has_slack(l)) row.emplace_back(layout.slack(t, l) + k, -1.0);
      }
      set.add_equality(row, s.robot.mass * s.robot.gravity[k]);
    }
    for (int k = 0; k < 3; ++k) {
      set.add_equality({{layout.r(t + 1) + k, 1.0},
                        {layout.r(t) + k, -1.0},
                        {layout.rdot(t) + k, -s.dt}},
                       0.0);
      set.add_equality({{layout.theta(t + 1) + k, 1.0},
                        {layout.theta(t) + k, -1.0},
                        {layout.thetadot(t) + k, -s.dt}},
                       0.0);
    }
  }
  return set;
}

/// Initial-state pin at t = 0 and the hard terminal equality on body
/// position and velocity at t = N.
inline LinearConstraintSet build_boundary_conditions(
    const Scenario& s, const VariableLayout& layout) {
  LinearConstraintSet set(layout.total_size());
  const auto pin3 = [&](int off, const Vec3& value) {
    for (int k = 0; k < 3; ++k)
      set.add_equality({{off + k, 1.0}}, value[k]);
  };
  pin3(layout.r(0), s.initial.body.r);
  pin3(layout.theta(0), s.initial.body.theta);
  pin3(layout.rdot(0), s.initial.body.rdot);
  pin3(layout.thetadot(0), s.initial.body.thetadot);
  for (int i = 0; i < s.robot.finger_count(); ++i) {
    if (!layout.has_finger(i)) continue;
    pin3(layout.p(0, i), s.initial.p[i]);
    pin3(layout.q(0, i), s.initial.q[i]);
  }
  for (int l = 0; l < s.robot.limb_count; ++l) {
    if (!layout.has_gripper(l)) continue;
    const auto fingers = s.robot.fingers_of(l);
    pin3(layout.d(0, l), s.initial.p[fingers[1]] - s.initial.p[fingers[0]]);
  }
  const int N = s.horizon;
  pin3(layout.r(N), s.goal.body.r);
  pin3(layout.rdot(N), s.goal.body.rdot);
  return set;
}

/// Finger-orientation boxes and the gripper pairing identities (the linear
/// part of the kinematics, shared by the MIQP and the NLP).
inline LinearConstraintSet build_kinematics_orientation_rows(
    const Scenario& s, const VariableLayout& layout) {
  LinearConstraintSet set(layout.total_size());
  for (int t = 0; t <= s.horizon; ++t) {
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (!layout.has_finger(i)) continue;
      const Vec3& c = s.robot.nominal_orientation[i];
      const Vec3& d = s.robot.orientation_range[i];
      for (int k = 0; k < 3; ++k) {
        set.add_row({{layout.q(t, i) + k, 1.0}, {layout.theta(t) + k, -1.0}},
                    c[k] - d[k], c[k] + d[k]);
      }
    }
    for (int l = 0; l < s.robot.limb_count; ++l) {
      if (!layout.has_gripper(l)) continue;
      const auto fingers = s.robot.fingers_of(l);
      if (!layout.has_finger(fingers[0])) continue;
      for (int k = 0; k < 3; ++k) {
        set.add_equality({{layout.p(t, fingers[1]) + k, 1.0},
                          {layout.p(t, fingers[0]) + k, -1.0},
                          {layout.d(t, l) + k, -1.0}},
                         0.0);
        set.add_equality({{layout.q(t, fingers[1]) + k, 1.0},
                          {layout.q(t, fingers[0]) + k, -1.0}},
                         0.0);
      }
    }
  }
  return set;
}

/// MIQP kinematics: reach boxes with the rotation frozen at `linearize_at`,
/// plus the shared orientation/pairing rows.
inline LinearConstraintSet build_kinematics(const Scenario& s,
                                            const VariableLayout& layout,
                                            const Vec3& linearize_at) {
  LinearConstraintSet set = build_kinematics_orientation_rows(s, layout);
  const Mat3 world_to_body = rotation_zyx(linearize_at).transpose();
  for (int t = 0; t <= s.horizon; ++t) {
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (!layout.has_finger(i)) continue;
      const Vec3& a = s.robot.nominal_offset[i];
      const Vec3& b = s.robot.offset_range[i];
      for (int k = 0; k < 3; ++k) {
        detail_tr::Coeffs row;
        for (int j = 0; j < 3; ++j) {
          row.emplace_back(layout.p(t, i) + j, world_to_body(k, j));
          row.emplace_back(layout.r(t) + j, -world_to_body(k, j));
        }
        set.add_row(row, a[k] - b[k], a[k] + b[k]);
      }
    }
  }
  return set;
}

/// World wrench from local region wrenches: lambda = sum_c R_c f,
/// tau = sum_c R_c m.
inline LinearConstraintSet build_wrench_transform(const Scenario& s,
                                                  const VariableLayout& layout) {
  LinearConstraintSet set(layout.total_size());
  for (int t = 0; t < s.horizon; ++t) {
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (!layout.has_finger(i)) continue;
      for (int k = 0; k < 3; ++k) {
        detail_tr::Coeffs frow = {{layout.lambda(t, i) + k, 1.0}};
        detail_tr::Coeffs mrow = {{layout.tau(t, i) + k, 1.0}};
        for (int c = 0; c < s.region_count(); ++c) {
          const Mat3 R = s.regions[c].world_rotation();
          for (int j = 0; j < 3; ++j) {
            frow.emplace_back(layout.f(t, i, c) + j, -R(k, j));
            mrow.emplace_back(layout.m(t, i, c) + j, -R(k, j));
          }
        }
        set.add_equality(frow, 0.0);
        set.add_equality(mrow, 0.0);
      }
    }
  }
  return set;
}

/// Contact logic (big-M form): region membership, stationarity and the
/// relaxed patch limit surface when alpha = 1; zero local wrench when
/// alpha = 0; single-contact cardinality; gripper pairing compatibility and
/// the paired-finger wrench coupling; experiment pins.
inline LinearConstraintSet build_contact_logic(const Scenario& s,
                                               const VariableLayout& layout) {
  using detail_tr::Coeffs;
  LinearConstraintSet set(layout.total_size());
  Eigen::VectorXd lb, ub;
  layout_bounds(s, layout, lb, ub);
  const int N = s.horizon;
  const double z_plane_tol = 1e-6;

  for (int t = 0; t < N; ++t) {
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (!layout.has_finger(i)) continue;
      Coeffs cardinality;
      for (int c = 0; c < s.region_count(); ++c) {
        const GraspRegion& region = s.regions[c];
        const int a = layout.alpha(t, i, c);
        cardinality.emplace_back(a, 1.0);

        // alpha = 0  =>  f = 0, m = 0.
        for (int k = 0; k < 3; ++k) {
          for (int off : {layout.f(t, i, c), layout.m(t, i, c)}) {
            if (lb[off + k] == 0.0 && ub[off + k] == 0.0) continue;
            detail_tr::add_implication(set, s, {{off + k, 1.0}}, 0.0, 0.0,
                                       0.0, {}, {a}, lb, ub);
          }
        }

        // alpha = 1  =>  (p, q) in C_c: in-plane box, on-plane, yaw aligned.
        for (int k = 0; k < 3; ++k) {
          Coeffs local;
          for (int j = 0; j < 3; ++j)
            local.emplace_back(layout.p(t, i) + j, region.frame.rotation(k, j));
          const double cst = region.frame.translation[k];
          const double half =
              k < 2 ? region.extent[k] : z_plane_tol;
          detail_tr::add_implication(set, s, local, cst, -half, half, {a}, {},
                                     lb, ub);
        }
        detail_tr::add_implication(
            set, s, {{layout.q(t, i) + 2, 1.0}}, -region.grasp_yaw(),
            -region.yaw_tolerance, region.yaw_tolerance, {a}, {}, lb, ub);

        // alpha = 1  =>  finger stationary over [t, t+1].
        for (int k = 0; k < 3; ++k) {
          detail_tr::add_implication(
              set, s,
              {{layout.p(t + 1, i) + k, 1.0}, {layout.p(t, i) + k, -1.0}}, 0.0,
              0.0, 0.0, {a}, {}, lb, ub);
          detail_tr::add_implication(
              set, s,
              {{layout.q(t + 1, i) + k, 1.0}, {layout.q(t, i) + k, -1.0}}, 0.0,
              0.0, 0.0, {a}, {}, lb, ub);
        }

        // alpha = 1  =>  normal force window (Eq. 2 bounds).
        detail_tr::add_implication(set, s, {{layout.f(t, i, c) + 2, 1.0}},
                                   0.0, 0.0, region.normal_force_max, {a}, {},
                                   lb, ub);

        const bool pin_zero_normal =
            s.experiment.pin_zero_normal_finger == i;
        if (pin_zero_normal) {
          set.add_equality({{layout.f(t, i, c) + 2, 1.0}}, 0.0);
        }
        if (s.experiment.pin_contact_wrench) {
          detail_tr::add_implication(set, s, {{layout.f(t, i, c), 1.0}}, 0.0,
                                     s.experiment.pinned_fx,
                                     s.experiment.pinned_fx, {a}, {}, lb, ub);
          detail_tr::add_implication(set, s, {{layout.m(t, i, c) + 2, 1.0}},
                                     0.0, s.experiment.pinned_mz,
                                     s.experiment.pinned_mz, {a}, {}, lb, ub);
        }

        if (!s.experiment.enforce_patch_constraints) continue;

        // Relaxed patch limit surface: friction linearization shifted by the
        // spine caps (sound outer model; the verifier checks the exact set).
        const double mu = region.friction;
        const double k_c = region.torsion_constant;
        const int fx = layout.f(t, i, c);
        const int mz = layout.m(t, i, c) + 2;
        const int g = layout.gamma(t, i, c);
        if (g >= 0) {
          const int mp = layout.m_plus(t, i, c);
          const int mm = layout.m_minus(t, i, c);
          const double shift[2] = {region.spine_fx_max, region.spine_fy_max};
          for (int axis = 0; axis < 2; ++axis) {
            for (int msl : {mp, mm}) {
              for (double sign : {1.0, -1.0}) {
                detail_tr::add_implication(
                    set, s,
                    {{fx + axis, sign}, {fx + 2, -mu}, {msl, 1.0 / k_c}}, 0.0,
                    -kInf, shift[axis], {a}, {}, lb, ub);
              }
            }
          }
          for (double sign : {1.0, -1.0}) {
            detail_tr::add_implication(
                set, s, {{mz, sign}, {fx + 2, -k_c * mu}}, 0.0, -kInf,
                region.spine_tz_max, {a}, {}, lb, ub);
          }
          // m^z = m^z_+ - m^z_- and the gamma exclusivity (always on).
          set.add_equality({{mz, 1.0}, {mp, -1.0}, {mm, 1.0}}, 0.0);
          const double m_mag = std::max(std::abs(s.bounds.m.lower.z()),
                                        std::abs(s.bounds.m.upper.z())) *
                               (1.0 + s.solver.big_m_margin);
          const int row_minus =
              set.add_row({{mm, 1.0}, {g, m_mag}}, -kInf, m_mag);
          const int row_plus = set.add_row({{mp, 1.0}, {g, -m_mag}}, -kInf, 0.0);
          set.add_big_m_link(g, {row_minus, row_plus}, m_mag);
        } else {
          // Degenerate torsion: no split, the torsion window collapses.
          const double shift[2] = {region.spine_fx_max, region.spine_fy_max};
          for (int axis = 0; axis < 2; ++axis) {
            for (double sign : {1.0, -1.0}) {
              detail_tr::add_implication(set, s,
                                         {{fx + axis, sign}, {fx + 2, -mu}},
                                         0.0, -kInf, shift[axis], {a}, {}, lb,
                                         ub);
            }
          }
          const double torsion_cap =
              k_c * mu * region.normal_force_max + region.spine_tz_max;
          detail_tr::add_implication(set, s, {{mz, 1.0}}, 0.0, -torsion_cap,
                                     torsion_cap, {a}, {}, lb, ub);
        }
      }
      set.add_row(cardinality, -kInf, 1.0);
    }

    // Gripper pairing: incompatible region pairs exclude simultaneous
    // contact; compatible pairs couple the patch shear/torsion (Eq. 4 of
    // the patch model).
    for (int l = 0; l < s.robot.limb_count; ++l) {
      if (!layout.has_gripper(l)) continue;
      const auto fingers = s.robot.fingers_of(l);
      if (!layout.has_finger(fingers[0])) continue;
      for (int c = 0; c < s.region_count(); ++c) {
        const int a1 = layout.alpha(t, fingers[0], c);
        for (int c2 = 0; c2 < s.region_count(); ++c2) {
          const int a2 = layout.alpha(t, fingers[1], c2);
          const bool compatible =
              s.regions[c].paired_with < 0 ||
              s.regions[c].paired_with == s.regions[c2].id;
          if (!compatible) {
            set.add_row({{a1, 1.0}, {a2, 1.0}}, -kInf, 1.0);
            continue;
          }
          const int slots1[3] = {layout.f(t, fingers[0], c),
                                 layout.f(t, fingers[0], c) + 1,
                                 layout.m(t, fingers[0], c) + 2};
          const int slots2[3] = {layout.f(t, fingers[1], c2),
                                 layout.f(t, fingers[1], c2) + 1,
                                 layout.m(t, fingers[1], c2) + 2};
          for (int k = 0; k < 3; ++k) {
            detail_tr::add_implication(set, s,
                                       {{slots1[k], 1.0}, {slots2[k], -1.0}},
                                       0.0, 0.0, 0.0, {a1, a2}, {}, lb, ub);
          }
        }
      }
    }
  }
  return set;
}

/// Collision avoidance: beta = 0 activates the face's outer halfspace;
/// at least one face per obstacle must stay active.
inline LinearConstraintSet build_collision(const Scenario& s,
                                           const VariableLayout& layout) {
  LinearConstraintSet set(layout.total_size());
  Eigen::VectorXd lb, ub;
  layout_bounds(s, layout, lb, ub);
  for (int t = 0; t < s.horizon; ++t) {
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (!layout.has_finger(i)) continue;
      for (int v = 0; v < s.obstacle_count(); ++v) {
        const Obstacle& obstacle = s.obstacles[v];
        detail_tr::Coeffs cardinality;
        for (int h = 0; h < 6; ++h) {
          const ObstacleFace& face = obstacle.faces[h];
          const int b = layout.beta(t, i, v, h);
          cardinality.emplace_back(b, 1.0);
          detail_tr::Coeffs row;
          for (int j = 0; j < 3; ++j)
            row.emplace_back(layout.p(t, i) + j, face.world_row[j]);
          detail_tr::add_implication(set, s, row, 0.0, -kInf,
                                     face.world_offset, {}, {b}, lb, ub);
        }
        set.add_row(cardinality, -kInf, 5.0);
      }
    }
  }
  return set;
}

/// Full nonlinear dynamics (forces and moments under explicit Euler with
/// omega = E(theta) thetadot) and the exact rotation-dependent reach boxes.
/// Analytic jacobians throughout.
inline SmoothConstraintSet build_smooth_dynamics(const Scenario& s,
                                                 const VariableLayout& layout) {
  SmoothConstraintSet set(layout.total_size());
  const Scenario* sp = &s;
  const VariableLayout lay = layout;
  const int N = s.horizon;
  const double dt = s.dt;

  std::vector<int> fingers;
  for (int i = 0; i < s.robot.finger_count(); ++i) {
    if (layout.has_finger(i)) fingers.push_back(i);
  }

  for (int t = 0; t < N; ++t) {
    {
      SmoothConstraint force;
      force.name = "force_dynamics/" + std::to_string(t);
      force.dim = 3;
      force.lower = Eigen::VectorXd::Zero(3);
      force.upper = Eigen::VectorXd::Zero(3);
      for (int k = 0; k < 3; ++k) {
        force.variables.push_back(lay.rdot(t) + k);
        force.variables.push_back(lay.rdot(t + 1) + k);
        for (int i : fingers) force.variables.push_back(lay.lambda(t, i) + k);
      }
      force.eval = [sp, lay, t, dt, fingers](const Eigen::VectorXd& v,
                                             Eigen::Ref<Eigen::VectorXd> out) {
        Vec3 acc = (v.segment<3>(lay.rdot(t + 1)) - v.segment<3>(lay.rdot(t))) /
                   dt;
        Vec3 total = sp->robot.mass * sp->robot.gravity;
        for (int i : fingers) total += v.segment<3>(lay.lambda(t, i));
        out = sp->robot.mass * acc - total;
      };
      force.jacobian = [sp, lay, t, dt, fingers](const Eigen::VectorXd&,
                                                 int row,
                                                 std::vector<Triplet>& jac) {
        const double mdt = sp->robot.mass / dt;
        for (int k = 0; k < 3; ++k) {
          jac.emplace_back(row + k, lay.rdot(t + 1) + k, mdt);
          jac.emplace_back(row + k, lay.rdot(t) + k, -mdt);
          for (int i : fingers)
            jac.emplace_back(row + k, lay.lambda(t, i) + k, -1.0);
        }
      };
      set.add(std::move(force));
    }
    {
      SmoothConstraint moment;
      moment.name = "moment_dynamics/" + std::to_string(t);
      moment.dim = 3;
      moment.lower = Eigen::VectorXd::Zero(3);
      moment.upper = Eigen::VectorXd::Zero(3);
      for (int k = 0; k < 3; ++k) {
        moment.variables.push_back(lay.theta(t) + k);
        moment.variables.push_back(lay.thetadot(t) + k);
        moment.variables.push_back(lay.theta(t + 1) + k);
        moment.variables.push_back(lay.thetadot(t + 1) + k);
        moment.variables.push_back(lay.r(t) + k);
        for (int i : fingers) {
          moment.variables.push_back(lay.p(t, i) + k);
          moment.variables.push_back(lay.lambda(t, i) + k);
          moment.variables.push_back(lay.tau(t, i) + k);
        }
      }
      moment.eval = [sp, lay, t, dt, fingers](const Eigen::VectorXd& v,
                                              Eigen::Ref<Eigen::VectorXd> out) {
        const Mat3& I = sp->robot.inertia;
        const Vec3 th0 = v.segment<3>(lay.theta(t));
        const Vec3 th1 = v.segment<3>(lay.theta(t + 1));
        const Vec3 w0 = euler_rate_matrix(th0) * v.segment<3>(lay.thetadot(t));
        const Vec3 w1 =
            euler_rate_matrix(th1) * v.segment<3>(lay.thetadot(t + 1));
        Vec3 res = I * ((w1 - w0) / dt) + w0.cross(I * w0);
        const Vec3 r = v.segment<3>(lay.r(t));
        for (int i : fingers) {
          const Vec3 p = v.segment<3>(lay.p(t, i));
          const Vec3 lam = v.segment<3>(lay.lambda(t, i));
          res -= (r - p).cross(lam) + v.segment<3>(lay.tau(t, i));
        }
        out = res;
      };
      moment.jacobian = [sp, lay, t, dt, fingers](const Eigen::VectorXd& v,
                                                  int row,
                                                  std::vector<Triplet>& jac) {
        const Mat3& I = sp->robot.inertia;
        const Vec3 th0 = v.segment<3>(lay.theta(t));
        const Vec3 th1 = v.segment<3>(lay.theta(t + 1));
        const Vec3 thd0 = v.segment<3>(lay.thetadot(t));
        const Vec3 thd1 = v.segment<3>(lay.thetadot(t + 1));
        const Mat3 E0 = euler_rate_matrix(th0);
        const Mat3 E1 = euler_rate_matrix(th1);
        const Vec3 w0 = E0 * thd0;
        Mat3 W0, W1;  // d(omega)/d(theta)
        for (int j = 0; j < 3; ++j) {
          W0.col(j) = euler_rate_matrix_derivative(th0, j) * thd0;
          W1.col(j) = euler_rate_matrix_derivative(th1, j) * thd1;
        }
        const Mat3 gyro = skew(w0) * I - skew(I * w0);
        const Mat3 d_th0 = (-I / dt + gyro) * W0;
        const Mat3 d_thd0 = (-I / dt + gyro) * E0;
        const Mat3 d_th1 = (I / dt) * W1;
        const Mat3 d_thd1 = (I / dt) * E1;
        const auto put3 = [&](int col, const Mat3& m) {
          for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
              if (m(a, b) != 0.0) jac.emplace_back(row + a, col + b, m(a, b));
            }
          }
        };
        put3(lay.theta(t), d_th0);
        put3(lay.thetadot(t), d_thd0);
        put3(lay.theta(t + 1), d_th1);
        put3(lay.thetadot(t + 1), d_thd1);
        const Vec3 r = v.segment<3>(lay.r(t));
        Mat3 d_r = Mat3::Zero();
        for (int i : fingers) {
          const Vec3 p = v.segment<3>(lay.p(t, i));
          const Vec3 lam = v.segment<3>(lay.lambda(t, i));
          d_r += skew(lam);
          put3(lay.p(t, i), -skew(lam));
          put3(lay.lambda(t, i), -skew(r - p));
          put3(lay.tau(t, i), -Mat3::Identity());
        }
        put3(lay.r(t), d_r);
      };
      set.add(std::move(moment));
    }
  }

  // Exact reach boxes: R(theta) (p - r) within [a - b, a + b].
  for (int t = 0; t <= N; ++t) {
    for (int i : fingers) {
      SmoothConstraint reach;
      reach.name =
          "reach/" + std::to_string(t) + "/" + std::to_string(i);
      reach.dim = 3;
      reach.lower = sp->robot.nominal_offset[i] - sp->robot.offset_range[i];
      reach.upper = sp->robot.nominal_offset[i] + sp->robot.offset_range[i];
      for (int k = 0; k < 3; ++k) {
        reach.variables.push_back(lay.theta(t) + k);
        reach.variables.push_back(lay.r(t) + k);
        reach.variables.push_back(lay.p(t, i) + k);
      }
      reach.eval = [lay, t, i](const Eigen::VectorXd& v,
                               Eigen::Ref<Eigen::VectorXd> out) {
        const Mat3 R = rotation_zyx(v.segment<3>(lay.theta(t))).transpose();
        out = R * (v.segment<3>(lay.p(t, i)) - v.segment<3>(lay.r(t)));
      };
      reach.jacobian = [lay, t, i](const Eigen::VectorXd& v, int row,
                                   std::vector<Triplet>& jac) {
        const Vec3 th = v.segment<3>(lay.theta(t));
        const Vec3 rel =
            v.segment<3>(lay.p(t, i)) - v.segment<3>(lay.r(t));
        const Mat3 R = rotation_zyx(th).transpose();
        const auto put3 = [&](int col, const Mat3& m) {
          for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
              if (m(a, b) != 0.0) jac.emplace_back(row + a, col + b, m(a, b));
            }
          }
        };
        Mat3 d_th;
        for (int j = 0; j < 3; ++j)
          d_th.col(j) = rotation_zyx_derivative(th, j).transpose() * rel;
        put3(lay.theta(t), d_th);
        put3(lay.p(t, i), R);
        put3(lay.r(t), -R);
      };
      set.add(std::move(reach));
    }
  }
  return set;
}

}  // namespace patchplan
