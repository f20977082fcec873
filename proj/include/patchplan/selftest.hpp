#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "patchplan/admm.hpp"
#include "patchplan/miqp.hpp"
#include "patchplan/nlp.hpp"
#include "patchplan/transcription.hpp"
#include "patchplan/verifier.hpp"

namespace patchplan {

struct SelftestResult {
  std::string name;
  int total = 0;
  int failures = 0;
  int first_failing_case = -1;
  bool pass() const { return failures == 0; }
};

/// Small single-gripper scenario used by the randomized suites: two fingers
/// hovering over a flat patch, optionally a second elevated patch and one
/// obstacle off to the side.
inline Scenario make_tiny_scenario(std::mt19937_64& rng, int horizon,
                                   int regions, bool with_obstacle) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Scenario s;
  s.name = "selftest";
  s.robot.mass = 1.0 + u01(rng);
  s.robot.inertia = Vec3(0.05, 0.06, 0.07).asDiagonal();
  s.robot.gravity = Vec3(0, 0, -9.81);
  s.robot.limb_count = 1;
  s.robot.nominal_offset = {Vec3(-0.05, 0, -0.2), Vec3(0.05, 0, -0.2)};
  s.robot.offset_range = {Vec3(0.3, 0.3, 0.3), Vec3(0.3, 0.3, 0.3)};
  s.robot.nominal_orientation = {Vec3::Zero(), Vec3::Zero()};
  s.robot.orientation_range = {Vec3(0.3, 0.3, 3.2), Vec3(0.3, 0.3, 3.2)};
  s.robot.separation_lower = {Vec3(-0.3, -0.3, -0.3)};
  s.robot.separation_upper = {Vec3(0.3, 0.3, 0.3)};

  for (int c = 0; c < regions; ++c) {
    GraspRegion region;
    region.id = c;
    const double height = c * 0.1;
    region.frame = RigidTransform{Mat3::Identity(), Vec3(0, 0, -height)};
    region.extent << 1.0, 1.0;
    region.friction = 0.6 + 0.4 * u01(rng);
    region.patch_radius = 0.02;
    region.torsion_constant = 0.67 * region.patch_radius;
    region.normal_force_max = 30.0;
    region.spine_fx_max = 2.0;
    region.spine_fy_max = 2.0;
    region.spine_tz_max = 0.2;
    region.yaw_tolerance = 3.2;
    region.paired_with = c;
    s.regions.push_back(region);
  }
  if (with_obstacle) {
    Obstacle obstacle;
    obstacle.id = 0;
    obstacle.frame = RigidTransform{Mat3::Identity(), Vec3(-0.6, 0, -0.15)};
    obstacle.half_extents = Vec3(0.1, 0.1, 0.1);
    derive_obstacle_faces(obstacle);
    s.obstacles.push_back(obstacle);
  }

  s.horizon = horizon;
  s.dt = 0.1;

  StateSnapshot stance;
  stance.body.r = Vec3(0, 0, 0.2);
  stance.p = {Vec3(-0.05, 0, 0), Vec3(0.05, 0, 0)};
  stance.q = {Vec3::Zero(), Vec3::Zero()};
  s.initial = stance;
  s.goal = stance;

  s.weights.q_r = Vec3(1, 1, 1);
  s.weights.q_theta = Vec3(0.5, 0.5, 0.5);
  s.weights.q_rdot = Vec3(0.1, 0.1, 0.1);
  s.weights.q_thetadot = Vec3(0.1, 0.1, 0.1);
  s.weights.q_p = Vec3(0.5, 0.5, 0.5);
  s.weights.q_q = Vec3(0.05, 0.05, 0.05);
  s.weights.q_d = Vec3::Zero();
  s.weights.r_lambda = Vec3(1e-3, 1e-3, 1e-3);
  s.weights.r_tau = Vec3(1e-3, 1e-3, 1e-3);
  s.weights.s_alpha = 0.02;
  s.weights.s_beta = 0.0;
  s.weights.s_gamma = 0.0;
  s.weights.zeta_finger_z = -0.5;
  s.weights.xi = {Vec3(-0.05, 0, 0)};

  s.bounds.r = {Vec3(-2, -2, 0), Vec3(2, 2, 1)};
  s.bounds.theta = {Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5)};
  s.bounds.rdot = {Vec3(-3, -3, -3), Vec3(3, 3, 3)};
  s.bounds.thetadot = {Vec3(-3, -3, -3), Vec3(3, 3, 3)};
  s.bounds.p = {Vec3(-2, -2, -0.1), Vec3(2, 2, 1)};
  s.bounds.q = {Vec3(-3.3, -3.3, -3.3), Vec3(3.3, 3.3, 3.3)};
  s.bounds.lambda = {Vec3(-60, -60, -60), Vec3(60, 60, 60)};
  s.bounds.tau = {Vec3(-3, -3, -3), Vec3(3, 3, 3)};
  s.bounds.f = {Vec3(-40, -40, -40), Vec3(40, 40, 40)};
  s.bounds.m = {Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5)};
  s.big_m = 1e4;
  s.validate();
  return s;
}

/// Static two-finger stance on region 0 balancing gravity exactly; the
/// optional shear adds a matching body acceleration and a normal-force
/// imbalance so the moment equation still closes.
inline void make_stance_candidate(const Scenario& s, double shear,
                                  TrajectoryVariables& traj,
                                  DiscreteVariables& disc) {
  traj = TrajectoryVariables::zeros(s);
  disc = DiscreteVariables::zeros(s);
  const double weight = s.robot.mass * 9.81;
  Vec3 r = s.initial.body.r;
  Vec3 rdot = Vec3::Zero();
  for (int t = 0; t <= s.horizon; ++t) {
    traj.r[t] = r;
    traj.rdot[t] = rdot;
    traj.p[t][0] = s.initial.p[0];
    traj.p[t][1] = s.initial.p[1];
    traj.d[t][0] = s.initial.p[1] - s.initial.p[0];
    r += s.dt * rdot;
    rdot += s.dt * Vec3(2.0 * shear / s.robot.mass, 0, 0);
  }
  for (int t = 0; t < s.horizon; ++t) {
    // Normal-force imbalance that zeros the pitch moment of the shear pair
    // at the body's current x offset (ground contacts at z = 0, height h).
    const double h = traj.r[t].z();
    const double dx = traj.r[t].x() - s.initial.body.r.x();
    const double w_diff = (dx * weight - 2.0 * h * shear) / 0.05;
    const double w1 = 0.5 * (weight - w_diff);
    const double w2 = 0.5 * (weight + w_diff);
    disc.alpha[t][0][0] = 1;
    disc.alpha[t][1][0] = 1;
    disc.gamma[t][0][0] = 1;
    disc.gamma[t][1][0] = 1;
    traj.f[t][0][0] = Vec3(shear, 0, w1);
    traj.f[t][1][0] = Vec3(shear, 0, w2);
    traj.lambda[t][0] = traj.f[t][0][0];  // region 0 frame is identity
    traj.lambda[t][1] = traj.f[t][1][0];
  }
}

// ---------------------------------------------------------------------------
// Suite 1: QP against a dense KKT factorization on random equality-
// constrained problems.
// ---------------------------------------------------------------------------
inline SelftestResult selftest_qp_vs_kkt(std::uint64_t seed, int cases) {
  SelftestResult res;
  res.name = "qp_vs_kkt";
  res.total = cases;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nd(2, 8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < cases; ++k) {
    const int n = nd(rng);
    std::uniform_int_distribution<int> md(1, n - 1);
    const int m = md(rng);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) L(i, j) = g(rng);
      L(i, i) += 2.0;
    }
    const Eigen::MatrixXd P = L * L.transpose();
    Eigen::VectorXd q(n);
    for (int i = 0; i < n; ++i) q[i] = g(rng);
    Eigen::MatrixXd A(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = g(rng);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) b[i] = g(rng);

    // Dense KKT oracle.
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
    kkt.topLeftCorner(n, n) = P;
    kkt.topRightCorner(n, m) = A.transpose();
    kkt.bottomLeftCorner(m, n) = A;
    Eigen::VectorXd rhs(n + m);
    rhs.head(n) = -q;
    rhs.tail(m) = b;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);

    QpProblem p;
    p.objective = QuadraticObjective(n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) p.objective.add_quadratic(i, j, P(i, j));
      p.objective.add_linear(i, q[i]);
    }
    p.constraints = LinearConstraintSet(n);
    for (int i = 0; i < m; ++i) {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < n; ++j) row.emplace_back(j, A(i, j));
      p.constraints.add_equality(row, b[i]);
    }
    const SolveReport rep = solve_qp(p, 1e-8);
    const bool ok = rep.status == SolveStatus::Optimal &&
                    (rep.primal - sol.head(n)).cwiseAbs().maxCoeff() <= 1e-6;
    if (!ok) {
      ++res.failures;
      if (res.first_failing_case < 0) res.first_failing_case = k;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Suite 2: branch-and-bound against exhaustive binary enumeration.
// ---------------------------------------------------------------------------
inline SelftestResult selftest_miqp_vs_enumeration(std::uint64_t seed,
                                                   int cases) {
  SelftestResult res;
  res.name = "miqp_vs_enumeration";
  res.total = cases;
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> nbd(1, 8);
  std::uniform_int_distribution<int> ncd(2, 12);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  for (int k = 0; k < cases; ++k) {
    const int nb = nbd(rng);
    const int nc = ncd(rng);
    const int n = nc + nb;
    MiqpProblem p;
    p.qp.objective = QuadraticObjective(n);
    for (int j = 0; j < n; ++j) {
      p.qp.objective.add_diagonal(j, 0.5 + u01(rng));
      p.qp.objective.add_linear(j, 2.0 * g(rng));
    }
    for (int j = 1; j < n; ++j) {
      if (u01(rng) < 0.3)
        p.qp.objective.add_quadratic(j - 1, j, 0.2 * u01(rng));
    }
    p.qp.constraints = LinearConstraintSet(n);
    for (int j = 0; j < nc; ++j) p.qp.constraints.add_row({{j, 1.0}}, -5, 5);
    for (int j = nc; j < n; ++j) {
      p.qp.constraints.add_row({{j, 1.0}}, 0, 1);
      p.binary_indices.push_back(j);
      p.binary_bound_rows.push_back(j);
    }
    // A few coupling rows, including big-M style activations.
    const int extra = 1 + static_cast<int>(u01(rng) * 3);
    for (int e = 0; e < extra; ++e) {
      const int jc = static_cast<int>(u01(rng) * nc);
      const int jb = nc + static_cast<int>(u01(rng) * nb);
      const double big_m = 5.5;
      const int row =
          p.qp.constraints.add_row({{jc, 1.0}, {jb, -big_m}}, -kInf, 0.0);
      p.qp.constraints.add_big_m_link(jb, {row}, big_m);
    }
    if (u01(rng) < 0.5) {
      std::vector<std::pair<int, double>> row;
      for (int j = nc; j < n; ++j) row.emplace_back(j, 1.0);
      p.qp.constraints.add_row(row, -kInf, std::max(1, nb - 1));
    }

    // Enumeration oracle over all binary fixings.
    double best = kInf;
    QpSettings qset;
    QpSolver enumerator(p.qp.objective.quadratic(), p.qp.objective.linear(),
                        p.qp.constraints.matrix(), p.qp.constraints.lower(),
                        p.qp.constraints.upper(), qset);
    for (int mask = 0; mask < (1 << nb); ++mask) {
      for (int b = 0; b < nb; ++b) {
        const double v = (mask >> b) & 1;
        enumerator.set_bound_row(nc + b, v, v);
      }
      enumerator.reset_state();
      const SolveReport rep = enumerator.solve(1e-8);
      if (rep.status == SolveStatus::Optimal) best = std::min(best, rep.objective);
    }

    const SolveReport rep = solve_miqp(p, 1e-8, 1e-6);
    bool ok;
    if (best >= kInf) {
      ok = rep.status == SolveStatus::Infeasible;
    } else {
      ok = rep.status == SolveStatus::Optimal &&
           std::abs(rep.objective - best) <=
               1e-6 * std::max(1.0, std::abs(best));
      if (ok) {
        // Returned binaries must be integral and feasible under the links.
        for (int j : p.binary_indices) {
          const double v = rep.primal[j];
          if (v != 0.0 && v != 1.0) ok = false;
        }
        if (p.qp.constraints.max_violation(rep.primal) > 1e-5) ok = false;
      }
    }
    if (!ok) {
      ++res.failures;
      if (res.first_failing_case < 0) res.first_failing_case = k;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Suite 3: analytic jacobians of the smooth constraint set against central
// finite differences at random points.
// ---------------------------------------------------------------------------
inline SelftestResult selftest_jacobians(std::uint64_t seed, int points) {
  SelftestResult res;
  res.name = "jacobian_vs_fd";
  res.total = points;
  std::mt19937_64 rng(seed + 2);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  Scenario s = make_tiny_scenario(rng, 2, 1, false);
  const VariableLayout layout = VariableLayout::consensus(s);
  const SmoothConstraintSet smooth = build_smooth_dynamics(s, layout);
  for (int k = 0; k < points; ++k) {
    Eigen::VectorXd v(layout.total_size());
    for (int j = 0; j < v.size(); ++j) v[j] = u(rng);
    if (!smooth.check_jacobians(v, 1e-5)) {
      ++res.failures;
      if (res.first_failing_case < 0) res.first_failing_case = k;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Suite 4: transcription <-> verifier equivalence on randomized small
// instances. Candidates are sampled at the kinematics linearization point
// and with single-shear-axis wrenches, where the linearized families and
// the exact sets coincide.
// ---------------------------------------------------------------------------
namespace detail_selftest {

/// True iff the candidate satisfies every built constraint set: the MIQP
/// rows (with the torsion split packed canonically) and the smooth set.
inline bool transcription_feasible(const Scenario& s,
                                   const TrajectoryVariables& traj,
                                   const DiscreteVariables& disc,
                                   double tol = 1e-6) {
  const VariableLayout layout = VariableLayout::full(s);
  const Eigen::VectorXd v = pack_variables(s, layout, traj, disc);
  LinearConstraintSet rows = build_variable_bound_rows(s, layout);
  rows.append(build_linear_dynamics(s, layout));
  rows.append(build_kinematics(s, layout, s.solver.kinematics_linearization));
  rows.append(build_contact_logic(s, layout));
  rows.append(build_wrench_transform(s, layout));
  rows.append(build_collision(s, layout));
  if (rows.max_violation(v) > tol) return false;
  const SmoothConstraintSet smooth = build_smooth_dynamics(s, layout);
  const Eigen::VectorXd c = smooth.eval(v);
  const Eigen::VectorXd lo = smooth.lower();
  const Eigen::VectorXd hi = smooth.upper();
  for (int i = 0; i < c.size(); ++i) {
    if (c[i] < lo[i] - tol || c[i] > hi[i] + tol) return false;
  }
  return true;
}

inline bool verifier_feasible(const Scenario& s,
                              const TrajectoryVariables& traj,
                              const DiscreteVariables& disc) {
  ToleranceSet tol;
  tol.dynamics_force = 1e-6;
  tol.dynamics_moment = 1e-6;
  tol.kinematics_pos = 1e-6;
  tol.kinematics_rot = 1e-6;
  tol.contact_pos = 1e-6;
  tol.contact_rot = 1e-6;
  tol.contact_force = 1e-6;
  tol.collision = 1e-9;
  tol.bounds = 1e-7;
  return verify(s, traj, disc, tol).pass();
}

}  // namespace detail_selftest

inline SelftestResult selftest_transcription_vs_verifier(std::uint64_t seed,
                                                         int instances) {
  SelftestResult res;
  res.name = "transcription_vs_verifier";
  res.total = instances;
  std::mt19937_64 rng(seed + 3);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  for (int k = 0; k < instances; ++k) {
    const int horizon = 2 + static_cast<int>(u01(rng) * 2);
    const int regions = 1 + static_cast<int>(u01(rng) * 2);
    const bool with_obstacle = u01(rng) < 0.5;
    Scenario s = make_tiny_scenario(rng, horizon, regions, with_obstacle);

    bool case_ok = true;
    const auto check = [&](const TrajectoryVariables& traj,
                           const DiscreteVariables& disc) {
      const bool a = detail_selftest::transcription_feasible(s, traj, disc);
      const bool b = detail_selftest::verifier_feasible(s, traj, disc);
      if (a != b) case_ok = false;
    };

    TrajectoryVariables traj;
    DiscreteVariables disc;
    // Balanced stance, optionally with a single-axis shear inside the
    // linearized surface.
    const double mu = s.regions[0].friction;
    const double max_shear =
        0.25 * mu * (0.5 * s.robot.mass * 9.81) + 0.5 * s.regions[0].spine_fx_max;
    make_stance_candidate(s, u01(rng) < 0.5 ? 0.0 : 0.3 * max_shear, traj,
                          disc);
    check(traj, disc);

    // Targeted single-family breakages; both routes must flag each.
    {
      auto t2 = traj;
      t2.p[1][0].x() += 0.05;  // moves while alpha = 1
      check(t2, disc);
    }
    {
      auto t2 = traj;
      t2.f[0][0][0].z() = -1.0;  // negative normal force
      t2.lambda[0][0].z() = -1.0;
      check(t2, disc);
    }
    {
      auto t2 = traj;
      t2.lambda[0][0].setZero();
      t2.f[0][0][0].setZero();  // unbalanced force dynamics
      check(t2, disc);
    }
    if (regions > 1) {
      auto d2 = disc;
      d2.alpha[0][0][1] = 1;  // double contact
      check(traj, d2);
    }
    {
      auto t2 = traj;
      const double cap = mu * t2.f[0][0][0].z() + s.regions[0].spine_fx_max;
      t2.f[0][0][0].x() = 1.3 * cap;  // beyond the shear surface
      t2.lambda[0][0].x() = t2.f[0][0][0].x();
      check(t2, disc);
    }
    {
      auto t2 = traj;
      t2.lambda[1][1].x() += 2.0;  // breaks the wrench transform identity
      check(t2, disc);
    }
    if (with_obstacle) {
      auto t2 = traj;
      auto d2 = disc;
      const RigidTransform to_world = s.obstacles[0].frame.inverse();
      // Plant a free finger inside the obstacle while keeping it out of
      // contact; stationarity no longer binds it.
      for (int t = 0; t <= s.horizon; ++t) t2.p[t][1] = to_world.translation;
      for (int t = 0; t < s.horizon; ++t) {
        d2.alpha[t][1][0] = 0;
        t2.f[t][1][0].setZero();
        t2.lambda[t][1].setZero();
        d2.beta[t][1][0] = {0, 1, 1, 1, 1, 1};
      }
      check(t2, d2);
    }
    {
      auto t2 = traj;
      t2.rdot[1].x() = 5.0;  // outside the velocity box
      check(t2, disc);
    }

    if (!case_ok) {
      ++res.failures;
      if (res.first_failing_case < 0) res.first_failing_case = k;
    }
  }
  return res;
}

inline std::vector<SelftestResult> run_selftests(std::uint64_t seed,
                                                 int counts) {
  std::vector<SelftestResult> out;
  out.push_back(selftest_qp_vs_kkt(seed, counts));
  out.push_back(selftest_miqp_vs_enumeration(seed, counts));
  out.push_back(selftest_jacobians(seed, counts));
  out.push_back(selftest_transcription_vs_verifier(seed, (counts + 1) / 2));
  return out;
}

}  // namespace patchplan
