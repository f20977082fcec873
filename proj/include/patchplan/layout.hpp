#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "patchplan/model.hpp"

namespace patchplan {

/// Residual bookkeeping groups; together they partition every consensus slot.
enum class SlotGroup { Position, Rotation, Force, Moment };

/// Flat variable layout over the horizon, time-major:
///   [x_0 u_0 (slack_0) y_0 z_0 aux_0] ... [x_{N-1} ...] [x_N]
/// with x = (r, theta, rdot, thetadot, p_i..., q_i..., d_l...),
/// u = (lambda_i..., tau_i...), y = (f_{i,c}..., m_{i,c}...),
/// z = (alpha, beta, gamma) and aux = (m^z_+, m^z_-) per torsion region.
/// A layout may cover a subset of fingers/grippers (per-limb blocks) and may
/// omit u/y; accessors always take global finger/gripper indices.
class VariableLayout {
 public:
  struct Options {
    std::vector<int> fingers;   // global finger indices (sorted)
    std::vector<int> grippers;  // global gripper indices (sorted)
    bool include_u = true;
    bool include_y = true;      // local wrenches + binaries + torsion split
    /// Grippers that get a per-step 3-vector "other limbs' force" slot:
    /// the slack in a limb MIQP, the matching aux copy in the NLP block.
    std::vector<int> slack_grippers;
  };

  VariableLayout() = default;

  VariableLayout(const Scenario& s, Options opt)
      : scenario_(&s), opt_(std::move(opt)) {
    N_ = s.horizon;
    C_ = s.region_count();
    V_ = s.obstacle_count();
    finger_pos_.assign(s.robot.finger_count(), -1);
    for (size_t k = 0; k < opt_.fingers.size(); ++k)
      finger_pos_[opt_.fingers[k]] = static_cast<int>(k);
    gripper_pos_.assign(s.robot.limb_count, -1);
    for (size_t k = 0; k < opt_.grippers.size(); ++k)
      gripper_pos_[opt_.grippers[k]] = static_cast<int>(k);
    slack_pos_.assign(s.robot.limb_count, -1);
    for (size_t k = 0; k < opt_.slack_grippers.size(); ++k)
      slack_pos_[opt_.slack_grippers[k]] = static_cast<int>(k);

    torsion_index_.assign(C_, -1);
    for (int c = 0; c < C_; ++c) {
      if (s.region_has_torsion(s.regions[c]))
        torsion_index_[c] = torsion_count_++;
    }

    nf_ = static_cast<int>(opt_.fingers.size());
    ng_ = static_cast<int>(opt_.grippers.size());
    ns_ = static_cast<int>(opt_.slack_grippers.size());
    x_size_ = 12 + 6 * nf_ + 3 * ng_;
    u_size_ = opt_.include_u ? 6 * nf_ : 0;
    slack_size_ = 3 * ns_;
    y_size_ = opt_.include_y ? 6 * nf_ * C_ : 0;
    z_alpha_ = opt_.include_y ? nf_ * C_ : 0;
    z_beta_ = opt_.include_y ? nf_ * V_ * 6 : 0;
    z_gamma_ = opt_.include_y ? nf_ * torsion_count_ : 0;
    aux_size_ = opt_.include_y ? 2 * nf_ * torsion_count_ : 0;
    step_size_ = x_size_ + u_size_ + slack_size_ + y_size_ + z_alpha_ +
                 z_beta_ + z_gamma_ + aux_size_;
    total_ = N_ * step_size_ + x_size_;
  }

  /// Layout with every variable (the monolithic / two-block MIQP view).
  static VariableLayout full(const Scenario& s) {
    Options opt;
    for (int i = 0; i < s.robot.finger_count(); ++i) opt.fingers.push_back(i);
    for (int l = 0; l < s.robot.limb_count; ++l) opt.grippers.push_back(l);
    return VariableLayout(s, std::move(opt));
  }

  /// (x, u) only: the consensus/global view and the two-block NLP view.
  static VariableLayout consensus(const Scenario& s,
                                  bool with_slack_slots = false) {
    Options opt;
    for (int i = 0; i < s.robot.finger_count(); ++i) opt.fingers.push_back(i);
    for (int l = 0; l < s.robot.limb_count; ++l) {
      opt.grippers.push_back(l);
      if (with_slack_slots) opt.slack_grippers.push_back(l);
    }
    opt.include_y = false;
    return VariableLayout(s, std::move(opt));
  }

  /// Per-limb MIQP view: body, the limb's two fingers, its wrenches and
  /// binaries, plus (when other limbs exist) the force slack.
  static VariableLayout limb(const Scenario& s, int gripper) {
    Options opt;
    const auto fingers = s.robot.fingers_of(gripper);
    opt.fingers = {fingers[0], fingers[1]};
    opt.grippers = {gripper};
    if (s.robot.limb_count > 1) opt.slack_grippers = {gripper};
    return VariableLayout(s, std::move(opt));
  }

  const Scenario& scenario() const { return *scenario_; }
  const Options& options() const { return opt_; }
  int total_size() const { return total_; }
  int horizon() const { return N_; }
  int included_finger_count() const { return nf_; }
  int torsion_region_count() const { return torsion_count_; }
  bool has_finger(int i) const { return finger_pos_[i] >= 0; }
  bool has_gripper(int l) const { return gripper_pos_[l] >= 0; }
  bool has_slack(int l) const { return slack_pos_[l] >= 0; }
  bool has_u() const { return opt_.include_u; }
  bool has_y() const { return opt_.include_y; }
  int torsion_index(int c) const { return torsion_index_[c]; }

  // --- offsets; 3-vector slots return the first of three indices ---

  int r(int t) const { return base(t); }
  int theta(int t) const { return base(t) + 3; }
  int rdot(int t) const { return base(t) + 6; }
  int thetadot(int t) const { return base(t) + 9; }
  int p(int t, int finger) const {
    return base(t) + 12 + 3 * pos(finger_pos_, finger);
  }
  int q(int t, int finger) const {
    return base(t) + 12 + 3 * nf_ + 3 * pos(finger_pos_, finger);
  }
  int d(int t, int gripper) const {
    return base(t) + 12 + 6 * nf_ + 3 * pos(gripper_pos_, gripper);
  }
  int lambda(int t, int finger) const {
    return base(t) + x_size_ + 3 * pos(finger_pos_, finger);
  }
  int tau(int t, int finger) const {
    return base(t) + x_size_ + 3 * nf_ + 3 * pos(finger_pos_, finger);
  }
  int slack(int t, int gripper) const {
    return base(t) + x_size_ + u_size_ + 3 * pos(slack_pos_, gripper);
  }
  int f(int t, int finger, int c) const {
    return y_base(t) + 3 * (pos(finger_pos_, finger) * C_ + c);
  }
  int m(int t, int finger, int c) const {
    return y_base(t) + 3 * nf_ * C_ + 3 * (pos(finger_pos_, finger) * C_ + c);
  }
  int alpha(int t, int finger, int c) const {
    return z_base(t) + pos(finger_pos_, finger) * C_ + c;
  }
  int beta(int t, int finger, int v, int h) const {
    return z_base(t) + z_alpha_ + pos(finger_pos_, finger) * V_ * 6 + v * 6 +
           h;
  }
  /// -1 when the region's torsion range is degenerate (gamma elided).
  int gamma(int t, int finger, int c) const {
    if (torsion_index_[c] < 0) return -1;
    return z_base(t) + z_alpha_ + z_beta_ +
           pos(finger_pos_, finger) * torsion_count_ + torsion_index_[c];
  }
  int m_plus(int t, int finger, int c) const {
    if (torsion_index_[c] < 0) return -1;
    return aux_base(t) + pos(finger_pos_, finger) * torsion_count_ +
           torsion_index_[c];
  }
  int m_minus(int t, int finger, int c) const {
    if (torsion_index_[c] < 0) return -1;
    return aux_base(t) + nf_ * torsion_count_ +
           pos(finger_pos_, finger) * torsion_count_ + torsion_index_[c];
  }

  /// All binary-variable indices (alpha, beta, gamma across all steps).
  std::vector<int> binary_indices() const {
    std::vector<int> out;
    if (!opt_.include_y) return out;
    for (int t = 0; t < N_; ++t) {
      const int zb = z_base(t);
      for (int k = 0; k < z_alpha_ + z_beta_ + z_gamma_; ++k)
        out.push_back(zb + k);
    }
    return out;
  }

  bool is_binary(int index) const {
    if (!opt_.include_y) return false;
    const int t = index / step_size_;
    if (t >= N_) return false;
    const int k = index - z_base(t);
    return k >= 0 && k < z_alpha_ + z_beta_ + z_gamma_;
  }

  /// Residual group of one flat slot (positions/rotations/forces/moments).
  SlotGroup group_of(int index) const {
    const int t = std::min(index / step_size_, N_);
    const int within = index - base(t);
    if (within < x_size_) {
      if (within < 3) return SlotGroup::Position;        // r
      if (within < 6) return SlotGroup::Rotation;        // theta
      if (within < 9) return SlotGroup::Position;        // rdot
      if (within < 12) return SlotGroup::Rotation;       // thetadot
      if (within < 12 + 3 * nf_) return SlotGroup::Position;  // p
      if (within < 12 + 6 * nf_) return SlotGroup::Rotation;  // q
      return SlotGroup::Position;                        // d
    }
    const int u_within = within - x_size_;
    if (opt_.include_u && u_within < u_size_) {
      return u_within < 3 * nf_ ? SlotGroup::Force : SlotGroup::Moment;
    }
    return SlotGroup::Force;  // slack and local wrenches count as forces
  }

  /// Name -> (offset, length) map covering every slot; the documented
  /// contract form of the layout.
  std::map<std::string, std::pair<int, int>> names() const {
    std::map<std::string, std::pair<int, int>> out;
    const auto put = [&](const std::string& name, int off, int len) {
      out[name] = {off, len};
    };
    for (int t = 0; t <= N_; ++t) {
      const std::string ts = std::to_string(t);
      put("x/" + ts + "/r", r(t), 3);
      put("x/" + ts + "/theta", theta(t), 3);
      put("x/" + ts + "/rdot", rdot(t), 3);
      put("x/" + ts + "/thetadot", thetadot(t), 3);
      for (int i : opt_.fingers) {
        put("x/" + ts + "/p/" + std::to_string(i), p(t, i), 3);
        put("x/" + ts + "/q/" + std::to_string(i), q(t, i), 3);
      }
      for (int l : opt_.grippers)
        put("x/" + ts + "/d/" + std::to_string(l), d(t, l), 3);
      if (t == N_) break;
      if (opt_.include_u) {
        for (int i : opt_.fingers) {
          put("u/" + ts + "/lambda/" + std::to_string(i), lambda(t, i), 3);
          put("u/" + ts + "/tau/" + std::to_string(i), tau(t, i), 3);
        }
      }
      for (int l : opt_.slack_grippers)
        put("slack/" + ts + "/" + std::to_string(l), slack(t, l), 3);
      if (opt_.include_y) {
        for (int i : opt_.fingers) {
          const std::string is = std::to_string(i);
          for (int c = 0; c < C_; ++c) {
            const std::string cs = std::to_string(c);
            put("y/" + ts + "/f/" + is + "/" + cs, f(t, i, c), 3);
            put("y/" + ts + "/m/" + is + "/" + cs, m(t, i, c), 3);
            put("z/" + ts + "/alpha/" + is + "/" + cs, alpha(t, i, c), 1);
            if (gamma(t, i, c) >= 0) {
              put("z/" + ts + "/gamma/" + is + "/" + cs, gamma(t, i, c), 1);
              put("aux/" + ts + "/mplus/" + is + "/" + cs, m_plus(t, i, c), 1);
              put("aux/" + ts + "/mminus/" + is + "/" + cs, m_minus(t, i, c),
                  1);
            }
            for (int v = 0; v < V_; ++v) {
              for (int h = 0; h < 6; ++h) {
                put("z/" + ts + "/beta/" + is + "/" + std::to_string(v) + "/" +
                        std::to_string(h),
                    beta(t, i, v, h), 1);
              }
            }
          }
        }
      }
    }
    return out;
  }

 private:
  static int pos(const std::vector<int>& map, int global) {
    const int p = map[global];
    if (p < 0)
      throw std::out_of_range("layout does not cover the requested index");
    return p;
  }
  int base(int t) const { return t * step_size_; }
  int y_base(int t) const { return base(t) + x_size_ + u_size_ + slack_size_; }
  int z_base(int t) const { return y_base(t) + y_size_; }
  int aux_base(int t) const { return z_base(t) + z_alpha_ + z_beta_ + z_gamma_; }

  const Scenario* scenario_ = nullptr;
  Options opt_;
  int N_ = 0, C_ = 0, V_ = 0;
  int nf_ = 0, ng_ = 0, ns_ = 0;
  int torsion_count_ = 0;
  std::vector<int> finger_pos_, gripper_pos_, slack_pos_, torsion_index_;
  int x_size_ = 0, u_size_ = 0, slack_size_ = 0, y_size_ = 0;
  int z_alpha_ = 0, z_beta_ = 0, z_gamma_ = 0, aux_size_ = 0;
  int step_size_ = 0, total_ = 0;
};

/// Per-slot variable bounds for a layout, from the scenario's boxes.
/// Binaries get [0, 1]; the torsion split gets [0, max |m_z|]; slack slots
/// get the summed lambda box of the limbs they stand for.
inline void layout_bounds(const Scenario& s, const VariableLayout& layout,
                          Eigen::VectorXd& lower, Eigen::VectorXd& upper) {
  const int n = layout.total_size();
  lower.setConstant(n, -1e30);
  upper.setConstant(n, 1e30);
  const auto set3 = [&](int off, const Box3& box) {
    if (off < 0) return;
    lower.segment<3>(off) = box.lower;
    upper.segment<3>(off) = box.upper;
  };
  const int N = s.horizon;
  for (int t = 0; t <= N; ++t) {
    set3(layout.r(t), s.bounds.r);
    set3(layout.theta(t), s.bounds.theta);
    set3(layout.rdot(t), s.bounds.rdot);
    set3(layout.thetadot(t), s.bounds.thetadot);
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (!layout.has_finger(i)) continue;
      set3(layout.p(t, i), s.bounds.p);
      set3(layout.q(t, i), s.bounds.q);
    }
    for (int l = 0; l < s.robot.limb_count; ++l) {
      if (!layout.has_gripper(l)) continue;
      set3(layout.d(t, l), Box3{s.robot.separation_lower[l],
                                s.robot.separation_upper[l]});
    }
    if (t == N) break;
    const int other = s.robot.finger_count() - 2;
    for (int l = 0; l < s.robot.limb_count; ++l) {
      if (!layout.has_slack(l)) continue;
      set3(layout.slack(t, l),
           Box3{other * s.bounds.lambda.lower, other * s.bounds.lambda.upper});
    }
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (!layout.has_finger(i)) continue;
      if (layout.has_u()) {
        set3(layout.lambda(t, i), s.bounds.lambda);
        set3(layout.tau(t, i), s.bounds.tau);
      }
      if (!layout.has_y()) continue;
      for (int c = 0; c < s.region_count(); ++c) {
        set3(layout.f(t, i, c), s.bounds.f);
        set3(layout.m(t, i, c), s.bounds.m);
        lower[layout.alpha(t, i, c)] = 0.0;
        upper[layout.alpha(t, i, c)] = 1.0;
        if (layout.gamma(t, i, c) >= 0) {
          lower[layout.gamma(t, i, c)] = 0.0;
          upper[layout.gamma(t, i, c)] = 1.0;
          const double m_mag = std::max(std::abs(s.bounds.m.lower.z()),
                                        std::abs(s.bounds.m.upper.z()));
          lower[layout.m_plus(t, i, c)] = 0.0;
          upper[layout.m_plus(t, i, c)] = m_mag;
          lower[layout.m_minus(t, i, c)] = 0.0;
          upper[layout.m_minus(t, i, c)] = m_mag;
        }
        for (int v = 0; v < s.obstacle_count(); ++v) {
          for (int h = 0; h < 6; ++h) {
            lower[layout.beta(t, i, v, h)] = 0.0;
            upper[layout.beta(t, i, v, h)] = 1.0;
          }
        }
      }
    }
  }
}

/// Writes a snapshot into the x-slots of step t.
inline void write_snapshot(const Scenario& s, const VariableLayout& layout,
                           int t, const StateSnapshot& snap,
                           Eigen::VectorXd& x) {
  x.segment<3>(layout.r(t)) = snap.body.r;
  x.segment<3>(layout.theta(t)) = snap.body.theta;
  x.segment<3>(layout.rdot(t)) = snap.body.rdot;
  x.segment<3>(layout.thetadot(t)) = snap.body.thetadot;
  for (int i = 0; i < s.robot.finger_count(); ++i) {
    if (!layout.has_finger(i)) continue;
    x.segment<3>(layout.p(t, i)) = snap.p[i];
    x.segment<3>(layout.q(t, i)) = snap.q[i];
  }
  for (int l = 0; l < s.robot.limb_count; ++l) {
    if (!layout.has_gripper(l)) continue;
    const auto fingers = s.robot.fingers_of(l);
    x.segment<3>(layout.d(t, l)) = snap.p[fingers[1]] - snap.p[fingers[0]];
  }
}

/// Packs trajectory + discrete containers into a flat vector. The torsion
/// split is derived from m^z (positive part / negative part); gamma follows
/// the sign with the tie at zero resolved to gamma = 1.
inline Eigen::VectorXd pack_variables(const Scenario& s,
                                      const VariableLayout& layout,
                                      const TrajectoryVariables& traj,
                                      const DiscreteVariables& disc) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(layout.total_size());
  const int N = s.horizon;
  for (int t = 0; t <= N; ++t) {
    x.segment<3>(layout.r(t)) = traj.r[t];
    x.segment<3>(layout.theta(t)) = traj.theta[t];
    x.segment<3>(layout.rdot(t)) = traj.rdot[t];
    x.segment<3>(layout.thetadot(t)) = traj.thetadot[t];
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (!layout.has_finger(i)) continue;
      x.segment<3>(layout.p(t, i)) = traj.p[t][i];
      x.segment<3>(layout.q(t, i)) = traj.q[t][i];
    }
    for (int l = 0; l < s.robot.limb_count; ++l) {
      if (layout.has_gripper(l)) x.segment<3>(layout.d(t, l)) = traj.d[t][l];
    }
    if (t == N) break;
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (!layout.has_finger(i)) continue;
      if (layout.has_u()) {
        x.segment<3>(layout.lambda(t, i)) = traj.lambda[t][i];
        x.segment<3>(layout.tau(t, i)) = traj.tau[t][i];
      }
      if (!layout.has_y()) continue;
      for (int c = 0; c < s.region_count(); ++c) {
        x.segment<3>(layout.f(t, i, c)) = traj.f[t][i][c];
        x.segment<3>(layout.m(t, i, c)) = traj.m[t][i][c];
        x[layout.alpha(t, i, c)] = disc.alpha[t][i][c];
        if (layout.gamma(t, i, c) >= 0) {
          const double mz = traj.m[t][i][c].z();
          x[layout.m_plus(t, i, c)] = std::max(mz, 0.0);
          x[layout.m_minus(t, i, c)] = std::max(-mz, 0.0);
          x[layout.gamma(t, i, c)] = disc.gamma[t][i][c];
        }
        for (int v = 0; v < s.obstacle_count(); ++v) {
          for (int h = 0; h < 6; ++h)
            x[layout.beta(t, i, v, h)] = disc.beta[t][i][v][h];
        }
      }
    }
  }
  return x;
}

/// Inverse of pack_variables; binaries are rounded to the nearest integer.
inline void unpack_variables(const Scenario& s, const VariableLayout& layout,
                             const Eigen::VectorXd& x,
                             TrajectoryVariables& traj,
                             DiscreteVariables& disc) {
  const int N = s.horizon;
  for (int t = 0; t <= N; ++t) {
    traj.r[t] = x.segment<3>(layout.r(t));
    traj.theta[t] = x.segment<3>(layout.theta(t));
    traj.rdot[t] = x.segment<3>(layout.rdot(t));
    traj.thetadot[t] = x.segment<3>(layout.thetadot(t));
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (!layout.has_finger(i)) continue;
      traj.p[t][i] = x.segment<3>(layout.p(t, i));
      traj.q[t][i] = x.segment<3>(layout.q(t, i));
    }
    for (int l = 0; l < s.robot.limb_count; ++l) {
      if (layout.has_gripper(l)) traj.d[t][l] = x.segment<3>(layout.d(t, l));
    }
    if (t == N) break;
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (!layout.has_finger(i)) continue;
      if (layout.has_u()) {
        traj.lambda[t][i] = x.segment<3>(layout.lambda(t, i));
        traj.tau[t][i] = x.segment<3>(layout.tau(t, i));
      }
      if (!layout.has_y()) continue;
      for (int c = 0; c < s.region_count(); ++c) {
        traj.f[t][i][c] = x.segment<3>(layout.f(t, i, c));
        traj.m[t][i][c] = x.segment<3>(layout.m(t, i, c));
        disc.alpha[t][i][c] = x[layout.alpha(t, i, c)] > 0.5 ? 1 : 0;
        if (layout.gamma(t, i, c) >= 0)
          disc.gamma[t][i][c] = x[layout.gamma(t, i, c)] > 0.5 ? 1 : 0;
        for (int v = 0; v < s.obstacle_count(); ++v) {
          for (int h = 0; h < 6; ++h)
            disc.beta[t][i][v][h] = x[layout.beta(t, i, v, h)] > 0.5 ? 1 : 0;
        }
      }
    }
  }
}

}  // namespace patchplan
