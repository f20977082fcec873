#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "patchplan/model.hpp"

namespace patchplan {

namespace detail {

using nlohmann::json;

inline const json& member(const json& j, const std::string& key,
                          const std::string& path) {
  if (!j.is_object()) throw ScenarioError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ScenarioError(path + "." + key, "missing field");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ScenarioError(path, "expected a number");
  return j.get<double>();
}

inline double number_at(const json& j, const std::string& key,
                        const std::string& path) {
  return number(member(j, key, path), path + "." + key);
}

inline int integer_at(const json& j, const std::string& key,
                      const std::string& path) {
  const json& v = member(j, key, path);
  if (!v.is_number_integer())
    throw ScenarioError(path + "." + key, "expected an integer");
  return v.get<int>();
}

inline Vec3 vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3)
    throw ScenarioError(path, "expected an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) v[i] = number(j[i], path);
  return v;
}

inline Vec3 vec3_at(const json& j, const std::string& key,
                    const std::string& path) {
  return vec3(member(j, key, path), path + "." + key);
}

inline Mat3 mat3(const json& j, const std::string& path) {
  if (j.is_array() && j.size() == 3 && j[0].is_array()) {
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
      if (j[r].size() != 3) throw ScenarioError(path, "expected 3x3 rows");
      for (int c = 0; c < 3; ++c) m(r, c) = number(j[r][c], path);
    }
    return m;
  }
  if (j.is_array() && j.size() == 3) {
    // Diagonal shorthand.
    return vec3(j, path).asDiagonal();
  }
  throw ScenarioError(path, "expected a 3x3 matrix or a diagonal triple");
}

/// Frames are authored as a placement (origin + rpy of the local axes in
/// world) or as an explicit world->local rotation/translation pair.
inline RigidTransform parse_frame(const json& j, const std::string& path) {
  if (j.contains("origin") || j.contains("rpy")) {
    const Vec3 origin =
        j.contains("origin") ? vec3_at(j, "origin", path) : Vec3::Zero();
    const Vec3 rpy = j.contains("rpy") ? vec3_at(j, "rpy", path) : Vec3::Zero();
    const Mat3 local_to_world = rotation_zyx(rpy);
    return RigidTransform{local_to_world.transpose(),
                          -(local_to_world.transpose() * origin)};
  }
  const json& rot = member(j, "rotation", path);
  if (!rot.is_array() || rot.size() != 9)
    throw ScenarioError(path + ".rotation", "expected 9 numbers (row-major)");
  Mat3 r;
  for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = number(rot[i], path);
  return RigidTransform{r, vec3_at(j, "translation", path)};
}

inline json frame_to_json(const RigidTransform& t) {
  json j;
  json rot = json::array();
  for (int i = 0; i < 9; ++i) rot.push_back(t.rotation(i / 3, i % 3));
  j["rotation"] = rot;
  j["translation"] = {t.translation.x(), t.translation.y(),
                      t.translation.z()};
  return j;
}

inline json vec3_to_json(const Vec3& v) { return json{v.x(), v.y(), v.z()}; }

inline Box3 parse_box(const json& j, const std::string& path) {
  Box3 b;
  b.lower = vec3_at(j, "lower", path);
  b.upper = vec3_at(j, "upper", path);
  for (int i = 0; i < 3; ++i) {
    if (b.lower[i] > b.upper[i])
      throw ScenarioError(path, "lower bound exceeds upper bound");
  }
  return b;
}

inline json box_to_json(const Box3& b) {
  return json{{"lower", vec3_to_json(b.lower)},
              {"upper", vec3_to_json(b.upper)}};
}

inline StateSnapshot parse_snapshot(const json& j, const std::string& path,
                                    int finger_count) {
  StateSnapshot s;
  const json& body = member(j, "body", path);
  s.body.r = vec3_at(body, "r", path + ".body");
  s.body.theta = vec3_at(body, "theta", path + ".body");
  s.body.rdot = vec3_at(body, "rdot", path + ".body");
  s.body.thetadot = vec3_at(body, "thetadot", path + ".body");
  const json& p = member(j, "p", path);
  const json& q = member(j, "q", path);
  if (!p.is_array() || static_cast<int>(p.size()) != finger_count)
    throw ScenarioError(path + ".p", "expected one entry per finger");
  if (!q.is_array() || static_cast<int>(q.size()) != finger_count)
    throw ScenarioError(path + ".q", "expected one entry per finger");
  for (int i = 0; i < finger_count; ++i) {
    s.p.push_back(vec3(p[i], path + ".p[" + std::to_string(i) + "]"));
    s.q.push_back(vec3(q[i], path + ".q[" + std::to_string(i) + "]"));
  }
  return s;
}

inline json snapshot_to_json(const StateSnapshot& s) {
  json j;
  j["body"] = {{"r", vec3_to_json(s.body.r)},
               {"theta", vec3_to_json(s.body.theta)},
               {"rdot", vec3_to_json(s.body.rdot)},
               {"thetadot", vec3_to_json(s.body.thetadot)}};
  json p = json::array(), q = json::array();
  for (const auto& v : s.p) p.push_back(vec3_to_json(v));
  for (const auto& v : s.q) q.push_back(vec3_to_json(v));
  j["p"] = p;
  j["q"] = q;
  return j;
}

}  // namespace detail

/// Parses a scenario from its JSON document. Derives k_c = 0.67 r_p for
/// every region and the 6 cuboid faces for every obstacle, then validates
/// all invariants. Throws ScenarioError with the offending field path.
inline Scenario parse_scenario(const nlohmann::json& j) {
  using namespace detail;
  Scenario s;
  s.version = j.contains("version") ? integer_at(j, "version", "") : 1;
  if (s.version != 1) throw ScenarioError("version", "unsupported version");
  s.name = j.contains("name") ? j.at("name").get<std::string>() : "unnamed";

  const json& robot = member(j, "robot", "");
  s.robot.mass = number_at(robot, "mass", "robot");
  s.robot.inertia = mat3(member(robot, "inertia", "robot"), "robot.inertia");
  s.robot.gravity = vec3_at(robot, "gravity", "robot");
  s.robot.limb_count = integer_at(robot, "limbs", "robot");
  const json& fingers = member(robot, "fingers", "robot");
  if (!fingers.is_array() ||
      static_cast<int>(fingers.size()) != 2 * s.robot.limb_count) {
    throw ScenarioError("robot.fingers",
                        "expected 2 * limbs finger entries (n_f = 2 n_l)");
  }
  for (size_t i = 0; i < fingers.size(); ++i) {
    const std::string path = "robot.fingers[" + std::to_string(i) + "]";
    s.robot.nominal_offset.push_back(
        vec3_at(fingers[i], "nominal_offset", path));
    s.robot.offset_range.push_back(vec3_at(fingers[i], "offset_range", path));
    s.robot.nominal_orientation.push_back(
        vec3_at(fingers[i], "nominal_orientation", path));
    s.robot.orientation_range.push_back(
        vec3_at(fingers[i], "orientation_range", path));
  }
  const json& grippers = member(robot, "grippers", "robot");
  if (!grippers.is_array() ||
      static_cast<int>(grippers.size()) != s.robot.limb_count) {
    throw ScenarioError("robot.grippers", "expected one entry per limb");
  }
  for (size_t l = 0; l < grippers.size(); ++l) {
    const std::string path = "robot.grippers[" + std::to_string(l) + "]";
    s.robot.separation_lower.push_back(
        vec3_at(grippers[l], "separation_lower", path));
    s.robot.separation_upper.push_back(
        vec3_at(grippers[l], "separation_upper", path));
  }

  const json& regions = member(j, "regions", "");
  for (size_t c = 0; c < regions.size(); ++c) {
    const std::string path = "regions[" + std::to_string(c) + "]";
    const json& rj = regions[c];
    GraspRegion region;
    region.id = integer_at(rj, "id", path);
    region.frame = parse_frame(member(rj, "frame", path), path + ".frame");
    const json& extent = member(rj, "extent", path);
    if (!extent.is_array() || extent.size() != 2)
      throw ScenarioError(path + ".extent", "expected [half_x, half_y]");
    region.extent << number(extent[0], path), number(extent[1], path);
    region.friction = number_at(rj, "friction", path);
    region.patch_radius = number_at(rj, "patch_radius", path);
    region.torsion_constant = 0.67 * region.patch_radius;
    region.normal_force_max = number_at(rj, "normal_force_max", path);
    region.spine_fx_max = number_at(rj, "spine_fx_max", path);
    region.spine_fy_max = number_at(rj, "spine_fy_max", path);
    region.spine_tz_max = number_at(rj, "spine_tz_max", path);
    region.yaw_tolerance = number_at(rj, "yaw_tolerance", path);
    region.paired_with =
        rj.contains("paired_with") ? integer_at(rj, "paired_with", path) : -1;
    s.regions.push_back(region);
  }

  if (j.contains("obstacles")) {
    const json& obstacles = j.at("obstacles");
    for (size_t v = 0; v < obstacles.size(); ++v) {
      const std::string path = "obstacles[" + std::to_string(v) + "]";
      Obstacle obstacle;
      obstacle.id = integer_at(obstacles[v], "id", path);
      obstacle.frame =
          parse_frame(member(obstacles[v], "frame", path), path + ".frame");
      obstacle.half_extents = vec3_at(obstacles[v], "half_extents", path);
      derive_obstacle_faces(obstacle);
      s.obstacles.push_back(obstacle);
    }
  }

  const json& horizon = member(j, "horizon", "");
  s.horizon = integer_at(horizon, "N", "horizon");
  s.dt = number_at(horizon, "dt", "horizon");
  if (s.horizon < 2) throw ScenarioError("horizon.N", "horizon too short");

  s.initial = parse_snapshot(member(j, "initial", ""), "initial",
                             s.robot.finger_count());
  s.goal =
      parse_snapshot(member(j, "goal", ""), "goal", s.robot.finger_count());

  const json& weights = member(j, "weights", "");
  const json& Q = member(weights, "Q", "weights");
  s.weights.q_r = vec3_at(Q, "r", "weights.Q");
  s.weights.q_theta = vec3_at(Q, "theta", "weights.Q");
  s.weights.q_rdot = vec3_at(Q, "rdot", "weights.Q");
  s.weights.q_thetadot = vec3_at(Q, "thetadot", "weights.Q");
  s.weights.q_p = vec3_at(Q, "p", "weights.Q");
  s.weights.q_q = vec3_at(Q, "q", "weights.Q");
  s.weights.q_d = vec3_at(Q, "d", "weights.Q");
  const json& R = member(weights, "R", "weights");
  s.weights.r_lambda = vec3_at(R, "lambda", "weights.R");
  s.weights.r_tau = vec3_at(R, "tau", "weights.R");
  const json& S = member(weights, "S", "weights");
  s.weights.s_alpha = number_at(S, "alpha", "weights.S");
  s.weights.s_beta = number_at(S, "beta", "weights.S");
  s.weights.s_gamma = number_at(S, "gamma", "weights.S");
  s.weights.zeta_finger_z = number_at(weights, "zeta_finger_z", "weights");
  const json& xi = member(weights, "xi", "weights");
  if (!xi.is_array() || static_cast<int>(xi.size()) != s.robot.limb_count)
    throw ScenarioError("weights.xi", "expected one 3-vector per gripper");
  for (size_t l = 0; l < xi.size(); ++l) {
    s.weights.xi.push_back(
        vec3(xi[l], "weights.xi[" + std::to_string(l) + "]"));
  }

  const json& bounds = member(j, "bounds", "");
  s.bounds.r = parse_box(member(bounds, "r", "bounds"), "bounds.r");
  s.bounds.theta =
      parse_box(member(bounds, "theta", "bounds"), "bounds.theta");
  s.bounds.rdot = parse_box(member(bounds, "rdot", "bounds"), "bounds.rdot");
  s.bounds.thetadot =
      parse_box(member(bounds, "thetadot", "bounds"), "bounds.thetadot");
  s.bounds.p = parse_box(member(bounds, "p", "bounds"), "bounds.p");
  s.bounds.q = parse_box(member(bounds, "q", "bounds"), "bounds.q");
  s.bounds.lambda =
      parse_box(member(bounds, "lambda", "bounds"), "bounds.lambda");
  s.bounds.tau = parse_box(member(bounds, "tau", "bounds"), "bounds.tau");
  s.bounds.f = parse_box(member(bounds, "f", "bounds"), "bounds.f");
  s.bounds.m = parse_box(member(bounds, "m", "bounds"), "bounds.m");

  s.big_m = number_at(j, "big_m", "");

  if (j.contains("solver")) {
    const json& solver = j.at("solver");
    auto opt_num = [&](const char* key, double fallback) {
      return solver.contains(key) ? number_at(solver, key, "solver")
                                  : fallback;
    };
    auto opt_int = [&](const char* key, int fallback) {
      return solver.contains(key) ? integer_at(solver, key, "solver")
                                  : fallback;
    };
    s.solver.rho = opt_num("rho", s.solver.rho);
    s.solver.admm_iterations =
        opt_int("admm_iterations", s.solver.admm_iterations);
    s.solver.qp_tol = opt_num("qp_tol", s.solver.qp_tol);
    s.solver.qp_max_iter = opt_int("qp_max_iter", s.solver.qp_max_iter);
    s.solver.miqp_gap = opt_num("miqp_gap", s.solver.miqp_gap);
    s.solver.miqp_node_limit =
        opt_int("miqp_node_limit", s.solver.miqp_node_limit);
    s.solver.nlp_tol = opt_num("nlp_tol", s.solver.nlp_tol);
    s.solver.nlp_max_iter = opt_int("nlp_max_iter", s.solver.nlp_max_iter);
    s.solver.big_m_margin = opt_num("big_m_margin", s.solver.big_m_margin);
    if (solver.contains("kinematics_linearization")) {
      s.solver.kinematics_linearization =
          vec3_at(solver, "kinematics_linearization", "solver");
    }
    s.solver.early_stop = solver.contains("early_stop")
                              ? solver.at("early_stop").get<bool>()
                              : s.solver.early_stop;
    s.solver.stop_pos_residual =
        opt_num("stop_pos_residual", s.solver.stop_pos_residual);
    s.solver.stop_force_residual =
        opt_num("stop_force_residual", s.solver.stop_force_residual);
    if (solver.contains("rho_blocks")) {
      for (const auto& r : solver.at("rho_blocks"))
        s.solver.rho_blocks.push_back(number(r, "solver.rho_blocks"));
    }
  }

  if (j.contains("experiment")) {
    const json& experiment = j.at("experiment");
    if (experiment.contains("pin_zero_normal_finger")) {
      s.experiment.pin_zero_normal_finger =
          integer_at(experiment, "pin_zero_normal_finger", "experiment");
    }
    if (experiment.contains("pin_contact_wrench")) {
      s.experiment.pin_contact_wrench =
          experiment.at("pin_contact_wrench").get<bool>();
      s.experiment.pinned_fx = number_at(experiment, "pinned_fx", "experiment");
      s.experiment.pinned_mz = number_at(experiment, "pinned_mz", "experiment");
    }
    if (experiment.contains("enforce_patch_constraints")) {
      s.experiment.enforce_patch_constraints =
          experiment.at("enforce_patch_constraints").get<bool>();
    }
  }

  s.validate();
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path, "cannot open scenario file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError(path, std::string("JSON parse error: ") + e.what());
  }
  return parse_scenario(j);
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
  using namespace detail;
  using nlohmann::json;
  json j;
  j["version"] = s.version;
  j["name"] = s.name;

  json robot;
  robot["mass"] = s.robot.mass;
  json inertia = json::array();
  for (int r = 0; r < 3; ++r) {
    inertia.push_back(json{s.robot.inertia(r, 0), s.robot.inertia(r, 1),
                           s.robot.inertia(r, 2)});
  }
  robot["inertia"] = inertia;
  robot["gravity"] = vec3_to_json(s.robot.gravity);
  robot["limbs"] = s.robot.limb_count;
  json fingers = json::array();
  for (int i = 0; i < s.robot.finger_count(); ++i) {
    fingers.push_back(
        json{{"nominal_offset", vec3_to_json(s.robot.nominal_offset[i])},
             {"offset_range", vec3_to_json(s.robot.offset_range[i])},
             {"nominal_orientation",
              vec3_to_json(s.robot.nominal_orientation[i])},
             {"orientation_range",
              vec3_to_json(s.robot.orientation_range[i])}});
  }
  robot["fingers"] = fingers;
  json grippers = json::array();
  for (int l = 0; l < s.robot.limb_count; ++l) {
    grippers.push_back(
        json{{"separation_lower", vec3_to_json(s.robot.separation_lower[l])},
             {"separation_upper", vec3_to_json(s.robot.separation_upper[l])}});
  }
  robot["grippers"] = grippers;
  j["robot"] = robot;

  json regions = json::array();
  for (const auto& region : s.regions) {
    regions.push_back(json{{"id", region.id},
                           {"frame", frame_to_json(region.frame)},
                           {"extent", {region.extent.x(), region.extent.y()}},
                           {"friction", region.friction},
                           {"patch_radius", region.patch_radius},
                           {"normal_force_max", region.normal_force_max},
                           {"spine_fx_max", region.spine_fx_max},
                           {"spine_fy_max", region.spine_fy_max},
                           {"spine_tz_max", region.spine_tz_max},
                           {"yaw_tolerance", region.yaw_tolerance},
                           {"paired_with", region.paired_with}});
  }
  j["regions"] = regions;

  json obstacles = json::array();
  for (const auto& obstacle : s.obstacles) {
    obstacles.push_back(json{{"id", obstacle.id},
                             {"frame", frame_to_json(obstacle.frame)},
                             {"half_extents",
                              vec3_to_json(obstacle.half_extents)}});
  }
  j["obstacles"] = obstacles;

  j["horizon"] = {{"N", s.horizon}, {"dt", s.dt}};
  j["initial"] = snapshot_to_json(s.initial);
  j["goal"] = snapshot_to_json(s.goal);

  j["weights"] = {
      {"Q",
       {{"r", vec3_to_json(s.weights.q_r)},
        {"theta", vec3_to_json(s.weights.q_theta)},
        {"rdot", vec3_to_json(s.weights.q_rdot)},
        {"thetadot", vec3_to_json(s.weights.q_thetadot)},
        {"p", vec3_to_json(s.weights.q_p)},
        {"q", vec3_to_json(s.weights.q_q)},
        {"d", vec3_to_json(s.weights.q_d)}}},
      {"R",
       {{"lambda", vec3_to_json(s.weights.r_lambda)},
        {"tau", vec3_to_json(s.weights.r_tau)}}},
      {"S",
       {{"alpha", s.weights.s_alpha},
        {"beta", s.weights.s_beta},
        {"gamma", s.weights.s_gamma}}},
      {"zeta_finger_z", s.weights.zeta_finger_z}};
  json xi = json::array();
  for (const auto& v : s.weights.xi) xi.push_back(vec3_to_json(v));
  j["weights"]["xi"] = xi;

  j["bounds"] = {{"r", box_to_json(s.bounds.r)},
                 {"theta", box_to_json(s.bounds.theta)},
                 {"rdot", box_to_json(s.bounds.rdot)},
                 {"thetadot", box_to_json(s.bounds.thetadot)},
                 {"p", box_to_json(s.bounds.p)},
                 {"q", box_to_json(s.bounds.q)},
                 {"lambda", box_to_json(s.bounds.lambda)},
                 {"tau", box_to_json(s.bounds.tau)},
                 {"f", box_to_json(s.bounds.f)},
                 {"m", box_to_json(s.bounds.m)}};

  j["big_m"] = s.big_m;

  j["solver"] = {{"rho", s.solver.rho},
                 {"admm_iterations", s.solver.admm_iterations},
                 {"qp_tol", s.solver.qp_tol},
                 {"qp_max_iter", s.solver.qp_max_iter},
                 {"miqp_gap", s.solver.miqp_gap},
                 {"miqp_node_limit", s.solver.miqp_node_limit},
                 {"nlp_tol", s.solver.nlp_tol},
                 {"nlp_max_iter", s.solver.nlp_max_iter},
                 {"big_m_margin", s.solver.big_m_margin},
                 {"kinematics_linearization",
                  vec3_to_json(s.solver.kinematics_linearization)},
                 {"early_stop", s.solver.early_stop},
                 {"stop_pos_residual", s.solver.stop_pos_residual},
                 {"stop_force_residual", s.solver.stop_force_residual}};
  if (!s.solver.rho_blocks.empty()) j["solver"]["rho_blocks"] = s.solver.rho_blocks;

  j["experiment"] = {
      {"pin_zero_normal_finger", s.experiment.pin_zero_normal_finger},
      {"pin_contact_wrench", s.experiment.pin_contact_wrench},
      {"pinned_fx", s.experiment.pinned_fx},
      {"pinned_mz", s.experiment.pinned_mz},
      {"enforce_patch_constraints", s.experiment.enforce_patch_constraints}};

  return j;
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioError(path, "cannot open output file");
  out << scenario_to_json(s).dump(2) << "\n";
}

}  // namespace patchplan
