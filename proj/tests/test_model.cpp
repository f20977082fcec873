#include <gtest/gtest.h>

#include <cstdio>
#include <random>

#include "patchplan/layout.hpp"
#include "patchplan/scenario_json.hpp"
#include "patchplan/selftest.hpp"

using namespace patchplan;
using nlohmann::json;

namespace {

json minimal_walking_json() {
  // One limb, flat-ground patch, tiny horizon: C = 1, V = 0.
  json j;
  j["version"] = 1;
  j["name"] = "minimal-walking";
  j["robot"] = {
      {"mass", 9.6},
      {"inertia", {0.14, 0.28, 0.35}},
      {"gravity", {0, 0, -9.81}},
      {"limbs", 1},
      {"fingers",
       {{{"nominal_offset", {-0.02, 0, -0.3}},
         {"offset_range", {0.2, 0.2, 0.2}},
         {"nominal_orientation", {0, 0, 0}},
         {"orientation_range", {0.2, 0.2, 1.0}}},
        {{"nominal_offset", {0.02, 0, -0.3}},
         {"offset_range", {0.2, 0.2, 0.2}},
         {"nominal_orientation", {0, 0, 0}},
         {"orientation_range", {0.2, 0.2, 1.0}}}}},
      {"grippers",
       {{{"separation_lower", {0.04, 0, 0}},
         {"separation_upper", {0.04, 0, 0}}}}}};
  j["regions"] = {{{"id", 0},
                   {"frame", {{"origin", {0, 0, 0}}, {"rpy", {0, 0, 0}}}},
                   {"extent", {2.0, 2.0}},
                   {"friction", 0.6},
                   {"patch_radius", 0.02},
                   {"normal_force_max", 80.0},
                   {"spine_fx_max", 0.0},
                   {"spine_fy_max", 0.0},
                   {"spine_tz_max", 0.0},
                   {"yaw_tolerance", 3.2},
                   {"paired_with", 0}}};
  j["horizon"] = {{"N", 4}, {"dt", 0.08}};
  const json snapshot = {
      {"body",
       {{"r", {0, 0, 0.3}},
        {"theta", {0, 0, 0}},
        {"rdot", {0, 0, 0}},
        {"thetadot", {0, 0, 0}}}},
      {"p", {{-0.02, 0, 0}, {0.02, 0, 0}}},
      {"q", {{0, 0, 0}, {0, 0, 0}}}};
  j["initial"] = snapshot;
  j["goal"] = snapshot;
  j["weights"] = {{"Q",
                   {{"r", {1, 1, 1}},
                    {"theta", {1, 1, 1}},
                    {"rdot", {0.1, 0.1, 0.1}},
                    {"thetadot", {0.1, 0.1, 0.1}},
                    {"p", {1, 1, 1}},
                    {"q", {0.1, 0.1, 0.1}},
                    {"d", {0, 0, 0}}}},
                  {"R", {{"lambda", {0.001, 0.001, 0.001}},
                         {"tau", {0.001, 0.001, 0.001}}}},
                  {"S", {{"alpha", 0.05}, {"beta", 0.0}, {"gamma", 0.0}}},
                  {"zeta_finger_z", -1.0},
                  {"xi", {{0, 0, 0}}}};
  j["bounds"] = {
      {"r", {{"lower", {-5, -5, 0}}, {"upper", {5, 5, 1}}}},
      {"theta", {{"lower", {-0.5, -0.5, -0.5}}, {"upper", {0.5, 0.5, 0.5}}}},
      {"rdot", {{"lower", {-2, -2, -2}}, {"upper", {2, 2, 2}}}},
      {"thetadot", {{"lower", {-2, -2, -2}}, {"upper", {2, 2, 2}}}},
      {"p", {{"lower", {-5, -5, -0.05}}, {"upper", {5, 5, 1}}}},
      {"q", {{"lower", {-2, -2, -2}}, {"upper", {2, 2, 2}}}},
      {"lambda", {{"lower", {-100, -100, -100}}, {"upper", {100, 100, 100}}}},
      {"tau", {{"lower", {-2, -2, -2}}, {"upper", {2, 2, 2}}}},
      {"f", {{"lower", {-60, -60, -60}}, {"upper", {60, 60, 80}}}},
      {"m", {{"lower", {0, 0, 0}}, {"upper", {0, 0, 0}}}}};
  j["big_m"] = 1e4;
  return j;
}

}  // namespace

TEST(LoadScenario, MinimalWalkingParses) {
  const Scenario s = parse_scenario(minimal_walking_json());
  EXPECT_EQ(s.region_count(), 1);
  EXPECT_EQ(s.obstacle_count(), 0);
  EXPECT_EQ(s.robot.finger_count(), 2);
  EXPECT_DOUBLE_EQ(s.regions[0].torsion_constant, 0.67 * 0.02);
}

TEST(LoadScenario, TorsionConstantDerivedFromPatchRadius) {
  json j = minimal_walking_json();
  j["regions"][0]["patch_radius"] = 0.02;
  const Scenario s = parse_scenario(j);
  EXPECT_NEAR(s.regions[0].torsion_constant, 0.0134, 1e-12);
}

TEST(LoadScenario, HorizonTooShortIsRejected) {
  json j = minimal_walking_json();
  j["horizon"]["N"] = 1;
  try {
    parse_scenario(j);
    FAIL() << "expected ScenarioError";
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("horizon"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("too short"), std::string::npos);
  }
}

TEST(LoadScenario, MissingFieldReportsPath) {
  json j = minimal_walking_json();
  j["robot"].erase("mass");
  try {
    parse_scenario(j);
    FAIL() << "expected ScenarioError";
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("robot.mass"), std::string::npos);
  }
}

TEST(LoadScenario, BadDtReportsField) {
  json j = minimal_walking_json();
  j["horizon"]["dt"] = -0.1;
  EXPECT_THROW(parse_scenario(j), ScenarioError);
}

TEST(LoadScenario, CuboidFacesAreDerived) {
  json j = minimal_walking_json();
  j["obstacles"] = {{{"id", 0},
                     {"frame", {{"origin", {1, 0, 0.1}}, {"rpy", {0, 0, 0.3}}}},
                     {"half_extents", {0.1, 0.2, 0.1}}}};
  const Scenario s = parse_scenario(j);
  ASSERT_EQ(s.obstacles.size(), 1u);
  ASSERT_EQ(s.obstacles[0].faces.size(), 6u);
  for (const auto& face : s.obstacles[0].faces) {
    EXPECT_NEAR(face.world_row.norm(), 1.0, 1e-12);
  }
  // The cuboid center is inside (negative margin), far points are outside.
  EXPECT_LT(s.obstacles[0].outside_margin(Vec3(1, 0, 0.1)), 0.0);
  EXPECT_GT(s.obstacles[0].outside_margin(Vec3(3, 0, 0.1)), 0.0);
}

TEST(ScenarioRoundTrip, SerializeLoadBitwiseEqual) {
  std::mt19937_64 rng(5);
  Scenario s = make_tiny_scenario(rng, 3, 2, true);
  const std::string path = ::testing::TempDir() + "roundtrip_scenario.json";
  save_scenario(s, path);
  const Scenario loaded = load_scenario(path);

  EXPECT_EQ(loaded.robot.mass, s.robot.mass);
  EXPECT_TRUE(loaded.robot.inertia == s.robot.inertia);
  EXPECT_TRUE(loaded.robot.gravity == s.robot.gravity);
  ASSERT_EQ(loaded.region_count(), s.region_count());
  for (int c = 0; c < s.region_count(); ++c) {
    EXPECT_TRUE(loaded.regions[c].frame.rotation == s.regions[c].frame.rotation);
    EXPECT_TRUE(loaded.regions[c].frame.translation ==
                s.regions[c].frame.translation);
    EXPECT_EQ(loaded.regions[c].friction, s.regions[c].friction);
    EXPECT_EQ(loaded.regions[c].torsion_constant,
              s.regions[c].torsion_constant);
  }
  ASSERT_EQ(loaded.obstacle_count(), s.obstacle_count());
  EXPECT_TRUE(loaded.obstacles[0].half_extents == s.obstacles[0].half_extents);
  EXPECT_EQ(loaded.horizon, s.horizon);
  EXPECT_EQ(loaded.dt, s.dt);
  for (int i = 0; i < s.robot.finger_count(); ++i) {
    EXPECT_TRUE(loaded.initial.p[i] == s.initial.p[i]);
    EXPECT_TRUE(loaded.goal.p[i] == s.goal.p[i]);
  }
  EXPECT_EQ(loaded.weights.zeta_finger_z, s.weights.zeta_finger_z);
  EXPECT_TRUE(loaded.bounds.lambda.lower == s.bounds.lambda.lower);
  EXPECT_EQ(loaded.big_m, s.big_m);
  EXPECT_EQ(loaded.solver.rho, s.solver.rho);

  // Serializing the reloaded scenario reproduces the file byte for byte.
  const std::string path2 = ::testing::TempDir() + "roundtrip_scenario2.json";
  save_scenario(loaded, path2);
  std::ifstream f1(path), f2(path2);
  std::stringstream b1, b2;
  b1 << f1.rdbuf();
  b2 << f2.rdbuf();
  EXPECT_EQ(b1.str(), b2.str());
}

TEST(VariableLayout, SizesAndInvariants) {
  std::mt19937_64 rng(9);
  const Scenario s = make_tiny_scenario(rng, 3, 2, true);
  const VariableLayout full = VariableLayout::full(s);
  const int nx = s.nx(), nu = s.nu(), ny = s.ny();
  const int nz = s.nz();
  const int aux = 2 * s.gamma_count();
  EXPECT_EQ(full.total_size(),
            nx * (s.horizon + 1) + (nu + ny + nz + aux) * s.horizon);

  // Offsets are contiguous and non-overlapping: every index is covered by
  // exactly one named slot.
  std::vector<int> hits(full.total_size(), 0);
  for (const auto& [name, range] : full.names()) {
    for (int k = 0; k < range.second; ++k) ++hits[range.first + k];
  }
  for (int k = 0; k < full.total_size(); ++k) EXPECT_EQ(hits[k], 1);

  // Every Table-I symbol family has slots: r, theta, rdot, thetadot, p, q,
  // d, lambda, tau, f, m, alpha, beta, gamma.
  const auto names = full.names();
  for (const char* key :
       {"x/0/r", "x/0/theta", "x/0/rdot", "x/0/thetadot", "x/0/p/0",
        "x/0/q/0", "x/0/d/0", "u/0/lambda/0", "u/0/tau/0", "y/0/f/0/0",
        "y/0/m/0/0", "z/0/alpha/0/0", "z/0/beta/0/0/0", "z/0/gamma/0/0"}) {
    EXPECT_TRUE(names.count(key)) << key;
  }
}

TEST(VariableLayout, PackUnpackRoundTrip) {
  std::mt19937_64 rng(15);
  const Scenario s = make_tiny_scenario(rng, 3, 2, false);
  TrajectoryVariables traj;
  DiscreteVariables disc;
  make_stance_candidate(s, 0.4, traj, disc);
  const VariableLayout layout = VariableLayout::full(s);
  const Eigen::VectorXd v = pack_variables(s, layout, traj, disc);
  TrajectoryVariables traj2 = TrajectoryVariables::zeros(s);
  DiscreteVariables disc2 = DiscreteVariables::zeros(s);
  unpack_variables(s, layout, v, traj2, disc2);
  for (int t = 0; t <= s.horizon; ++t) {
    EXPECT_TRUE(traj2.r[t] == traj.r[t]);
    EXPECT_TRUE(traj2.p[t][0] == traj.p[t][0]);
  }
  for (int t = 0; t < s.horizon; ++t) {
    EXPECT_TRUE(traj2.f[t][1][0] == traj.f[t][1][0]);
    EXPECT_EQ(disc2.alpha[t][0][0], disc.alpha[t][0][0]);
    EXPECT_EQ(disc2.gamma[t][1][0], disc.gamma[t][1][0]);
  }
}

TEST(DiscreteVariables, SingleContactInvariant) {
  std::mt19937_64 rng(21);
  const Scenario s = make_tiny_scenario(rng, 2, 2, false);
  DiscreteVariables disc = DiscreteVariables::zeros(s);
  EXPECT_TRUE(disc.single_contact_per_finger());
  disc.alpha[0][0][0] = 1;
  disc.alpha[0][0][1] = 1;
  EXPECT_FALSE(disc.single_contact_per_finger());
}
