#include <filesystem>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "patchplan/patchplan.hpp"

namespace fs = std::filesystem;
using namespace patchplan;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitVerifierFail = 1;
constexpr int kExitInputError = 2;
constexpr int kExitSolverError = 3;

struct PlanOptions {
  std::string scenario_path;
  std::string mode = "two-block";
  int iters = -1;
  double rho = -1.0;
  int horizon = -1;
  double dt = -1.0;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  double tol_pos = -1.0;
  double tol_force = -1.0;
  bool verbose = false;
};

int cmd_plan(const PlanOptions& opt) {
  Scenario scenario;
  try {
    scenario = load_scenario(opt.scenario_path);
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitInputError;
  }
  if (opt.rho > 0) scenario.solver.rho = opt.rho;
  if (opt.horizon > 1) scenario.horizon = opt.horizon;
  if (opt.dt > 0) scenario.dt = opt.dt;
  const int iters =
      opt.iters > 0 ? opt.iters : scenario.solver.admm_iterations;

  AdmmMode mode;
  try {
    mode = admm_mode_from_string(opt.mode);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitInputError;
  }

  AdmmResult result;
  try {
    result = run_admm(scenario, mode, iters);
  } catch (const AdmmBlockError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolverError;
  }

  for (const auto& rec : result.history) {
    std::printf(
        "iter %2d  pos %.4f m  force %.4f N  rot %.4f rad  moment %.4f Nm  "
        "dual %.4f\n",
        rec.iteration, rec.position, rec.force, rec.rotation, rec.moment,
        rec.dual);
  }

  fs::create_directories(opt.out_dir);
  const auto in_dir = [&](const char* name) {
    return (fs::path(opt.out_dir) / name).string();
  };
  write_trajectory_csv(in_dir("trajectory.csv"), scenario, result.trajectory);
  write_contacts_csv(in_dir("contacts.csv"), scenario, result.trajectory,
                     result.discrete);
  write_residuals_csv(in_dir("residuals.csv"), result.history);

  ToleranceSet tol;
  if (opt.tol_pos > 0) {
    tol.kinematics_pos = opt.tol_pos;
    tol.contact_pos = opt.tol_pos;
  }
  if (opt.tol_force > 0) {
    tol.dynamics_force = opt.tol_force;
    tol.contact_force = opt.tol_force;
  }
  const FeasibilityReport report =
      verify(scenario, result.trajectory, result.discrete, tol);
  write_report_json(in_dir("report.json"), report);

  if (opt.verbose) {
    std::cout << report_to_json(report).dump(2) << "\n";
  }
  std::printf("verifier: %s\n", report.pass() ? "pass" : "FAIL");
  return report.pass() ? kExitPass : kExitVerifierFail;
}

int cmd_verify(const std::string& scenario_path,
               const std::string& trajectory_path,
               const std::string& contacts_path) {
  Scenario scenario;
  TrajectoryVariables traj;
  DiscreteVariables disc;
  try {
    scenario = load_scenario(scenario_path);
    traj = read_trajectory_csv(trajectory_path, scenario);
    disc = DiscreteVariables::zeros(scenario);
    read_contacts_csv(contacts_path, scenario, traj, disc);
  } catch (const ScenarioError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const CsvParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  }

  FeasibilityReport report;
  try {
    report = verify(scenario, traj, disc);
  } catch (const std::invalid_argument& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return kExitInputError;
  }

  const auto row = [](const char* name, const FamilyReport& f) {
    std::printf("%-18s %12.6g %12.6g  %s\n", name, f.max_violation,
                f.tolerance, f.pass() ? "pass" : "FAIL");
  };
  std::printf("%-18s %12s %12s  %s\n", "family", "violation", "tolerance",
              "verdict");
  row("dynamics-force", report.dynamics_force);
  row("dynamics-moment", report.dynamics_moment);
  row("kinematics", report.kinematics);
  row("contact-logic", report.contact_logic);
  row("collision", report.collision);
  row("bounds", report.bounds);
  std::printf("%-18s %9d/%-3d %12s  %s\n", "patch-membership",
              report.patch_violations, report.patch_checked, "0",
              report.patch_violations == 0 ? "pass" : "FAIL");
  return report.pass() ? kExitPass : kExitVerifierFail;
}

int cmd_selftest(std::uint64_t seed, int counts, const std::string& out_dir) {
  if (counts < 0) counts = 0;
  const auto results = run_selftests(seed, counts);
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("%-28s %3d/%3d pass\n", r.name.c_str(),
                r.total - r.failures, r.total);
    if (!r.pass()) {
      all_pass = false;
      fs::create_directories(out_dir);
      const std::string path =
          (fs::path(out_dir) / ("replay_" + r.name + ".json")).string();
      std::ofstream replay(path);
      replay << nlohmann::json{{"suite", r.name},
                               {"seed", seed},
                               {"counts", counts},
                               {"first_failing_case", r.first_failing_case},
                               {"failures", r.failures}}
                    .dump(2)
             << "\n";
      std::cerr << "suite " << r.name << " failed; replay written to " << path
                << "\n";
    }
  }
  return all_pass ? kExitPass : kExitVerifierFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "patchplan: contact-implicit trajectory optimization for multi-limbed "
      "climbing robots with patch grasping (consensus ADMM planner)"};
  app.require_subcommand(1);

  PlanOptions plan_opt;
  auto* plan = app.add_subcommand(
      "plan", "Plan a trajectory and export CSVs plus the verifier report");
  plan->add_option("--scenario", plan_opt.scenario_path, "Scenario JSON path")
      ->required();
  plan->add_option("--mode", plan_opt.mode, "two-block | multi-block");
  plan->add_option("--iters", plan_opt.iters, "Consensus iterations");
  plan->add_option("--rho", plan_opt.rho, "Penalty parameter override");
  plan->add_option("--N", plan_opt.horizon, "Horizon override");
  plan->add_option("--dt", plan_opt.dt, "Time-step override");
  plan->add_option("--out", plan_opt.out_dir, "Output directory");
  plan->add_option("--seed", plan_opt.seed, "Random seed (reserved)");
  plan->add_option("--tol-pos", plan_opt.tol_pos,
                   "Position tolerance for the verifier (m)");
  plan->add_option("--tol-force", plan_opt.tol_force,
                   "Force tolerance for the verifier (N)");
  plan->add_flag("--verbose", plan_opt.verbose, "Print the full report");

  std::string v_scenario, v_trajectory, v_contacts;
  auto* ver = app.add_subcommand(
      "verify", "Replay exported CSVs through the feasibility oracle");
  ver->add_option("--scenario", v_scenario, "Scenario JSON path")->required();
  ver->add_option("--trajectory", v_trajectory, "trajectory.csv path")
      ->required();
  ver->add_option("--contacts", v_contacts, "contacts.csv path")->required();

  std::uint64_t st_seed = 0;
  int st_counts = 100;
  std::string st_out = ".";
  auto* st = app.add_subcommand(
      "selftest", "Run the randomized solver/transcription oracle suites");
  st->add_option("--seed", st_seed, "Random seed");
  st->add_option("--counts", st_counts, "Cases per suite (0 = vacuous pass)");
  st->add_option("--out", st_out, "Directory for failure replay files");

  CLI11_PARSE(app, argc, argv);

  if (plan->parsed()) return cmd_plan(plan_opt);
  if (ver->parsed()) return cmd_verify(v_scenario, v_trajectory, v_contacts);
  if (st->parsed()) return cmd_selftest(st_seed, st_counts, st_out);
  return kExitInputError;
}
