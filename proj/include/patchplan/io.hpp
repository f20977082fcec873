#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "patchplan/consensus.hpp"
#include "patchplan/model.hpp"
#include "patchplan/verifier.hpp"

namespace patchplan {

namespace detail_io {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline void put3(std::ostream& os, const Vec3& v) {
  os << "," << fmt(v.x()) << "," << fmt(v.y()) << "," << fmt(v.z());
}

}  // namespace detail_io

/// trajectory.csv: one row per time step; lambda/tau columns are zero on the
/// terminal row (controls run t = 0..N-1).
inline void write_trajectory_csv(const std::string& path, const Scenario& s,
                                 const TrajectoryVariables& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,rx,ry,rz,thetax,thetay,thetaz,rdotx,rdoty,rdotz,thetadotx,"
         "thetadoty,thetadotz";
  for (int i = 0; i < s.robot.finger_count(); ++i) {
    const std::string is = std::to_string(i);
    out << ",p" << is << "x,p" << is << "y,p" << is << "z";
    out << ",q" << is << "x,q" << is << "y,q" << is << "z";
    out << ",lambda" << is << "x,lambda" << is << "y,lambda" << is << "z";
    out << ",tau" << is << "x,tau" << is << "y,tau" << is << "z";
  }
  out << "\n";
  for (int t = 0; t <= s.horizon; ++t) {
    out << t;
    detail_io::put3(out, traj.r[t]);
    detail_io::put3(out, traj.theta[t]);
    detail_io::put3(out, traj.rdot[t]);
    detail_io::put3(out, traj.thetadot[t]);
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      detail_io::put3(out, traj.p[t][i]);
      detail_io::put3(out, traj.q[t][i]);
      detail_io::put3(out, t < s.horizon ? traj.lambda[t][i] : Vec3::Zero());
      detail_io::put3(out, t < s.horizon ? traj.tau[t][i] : Vec3::Zero());
    }
    out << "\n";
  }
}

/// contacts.csv: one row per (t, finger, region) with the contact flag and
/// the local wrench.
inline void write_contacts_csv(const std::string& path, const Scenario& s,
                               const TrajectoryVariables& traj,
                               const DiscreteVariables& disc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,finger,region,alpha,fx,fy,fz,mx,my,mz\n";
  for (int t = 0; t < s.horizon; ++t) {
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      for (int c = 0; c < s.region_count(); ++c) {
        out << t << "," << i << "," << s.regions[c].id << ","
            << disc.alpha[t][i][c];
        detail_io::put3(out, traj.f[t][i][c]);
        detail_io::put3(out, traj.m[t][i][c]);
        out << "\n";
      }
    }
  }
}

/// residuals.csv with the documented column names, one row per iteration.
inline void write_residuals_csv(const std::string& path,
                                const std::vector<ResidualRecord>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "iter,res_pos_m,res_force_N,res_rot_rad,res_moment_Nm,res_dual\n";
  for (const auto& rec : history) {
    out << rec.iteration << "," << detail_io::fmt(rec.position) << ","
        << detail_io::fmt(rec.force) << "," << detail_io::fmt(rec.rotation)
        << "," << detail_io::fmt(rec.moment) << ","
        << detail_io::fmt(rec.dual) << "\n";
  }
}

class CsvParseError : public std::runtime_error {
 public:
  explicit CsvParseError(const std::string& what) : std::runtime_error(what) {}
};

inline TrajectoryVariables read_trajectory_csv(const std::string& path,
                                               const Scenario& s) {
  std::ifstream in(path);
  if (!in) throw CsvParseError("cannot open " + path);
  TrajectoryVariables traj = TrajectoryVariables::zeros(s);
  std::string line;
  if (!std::getline(in, line)) throw CsvParseError(path + ": empty file");
  const size_t expected = 13 + 12 * static_cast<size_t>(s.robot.finger_count());
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail_io::split_csv(line);
    if (cells.size() != expected)
      throw CsvParseError(path + ": wrong column count on row " +
                          std::to_string(rows));
    int at = 0;
    const auto get3 = [&]() {
      Vec3 v;
      for (int k = 0; k < 3; ++k) v[k] = std::stod(cells[at++]);
      return v;
    };
    const int t = std::stoi(cells[at++]);
    if (t < 0 || t > s.horizon)
      throw CsvParseError(path + ": time index out of range");
    traj.r[t] = get3();
    traj.theta[t] = get3();
    traj.rdot[t] = get3();
    traj.thetadot[t] = get3();
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      traj.p[t][i] = get3();
      traj.q[t][i] = get3();
      const Vec3 lam = get3();
      const Vec3 tau = get3();
      if (t < s.horizon) {
        traj.lambda[t][i] = lam;
        traj.tau[t][i] = tau;
      }
    }
    ++rows;
  }
  if (rows != s.horizon + 1)
    throw CsvParseError(path + ": expected " + std::to_string(s.horizon + 1) +
                        " rows, found " + std::to_string(rows));
  for (int t = 0; t <= s.horizon; ++t) {
    for (int l = 0; l < s.robot.limb_count; ++l) {
      const auto fingers = s.robot.fingers_of(l);
      traj.d[t][l] = traj.p[t][fingers[1]] - traj.p[t][fingers[0]];
    }
  }
  return traj;
}

/// Reads contacts.csv into the local wrenches and binaries. gamma follows
/// the torsion sign (tie at zero resolved to 1); beta is reconstructed
/// geometrically per face.
inline void read_contacts_csv(const std::string& path, const Scenario& s,
                              TrajectoryVariables& traj,
                              DiscreteVariables& disc) {
  std::ifstream in(path);
  if (!in) throw CsvParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw CsvParseError(path + ": empty file");
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail_io::split_csv(line);
    if (cells.size() != 10)
      throw CsvParseError(path + ": wrong column count on row " +
                          std::to_string(rows));
    const int t = std::stoi(cells[0]);
    const int i = std::stoi(cells[1]);
    const int region_id = std::stoi(cells[2]);
    if (t < 0 || t >= s.horizon || i < 0 || i >= s.robot.finger_count())
      throw CsvParseError(path + ": index out of range on row " +
                          std::to_string(rows));
    int c = -1;
    for (int cc = 0; cc < s.region_count(); ++cc) {
      if (s.regions[cc].id == region_id) c = cc;
    }
    if (c < 0) throw CsvParseError(path + ": unknown region id");
    disc.alpha[t][i][c] = std::stoi(cells[3]);
    for (int k = 0; k < 3; ++k) traj.f[t][i][c][k] = std::stod(cells[4 + k]);
    for (int k = 0; k < 3; ++k) traj.m[t][i][c][k] = std::stod(cells[7 + k]);
    disc.gamma[t][i][c] = traj.m[t][i][c].z() >= 0.0 ? 1 : 0;
    ++rows;
  }
  for (int t = 0; t < s.horizon; ++t) {
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      for (int v = 0; v < s.obstacle_count(); ++v) {
        const auto& faces = s.obstacles[v].faces;
        int best = 0;
        double best_margin = -kInf;
        for (int h = 0; h < 6; ++h) {
          const double margin =
              faces[h].world_offset - faces[h].world_row.dot(traj.p[t][i]);
          disc.beta[t][i][v][h] = margin >= 0.0 ? 0 : 1;
          if (margin > best_margin) {
            best_margin = margin;
            best = h;
          }
        }
        if (best_margin < 0.0) disc.beta[t][i][v][best] = 0;
      }
    }
  }
}

inline nlohmann::json report_to_json(const FeasibilityReport& rep) {
  nlohmann::json j;
  const auto family = [](const FamilyReport& f) {
    return nlohmann::json{{"max_violation", f.max_violation},
                          {"tolerance", f.tolerance},
                          {"pass", f.pass()}};
  };
  j["pass"] = rep.pass();
  j["families"] = {
      {"dynamics_force", family(rep.dynamics_force)},
      {"dynamics_moment", family(rep.dynamics_moment)},
      {"kinematics", family(rep.kinematics)},
      {"contact_logic", family(rep.contact_logic)},
      {"collision", family(rep.collision)},
      {"bounds", family(rep.bounds)},
      {"patch_membership",
       {{"violations", rep.patch_violations},
        {"checked", rep.patch_checked},
        {"pass", rep.patch_violations == 0}}}};
  j["force_residual_per_step"] = rep.force_residual_per_step;
  j["moment_residual_per_step"] = rep.moment_residual_per_step;
  return j;
}

inline void write_report_json(const std::string& path,
                              const FeasibilityReport& rep) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << report_to_json(rep).dump(2) << "\n";
}

}  // namespace patchplan
