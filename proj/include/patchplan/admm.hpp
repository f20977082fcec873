#pragma once

#include <cstdlib>
#include <future>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "patchplan/splits.hpp"

namespace patchplan {

enum class AdmmMode { TwoBlock, MultiBlock };

inline AdmmMode admm_mode_from_string(const std::string& name) {
  if (name == "two-block") return AdmmMode::TwoBlock;
  if (name == "multi-block") return AdmmMode::MultiBlock;
  throw std::invalid_argument("unknown mode: " + name +
                              " (expected two-block or multi-block)");
}

/// Raised when a block solve comes back infeasible or numerically broken;
/// iteration-limited blocks do not abort the run (their best iterate is
/// used, matching how inexact subproblem solves are tolerated).
class AdmmBlockError : public std::runtime_error {
 public:
  AdmmBlockError(int block, int iteration, SolveStatus status)
      : std::runtime_error("block " + std::to_string(block) +
                           " returned status '" + to_string(status) +
                           "' at consensus iteration " +
                           std::to_string(iteration)),
        block_(block),
        iteration_(iteration) {}
  int block() const { return block_; }
  int iteration() const { return iteration_; }

 private:
  int block_;
  int iteration_;
};

struct AdmmResult {
  TrajectoryVariables trajectory;
  DiscreteVariables discrete;
  std::vector<ResidualRecord> history;
  int iterations_run = 0;
};

/// Straight-line interpolation from the initial to the goal state with
/// fingers at their snapshots; wrench slots start at zero.
inline Eigen::VectorXd initial_global_guess(const Scenario& s,
                                            const VariableLayout& layout) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(layout.total_size());
  const int N = s.horizon;
  for (int t = 0; t <= N; ++t) {
    const double a = static_cast<double>(t) / N;
    StateSnapshot snap;
    snap.body.r = (1 - a) * s.initial.body.r + a * s.goal.body.r;
    snap.body.theta = (1 - a) * s.initial.body.theta + a * s.goal.body.theta;
    snap.body.rdot = (1 - a) * s.initial.body.rdot + a * s.goal.body.rdot;
    snap.body.thetadot =
        (1 - a) * s.initial.body.thetadot + a * s.goal.body.thetadot;
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      snap.p.push_back((1 - a) * s.initial.p[i] + a * s.goal.p[i]);
      snap.q.push_back((1 - a) * s.initial.q[i] + a * s.goal.q[i]);
    }
    write_snapshot(s, layout, t, snap, x);
  }
  return x;
}

inline int admm_thread_cap() {
  if (const char* env = std::getenv("PATCHPLAN_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs the consensus loop: solve all blocks (each with its penalty term
/// refreshed), update the globals (NLP solve in two-block mode, weighted
/// projection in multi-block mode), ascend the duals, record residuals.
/// Returns the MIQP solution in two-block mode; in multi-block mode the
/// NLP's continuous part with wrenches/binaries from the limb MIQPs.
inline AdmmResult run_admm(const Scenario& s, AdmmMode mode, int iters) {
  if (iters < 1) throw std::invalid_argument("run_admm: iters must be >= 1");
  SplitProblem split = mode == AdmmMode::TwoBlock
                           ? build_two_block_split(s)
                           : build_multi_block_split(s);
  ConsensusGraph& graph = split.graph;
  const int num_solver_blocks = graph.num_blocks;  // NLP excluded in 2-block

  ConsensusState state = ConsensusState::zero(graph, split.block_sizes());
  state.global = initial_global_guess(s, split.global_layout);

  // Template linear costs, restored before each penalty refresh.
  std::vector<Eigen::VectorXd> template_q;
  for (auto& block : split.blocks) {
    template_q.push_back(block.is_miqp ? block.miqp.qp.objective.linear()
                                       : block.nlp.objective.linear());
  }

  std::vector<SolveReport> last_report(split.blocks.size());
  MiqpSettings miqp_settings;
  miqp_settings.qp.max_iter = s.solver.qp_max_iter;
  miqp_settings.node_limit = s.solver.miqp_node_limit;

  const int thread_cap = admm_thread_cap();

  const auto refresh_penalty = [&](int b) {
    auto& block = split.blocks[b];
    Eigen::VectorXd q = template_q[b];
    for (int e : block.edge_ids) {
      const ConsensusEdge& edge = graph.edges[e];
      q[edge.local_slot] += graph.rho[b] * (state.dual_by_edge[e] -
                                            state.global[edge.global_id]);
    }
    if (block.is_miqp) {
      block.miqp.qp.objective.linear() = q;
    } else {
      block.nlp.objective.linear() = q;
    }
  };

  const auto solve_block = [&](int b) -> SolveReport {
    auto& block = split.blocks[b];
    if (block.is_miqp) {
      return solve_miqp(block.miqp, s.solver.qp_tol, s.solver.miqp_gap,
                        miqp_settings);
    }
    NlpSettings nlp_settings;
    nlp_settings.qp.max_iter = s.solver.qp_max_iter;
    return solve_nlp(block.nlp, s.solver.nlp_tol, s.solver.nlp_max_iter,
                     nlp_settings);
  };

  AdmmResult result;
  for (int k = 0; k < iters; ++k) {
    const Eigen::VectorXd global_prev = state.global;

    for (int b = 0; b < num_solver_blocks; ++b) {
      refresh_penalty(b);
      auto& block = split.blocks[b];
      if (block.is_miqp) {
        block.miqp.qp.warm_x = last_report[b].primal;
        block.miqp.qp.warm_y = last_report[b].dual;
      } else if (last_report[b].primal.size() > 0) {
        block.nlp.initial = last_report[b].primal;
      } else {
        block.nlp.initial = state.global;
      }
    }

    // Block solves are independent; run them in bounded batches.
    for (int start = 0; start < num_solver_blocks; start += thread_cap) {
      const int end = std::min(num_solver_blocks, start + thread_cap);
      std::vector<std::future<SolveReport>> futures;
      for (int b = start + 1; b < end; ++b) {
        futures.push_back(
            std::async(std::launch::async, [&, b] { return solve_block(b); }));
      }
      last_report[start] = solve_block(start);
      for (int b = start + 1; b < end; ++b)
        last_report[b] = futures[b - start - 1].get();
    }
    for (int b = 0; b < num_solver_blocks; ++b) {
      const SolveStatus st = last_report[b].status;
      if (st == SolveStatus::Infeasible || st == SolveStatus::Unbounded ||
          st == SolveStatus::NumericalFailure) {
        throw AdmmBlockError(b, k + 1, st);
      }
      state.local[b] = last_report[b].primal;
    }

    if (mode == AdmmMode::TwoBlock) {
      // Global update is the NLP itself (P2b).
      const int nlp_id = 1;
      auto& nlp_block = split.blocks[nlp_id];
      Eigen::VectorXd q = template_q[nlp_id];
      for (size_t e = 0; e < graph.edges.size(); ++e) {
        const ConsensusEdge& edge = graph.edges[e];
        q[edge.global_id] -= graph.rho[0] *
                             (state.local[0][edge.local_slot] +
                              state.dual_by_edge[e]);
      }
      nlp_block.nlp.objective.linear() = q;
      nlp_block.nlp.initial = last_report[nlp_id].primal.size() > 0
                                  ? last_report[nlp_id].primal
                                  : state.global;
      NlpSettings nlp_settings;
      nlp_settings.qp.max_iter = s.solver.qp_max_iter;
      const SolveReport rep = solve_nlp(nlp_block.nlp, s.solver.nlp_tol,
                                        s.solver.nlp_max_iter, nlp_settings);
      if (rep.status == SolveStatus::Infeasible ||
          rep.status == SolveStatus::Unbounded ||
          rep.status == SolveStatus::NumericalFailure) {
        throw AdmmBlockError(nlp_id, k + 1, rep.status);
      }
      last_report[nlp_id] = rep;
      state.global = rep.primal;
    } else {
      consensus_projection(state, graph);
    }

    dual_update(state, graph);
    state.iteration = k + 1;
    state.history.push_back(
        compute_residuals(state, graph, global_prev, k + 1));
    result.iterations_run = k + 1;

    if (s.solver.early_stop) {
      const ResidualRecord& rec = state.history.back();
      if (rec.position <= s.solver.stop_pos_residual &&
          rec.force <= s.solver.stop_force_residual) {
        break;
      }
    }
  }

  result.trajectory = TrajectoryVariables::zeros(s);
  result.discrete = DiscreteVariables::zeros(s);
  if (mode == AdmmMode::TwoBlock) {
    unpack_variables(s, split.blocks[0].layout, state.local[0],
                     result.trajectory, result.discrete);
  } else {
    for (int b = 0; b < s.robot.limb_count; ++b) {
      unpack_variables(s, split.blocks[b].layout, state.local[b],
                       result.trajectory, result.discrete);
    }
    unpack_variables(s, split.blocks[s.robot.limb_count].layout,
                     state.local[s.robot.limb_count], result.trajectory,
                     result.discrete);
  }
  result.history = state.history;
  return result;
}

}  // namespace patchplan
