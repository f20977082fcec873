#pragma once

#include <vector>

#include "patchplan/consensus.hpp"
#include "patchplan/miqp.hpp"
#include "patchplan/nlp.hpp"
#include "patchplan/transcription.hpp"

namespace patchplan {

/// One solver block of a split: either an MIQP (discrete constraints) or
/// the NLP (nonlinear continuous constraints). The consensus penalty's
/// quadratic part is baked into the objective at build time; the linear
/// part is refreshed every iteration.
struct BlockTemplate {
  VariableLayout layout;
  bool is_miqp = true;
  MiqpProblem miqp;
  NlpProblem nlp;
  std::vector<int> edge_ids;  // graph edges owned by this block
};

struct SplitProblem {
  VariableLayout global_layout;
  ConsensusGraph graph;
  std::vector<BlockTemplate> blocks;

  std::vector<int> block_sizes() const {
    std::vector<int> out;
    for (const auto& b : blocks) out.push_back(b.layout.total_size());
    return out;
  }
};

namespace detail_split {

/// Adds identity consensus edges for every (x, u, slack) slot the block
/// layout shares with the global layout.
inline void add_edges(ConsensusGraph& graph, SplitProblem& split, int block,
                      const VariableLayout& local,
                      const VariableLayout& global) {
  const Scenario& s = local.scenario();
  const int N = s.horizon;
  auto& ids = split.blocks[block].edge_ids;
  const auto tie3 = [&](int local_off, int global_off) {
    for (int k = 0; k < 3; ++k) {
      ids.push_back(static_cast<int>(graph.edges.size()));
      graph.edges.push_back({block, local_off + k, global_off + k});
    }
  };
  for (int t = 0; t <= N; ++t) {
    tie3(local.r(t), global.r(t));
    tie3(local.theta(t), global.theta(t));
    tie3(local.rdot(t), global.rdot(t));
    tie3(local.thetadot(t), global.thetadot(t));
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (!local.has_finger(i)) continue;
      tie3(local.p(t, i), global.p(t, i));
      tie3(local.q(t, i), global.q(t, i));
    }
    for (int l = 0; l < s.robot.limb_count; ++l) {
      if (local.has_gripper(l)) tie3(local.d(t, l), global.d(t, l));
    }
    if (t == N) break;
    for (int i = 0; i < s.robot.finger_count(); ++i) {
      if (!local.has_finger(i) || !local.has_u()) continue;
      tie3(local.lambda(t, i), global.lambda(t, i));
      tie3(local.tau(t, i), global.tau(t, i));
    }
    for (int l = 0; l < s.robot.limb_count; ++l) {
      if (local.has_slack(l) && global.has_slack(l))
        tie3(local.slack(t, l), global.slack(t, l));
    }
  }
}

/// Bakes the quadratic part of every edge's penalty into an objective.
inline void bake_penalty(QuadraticObjective& obj, const ConsensusGraph& graph,
                         const std::vector<ConsensusEdge>& edges, int block) {
  for (const auto& edge : edges) {
    if (edge.block == block) obj.add_diagonal(edge.local_slot,
                                              graph.rho[block]);
  }
}

inline MiqpProblem build_block_miqp(const Scenario& s,
                                    const VariableLayout& layout,
                                    double body_cost_scale) {
  MiqpProblem p;
  p.qp.objective = build_cost(s, layout, body_cost_scale);
  LinearConstraintSet rows = build_variable_bound_rows(s, layout);
  rows.append(build_linear_dynamics(s, layout));
  rows.append(build_boundary_conditions(s, layout));
  rows.append(build_kinematics(s, layout, s.solver.kinematics_linearization));
  rows.append(build_contact_logic(s, layout));
  rows.append(build_wrench_transform(s, layout));
  rows.append(build_collision(s, layout));
  rows.set_binary_indices(layout.binary_indices());
  p.qp.constraints = std::move(rows);
  p.binary_indices = layout.binary_indices();
  return p;
}

/// Linear integration rows only (the force rows live in the smooth set for
/// the NLP blocks).
inline LinearConstraintSet build_integration_rows(const Scenario& s,
                                                  const VariableLayout& layout) {
  LinearConstraintSet set(layout.total_size());
  for (int t = 0; t < s.horizon; ++t) {
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

inline NlpProblem build_block_nlp(const Scenario& s,
                                  const VariableLayout& layout) {
  NlpProblem p;
  p.objective = QuadraticObjective(layout.total_size());
  p.smooth = build_smooth_dynamics(s, layout);
  LinearConstraintSet rows = build_variable_bound_rows(s, layout);
  rows.append(build_integration_rows(s, layout));
  rows.append(build_boundary_conditions(s, layout));
  rows.append(build_kinematics_orientation_rows(s, layout));
  // In the multi-block split the NLP carries, per limb, an aux copy of the
  // other limbs' total force; it reconciles each limb MIQP's dynamics slack.
  for (int l = 0; l < s.robot.limb_count; ++l) {
    if (!layout.has_slack(l)) continue;
    for (int t = 0; t < s.horizon; ++t) {
      for (int k = 0; k < 3; ++k) {
        std::vector<std::pair<int, double>> row = {
            {layout.slack(t, l) + k, 1.0}};
        for (int i = 0; i < s.robot.finger_count(); ++i) {
          if (s.robot.gripper_of(i) == l) continue;
          row.emplace_back(layout.lambda(t, i) + k, -1.0);
        }
        rows.add_equality(row, 0.0);
      }
    }
  }
  p.linear = std::move(rows);
  p.initial = Eigen::VectorXd::Zero(layout.total_size());
  return p;
}

}  // namespace detail_split

/// Two-block split (P2): one MIQP with every discrete constraint and the
/// linearized continuous rows, one NLP with the full nonlinear dynamics and
/// exact kinematics. Consensus covers exactly (x_t, u_t) — never y or z.
inline SplitProblem build_two_block_split(const Scenario& s) {
  SplitProblem split;
  split.global_layout = VariableLayout::consensus(s);

  ConsensusGraph graph;
  graph.num_blocks = 1;
  graph.num_globals = split.global_layout.total_size();
  graph.rho = {s.solver.rho_blocks.empty() ? s.solver.rho
                                           : s.solver.rho_blocks[0]};
  graph.global_group.resize(graph.num_globals);
  for (int g = 0; g < graph.num_globals; ++g)
    graph.global_group[g] = split.global_layout.group_of(g);

  BlockTemplate miqp_block;
  miqp_block.layout = VariableLayout::full(s);
  miqp_block.is_miqp = true;
  miqp_block.miqp = detail_split::build_block_miqp(s, miqp_block.layout, 1.0);
  split.blocks.push_back(std::move(miqp_block));
  detail_split::add_edges(graph, split, 0, split.blocks[0].layout,
                          split.global_layout);
  detail_split::bake_penalty(split.blocks[0].miqp.qp.objective, graph,
                             graph.edges, 0);

  BlockTemplate nlp_block;  // the delta-update problem, not a graph block
  nlp_block.layout = split.global_layout;
  nlp_block.is_miqp = false;
  nlp_block.nlp = detail_split::build_block_nlp(s, nlp_block.layout);
  for (const auto& edge : graph.edges) {
    nlp_block.nlp.objective.add_diagonal(edge.global_id, graph.rho[0]);
  }
  split.blocks.push_back(std::move(nlp_block));

  graph.finalize();
  split.graph = std::move(graph);
  return split;
}

/// Multi-block split (P3): one MIQP per limb (own fingers' kinematics,
/// contacts, collisions and wrenches, a full body copy, force dynamics over
/// its own fingers plus a slack absorbing the other limbs' contribution)
/// and one NLP block; the global update is the weighted-mean projection.
inline SplitProblem build_multi_block_split(const Scenario& s) {
  SplitProblem split;
  const int nl = s.robot.limb_count;
  const bool with_slack = nl > 1;
  split.global_layout = VariableLayout::consensus(s, with_slack);

  ConsensusGraph graph;
  graph.num_blocks = nl + 1;
  graph.num_globals = split.global_layout.total_size();
  for (int b = 0; b < nl + 1; ++b) {
    graph.rho.push_back(
        b < static_cast<int>(s.solver.rho_blocks.size())
            ? s.solver.rho_blocks[b]
            : s.solver.rho);
  }
  graph.global_group.resize(graph.num_globals);
  for (int g = 0; g < graph.num_globals; ++g)
    graph.global_group[g] = split.global_layout.group_of(g);

  for (int l = 0; l < nl; ++l) {
    BlockTemplate block;
    block.layout = VariableLayout::limb(s, l);
    block.is_miqp = true;
    block.miqp = detail_split::build_block_miqp(s, block.layout, 1.0 / nl);
    split.blocks.push_back(std::move(block));
    detail_split::add_edges(graph, split, l, split.blocks[l].layout,
                            split.global_layout);
  }

  BlockTemplate nlp_block;
  nlp_block.layout = split.global_layout;
  nlp_block.is_miqp = false;
  nlp_block.nlp = detail_split::build_block_nlp(s, nlp_block.layout);
  split.blocks.push_back(std::move(nlp_block));
  detail_split::add_edges(graph, split, nl, split.blocks[nl].layout,
                          split.global_layout);

  for (int b = 0; b < nl; ++b) {
    detail_split::bake_penalty(split.blocks[b].miqp.qp.objective, graph,
                               graph.edges, b);
  }
  detail_split::bake_penalty(split.blocks[nl].nlp.objective, graph,
                             graph.edges, nl);

  graph.finalize();
  split.graph = std::move(graph);
  return split;
}

}  // namespace patchplan
