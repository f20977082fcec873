#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "patchplan/layout.hpp"

namespace patchplan {

/// One consensus constraint: local slot j of block i agrees with global g.
struct ConsensusEdge {
  int block = 0;
  int local_slot = 0;
  int global_id = 0;
};

/// Bipartite graph between block-local variables and global variables, with
/// a per-block penalty weight.
struct ConsensusGraph {
  int num_blocks = 0;
  int num_globals = 0;
  std::vector<ConsensusEdge> edges;
  std::vector<double> rho;                     // per block
  std::vector<SlotGroup> global_group;         // residual grouping per global
  std::vector<std::vector<int>> by_global;     // edge ids per global, derived

  void finalize() {
    by_global.assign(num_globals, {});
    for (size_t e = 0; e < edges.size(); ++e)
      by_global[edges[e].global_id].push_back(static_cast<int>(e));
  }

  bool valid() const {
    if (static_cast<int>(rho.size()) != num_blocks) return false;
    for (const auto& list : by_global) {
      if (list.empty()) return false;  // every global needs >= 1 edge
    }
    return true;
  }
};

/// Grouped primal residual norms per iteration: positions in meters, forces
/// in newtons, rotations in radians, moments in newton-meters, plus the dual
/// residual norm. Groups partition the consensus edges exactly.
struct ResidualRecord {
  int iteration = 0;
  double position = 0.0;
  double force = 0.0;
  double rotation = 0.0;
  double moment = 0.0;
  double dual = 0.0;
};

/// Local copies, duals, global variables and the residual history.
struct ConsensusState {
  std::vector<Eigen::VectorXd> local;  // per block, block-layout sized
  Eigen::VectorXd dual_by_edge;        // one entry per graph edge
  Eigen::VectorXd global;              // delta
  int iteration = 0;
  std::vector<ResidualRecord> history;

  static ConsensusState zero(const ConsensusGraph& graph,
                             const std::vector<int>& block_sizes) {
    ConsensusState st;
    for (int n : block_sizes) st.local.push_back(Eigen::VectorXd::Zero(n));
    st.dual_by_edge = Eigen::VectorXd::Zero(graph.edges.size());
    st.global = Eigen::VectorXd::Zero(graph.num_globals);
    return st;
  }
};

/// Weighted-mean projection: per global g,
///   delta_g = sum_{(i,j) in N(g)} rho_i (eta_ij + eps_ij) / sum rho_i,
/// the exact stationary point of sum rho_i/2 ||eta + eps - delta||^2.
inline void consensus_projection(ConsensusState& state,
                                 const ConsensusGraph& graph) {
  for (int g = 0; g < graph.num_globals; ++g) {
    double num = 0.0, den = 0.0;
    for (int e : graph.by_global[g]) {
      const ConsensusEdge& edge = graph.edges[e];
      const double rho = graph.rho[edge.block];
      num += rho * (state.local[edge.block][edge.local_slot] +
                    state.dual_by_edge[e]);
      den += rho;
    }
    state.global[g] = num / den;
  }
}

/// Scaled dual ascent: eps += eta - delta per edge.
inline void dual_update(ConsensusState& state, const ConsensusGraph& graph) {
  for (size_t e = 0; e < graph.edges.size(); ++e) {
    const ConsensusEdge& edge = graph.edges[e];
    state.dual_by_edge[e] += state.local[edge.block][edge.local_slot] -
                             state.global[edge.global_id];
  }
}

/// Primal residuals grouped per Figs. of record (positions/forces/rotations/
/// moments, Euclidean over the whole trajectory); dual residual is
/// ||rho (delta - delta_prev)|| accumulated over edges.
inline ResidualRecord compute_residuals(const ConsensusState& state,
                                        const ConsensusGraph& graph,
                                        const Eigen::VectorXd& global_prev,
                                        int iteration) {
  ResidualRecord rec;
  rec.iteration = iteration;
  double pos2 = 0, force2 = 0, rot2 = 0, mom2 = 0, dual2 = 0;
  for (size_t e = 0; e < graph.edges.size(); ++e) {
    const ConsensusEdge& edge = graph.edges[e];
    const double diff = state.local[edge.block][edge.local_slot] -
                        state.global[edge.global_id];
    const double d2 = diff * diff;
    switch (graph.global_group[edge.global_id]) {
      case SlotGroup::Position: pos2 += d2; break;
      case SlotGroup::Rotation: rot2 += d2; break;
      case SlotGroup::Force: force2 += d2; break;
      case SlotGroup::Moment: mom2 += d2; break;
    }
    const double dd = graph.rho[edge.block] *
                      (state.global[edge.global_id] -
                       global_prev[edge.global_id]);
    dual2 += dd * dd;
  }
  rec.position = std::sqrt(pos2);
  rec.force = std::sqrt(force2);
  rec.rotation = std::sqrt(rot2);
  rec.moment = std::sqrt(mom2);
  rec.dual = std::sqrt(dual2);
  return rec;
}

}  // namespace patchplan
