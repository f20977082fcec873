#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <queue>
#include <vector>

#include "patchplan/qp.hpp"

namespace patchplan {

/// QP relaxation plus binary metadata. Every binary variable must own a
/// bound row of the constraint set (the transcription emits identity bound
/// rows, row index == variable index, which is the default here).
struct MiqpProblem {
  QpProblem qp;
  std::vector<int> binary_indices;
  /// Row of the constraint set bounding each binary; empty means row == var.
  std::vector<int> binary_bound_rows;

  int bound_row(int k) const {
    return binary_bound_rows.empty() ? binary_indices[k]
                                     : binary_bound_rows[k];
  }
};

struct MiqpSettings {
  QpSettings qp;
  double qp_tol = 1e-7;
  double int_tol = 1e-6;
  long node_limit = 100000;
  /// Round-and-fix primal heuristic cadence (0 disables; 1 = root only).
  int heuristic_period = 10;
};

/// Best-first branch and bound over the shared QP relaxation: one KKT
/// factorization for the whole tree, nodes differ only in binary bound rows.
/// Branching picks the most fractional binary, ties broken by lowest
/// variable index. Deterministic by construction.
inline SolveReport solve_miqp(const MiqpProblem& p, double tol, double gap,
                              MiqpSettings settings = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport out;
  const int nb = static_cast<int>(p.binary_indices.size());

  QpSettings node_qp = settings.qp;
  node_qp.polish = false;  // polish only the final re-solve
  QpSolver solver(p.qp.objective.quadratic(), p.qp.objective.linear(),
                  p.qp.constraints.matrix(), p.qp.constraints.lower(),
                  p.qp.constraints.upper(), node_qp);
  solver.set_objective_constant(p.qp.objective.constant());
  if (!solver.ok()) {
    out.status = SolveStatus::NumericalFailure;
    return out;
  }

  // Original relaxed bounds of the binary rows, to restore between nodes.
  std::vector<double> relax_lo(nb), relax_up(nb);
  for (int k = 0; k < nb; ++k) {
    relax_lo[k] = p.qp.constraints.lower()[p.bound_row(k)];
    relax_up[k] = p.qp.constraints.upper()[p.bound_row(k)];
  }

  using Warm = std::pair<Eigen::VectorXd, Eigen::VectorXd>;
  struct Node {
    std::vector<int8_t> fixed;  // -1 free, 0, 1
    double bound = -kInf;
    long seq = 0;
    std::shared_ptr<const Warm> warm;
  };
  struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
      if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;

  long seq = 0;
  Node root;
  root.fixed.assign(nb, -1);
  if (p.qp.warm_x.size() > 0) {
    root.warm = std::make_shared<Warm>(
        p.qp.warm_x, p.qp.warm_y.size() > 0
                         ? p.qp.warm_y
                         : Eigen::VectorXd::Zero(p.qp.constraints.num_rows()));
  }
  root.seq = seq++;
  open.push(root);

  double incumbent_obj = kInf;
  std::vector<int8_t> incumbent_assign;
  bool any_relaxation_solved = false;
  long nodes = 0;
  bool hit_node_limit = false;

  const auto apply_fixings = [&](const std::vector<int8_t>& fixed) {
    for (int k = 0; k < nb; ++k) {
      if (fixed[k] < 0) {
        solver.set_bound_row(p.bound_row(k), relax_lo[k], relax_up[k]);
      } else {
        const double v = fixed[k];
        solver.set_bound_row(p.bound_row(k), v, v);
      }
    }
  };

  const auto solve_node = [&](const Node& node) {
    apply_fixings(node.fixed);
    if (node.warm) {
      solver.warm_start(node.warm->first, node.warm->second);
    } else {
      solver.reset_state();
    }
    return solver.solve(settings.qp_tol);
  };

  const auto prune_bound = [&](double bound) {
    return bound >= incumbent_obj - gap * std::max(1.0, std::abs(incumbent_obj));
  };

  const auto try_assignment = [&](const std::vector<int8_t>& assign,
                                  std::shared_ptr<const Warm> warm) {
    Node fixed_node;
    fixed_node.fixed = assign;
    fixed_node.warm = std::move(warm);
    const SolveReport rep = solve_node(fixed_node);
    if (rep.status == SolveStatus::Optimal && rep.objective < incumbent_obj) {
      incumbent_obj = rep.objective;
      incumbent_assign = assign;
    }
  };

  while (!open.empty()) {
    if (nodes >= settings.node_limit) {
      hit_node_limit = true;
      break;
    }
    Node node = open.top();
    open.pop();
    if (prune_bound(node.bound)) continue;

    const SolveReport rep = solve_node(node);
    ++nodes;
    if (rep.status == SolveStatus::Infeasible) continue;
    if (rep.status == SolveStatus::NumericalFailure) continue;
    const bool bound_valid = rep.status == SolveStatus::Optimal;
    if (bound_valid) any_relaxation_solved = true;
    const double node_obj = bound_valid ? rep.objective : node.bound;
    if (prune_bound(node_obj)) continue;

    // Most fractional free binary; ties by lowest variable index (the
    // binary list is kept sorted by the builders).
    int branch_k = -1;
    double best_frac = settings.int_tol;
    for (int k = 0; k < nb; ++k) {
      const double v = rep.primal[p.binary_indices[k]];
      const double frac = std::abs(v - std::round(v));
      if (frac > best_frac) {
        best_frac = frac;
        branch_k = k;
      }
    }

    if (branch_k < 0) {
      // Integral relaxation: fix the rounded assignment and re-solve so the
      // incumbent objective is the exact conditional QP optimum.
      std::vector<int8_t> assign(nb);
      for (int k = 0; k < nb; ++k) {
        assign[k] = node.fixed[k] >= 0
                        ? node.fixed[k]
                        : static_cast<int8_t>(
                              std::round(rep.primal[p.binary_indices[k]]));
      }
      try_assignment(assign,
                     std::make_shared<Warm>(rep.primal, rep.dual));
      continue;
    }

    auto warm = std::make_shared<Warm>(rep.primal, rep.dual);
    if (settings.heuristic_period > 0 &&
        (nodes == 1 || (incumbent_assign.empty() &&
                        nodes % settings.heuristic_period == 0))) {
      std::vector<int8_t> assign(nb);
      for (int k = 0; k < nb; ++k) {
        assign[k] = node.fixed[k] >= 0
                        ? node.fixed[k]
                        : static_cast<int8_t>(
                              std::round(rep.primal[p.binary_indices[k]]));
      }
      try_assignment(assign, warm);
      if (prune_bound(node_obj)) continue;
    }

    for (int8_t value : {int8_t{0}, int8_t{1}}) {
      Node child;
      child.fixed = node.fixed;
      child.fixed[branch_k] = value;
      child.bound = node_obj;
      child.warm = warm;
      child.seq = seq++;
      open.push(child);
    }
  }

  out.node_count = nodes;
  if (incumbent_assign.empty()) {
    out.status = hit_node_limit          ? SolveStatus::NodeLimit
                 : any_relaxation_solved ? SolveStatus::Infeasible
                                         : SolveStatus::NumericalFailure;
    out.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
  }

  // Final polished re-solve with the incumbent binaries pinned.
  apply_fixings(incumbent_assign);
  QpSettings final_qp = settings.qp;
  final_qp.polish = true;
  QpSolver final_solver(p.qp.objective.quadratic(), p.qp.objective.linear(),
                        p.qp.constraints.matrix(), solver.lower(),
                        solver.upper(), final_qp);
  final_solver.set_objective_constant(p.qp.objective.constant());
  SolveReport final_rep = final_solver.solve(std::max(tol, 1e-9));
  for (int k = 0; k < nb; ++k) {
    final_rep.primal[p.binary_indices[k]] =
        static_cast<double>(incumbent_assign[k]);
  }
  final_rep.objective = 0.5 * final_rep.primal.dot(
                            p.qp.objective.quadratic() * final_rep.primal) +
                        p.qp.objective.linear().dot(final_rep.primal) +
                        p.qp.objective.constant();
  final_rep.node_count = nodes;
  final_rep.status =
      hit_node_limit ? SolveStatus::NodeLimit : SolveStatus::Optimal;
  final_rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return final_rep;
}

}  // namespace patchplan
