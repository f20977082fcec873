#pragma once

#include <algorithm>
#include <vector>

#include "patchplan/constraints.hpp"
#include "patchplan/qp.hpp"

namespace patchplan {

/// Smooth constrained problem: quadratic objective (cost + consensus
/// penalty), differentiable residual boxes, exact linear rows, start point.
struct NlpProblem {
  QuadraticObjective objective{0};
  SmoothConstraintSet smooth{0};
  LinearConstraintSet linear{0};
  Eigen::VectorXd initial;
};

struct NlpSettings {
  double trust_init = 1.0;
  double trust_min = 1e-12;
  double trust_max = 1e4;
  double accept_ratio = 0.1;
  double expand_ratio = 0.7;
  double penalty_init = 10.0;
  double penalty_max = 1e8;
  double qp_tol = 1e-8;
  QpSettings qp;
};

struct NlpIterEntry {
  int iter = 0;
  double objective = 0.0;
  double merit = 0.0;
  double violation = 0.0;
  double stationarity = 0.0;
  double trust_radius = 0.0;
  bool accepted = false;
};

namespace detail_nlp {

inline double box_violation_l1(const Eigen::VectorXd& value,
                               const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper) {
  double total = 0.0;
  for (int i = 0; i < value.size(); ++i) {
    total += std::max(0.0, lower[i] - value[i]);
    total += std::max(0.0, value[i] - upper[i]);
  }
  return total;
}

inline double box_violation_max(const Eigen::VectorXd& value,
                                const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper) {
  double worst = 0.0;
  for (int i = 0; i < value.size(); ++i) {
    worst = std::max(worst, lower[i] - value[i]);
    worst = std::max(worst, value[i] - upper[i]);
  }
  return worst;
}

}  // namespace detail_nlp

/// Sequential quadratic approximation with an l1 exact-penalty merit
/// function, elastic subproblems, and an infinity-norm trust region.
/// status = Optimal guarantees first-order KKT residual and constraint
/// violation <= tol; iteration-limit returns the best iterate found.
inline SolveReport solve_nlp(const NlpProblem& p, double tol, int max_iter,
                             NlpSettings settings = {},
                             std::vector<NlpIterEntry>* log = nullptr) {
  using detail_nlp::box_violation_l1;
  using detail_nlp::box_violation_max;
  const auto t0 = std::chrono::steady_clock::now();
  const int n = p.objective.num_vars();
  const int ms = p.smooth.total_dim();
  const int ml = p.linear.num_rows();

  const SparseMatrix& P = p.objective.quadratic();
  const Eigen::VectorXd& q = p.objective.linear();
  const SparseMatrix A = p.linear.matrix();
  const Eigen::VectorXd l_lin = p.linear.lower();
  const Eigen::VectorXd u_lin = p.linear.upper();
  const Eigen::VectorXd l_s = p.smooth.lower();
  const Eigen::VectorXd u_s = p.smooth.upper();

  Eigen::VectorXd x = p.initial;
  double trust = settings.trust_init;
  double penalty = settings.penalty_init;

  const auto objective_at = [&](const Eigen::VectorXd& v) {
    return p.objective.value(v);
  };
  const auto violation_l1_at = [&](const Eigen::VectorXd& v) {
    double total = 0.0;
    if (ms > 0) total += box_violation_l1(p.smooth.eval(v), l_s, u_s);
    if (ml > 0) total += box_violation_l1(A * v, l_lin, u_lin);
    return total;
  };
  const auto violation_max_at = [&](const Eigen::VectorXd& v) {
    double worst = 0.0;
    if (ms > 0) worst = box_violation_max(p.smooth.eval(v), l_s, u_s);
    if (ml > 0) worst = std::max(worst, box_violation_max(A * v, l_lin, u_lin));
    return worst;
  };

  SolveReport best;
  best.primal = x;
  best.objective = objective_at(x);
  double best_merit = best.objective + penalty * violation_l1_at(x);
  double last_stationarity = kInf;
  Eigen::VectorXd y_smooth = Eigen::VectorXd::Zero(ms);
  Eigen::VectorXd y_linear = Eigen::VectorXd::Zero(ml);

  SolveStatus status = SolveStatus::IterationLimit;
  int iter = 0;
  for (iter = 1; iter <= max_iter; ++iter) {
    const Eigen::VectorXd c_s = ms > 0 ? p.smooth.eval(x) : Eigen::VectorXd();
    const SparseMatrix J =
        ms > 0 ? p.smooth.jacobian(x) : SparseMatrix(0, n);
    const Eigen::VectorXd ax = ml > 0 ? A * x : Eigen::VectorXd();

    // Stationarity of the l1-penalized KKT system with current multipliers.
    Eigen::VectorXd grad = P * x + q;
    if (ms > 0) grad += J.transpose() * y_smooth;
    if (ml > 0) grad += A.transpose() * y_linear;
    const double stationarity = grad.cwiseAbs().maxCoeff();
    const double viol_max = violation_max_at(x);
    last_stationarity = stationarity;
    if (stationarity <= tol && viol_max <= tol) {
      status = SolveStatus::Optimal;
      break;
    }

    // Violated linear rows get elastics so the subproblem stays feasible.
    std::vector<int> elastic_lin;
    if (ml > 0) {
      for (int i = 0; i < ml; ++i) {
        if (ax[i] < l_lin[i] - 1e-12 || ax[i] > u_lin[i] + 1e-12)
          elastic_lin.push_back(i);
      }
    }
    const int ne = 2 * ms + 2 * static_cast<int>(elastic_lin.size());
    const int nv = n + ne;

    QuadraticObjective sub_obj(nv);
    for (int k = 0; k < P.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(P, k); it; ++it) {
        if (it.row() <= it.col())
          sub_obj.add_quadratic(static_cast<int>(it.row()),
                                static_cast<int>(it.col()), it.value());
      }
    }
    const Eigen::VectorXd g0 = P * x + q;
    for (int j = 0; j < n; ++j) sub_obj.add_linear(j, g0[j]);
    for (int e = 0; e < ne; ++e) sub_obj.add_linear(n + e, penalty);

    // Smooth rows, linearized and elasticized: l-c <= J d + e+ - e- <= u-c.
    LinearConstraintSet rows(nv);
    {
      std::vector<std::vector<std::pair<int, double>>> smooth_coeffs(ms);
      for (int k = 0; k < J.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(J, k); it; ++it) {
          smooth_coeffs[it.row()].emplace_back(static_cast<int>(it.col()),
                                               it.value());
        }
      }
      for (int i = 0; i < ms; ++i) {
        auto coeffs = smooth_coeffs[i];
        coeffs.emplace_back(n + 2 * i, 1.0);
        coeffs.emplace_back(n + 2 * i + 1, -1.0);
        rows.add_row(coeffs, l_s[i] - c_s[i], u_s[i] - c_s[i]);
      }
      std::vector<std::vector<std::pair<int, double>>> lin_coeffs(ml);
      for (int k = 0; k < A.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
          lin_coeffs[it.row()].emplace_back(static_cast<int>(it.col()),
                                            it.value());
        }
      }
      int e_at = n + 2 * ms;
      std::vector<int> lin_elastic_slot(ml, -1);
      for (int idx : elastic_lin) {
        lin_elastic_slot[idx] = e_at;
        e_at += 2;
      }
      for (int i = 0; i < ml; ++i) {
        auto coeffs = lin_coeffs[i];
        if (lin_elastic_slot[i] >= 0) {
          coeffs.emplace_back(lin_elastic_slot[i], 1.0);
          coeffs.emplace_back(lin_elastic_slot[i] + 1, -1.0);
        }
        rows.add_row(coeffs, l_lin[i] - ax[i], u_lin[i] - ax[i]);
      }
      // Elastic nonnegativity and the trust-region box.
      for (int e = 0; e < ne; ++e) rows.add_row({{n + e, 1.0}}, 0.0, kInf);
      for (int j = 0; j < n; ++j) rows.add_row({{j, 1.0}}, -trust, trust);
    }

    QpSettings qp_settings = settings.qp;
    qp_settings.polish = true;
    QpSolver sub(sub_obj.quadratic(), sub_obj.linear(), rows.matrix(),
                 rows.lower(), rows.upper(), qp_settings);
    if (!sub.ok()) {
      status = SolveStatus::NumericalFailure;
      break;
    }
    const SolveReport sub_rep = sub.solve(settings.qp_tol);
    if (sub_rep.status != SolveStatus::Optimal &&
        sub_rep.status != SolveStatus::IterationLimit) {
      status = SolveStatus::NumericalFailure;
      break;
    }
    const Eigen::VectorXd step = sub_rep.primal.head(n);

    // Multiplier and penalty update from the subproblem duals.
    if (ms > 0) y_smooth = sub_rep.dual.segment(0, ms);
    if (ml > 0) y_linear = sub_rep.dual.segment(ms, ml);
    double y_inf = 0.0;
    if (ms > 0) y_inf = std::max(y_inf, y_smooth.cwiseAbs().maxCoeff());
    if (ml > 0) {
      for (int i : elastic_lin)
        y_inf = std::max(y_inf, std::abs(y_linear[i]));
    }
    if (penalty < 1.5 * y_inf && penalty < settings.penalty_max) {
      penalty = std::min(settings.penalty_max, 2.0 * y_inf);
    }

    const double merit_now = objective_at(x) + penalty * violation_l1_at(x);
    double model_elastics = 0.0;
    for (int e = 0; e < ne; ++e)
      model_elastics += std::max(0.0, sub_rep.primal[n + e]);
    const double model_merit = 0.5 * step.dot(P * step) + g0.dot(step) +
                               penalty * model_elastics +
                               objective_at(x);
    const double predicted = merit_now - model_merit;

    const Eigen::VectorXd x_trial = x + step;
    const double merit_trial =
        objective_at(x_trial) + penalty * violation_l1_at(x_trial);
    const double actual = merit_now - merit_trial;
    const double ratio = predicted > 1e-16 ? actual / predicted : -1.0;

    const bool accepted = predicted > 1e-16 && ratio >= settings.accept_ratio;
    if (log) {
      log->push_back({iter, objective_at(x_trial), merit_trial,
                      violation_l1_at(x_trial), stationarity, trust,
                      accepted});
    }
    if (accepted) {
      x = x_trial;
      if (merit_trial < best_merit) {
        best_merit = merit_trial;
        best.primal = x;
        best.objective = objective_at(x);
      }
      if (ratio >= settings.expand_ratio &&
          step.cwiseAbs().maxCoeff() >= 0.9 * trust) {
        trust = std::min(settings.trust_max, 2.0 * trust);
      }
    } else {
      trust = std::max(settings.trust_min, 0.25 * trust);
      if (trust <= settings.trust_min && predicted <= 1e-16) {
        // No progress possible at the smallest trust radius.
        const double v = violation_max_at(x);
        status = (v <= tol && stationarity <= tol)
                     ? SolveStatus::Optimal
                     : SolveStatus::IterationLimit;
        break;
      }
    }
  }

  SolveReport out;
  if (status == SolveStatus::Optimal) {
    out.primal = x;
  } else {
    // Return the best iterate so callers (the consensus loop) can proceed.
    out.primal = best_merit <= objective_at(x) + penalty * violation_l1_at(x)
                     ? best.primal
                     : x;
  }
  out.status = status;
  out.objective = objective_at(out.primal);
  out.iterations = std::min(iter, max_iter);
  out.feasibility_residual = violation_max_at(out.primal);
  out.stationarity_residual = last_stationarity;
  out.dual = y_linear;
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

}  // namespace patchplan
