#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "patchplan/constraints.hpp"

namespace patchplan {

enum class SolveStatus {
  Optimal,
  Infeasible,
  Unbounded,
  IterationLimit,
  NodeLimit,
  NumericalFailure
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterationLimit: return "iteration-limit";
    case SolveStatus::NodeLimit: return "node-limit";
    case SolveStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

struct SolveReport {
  SolveStatus status = SolveStatus::NumericalFailure;
  double objective = 0.0;
  Eigen::VectorXd primal;
  Eigen::VectorXd dual;  // row multipliers
  double stationarity_residual = 0.0;
  double feasibility_residual = 0.0;
  double complementarity_residual = 0.0;
  int iterations = 0;
  long node_count = 0;
  double wall_time_s = 0.0;
};

/// Convex QP in row form: min 0.5 x'Px + q'x  s.t.  l <= Ax <= u.
/// Variable bounds, when present, are identity rows of A by convention
/// (row j = variable j), which is what the transcription emits.
struct QpProblem {
  QuadraticObjective objective{0};
  LinearConstraintSet constraints{0};
  Eigen::VectorXd warm_x;  // optional warm start (empty = cold)
  Eigen::VectorXd warm_y;
};

struct QpSettings {
  double eps_abs = 1e-8;
  double eps_rel = 1e-8;
  int max_iter = 50000;
  double rho = 0.1;
  double rho_equality_scale = 1e3;
  double sigma = 1e-6;
  double alpha = 1.6;
  int scaling_iters = 10;
  bool polish = true;
  double polish_delta = 1e-7;
  double inf_tol = 1e-7;
  int check_interval = 25;
};

/// Operator-splitting QP solver over the row form, with a single KKT
/// factorization reused across vector updates (linear cost and bounds).
/// Deterministic: fixed iteration order, no randomized components.
class QpSolver {
 public:
  QpSolver(const SparseMatrix& P, const Eigen::VectorXd& q,
           const SparseMatrix& A, const Eigen::VectorXd& l,
           const Eigen::VectorXd& u, QpSettings settings = {})
      : settings_(settings),
        n_(static_cast<int>(P.rows())),
        m_(static_cast<int>(A.rows())),
        P_(P),
        A_(A),
        q_(q),
        l_(l),
        u_(u) {
    compute_scaling();
    scale_data();
    build_rho();
    factorize();
    reset_state();
  }

  bool ok() const { return factorized_; }

  void set_linear_cost(const Eigen::VectorXd& q) {
    q_ = q;
    qs_ = cost_scale_ * d_.cwiseProduct(q);
  }
  void set_bounds(const Eigen::VectorXd& l, const Eigen::VectorXd& u) {
    l_ = l;
    u_ = u;
    ls_ = e_.cwiseProduct(l).cwiseMax(-kInf);
    us_ = e_.cwiseProduct(u).cwiseMin(kInf);
  }
  void set_bound_row(int row, double lo, double up) {
    l_[row] = lo;
    u_[row] = up;
    ls_[row] = std::max(e_[row] * lo, -kInf);
    us_[row] = std::min(e_[row] * up, kInf);
  }
  const Eigen::VectorXd& lower() const { return l_; }
  const Eigen::VectorXd& upper() const { return u_; }

  void warm_start(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    xs_ = d_.cwiseInverse().cwiseProduct(x);
    ys_ = (y.size() == m_) ? Eigen::VectorXd(cost_scale_ *
                                             e_.cwiseInverse().cwiseProduct(y))
                           : Eigen::VectorXd::Zero(m_);
    zs_ = (as_ * xs_).cwiseMax(ls_).cwiseMin(us_);
  }
  void reset_state() {
    xs_ = Eigen::VectorXd::Zero(n_);
    ys_ = Eigen::VectorXd::Zero(m_);
    zs_ = Eigen::VectorXd::Zero(m_).cwiseMax(ls_).cwiseMin(us_);
  }

  SolveReport solve(double tol) {
    const auto t0 = std::chrono::steady_clock::now();
    SolveReport report;
    if (!factorized_) {
      report.status = SolveStatus::NumericalFailure;
      return report;
    }
    const double eps_abs = std::min(settings_.eps_abs, tol * 1e-2);
    const double eps_rel = std::min(settings_.eps_rel, tol * 1e-2);

    Eigen::VectorXd rhs(n_ + m_), sol(n_ + m_);
    Eigen::VectorXd xt(n_), zt(m_), z_prev(m_), y_prev(m_);
    Eigen::VectorXd dx_acc = Eigen::VectorXd::Zero(n_);
    Eigen::VectorXd dy_acc = Eigen::VectorXd::Zero(m_);

    SolveStatus status = SolveStatus::IterationLimit;
    int iter = 0;
    for (iter = 1; iter <= settings_.max_iter; ++iter) {
      rhs.head(n_) = settings_.sigma * xs_ - qs_;
      rhs.tail(m_) = zs_ - rho_inv_.cwiseProduct(ys_);
      sol = ldlt_.solve(rhs);
      xt = sol.head(n_);
      zt = zs_ + rho_inv_.cwiseProduct(sol.tail(m_) - ys_);

      const Eigen::VectorXd x_new =
          settings_.alpha * xt + (1.0 - settings_.alpha) * xs_;
      z_prev = zs_;
      y_prev = ys_;
      const Eigen::VectorXd z_tilde =
          settings_.alpha * zt + (1.0 - settings_.alpha) * zs_;
      zs_ = (z_tilde + rho_inv_.cwiseProduct(ys_)).cwiseMax(ls_).cwiseMin(us_);
      ys_ += rho_.cwiseProduct(z_tilde - zs_);
      dx_acc = x_new - xs_;
      dy_acc = ys_ - y_prev;
      xs_ = x_new;

      if (iter % settings_.check_interval == 0 || iter == settings_.max_iter) {
        double prim, dual;
        residuals(prim, dual);
        const double eps_prim =
            eps_abs + eps_rel * residual_scale_primal();
        const double eps_dual = eps_abs + eps_rel * residual_scale_dual();
        if (prim <= eps_prim && dual <= eps_dual) {
          status = SolveStatus::Optimal;
          break;
        }
        if (primal_infeasible(dy_acc)) {
          status = SolveStatus::Infeasible;
          break;
        }
        if (dual_infeasible(dx_acc)) {
          status = SolveStatus::Unbounded;
          break;
        }
      }
    }

    report.iterations = std::min(iter, settings_.max_iter);
    report.primal = unscale_x();
    report.dual = unscale_y();
    if (status == SolveStatus::Optimal && settings_.polish) {
      polish(report);
    }
    fill_residuals(report);
    // Optimality is claimed only when the contract residuals hold.
    if (status == SolveStatus::Optimal) {
      const double worst =
          std::max({report.stationarity_residual, report.feasibility_residual,
                    report.complementarity_residual});
      if (!(worst <= tol)) status = SolveStatus::IterationLimit;
    }
    report.status = status;
    report.objective = objective_value(report.primal);
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return report;
  }

  double objective_value(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(P_ * x) + q_.dot(x) + objective_constant_;
  }
  void set_objective_constant(double c) { objective_constant_ = c; }

 private:
  void compute_scaling() {
    d_ = Eigen::VectorXd::Ones(n_);
    e_ = Eigen::VectorXd::Ones(m_);
    cost_scale_ = 1.0;
    if (settings_.scaling_iters <= 0) return;
    SparseMatrix p = P_;
    SparseMatrix a = A_;
    Eigen::VectorXd q = q_;
    for (int it = 0; it < settings_.scaling_iters; ++it) {
      Eigen::VectorXd col_norm = Eigen::VectorXd::Zero(n_);
      for (int k = 0; k < p.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator i(p, k); i; ++i) {
          col_norm[k] = std::max(col_norm[k], std::abs(i.value()));
        }
      }
      Eigen::VectorXd row_norm = Eigen::VectorXd::Zero(m_);
      for (int k = 0; k < a.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator i(a, k); i; ++i) {
          col_norm[k] = std::max(col_norm[k], std::abs(i.value()));
          row_norm[i.row()] = std::max(row_norm[i.row()], std::abs(i.value()));
        }
      }
      Eigen::VectorXd dv(n_), ev(m_);
      for (int j = 0; j < n_; ++j)
        dv[j] = col_norm[j] > 1e-12 ? 1.0 / std::sqrt(col_norm[j]) : 1.0;
      for (int i = 0; i < m_; ++i)
        ev[i] = row_norm[i] > 1e-12 ? 1.0 / std::sqrt(row_norm[i]) : 1.0;
      SparseMatrix tmp = dv.asDiagonal() * p;
      p = tmp * dv.asDiagonal();
      tmp = ev.asDiagonal() * a;
      a = tmp * dv.asDiagonal();
      q = dv.cwiseProduct(q);
      d_ = d_.cwiseProduct(dv);
      e_ = e_.cwiseProduct(ev);
      // Cost equilibration.
      double p_mean = 0.0;
      for (int j = 0; j < n_; ++j) {
        double cn = 0.0;
        for (SparseMatrix::InnerIterator i(p, j); i; ++i)
          cn = std::max(cn, std::abs(i.value()));
        p_mean += cn;
      }
      p_mean = n_ > 0 ? p_mean / n_ : 0.0;
      const double q_norm = q.size() > 0 ? q.cwiseAbs().maxCoeff() : 0.0;
      const double denom = std::max(p_mean, q_norm);
      const double g = denom > 1e-12 ? 1.0 / denom : 1.0;
      p *= g;
      q *= g;
      cost_scale_ *= g;
    }
  }

  void scale_data() {
    ps_ = cost_scale_ * (d_.asDiagonal() * P_ * d_.asDiagonal());
    as_ = e_.asDiagonal() * A_ * d_.asDiagonal();
    at_ = as_.transpose();
    qs_ = cost_scale_ * d_.cwiseProduct(q_);
    ls_ = e_.cwiseProduct(l_).cwiseMax(-kInf);
    us_ = e_.cwiseProduct(u_).cwiseMin(kInf);
  }

  void build_rho() {
    rho_ = Eigen::VectorXd::Constant(m_, settings_.rho);
    for (int i = 0; i < m_; ++i) {
      if (l_[i] == u_[i]) rho_[i] *= settings_.rho_equality_scale;
    }
    rho_inv_ = rho_.cwiseInverse();
  }

  void factorize() {
    std::vector<Triplet> trips;
    trips.reserve(ps_.nonZeros() + as_.nonZeros() + n_ + m_);
    for (int k = 0; k < ps_.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(ps_, k); it; ++it)
        trips.emplace_back(it.row(), it.col(), it.value());
    }
    for (int j = 0; j < n_; ++j)
      trips.emplace_back(j, j, settings_.sigma);
    for (int k = 0; k < as_.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(as_, k); it; ++it) {
        trips.emplace_back(n_ + it.row(), it.col(), it.value());
        trips.emplace_back(it.col(), n_ + it.row(), it.value());
      }
    }
    for (int i = 0; i < m_; ++i)
      trips.emplace_back(n_ + i, n_ + i, -rho_inv_[i]);
    SparseMatrix kkt(n_ + m_, n_ + m_);
    kkt.setFromTriplets(trips.begin(), trips.end());
    kkt.makeCompressed();
    ldlt_.compute(kkt);
    factorized_ = ldlt_.info() == Eigen::Success;
  }

  Eigen::VectorXd unscale_x() const { return d_.cwiseProduct(xs_); }
  Eigen::VectorXd unscale_y() const {
    return e_.cwiseProduct(ys_) / cost_scale_;
  }

  double residual_scale_primal() const {
    const Eigen::VectorXd ax = A_ * unscale_x();
    double s = ax.size() > 0 ? ax.cwiseAbs().maxCoeff() : 0.0;
    const Eigen::VectorXd z = e_.cwiseInverse().cwiseProduct(zs_);
    if (z.size() > 0) s = std::max(s, z.cwiseAbs().maxCoeff());
    return s;
  }
  double residual_scale_dual() const {
    const Eigen::VectorXd x = unscale_x();
    const Eigen::VectorXd y = unscale_y();
    double s = q_.size() > 0 ? q_.cwiseAbs().maxCoeff() : 0.0;
    const Eigen::VectorXd px = P_ * x;
    if (px.size() > 0) s = std::max(s, px.cwiseAbs().maxCoeff());
    if (m_ > 0) {
      const Eigen::VectorXd aty = A_.transpose() * y;
      s = std::max(s, aty.cwiseAbs().maxCoeff());
    }
    return s;
  }

  void residuals(double& prim, double& dual) const {
    const Eigen::VectorXd x = unscale_x();
    const Eigen::VectorXd y = unscale_y();
    const Eigen::VectorXd z = e_.cwiseInverse().cwiseProduct(zs_);
    prim = m_ > 0 ? (A_ * x - z).cwiseAbs().maxCoeff() : 0.0;
    Eigen::VectorXd grad = P_ * x + q_;
    if (m_ > 0) grad += A_.transpose() * y;
    dual = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  }

  bool primal_infeasible(const Eigen::VectorXd& dy) const {
    if (m_ == 0) return false;
    const double norm = dy.cwiseAbs().maxCoeff();
    if (norm < 1e-14) return false;
    const Eigen::VectorXd v = dy / norm;
    if ((at_ * v).cwiseAbs().maxCoeff() > settings_.inf_tol) return false;
    double support = 0.0;
    for (int i = 0; i < m_; ++i) {
      if (v[i] > 0) {
        if (us_[i] >= kInf) return false;
        support += us_[i] * v[i];
      } else if (v[i] < 0) {
        if (ls_[i] <= -kInf) return false;
        support += ls_[i] * v[i];
      }
    }
    return support < -settings_.inf_tol;
  }

  bool dual_infeasible(const Eigen::VectorXd& dx) const {
    const double norm = dx.cwiseAbs().maxCoeff();
    if (norm < 1e-14) return false;
    const Eigen::VectorXd v = dx / norm;
    if ((ps_ * v).cwiseAbs().maxCoeff() > settings_.inf_tol) return false;
    if (qs_.dot(v) > -settings_.inf_tol) return false;
    const Eigen::VectorXd av = as_ * v;
    for (int i = 0; i < m_; ++i) {
      if (us_[i] < kInf && av[i] > settings_.inf_tol) return false;
      if (ls_[i] > -kInf && av[i] < -settings_.inf_tol) return false;
    }
    return true;
  }

  void polish(SolveReport& report) const {
    if (m_ == 0) return;
    std::vector<int> act_low, act_up;
    for (int i = 0; i < m_; ++i) {
      if (ys_[i] < -1e-10) act_low.push_back(i);
      else if (ys_[i] > 1e-10) act_up.push_back(i);
    }
    const int ma = static_cast<int>(act_low.size() + act_up.size());
    std::vector<Triplet> trips;
    for (int k = 0; k < ps_.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(ps_, k); it; ++it)
        trips.emplace_back(it.row(), it.col(), it.value());
    }
    const double delta = settings_.polish_delta;
    for (int j = 0; j < n_; ++j) trips.emplace_back(j, j, delta);
    Eigen::VectorXd rhs(n_ + ma);
    rhs.head(n_) = -qs_;
    int row = 0;
    auto add_active = [&](int i, double bound) {
      for (SparseMatrix::InnerIterator it(at_, i); it; ++it)
        trips.emplace_back(n_ + row, it.row(), it.value());
      trips.emplace_back(n_ + row, n_ + row, -delta);
      rhs[n_ + row] = bound;
      ++row;
    };
    for (int i : act_low) add_active(i, ls_[i]);
    for (int i : act_up) add_active(i, us_[i]);
    // Mirror the off-diagonal block.
    const size_t base_count = trips.size();
    std::vector<Triplet> mirror;
    for (size_t k = 0; k < base_count; ++k) {
      const auto& t = trips[k];
      if (t.row() >= n_ && t.col() < n_)
        mirror.emplace_back(t.col(), t.row(), t.value());
    }
    trips.insert(trips.end(), mirror.begin(), mirror.end());
    SparseMatrix kkt(n_ + ma, n_ + ma);
    kkt.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(kkt);
    if (ldlt.info() != Eigen::Success) return;
    Eigen::VectorXd sol = ldlt.solve(rhs);
    for (int refine = 0; refine < 2; ++refine) {
      sol += ldlt.solve(rhs - kkt * sol);
    }
    Eigen::VectorXd x_pol = d_.cwiseProduct(sol.head(n_));
    Eigen::VectorXd ys_pol = Eigen::VectorXd::Zero(m_);
    row = 0;
    for (int i : act_low) ys_pol[i] = sol[n_ + row++];
    for (int i : act_up) ys_pol[i] = sol[n_ + row++];
    Eigen::VectorXd y_pol = e_.cwiseProduct(ys_pol) / cost_scale_;

    SolveReport trial;
    trial.primal = x_pol;
    trial.dual = y_pol;
    fill_residuals(trial);
    SolveReport current = report;
    fill_residuals(current);
    const double trial_worst =
        std::max({trial.stationarity_residual, trial.feasibility_residual,
                  trial.complementarity_residual});
    const double current_worst =
        std::max({current.stationarity_residual,
                  current.feasibility_residual,
                  current.complementarity_residual});
    if (trial_worst < current_worst) {
      report.primal = x_pol;
      report.dual = y_pol;
    }
  }

  void fill_residuals(SolveReport& report) const {
    const Eigen::VectorXd& x = report.primal;
    const Eigen::VectorXd& y = report.dual;
    Eigen::VectorXd grad = P_ * x + q_;
    double feas = 0.0, comp = 0.0;
    if (m_ > 0 && y.size() == m_) {
      grad += A_.transpose() * y;
      const Eigen::VectorXd ax = A_ * x;
      for (int i = 0; i < m_; ++i) {
        feas = std::max(feas, l_[i] - ax[i]);
        feas = std::max(feas, ax[i] - u_[i]);
        if (y[i] > 0 && u_[i] < kInf)
          comp = std::max(comp, std::abs(y[i] * (u_[i] - ax[i])));
        if (y[i] < 0 && l_[i] > -kInf)
          comp = std::max(comp, std::abs(y[i] * (ax[i] - l_[i])));
      }
    }
    report.stationarity_residual =
        grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
    report.feasibility_residual = std::max(feas, 0.0);
    report.complementarity_residual = comp;
  }

  QpSettings settings_;
  int n_ = 0, m_ = 0;
  SparseMatrix P_, A_;
  Eigen::VectorXd q_, l_, u_;
  double objective_constant_ = 0.0;

  // scaled data
  SparseMatrix ps_, as_, at_;
  Eigen::VectorXd qs_, ls_, us_;
  Eigen::VectorXd d_, e_;
  double cost_scale_ = 1.0;
  Eigen::VectorXd rho_, rho_inv_;

  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  bool factorized_ = false;

  // iterate state (scaled)
  Eigen::VectorXd xs_, ys_, zs_;
};

/// One-shot convenience wrapper implementing the solve_qp contract.
inline SolveReport solve_qp(const QpProblem& p, double tol,
                            QpSettings settings = {}) {
  QpSolver solver(p.objective.quadratic(), p.objective.linear(),
                  p.constraints.matrix(), p.constraints.lower(),
                  p.constraints.upper(), settings);
  solver.set_objective_constant(p.objective.constant());
  if (p.warm_x.size() > 0) {
    solver.warm_start(p.warm_x, p.warm_y.size() > 0
                                    ? p.warm_y
                                    : Eigen::VectorXd::Zero(
                                          p.constraints.num_rows()));
  }
  return solver.solve(tol);
}

}  // namespace patchplan
