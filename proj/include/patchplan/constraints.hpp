#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

namespace patchplan {

constexpr double kInf = 1e30;

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// 0.5 v' P v + q' v + c over a flat variable layout. P is kept symmetric.
class QuadraticObjective {
 public:
  explicit QuadraticObjective(int num_vars = 0)
      : num_vars_(num_vars), linear_(Eigen::VectorXd::Zero(num_vars)) {}

  int num_vars() const { return num_vars_; }

  void add_quadratic(int i, int j, double w) {
    if (w == 0.0) return;
    triplets_.emplace_back(i, j, w);
    if (i != j) triplets_.emplace_back(j, i, w);
    dirty_ = true;
  }
  void add_diagonal(int i, double w) {
    if (w == 0.0) return;
    triplets_.emplace_back(i, i, w);
    dirty_ = true;
  }
  void add_linear(int i, double w) { linear_[i] += w; }
  void add_constant(double c) { constant_ += c; }

  const SparseMatrix& quadratic() const {
    if (dirty_) {
      quadratic_.resize(num_vars_, num_vars_);
      quadratic_.setFromTriplets(triplets_.begin(), triplets_.end());
      quadratic_.makeCompressed();
      dirty_ = false;
    }
    return quadratic_;
  }
  const Eigen::VectorXd& linear() const { return linear_; }
  Eigen::VectorXd& linear() { return linear_; }
  double constant() const { return constant_; }

  double value(const Eigen::VectorXd& v) const {
    return 0.5 * v.dot(quadratic() * v) + linear_.dot(v) + constant_;
  }

  /// Smallest-eigenvalue style PSD check via a shifted LDLT; good enough for
  /// the diagonal-dominant objectives built here.
  bool check_psd(double tol = 1e-10) const {
    SparseMatrix p = quadratic();
    for (int i = 0; i < num_vars_; ++i) p.coeffRef(i, i) += tol;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(p);
    if (ldlt.info() != Eigen::Success) return false;
    return ldlt.vectorD().minCoeff() >= -tol;
  }

 private:
  int num_vars_ = 0;
  mutable SparseMatrix quadratic_;
  mutable std::vector<Triplet> triplets_;
  mutable bool dirty_ = true;
  Eigen::VectorXd linear_;
  double constant_ = 0.0;
};

/// Rows that a binary activates/relaxes, for the build-time soundness audit.
struct BigMLink {
  int binary = -1;
  std::vector<int> rows;
  double big_m = 0.0;
};

/// Row-form linear constraints lower <= A v <= upper, plus binary-variable
/// metadata. Built incrementally from (index, coefficient) lists.
class LinearConstraintSet {
 public:
  explicit LinearConstraintSet(int num_vars = 0) : num_vars_(num_vars) {}

  int num_vars() const { return num_vars_; }
  int num_rows() const { return static_cast<int>(lower_.size()); }

  int add_row(const std::vector<std::pair<int, double>>& coeffs, double lower,
              double upper) {
    const int row = num_rows();
    for (const auto& [index, value] : coeffs) {
      if (value != 0.0) triplets_.emplace_back(row, index, value);
    }
    lower_.push_back(lower);
    upper_.push_back(upper);
    dirty_ = true;
    return row;
  }
  int add_equality(const std::vector<std::pair<int, double>>& coeffs,
                   double rhs) {
    return add_row(coeffs, rhs, rhs);
  }

  void add_big_m_link(int binary, std::vector<int> rows, double big_m) {
    big_m_links_.push_back({binary, std::move(rows), big_m});
  }
  void set_binary_indices(std::vector<int> indices) {
    binary_indices_ = std::move(indices);
  }

  const SparseMatrix& matrix() const {
    if (dirty_) {
      matrix_.resize(num_rows(), num_vars_);
      matrix_.setFromTriplets(triplets_.begin(), triplets_.end());
      matrix_.makeCompressed();
      dirty_ = false;
    }
    return matrix_;
  }
  Eigen::VectorXd lower() const {
    return Eigen::Map<const Eigen::VectorXd>(lower_.data(), lower_.size());
  }
  Eigen::VectorXd upper() const {
    return Eigen::Map<const Eigen::VectorXd>(upper_.data(), upper_.size());
  }
  const std::vector<int>& binary_indices() const { return binary_indices_; }
  const std::vector<BigMLink>& big_m_links() const { return big_m_links_; }

  /// Appends all rows/links of `other` (same variable space).
  void append(const LinearConstraintSet& other) {
    const int offset = num_rows();
    for (const auto& t : other.triplets_)
      triplets_.emplace_back(t.row() + offset, t.col(), t.value());
    lower_.insert(lower_.end(), other.lower_.begin(), other.lower_.end());
    upper_.insert(upper_.end(), other.upper_.begin(), other.upper_.end());
    for (auto link : other.big_m_links_) {
      for (auto& r : link.rows) r += offset;
      big_m_links_.push_back(std::move(link));
    }
    for (int b : other.binary_indices_) binary_indices_.push_back(b);
    dirty_ = true;
  }

  /// Max violation of all rows at v.
  double max_violation(const Eigen::VectorXd& v) const {
    const Eigen::VectorXd av = matrix() * v;
    double worst = 0.0;
    for (int i = 0; i < num_rows(); ++i) {
      worst = std::max(worst, lower_[i] - av[i]);
      worst = std::max(worst, av[i] - upper_[i]);
    }
    return worst;
  }

  /// Big-M soundness: for every linked row there is a binary value at which
  /// the row holds for every variable assignment inside [lb, ub].
  bool audit_big_m(const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                   double tol = 1e-9) const {
    const SparseMatrix a = SparseMatrix(matrix().transpose());  // column = row
    for (const auto& link : big_m_links_) {
      for (int row : link.rows) {
        bool ok = false;
        for (double bin_value : {0.0, 1.0}) {
          double lo = 0.0, hi = 0.0;
          for (SparseMatrix::InnerIterator it(a, row); it; ++it) {
            const int j = static_cast<int>(it.row());
            const double c = it.value();
            if (j == link.binary) {
              lo += c * bin_value;
              hi += c * bin_value;
            } else {
              lo += std::min(c * lb[j], c * ub[j]);
              hi += std::max(c * lb[j], c * ub[j]);
            }
          }
          if (hi <= upper_[row] + tol && lo >= lower_[row] - tol) {
            ok = true;
            break;
          }
        }
        if (!ok) return false;
      }
    }
    return true;
  }

  /// Sparse-triplet text dump: "rows cols nnz", one "row col value" line per
  /// nonzero, then one "row lower upper" line per row.
  void dump_triplets(std::ostream& os) const {
    const SparseMatrix& a = matrix();
    os << num_rows() << " " << num_vars_ << " " << a.nonZeros() << "\n";
    char buf[96];
    for (int k = 0; k < a.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
        std::snprintf(buf, sizeof(buf), "%d %d %.17g\n",
                      static_cast<int>(it.row()), static_cast<int>(it.col()),
                      it.value());
        os << buf;
      }
    }
    for (int i = 0; i < num_rows(); ++i) {
      std::snprintf(buf, sizeof(buf), "%d %.17g %.17g\n", i, lower_[i],
                    upper_[i]);
      os << buf;
    }
  }

 private:
  int num_vars_ = 0;
  std::vector<Triplet> triplets_;
  std::vector<double> lower_, upper_;
  std::vector<int> binary_indices_;
  std::vector<BigMLink> big_m_links_;
  mutable SparseMatrix matrix_;
  mutable bool dirty_ = true;
};

/// One differentiable residual block with explicit sparsity: the jacobian
/// callback emits (local_row, flat_variable, value) triplets.
struct SmoothConstraint {
  std::string name;
  int dim = 0;
  std::vector<int> variables;  // flat indices the residual depends on
  std::function<void(const Eigen::VectorXd&, Eigen::Ref<Eigen::VectorXd>)>
      eval;
  std::function<void(const Eigen::VectorXd&, int row_offset,
                     std::vector<Triplet>&)>
      jacobian;
  Eigen::VectorXd lower, upper;  // per-dim box; equality rows have l == u
};

class SmoothConstraintSet {
 public:
  explicit SmoothConstraintSet(int num_vars = 0) : num_vars_(num_vars) {}

  int num_vars() const { return num_vars_; }
  int total_dim() const { return total_dim_; }
  const std::vector<SmoothConstraint>& items() const { return items_; }

  void add(SmoothConstraint c) {
    total_dim_ += c.dim;
    items_.push_back(std::move(c));
  }

  Eigen::VectorXd eval(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(total_dim_);
    int at = 0;
    for (const auto& item : items_) {
      item.eval(v, out.segment(at, item.dim));
      at += item.dim;
    }
    return out;
  }

  SparseMatrix jacobian(const Eigen::VectorXd& v) const {
    std::vector<Triplet> triplets;
    int at = 0;
    for (const auto& item : items_) {
      item.jacobian(v, at, triplets);
      at += item.dim;
    }
    SparseMatrix j(total_dim_, num_vars_);
    j.setFromTriplets(triplets.begin(), triplets.end());
    j.makeCompressed();
    return j;
  }

  Eigen::VectorXd lower() const {
    Eigen::VectorXd out(total_dim_);
    int at = 0;
    for (const auto& item : items_) {
      out.segment(at, item.dim) = item.lower;
      at += item.dim;
    }
    return out;
  }
  Eigen::VectorXd upper() const {
    Eigen::VectorXd out(total_dim_);
    int at = 0;
    for (const auto& item : items_) {
      out.segment(at, item.dim) = item.upper;
      at += item.dim;
    }
    return out;
  }

  /// Compares analytic jacobians against central finite differences at v.
  /// Returns the worst relative mismatch (|fd - an| / max(1, |fd|)).
  double jacobian_mismatch(const Eigen::VectorXd& v,
                           double step = 1e-6) const {
    const SparseMatrix analytic = jacobian(v);
    Eigen::MatrixXd dense = Eigen::MatrixXd(analytic);
    double worst = 0.0;
    Eigen::VectorXd vp = v, vm = v;
    for (const auto& [col, touched] : touched_columns()) {
      vp[col] += step;
      vm[col] -= step;
      const Eigen::VectorXd rp = eval(vp);
      const Eigen::VectorXd rm = eval(vm);
      vp[col] = v[col];
      vm[col] = v[col];
      for (int row = 0; row < total_dim_; ++row) {
        const double fd = (rp[row] - rm[row]) / (2.0 * step);
        const double an = dense(row, col);
        worst = std::max(worst,
                         std::abs(fd - an) / std::max(1.0, std::abs(fd)));
      }
    }
    return worst;
  }

  bool check_jacobians(const Eigen::VectorXd& v, double rel_tol = 1e-5,
                       double step = 1e-6) const {
    return jacobian_mismatch(v, step) <= rel_tol;
  }

 private:
  std::vector<std::pair<int, bool>> touched_columns() const {
    std::vector<bool> touched(num_vars_, false);
    for (const auto& item : items_) {
      for (int j : item.variables) touched[j] = true;
    }
    std::vector<std::pair<int, bool>> cols;
    for (int j = 0; j < num_vars_; ++j) {
      if (touched[j]) cols.emplace_back(j, true);
    }
    return cols;
  }

  int num_vars_ = 0;
  int total_dim_ = 0;
  std::vector<SmoothConstraint> items_;
};

}  // namespace patchplan
