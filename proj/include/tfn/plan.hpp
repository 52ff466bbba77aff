#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tfn/measure.hpp"

namespace tfn {

/// Relative tolerance for validating marginal and stochasticity invariants
/// when a plan or matrix is constructed.
inline constexpr double kInvariantTolerance = 1e-9;

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Cell-level plan: kappa(i, j) = kappa(C_i x C_j), with row marginal mu and
/// column marginal nu.
class DiscretePlan {
 public:
  DiscretePlan(Eigen::MatrixXd matrix, Eigen::VectorXd mu, Eigen::VectorXd nu, int n_x = 0, int n_y = 0)
      : matrix_(std::move(matrix)), mu_(std::move(mu)), nu_(std::move(nu)), n_x_(n_x), n_y_(n_y) {
    validate();
  }

  /// Marginals taken from the matrix itself.
  static DiscretePlan from_matrix(Eigen::MatrixXd matrix, int n_x = 0, int n_y = 0) {
    Eigen::VectorXd mu = matrix.rowwise().sum();
    Eigen::VectorXd nu = matrix.colwise().sum().transpose();
    return DiscretePlan(std::move(matrix), std::move(mu), std::move(nu), n_x, n_y);
  }

  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  const Eigen::VectorXd& mu() const noexcept { return mu_; }
  const Eigen::VectorXd& nu() const noexcept { return nu_; }
  int n_x() const noexcept { return n_x_; }
  int n_y() const noexcept { return n_y_; }
  Eigen::Index rows() const noexcept { return matrix_.rows(); }
  Eigen::Index cols() const noexcept { return matrix_.cols(); }
  double mass() const { return matrix_.sum(); }

  /// kappa^dagger(B x A) = kappa(A x B)
  DiscretePlan transposed() const { return DiscretePlan(matrix_.transpose(), nu_, mu_, n_y_, n_x_); }

  /// (h (x) 1) kappa for a cellwise density h >= 0.
  DiscretePlan reweighted_rows(const Eigen::VectorXd& h) const {
    if (h.size() != rows()) throw Error(ErrorKind::InvalidInput, "row density has wrong length");
    if ((h.array() < 0.0).any()) throw Error(ErrorKind::InvalidInput, "row density must be nonnegative");
    return from_matrix(h.asDiagonal() * matrix_, n_x_, n_y_);
  }

  /// max |row sum - mu|, |col sum - nu|
  double marginal_residual() const {
    double r = 0.0;
    if (rows() > 0 && cols() > 0) {
      r = std::max(r, (matrix_.rowwise().sum() - mu_).cwiseAbs().maxCoeff());
      r = std::max(r, (matrix_.colwise().sum().transpose() - nu_).cwiseAbs().maxCoeff());
    }
    return r;
  }

 private:
  void validate() const {
    if (mu_.size() != matrix_.rows() || nu_.size() != matrix_.cols())
      throw Error(ErrorKind::InvalidInput, "plan marginal lengths do not match the matrix shape");
    if (!matrix_.allFinite() || !mu_.allFinite() || !nu_.allFinite())
      throw Error(ErrorKind::InvalidInput, "plan contains non-finite entries");
    const double scale = std::max(1.0, mu_.cwiseAbs().sum());
    const double tol = kInvariantTolerance * scale;
    for (Eigen::Index i = 0; i < matrix_.rows(); ++i)
      for (Eigen::Index j = 0; j < matrix_.cols(); ++j)
        if (matrix_(i, j) < -tol)
          throw Error(ErrorKind::Inconsistent, "plan entry (" + std::to_string(i) + "," + std::to_string(j) +
                                                   ") is negative: " + detail::fmt_double(matrix_(i, j)));
    for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
      const double s = matrix_.row(i).sum();
      if (std::abs(s - mu_[i]) > tol)
        throw Error(ErrorKind::Inconsistent, "plan row " + std::to_string(i) + " sums to " + detail::fmt_double(s) +
                                                 " but mu = " + detail::fmt_double(mu_[i]));
    }
    for (Eigen::Index j = 0; j < matrix_.cols(); ++j) {
      const double s = matrix_.col(j).sum();
      if (std::abs(s - nu_[j]) > tol)
        throw Error(ErrorKind::Inconsistent, "plan column " + std::to_string(j) + " sums to " + detail::fmt_double(s) +
                                                 " but nu = " + detail::fmt_double(nu_[j]));
    }
    if (std::abs(mu_.sum() - nu_.sum()) > tol)
      throw Error(ErrorKind::Inconsistent, "plan marginals have different masses");
  }

  Eigen::MatrixXd matrix_;
  Eigen::VectorXd mu_;
  Eigen::VectorXd nu_;
  int n_x_;
  int n_y_;
};

/// Markov operator on cell-step functions: (T 1_{C_i}) = sum_j t(i, j) 1_{C_j}.
///
/// t >= 0, every column with nu_j > 0 sums to 1 (T 1 = 1), columns with
/// nu_j = 0 are zero, and sum_j t(i, j) nu_j = mu_i. The anchor matrix of a
/// simple Markov transfunction is M(j, i) = t(i, j).
class MarkovMatrix {
 public:
  MarkovMatrix(Eigen::MatrixXd t, Eigen::VectorXd mu, Eigen::VectorXd nu)
      : t_(std::move(t)), mu_(std::move(mu)), nu_(std::move(nu)) {
    validate();
  }

  /// t(i, j) = kappa(i, j) / nu_j, zero where nu_j = 0.
  static MarkovMatrix from_plan(const DiscretePlan& plan) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(plan.rows(), plan.cols());
    for (Eigen::Index j = 0; j < plan.cols(); ++j)
      if (plan.nu()[j] > 0.0) t.col(j) = plan.matrix().col(j) / plan.nu()[j];
    return MarkovMatrix(std::move(t), plan.mu(), plan.nu());
  }

  /// kappa(i, j) = t(i, j) nu_j
  DiscretePlan to_plan(int n_x = 0, int n_y = 0) const {
    return DiscretePlan(t_ * nu_.asDiagonal(), mu_, nu_, n_x, n_y);
  }

  const Eigen::MatrixXd& entries() const noexcept { return t_; }
  const Eigen::VectorXd& mu() const noexcept { return mu_; }
  const Eigen::VectorXd& nu() const noexcept { return nu_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return t_(i, j); }

  /// M(j, i)
  Eigen::MatrixXd anchor() const { return t_.transpose(); }

  /// T applied to a cell-step function f (values per source cell).
  Eigen::VectorXd apply(const Eigen::VectorXd& f) const { return t_.transpose() * f; }

 private:
  void validate() const {
    if (mu_.size() != t_.rows() || nu_.size() != t_.cols())
      throw Error(ErrorKind::InvalidInput, "Markov matrix marginal lengths do not match its shape");
    if (!t_.allFinite()) throw Error(ErrorKind::InvalidInput, "Markov matrix contains non-finite entries");
    const double tol = kInvariantTolerance;
    for (Eigen::Index i = 0; i < t_.rows(); ++i)
      for (Eigen::Index j = 0; j < t_.cols(); ++j)
        if (t_(i, j) < -tol)
          throw Error(ErrorKind::Inconsistent, "Markov entry (" + std::to_string(i) + "," + std::to_string(j) + ") is negative");
    for (Eigen::Index j = 0; j < t_.cols(); ++j) {
      const double s = t_.col(j).sum();
      if (nu_[j] > 0.0 && std::abs(s - 1.0) > tol)
        throw Error(ErrorKind::Inconsistent, "column " + std::to_string(j) + " sums to " + detail::fmt_double(s) +
                                                 ", T1 = 1 requires 1");
      if (nu_[j] <= 0.0 && t_.col(j).cwiseAbs().sum() > tol)
        throw Error(ErrorKind::Inconsistent, "column " + std::to_string(j) + " has nu = 0 but nonzero entries");
    }
    const double scale = std::max(1.0, mu_.cwiseAbs().sum());
    const Eigen::VectorXd balance = t_ * nu_;
    for (Eigen::Index i = 0; i < t_.rows(); ++i)
      if (std::abs(balance[i] - mu_[i]) > tol * scale)
        throw Error(ErrorKind::Inconsistent, "row " + std::to_string(i) + " mass balance " +
                                                 detail::fmt_double(balance[i]) + " != mu = " + detail::fmt_double(mu_[i]));
  }

  Eigen::MatrixXd t_;
  Eigen::VectorXd mu_;
  Eigen::VectorXd nu_;
};

/// Point-level coupling between two finite supports.
struct PointPlan {
  std::vector<Point> sources;
  std::vector<Point> targets;
  Eigen::MatrixXd mass;

  DiscreteMeasure source_marginal() const {
    Eigen::VectorXd r = mass.rowwise().sum();
    return DiscreteMeasure(sources, std::vector<double>(r.data(), r.data() + r.size()));
  }
  DiscreteMeasure target_marginal() const {
    Eigen::VectorXd c = mass.colwise().sum().transpose();
    return DiscreteMeasure(targets, std::vector<double>(c.data(), c.data() + c.size()));
  }
  double total() const { return mass.sum(); }

  /// <c, kappa> for a field on X x Y.
  template <class PairFn>
  double integrate(const PairFn& c) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < mass.rows(); ++i)
      for (Eigen::Index j = 0; j < mass.cols(); ++j)
        if (mass(i, j) != 0.0) s += c(sources[static_cast<std::size_t>(i)], targets[static_cast<std::size_t>(j)]) * mass(i, j);
    return s;
  }
};

}  // namespace tfn
