#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tfn/cost.hpp"
#include "tfn/error.hpp"

namespace tfn {

/// LP optimality evidence for a transport plan and dual potentials (u, v).
struct LpCertificate {
  double primal_residual = 0.0;          // marginal violation and negative mass
  double dual_infeasibility = 0.0;       // max(0, -(C_ij - u_i - v_j))
  double complementary_slackness = 0.0;  // max over kappa_ij > 0 of |C_ij - u_i - v_j|
  double duality_gap = 0.0;              // |<C, kappa> - <a, u> - <b, v>|

  bool passed(double tol = 1e-9) const {
    return primal_residual <= tol && dual_infeasibility <= tol && complementary_slackness <= tol && duality_gap <= tol;
  }
};

struct TransportSolution {
  Eigen::MatrixXd plan;
  double cost = 0.0;
  Eigen::VectorXd u, v;
  LpCertificate certificate;
  std::size_t iterations = 0;
};

inline LpCertificate certify(const Eigen::MatrixXd& plan, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                             const Eigen::MatrixXd& cost, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  LpCertificate c;
  if (plan.size() == 0) return c;
  c.primal_residual = std::max({(plan.rowwise().sum() - a).cwiseAbs().maxCoeff(),
                                (plan.colwise().sum().transpose() - b).cwiseAbs().maxCoeff(), std::max(0.0, -plan.minCoeff())});
  double dual = a.dot(u) + b.dot(v);
  for (Eigen::Index i = 0; i < plan.rows(); ++i)
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
      const double reduced = cost(i, j) - u[i] - v[j];
      c.dual_infeasibility = std::max(c.dual_infeasibility, -reduced);
      if (plan(i, j) > 0.0) c.complementary_slackness = std::max(c.complementary_slackness, std::abs(reduced));
    }
  c.duality_gap = std::abs(plan_cost(plan, cost) - dual);
  return c;
}

namespace detail {

/// Transportation simplex on the bipartite row/column graph. The basis is a
/// spanning tree of m + n - 1 cells started from the north-west corner.
/// Entering cells follow Dantzig's rule and switch to Bland's rule after a
/// run of degenerate pivots; ties pick the lowest row-major index.
class TransportSimplex {
 public:
  TransportSimplex(Eigen::VectorXd a, Eigen::VectorXd b, Eigen::MatrixXd cost)
      : m_(static_cast<int>(a.size())), n_(static_cast<int>(b.size())), a_(std::move(a)), b_(std::move(b)),
        c_(std::move(cost)), x_(Eigen::MatrixXd::Zero(m_, n_)), basic_(m_, std::vector<char>(n_, 0)) {
    eps_ = 1e-11 * std::max(1.0, c_.cwiseAbs().maxCoeff());
  }

  std::size_t solve() {
    northwest();
    const std::size_t cap = 50u * static_cast<std::size_t>((m_ + n_) * (m_ + n_)) + 1000u;
    int degenerate = 0;
    bool bland = false;
    for (std::size_t it = 0; it < cap; ++it) {
      duals();
      int ei = -1, ej = -1;
      double best = -eps_;
      for (int i = 0; i < m_ && !(bland && ei >= 0); ++i)
        for (int j = 0; j < n_; ++j) {
          if (basic_[i][j]) continue;
          const double d = c_(i, j) - u_[i] - v_[j];
          if (d < best) {
            best = d;
            ei = i;
            ej = j;
            if (bland) break;
          }
        }
      if (ei < 0) return it;
      const double theta = pivot(ei, ej);
      degenerate = theta == 0.0 ? degenerate + 1 : 0;
      if (degenerate > 2 * (m_ + n_)) bland = true;
    }
    throw Error(ErrorKind::CheckFailed, "transport simplex did not converge within " + std::to_string(cap) + " pivots");
  }

  const Eigen::MatrixXd& plan() const { return x_; }
  const Eigen::VectorXd& u() const { return u_; }
  const Eigen::VectorXd& v() const { return v_; }

 private:
  void northwest() {
    Eigen::VectorXd ra = a_, rb = b_;
    int i = 0, j = 0;
    while (true) {
      const double q = (i == m_ - 1 && j == n_ - 1) ? std::max(ra[i], 0.0) : std::min(ra[i], rb[j]);
      x_(i, j) = std::max(q, 0.0);
      basic_[i][j] = 1;
      ra[i] -= q;
      rb[j] -= q;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (j == n_ - 1 || (i < m_ - 1 && ra[i] <= rb[j])) ++i;
      else ++j;
    }
  }

  void adjacency() {
    adj_.assign(static_cast<std::size_t>(m_ + n_), {});
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j)
        if (basic_[i][j]) {
          adj_[i].push_back(m_ + j);
          adj_[m_ + j].push_back(i);
        }
  }

  void duals() {
    adjacency();
    u_ = Eigen::VectorXd::Zero(m_);
    v_ = Eigen::VectorXd::Zero(n_);
    std::vector<char> seen(static_cast<std::size_t>(m_ + n_), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    while (!q.empty()) {
      const int node = q.front();
      q.pop();
      for (int next : adj_[node]) {
        if (seen[next]) continue;
        seen[next] = 1;
        if (node < m_) v_[next - m_] = c_(node, next - m_) - u_[node];
        else u_[next] = c_(next, node - m_) - v_[node - m_];
        q.push(next);
      }
    }
  }

  /// Adds (ei, ej) to the basis and returns the step length theta.
  double pivot(int ei, int ej) {
    // Path in the tree from column node ej back to row node ei.
    std::vector<int> parent(static_cast<std::size_t>(m_ + n_), -1);
    std::queue<int> q;
    const int start = m_ + ej;
    q.push(start);
    parent[start] = start;
    while (!q.empty() && parent[ei] < 0) {
      const int node = q.front();
      q.pop();
      for (int next : adj_[node])
        if (parent[next] < 0) {
          parent[next] = node;
          q.push(next);
        }
    }
    // Cells along the path from ei to ej; the first one loses mass.
    std::vector<std::pair<int, int>> path;
    for (int node = ei; node != start; node = parent[node]) {
      const int up = parent[node];
      path.push_back(node < m_ ? std::pair{node, up - m_} : std::pair{up, node - m_});
    }
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      auto [i, j] = path[k];
      const int index = i * n_ + j;
      if (x_(i, j) < theta || (x_(i, j) == theta && index < leave)) {
        theta = x_(i, j);
        leave = index;
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      auto [i, j] = path[k];
      x_(i, j) += (k % 2 == 0) ? -theta : theta;
    }
    x_(ei, ej) = theta;
    const int li = leave / n_, lj = leave % n_;
    x_(li, lj) = 0.0;
    basic_[li][lj] = 0;
    basic_[ei][ej] = 1;
    return theta;
  }

  int m_, n_;
  Eigen::VectorXd a_, b_;
  Eigen::MatrixXd c_;
  Eigen::MatrixXd x_;
  std::vector<std::vector<char>> basic_;
  std::vector<std::vector<int>> adj_;
  Eigen::VectorXd u_, v_;
  double eps_;
};

}  // namespace detail

/// Exact discrete optimal transport between weight vectors a and b.
/// Zero-weight rows and columns are removed before solving; their potentials
/// are filled in afterwards so that (u, v) is dual feasible everywhere.
inline TransportSolution discrete_ot_exact(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& cost) {
  if (cost.rows() != a.size() || cost.cols() != b.size())
    throw Error(ErrorKind::DimensionMismatch, "cost matrix is " + std::to_string(cost.rows()) + "x" +
                                                  std::to_string(cost.cols()) + " for marginals of length " +
                                                  std::to_string(a.size()) + " and " + std::to_string(b.size()));
  if (!a.allFinite() || !b.allFinite() || (a.size() > 0 && a.minCoeff() < 0.0) || (b.size() > 0 && b.minCoeff() < 0.0))
    throw Error(ErrorKind::InvalidInput, "transport marginals must be finite and nonnegative");
  if (!cost.allFinite() || (cost.size() > 0 && cost.minCoeff() < 0.0))
    throw Error(ErrorKind::InvalidInput, "transport costs must be finite and nonnegative");
  const double ta = a.sum(), tb = b.sum();
  if (std::abs(ta - tb) > 1e-12 * std::max(1.0, std::max(ta, tb)))
    throw Error(ErrorKind::Inconsistent, "marginal totals differ: " + detail::fmt_double(ta) + " vs " + detail::fmt_double(tb));

  std::vector<Eigen::Index> rows, cols;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] > 0.0) rows.push_back(i);
  for (Eigen::Index j = 0; j < b.size(); ++j)
    if (b[j] > 0.0) cols.push_back(j);

  TransportSolution out;
  out.plan = Eigen::MatrixXd::Zero(a.size(), b.size());
  out.u = Eigen::VectorXd::Zero(a.size());
  out.v = Eigen::VectorXd::Zero(b.size());
  std::vector<char> row_set(static_cast<std::size_t>(a.size()), 0), col_set(static_cast<std::size_t>(b.size()), 0);

  if (!rows.empty() && !cols.empty()) {
    Eigen::VectorXd ra(static_cast<Eigen::Index>(rows.size())), rb(static_cast<Eigen::Index>(cols.size()));
    Eigen::MatrixXd rc(ra.size(), rb.size());
    for (std::size_t i = 0; i < rows.size(); ++i) ra[static_cast<Eigen::Index>(i)] = a[rows[i]];
    for (std::size_t j = 0; j < cols.size(); ++j) rb[static_cast<Eigen::Index>(j)] = b[cols[j]];
    // Rescale so that the smaller total matches exactly.
    rb *= ra.sum() / rb.sum();
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j)
        rc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cost(rows[i], cols[j]);
    detail::TransportSimplex simplex(ra, rb, rc);
    out.iterations = simplex.solve();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.u[rows[i]] = simplex.u()[static_cast<Eigen::Index>(i)];
      row_set[static_cast<std::size_t>(rows[i])] = 1;
      for (std::size_t j = 0; j < cols.size(); ++j)
        out.plan(rows[i], cols[j]) = simplex.plan()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out.v[cols[j]] = simplex.v()[static_cast<Eigen::Index>(j)];
      col_set[static_cast<std::size_t>(cols[j])] = 1;
    }
  }
  // Potentials of empty rows and columns: largest values keeping C - u - v >= 0.
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (row_set[static_cast<std::size_t>(i)]) continue;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < b.size(); ++j)
      if (col_set[static_cast<std::size_t>(j)]) best = std::min(best, cost(i, j) - out.v[j]);
    out.u[i] = std::isfinite(best) ? best : 0.0;
  }
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    if (col_set[static_cast<std::size_t>(j)]) continue;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < a.size(); ++i) best = std::min(best, cost(i, j) - out.u[i]);
    out.v[j] = std::isfinite(best) ? best : 0.0;
  }
  out.cost = plan_cost(out.plan, cost);
  out.certificate = certify(out.plan, a, b, cost, out.u, out.v);
  return out;
}

}  // namespace tfn
