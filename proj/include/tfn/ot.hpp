#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tfn/assignment.hpp"
#include "tfn/cost.hpp"
#include "tfn/identity.hpp"
#include "tfn/transfunction.hpp"
#include "tfn/transport.hpp"

namespace tfn {

// ---------------------------------------------------------------------------
// Warehouse strategy

struct WarehouseOptions {
  /// Number of unit vertices per side in the assignment route; 0 skips it.
  std::size_t vertex_budget = 1000;
};

/// Integer masses a_i ~ z lambda_i with sum a_i = budget (largest remainder,
/// ties to the lower index).
inline std::vector<long long> largest_remainder(const Eigen::VectorXd& masses, std::size_t budget) {
  const double total = masses.sum();
  std::vector<long long> out(static_cast<std::size_t>(masses.size()), 0);
  if (total <= 0.0 || budget == 0) return out;
  std::vector<std::pair<double, std::size_t>> rem;
  long long used = 0;
  for (Eigen::Index i = 0; i < masses.size(); ++i) {
    const double q = static_cast<double>(budget) * masses[i] / total;
    const double f = std::floor(q);
    out[static_cast<std::size_t>(i)] = static_cast<long long>(f);
    used += static_cast<long long>(f);
    rem.emplace_back(q - f, static_cast<std::size_t>(i));
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t k = 0; used < static_cast<long long>(budget) && k < rem.size(); ++k, ++used) ++out[rem[k].second];
  return out;
}

/// Projects a nonnegative matrix onto exact marginals (r, c) with
/// ||G - F||_1 <= 2 (||F 1 - r||_1 + ||F^T 1 - c||_1).
inline Eigen::MatrixXd round_to_marginals(const Eigen::MatrixXd& f, const Eigen::VectorXd& r, const Eigen::VectorXd& c) {
  Eigen::MatrixXd g = f;
  const Eigen::VectorXd rows = g.rowwise().sum();
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    if (rows[i] > r[i]) g.row(i) *= r[i] / rows[i];
  const Eigen::VectorXd cols = g.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    if (cols[j] > c[j]) g.col(j) *= c[j] / cols[j];
  const Eigen::VectorXd er = (r - g.rowwise().sum()).cwiseMax(0.0);
  const Eigen::VectorXd ec = (c - g.colwise().sum().transpose()).cwiseMax(0.0);
  const double s = ec.sum();
  if (s > 0.0) g += er * ec.transpose() / s;
  return g;
}

struct AssignmentRoute {
  std::vector<long long> a, b;  // integer vertex counts per active cell
  double z = 0.0;               // vertices per unit mass
  std::size_t vertices = 0;
  double raw_cost = 0.0;        // assignment cost / z
  double feasible_cost = 0.0;   // after repair to the exact cell marginals
  double marginal_defect = 0.0; // ||a/z - lambda_n||_1 + ||b/z - rho_n||_1
  double slack = 0.0;           // 4 max(C) * marginal_defect
};

struct WarehouseReport {
  int level = 0;
  double alpha = 1.0, power = 1.0;
  double mass = 0.0;
  DiscreteMeasure lambda_n{1}, rho_n{1};  // cell masses placed at the centers
  std::vector<std::size_t> source_cells, target_cells;
  Eigen::MatrixXd middle_plan;            // exact route, over the active cells
  double first = 0.0, middle = 0.0, last = 0.0;
  std::optional<AssignmentRoute> assignment;

  double total() const { return first + middle + last; }
  /// alpha n^-p ||lambda||
  double end_step_budget() const { return alpha * std::pow(static_cast<double>(level), -power) * mass; }
  /// 2 alpha n^-p ||lambda|| + alpha (2/n)^p ||lambda||
  double error_budget() const { return 2.0 * end_step_budget() + alpha * std::pow(2.0 / level, power) * mass; }
  bool end_steps_within_budget(double slack = 1e-12) const {
    const double b = end_step_budget() * (1.0 + slack) + slack;
    return first <= b && last <= b;
  }
};

/// Three-step transport lambda -> I_n lambda -> (discrete OT) -> I_n rho -> rho
/// with I_n the point-mass identity of the covering level.
inline WarehouseReport warehouse_strategy(const DiscreteMeasure& lambda, const DiscreteMeasure& rho, const CostFunction& c,
                                          const CellPartition& cells, const WarehouseOptions& options = {}) {
  if (c.kind() != CostFunction::Kind::PowerDistance)
    throw Error(ErrorKind::InvalidInput, "warehouse strategy needs a power-distance cost");
  if (!lambda.is_positive() || !rho.is_positive()) throw Error(ErrorKind::InvalidInput, "warehouse marginals must be positive");
  require_same_dimension(lambda.dimension(), rho.dimension(), "warehouse_strategy");
  const double mass = lambda.mass();
  if (std::abs(mass - rho.mass()) > 1e-12 * std::max(1.0, mass))
    throw Error(ErrorKind::Inconsistent, "marginal masses differ: " + detail::fmt_double(mass) + " vs " + detail::fmt_double(rho.mass()));

  WarehouseReport rep;
  rep.level = cells.level();
  rep.alpha = c.alpha();
  rep.power = c.power();
  rep.mass = mass;

  for (const auto& at : lambda.atoms()) rep.first += at.weight * c(at.point, cells.center(cells.index_or_throw(at.point)));
  for (const auto& at : rho.atoms()) rep.last += at.weight * c(cells.center(cells.index_or_throw(at.point)), at.point);

  const Eigen::VectorXd lm = cells.masses(lambda), rm = cells.masses(rho);
  std::vector<Point> xs, ys;
  std::vector<double> aw, bw;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (lm[static_cast<Eigen::Index>(i)] > 0.0) {
      rep.source_cells.push_back(i);
      xs.push_back(cells.center(i));
      aw.push_back(lm[static_cast<Eigen::Index>(i)]);
    }
    if (rm[static_cast<Eigen::Index>(i)] > 0.0) {
      rep.target_cells.push_back(i);
      ys.push_back(cells.center(i));
      bw.push_back(rm[static_cast<Eigen::Index>(i)]);
    }
  }
  rep.lambda_n = DiscreteMeasure(xs, aw);
  rep.rho_n = DiscreteMeasure(ys, bw);
  const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(aw.data(), static_cast<Eigen::Index>(aw.size()));
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(bw.data(), static_cast<Eigen::Index>(bw.size()));
  const Eigen::MatrixXd cm = c.matrix(xs, ys);

  const TransportSolution exact = discrete_ot_exact(a, b, cm);
  rep.middle_plan = exact.plan;
  rep.middle = exact.cost;

  if (options.vertex_budget > 0 && a.size() > 0) {
    AssignmentRoute route;
    const std::size_t budget = options.vertex_budget;
    route.a = largest_remainder(a, budget);
    route.b = largest_remainder(b, budget);
    route.vertices = budget;
    route.z = static_cast<double>(budget) / mass;
    std::vector<Eigen::Index> row_owner, col_owner;
    for (std::size_t i = 0; i < route.a.size(); ++i) row_owner.insert(row_owner.end(), static_cast<std::size_t>(route.a[i]), static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < route.b.size(); ++j) col_owner.insert(col_owner.end(), static_cast<std::size_t>(route.b[j]), static_cast<Eigen::Index>(j));
    const Assignment sol = assignment_solve(budget, [&](std::size_t r, std::size_t s) { return cm(row_owner[r], col_owner[s]); });
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(cm.rows(), cm.cols());
    for (std::size_t r = 0; r < budget; ++r) counts(row_owner[r], col_owner[sol.permutation[r]]) += 1.0;
    const Eigen::MatrixXd f = counts / route.z;
    route.raw_cost = sol.cost / route.z;
    route.marginal_defect = (f.rowwise().sum() - a).cwiseAbs().sum() + (f.colwise().sum().transpose() - b).cwiseAbs().sum();
    route.feasible_cost = plan_cost(round_to_marginals(f, a, b), cm);
    route.slack = 4.0 * cm.maxCoeff() * route.marginal_defect;
    rep.assignment = std::move(route);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Cell aggregation of point couplings

/// K_ij = kappa(C_i x C_j) for a point coupling with marginals mu and nu.
inline DiscretePlan coarse_grain_plan(const PointPlan& fine, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                      const CellPartition& source, const CellPartition& target) {
  const double tol = 1e-12 * std::max(1.0, mu.total_variation());
  if (distance_tv(fine.source_marginal(), mu) > tol)
    throw Error(ErrorKind::Inconsistent, "fine coupling's first marginal differs from mu");
  if (distance_tv(fine.target_marginal(), nu) > tol)
    throw Error(ErrorKind::Inconsistent, "fine coupling's second marginal differs from nu");
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(source.size()), static_cast<Eigen::Index>(target.size()));
  std::vector<Eigen::Index> ci, cj;
  for (const auto& x : fine.sources) ci.push_back(static_cast<Eigen::Index>(source.index_or_throw(x)));
  for (const auto& y : fine.targets) cj.push_back(static_cast<Eigen::Index>(target.index_or_throw(y)));
  for (Eigen::Index a = 0; a < fine.mass.rows(); ++a)
    for (Eigen::Index b = 0; b < fine.mass.cols(); ++b)
      if (fine.mass(a, b) != 0.0) k(ci[static_cast<std::size_t>(a)], cj[static_cast<std::size_t>(b)]) += fine.mass(a, b);
  return DiscretePlan(std::move(k), source.masses(mu), target.masses(nu), source.level(), target.level());
}

/// kappa_n(x_k, y_l) = K_ij mu_k nu_l / (mu(C_i) nu(C_j)) for x_k in C_i, y_l in C_j.
inline PointPlan expand_plan(const DiscretePlan& cells_plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             const CellPartition& source, const CellPartition& target) {
  const Eigen::VectorXd mc = source.masses(mu), nc = target.masses(nu);
  PointPlan out{mu.support(), nu.support(), Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mu.size()), static_cast<Eigen::Index>(nu.size()))};
  for (std::size_t a = 0; a < mu.size(); ++a) {
    const auto i = static_cast<Eigen::Index>(source.index_or_throw(mu.atoms()[a].point));
    if (mc[i] <= 0.0) continue;
    for (std::size_t b = 0; b < nu.size(); ++b) {
      const auto j = static_cast<Eigen::Index>(target.index_or_throw(nu.atoms()[b].point));
      if (nc[j] <= 0.0 || cells_plan.matrix()(i, j) == 0.0) continue;
      out.mass(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          cells_plan.matrix()(i, j) * (mu.atoms()[a].weight / mc[i]) * (nu.atoms()[b].weight / nc[j]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simple Markov approximation

/// Sample certificate for one cost field: beta_ij is max - min of c over
/// (support points and center of C_i) x (support points and center of C_j).
struct OscillationReport {
  std::string field;
  Eigen::MatrixXd beta;
  double beta_max = 0.0;       // over cell pairs that both carry mass
  double kappa_mass = 0.0;
  double weighted = 0.0;       // sum_ij beta_ij K_ij
  double measured = 0.0;       // |<c, kappa - kappa_n>|

  double bound() const { return beta_max * kappa_mass; }
  bool within(double slack = 1e-10) const { return measured <= bound() + slack && measured <= weighted + slack; }
};

struct MarkovApproximation {
  int level = 0;
  PointPlan kappa;
  DiscretePlan kappa_n;
  PointPlan kappa_n_points;
  SimpleTransfunction phi_n;
  MarkovMatrix m_n;            // m_n.anchor()(j, i) = K_ij / nu_j
  double projection_residual = 0.0;  // max_k ||Phi_n b_k - Phi_n I_n b_k||
  double marginal_residual = 0.0;    // of kappa_n against the cell masses
  std::vector<OscillationReport> oscillations;

  double beta_max() const {
    double b = 0.0;
    for (const auto& o : oscillations) b = std::max(b, o.beta_max);
    return b;
  }
  double max_gap() const {
    double g = 0.0;
    for (const auto& o : oscillations) g = std::max(g, o.measured);
    return g;
  }
};

namespace detail {

inline std::vector<std::vector<Point>> cell_members(const DiscreteMeasure& m, const CellPartition& cells) {
  std::vector<std::vector<Point>> out(cells.size());
  for (const auto& a : m.atoms()) out[cells.index_or_throw(a.point)].push_back(a.point);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].push_back(cells.center(i));
  return out;
}

}  // namespace detail

inline OscillationReport oscillation(const PairField& c, const MarkovApproximation& approx, const DiscreteMeasure& mu,
                                     const DiscreteMeasure& nu, const CellPartition& source, const CellPartition& target) {
  OscillationReport rep;
  rep.field = c.name();
  const auto xs = detail::cell_members(mu, source), ys = detail::cell_members(nu, target);
  const Eigen::VectorXd mc = source.masses(mu), nc = target.masses(nu);
  const auto& k = approx.kappa_n.matrix();
  rep.beta = Eigen::MatrixXd::Zero(k.rows(), k.cols());
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& x : xs[static_cast<std::size_t>(i)])
        for (const auto& y : ys[static_cast<std::size_t>(j)]) {
          const double v = c(x, y);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      rep.beta(i, j) = hi - lo;
      if (mc[i] > 0.0 && nc[j] > 0.0) rep.beta_max = std::max(rep.beta_max, rep.beta(i, j));
    }
  rep.kappa_mass = approx.kappa.total();
  rep.weighted = (rep.beta.array() * k.array()).sum();
  rep.measured = std::abs(approx.kappa.integrate(c) - approx.kappa_n_points.integrate(c));
  return rep;
}

/// Phi_n built from the cell aggregation of the point plan of Phi, with
/// nu = Phi mu. The battery supplies the cost fields of the oscillation
/// certificate.
template <class Transfunction>
MarkovApproximation simple_markov_approx(const Transfunction& phi, const DiscreteMeasure& mu, const CellPartition& source,
                                         const CellPartition& target, std::span<const PairField> battery,
                                         std::uint64_t seed = 0) {
  if (!mu.is_positive()) throw Error(ErrorKind::InvalidInput, "reference measure must be positive");
  std::vector<DiscreteMeasure> atoms;
  for (const auto& a : mu.atoms()) atoms.push_back(DiscreteMeasure::dirac(a.point, a.weight));
  auto check = markov_check(phi, std::span<const DiscreteMeasure>(atoms), seed);
  if (!check.passed()) throw MarkovCheckError(std::move(check));

  const DiscreteMeasure nu = phi(mu);
  PointPlan kappa = point_plan(phi, mu);
  DiscretePlan kn = coarse_grain_plan(kappa, mu, nu, source, target);
  SimpleTransfunction phi_n = plan_to_transfunction(kn, mu, nu, source, target);
  MarkovMatrix mn = MarkovMatrix::from_plan(kn);
  PointPlan kn_points = expand_plan(kn, mu, nu, source, target);
  MarkovApproximation out{source.level(), std::move(kappa), kn, std::move(kn_points), std::move(phi_n), std::move(mn), 0.0, 0.0, {}};

  out.marginal_residual = kn.marginal_residual();
  const SimpleTransfunction id = identity_measurable(source.covering(), source.level(), mu);
  for (const auto& b : atoms)
    out.projection_residual = std::max(out.projection_residual, distance_tv(out.phi_n(b), out.phi_n(id(b))));
  for (const auto& c : battery) out.oscillations.push_back(oscillation(c, out, mu, nu, source, target));
  return out;
}

// ---------------------------------------------------------------------------
// Restriction of optimal plans

struct RestrictionReport {
  bool input_optimal = false;
  double input_cost = 0.0, input_optimum = 0.0;
  double restricted_cost = 0.0, restricted_optimum = 0.0;
  DiscretePlan restricted;

  double residual() const { return std::abs(restricted_cost - restricted_optimum); }
  bool passed(double tol = 1e-9) const { return input_optimal && residual() <= tol; }
};

/// kappa' = (h (x) 1) kappa is optimal for its own marginals whenever kappa is.
inline RestrictionReport restriction_optimality_check(const DiscretePlan& plan, const Eigen::VectorXd& h, const Eigen::MatrixXd& cost,
                                                      double tol = 1e-9) {
  if (h.size() != plan.rows()) throw Error(ErrorKind::DimensionMismatch, "density length does not match the plan rows");
  for (Eigen::Index i = 0; i < h.size(); ++i)
    if (!(h[i] >= 0.0 && h[i] <= 1.0)) throw Error(ErrorKind::InvalidInput, "restriction density must lie in [0, 1]");
  RestrictionReport rep{false, plan_cost(plan.matrix(), cost), 0.0, 0.0, 0.0, plan.reweighted_rows(h)};
  rep.input_optimum = discrete_ot_exact(plan.mu(), plan.nu(), cost).cost;
  rep.input_optimal = std::abs(rep.input_cost - rep.input_optimum) <= tol * std::max(1.0, rep.input_optimum);
  if (!rep.input_optimal) return rep;
  rep.restricted_cost = plan_cost(rep.restricted.matrix(), cost);
  rep.restricted_optimum = discrete_ot_exact(rep.restricted.mu(), rep.restricted.nu(), cost).cost;
  return rep;
}

}  // namespace tfn
