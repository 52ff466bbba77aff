#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tfn/covering.hpp"
#include "tfn/plan.hpp"
#include "tfn/random.hpp"
#include "tfn/simple.hpp"

namespace tfn {

// ---------------------------------------------------------------------------
// Markov axioms

struct MarkovReport {
  struct Entry {
    std::string label;
    double negative_mass = 0.0;  // ||(Phi lambda)^-||
    double mass_defect = 0.0;    // |Phi lambda (Y) - lambda(X)|
    double additivity = 0.0;     // ||Phi(l1 + l2) - Phi l1 - Phi l2||
  };

  std::vector<Entry> entries;
  double geometric_residual = 0.0;
  double tolerance = 1e-10;
  double geometric_tolerance = 1e-6;
  std::uint64_t seed = 0;

  double worst_negative() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.negative_mass);
    return w;
  }
  double worst_mass_defect() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.mass_defect);
    return w;
  }
  double worst_additivity() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.additivity);
    return w;
  }

  bool positive() const { return worst_negative() <= tolerance; }
  bool measure_preserving() const { return worst_mass_defect() <= tolerance; }
  bool additive() const { return worst_additivity() <= tolerance && geometric_residual <= geometric_tolerance; }
  bool passed() const { return positive() && measure_preserving() && additive(); }

  /// Names of the violated axioms, empty when passed.
  std::string failure() const {
    std::string out;
    auto add = [&out](const char* s) { out += out.empty() ? s : std::string(", ") + s; };
    if (!positive()) add("positivity");
    if (!measure_preserving()) add("measure preservation");
    if (!additive()) add("additivity");
    return out;
  }
};

class MarkovCheckError : public Error {
 public:
  explicit MarkovCheckError(MarkovReport report)
      : Error(ErrorKind::CheckFailed, "transfunction is not Markov: " + report.failure()), report_(std::move(report)) {}
  const MarkovReport& report() const noexcept { return report_; }

 private:
  MarkovReport report_;
};

/// Checks positivity, measure preservation and additivity of Phi on a
/// positive basis, on seeded random nonnegative combinations of it, and on
/// one truncated geometric series sum_k 2^-k lambda_k (k < 20).
template <class Transfunction>
MarkovReport markov_check(const Transfunction& phi, std::span<const DiscreteMeasure> basis, std::uint64_t seed = 0,
                          double tolerance = 1e-10) {
  MarkovReport report;
  report.seed = seed;
  report.tolerance = tolerance;
  if (basis.empty()) return report;
  for (const auto& b : basis)
    if (!b.is_positive()) throw Error(ErrorKind::InvalidInput, "markov_check: basis measures must be positive");

  auto probe = [&phi, &report](std::string label, const DiscreteMeasure& l1, const DiscreteMeasure& l2) {
    const DiscreteMeasure out1 = phi(l1);
    const DiscreteMeasure out2 = phi(l2);
    const DiscreteMeasure joint = phi(l1 + l2);
    MarkovReport::Entry e;
    e.label = std::move(label);
    e.negative_mass = jordan(out1).negative.total_variation();
    e.mass_defect = std::abs(out1.mass() - l1.mass());
    e.additivity = distance_tv(joint, out1 + out2);
    report.entries.push_back(std::move(e));
  };

  const std::size_t n = basis.size();
  for (std::size_t k = 0; k < n; ++k) probe("basis[" + std::to_string(k) + "]", basis[k], basis[(k + 1) % n]);

  Rng rng(seed);
  const int dim = basis.front().dimension();
  const std::size_t combos = std::max<std::size_t>(4, n);
  std::vector<DiscreteMeasure> mixes;
  for (std::size_t c = 0; c < combos + 1; ++c) {
    MeasureBuilder acc(dim);
    for (const auto& b : basis) acc.add(b, rng.uniform());
    mixes.push_back(std::move(acc).build());
  }
  for (std::size_t c = 0; c < combos; ++c) probe("combo[" + std::to_string(c) + "]", mixes[c], mixes[c + 1]);

  MeasureBuilder series(dim);
  std::vector<std::pair<double, std::size_t>> parts;
  for (int k = 0; k < 20; ++k) {
    const double w = std::ldexp(1.0, -k);
    series.add(basis[static_cast<std::size_t>(k) % n], w);
    parts.emplace_back(w, static_cast<std::size_t>(k) % n);
  }
  const DiscreteMeasure whole = phi(std::move(series).build());
  MeasureBuilder pieces(whole.dimension());
  for (auto [w, k] : parts) pieces.add(phi(basis[k]), w);
  report.geometric_residual = distance_tv(whole, std::move(pieces).build());
  return report;
}

// ---------------------------------------------------------------------------
// Cell-level views of a transfunction

/// K(i, j) = Phi(1_{C_i} mu)(C_j)
template <class Transfunction>
Eigen::MatrixXd cell_matrix(const Transfunction& phi, const DiscreteMeasure& mu, const CellPartition& source,
                            const CellPartition& target) {
  const auto parts = source.split(mu);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(source.size()), static_cast<Eigen::Index>(target.size()));
  for (std::size_t i = 0; i < parts.size(); ++i)
    if (!parts[i].empty()) k.row(static_cast<Eigen::Index>(i)) = target.masses(phi(parts[i])).transpose();
  return k;
}

namespace detail {

inline void require_matching_masses(const Eigen::VectorXd& declared, const Eigen::VectorXd& actual, const char* what) {
  if (declared.size() != actual.size())
    throw Error(ErrorKind::Inconsistent, std::string(what) + ": " + std::to_string(declared.size()) + " cells declared, " +
                                             std::to_string(actual.size()) + " in the partition");
  const double tol = kInvariantTolerance * std::max(1.0, actual.cwiseAbs().sum());
  for (Eigen::Index i = 0; i < declared.size(); ++i)
    if (std::abs(declared[i] - actual[i]) > tol)
      throw Error(ErrorKind::Inconsistent, std::string(what) + ": cell " + std::to_string(i) + " declares mass " +
                                               fmt_double(declared[i]) + " but the measure has " + fmt_double(actual[i]));
}

inline std::vector<DiscreteMeasure> positive_parts(const CellPartition& cells, const DiscreteMeasure& m, const char* what) {
  if (!m.is_positive()) throw Error(ErrorKind::InvalidInput, std::string(what) + " must be a positive measure");
  return cells.split(m);
}

}  // namespace detail

/// Phi(1_A mu)(B) = kappa(A x B) on cell unions, realised with the
/// cell-normalised target measure inside each C_j.
inline SimpleTransfunction plan_to_transfunction(const DiscretePlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                                 const CellPartition& source, const CellPartition& target) {
  const auto mu_parts = detail::positive_parts(source, mu, "plan source marginal");
  const auto nu_parts = detail::positive_parts(target, nu, "plan target marginal");
  detail::require_matching_masses(plan.mu(), source.masses(mu), "plan mu");
  detail::require_matching_masses(plan.nu(), target.masses(nu), "plan nu");

  SimpleTransfunction phi(mu.dimension(), nu.dimension());
  const auto& k = plan.matrix();
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    const double mi = mu_parts[static_cast<std::size_t>(i)].mass();
    if (mi <= 0.0) {
      if (k.row(i).cwiseAbs().sum() > 0.0)
        throw Error(ErrorKind::Inconsistent, "plan row " + std::to_string(i) + " moves mass out of a mu-null cell");
      continue;
    }
    MeasureBuilder out(nu.dimension());
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      if (k(i, j) == 0.0) continue;
      const auto& part = nu_parts[static_cast<std::size_t>(j)];
      const double nj = part.mass();
      if (nj <= 0.0)
        throw Error(ErrorKind::Inconsistent, "plan sends mass into nu-null cell " + std::to_string(j));
      out.add(part, k(i, j) / nj);
    }
    phi.add_term(source.indicator(static_cast<std::size_t>(i), 1.0 / mi), std::move(out).build());
  }
  return phi;
}

/// kappa(i, j) = Phi(1_{C_i} mu)(C_j), after certifying that Phi is Markov
/// on the cell pieces of mu.
template <class Transfunction>
DiscretePlan transfunction_to_plan(const Transfunction& phi, const DiscreteMeasure& mu, const CellPartition& source,
                                   const CellPartition& target, std::uint64_t seed = 0) {
  auto parts = detail::positive_parts(source, mu, "reference measure");
  std::erase_if(parts, [](const DiscreteMeasure& m) { return m.empty(); });
  auto report = markov_check(phi, std::span<const DiscreteMeasure>(parts), seed);
  if (!report.passed()) throw MarkovCheckError(std::move(report));
  Eigen::MatrixXd k = cell_matrix(phi, mu, source, target);
  return DiscretePlan(std::move(k), source.masses(mu), target.masses(phi(mu)), source.level(), target.level());
}

/// Phi = J_nu T J_mu^{-1} on cell-measurable inputs.
inline SimpleTransfunction operator_to_transfunction(const MarkovMatrix& t, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                                     const CellPartition& source, const CellPartition& target) {
  const auto mu_parts = detail::positive_parts(source, mu, "operator source measure");
  const auto nu_parts = detail::positive_parts(target, nu, "operator target measure");
  detail::require_matching_masses(t.mu(), source.masses(mu), "operator mu");
  detail::require_matching_masses(t.nu(), target.masses(nu), "operator nu");

  SimpleTransfunction phi(mu.dimension(), nu.dimension());
  for (std::size_t i = 0; i < mu_parts.size(); ++i) {
    const double mi = mu_parts[i].mass();
    if (mi <= 0.0) continue;
    MeasureBuilder out(nu.dimension());
    for (std::size_t j = 0; j < nu_parts.size(); ++j) {
      const double tij = t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (tij != 0.0) out.add(nu_parts[j], tij);
    }
    phi.add_term(source.indicator(i, 1.0 / mi), std::move(out).build());
  }
  return phi;
}

/// T = J_rho^{-1} Phi J_lambda with rho = Phi lambda, on cell-step functions.
template <class Transfunction>
MarkovMatrix transfunction_to_operator(const Transfunction& phi, const DiscreteMeasure& lambda, const CellPartition& source,
                                       const CellPartition& target) {
  if (!lambda.is_positive()) throw Error(ErrorKind::InvalidInput, "transfunction_to_operator: lambda must be positive");
  const DiscreteMeasure rho = phi(lambda);
  const Eigen::VectorXd rho_cells = target.masses(rho);
  const Eigen::MatrixXd k = cell_matrix(phi, lambda, source, target);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k.rows(), k.cols());
  const double tol = kInvariantTolerance * std::max(1.0, lambda.total_variation());
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    if (rho_cells[j] > 0.0) {
      t.col(j) = k.col(j) / rho_cells[j];
    } else if (k.col(j).cwiseAbs().sum() > tol) {
      throw Error(ErrorKind::Inconsistent,
                  "cell " + std::to_string(j) + " of rho = Phi lambda has no mass but receives mass from some C_i");
    }
  }
  return MarkovMatrix(std::move(t), source.masses(lambda), rho_cells);
}

/// Phi^dagger(1_B nu)(A) = Phi(1_A mu)(B), realised by transposing the cell
/// matrix of Phi; maps M_nu into M_mu.
template <class Transfunction>
SimpleTransfunction dagger(const Transfunction& phi, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const CellPartition& source, const CellPartition& target) {
  const auto mu_parts = detail::positive_parts(source, mu, "dagger mu");
  const auto nu_parts = detail::positive_parts(target, nu, "dagger nu");
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(source.size()), static_cast<Eigen::Index>(target.size()));
  for (std::size_t i = 0; i < mu_parts.size(); ++i) {
    if (mu_parts[i].empty()) continue;
    const DiscreteMeasure image = phi(mu_parts[i]);
    for (const auto& a : image.atoms())
      if (!nu.contains(a.point))
        throw Error(ErrorKind::AbsoluteContinuity,
                    "Phi(1_C" + std::to_string(i) + " mu) charges " + a.point.str() + " outside supp(nu)");
    k.row(static_cast<Eigen::Index>(i)) = target.masses(image).transpose();
  }
  SimpleTransfunction out(nu.dimension(), mu.dimension());
  for (std::size_t j = 0; j < nu_parts.size(); ++j) {
    const double nj = nu_parts[j].mass();
    if (nj <= 0.0) continue;
    MeasureBuilder acc(mu.dimension());
    for (std::size_t i = 0; i < mu_parts.size(); ++i) {
      const double kij = k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (kij != 0.0) acc.add(mu_parts[i], kij / mu_parts[i].mass());
    }
    out.add_term(target.indicator(j, 1.0 / nj), std::move(acc).build());
  }
  return out;
}

/// Phi restricted to M_{h mu} together with its plan (h (x) 1) kappa, whose
/// marginals are h mu and Phi(h mu).
struct Reweighted {
  SimpleTransfunction restriction;
  DiscreteMeasure reference;
  DiscretePlan plan;
};

inline Reweighted reweight_instructions(const SimpleTransfunction& phi, const Density& h, const DiscreteMeasure& mu,
                                        const CellPartition& source, const CellPartition& target, std::uint64_t seed = 0) {
  for (double v : h)
    if (!(v >= 0.0)) throw Error(ErrorKind::InvalidInput, "reweighting density must be nonnegative");
  DiscreteMeasure reweighted = to_measure(h, mu);
  DiscretePlan plan = transfunction_to_plan(phi, reweighted, source, target, seed);
  return {phi, std::move(reweighted), std::move(plan)};
}

/// kappa(x_k, y_l) = Phi(mu_k delta_{x_k})({y_l}) on the atoms of mu.
template <class Transfunction>
PointPlan point_plan(const Transfunction& phi, const DiscreteMeasure& mu) {
  std::vector<DiscreteMeasure> images;
  std::vector<Point> targets;
  for (const auto& a : mu.atoms()) {
    images.push_back(phi(DiscreteMeasure::dirac(a.point, a.weight)));
    for (const auto& b : images.back().atoms()) targets.push_back(b.point);
  }
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  PointPlan plan{mu.support(), targets, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mu.size()), static_cast<Eigen::Index>(targets.size()))};
  for (std::size_t k = 0; k < images.size(); ++k)
    for (const auto& b : images[k].atoms()) {
      const auto l = std::lower_bound(targets.begin(), targets.end(), b.point) - targets.begin();
      plan.mass(static_cast<Eigen::Index>(k), l) = b.weight;
    }
  return plan;
}

/// max over cell unions A, B of the disagreement between Phi(1_A mu)(B),
/// int_B T(1_A) d nu and kappa(A x B). Enumerates 2^p x 2^q pairs.
template <class Transfunction>
double triple_equality_residual(const Transfunction& phi, const MarkovMatrix& t, const DiscretePlan& plan,
                                const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CellPartition& source,
                                const CellPartition& target) {
  const std::size_t p = source.size(), q = target.size();
  if (p > 16 || q > 16) throw Error(ErrorKind::InvalidInput, "triple_equality_residual: too many cells to enumerate");
  const auto mu_parts = source.split(mu);
  const Eigen::VectorXd nu_cells = target.masses(nu);
  double worst = 0.0;
  for (std::uint32_t a = 0; a < (1u << p); ++a) {
    MeasureBuilder restricted(mu.dimension());
    Eigen::VectorXd indicator = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i)
      if (a & (1u << i)) {
        restricted.add(mu_parts[i]);
        indicator[static_cast<Eigen::Index>(i)] = 1.0;
      }
    const Eigen::VectorXd image = target.masses(phi(std::move(restricted).build()));
    const Eigen::VectorXd t_of_a = t.apply(indicator);
    const Eigen::VectorXd kappa_row = plan.matrix().transpose() * indicator;
    for (std::uint32_t b = 0; b < (1u << q); ++b) {
      double via_phi = 0.0, via_t = 0.0, via_kappa = 0.0;
      for (std::size_t j = 0; j < q; ++j)
        if (b & (1u << j)) {
          const auto jj = static_cast<Eigen::Index>(j);
          via_phi += image[jj];
          via_t += t_of_a[jj] * nu_cells[jj];
          via_kappa += kappa_row[jj];
        }
      worst = std::max({worst, std::abs(via_phi - via_t), std::abs(via_t - via_kappa), std::abs(via_phi - via_kappa)});
    }
  }
  return worst;
}

}  // namespace tfn
