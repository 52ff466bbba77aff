#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tfn/covering.hpp"
#include "tfn/simple.hpp"

namespace tfn {

enum class IdentitySetting { PointMass, Continuous, Measurable };

inline const char* to_string(IdentitySetting s) {
  switch (s) {
    case IdentitySetting::PointMass: return "pointmass";
    case IdentitySetting::Continuous: return "continuous";
    case IdentitySetting::Measurable: return "measurable";
  }
  return "?";
}

/// I_n lambda = sum_i lambda(C_{n,i}) delta_{x_i}
inline SimpleTransfunction identity_pointmass(const Covering& covering, int n) {
  const CellPartition cells(covering, n);
  const int d = covering.dimension();
  SimpleTransfunction out(d, d);
  for (std::size_t i = 0; i < cells.size(); ++i) out.add_term(cells.indicator(i), DiscreteMeasure::dirac(cells.center(i)));
  return out;
}

/// Continuous partition of unity subordinate to the inflated cells of a level.
///
/// g_i(x) = max(0, 1 - n * dist~(x, C_{n,i})) where dist~ is exact zero on
/// C_{n,i} itself and otherwise the distance to the nearest point of C_{n,i}
/// among x_i and the lattice (1/(4n)) Z^d. A center swallowed by an earlier
/// ball is not a member of its own cell and is skipped. Every witness lies in
/// C_{n,i}, so supp g_i lies in B(C_{n,i}; 1/n). The
/// normalised f_i = g_i / max(1, sum_j g_j) sum to exactly 1 on K_n.
class TentPartition {
 public:
  TentPartition(Covering covering, int n) : covering_(std::move(covering)), n_(n), count_(covering_.count(n)) {}

  int level() const noexcept { return n_; }
  std::size_t size() const noexcept { return count_; }

  /// Nonzero g_i(x), keyed by cell index.
  std::map<std::size_t, double> raw(const Point& x) const {
    const double reach = 1.0 / n_;
    std::map<std::size_t, double> dist;
    auto relax = [&dist](std::size_t i, double dd) {
      auto [it, inserted] = dist.emplace(i, dd);
      if (!inserted) it->second = std::min(it->second, dd);
    };
    if (auto own = covering_.cell_index(n_, x)) relax(*own, 0.0);
    for (std::size_t i : covering_.centers_within(n_, x, reach)) {
      const Point c = covering_.center(i);
      if (covering_.cell_index(n_, c) == i) relax(i, distance(x, c));
    }

    const double h = reach / 4.0;
    const int d = x.dimension();
    std::array<long, kMaxDimension> first{}, last{};
    for (int k = 0; k < d; ++k) {
      first[k] = static_cast<long>(std::ceil((x[k] - reach) / h));
      last[k] = static_cast<long>(std::floor((x[k] + reach) / h));
    }
    std::array<long, kMaxDimension> idx = first;
    std::array<double, kMaxDimension> q{};
    while (true) {
      for (int k = 0; k < d; ++k) q[k] = static_cast<double>(idx[k]) * h;
      const Point lattice(std::span<const double>(q.data(), static_cast<std::size_t>(d)));
      const double dq = distance(x, lattice);
      if (dq < reach)
        if (auto j = covering_.cell_index(n_, lattice)) relax(*j, dq);
      int k = d - 1;
      while (k >= 0 && idx[k] == last[k]) {
        idx[k] = first[k];
        --k;
      }
      if (k < 0) break;
      ++idx[k];
    }

    std::map<std::size_t, double> g;
    for (auto [i, dd] : dist) {
      const double v = 1.0 - n_ * dd;
      if (v > 0.0) g.emplace(i, v);
    }
    return g;
  }

  double weight(std::size_t i, const Point& x) const {
    // f_i(x) > 0 forces some point of C_{n,i} within 1/n of x.
    if (distance(x, covering_.center(i)) >= (2.0 / n_) * (1.0 + 1e-9)) return 0.0;
    const auto g = raw(x);
    auto it = g.find(i);
    if (it == g.end()) return 0.0;
    double total = 0.0;
    for (const auto& [j, v] : g) total += v;
    return it->second / std::max(1.0, total);
  }

 private:
  Covering covering_;
  int n_;
  std::size_t count_;
};

/// Continuous-setting identity: terms (f_{n,i}, delta_{x_i}) with the tent
/// partition of unity above.
inline SimpleTransfunction identity_continuous(const Covering& covering, int n) {
  auto tents = std::make_shared<const TentPartition>(covering, n);
  const int d = covering.dimension();
  SimpleTransfunction out(d, d);
  for (std::size_t i = 0; i < tents->size(); ++i) {
    out.add_term(ScalarField("tent[" + std::to_string(n) + "," + std::to_string(i) + "]",
                             [tents, i](const Point& x) { return tents->weight(i, x); }, 1.0),
                 DiscreteMeasure::dirac(covering.center(i)));
  }
  return out;
}

/// Measurable-setting identity: I_n lambda = sum_{mu_i > 0} (lambda(C_i)/mu(C_i)) 1_{C_i} mu.
/// Cells of zero mu-mass contribute nothing.
inline SimpleTransfunction identity_measurable(const Covering& covering, int n, const DiscreteMeasure& mu) {
  if (!mu.is_positive()) throw Error(ErrorKind::InvalidInput, "measurable identity needs a positive reference measure");
  const CellPartition cells(covering, n);
  const auto parts = cells.split(mu);
  SimpleTransfunction out(mu.dimension(), mu.dimension());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const double m = parts[i].mass();
    if (m > 0.0) out.add_term(cells.indicator(i, 1.0 / m), parts[i]);
  }
  return out;
}

/// A configured approximation of identity at one level.
struct IdentityApproximation {
  IdentitySetting setting;
  Covering covering;
  int level;
  std::optional<DiscreteMeasure> reference;

  SimpleTransfunction transfunction() const {
    switch (setting) {
      case IdentitySetting::PointMass: return identity_pointmass(covering, level);
      case IdentitySetting::Continuous: return identity_continuous(covering, level);
      case IdentitySetting::Measurable:
        if (!reference) throw Error(ErrorKind::InvalidInput, "measurable identity requires a reference measure");
        return identity_measurable(covering, level, *reference);
    }
    throw Error(ErrorKind::InvalidInput, "unknown identity setting");
  }

  /// c such that |<f, lambda - I_n lambda>| <= c * Lip(f) * ||lambda|| / n for
  /// supp lambda in K_n. Point masses move at most one ball radius; the other
  /// two settings move mass across a cell or an inflated cell, up to 2/n.
  double rate_constant() const { return setting == IdentitySetting::PointMass ? 1.0 : 2.0; }
};

/// Entry (k, f) = |<f, lambda_k> - <f, lambda>|; row_max[k] is the max over f.
struct WeakGapTable {
  std::vector<std::vector<double>> gaps;
  std::vector<double> row_max;
};

inline WeakGapTable weak_gap(std::span<const DiscreteMeasure> sequence, const DiscreteMeasure& limit,
                             std::span<const ScalarField> battery) {
  if (battery.empty()) throw Error(ErrorKind::InvalidInput, "weak_gap: empty battery");
  std::vector<double> reference;
  reference.reserve(battery.size());
  for (const auto& f : battery) reference.push_back(integrate(f, limit));
  WeakGapTable table;
  for (const auto& m : sequence) {
    std::vector<double> row;
    double worst = 0.0;
    for (std::size_t j = 0; j < battery.size(); ++j) {
      row.push_back(std::abs(integrate(battery[j], m) - reference[j]));
      worst = std::max(worst, row.back());
    }
    table.gaps.push_back(std::move(row));
    table.row_max.push_back(worst);
  }
  return table;
}

}  // namespace tfn
