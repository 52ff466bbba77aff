#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tfn/field.hpp"
#include "tfn/point.hpp"

namespace tfn {

/// Finite signed measure with finitely many atoms.
///
/// Construction sorts the atoms, coalesces duplicate points by summing their
/// weights and prunes weights below 1e-15 * total variation. Signed measures
/// are stored un-decomposed; see `jordan`.
class DiscreteMeasure {
 public:
  struct Atom {
    Point point;
    double weight = 0.0;
  };

  static constexpr double kPruneRatio = 1e-15;

  explicit DiscreteMeasure(int dimension = 1) : dim_(dimension) {
    if (dim_ < 1 || dim_ > kMaxDimension) throw Error(ErrorKind::InvalidInput, "measure dimension must be 1..3");
  }

  DiscreteMeasure(int dimension, std::vector<Atom> atoms) : DiscreteMeasure(dimension) {
    for (const auto& a : atoms) {
      require_same_dimension(dim_, a.point.dimension(), "measure atom");
      if (!std::isfinite(a.weight)) throw Error(ErrorKind::InvalidInput, "non-finite weight at " + a.point.str());
    }
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.point < b.point; });
    std::vector<Atom> merged;
    merged.reserve(atoms.size());
    for (auto& a : atoms) {
      if (!merged.empty() && merged.back().point == a.point)
        merged.back().weight += a.weight;
      else
        merged.push_back(std::move(a));
    }
    double tv = 0.0;
    for (const auto& a : merged) tv += std::abs(a.weight);
    const double cutoff = kPruneRatio * tv;
    std::erase_if(merged, [cutoff](const Atom& a) { return a.weight == 0.0 || std::abs(a.weight) < cutoff; });
    atoms_ = std::move(merged);
  }

  DiscreteMeasure(const std::vector<Point>& points, const std::vector<double>& weights)
      : DiscreteMeasure(points.empty() ? 1 : points.front().dimension(), zip(points, weights)) {}

  static DiscreteMeasure dirac(const Point& x, double weight = 1.0) {
    return DiscreteMeasure(x.dimension(), {{x, weight}});
  }

  int dimension() const noexcept { return dim_; }
  std::span<const Atom> atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }

  std::vector<Point> support() const {
    std::vector<Point> pts;
    pts.reserve(atoms_.size());
    for (const auto& a : atoms_) pts.push_back(a.point);
    return pts;
  }

  /// lambda(X)
  double mass() const noexcept {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight;
    return s;
  }

  /// ||lambda|| = sum |w_k|
  double total_variation() const noexcept {
    double s = 0.0;
    for (const auto& a : atoms_) s += std::abs(a.weight);
    return s;
  }

  bool is_positive() const noexcept {
    return std::all_of(atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.weight >= 0.0; });
  }

  double weight_at(const Point& x) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x, [](const Atom& a, const Point& p) { return a.point < p; });
    return (it != atoms_.end() && it->point == x) ? it->weight : 0.0;
  }

  bool contains(const Point& x) const { return weight_at(x) != 0.0; }

  template <class Pred>
  DiscreteMeasure restricted(Pred&& keep) const {
    std::vector<Atom> out;
    for (const auto& a : atoms_)
      if (keep(a.point)) out.push_back(a);
    return DiscreteMeasure(dim_, std::move(out));
  }

  friend DiscreteMeasure operator+(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    require_same_dimension(a.dim_, b.dim_, "measure sum");
    std::vector<Atom> all(a.atoms_.begin(), a.atoms_.end());
    all.insert(all.end(), b.atoms_.begin(), b.atoms_.end());
    return DiscreteMeasure(a.dim_, std::move(all));
  }

  friend DiscreteMeasure operator*(double s, const DiscreteMeasure& m) {
    std::vector<Atom> out(m.atoms_.begin(), m.atoms_.end());
    for (auto& a : out) a.weight *= s;
    return DiscreteMeasure(m.dim_, std::move(out));
  }

  friend DiscreteMeasure operator-(const DiscreteMeasure& a, const DiscreteMeasure& b) { return a + (-1.0) * b; }
  friend DiscreteMeasure operator*(const DiscreteMeasure& m, double s) { return s * m; }

  /// Exact structural equality (same atoms, same weights).
  friend bool operator==(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (a.dim_ != b.dim_ || a.atoms_.size() != b.atoms_.size()) return false;
    for (std::size_t k = 0; k < a.atoms_.size(); ++k)
      if (a.atoms_[k].point != b.atoms_[k].point || a.atoms_[k].weight != b.atoms_[k].weight) return false;
    return true;
  }

 private:
  static std::vector<Atom> zip(const std::vector<Point>& points, const std::vector<double>& weights) {
    if (points.size() != weights.size())
      throw Error(ErrorKind::InvalidInput, "points/weights length mismatch: " + std::to_string(points.size()) +
                                               " vs " + std::to_string(weights.size()));
    std::vector<Atom> atoms;
    atoms.reserve(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) atoms.push_back({points[k], weights[k]});
    return atoms;
  }

  int dim_;
  std::vector<Atom> atoms_;
};

/// Accumulates weighted atoms and builds one coalesced measure at the end.
class MeasureBuilder {
 public:
  explicit MeasureBuilder(int dimension) : dim_(dimension) {}

  void add(const Point& x, double w) { atoms_.push_back({x, w}); }
  void add(const DiscreteMeasure& m, double scale = 1.0) {
    require_same_dimension(dim_, m.dimension(), "measure accumulate");
    if (scale == 0.0) return;
    for (const auto& a : m.atoms()) atoms_.push_back({a.point, scale * a.weight});
  }
  DiscreteMeasure build() && { return DiscreteMeasure(dim_, std::move(atoms_)); }

 private:
  int dim_;
  std::vector<DiscreteMeasure::Atom> atoms_;
};

/// <f, lambda> = sum_k f(p_k) w_k
inline double integrate(const ScalarField& f, const DiscreteMeasure& lambda) {
  double s = 0.0;
  for (const auto& a : lambda.atoms()) {
    require_same_dimension(a.point.dimension(), lambda.dimension(), "integrate");
    s += f(a.point) * a.weight;
  }
  return s;
}

/// Total variation of a difference, without materialising pruned atoms.
inline double distance_tv(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  require_same_dimension(a.dimension(), b.dimension(), "distance_tv");
  double s = 0.0;
  auto ia = a.atoms().begin(), ib = b.atoms().begin();
  while (ia != a.atoms().end() || ib != b.atoms().end()) {
    if (ib == b.atoms().end() || (ia != a.atoms().end() && ia->point < ib->point)) {
      s += std::abs(ia->weight);
      ++ia;
    } else if (ia == a.atoms().end() || ib->point < ia->point) {
      s += std::abs(ib->weight);
      ++ib;
    } else {
      s += std::abs(ia->weight - ib->weight);
      ++ia;
      ++ib;
    }
  }
  return s;
}

struct JordanParts {
  DiscreteMeasure positive;
  DiscreteMeasure negative;
};

/// lambda = positive - negative with disjoint supports.
inline JordanParts jordan(const DiscreteMeasure& lambda) {
  std::vector<DiscreteMeasure::Atom> pos, neg;
  for (const auto& a : lambda.atoms()) {
    if (a.weight > 0.0)
      pos.push_back(a);
    else
      neg.push_back({a.point, -a.weight});
  }
  return {DiscreteMeasure(lambda.dimension(), std::move(pos)), DiscreteMeasure(lambda.dimension(), std::move(neg))};
}

/// Density over the support of a reference measure, one value per atom in
/// the reference's (sorted) atom order.
using Density = std::vector<double>;

/// J_mu: density -> f mu
inline DiscreteMeasure to_measure(const Density& f, const DiscreteMeasure& mu) {
  if (f.size() != mu.size())
    throw Error(ErrorKind::InvalidInput,
                "density has " + std::to_string(f.size()) + " values, reference has " + std::to_string(mu.size()) + " atoms");
  std::vector<DiscreteMeasure::Atom> out;
  out.reserve(mu.size());
  for (std::size_t k = 0; k < f.size(); ++k) out.push_back({mu.atoms()[k].point, f[k] * mu.atoms()[k].weight});
  return DiscreteMeasure(mu.dimension(), std::move(out));
}

/// J_mu^{-1}: lambda -> d lambda / d mu on supp mu.
inline Density to_density(const DiscreteMeasure& lambda, const DiscreteMeasure& mu) {
  require_same_dimension(lambda.dimension(), mu.dimension(), "to_density");
  Density f(mu.size(), 0.0);
  auto it = mu.atoms().begin();
  for (const auto& a : lambda.atoms()) {
    it = std::lower_bound(it, mu.atoms().end(), a.point,
                          [](const DiscreteMeasure::Atom& m, const Point& p) { return m.point < p; });
    if (it == mu.atoms().end() || it->point != a.point || it->weight == 0.0)
      throw Error(ErrorKind::AbsoluteContinuity, "point " + a.point.str() + " carries mass but is not in supp(mu)");
    f[static_cast<std::size_t>(it - mu.atoms().begin())] = a.weight / it->weight;
  }
  return f;
}

/// Sample a field on the support of a reference measure.
inline Density sample(const ScalarField& f, const DiscreteMeasure& mu) {
  Density out;
  out.reserve(mu.size());
  for (const auto& a : mu.atoms()) out.push_back(f(a.point));
  return out;
}

/// f_# lambda
inline DiscreteMeasure pushforward(const PointMap& map, const DiscreteMeasure& lambda) {
  std::vector<DiscreteMeasure::Atom> out;
  out.reserve(lambda.size());
  int dim = lambda.dimension();
  for (const auto& a : lambda.atoms()) {
    out.push_back({map(a.point), a.weight});
    dim = out.back().point.dimension();
  }
  return DiscreteMeasure(dim, std::move(out));
}

/// f lambda
inline DiscreteMeasure density_multiply(const ScalarField& f, const DiscreteMeasure& lambda) {
  std::vector<DiscreteMeasure::Atom> out;
  out.reserve(lambda.size());
  for (const auto& a : lambda.atoms()) out.push_back({a.point, f(a.point) * a.weight});
  return DiscreteMeasure(lambda.dimension(), std::move(out));
}

}  // namespace tfn
