#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tfn/point.hpp"

namespace tfn {

/// Bounded test function on the workspace.
///
/// A field is an immutable evaluation rule together with a bound
/// `bound() >= sup |f|` and, when known, a Lipschitz constant. Copies share
/// the rule. Elements of C_b(X) and of L^inf(X, mu) are both modelled by this
/// type; measurable fields are simply evaluated pointwise on support points.
class ScalarField {
 public:
  using Rule = std::function<double(const Point&)>;

  ScalarField(std::string name, Rule rule, double bound, std::optional<double> lipschitz = std::nullopt)
      : impl_(std::make_shared<const Impl>(Impl{std::move(name), std::move(rule), bound, lipschitz})) {
    if (!(bound >= 0.0) || !std::isfinite(bound))
      throw Error(ErrorKind::InvalidInput, "field bound must be finite and >= 0");
  }

  double operator()(const Point& x) const { return impl_->rule(x); }
  double bound() const noexcept { return impl_->bound; }
  std::optional<double> lipschitz() const noexcept { return impl_->lipschitz; }
  const std::string& name() const noexcept { return impl_->name; }

  ScalarField renamed(std::string name) const {
    return ScalarField(std::move(name), impl_->rule, impl_->bound, impl_->lipschitz);
  }

  static ScalarField constant(double value) {
    return ScalarField("const(" + std::to_string(value) + ")", [value](const Point&) { return value; },
                       std::abs(value), 0.0);
  }

  /// Indicator of the closed ball B(center, radius).
  static ScalarField ball_indicator(Point center, double radius) {
    const double r2 = radius * radius;
    return ScalarField("ball" + center.str(),
                       [center, r2](const Point& x) { return squared_distance(x, center) <= r2 ? 1.0 : 0.0; }, 1.0);
  }

  /// Indicator of a finite point set (exact coordinate match).
  static ScalarField point_indicator(std::vector<Point> points) {
    std::sort(points.begin(), points.end());
    auto pts = std::make_shared<const std::vector<Point>>(std::move(points));
    return ScalarField("indicator{" + std::to_string(pts->size()) + "}",
                       [pts](const Point& x) { return std::binary_search(pts->begin(), pts->end(), x) ? 1.0 : 0.0; },
                       1.0);
  }

  /// Finite-support step field: value v_k at p_k, zero elsewhere.
  static ScalarField lookup(const std::vector<Point>& points, const std::vector<double>& values, std::string name = "lookup") {
    if (points.size() != values.size()) throw Error(ErrorKind::InvalidInput, "lookup: size mismatch");
    auto table = std::make_shared<std::map<Point, double>>();
    double bound = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k) {
      (*table)[points[k]] = values[k];
      bound = std::max(bound, std::abs(values[k]));
    }
    return ScalarField(std::move(name),
                       [table = std::shared_ptr<const std::map<Point, double>>(table)](const Point& x) {
                         auto it = table->find(x);
                         return it == table->end() ? 0.0 : it->second;
                       },
                       bound);
  }

  /// Bump: 1 on B(center, inner), decays linearly to 0 at distance outer.
  static ScalarField bump(Point center, double inner, double outer) {
    if (!(inner >= 0.0) || !(outer > inner)) throw Error(ErrorKind::InvalidInput, "bump: need 0 <= inner < outer");
    const double width = outer - inner;
    return ScalarField("bump" + center.str(),
                       [center, inner, width](const Point& x) {
                         const double d = distance(x, center);
                         return std::clamp(1.0 - (d - inner) / width, 0.0, 1.0);
                       },
                       1.0, 1.0 / width);
  }

  /// x -> clamp(slope . x + offset, -clamp, clamp); Lipschitz with |slope|.
  static ScalarField clamped_affine(std::vector<double> slope, double offset, double clamp) {
    double norm = 0.0;
    for (double s : slope) norm += s * s;
    norm = std::sqrt(norm);
    return ScalarField("affine",
                       [slope = std::move(slope), offset, clamp](const Point& x) {
                         require_same_dimension(static_cast<int>(slope.size()), x.dimension(), "affine field");
                         double v = offset;
                         for (int k = 0; k < x.dimension(); ++k) v += slope[k] * x[k];
                         return std::clamp(v, -clamp, clamp);
                       },
                       clamp, norm);
  }

  /// x -> min(d(x, anchor), cap); 1-Lipschitz.
  static ScalarField capped_distance(Point anchor, double cap) {
    return ScalarField("dist" + anchor.str(),
                       [anchor, cap](const Point& x) { return std::min(distance(x, anchor), cap); }, cap, 1.0);
  }

  /// Continuous field equal to signs[k] at points[k], |value| <= 1, built from
  /// tents narrower than half the minimal point separation.
  static ScalarField sign_pattern(const std::vector<Point>& points, const std::vector<double>& signs) {
    if (points.size() != signs.size()) throw Error(ErrorKind::InvalidInput, "sign_pattern: size mismatch");
    double sep = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < points.size(); ++a)
      for (std::size_t b = a + 1; b < points.size(); ++b) sep = std::min(sep, distance(points[a], points[b]));
    const double radius = std::isfinite(sep) ? sep / 2.0 : 1.0;
    auto pts = std::make_shared<const std::vector<Point>>(points);
    auto sg = std::make_shared<const std::vector<double>>(signs);
    return ScalarField("sign_pattern",
                       [pts, sg, radius](const Point& x) {
                         double v = 0.0;
                         for (std::size_t k = 0; k < pts->size(); ++k) {
                           const double t = 1.0 - distance(x, (*pts)[k]) / radius;
                           if (t > 0.0) v += (*sg)[k] * t;
                         }
                         return v;
                       },
                       1.0, 1.0 / radius);
  }

 private:
  struct Impl {
    std::string name;
    Rule rule;
    double bound;
    std::optional<double> lipschitz;
  };
  std::shared_ptr<const Impl> impl_;
};

inline ScalarField linear_combination(double a, const ScalarField& f, double b, const ScalarField& g) {
  std::optional<double> lip;
  if (f.lipschitz() && g.lipschitz()) lip = std::abs(a) * *f.lipschitz() + std::abs(b) * *g.lipschitz();
  return ScalarField(f.name() + "+" + g.name(), [a, f, b, g](const Point& x) { return a * f(x) + b * g(x); },
                     std::abs(a) * f.bound() + std::abs(b) * g.bound(), lip);
}

inline ScalarField scaled(double a, const ScalarField& f) {
  std::optional<double> lip;
  if (f.lipschitz()) lip = std::abs(a) * *f.lipschitz();
  return ScalarField(f.name(), [a, f](const Point& x) { return a * f(x); }, std::abs(a) * f.bound(), lip);
}

/// Pointwise product (used by multiplication transfunctions and their adjoints).
inline ScalarField pointwise_product(const ScalarField& f, const ScalarField& g) {
  return ScalarField(f.name() + "*" + g.name(), [f, g](const Point& x) { return f(x) * g(x); }, f.bound() * g.bound());
}

/// Function on X x Y: products f (x) g, cost functions, battery fields.
class PairField {
 public:
  using Rule = std::function<double(const Point&, const Point&)>;

  PairField(std::string name, Rule rule) : name_(std::move(name)), rule_(std::move(rule)) {}

  static PairField product(const ScalarField& f, const ScalarField& g) {
    return PairField(f.name() + "(x)" + g.name(), [f, g](const Point& x, const Point& y) { return f(x) * g(y); });
  }

  double operator()(const Point& x, const Point& y) const { return rule_(x, y); }
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
  Rule rule_;
};

/// Point map descriptor for push-forwards.
class PointMap {
 public:
  using Rule = std::function<Point(const Point&)>;

  PointMap(std::string name, Rule rule) : name_(std::move(name)), rule_(std::move(rule)) {}

  static PointMap identity() {
    return PointMap("identity", [](const Point& x) { return x; });
  }
  static PointMap constant(Point q) {
    return PointMap("constant" + q.str(), [q](const Point&) { return q; });
  }
  static PointMap translation(std::vector<double> shift) {
    return PointMap("translate", [shift = std::move(shift)](const Point& x) {
      require_same_dimension(static_cast<int>(shift.size()), x.dimension(), "translation");
      std::array<double, kMaxDimension> c{};
      for (int k = 0; k < x.dimension(); ++k) c[k] = x[k] + shift[k];
      return Point(std::span<const double>(c.data(), static_cast<std::size_t>(x.dimension())));
    });
  }

  Point operator()(const Point& x) const { return rule_(x); }
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
  Rule rule_;
};

}  // namespace tfn
