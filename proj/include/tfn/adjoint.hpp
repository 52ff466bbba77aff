#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tfn/covering.hpp"
#include "tfn/field.hpp"
#include "tfn/measure.hpp"
#include "tfn/simple.hpp"
#include "tfn/transfunction.hpp"

namespace tfn {

enum class AdjointSetting { Continuous, Measurable };

inline const char* to_string(AdjointSetting s) { return s == AdjointSetting::Continuous ? "continuous" : "measurable"; }

/// Operator on test functions paired with a transfunction through
/// <g, Phi lambda> = <S(g), lambda>.
class AdjointOperator {
 public:
  using Rule = std::function<ScalarField(const ScalarField&)>;

  AdjointOperator(Rule rule, AdjointSetting setting, std::string name)
      : rule_(std::move(rule)), setting_(setting), name_(std::move(name)) {}

  ScalarField operator()(const ScalarField& g) const { return rule_(g); }
  AdjointSetting setting() const noexcept { return setting_; }
  const std::string& name() const noexcept { return name_; }

  /// Copy whose rule is wrapped by `alter(g, S(g))`; used to inject faults.
  AdjointOperator altered(std::function<ScalarField(const ScalarField&, const ScalarField&)> alter) const {
    auto inner = rule_;
    return AdjointOperator([inner, alter](const ScalarField& g) { return alter(g, inner(g)); }, setting_, name_ + "'");
  }

 private:
  Rule rule_;
  AdjointSetting setting_;
  std::string name_;
};

/// Phi* g = sum_i <g, rho_i> f_i.
inline AdjointOperator adjoint_of_simple(const SimpleTransfunction& phi) {
  auto terms = std::make_shared<const std::vector<SimpleTransfunction::Term>>(phi.terms().begin(), phi.terms().end());
  return AdjointOperator(
      [terms](const ScalarField& g) {
        std::vector<double> coef;
        double bound = 0.0;
        for (const auto& t : *terms) {
          coef.push_back(integrate(g, t.out));
          bound += std::abs(coef.back()) * t.field.bound();
        }
        return ScalarField("adj(" + g.name() + ")",
                           [terms, coef = std::move(coef)](const Point& x) {
                             double v = 0.0;
                             for (std::size_t i = 0; i < coef.size(); ++i)
                               if (coef[i] != 0.0) v += coef[i] * (*terms)[i].field(x);
                             return v;
                           },
                           bound);
      },
      AdjointSetting::Continuous, "simple adjoint");
}

/// S(g)(x) = <g, Phi(delta_x)>.
template <class Transfunction>
double adjoint_continuous(const Transfunction& phi, const Point& x, const ScalarField& g) {
  return integrate(g, phi(DiscreteMeasure::dirac(x)));
}

/// The operator x -> <g, Phi(delta_x)> for any transfunction callable.
/// `norm` must bound ||Phi delta_x|| so that the field bound is honest.
template <class Transfunction>
AdjointOperator continuous_adjoint(Transfunction phi, double norm, std::string name = "continuous adjoint") {
  auto shared = std::make_shared<const Transfunction>(std::move(phi));
  return AdjointOperator(
      [shared, norm](const ScalarField& g) {
        return ScalarField("S(" + g.name() + ")", [shared, g](const Point& x) { return adjoint_continuous(*shared, x, g); },
                           norm * g.bound());
      },
      AdjointSetting::Continuous, std::move(name));
}

/// Adjoint of the push-forward by `map`: g -> g o map.
inline AdjointOperator pullback(const PointMap& map) {
  return AdjointOperator(
      [map](const ScalarField& g) {
        return ScalarField(g.name() + "o" + map.name(), [map, g](const Point& x) { return g(map(x)); }, g.bound());
      },
      AdjointSetting::Continuous, "pullback");
}

/// Adjoint of lambda -> f lambda: g -> g f.
inline AdjointOperator multiplier(const ScalarField& f) {
  return AdjointOperator([f](const ScalarField& g) { return pointwise_product(g, f); }, AdjointSetting::Continuous,
                         "multiplier");
}

/// S g = J_mu^{-1} Phi^dagger J_nu g, on densities over supp nu and supp mu.
template <class Transfunction>
Density adjoint_measurable(const Transfunction& phi, const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Density& g,
                           const CellPartition& source, const CellPartition& target) {
  if (g.size() != nu.size()) throw Error(ErrorKind::InvalidInput, "density length does not match supp nu");
  const auto dag = dagger(phi, mu, nu, source, target);
  return to_density(dag(to_measure(g, nu)), mu);
}

/// Measurable-setting adjoint as an operator on fields: g is sampled on
/// supp nu and the result is a lookup field on supp mu.
template <class Transfunction>
AdjointOperator measurable_adjoint(const Transfunction& phi, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                   const CellPartition& source, const CellPartition& target) {
  auto dag = std::make_shared<const SimpleTransfunction>(dagger(phi, mu, nu, source, target));
  auto points = std::make_shared<const std::vector<Point>>(mu.support());
  return AdjointOperator(
      [dag, mu, nu, points](const ScalarField& g) {
        const Density s = to_density((*dag)(to_measure(sample(g, nu), nu)), mu);
        return ScalarField::lookup(*points, s, "S(" + g.name() + ")");
      },
      AdjointSetting::Measurable, "measurable adjoint");
}

struct PairingReport {
  /// residuals[a][b] = |<g_a, Phi lambda_b> - <S g_a, lambda_b>|
  std::vector<std::vector<double>> residuals;
  std::vector<std::string> field_names;
  double max_residual = 0.0;
  /// sup ||Phi lambda|| / ||lambda|| over the measure battery
  double norm_transfunction = 0.0;
  /// sup ||S g|| / ||g|| over the field battery, with ||S g|| taken over the
  /// support points of the measure battery
  double norm_adjoint = 0.0;
  std::size_t closure_measures = 0;
  std::size_t closure_fields = 0;

  double norm_gap() const { return std::abs(norm_transfunction - norm_adjoint); }
  double norm_ratio() const { return norm_adjoint > 0.0 ? norm_transfunction / norm_adjoint : 0.0; }
};

/// Pairing residuals and two-sided norm certificates.
///
/// With `dual_closure` the batteries are extended by delta_x at every support
/// point x of the measure battery and by sign fields of every Phi lambda, so
/// that each certificate is attained by the other's battery.
template <class Transfunction>
PairingReport pairing_residual(const Transfunction& phi, const AdjointOperator& adjoint, std::span<const ScalarField> fields,
                               std::span<const DiscreteMeasure> measures, bool dual_closure = true) {
  if (fields.empty() || measures.empty()) throw Error(ErrorKind::InvalidInput, "pairing_residual: empty battery");
  std::vector<DiscreteMeasure> lambdas(measures.begin(), measures.end());
  std::vector<ScalarField> gs(fields.begin(), fields.end());

  std::vector<Point> points;
  for (const auto& m : lambdas)
    for (const auto& a : m.atoms()) points.push_back(a.point);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  PairingReport report;
  if (dual_closure) {
    for (const auto& x : points) lambdas.push_back(DiscreteMeasure::dirac(x));
    report.closure_measures = points.size();
  }
  std::vector<DiscreteMeasure> images;
  images.reserve(lambdas.size());
  for (const auto& m : lambdas) images.push_back(phi(m));
  if (dual_closure) {
    for (const auto& img : images) {
      if (img.empty()) continue;
      std::vector<double> signs;
      for (const auto& a : img.atoms()) signs.push_back(a.weight > 0.0 ? 1.0 : -1.0);
      gs.push_back(ScalarField::sign_pattern(img.support(), signs));
      ++report.closure_fields;
    }
  }

  for (std::size_t b = 0; b < lambdas.size(); ++b) {
    const double norm = lambdas[b].total_variation();
    if (norm > 0.0) report.norm_transfunction = std::max(report.norm_transfunction, images[b].total_variation() / norm);
  }
  for (const auto& g : gs) {
    const ScalarField s = adjoint(g);
    std::vector<double> row;
    row.reserve(lambdas.size());
    for (std::size_t b = 0; b < lambdas.size(); ++b) {
      const double r = std::abs(integrate(g, images[b]) - integrate(s, lambdas[b]));
      row.push_back(r);
      report.max_residual = std::max(report.max_residual, r);
    }
    if (g.bound() > 0.0) {
      double sup = 0.0;
      for (const auto& x : points) sup = std::max(sup, std::abs(s(x)));
      report.norm_adjoint = std::max(report.norm_adjoint, sup / g.bound());
    }
    report.residuals.push_back(std::move(row));
    report.field_names.push_back(g.name());
  }
  return report;
}

}  // namespace tfn
