#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tfn/field.hpp"
#include "tfn/measure.hpp"

namespace tfn {

/// lambda -> sum_i <f_i, lambda> rho_i
class SimpleTransfunction {
 public:
  struct Term {
    ScalarField field;
    DiscreteMeasure out;
  };

  SimpleTransfunction(int input_dimension, int output_dimension, std::vector<Term> terms = {})
      : in_dim_(input_dimension), out_dim_(output_dimension), terms_(std::move(terms)) {
    for (const auto& t : terms_) require_same_dimension(out_dim_, t.out.dimension(), "transfunction term");
  }

  int input_dimension() const noexcept { return in_dim_; }
  int output_dimension() const noexcept { return out_dim_; }
  std::span<const Term> terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }

  void add_term(ScalarField field, DiscreteMeasure out) {
    require_same_dimension(out_dim_, out.dimension(), "transfunction term");
    terms_.push_back({std::move(field), std::move(out)});
  }

  DiscreteMeasure apply(const DiscreteMeasure& lambda) const {
    require_same_dimension(in_dim_, lambda.dimension(), "apply");
    MeasureBuilder acc(out_dim_);
    for (const auto& t : terms_) acc.add(t.out, integrate(t.field, lambda));
    return std::move(acc).build();
  }

  DiscreteMeasure operator()(const DiscreteMeasure& lambda) const { return apply(lambda); }

  /// sum_i bound(f_i) ||rho_i||, an upper bound for the operator norm.
  double norm_bound() const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.field.bound() * t.out.total_variation();
    return s;
  }

  SimpleTransfunction scaled(double s) const {
    SimpleTransfunction out(in_dim_, out_dim_);
    for (const auto& t : terms_) out.add_term(t.field, s * t.out);
    return out;
  }

 private:
  int in_dim_;
  int out_dim_;
  std::vector<Term> terms_;
};

inline DiscreteMeasure apply(const SimpleTransfunction& phi, const DiscreteMeasure& lambda) { return phi.apply(lambda); }

/// Phi o I for simple I: terms (f_i, Phi rho_i). Phi may be any transfunction.
template <class Transfunction>
SimpleTransfunction compose(const Transfunction& phi, const SimpleTransfunction& inner, int output_dimension) {
  SimpleTransfunction out(inner.input_dimension(), output_dimension);
  for (const auto& t : inner.terms()) out.add_term(t.field, phi(t.out));
  return out;
}

inline SimpleTransfunction compose(const SimpleTransfunction& phi, const SimpleTransfunction& inner) {
  return compose(phi, inner, phi.output_dimension());
}

}  // namespace tfn
