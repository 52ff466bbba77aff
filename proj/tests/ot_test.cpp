#include <gtest/gtest.h>

#include <chrono>

#include "support.hpp"
#include "tfn/ot.hpp"

namespace {

using tfn::Box;
using tfn::CellPartition;
using tfn::CostFunction;
using tfn::DiscreteMeasure;
using tfn::PairField;
using tfn::Point;
using tfn::ScalarField;

DiscreteMeasure line(std::vector<double> xs, std::vector<double> ws) {
  std::vector<Point> pts;
  for (double x : xs) pts.push_back(Point{x});
  return DiscreteMeasure(pts, ws);
}

TEST(LargestRemainder, SumsToBudget) {
  tfn::Rng rng(51);
  for (int t = 0; t < 50; ++t) {
    auto m = tfn::testing::random_masses(1 + rng.index(20), rng);
    auto a = tfn::largest_remainder(m, 997);
    long long s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      s += a[i];
      EXPECT_LT(std::abs(static_cast<double>(a[i]) - 997 * m[static_cast<Eigen::Index>(i)] / m.sum()), 1.0);
    }
    EXPECT_EQ(s, 997);
  }
}

TEST(RoundToMarginals, ExactMarginalsAndL1Bound) {
  tfn::Rng rng(52);
  for (int t = 0; t < 50; ++t) {
    auto r = tfn::testing::random_masses(4, rng), c = tfn::testing::random_masses(5, rng);
    c *= r.sum() / c.sum();
    Eigen::MatrixXd f = tfn::testing::random_coupling(r, c, rng);
    for (auto& v : f.reshaped()) v = std::max(0.0, v + rng.uniform(-0.02, 0.02));
    auto g = tfn::round_to_marginals(f, r, c);
    EXPECT_LE((g.rowwise().sum() - r).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((g.colwise().sum().transpose() - c).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_GE(g.minCoeff(), 0.0);
    const double defect = (f.rowwise().sum() - r).cwiseAbs().sum() + (f.colwise().sum().transpose() - c).cwiseAbs().sum();
    EXPECT_LE((g - f).cwiseAbs().sum(), 2 * defect + 1e-14);
  }
}

TEST(Warehouse, IdenticalMarginals) {
  auto cov = tfn::build_covering(Box{{0.0}, {1.0}}, {8});
  CellPartition cells(cov, 8);
  auto lambda = tfn::testing::uniform_line(20, 0.0, 1.0);
  auto rep = tfn::warehouse_strategy(lambda, lambda, CostFunction::power_distance(1.0, 1.0), cells, {200});
  EXPECT_EQ(rep.middle, 0.0);
  EXPECT_LE(rep.total(), 2.0 / 8 + 1e-15);
  EXPECT_TRUE(rep.end_steps_within_budget());
  ASSERT_TRUE(rep.assignment.has_value());
  EXPECT_NEAR(rep.assignment->feasible_cost, 0.0, 1e-12);
}

TEST(Warehouse, TwoPointQuantileOracle) {
  auto lambda = line({0.0, 0.5}, {0.5, 0.5});
  auto rho = line({2.0, 2.5}, {0.5, 0.5});
  const double w1 = tfn::testing::quantile_w1(lambda, rho);
  EXPECT_DOUBLE_EQ(w1, 2.0);
  auto cov = tfn::build_covering(Box{{0.0}, {3.0}}, {4, 16, 64});
  double previous = 1e9;
  for (int n : cov.levels()) {
    auto rep = tfn::warehouse_strategy(lambda, rho, CostFunction::power_distance(1.0, 1.0), CellPartition(cov, n), {0});
    EXPECT_LE(std::abs(rep.total() - w1), rep.error_budget());
    EXPECT_LE(rep.error_budget(), previous);
    previous = rep.error_budget();
  }
}

TEST(Warehouse, RouteSandwich) {
  tfn::Rng rng(53);
  auto cov = tfn::build_covering(Box{{0.0, 0.0}, {1.0, 1.0}}, {4});
  CellPartition cells(cov, 4);
  for (int t = 0; t < 5; ++t) {
    auto lambda = tfn::testing::cell_cloud(cov, 4, 2, rng);
    auto rho = tfn::testing::cell_cloud(cov, 4, 2, rng);
    rho = rho * (lambda.mass() / rho.mass());
    for (double p : {1.0, 2.0}) {
      auto rep = tfn::warehouse_strategy(lambda, rho, CostFunction::power_distance(1.5, p), cells, {300});
      const auto& b = *rep.assignment;
      EXPECT_LE(rep.middle, b.feasible_cost + 1e-12);
      EXPECT_LE(b.feasible_cost, rep.middle + b.slack + 1e-12);
      EXPECT_LE(std::abs(b.raw_cost - rep.middle), b.slack + 1e-12);
      EXPECT_TRUE(rep.end_steps_within_budget());
      long long sa = 0, sb = 0;
      for (auto v : b.a) sa += v;
      for (auto v : b.b) sb += v;
      EXPECT_EQ(sa, sb);
    }
  }
}

TEST(Warehouse, Preconditions) {
  auto cov = tfn::build_covering(Box{{0.0}, {1.0}}, {4});
  CellPartition cells(cov, 4);
  auto c = CostFunction::power_distance(1, 1);
  EXPECT_THROW(tfn::warehouse_strategy(line({0.1}, {1}), line({0.2}, {2}), c, cells), tfn::Error);
  EXPECT_THROW(tfn::warehouse_strategy(line({0.1}, {1}), line({5.0}, {1}), c, cells), tfn::Error);
  EXPECT_THROW(tfn::warehouse_strategy(line({0.1}, {-1}), line({0.2}, {-1}), c, cells), tfn::Error);
}

TEST(Warehouse, DefaultBudgetRuntime) {
  auto cov = tfn::build_covering(Box{{0.0}, {3.0}}, {32});
  auto lambda = tfn::testing::uniform_line(64, 0.0, 1.0);
  auto rho = tfn::testing::uniform_line(64, 2.0, 3.0);
  auto start = std::chrono::steady_clock::now();
  auto rep = tfn::warehouse_strategy(lambda, rho, CostFunction::power_distance(1, 1), CellPartition(cov, 32));
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(secs, 10.0);
  EXPECT_LE(rep.middle, rep.assignment->feasible_cost + 1e-12);
}

class ApproxFixture : public ::testing::Test {
 protected:
  tfn::Covering cov = tfn::build_covering(Box{{0.0}, {1.0}}, {2, 4, 8});
  DiscreteMeasure mu = tfn::testing::uniform_line(16, 0.0, 1.0);
};

TEST_F(ApproxFixture, CoarseGrainExamples) {
  CellPartition fine(cov, 8), coarse(cov, 2);
  // cell-diagonal coupling of mu with itself
  tfn::PointPlan diag{mu.support(), mu.support(), Eigen::MatrixXd::Zero(16, 16)};
  for (int k = 0; k < 16; ++k) diag.mass(k, k) = mu.atoms()[static_cast<std::size_t>(k)].weight;
  auto k8 = tfn::coarse_grain_plan(diag, mu, mu, fine, fine);
  Eigen::VectorXd m = fine.masses(mu);
  EXPECT_LE((k8.matrix() - Eigen::MatrixXd(m.asDiagonal())).cwiseAbs().maxCoeff(), 1e-15);
  auto k2 = tfn::coarse_grain_plan(diag, mu, mu, coarse, coarse);
  ASSERT_EQ(k2.rows(), 1);
  EXPECT_NEAR(k2.matrix()(0, 0), 1.0, 1e-15);

  tfn::PointPlan bad = diag;
  bad.mass(0, 0) *= 2;
  EXPECT_THROW(tfn::coarse_grain_plan(bad, mu, mu, fine, fine), tfn::Error);
}

TEST_F(ApproxFixture, CoarseGrainRandomAggregation) {
  tfn::Rng rng(54);
  CellPartition cells(cov, 4);
  Eigen::VectorXd w(16);
  for (int k = 0; k < 16; ++k) w[k] = mu.atoms()[static_cast<std::size_t>(k)].weight;
  tfn::PointPlan fine{mu.support(), mu.support(), tfn::testing::random_coupling(w, w, rng)};
  auto k = tfn::coarse_grain_plan(fine, mu, mu, cells, cells);
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cells.size()));
  for (int a = 0; a < 16; ++a) rows[static_cast<Eigen::Index>(*tfn::testing::scan_cell(cov, 4, mu.atoms()[static_cast<std::size_t>(a)].point))] += w[a];
  EXPECT_LE((k.matrix().rowwise().sum() - rows).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE(k.marginal_residual(), 1e-15);
}

TEST_F(ApproxFixture, CellAdaptedIsFixedPoint) {
  tfn::Rng rng(55);
  CellPartition cells(cov, 4);
  Eigen::VectorXd m = cells.masses(mu);
  tfn::DiscretePlan plan(tfn::testing::random_coupling(m, m, rng), m, m, 4, 4);
  auto phi = tfn::plan_to_transfunction(plan, mu, mu, cells, cells);
  std::vector<PairField> battery{PairField::product(ScalarField::constant(1), ScalarField::constant(1))};
  auto approx = tfn::simple_markov_approx(phi, mu, cells, cells, battery);
  EXPECT_LE((approx.kappa_n.matrix() - plan.matrix()).cwiseAbs().maxCoeff(), 1e-15);
  for (const auto& part : cells.split(mu)) EXPECT_LE(tfn::distance_tv(approx.phi_n(part), phi(part)), 1e-14);
  EXPECT_LE(approx.projection_residual, 1e-15);
}

TEST_F(ApproxFixture, IdentityGivesIdentityMatrix) {
  CellPartition cells(cov, 8);
  auto id = tfn::identity_measurable(cov, 8, mu);
  std::vector<PairField> none;
  auto approx = tfn::simple_markov_approx(id, mu, cells, cells, none);
  const auto& t = approx.m_n.entries();
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    if (approx.kappa_n.mu()[i] > 0) {
      EXPECT_NEAR(t(i, i), 1.0, 1e-15);
    }
  EXPECT_LE((approx.m_n.anchor() - t.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST_F(ApproxFixture, OscillationCertificate) {
  tfn::Rng rng(56);
  Eigen::VectorXd w(16);
  for (int k = 0; k < 16; ++k) w[k] = mu.atoms()[static_cast<std::size_t>(k)].weight;
  // Markov transfunction given atom by atom: row k of a random coupling.
  Eigen::MatrixXd k = tfn::testing::random_coupling(w, w, rng);
  auto pts = mu.support();
  tfn::SimpleTransfunction phi(1, 1);
  for (int a = 0; a < 16; ++a) {
    tfn::MeasureBuilder out(1);
    for (int b = 0; b < 16; ++b) out.add(pts[static_cast<std::size_t>(b)], k(a, b) / w[a]);
    phi.add_term(ScalarField::point_indicator({pts[static_cast<std::size_t>(a)]}), std::move(out).build());
  }
  std::vector<PairField> battery;
  for (int t = 0; t < 6; ++t)
    battery.push_back(PairField::product(ScalarField::capped_distance(Point{rng.uniform()}, 1.0),
                                         ScalarField::clamped_affine({1.0}, rng.uniform(-1, 0), 1.0)));
  battery.emplace_back("|x-y|", [](const Point& x, const Point& y) { return tfn::distance(x, y); });
  for (int n : cov.levels()) {
    CellPartition cells(cov, n);
    auto approx = tfn::simple_markov_approx(phi, mu, cells, cells, battery);
    EXPECT_LE(approx.marginal_residual, 1e-12);
    EXPECT_LE((approx.kappa.mass - k).cwiseAbs().maxCoeff(), 1e-15);
    for (const auto& o : approx.oscillations) EXPECT_TRUE(o.within()) << o.field << " n=" << n;
  }
}

TEST_F(ApproxFixture, NonMarkovRejected) {
  CellPartition cells(cov, 4);
  auto doubled = tfn::identity_measurable(cov, 4, mu).scaled(2.0);
  std::vector<PairField> none;
  EXPECT_THROW(tfn::simple_markov_approx(doubled, mu, cells, cells, none), tfn::MarkovCheckError);
}

TEST(Restriction, Examples) {
  tfn::Rng rng(57);
  Eigen::MatrixXd c(4, 4);
  for (auto& v : c.reshaped()) v = rng.uniform(0, 5);
  auto a = tfn::testing::random_masses(4, rng), b = tfn::testing::random_masses(4, rng);
  b *= a.sum() / b.sum();
  auto opt = tfn::discrete_ot_exact(a, b, c);
  tfn::DiscretePlan plan(opt.plan, a, b);
  auto same = tfn::restriction_optimality_check(plan, Eigen::VectorXd::Ones(4), c);
  EXPECT_TRUE(same.passed());
  auto one = tfn::restriction_optimality_check(plan, Eigen::Vector4d(0, 1, 0, 0), c);
  EXPECT_TRUE(one.passed());
  EXPECT_EQ(one.restricted.matrix().row(0).sum(), 0.0);

  // a suboptimal input is reported and skipped
  tfn::DiscretePlan product(a * b.transpose() / a.sum(), a, b);
  auto skip = tfn::restriction_optimality_check(product, Eigen::VectorXd::Ones(4), c);
  if (std::abs(skip.input_cost - skip.input_optimum) > 1e-9) {
    EXPECT_FALSE(skip.input_optimal);
    EXPECT_FALSE(skip.passed());
  }
  EXPECT_THROW(tfn::restriction_optimality_check(plan, Eigen::Vector4d(0, 2, 0, 0), c), tfn::Error);
}

}  // namespace
