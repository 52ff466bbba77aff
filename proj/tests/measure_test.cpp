#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "tfn/measure.hpp"
#include "tfn/random.hpp"

namespace {

using tfn::DiscreteMeasure;
using tfn::Point;
using tfn::ScalarField;

DiscreteMeasure line(std::vector<double> xs, std::vector<double> ws) {
  std::vector<Point> pts;
  for (double x : xs) pts.push_back(Point{x});
  return DiscreteMeasure(pts, ws);
}

ScalarField coordinate() { return ScalarField::clamped_affine({1.0}, 0.0, 1e6); }

TEST(Measure, CoalescesDuplicatesAndDropsZeros) {
  auto m = line({1.0, 0.0, 1.0, 2.0}, {0.25, 0.5, 0.25, 0.0});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.atoms()[0].point, Point{0.0});
  EXPECT_DOUBLE_EQ(m.weight_at(Point{1.0}), 0.5);
  EXPECT_FALSE(m.contains(Point{2.0}));
}

TEST(Measure, PrunesNegligibleWeights) {
  auto m = line({0.0, 1.0}, {1.0, 1e-17});
  EXPECT_EQ(m.size(), 1u);
}

TEST(Measure, RejectsNonFiniteInput) {
  EXPECT_THROW(line({0.0}, {std::nan("")}), tfn::Error);
  EXPECT_THROW(Point({std::numeric_limits<double>::infinity()}), tfn::Error);
  EXPECT_THROW(line({0.0, 1.0}, {1.0}), tfn::Error);
}

TEST(Integrate, ConstantGivesTotalMass) {
  EXPECT_DOUBLE_EQ(tfn::integrate(ScalarField::constant(1.0), line({0, 1}, {0.5, 0.5})), 1.0);
}

TEST(Integrate, IndicatorMissingSupportIsZero) {
  auto f = ScalarField::ball_indicator(Point{5.0}, 0.5);
  EXPECT_EQ(tfn::integrate(f, line({0, 1}, {0.5, 0.5})), 0.0);
}

TEST(Integrate, LinearField) {
  EXPECT_DOUBLE_EQ(tfn::integrate(coordinate(), line({0, 2}, {1.0, 0.5})), 1.0);
}

TEST(Integrate, DimensionMismatchThrows) {
  auto m = DiscreteMeasure::dirac(Point{0.0, 0.0});
  try {
    tfn::integrate(coordinate(), m);
    FAIL();
  } catch (const tfn::Error& e) {
    EXPECT_EQ(e.kind(), tfn::ErrorKind::DimensionMismatch);
  }
}

TEST(Jordan, SplitsBySign) {
  auto parts = tfn::jordan(line({0, 1}, {1.0, -2.0}));
  EXPECT_EQ(parts.positive, line({0}, {1.0}));
  EXPECT_EQ(parts.negative, line({1}, {2.0}));
}

TEST(Jordan, PositiveAndZero) {
  auto m = line({0, 1}, {1.0, 2.0});
  auto parts = tfn::jordan(m);
  EXPECT_EQ(parts.positive, m);
  EXPECT_TRUE(parts.negative.empty());
  auto z = tfn::jordan(DiscreteMeasure(1));
  EXPECT_TRUE(z.positive.empty());
  EXPECT_TRUE(z.negative.empty());
}

TEST(Density, ConstantOneReproducesReference) {
  auto mu = line({0, 1, 3}, {0.2, 0.3, 0.5});
  EXPECT_EQ(tfn::to_measure({1, 1, 1}, mu), mu);
  for (double v : tfn::to_density(mu, mu)) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Density, WeightedProductsAndIsometry) {
  auto mu = line({0, 1}, {0.5, 0.25});
  auto lambda = tfn::to_measure({2.0, -1.0}, mu);
  EXPECT_DOUBLE_EQ(lambda.weight_at(Point{0.0}), 1.0);
  EXPECT_DOUBLE_EQ(lambda.weight_at(Point{1.0}), -0.25);
  EXPECT_DOUBLE_EQ(lambda.total_variation(), 1.25);
}

TEST(Density, AbsoluteContinuityNamesPoint) {
  auto mu = line({0, 1}, {0.5, 0.5});
  try {
    tfn::to_density(line({0, 7}, {1, 1}), mu);
    FAIL();
  } catch (const tfn::Error& e) {
    EXPECT_EQ(e.kind(), tfn::ErrorKind::AbsoluteContinuity);
    EXPECT_NE(std::string(e.what()).find('7'), std::string::npos);
  }
}

TEST(Density, RoundTripOnRandomDensities) {
  tfn::Rng rng(11);
  auto mu = line({0, 0.25, 0.5, 0.75, 1}, {0.1, 0.2, 0.3, 0.2, 0.2});
  for (int t = 0; t < 100; ++t) {
    tfn::Density f(mu.size());
    for (auto& v : f) v = rng.uniform(-2, 2);
    auto back = tfn::to_density(tfn::to_measure(f, mu), mu);
    for (std::size_t k = 0; k < f.size(); ++k) EXPECT_NEAR(back[k], f[k], 1e-15);
  }
}

TEST(Pushforward, IdentityConstantTranslation) {
  auto m = line({0, 1}, {1, 1});
  EXPECT_EQ(tfn::pushforward(tfn::PointMap::identity(), m), m);
  EXPECT_EQ(tfn::pushforward(tfn::PointMap::constant(Point{4.0}), m), line({4}, {2}));
  EXPECT_EQ(tfn::pushforward(tfn::PointMap::translation({1.0}), m), line({1, 2}, {1, 1}));
}

TEST(Pushforward, PairingIdentity) {
  auto m = line({0, 0.3, 0.9}, {0.5, -0.2, 0.7});
  auto map = tfn::PointMap::translation({0.5});
  auto g = ScalarField::bump(Point{1.0}, 0.1, 0.6);
  double lhs = tfn::integrate(g, tfn::pushforward(map, m));
  double rhs = 0.0;
  for (const auto& a : m.atoms()) rhs += g(map(a.point)) * a.weight;
  EXPECT_NEAR(lhs, rhs, 1e-15);
}

TEST(DensityMultiply, Examples) {
  auto m = line({0, 1}, {1, 1});
  EXPECT_EQ(tfn::density_multiply(ScalarField::constant(1), m), m);
  EXPECT_TRUE(tfn::density_multiply(ScalarField::constant(0), m).empty());
  EXPECT_EQ(tfn::density_multiply(coordinate(), line({2}, {0.5})), line({2}, {1.0}));
}

// Bilinearity and the bound |<f, l>| <= bound(f) ||l|| on seeded data.
TEST(MeasureProperty, BilinearAndBounded) {
  tfn::Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> xs, w1, w2;
    for (int k = 0; k < 6; ++k) {
      xs.push_back(std::ldexp(static_cast<double>(rng.index(64)), -5));
      w1.push_back(rng.uniform(-1, 1));
      w2.push_back(rng.uniform(-1, 1));
    }
    auto l1 = line(xs, w1), l2 = line(xs, w2);
    auto f1 = ScalarField::bump(Point{rng.uniform(0, 2)}, 0.2, 0.7);
    auto f2 = ScalarField::capped_distance(Point{rng.uniform(0, 2)}, 1.0);
    double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
    auto combo = tfn::linear_combination(a, f1, b, f2);
    EXPECT_NEAR(tfn::integrate(combo, l1), a * tfn::integrate(f1, l1) + b * tfn::integrate(f2, l1), 1e-12);
    EXPECT_NEAR(tfn::integrate(f1, l1 * a + l2 * b), a * tfn::integrate(f1, l1) + b * tfn::integrate(f1, l2), 1e-12);
    EXPECT_LE(std::abs(tfn::integrate(combo, l1)), combo.bound() * l1.total_variation() + 1e-12);
  }
}

TEST(MeasureProperty, PositiveDensityGivesPositiveMeasure) {
  tfn::Rng rng(9);
  auto mu = line({0, 1, 2, 3}, {0.1, 0.4, 0.3, 0.2});
  for (int t = 0; t < 100; ++t) {
    tfn::Density f(4);
    for (auto& v : f) v = rng.uniform();
    EXPECT_TRUE(tfn::to_measure(f, mu).is_positive());
  }
}

}  // namespace
