#include <cmath>
#include <numbers>
#include <set>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "fractalvid/ifs.hpp"

using namespace fvid;

namespace {

// Independent oracle: singular values straight from an SVD of the 2x2 block.
Eigen::Vector2d svd_of(const AffineMap& m) {
  Eigen::Matrix2d a;
  a << m.a, m.b, m.d, m.e;
  return Eigen::JacobiSVD<Eigen::Matrix2d>(a).singularValues();
}

// Independent oracle: max ||A x|| over a dense sweep of unit vectors.
double unit_circle_sweep(const AffineMap& m, int samples) {
  double best = 0;
  for (int i = 0; i < samples; ++i) {
    const double t = std::numbers::pi * i / samples;
    const double x = std::cos(t), y = std::sin(t);
    best = std::max(best, std::hypot(m.a * x + m.b * y, m.d * x + m.e * y));
  }
  return best;
}

}  // namespace

TEST(Compose, IdentityRotationsGiveScaledIdentity) {
  DecomposedMap d{0, 0, 0.5, 0.5, 1, 1, 0, 0};
  const auto m = compose(d);
  EXPECT_DOUBLE_EQ(m.a, 0.5);
  EXPECT_DOUBLE_EQ(m.b, 0.0);
  EXPECT_DOUBLE_EQ(m.d, 0.0);
  EXPECT_DOUBLE_EQ(m.e, 0.5);
  EXPECT_EQ(m.c, 0.0);
  EXPECT_EQ(m.f, 0.0);
}

TEST(Compose, QuarterTurnKeepsSpectralNorm) {
  DecomposedMap d{std::numbers::pi / 2, 0, 1e-9, 0, 1, 1, 0.25, -0.5};
  const auto m = compose(d);
  EXPECT_NEAR(contraction_factor(m), 1e-9, 1e-20);
  EXPECT_NEAR(m.d, 1e-9, 1e-20);
  EXPECT_NEAR(m.a, 0.0, 1e-20);
  EXPECT_EQ(m.c, 0.25);
  EXPECT_EQ(m.f, -0.5);
}

TEST(Compose, SingularValuesMatchIndependentSvd) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto sig = sample_raw_sigmas(1, rng)[0];
    const auto d = sample_decomposed_map(sig, rng);
    const auto sv = svd_of(compose(d));
    EXPECT_NEAR(sv(0), d.sigma1, 1e-12);
    EXPECT_NEAR(sv(1), d.sigma2, 1e-12);
    EXPECT_NEAR(contraction_factor(compose(d)), d.sigma1, 1e-12);
  }
}

TEST(Compose, RejectsInvalidSingularValues) {
  EXPECT_THROW(compose(DecomposedMap{0, 0, 1.0, 0.5, 1, 1, 0, 0}), ConstraintViolation);
  EXPECT_THROW(compose(DecomposedMap{0, 0, 0.3, 0.5, 1, 1, 0, 0}), ConstraintViolation);
  EXPECT_THROW(compose(DecomposedMap{0, 0, 0.5, 0.3, 2, 1, 0, 0}), ConstraintViolation);
}

TEST(Compose, Deterministic) {
  DecomposedMap d{1.1, 4.2, 0.7, 0.3, -1, 1, 0.1, 0.2};
  EXPECT_EQ(compose(d), compose(d));
}

TEST(ContractionFactor, ClosedFormCases) {
  EXPECT_DOUBLE_EQ(contraction_factor({0.5, 0, 0, 0, 0.5, 0}), 0.5);
  EXPECT_DOUBLE_EQ(contraction_factor({0.9, 0, 0, 0, 0.2, 0}), 0.9);
}

TEST(ContractionFactor, MatchesUnitCircleSweep) {
  const AffineMap m{0.6, 0.3, 0, 0.1, 0.5, 0};
  EXPECT_NEAR(contraction_factor(m), unit_circle_sweep(m, 10000), 1e-4);

  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const AffineMap r{rng.uniform(-1, 1), rng.uniform(-1, 1), 0, rng.uniform(-1, 1), rng.uniform(-1, 1), 0};
    EXPECT_NEAR(contraction_factor(r), unit_circle_sweep(r, 10000), 1e-4);
  }
}

TEST(MapProbabilities, EqualDeterminants) {
  const std::vector<AffineMap> maps{{0.5, 0, 0, 0, 0.5, 0}, {0.5, 0, 1, 0, 0.5, 1}};
  const auto p = map_probabilities(maps);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(MapProbabilities, ProportionalToAbsDeterminant) {
  const std::vector<AffineMap> maps{compose({0.3, 1.2, 0.8, 0.5, -1, 1, 0, 0}), compose({2.0, 0.1, 0.4, 0.2, 1, 1, 0, 0})};
  const auto p = map_probabilities(maps);
  EXPECT_NEAR(p[0], 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(p[1], 1.0 / 6.0, 1e-12);
}

TEST(MapProbabilities, SingularMapsFallBackToUniform) {
  const std::vector<AffineMap> maps{{0.5, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0}, {0.1, 0.2, 0, 0.05, 0.1, 0}};
  const auto p = map_probabilities(maps);
  for (double v : p) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(MapProbabilities, RejectsSingleMap) {
  const std::vector<AffineMap> maps{{0.5, 0, 0, 0, 0.5, 0}};
  EXPECT_THROW(map_probabilities(maps), std::invalid_argument);
}

TEST(IfsSystem, SortsDescendingWithStableTies) {
  const AffineMap small{0.2, 0, 1, 0, 0.2, 0}, big{0.6, 0, 2, 0, 0.6, 0}, tie{0.2, 0, 3, 0, 0.2, 0};
  const auto sys = IfsSystem::from_maps({small, big, tie});
  ASSERT_EQ(sys.size(), 3u);
  EXPECT_EQ(sys.maps()[0], big);
  EXPECT_EQ(sys.maps()[1], small);
  EXPECT_EQ(sys.maps()[2], tie);
  EXPECT_GE(sys.probs()[0], sys.probs()[1]);
}

TEST(IfsSystem, ValidatesInvariants) {
  const AffineMap ok{0.5, 0, 0, 0, 0.5, 0};
  EXPECT_THROW(IfsSystem({ok}, {1.0}), std::invalid_argument);
  EXPECT_THROW(IfsSystem({ok, ok}, {0.7, 0.7}), std::invalid_argument);
  EXPECT_THROW(IfsSystem({ok, ok}, {1.5, -0.5}), std::invalid_argument);
  EXPECT_THROW(IfsSystem({ok, AffineMap{1.2, 0, 0, 0, 0.1, 0}}, {0.5, 0.5}), ConstraintViolation);
}

TEST(SigmaSampling, BoundsForThreeFunctions) {
  const auto b = sigma_sum_bounds(3);
  EXPECT_DOUBLE_EQ(b.lower, 4.0);
  EXPECT_DOUBLE_EQ(b.upper, 4.5);
  const double s = 4.25 / 9.0;
  const std::vector<SigmaPair> eq(3, SigmaPair{s, s});
  EXPECT_NEAR(sigma_sum(eq), 4.25, 1e-12);
}

TEST(SigmaSampling, AlwaysInsideInterval) {
  Rng rng(2024);
  for (int n = 2; n <= 8; ++n) {
    const auto b = sigma_sum_bounds(n);
    for (int i = 0; i < 2000; ++i) {
      const auto s = sample_constrained_sigmas(n, rng);
      ASSERT_EQ(static_cast<int>(s.size()), n);
      const double a = sigma_sum(s);
      ASSERT_GE(a, b.lower);
      ASSERT_LE(a, b.upper);
      for (const auto& p : s) {
        ASSERT_LT(p.sigma1, 1.0);
        ASSERT_GE(p.sigma1, p.sigma2);
        ASSERT_GE(p.sigma2, 0.0);
      }
    }
  }
}

TEST(SigmaSampling, RejectsSingleFunction) {
  Rng rng(1);
  EXPECT_THROW(sample_constrained_sigmas(1, rng), std::invalid_argument);
}

TEST(SampleSystem, PropertiesHold) {
  Rng rng(77);
  for (int i = 0; i < 500; ++i) {
    const auto sys = sample_system(rng);
    ASSERT_GE(sys.size(), 3u);
    ASSERT_LE(sys.size(), 8u);
    const auto expected = map_probabilities(sys.maps());
    for (std::size_t k = 0; k < sys.size(); ++k) {
      EXPECT_LT(contraction_factor(sys.maps()[k]), 1.0);
      EXPECT_NEAR(sys.probs()[k], expected[k], 1e-12);
      if (k > 0) { EXPECT_GE(sys.probs()[k - 1], sys.probs()[k]); }
    }
    // |det| = sigma1 * sigma2, so the sigma-sum can be checked through the SVD.
    double a = 0;
    for (const auto& m : sys.maps()) {
      const auto sv = svd_of(m);
      a += sv(0) + 2 * sv(1);
    }
    const auto b = sigma_sum_bounds(static_cast<int>(sys.size()));
    EXPECT_GE(a, b.lower - 1e-9);
    EXPECT_LE(a, b.upper + 1e-9);
  }
}

TEST(SampleSystem, SameSeedSameParameters) {
  Rng a(99), b(99);
  for (int i = 0; i < 20; ++i) {
    const auto sa = sample_system(a), sb = sample_system(b);
    EXPECT_EQ(sa.maps(), sb.maps());
    EXPECT_EQ(sa.probs(), sb.probs());
  }
}

TEST(SampleUniformSystem, OnlyContractiveMaps) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto sys = sample_uniform_system(rng);
    for (const auto& m : sys.maps()) EXPECT_LT(contraction_factor(m), 1.0);
  }
}

TEST(Rng, UniformIntCoversRangeAndIsDeterministic) {
  Rng a(1), b(1);
  std::set<int> seen;
  for (int i = 0; i < 1000; ++i) {
    const int v = a.uniform_int(3, 8);
    EXPECT_EQ(v, b.uniform_int(3, 8));
    seen.insert(v);
  }
  EXPECT_EQ(seen, (std::set<int>{3, 4, 5, 6, 7, 8}));
}
