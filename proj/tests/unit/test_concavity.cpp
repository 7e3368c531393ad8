#include <spolyak/concavity.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace spolyak;

namespace {

// Golden-section maximization of (A + tR) / (B + t^2) over t > 0.
double golden_max(double A, double B, double R) {
  const auto f = [&](double t) { return (A + t * R) / (B + t * t); };
  double lo = 1e-12, hi = 1e6;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 400; ++it) {
    const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    (f(m1) < f(m2) ? lo : hi) = f(m1) < f(m2) ? m1 : m2;
  }
  return f(0.5 * (lo + hi));
}

}  // namespace

TEST(ConcavityBound, Values) {
  EXPECT_DOUBLE_EQ(*concavity_bound(ThresholdKind::Hard, 1, 4), 0.25);
  EXPECT_DOUBLE_EQ(*concavity_bound(ThresholdKind::Hard, 1, 1), 0.5);
  EXPECT_DOUBLE_EQ(*concavity_bound(ThresholdKind::Reciprocal, 1, 4), 0.25);
  // 4(1 - 3/4) = 1 so the min is 1.
  EXPECT_DOUBLE_EQ(*concavity_bound(ThresholdKind::Reciprocal, 3, 4), 0.75);
  // s*/s = 0.9: 0.9 / 0.4.
  EXPECT_NEAR(*concavity_bound(ThresholdKind::Reciprocal, 9, 10), 2.25, 1e-15);
  EXPECT_FALSE(concavity_bound(ThresholdKind::Reciprocal, 2, 2).has_value());
  EXPECT_THROW(concavity_bound(ThresholdKind::Hard, 3, 2), spolyak::invalid_argument);
}

TEST(ConcavityRatio, SkipsCoincidentPair) {
  Vector z(2), y(2);
  z << 2, 1;
  const Vector pz = hard_threshold(z, 1);
  y = pz;
  EXPECT_FALSE(concavity_ratio(y, z, pz).has_value());
  y << 0, 1;
  // w = (-2, 1), r = (0, 1): ratio 1 / 5.
  EXPECT_NEAR(*concavity_ratio(y, z, pz), 0.2, 1e-15);
}

TEST(ConcavityClosedForm, MatchesNumericalMaximum) {
  auto rng = RandomStream::substream(3, 99, 0);
  for (int k = 0; k < 300; ++k) {
    const double A = 3.0 * rng.normal(), B = std::abs(rng.normal()) + 1e-3, R = std::abs(rng.normal()) + 1e-3;
    EXPECT_NEAR(best_ratio_on_support(A, B, R), golden_max(A, B, R), 1e-7 * (1.0 + std::abs(golden_max(A, B, R))));
  }
  EXPECT_TRUE(std::isinf(best_ratio_on_support(0.0, 0.0, 1.0)));
  EXPECT_EQ(best_ratio_on_support(-1.0, 2.0, 0.0), 0.0);
}

// The closed-form search must dominate every direct ratio it summarizes.
TEST(ConcavityClosedForm, DominatesRandomTargets) {
  auto rng = RandomStream::substream(4, 99, 0);
  for (int k = 0; k < 2000; ++k) {
    const Index dim = 2 + static_cast<Index>(rng.below(6));
    const Index s = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(dim)));
    const Index ss = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(s)));
    Vector z(dim);
    for (Index i = 0; i < dim; ++i) z[i] = rng.normal();
    for (ThresholdKind kind : {ThresholdKind::Hard, ThresholdKind::Reciprocal}) {
      const Vector pz = apply_threshold({kind, s}, z);
      const double best = detail::best_ratio_for_z(z, pz, ss);
      for (int j = 0; j < 20; ++j) {
        const Vector y = detail::random_sparse(rng, dim, ss);
        if (auto r = concavity_ratio(y, z, pz)) ASSERT_LE(*r, best + 1e-9 * (1.0 + std::abs(best)));
      }
    }
  }
}

TEST(ConcavityClosedForm, TinyRetainedEntriesStayBounded) {
  // Retained entries far below the largest one must still count in the complement.
  Vector z(4);
  z << 1.0, 1e-13, -1e-13, 1e-14;
  const Vector pz = hard_threshold(z, 3);
  const double best = detail::best_ratio_for_z(z, pz, 3);
  EXPECT_TRUE(std::isfinite(best));
  EXPECT_LE(best, *concavity_bound(ThresholdKind::Hard, 3, 3) + 1e-9);
}

TEST(EmpiricalConcavity, Examples) {
  const auto a = empirical_relative_concavity({ThresholdKind::Hard, 4}, 1, 8, 100000, 1);
  EXPECT_LE(a.estimate, 0.25 + 1e-9);
  EXPECT_GE(a.estimate, 0.0);
  EXPECT_EQ(a.trials, 100000);
  EXPECT_DOUBLE_EQ(*a.theoretical_bound, 0.25);

  const auto b = empirical_relative_concavity({ThresholdKind::Hard, 1}, 1, 2, 10000, 1);
  EXPECT_LE(b.estimate, 0.5 + 1e-9);
  EXPECT_GE(b.estimate, 0.9 * 0.5);  // the boundary tie family reaches the bound

  const auto c = empirical_relative_concavity({ThresholdKind::Reciprocal, 4}, 1, 8, 100000, 1);
  EXPECT_LE(c.estimate, 0.25 + 1e-9);
}

TEST(EmpiricalConcavity, RtEqualSparsityHasNoBound) {
  const auto e = empirical_relative_concavity({ThresholdKind::Reciprocal, 2}, 2, 4, 100, 1);
  EXPECT_FALSE(e.theoretical_bound.has_value());
  EXPECT_GE(e.estimate, 0.0);
}

TEST(EmpiricalConcavity, Errors) {
  EXPECT_THROW(empirical_relative_concavity({ThresholdKind::Hard, 2}, 3, 4, 10, 1), spolyak::invalid_argument);
  EXPECT_THROW(empirical_relative_concavity({ThresholdKind::Hard, 5}, 1, 4, 10, 1), spolyak::invalid_argument);
  EXPECT_THROW(empirical_relative_concavity({ThresholdKind::Hard, 2}, 1, 4, 0, 1), spolyak::invalid_argument);
  EXPECT_THROW(empirical_relative_concavity({ThresholdKind::Hard, 2}, 0, 4, 10, 1), spolyak::invalid_argument);
}

TEST(EmpiricalConcavity, Deterministic) {
  const auto a = empirical_relative_concavity({ThresholdKind::Reciprocal, 3}, 1, 6, 2000, 42);
  const auto b = empirical_relative_concavity({ThresholdKind::Reciprocal, 3}, 1, 6, 2000, 42);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.evaluations, b.evaluations);
}
