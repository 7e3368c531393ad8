#include <spolyak/objectives.hpp>
#include <spolyak/rng.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace spolyak;

namespace {

Dataset make_data(std::initializer_list<std::initializer_list<double>> rows, std::initializer_list<double> y) {
  Dataset d;
  d.X.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (double x : r) d.X(i, j++) = x;
    ++i;
  }
  d.y.resize(static_cast<Index>(y.size()));
  i = 0;
  for (double v : y) d.y[i++] = v;
  return d;
}

ParamVector pv(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return ParamVector(v);
}

ObjectiveModel random_model(RandomStream& rng, Family family, Index n, Index d) {
  Dataset data;
  data.X.resize(n, d);
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) data.X(i, j) = rng.normal();
    data.y[i] = family == Family::Logistic ? static_cast<double>(rng.coin()) : rng.normal();
  }
  return ObjectiveModel(family, std::move(data));
}

Vector random_theta(RandomStream& rng, Index d, double scale) {
  Vector v(d);
  for (Index j = 0; j < d; ++j) v[j] = rng.coin() ? scale * rng.normal() : 0.0;
  return v;
}

}  // namespace

TEST(Cumulant, Examples) {
  const auto lin = cumulant(Family::Linear, 3.0);
  EXPECT_EQ(lin.value, 4.5);
  EXPECT_EQ(lin.derivative, 3.0);
  const auto zero = cumulant(Family::Logistic, 0.0);
  EXPECT_NEAR(zero.value, 0.6931471805599453, 1e-15);
  EXPECT_EQ(zero.derivative, 0.5);
  const auto big = cumulant(Family::Logistic, 800.0);
  EXPECT_NEAR(big.value, 800.0, 1e-12);
  EXPECT_EQ(big.derivative, 1.0);
}

// Extended-precision reference for log(1 + e^t) and its derivative.
TEST(Cumulant, LogisticMatchesLongDouble) {
  for (double t = -900.0; t <= 900.0; t += 0.37) {
    const long double tl = t;
    const long double ref_value = tl > 0 ? tl + std::log1p(std::exp(-tl)) : std::log1p(std::exp(tl));
    const long double ref_deriv = 1.0L / (1.0L + std::exp(-tl));
    const auto c = cumulant(Family::Logistic, t);
    EXPECT_NEAR(c.value, static_cast<double>(ref_value), 1e-15 * (1.0 + std::abs(t))) << t;
    EXPECT_NEAR(c.derivative, static_cast<double>(ref_deriv), 1e-16 + 1e-15 * static_cast<double>(ref_deriv)) << t;
    EXPECT_TRUE(std::isfinite(c.value));
    EXPECT_GE(c.derivative, 0.0);
    EXPECT_LE(c.derivative, 1.0);
    // Strictly inside (0, 1) wherever the double format can represent it.
    if (std::abs(t) < 30.0) {
      EXPECT_GT(c.derivative, 0.0);
      EXPECT_LT(c.derivative, 1.0);
    }
  }
}

TEST(Objective, ValueExamples) {
  ObjectiveModel a(Family::Linear, make_data({{1, 0}}, {1}));
  EXPECT_EQ(a.value(pv({0, 0})), 0.5);
  ObjectiveModel b(Family::Linear, make_data({{1, 0}, {0, 1}}, {2, 4}));
  EXPECT_EQ(b.value(pv({2, 4})), 0.0);
  ObjectiveModel c(Family::Logistic, make_data({{1, -2}, {3, 0.5}, {0, 1}}, {1, 0, 1}));
  EXPECT_NEAR(c.value(pv({0, 0})), std::log(2.0), 1e-15);
}

TEST(Objective, GradientExamples) {
  ObjectiveModel a(Family::Linear, make_data({{1, 0}}, {1}));
  const Vector ga = a.gradient(pv({0, 0}));
  EXPECT_EQ(ga[0], -1.0);
  EXPECT_EQ(ga[1], 0.0);
  ObjectiveModel b(Family::Logistic, make_data({{2, 0}}, {1}));
  const Vector gb = b.gradient(pv({0, 0}));
  EXPECT_EQ(gb[0], -1.0);
  EXPECT_EQ(gb[1], 0.0);
}

TEST(Objective, TargetValueExamples) {
  ObjectiveModel a(Family::Linear, make_data({{1}}, {2}));
  EXPECT_EQ(target_value(a, pv({1})), 0.5);
  ObjectiveModel b(Family::Logistic, make_data({{1, 2}, {-1, 0}}, {0, 1}));
  EXPECT_NEAR(target_value(b, pv({0, 0})), std::log(2.0), 1e-15);

  auto rng = RandomStream::substream(1, 99, 0);
  Dataset data;
  data.X.resize(30, 8);
  for (Index i = 0; i < 30; ++i)
    for (Index j = 0; j < 8; ++j) data.X(i, j) = rng.normal();
  const ParamVector truth = pv({0, 1.5, 0, 0, -2, 0, 0, 0});
  data.y = data.X * truth.values();
  EXPECT_NEAR(target_value(ObjectiveModel(Family::Linear, data), truth), 0.0, 1e-28);
}

TEST(Objective, Errors) {
  ObjectiveModel a(Family::Linear, make_data({{1, 0}}, {1}));
  EXPECT_THROW(a.value(pv({0, 0, 0})), spolyak::invalid_argument);
  EXPECT_THROW(a.gradient(pv({0})), spolyak::invalid_argument);
  EXPECT_THROW(ObjectiveModel(Family::Logistic, make_data({{1}}, {0.5})), spolyak::invalid_argument);
  Dataset bad = make_data({{1, 0}}, {1});
  bad.X(0, 1) = std::nan("");
  EXPECT_THROW(ObjectiveModel(Family::Linear, bad), spolyak::invalid_argument);
  Dataset ragged = make_data({{1, 0}}, {1});
  ragged.y.resize(2);
  EXPECT_THROW(ragged.validate(), spolyak::invalid_argument);
}

TEST(ParamVector, SupportTracksNonzeros) {
  const ParamVector p = pv({0, 2, 0, -1, 0});
  EXPECT_EQ(p.support(), (std::vector<Index>{1, 3}));
  EXPECT_EQ(p.nnz(), 2);
  EXPECT_EQ(ParamVector::zeros(4).nnz(), 0);
}

// Central differences with step 1e-6 (1 + |theta_i|), 100 instances per family.
TEST(Objective, GradientMatchesFiniteDifferences) {
  auto rng = RandomStream::substream(7, 99, 0);
  for (Family family : {Family::Linear, Family::Logistic}) {
    for (int k = 0; k < 100; ++k) {
      const Index n = 1 + static_cast<Index>(rng.below(20));
      const Index d = 1 + static_cast<Index>(rng.below(20));
      const ObjectiveModel model = random_model(rng, family, n, d);
      const Vector theta = random_theta(rng, d, 0.5);
      const Vector g = model.gradient(ParamVector(theta));
      for (Index i = 0; i < d; ++i) {
        const double h = 1e-6 * (1.0 + std::abs(theta[i]));
        Vector up = theta, down = theta;
        up[i] += h;
        down[i] -= h;
        const double fd = (model.value(ParamVector(up)) - model.value(ParamVector(down))) / (2.0 * h);
        const double scale = std::max({std::abs(g[i]), std::abs(fd), 1e-3});
        ASSERT_LE(std::abs(fd - g[i]) / scale, 1e-5) << to_string(family) << " instance " << k << " coord " << i;
      }
    }
  }
}

TEST(Objective, LinearGradientIdentity) {
  auto rng = RandomStream::substream(8, 99, 0);
  for (int k = 0; k < 50; ++k) {
    const ObjectiveModel model = random_model(rng, Family::Linear, 15, 40);
    const Vector theta = random_theta(rng, 40, 1.0);
    const auto& X = model.data().X;
    const Vector ref = X.transpose() * (X * theta - model.data().y) / 15.0;
    const Vector g = model.gradient(ParamVector(theta));
    EXPECT_LE((g - ref).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + ref.cwiseAbs().maxCoeff()));
  }
}

TEST(Objective, SparseAndDenseScoresAgree) {
  auto rng = RandomStream::substream(9, 99, 0);
  const ObjectiveModel model = random_model(rng, Family::Logistic, 25, 100);
  Vector theta = Vector::Zero(100);
  theta[3] = 1.25;
  theta[71] = -0.5;
  const ParamVector sparse(theta);
  ASSERT_LT(sparse.nnz() * 4, 100);
  const Vector dense = model.data().X * theta;
  EXPECT_LE((model.scores(sparse) - dense).cwiseAbs().maxCoeff(), 1e-13);
  const auto vg = model.value_and_gradient(sparse);
  EXPECT_EQ(vg.value, model.value(sparse));
  EXPECT_EQ(vg.gradient, model.gradient(sparse));
}

TEST(Objective, ConvexAlongSegments) {
  auto rng = RandomStream::substream(10, 99, 0);
  for (Family family : {Family::Linear, Family::Logistic}) {
    for (int k = 0; k < 200; ++k) {
      const ObjectiveModel model = random_model(rng, family, 12, 6);
      const Vector a = random_theta(rng, 6, 2.0), b = random_theta(rng, 6, 2.0);
      const double t = rng.uniform();
      const double mid = model.value(ParamVector(t * a + (1.0 - t) * b));
      ASSERT_LE(mid, t * model.value(ParamVector(a)) + (1.0 - t) * model.value(ParamVector(b)) + 1e-10);
    }
  }
}

TEST(Objective, LogisticValueNonnegative) {
  auto rng = RandomStream::substream(11, 99, 0);
  for (int k = 0; k < 200; ++k) {
    const ObjectiveModel model = random_model(rng, Family::Logistic, 10, 5);
    const Vector theta = random_theta(rng, 5, 50.0);
    ASSERT_GE(model.value(ParamVector(theta)), -1e-12);
  }
}
