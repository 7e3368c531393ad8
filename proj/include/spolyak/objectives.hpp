#pragma once

// GLM objectives f(theta) = (1/n) sum_i (psi(x_i' theta) - y_i x_i' theta).
// The linear family uses the equivalent form (1/2n)||y - X theta||^2, which
// differs from the generic expression by the constant (1/2n)||y||^2; target
// values must therefore be computed through the same model object.

#include <spolyak/types.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace spolyak {

enum class Family { Linear, Logistic };

inline std::string_view to_string(Family f) { return f == Family::Linear ? "linear" : "logistic"; }

struct Dataset {
  Matrix X;  // n x d, rows are samples
  Vector y;  // length n

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }

  void validate() const {
    if (X.rows() < 1 || X.cols() < 1) throw invalid_argument("dataset must have n, d >= 1");
    if (y.size() != X.rows())
      throw invalid_argument("response length " + std::to_string(y.size()) +
                             " does not match n=" + std::to_string(X.rows()));
    if (!X.allFinite() || !y.allFinite()) throw invalid_argument("dataset has non-finite entries");
  }
};

/// Dense coefficients with the set of nonzero indices cached alongside.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(Vector values) : values_(std::move(values)) { refresh(); }
  static ParamVector zeros(Index d) { return ParamVector(Vector::Zero(d)); }

  const Vector& values() const noexcept { return values_; }
  const std::vector<Index>& support() const noexcept { return support_; }
  Index size() const noexcept { return values_.size(); }
  Index nnz() const noexcept { return static_cast<Index>(support_.size()); }
  double operator[](Index i) const { return values_[i]; }

 private:
  void refresh() {
    support_.clear();
    for (Index i = 0; i < values_.size(); ++i)
      if (values_[i] != 0.0) support_.push_back(i);
  }

  Vector values_;
  std::vector<Index> support_;
};

struct Cumulant {
  double value;       // psi(t)
  double derivative;  // psi'(t)
};

inline Cumulant cumulant(Family family, double t) {
  if (family == Family::Linear) return {0.5 * t * t, t};
  // log(1 + e^t) = max(t, 0) + log1p(e^{-|t|})
  const double e = std::exp(-std::abs(t));
  const double value = std::max(t, 0.0) + std::log1p(e);
  const double derivative = t >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
  return {value, derivative};
}

struct ValueAndGradient {
  double value;
  Vector gradient;
};

class ObjectiveModel {
 public:
  ObjectiveModel(Family family, std::shared_ptr<const Dataset> data)
      : family_(family), data_(std::move(data)) {
    if (!data_) throw invalid_argument("objective model needs a dataset");
    data_->validate();
    if (family_ == Family::Logistic) {
      for (Index i = 0; i < data_->n(); ++i) {
        const double yi = data_->y[i];
        if (yi != 0.0 && yi != 1.0)
          throw invalid_argument("logistic responses must be 0 or 1 (row " + std::to_string(i) + ")");
      }
    }
  }
  ObjectiveModel(Family family, Dataset data)
      : ObjectiveModel(family, std::make_shared<const Dataset>(std::move(data))) {}

  Family family() const noexcept { return family_; }
  const Dataset& data() const noexcept { return *data_; }
  const std::shared_ptr<const Dataset>& shared_data() const noexcept { return data_; }
  Index n() const { return data_->n(); }
  Index d() const { return data_->d(); }

  double value(const ParamVector& theta) const { return value_from_scores(scores(theta)); }

  Vector gradient(const ParamVector& theta) const { return gradient_from_scores(scores(theta)); }

  ValueAndGradient value_and_gradient(const ParamVector& theta) const {
    const Vector z = scores(theta);
    return {value_from_scores(z), gradient_from_scores(z)};
  }

  // X theta, using only the support columns when theta is sparse.
  Vector scores(const ParamVector& theta) const {
    check_dim(theta);
    const auto& X = data_->X;
    if (theta.nnz() * 4 < d()) {
      Vector z = Vector::Zero(n());
      for (Index j : theta.support()) z.noalias() += theta[j] * X.col(j);
      return z;
    }
    return X * theta.values();
  }

 private:
  void check_dim(const ParamVector& theta) const {
    if (theta.size() != d())
      throw invalid_argument("parameter dimension " + std::to_string(theta.size()) +
                             " does not match d=" + std::to_string(d()));
  }

  double value_from_scores(const Vector& z) const {
    const auto& y = data_->y;
    const double inv_n = 1.0 / static_cast<double>(n());
    if (family_ == Family::Linear) return 0.5 * inv_n * (y - z).squaredNorm();
    double acc = 0.0;
    for (Index i = 0; i < n(); ++i) acc += cumulant(family_, z[i]).value - y[i] * z[i];
    return acc * inv_n;
  }

  Vector gradient_from_scores(const Vector& z) const {
    const auto& y = data_->y;
    Vector residual(n());
    for (Index i = 0; i < n(); ++i) residual[i] = cumulant(family_, z[i]).derivative - y[i];
    Vector g = data_->X.transpose() * residual;
    g /= static_cast<double>(n());
    return g;
  }

  Family family_;
  std::shared_ptr<const Dataset> data_;
};

/// f(theta*): the target value handed to the Polyak step rules in synthetic runs.
inline double target_value(const ObjectiveModel& model, const ParamVector& truth) {
  return model.value(truth);
}

}  // namespace spolyak
