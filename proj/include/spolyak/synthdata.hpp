#pragma once

// Synthetic instances: AR(1)-correlated Gaussian designs, sparse Gaussian
// ground truth, linear-Gaussian or logistic responses, and plug-in
// regularity constants computed from the exact design covariance.
//
// Each sample row x_i is an AR(1) sequence across features:
//   x_{i,0} = e_0 / sqrt(1 - omega^2),  x_{i,t} = omega x_{i,t-1} + e_t,
// which is stationary with covariance Sigma_jk = omega^|j-k| / (1 - omega^2).

#include <spolyak/objectives.hpp>
#include <spolyak/rng.hpp>
#include <spolyak/types.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace spolyak {

struct DesignSpec {
  Index n = 1;
  Index d = 1;
  double omega = 0.0;
  bool column_normalize = false;  // rescale so ||X_j|| / sqrt(n) = 1

  void validate() const {
    if (n < 1 || d < 1) throw invalid_argument("design needs n, d >= 1");
    if (!(omega >= 0.0 && omega < 1.0)) throw invalid_argument("design omega must lie in [0, 1)");
  }
};

struct TruthSpec {
  Index d = 1;
  Index s_star = 0;

  void validate() const {
    if (d < 1) throw invalid_argument("truth needs d >= 1");
    if (s_star < 0 || s_star > d) throw invalid_argument("truth s_star must lie in [0, d]");
  }
};

struct NoiseSpec {
  Family family = Family::Linear;
  double sigma = 1.0;  // linear only

  void validate() const {
    if (family == Family::Linear && !(sigma > 0.0))
      throw invalid_argument("noise sigma must be positive for the linear family");
  }
};

/// Restricted curvature constants and their derived forms on s-sparse differences:
/// mu_bar = mu - 3 tau s, L_bar = L + 3 tau s, kappa_bar = L_bar / mu_bar.
struct RegularityParams {
  double mu = 0.0;
  double L = 0.0;
  double tau = 0.0;
  Index s = 1;

  double mu_bar() const { return mu - 3.0 * tau * static_cast<double>(s); }
  double L_bar() const { return L + 3.0 * tau * static_cast<double>(s); }
  bool theory_applicable() const { return mu_bar() > 0.0; }
  std::optional<double> kappa_bar() const {
    if (!theory_applicable()) return std::nullopt;
    return L_bar() / mu_bar();
  }
};

/// ceil(factor * s* * log d), at least 1.
inline Index samples_for(Index d, Index s_star, double factor) {
  const double n = std::ceil(factor * static_cast<double>(s_star) * std::log(static_cast<double>(d)));
  return std::max<Index>(1, static_cast<Index>(n));
}

inline Matrix generate_design(const DesignSpec& spec, std::uint64_t seed) {
  spec.validate();
  Matrix X(spec.n, spec.d);
  const double head_scale = 1.0 / std::sqrt(1.0 - spec.omega * spec.omega);
  for (Index i = 0; i < spec.n; ++i) {
    auto rng = RandomStream::substream(seed, streams::kDesign, static_cast<std::uint64_t>(i));
    double prev = rng.normal() * head_scale;
    X(i, 0) = prev;
    for (Index t = 1; t < spec.d; ++t) {
      prev = spec.omega * prev + rng.normal();
      X(i, t) = prev;
    }
  }
  if (spec.column_normalize) {
    const double root_n = std::sqrt(static_cast<double>(spec.n));
    for (Index j = 0; j < spec.d; ++j) {
      const double norm = X.col(j).norm();
      if (norm > 0.0) X.col(j) *= root_n / norm;
    }
  }
  return X;
}

inline ParamVector generate_truth(const TruthSpec& spec, std::uint64_t seed) {
  spec.validate();
  auto rng = RandomStream::substream(seed, streams::kTruth, 0);
  // Partial Fisher-Yates for the support, then values in support order.
  std::vector<Index> idx(static_cast<std::size_t>(spec.d));
  for (Index i = 0; i < spec.d; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (Index i = 0; i < spec.s_star; ++i) {
    const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.d - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  Vector theta = Vector::Zero(spec.d);
  for (Index i = 0; i < spec.s_star; ++i) {
    double v = 0.0;
    while (v == 0.0) v = rng.normal();
    theta[idx[static_cast<std::size_t>(i)]] = v;
  }
  return ParamVector(std::move(theta));
}

inline Vector generate_responses(Family family, const Matrix& X, const ParamVector& truth,
                                 const NoiseSpec& noise, std::uint64_t seed) {
  if (truth.size() != X.cols()) throw invalid_argument("truth dimension does not match design");
  if (family == Family::Linear) noise.validate();
  const Vector z = X * truth.values();
  Vector y(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    auto rng = RandomStream::substream(seed, streams::kResponses, static_cast<std::uint64_t>(i));
    if (family == Family::Linear) {
      y[i] = z[i] + noise.sigma * rng.normal();
    } else {
      const double p = cumulant(Family::Logistic, z[i]).derivative;
      y[i] = rng.uniform() < p ? 1.0 : 0.0;
    }
  }
  return y;
}

// --- design covariance -----------------------------------------------------

/// Explicit covariance of the generated design (the correlation matrix when normalized).
inline Matrix design_covariance(const DesignSpec& spec) {
  spec.validate();
  const double scale = spec.column_normalize ? 1.0 : 1.0 / (1.0 - spec.omega * spec.omega);
  Matrix S(spec.d, spec.d);
  for (Index j = 0; j < spec.d; ++j)
    for (Index k = 0; k < spec.d; ++k)
      S(j, k) = scale * std::pow(spec.omega, static_cast<double>(std::abs(j - k)));
  return S;
}

struct Spectrum {
  double min = 0.0;
  double max = 0.0;
};

/// Extreme eigenvalues of the design covariance. The inverse of an AR(1)
/// covariance is tridiagonal, so this stays cheap for large d.
inline Spectrum design_spectrum(const DesignSpec& spec) {
  spec.validate();
  const double w = spec.omega;
  const double scale = spec.column_normalize ? 1.0 : 1.0 / (1.0 - w * w);
  if (spec.d == 1) return {scale, scale};
  // (1 - w^2) K^{-1} = tridiag(diag = 1, 1 + w^2, ..., 1 + w^2, 1; off = -w), K = [w^|j-k|].
  Vector diag = Vector::Constant(spec.d, 1.0 + w * w);
  diag[0] = diag[spec.d - 1] = 1.0;
  Vector off = Vector::Constant(spec.d - 1, -w);
  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  solver.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  const Vector& ev = solver.eigenvalues();  // ascending, eigenvalues of (1 - w^2) K^{-1}
  // eig(K) = (1 - w^2) / ev; Sigma = scale * K.
  const double factor = scale * (1.0 - w * w);
  return {factor / ev[ev.size() - 1], factor / ev[0]};
}

/// Plug-in regularity for the linear model: L = 2 sigma_max, mu = sigma_min / 2,
/// tau = zeta log d / n with zeta = max_j Sigma_jj and the universal constant set to 1.
inline RegularityParams compute_regularity(const DesignSpec& spec, Index s) {
  if (s < 1) throw invalid_argument("regularity sparsity s must be >= 1");
  const Spectrum sp = design_spectrum(spec);
  const double zeta = spec.column_normalize ? 1.0 : 1.0 / (1.0 - spec.omega * spec.omega);
  RegularityParams p;
  p.L = 2.0 * sp.max;
  p.mu = 0.5 * sp.min;
  p.tau = zeta * std::log(static_cast<double>(spec.d)) / static_cast<double>(spec.n);
  p.s = s;
  return p;
}

// --- whole instances -------------------------------------------------------

struct InstanceSpec {
  Family family = Family::Linear;
  DesignSpec design;
  Index s_star = 1;
  double sigma = 1.0;

  TruthSpec truth() const { return {design.d, s_star}; }
  NoiseSpec noise() const { return {family, sigma}; }
};

struct SyntheticInstance {
  ObjectiveModel model;
  ParamVector truth;
  double f_hat;  // f(truth)
};

/// Design, truth and responses from one seed; each draws from its own substream.
inline SyntheticInstance make_instance(const InstanceSpec& spec, std::uint64_t seed) {
  spec.design.validate();
  Dataset data;
  data.X = generate_design(spec.design, seed);
  ParamVector truth = generate_truth(spec.truth(), seed);
  data.y = generate_responses(spec.family, data.X, truth, spec.noise(), seed);
  ObjectiveModel model(spec.family, std::move(data));
  const double f_hat = target_value(model, truth);
  return {std::move(model), std::move(truth), f_hat};
}

}  // namespace spolyak
