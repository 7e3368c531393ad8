#pragma once

// Empirical relative concavity of a thresholding operator.
//
// For y with at most s* nonzeros and any z, the quantity of interest is
//   <y - P(z), z - P(z)> / ||y - P(z)||^2,   P = thresholding operator,
// and the relative concavity is its supremum. The estimator combines
//   * direct evaluations on random s*-sparse y, and
//   * for each sampled z, the exact supremum over y restricted to a support T,
//     which has a closed form (see best_ratio_on_support), maximized over T.
// Sampled z include Gaussian, heavy-tailed and near-tied boundary vectors, plus
// a deterministic adversarial set, because the supremum sits at boundary ties.

#include <spolyak/rng.hpp>
#include <spolyak/thresholding.hpp>
#include <spolyak/types.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace spolyak {

struct ConcavityEstimate {
  ThresholdSpec op;
  Index s_star = 0;
  Index dim = 0;
  double estimate = 0.0;
  std::optional<double> theoretical_bound;  // undefined for RT with s* = s
  Index trials = 0;
  Index evaluations = 0;  // (y, z) evaluations, direct or closed-form
};

/// sqrt(s*/s)/2 for HT; (s*/s)/min{1, 4(1 - s*/s)} for RT when s* < s.
inline std::optional<double> concavity_bound(ThresholdKind kind, Index s_star, Index s) {
  if (s_star < 0 || s < 1 || s_star > s)
    throw invalid_argument("concavity bound needs 0 <= s* <= s, s >= 1");
  const double r = static_cast<double>(s_star) / static_cast<double>(s);
  if (kind == ThresholdKind::Hard) return std::sqrt(r) / 2.0;
  if (s_star == s) return std::nullopt;
  return r / std::min(1.0, 4.0 * (1.0 - r));
}

/// Direct ratio for one pair; nullopt when y == P(z).
inline std::optional<double> concavity_ratio(const VectorRef& y, const VectorRef& z,
                                             const VectorRef& pz) {
  const Vector w = y - pz;
  const double den = w.squaredNorm();
  if (den == 0.0) return std::nullopt;
  return w.dot(z - pz) / den;
}

/// Supremum of the ratio over all y supported on T, for fixed z with p = P(z)
/// and residual r = z - p. Writing w = y - p, the free part of w lives on T:
///   A = -<p, r> over the complement of T,  B = ||p||^2 over the complement,
///   R = ||r_T||.
/// The ratio (A + t R) / (B + t^2) is maximized at t = (sqrt(A^2 + R^2 B) - A) / R
/// with value R / (2t). Returns +inf when the ratio is unbounded (B = 0, R > 0).
inline double best_ratio_on_support(double A, double B, double R) {
  if (R == 0.0) return (A > 0.0 && B > 0.0) ? A / B : 0.0;
  if (B == 0.0) return std::numeric_limits<double>::infinity();
  const double root = std::sqrt(A * A + R * R * B);
  // Stable form of root - A when A > 0.
  const double t = A > 0.0 ? (R * R * B) / (R * (root + A)) : (root - A) / R;
  return R / (2.0 * t);
}

namespace detail {

inline double binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  double out = 1.0;
  for (Index i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  return out;
}

inline constexpr double kMaxEnumeratedSubsets = 4096.0;

// Exact (enumerated) or heuristic maximum over supports T with |T| = s*.
inline double best_ratio_for_z(const Vector& z, const Vector& pz, Index s_star) {
  const Index d = z.size();
  const Vector r = z - pz;
  const Vector pr = pz.cwiseProduct(r);
  const Vector pp = pz.cwiseProduct(pz);
  const Vector rr = r.cwiseProduct(r);
  const Index k = std::min(s_star, d);

  // Complement sums are accumulated directly: subtracting from a total would
  // cancel tiny retained entries to zero and fake an unbounded ratio.
  std::vector<char> in_t(static_cast<std::size_t>(d), 0);
  const auto eval = [&](const std::vector<Index>& T) {
    for (Index i : T) in_t[static_cast<std::size_t>(i)] = 1;
    double pr_out = 0.0, pp_out = 0.0, rr_in = 0.0;
    for (Index i = 0; i < d; ++i) {
      if (in_t[static_cast<std::size_t>(i)]) {
        rr_in += rr[i];
      } else {
        pr_out += pr[i];
        pp_out += pp[i];
      }
    }
    for (Index i : T) in_t[static_cast<std::size_t>(i)] = 0;
    return best_ratio_on_support(-pr_out, pp_out, std::sqrt(rr_in));
  };

  double best = -std::numeric_limits<double>::infinity();
  if (k == 0) return eval({});
  if (binomial(d, k) <= kMaxEnumeratedSubsets) {
    std::vector<Index> T(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) T[static_cast<std::size_t>(i)] = i;
    while (true) {
      best = std::max(best, eval(T));
      Index pos = k - 1;
      while (pos >= 0 && T[static_cast<std::size_t>(pos)] == d - k + pos) --pos;
      if (pos < 0) break;
      ++T[static_cast<std::size_t>(pos)];
      for (Index j = pos + 1; j < k; ++j)
        T[static_cast<std::size_t>(j)] = T[static_cast<std::size_t>(j - 1)] + 1;
    }
    return best;
  }
  // Large dimensions: split the budget between the largest residual coordinates
  // and the largest retained coordinates.
  std::vector<Index> by_r(static_cast<std::size_t>(d)), by_p(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) by_r[static_cast<std::size_t>(i)] = by_p[static_cast<std::size_t>(i)] = i;
  std::stable_sort(by_r.begin(), by_r.end(), [&](Index a, Index b) { return rr[a] > rr[b]; });
  std::stable_sort(by_p.begin(), by_p.end(), [&](Index a, Index b) { return pp[a] > pp[b]; });
  for (Index take_r = 0; take_r <= k; ++take_r) {
    std::vector<Index> T(by_r.begin(), by_r.begin() + take_r);
    for (Index i : by_p) {
      if (static_cast<Index>(T.size()) == k) break;
      if (std::find(T.begin(), T.end(), i) == T.end()) T.push_back(i);
    }
    best = std::max(best, eval(T));
  }
  return best;
}

inline Vector random_sparse(RandomStream& rng, Index dim, Index nnz) {
  Vector y = Vector::Zero(dim);
  std::vector<Index> idx(static_cast<std::size_t>(dim));
  for (Index i = 0; i < dim; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (Index i = 0; i < nnz; ++i) {
    const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(dim - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    y[idx[static_cast<std::size_t>(i)]] = rng.normal();
  }
  return y;
}

inline constexpr std::array<double, 8> kTieGaps = {0.0, 1e-9, 1e-6, 1e-3, 1e-2, 0.1, 0.3, 0.6};

// z for trial `trial`; the mode cycles through four families.
inline Vector sample_z(RandomStream& rng, Index dim, Index s, Index trial) {
  Vector z(dim);
  switch (trial % 4) {
    case 0:
      for (Index i = 0; i < dim; ++i) z[i] = rng.normal();
      break;
    case 1: {  // near-tied boundary: s entries at 1, the rest just below
      for (Index i = 0; i < dim; ++i) {
        const double gap = i < s ? 0.0 : kTieGaps[rng.below(kTieGaps.size())];
        z[i] = rng.coin() ? 1.0 - gap : -(1.0 - gap);
      }
      for (Index i = dim - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(z[i], z[j]);
      }
      break;
    }
    case 2: {  // heavy or light tails
      const double power = 3.0 * rng.uniform();
      for (Index i = 0; i < dim; ++i) {
        const double m = std::pow(std::abs(rng.normal()), power);
        z[i] = rng.coin() ? m : -m;
      }
      break;
    }
    default:  // Gaussian with random zeros
      for (Index i = 0; i < dim; ++i) z[i] = rng.uniform() < 0.3 ? 0.0 : rng.normal();
      break;
  }
  return z;
}

// Deterministic adversarial z: exact and near boundary ties, then a dominant top-s block.
inline std::vector<Vector> structured_z(Index dim, Index s) {
  std::vector<Vector> out;
  for (double gap : kTieGaps) {
    Vector z = Vector::Constant(dim, 1.0 - gap);
    z.head(std::min(s, dim)).setOnes();
    out.push_back(z);
  }
  for (double top : {1.01, 1.1, 1.5, 2.0, 4.0, 16.0}) {
    Vector z = Vector::Ones(dim);
    z.head(std::min(s, dim)).setConstant(top);
    out.push_back(z);
  }
  return out;
}

}  // namespace detail

/// Lower estimate of the relative concavity of `op` against s*-sparse targets in dimension dim.
inline ConcavityEstimate empirical_relative_concavity(const ThresholdSpec& op, Index s_star,
                                                      Index dim, Index trials,
                                                      std::uint64_t seed) {
  if (s_star < 1) throw invalid_argument("s_star must be >= 1");
  if (s_star > op.s) throw invalid_argument("s_star exceeds operator sparsity s");
  if (op.s > dim) throw invalid_argument("operator sparsity s exceeds dimension");
  if (trials < 1) throw invalid_argument("trials must be >= 1");

  ConcavityEstimate est;
  est.op = op;
  est.s_star = s_star;
  est.dim = dim;
  est.trials = trials;
  est.theoretical_bound = concavity_bound(op.kind, s_star, op.s);

  double best = -std::numeric_limits<double>::infinity();
  const auto consider = [&](double value) {
    best = std::max(best, value);
    ++est.evaluations;
  };

  for (const Vector& z : detail::structured_z(dim, op.s)) {
    const Vector pz = apply_threshold(op, z);
    consider(detail::best_ratio_for_z(z, pz, s_star));
  }

  for (Index t = 0; t < trials; ++t) {
    auto rng = RandomStream::substream(seed, streams::kConcavity, static_cast<std::uint64_t>(t));
    const Vector z = detail::sample_z(rng, dim, op.s, t);
    const Vector pz = apply_threshold(op, z);
    const Vector y = detail::random_sparse(rng, dim, s_star);
    if (auto direct = concavity_ratio(y, z, pz)) consider(*direct);
    consider(detail::best_ratio_for_z(z, pz, s_star));
  }
  est.estimate = std::max(0.0, best);
  return est;
}

}  // namespace spolyak
