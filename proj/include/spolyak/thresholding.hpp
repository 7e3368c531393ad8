#pragma once

// Sparsifying operators: hard thresholding (keep the s largest magnitudes)
// and reciprocal thresholding (keep the same support, shrink each kept entry
// depending on the first excluded magnitude).

#include <spolyak/types.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace spolyak {

enum class ThresholdKind { Hard, Reciprocal };

inline std::string_view to_string(ThresholdKind k) {
  return k == ThresholdKind::Hard ? "HT" : "RT";
}

struct ThresholdSpec {
  ThresholdKind kind = ThresholdKind::Hard;
  Index s = 1;

  void validate(Index dim) const {
    if (s < 1) throw invalid_argument("threshold sparsity s must be >= 1");
    if (dim >= 1 && s > dim)
      throw invalid_argument("threshold sparsity s=" + std::to_string(s) +
                             " exceeds dimension " + std::to_string(dim));
  }
};

namespace detail {

// Reorders `order` so that its first k entries are the top-k indices of v under
// the total order (|v_i| descending, i ascending) and order[k] is the (k+1)-th.
inline std::vector<Index> ranked_prefix(const VectorRef& v, Index s) {
  if (v.size() == 0) throw invalid_argument("thresholding an empty vector");
  if (s < 1) throw invalid_argument("sparsity s must be >= 1, got " + std::to_string(s));
  std::vector<Index> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), Index{0});
  const auto before = [&v](Index a, Index b) {
    const double ma = std::abs(v[a]), mb = std::abs(v[b]);
    return ma > mb || (ma == mb && a < b);
  };
  if (s < v.size()) {
    std::nth_element(order.begin(), order.begin() + s, order.end(), before);
  }
  return order;
}

}  // namespace detail

/// Indices of the min(s, dim) largest-magnitude entries, ascending. Ties go to the lower index.
inline std::vector<Index> top_s_support(const VectorRef& v, Index s) {
  auto order = detail::ranked_prefix(v, s);
  const auto k = static_cast<std::size_t>(std::min<Index>(s, v.size()));
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

inline Vector hard_threshold(const VectorRef& v, Index s) {
  Vector out = Vector::Zero(v.size());
  for (Index i : top_s_support(v, s)) out[i] = v[i];
  return out;
}

/// Magnitude of the (s+1)-th entry in the ranked order; 0 when s >= dim.
inline double reciprocal_tau(const VectorRef& v, Index s) {
  if (s >= v.size()) {
    if (v.size() == 0) throw invalid_argument("thresholding an empty vector");
    if (s < 1) throw invalid_argument("sparsity s must be >= 1");
    return 0.0;
  }
  const auto order = detail::ranked_prefix(v, s);
  return std::abs(v[order[static_cast<std::size_t>(s)]]);
}

/// Reciprocal thresholding: on the top-s support each entry becomes
/// sign(v_i) * (|v_i| + sqrt(|v_i|^2 - tau^2)) / 2, everything else is zero.
inline Vector reciprocal_threshold(const VectorRef& v, Index s) {
  const auto order = detail::ranked_prefix(v, s);
  const Index k = std::min<Index>(s, v.size());
  const double tau = s < v.size() ? std::abs(v[order[static_cast<std::size_t>(s)]]) : 0.0;
  Vector out = Vector::Zero(v.size());
  for (Index j = 0; j < k; ++j) {
    const Index i = order[static_cast<std::size_t>(j)];
    const double a = std::abs(v[i]);
    // tau <= a on the support by construction of the ranking.
    assert(a >= tau);
    const double root = std::sqrt((a - tau) * (a + tau));
    out[i] = std::copysign(0.5 * (a + root), v[i]);
    if (v[i] == 0.0) out[i] = 0.0;
  }
  return out;
}

inline Vector apply_threshold(const ThresholdSpec& spec, const VectorRef& v) {
  return spec.kind == ThresholdKind::Hard ? hard_threshold(v, spec.s)
                                          : reciprocal_threshold(v, spec.s);
}

/// ||HT_w(v)||^2 without materializing the thresholded vector.
inline double hard_threshold_norm_sq(const VectorRef& v, Index width) {
  double acc = 0.0;
  for (Index i : top_s_support(v, width)) acc += v[i] * v[i];
  return acc;
}

}  // namespace spolyak
