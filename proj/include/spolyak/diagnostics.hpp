#pragma once

// Empirical checks of curvature assumptions and convergence claims:
// RSC / RSS / weak-RSC sampling, per-iteration contraction ratios,
// plateau detection, the thresholding decomposition inequality and the
// HT-vs-RT grid comparison.

#include <spolyak/concavity.hpp>
#include <spolyak/objectives.hpp>
#include <spolyak/optimizer.hpp>
#include <spolyak/parallel.hpp>
#include <spolyak/rng.hpp>
#include <spolyak/synthdata.hpp>
#include <spolyak/thresholding.hpp>
#include <spolyak/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace spolyak {

// --- small statistics --------------------------------------------------------

inline double median(std::vector<double> values) {
  if (values.empty()) throw invalid_argument("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

// --- assumption checks -------------------------------------------------------

enum class AssumptionKind { RSC, RSS, WeakRSC };

inline std::string_view to_string(AssumptionKind k) {
  switch (k) {
    case AssumptionKind::RSC: return "RSC";
    case AssumptionKind::RSS: return "RSS";
    case AssumptionKind::WeakRSC: return "WeakRSC";
  }
  return "?";
}

struct AssumptionReport {
  AssumptionKind assumption = AssumptionKind::RSC;
  Index pairs_tested = 0;
  Index violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
};

struct ParamPair {
  Vector first;
  Vector second;
};

namespace detail {

inline Vector sparse_gaussian(RandomStream& rng, Index d, Index s) {
  return random_sparse(rng, d, std::min(s, d));
}

inline Vector dense_gaussian(RandomStream& rng, Index d, Index s) {
  // Entry variance s/d keeps dense and s-sparse draws at comparable norms.
  const double scale = std::sqrt(static_cast<double>(std::min(s, d)) / static_cast<double>(d));
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

}  // namespace detail

/// Pair number `index`; regimes cycle in quarters: both s-sparse, sparse/dense,
/// both dense, and s-sparse pairs at a log-uniform separation in [1e-3, 10].
inline ParamPair sample_assumption_pair(std::uint64_t seed, Index index, Index d, Index s) {
  auto rng = RandomStream::substream(seed, streams::kAssumption, static_cast<std::uint64_t>(index));
  ParamPair p;
  switch (index % 4) {
    case 0:
      p.first = detail::sparse_gaussian(rng, d, s);
      p.second = detail::sparse_gaussian(rng, d, s);
      break;
    case 1:
      p.first = detail::sparse_gaussian(rng, d, s);
      p.second = detail::dense_gaussian(rng, d, s);
      break;
    case 2:
      p.first = detail::dense_gaussian(rng, d, s);
      p.second = detail::dense_gaussian(rng, d, s);
      break;
    default: {
      p.second = detail::sparse_gaussian(rng, d, s);
      Vector dir = detail::sparse_gaussian(rng, d, s);
      const double norm = dir.norm();
      if (norm > 0.0) dir /= norm;
      const double sep = std::pow(10.0, -3.0 + 4.0 * rng.uniform());
      p.first = p.second + sep * dir;
      break;
    }
  }
  return p;
}

/// Slack of one inequality at one pair (negative means violated).
inline double assumption_slack(AssumptionKind kind, const RegularityParams& params, double bregman,
                               const Vector& delta) {
  const double l2sq = delta.squaredNorm();
  const double l1 = delta.lpNorm<1>();
  const double l1sq = l1 * l1;
  switch (kind) {
    case AssumptionKind::RSC:
      return bregman - (0.5 * params.mu * l2sq - 0.5 * params.tau * l1sq);
    case AssumptionKind::RSS:
      return 0.5 * params.L * l2sq + 0.5 * params.tau * l1sq - bregman;
    case AssumptionKind::WeakRSC: {
      if (l2sq <= 1.0) return bregman - (0.5 * params.mu * l2sq - 0.5 * params.tau * l1sq);
      const double l2 = std::sqrt(l2sq);
      return bregman - l2 * (0.5 * params.mu - 0.5 * params.tau * l1sq / l2sq);
    }
  }
  return 0.0;
}

/// Counts violations of the chosen inequality over `pairs` sampled pairs.
/// Sparse draws use params.s nonzeros.
inline AssumptionReport check_assumption(AssumptionKind kind, const ObjectiveModel& model,
                                         const RegularityParams& params, Index pairs,
                                         std::uint64_t seed) {
  if (pairs < 1) throw invalid_argument("pairs must be >= 1");
  AssumptionReport report;
  report.assumption = kind;
  for (Index k = 0; k < pairs; ++k) {
    const ParamPair pair = sample_assumption_pair(seed, k, model.d(), params.s);
    const ParamVector first(pair.first), second(pair.second);
    const double f1 = model.value(first);
    const auto at_second = model.value_and_gradient(second);
    const Vector delta = pair.first - pair.second;
    const double bregman = f1 - at_second.value - at_second.gradient.dot(delta);
    const double slack = assumption_slack(kind, params, bregman, delta);
    // Rounding in the Bregman difference scales with the function values.
    const double tol = 1e-11 * (1.0 + std::abs(f1) + std::abs(at_second.value));
    ++report.pairs_tested;
    if (slack < -tol) ++report.violations;
    report.worst_margin = std::min(report.worst_margin, slack);
  }
  return report;
}

inline AssumptionReport check_rsc(const ObjectiveModel& model, const RegularityParams& params,
                                  Index pairs, std::uint64_t seed) {
  return check_assumption(AssumptionKind::RSC, model, params, pairs, seed);
}
inline AssumptionReport check_rss(const ObjectiveModel& model, const RegularityParams& params,
                                  Index pairs, std::uint64_t seed) {
  return check_assumption(AssumptionKind::RSS, model, params, pairs, seed);
}
inline AssumptionReport check_weak_rsc(const ObjectiveModel& model, const RegularityParams& params,
                                       Index pairs, std::uint64_t seed) {
  return check_assumption(AssumptionKind::WeakRSC, model, params, pairs, seed);
}

// --- contraction and plateau -------------------------------------------------

struct ContractionProfile {
  std::vector<Index> iterations;  // t with error_sq(t) >= floor
  std::vector<double> ratios;     // error_sq(t+1) / error_sq(t)
  double max_ratio = 0.0;
  double median_ratio = 0.0;
};

inline std::vector<double> error_curve(const RunTrace& trace) {
  std::vector<double> out;
  out.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    if (!r.error_sq) throw invalid_argument("trace has no error_sq values (not a synthetic run)");
    out.push_back(*r.error_sq);
  }
  return out;
}

inline ContractionProfile contraction_profile(const RunTrace& trace, double floor) {
  const auto err = error_curve(trace);
  ContractionProfile p;
  for (std::size_t t = 0; t + 1 < err.size(); ++t) {
    if (err[t] < floor || err[t] == 0.0) continue;
    p.iterations.push_back(static_cast<Index>(t));
    p.ratios.push_back(err[t + 1] / err[t]);
  }
  if (!p.ratios.empty()) {
    p.max_ratio = *std::max_element(p.ratios.begin(), p.ratios.end());
    p.median_ratio = median(p.ratios);
  }
  return p;
}

/// Iterates within this factor of the plateau count as having reached it.
inline constexpr double kPlateauBand = 2.0;

/// Measured plateau: median error over the last 10% of recorded iterations (at least one).
inline double plateau_level(const std::vector<double>& err) {
  if (err.empty()) throw invalid_argument("plateau of an empty curve");
  const std::size_t tail = std::max<std::size_t>(1, (err.size() + 9) / 10);
  return median(std::vector<double>(err.end() - static_cast<std::ptrdiff_t>(tail), err.end()));
}

inline double plateau_level(const RunTrace& trace) { return plateau_level(error_curve(trace)); }

/// First iteration whose error is within kPlateauBand of the plateau.
inline Index iters_to_plateau(const std::vector<double>& err, double plateau) {
  for (std::size_t t = 0; t < err.size(); ++t)
    if (err[t] <= kPlateauBand * plateau) return static_cast<Index>(t);
  return static_cast<Index>(err.size());
}

/// Expansion factor bounding ||theta_{t+1} - theta_hat||^2 against the restricted
/// pre-threshold distance: 1 + 4 eta for eta <= 1/4, else 1 / (1 - 2 eta).
/// Median step size over the updates t < max(1, until); the last record has no update.
inline double progress_step_median(const RunTrace& trace, Index until) {
  std::vector<double> steps;
  const auto updates = trace.records.empty() ? std::size_t{0} : trace.records.size() - 1;
  const auto end = std::min(updates, static_cast<std::size_t>(std::max<Index>(1, until)));
  for (std::size_t t = 0; t < end; ++t) steps.push_back(trace.records[t].step_size);
  return steps.empty() ? 0.0 : median(steps);
}

inline double expansion_factor(double eta) {
  if (eta <= 0.25) return 1.0 + 4.0 * std::max(eta, 0.0);
  if (eta < 0.5) return 1.0 / (1.0 - 2.0 * eta);
  return std::numeric_limits<double>::infinity();
}

/// expansion_factor(eta) ||[pre]_S - truth||^2 - ||next - truth||^2, where S is the
/// union of the supports of `next` and `truth`. Nonnegative when eta bounds the
/// operator's relative concavity against supp(truth)-sized targets.
inline double decomposition_slack(const ParamVector& next, const Vector& pre,
                                  const ParamVector& truth, double eta) {
  Vector restricted = Vector::Zero(pre.size());
  for (Index i : next.support()) restricted[i] = pre[i];
  for (Index i : truth.support()) restricted[i] = pre[i];
  const double lhs = (next.values() - truth.values()).squaredNorm();
  const double rhs = expansion_factor(eta) * (restricted - truth.values()).squaredNorm();
  return rhs - lhs;
}

// --- HT vs RT grid comparison ---------------------------------------------------

struct ComparisonSpec {
  InstanceSpec instance;
  StepKind step = StepKind::SparsePolyak;
  Index max_iters = 500;
  double stop_tol = 1e-12;
};

struct ComparisonCell {
  ThresholdKind op = ThresholdKind::Hard;
  Index s = 0;
  std::uint64_t seed = 0;
  double final_error_sq = 0.0;
  double plateau_error_sq = 0.0;
  Index iters_to_floor = 0;
  RunStatus status = RunStatus::MaxIters;
  std::vector<double> errors;   // error_sq per iteration
  double median_step = 0.0;      // over the progress phase t < iters_to_floor
  double median_step_all = 0.0;  // over every update
};

struct ComparisonRow {
  ThresholdSpec op;  // op.s = best grid value
  Index best_s = 0;
  double final_error_sq = 0.0;  // median over seeds at best_s
  Index iters_to_floor = 0;     // median over seeds at best_s
};

struct ComparisonResult {
  std::vector<ComparisonCell> cells;  // ordered by (op, s, seed) as given
  std::vector<ComparisonRow> rows;    // HT then RT
};

/// One run on a prepared instance, summarized.
inline ComparisonCell run_cell(const SyntheticInstance& inst, const ComparisonSpec& spec,
                               ThresholdSpec op, std::uint64_t seed) {
  RunConfig cfg = synthetic_run_config(inst, op, spec.step, spec.max_iters);
  cfg.stop_tol = spec.stop_tol;
  cfg.seed = seed;
  if (spec.step == StepKind::Fixed)
    cfg.step.fixed_gamma = fixed_step_lhat(spec.instance.design, op.s, spec.instance.s_star);
  const RunTrace trace = run(cfg);
  ComparisonCell cell;
  cell.op = op.kind;
  cell.s = op.s;
  cell.seed = seed;
  cell.status = trace.status;
  cell.errors = error_curve(trace);
  cell.final_error_sq = cell.errors.back();
  cell.plateau_error_sq = plateau_level(cell.errors);
  cell.iters_to_floor = iters_to_plateau(cell.errors, cell.plateau_error_sq);
  cell.median_step = progress_step_median(trace, cell.iters_to_floor);
  cell.median_step_all = progress_step_median(trace, static_cast<Index>(trace.records.size()));
  return cell;
}

/// Runs HT and RT over every (s, seed) and picks, per operator, the s with the
/// smallest median final error.
inline ComparisonResult compare_operators(const ComparisonSpec& spec, const std::vector<Index>& s_grid,
                                          const std::vector<std::uint64_t>& seeds,
                                          std::size_t workers = 1) {
  if (s_grid.empty()) throw invalid_argument("s grid is empty");
  if (seeds.empty()) throw invalid_argument("seed list is empty");
  const std::vector<ThresholdKind> kinds = {ThresholdKind::Hard, ThresholdKind::Reciprocal};
  const std::size_t per_seed = kinds.size() * s_grid.size();

  // cell index = (kind * grid + s_index) * seeds + seed_index
  std::vector<ComparisonCell> cells(per_seed * seeds.size());
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    const SyntheticInstance inst = make_instance(spec.instance, seeds[si]);
    parallel_for(per_seed, workers, [&](std::size_t j) {
      const ThresholdKind kind = kinds[j / s_grid.size()];
      const Index s = s_grid[j % s_grid.size()];
      cells[j * seeds.size() + si] = run_cell(inst, spec, ThresholdSpec{kind, s}, seeds[si]);
    });
  }

  ComparisonResult result;
  result.cells = cells;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    ComparisonRow best;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < s_grid.size(); ++g) {
      std::vector<double> finals, iters;
      for (std::size_t si = 0; si < seeds.size(); ++si) {
        const auto& c = cells[(k * s_grid.size() + g) * seeds.size() + si];
        finals.push_back(c.final_error_sq);
        iters.push_back(static_cast<double>(c.iters_to_floor));
      }
      const double m = median(finals);
      if (m < best_err) {
        best_err = m;
        best.op = ThresholdSpec{kinds[k], s_grid[g]};
        best.best_s = s_grid[g];
        best.final_error_sq = m;
        best.iters_to_floor = static_cast<Index>(std::llround(median(iters)));
      }
    }
    result.rows.push_back(best);
  }
  return result;
}

// --- dimension sweep ------------------------------------------------------------

struct SweepRow {
  Index d = 0;
  Index n = 0;
  StepKind step = StepKind::SparsePolyak;
  double median_plateau_error_sq = 0.0;
  double median_iters_to_plateau = 0.0;
  double median_step_size = 0.0;      // progress phase
  double median_step_size_all = 0.0;  // every update
};

/// For each d, n = ceil(n_factor * s* * log d); runs every step rule in `steps`
/// with operator `op` over all seeds and reports medians across seeds.
inline std::vector<SweepRow> dimension_sweep(const InstanceSpec& base, double n_factor,
                                             const std::vector<Index>& dims, ThresholdSpec op,
                                             const std::vector<StepKind>& steps,
                                             const std::vector<std::uint64_t>& seeds, Index max_iters,
                                             double stop_tol, std::size_t workers = 1) {
  if (dims.empty() || steps.empty() || seeds.empty()) throw invalid_argument("empty sweep");
  std::vector<SweepRow> rows;
  for (Index d : dims) {
    ComparisonSpec spec;
    spec.instance = base;
    spec.instance.design.d = d;
    spec.instance.design.n = samples_for(d, base.s_star, n_factor);
    spec.max_iters = max_iters;
    spec.stop_tol = stop_tol;
    // cell index = seed_index * steps + step_index
    std::vector<ComparisonCell> cells(seeds.size() * steps.size());
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const SyntheticInstance inst = make_instance(spec.instance, seeds[si]);
      parallel_for(steps.size(), workers, [&](std::size_t k) {
        ComparisonSpec local = spec;
        local.step = steps[k];
        cells[si * steps.size() + k] = run_cell(inst, local, op, seeds[si]);
      });
    }
    for (std::size_t k = 0; k < steps.size(); ++k) {
      std::vector<double> plateau, iters, step, step_all;
      for (std::size_t si = 0; si < seeds.size(); ++si) {
        const auto& c = cells[si * steps.size() + k];
        plateau.push_back(c.plateau_error_sq);
        iters.push_back(static_cast<double>(c.iters_to_floor));
        step.push_back(c.median_step);
        step_all.push_back(c.median_step_all);
      }
      rows.push_back({d, spec.instance.design.n, steps[k], median(plateau), median(iters), median(step),
                      median(step_all)});
    }
  }
  return rows;
}

}  // namespace spolyak
