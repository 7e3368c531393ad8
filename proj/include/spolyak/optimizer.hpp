#pragma once

// Thresholded gradient iterations with adaptive (sparse Polyak, classic Polyak)
// or fixed step sizes:
//
//   gamma_t     = step rule at theta_t
//   theta_{t+1} = Phi_s(theta_t - gamma_t grad f(theta_t))
//
// The sparse Polyak rule is max{f(theta_t) - f_hat, 0} / (5 ||HT_w(grad)||^2)
// with w = s, or w = 2s for weakly restricted strongly convex losses.

#include <spolyak/objectives.hpp>
#include <spolyak/synthdata.hpp>
#include <spolyak/thresholding.hpp>
#include <spolyak/types.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spolyak {

enum class StepKind { SparsePolyak, ClassicPolyak, Fixed };
enum class HtWidth { S, TwoS };
enum class RunStatus { MaxIters, Converged, StalledZeroGradient };

inline std::string_view to_string(StepKind k) {
  switch (k) {
    case StepKind::SparsePolyak: return "sparse_polyak";
    case StepKind::ClassicPolyak: return "classic_polyak";
    case StepKind::Fixed: return "fixed";
  }
  return "?";
}

inline std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::MaxIters: return "MaxIters";
    case RunStatus::Converged: return "Converged";
    case RunStatus::StalledZeroGradient: return "StalledZeroGradient";
  }
  return "?";
}

/// Linear losses use the s-wide gradient threshold, logistic ones the 2s-wide one.
inline HtWidth default_ht_width(Family family) {
  return family == Family::Logistic ? HtWidth::TwoS : HtWidth::S;
}

struct StepRule {
  StepKind kind = StepKind::SparsePolyak;
  HtWidth ht_width = HtWidth::S;
  double fixed_gamma = 0.0;
  double f_hat = std::numeric_limits<double>::quiet_NaN();

  void validate() const {
    if (kind == StepKind::Fixed) {
      if (!(fixed_gamma > 0.0) || !std::isfinite(fixed_gamma))
        throw invalid_argument("fixed step rule needs fixed_gamma > 0");
    } else if (!std::isfinite(f_hat)) {
      throw invalid_argument("Polyak step rules need a finite target value f_hat");
    }
  }
};

/// max{f - f_hat, 0} / (5 ||HT_w(grad)||^2); nullopt signals a stalled run
/// (positive gap with a zero thresholded gradient).
inline std::optional<double> sparse_polyak_step(double f_val, double f_hat, const VectorRef& grad,
                                                Index ht_width) {
  if (grad.size() < 1) throw invalid_argument("empty gradient");
  const double gap = std::max(f_val - f_hat, 0.0);
  const double den = 5.0 * hard_threshold_norm_sq(grad, ht_width);
  if (den == 0.0) {
    if (gap > 0.0) return std::nullopt;
    return 0.0;
  }
  return gap / den;
}

/// max{f - f_hat, 0} / ||grad||^2.
inline std::optional<double> classic_polyak_step(double f_val, double f_hat, const VectorRef& grad) {
  const double gap = std::max(f_val - f_hat, 0.0);
  const double den = grad.squaredNorm();
  if (den == 0.0) {
    if (gap > 0.0) return std::nullopt;
    return 0.0;
  }
  return gap / den;
}

/// 1 / L_hat with L_hat = lambda_max(Sigma) (3/4 + (2s + s*) / (10 s)).
inline double fixed_step_lhat(double lambda_max, Index s, Index s_star) {
  if (!(lambda_max > 0.0)) throw invalid_argument("lambda_max must be positive");
  if (s_star < 1 || s < s_star) throw invalid_argument("fixed step needs s >= s* >= 1");
  const double ratio = static_cast<double>(2 * s + s_star) / (10.0 * static_cast<double>(s));
  return 1.0 / (lambda_max * (0.75 + ratio));
}

inline double fixed_step_lhat(const DesignSpec& design, Index s, Index s_star) {
  return fixed_step_lhat(design_spectrum(design).max, s, s_star);
}

/// Squared radius 36 ||HT_s(grad f(theta_hat))||^2 / mu_bar^2 below which contraction is not guaranteed.
inline double theoretical_floor(const RegularityParams& regularity, double grad_at_truth_ht_norm) {
  const double mu_bar = regularity.mu_bar();
  if (!(mu_bar > 0.0)) throw invalid_argument("mu_bar <= 0: contraction theory does not apply");
  return 36.0 * grad_at_truth_ht_norm * grad_at_truth_ht_norm / (mu_bar * mu_bar);
}

struct IterationRecord {
  Index t = 0;
  double f_value = 0.0;
  double step_size = 0.0;
  double grad_ht_norm_sq = 0.0;
  std::optional<double> error_sq;
  Index support_size = 0;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  RunStatus status = RunStatus::MaxIters;
  ParamVector final_theta;

  std::optional<double> final_error_sq() const {
    return records.empty() ? std::nullopt : records.back().error_sq;
  }
};

/// Everything an observer can see about one update.
struct IterationView {
  Index t;
  const ParamVector& theta;
  const Vector& gradient;
  double step_size;
  const Vector& pre_threshold;  // theta_t - gamma_t g_t
  const ParamVector& next;
};

using IterationObserver = std::function<void(const IterationView&)>;

struct RunConfig {
  const ObjectiveModel* model = nullptr;
  ThresholdSpec op;
  StepRule step;
  ParamVector theta0;
  Index max_iters = 500;
  double stop_tol = 1e-12;  // stop when f - f_hat <= stop_tol * (|f_hat| + 1)
  std::uint64_t seed = 0;   // recorded with the run; the loop itself is deterministic
  std::optional<ParamVector> truth;
  IterationObserver observer;

  void validate() const {
    if (model == nullptr) throw invalid_argument("run config has no model");
    op.validate(model->d());
    step.validate();
    if (theta0.size() != model->d()) throw invalid_argument("theta0 dimension does not match d");
    if (theta0.nnz() > op.s) throw invalid_argument("theta0 has more than s nonzeros");
    if (max_iters < 0) throw invalid_argument("max_iters must be >= 0");
    if (!(stop_tol >= 0.0)) throw invalid_argument("stop_tol must be >= 0");
    if (truth && truth->size() != model->d()) throw invalid_argument("truth dimension does not match d");
  }
};

inline RunTrace run(const RunConfig& config) {
  config.validate();
  const ObjectiveModel& model = *config.model;
  const Index width = config.step.ht_width == HtWidth::TwoS ? 2 * config.op.s : config.op.s;
  // Fixed steps ignore f_hat and always use the full iteration budget.
  const bool has_target = config.step.kind != StepKind::Fixed && std::isfinite(config.step.f_hat);
  const double stop_level = config.stop_tol * (std::abs(config.step.f_hat) + 1.0);

  RunTrace trace;
  trace.records.reserve(static_cast<std::size_t>(config.max_iters) + 1);
  ParamVector theta = config.theta0;

  for (Index t = 0;; ++t) {
    IterationRecord rec;
    rec.t = t;
    rec.support_size = theta.nnz();
    Vector grad;
    try {
      auto vg = model.value_and_gradient(theta);
      rec.f_value = vg.value;
      grad = std::move(vg.gradient);
      if (!std::isfinite(rec.f_value) || !grad.allFinite())
        throw std::runtime_error("non-finite objective or gradient");
    } catch (const std::exception& e) {
      throw iteration_error(t, e.what());
    }
    rec.grad_ht_norm_sq = hard_threshold_norm_sq(grad, std::min(width, grad.size()));
    if (config.truth) rec.error_sq = (theta.values() - config.truth->values()).squaredNorm();

    std::optional<double> step;
    switch (config.step.kind) {
      case StepKind::SparsePolyak:
        step = sparse_polyak_step(rec.f_value, config.step.f_hat, grad, std::min(width, grad.size()));
        break;
      case StepKind::ClassicPolyak:
        step = classic_polyak_step(rec.f_value, config.step.f_hat, grad);
        break;
      case StepKind::Fixed:
        step = config.step.fixed_gamma;
        break;
    }
    rec.step_size = step.value_or(0.0);
    trace.records.push_back(rec);

    if (has_target && rec.f_value - config.step.f_hat <= stop_level) {
      trace.status = RunStatus::Converged;
      break;
    }
    if (!step) {
      trace.status = RunStatus::StalledZeroGradient;
      break;
    }
    if (t == config.max_iters) {
      trace.status = RunStatus::MaxIters;
      break;
    }
    Vector pre = theta.values() - *step * grad;
    ParamVector next(apply_threshold(config.op, pre));
    if (config.observer) config.observer(IterationView{t, theta, grad, *step, pre, next});
    theta = std::move(next);
  }
  trace.final_theta = std::move(theta);
  return trace;
}

/// Run configuration for a synthetic instance with theta0 = 0 and f_hat = f(theta*).
inline RunConfig synthetic_run_config(const SyntheticInstance& inst, ThresholdSpec op, StepKind kind,
                                      Index max_iters) {
  RunConfig cfg;
  cfg.model = &inst.model;
  cfg.op = op;
  cfg.step.kind = kind;
  cfg.step.ht_width = default_ht_width(inst.model.family());
  cfg.step.f_hat = inst.f_hat;
  cfg.theta0 = ParamVector::zeros(inst.model.d());
  cfg.max_iters = max_iters;
  cfg.truth = inst.truth;
  return cfg;
}

}  // namespace spolyak
