#pragma once

// Subcommands behind the `spolyak` CLI. Each writes its artifacts into an
// output directory (every file replaced atomically) and returns an exit code:
//   0 success, 2 configuration error, 3 numerical failure, 1 anything else.

#include <spolyak/concavity.hpp>
#include <spolyak/dataset_io.hpp>
#include <spolyak/diagnostics.hpp>
#include <spolyak/harness/artifacts.hpp>
#include <spolyak/harness/config.hpp>
#include <spolyak/optimizer.hpp>
#include <spolyak/synthdata.hpp>
#include <spolyak/trace_io.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace spolyak::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr const char* kOutputRootEnv = "SPOLYAK_OUTPUT_ROOT";

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  FlatConfig sets;  // --set key=value
};

namespace fs = std::filesystem;

/// --out, then output.dir, then $SPOLYAK_OUTPUT_ROOT/<command>, then ./spolyak_out/<command>.
inline fs::path resolve_output_dir(const std::string& command, const ExperimentConfig& cfg,
                                   const CliOverrides& ov) {
  if (ov.out) return *ov.out;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) return fs::path(root) / command;
  return fs::path("spolyak_out") / command;
}

/// Parses, merges overrides and validates. Throws config_error.
inline ExperimentConfig load_config(const fs::path& config_path, const CliOverrides& ov) {
  std::ifstream in(config_path);
  if (!in) throw config_error("", "cannot read config file " + config_path.string());
  FlatConfig raw = merge(parse_flat_config(in), ov.sets);
  if (ov.workers) raw["runtime.workers"] = std::to_string(*ov.workers);
  if (ov.seed) {
    // The seed list keeps its length and starts at the override.
    const std::size_t count = resolve(raw).seeds.size();
    raw["run.seed"] = std::to_string(*ov.seed);
    raw["run.seeds"] = std::to_string(*ov.seed) + ".." + std::to_string(*ov.seed + count - 1);
  }
  return resolve(raw);
}

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
  write_atomic(path, [&](std::ostream& out) { out << text; });
}

inline void write_datasets(const fs::path& dir, const ExperimentConfig& cfg, const SyntheticInstance& inst) {
  const auto& data = inst.model.data();
  if (cfg.dataset_output == DatasetOutput::Csv || cfg.dataset_output == DatasetOutput::Both)
    write_atomic(dir / "dataset.csv", [&](std::ostream& out) { write_dataset_csv(out, data); });
  if (cfg.dataset_output == DatasetOutput::Binary || cfg.dataset_output == DatasetOutput::Both)
    write_atomic(dir / "dataset.bin",
                 [&](std::ostream& out) { write_dataset_binary(out, data, cfg.instance.family, cfg.seed); },
                 /*binary=*/true);
}

inline double resolve_fixed_gamma(const ExperimentConfig& cfg, Index s) {
  if (cfg.fixed_gamma) return *cfg.fixed_gamma;
  if (s < cfg.instance.s_star)
    throw config_error("step.fixed_gamma", "auto (1 / L_hat) needs operator.s >= truth.s_star");
  return fixed_step_lhat(cfg.instance.design, s, cfg.instance.s_star);
}

inline std::string step_file_suffix(StepKind k) { return std::string(to_string(k)); }

}  // namespace detail

// --- run ------------------------------------------------------------------------

inline int cmd_run(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  fs::create_directories(dir);
  const SyntheticInstance inst = make_instance(cfg.instance, cfg.seed);

  RunConfig rc;
  rc.model = &inst.model;
  rc.op = cfg.op;
  rc.step.kind = cfg.step_kind;
  rc.step.ht_width = cfg.ht_width;
  rc.step.f_hat = cfg.f_hat.value_or(inst.f_hat);
  if (cfg.step_kind == StepKind::Fixed) rc.step.fixed_gamma = detail::resolve_fixed_gamma(cfg, cfg.op.s);
  rc.theta0 = ParamVector::zeros(inst.model.d());
  rc.max_iters = cfg.max_iters;
  rc.stop_tol = cfg.stop_tol;
  rc.seed = cfg.seed;
  rc.truth = inst.truth;

  const RunTrace trace = run(rc);
  write_atomic(dir / "trace.csv", [&](std::ostream& out) { write_trace_csv(out, trace); });

  const auto err = error_curve(trace);
  const double plateau = plateau_level(err);
  const Index to_floor = iters_to_plateau(err, plateau);
  Index far = 0, near = 0;
  for (double e : err) (e >= 1.0 ? far : near) += 1;

  json summary;
  summary["status"] = std::string(to_string(trace.status));
  summary["iterations"] = static_cast<Index>(trace.records.size()) - 1;
  summary["final_f_value"] = number_or_null(trace.records.back().f_value);
  summary["f_hat"] = number_or_null(rc.step.f_hat);
  summary["final_error_sq"] = number_or_null(err.back());
  summary["plateau_error_sq"] = number_or_null(plateau);
  summary["iterations_to_floor"] = to_floor;
  summary["final_support_size"] = trace.final_theta.nnz();
  summary["median_step_size"] = number_or_null(progress_step_median(trace, to_floor));
  summary["median_step_size_all"] =
      number_or_null(progress_step_median(trace, static_cast<Index>(trace.records.size())));
  // Iterations with ||theta_t - theta*|| >= 1 versus < 1 (the two weak-RSC regimes).
  summary["iterations_far"] = far;
  summary["iterations_near"] = near;
  if (cfg.step_kind == StepKind::Fixed) summary["fixed_gamma"] = rc.step.fixed_gamma;
  const json man = manifest("run", cfg);
  summary["config_hash"] = man["config_hash"];
  summary["config"] = man["config"];
  write_json(dir / "summary.json", summary);
  write_json(dir / "manifest.json", man);
  detail::write_datasets(dir, cfg, inst);

  log << "run: status " << to_string(trace.status) << ", " << trace.records.size() - 1
      << " iterations, final error_sq " << format_g12(err.back()) << " -> " << dir.string() << '\n';
  if (trace.status == RunStatus::StalledZeroGradient) {
    log << "run: thresholded gradient vanished while f - f_hat > 0; f_hat is not attainable with s="
        << cfg.op.s << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

// --- grid -----------------------------------------------------------------------

namespace detail {

inline void write_comparison_csv(const fs::path& path, const ComparisonResult& result) {
  write_atomic(path, [&](std::ostream& out) {
    out << "operator,s,seed,final_error_sq,iters_to_floor\n";
    for (const auto& c : result.cells)
      out << to_string(c.op) << ',' << c.s << ',' << c.seed << ',' << format_g12(c.final_error_sq) << ','
          << c.iters_to_floor << '\n';
  });
}

// Per-iteration median across seeds; finished runs hold their last value.
inline std::vector<double> median_curve(const ComparisonResult& result, ThresholdKind op, Index s) {
  std::vector<const std::vector<double>*> curves;
  std::size_t len = 0;
  for (const auto& c : result.cells) {
    if (c.op != op || c.s != s) continue;
    curves.push_back(&c.errors);
    len = std::max(len, c.errors.size());
  }
  std::vector<double> out;
  for (std::size_t t = 0; t < len; ++t) {
    std::vector<double> at;
    for (const auto* e : curves) at.push_back(t < e->size() ? (*e)[t] : e->back());
    out.push_back(median(at));
  }
  return out;
}

}  // namespace detail

inline int cmd_grid(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  fs::create_directories(dir);
  std::vector<StepKind> kinds = {cfg.step_kind};
  for (StepKind b : cfg.grid_baselines)
    if (std::find(kinds.begin(), kinds.end(), b) == kinds.end()) kinds.push_back(b);
  for (StepKind k : kinds)
    if (k == StepKind::Fixed)
      for (Index s : cfg.grid_s) (void)detail::resolve_fixed_gamma(cfg, s);

  json rows = json::array();
  std::ostringstream table;
  table << "step_rule        operator  best_s  median_final_error_sq  median_iters_to_floor\n";
  std::ostringstream curves;
  curves << "step,operator,s,iter,median_error_sq\n";

  for (StepKind k : kinds) {
    ComparisonSpec spec;
    spec.instance = cfg.instance;
    spec.step = k;
    spec.max_iters = cfg.max_iters;
    spec.stop_tol = cfg.stop_tol;
    const ComparisonResult result = compare_operators(spec, cfg.grid_s, cfg.seeds, cfg.workers);
    const std::string file =
        k == cfg.step_kind ? "comparison.csv" : "comparison_" + detail::step_file_suffix(k) + ".csv";
    detail::write_comparison_csv(dir / file, result);
    for (const auto& row : result.rows) {
      json r;
      r["step_rule"] = std::string(to_string(k));
      r["operator"] = std::string(to_string(row.op.kind));
      r["best_s"] = row.best_s;
      r["final_error_sq"] = number_or_null(row.final_error_sq);
      r["iters_to_floor"] = row.iters_to_floor;
      rows.push_back(r);
      table << std::left << std::setw(17) << to_string(k) << std::setw(10) << to_string(row.op.kind)
            << std::setw(8) << row.best_s << std::setw(23) << format_g12(row.final_error_sq)
            << row.iters_to_floor << '\n';
      const auto curve = detail::median_curve(result, row.op.kind, row.best_s);
      for (std::size_t t = 0; t < curve.size(); ++t)
        curves << to_string(k) << ',' << to_string(row.op.kind) << ',' << row.best_s << ',' << t << ','
               << format_g12(curve[t]) << '\n';
    }
  }
  json summary;
  summary["rows"] = rows;
  const json man = manifest("grid", cfg);
  summary["config_hash"] = man["config_hash"];
  write_json(dir / "grid_summary.json", summary);
  detail::write_text(dir / "table.txt", table.str());
  detail::write_text(dir / "curves.csv", curves.str());
  write_json(dir / "manifest.json", man);
  log << table.str();
  return kExitOk;
}

// --- sweep ----------------------------------------------------------------------

inline int cmd_sweep(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  fs::create_directories(dir);
  const std::vector<StepKind> steps = {StepKind::SparsePolyak, StepKind::ClassicPolyak};
  for (Index d : cfg.sweep_d)
    if (cfg.op.s > d) throw config_error("operator.s", "exceeds sweep dimension d=" + std::to_string(d));
  const auto rows = dimension_sweep(cfg.instance, cfg.n_factor, cfg.sweep_d, cfg.op, steps, cfg.seeds,
                                    cfg.max_iters, cfg.stop_tol, cfg.workers);

  write_atomic(dir / "sweep.csv", [&](std::ostream& out) {
    out << "d,n,step_rule,median_plateau_error_sq,median_iters_to_plateau,median_step_size,median_step_size_all\n";
    for (const auto& r : rows)
      out << r.d << ',' << r.n << ',' << to_string(r.step) << ',' << format_g12(r.median_plateau_error_sq) << ','
          << format_g12(r.median_iters_to_plateau) << ',' << format_g12(r.median_step_size) << ','
          << format_g12(r.median_step_size_all) << '\n';
  });

  json report;
  for (StepKind k : steps) {
    std::vector<const SweepRow*> mine;
    for (const auto& r : rows)
      if (r.step == k) mine.push_back(&r);
    double it_lo = mine.front()->median_iters_to_plateau, it_hi = it_lo;
    double pl_lo = mine.front()->median_plateau_error_sq, pl_hi = pl_lo;
    bool step_decreasing = true;
    for (std::size_t i = 0; i < mine.size(); ++i) {
      it_lo = std::min(it_lo, mine[i]->median_iters_to_plateau);
      it_hi = std::max(it_hi, mine[i]->median_iters_to_plateau);
      pl_lo = std::min(pl_lo, mine[i]->median_plateau_error_sq);
      pl_hi = std::max(pl_hi, mine[i]->median_plateau_error_sq);
      if (i > 0 && !(mine[i]->median_step_size < mine[i - 1]->median_step_size)) step_decreasing = false;
    }
    json j;
    j["iters_to_plateau_ratio"] = number_or_null(it_lo > 0 ? it_hi / it_lo : std::numeric_limits<double>::infinity());
    j["plateau_error_ratio"] = number_or_null(pl_lo > 0 ? pl_hi / pl_lo : std::numeric_limits<double>::infinity());
    j["median_step_strictly_decreasing_in_d"] = step_decreasing;
    report[std::string(to_string(k))] = j;
  }
  const json man = manifest("sweep", cfg);
  report["config_hash"] = man["config_hash"];
  write_json(dir / "sweep_report.json", report);
  write_json(dir / "manifest.json", man);
  for (const auto& r : rows)
    log << "sweep: d=" << r.d << " n=" << r.n << ' ' << to_string(r.step) << " plateau "
        << format_g12(r.median_plateau_error_sq) << " iters " << format_g12(r.median_iters_to_plateau)
        << " step " << format_g12(r.median_step_size) << '\n';
  return kExitOk;
}

// --- concavity ------------------------------------------------------------------

inline int cmd_concavity(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  fs::create_directories(dir);
  const auto& cs = cfg.concavity;
  struct Cell {
    ThresholdKind kind;
    Index s_star, s, dim;
  };
  std::vector<Cell> cells;
  for (ThresholdKind kind : cs.kinds) {
    if (!cs.all_cells) {
      cells.push_back({kind, cs.s_star, cs.s, cs.dim});
      continue;
    }
    for (Index dim = 1; dim <= cs.dim; ++dim)
      for (Index s = 1; s <= std::min(cs.s, dim); ++s)
        for (Index ss = 1; ss <= s; ++ss) cells.push_back({kind, ss, s, dim});
  }
  std::vector<ConcavityEstimate> estimates(cells.size());
  parallel_for(cells.size(), cfg.workers, [&](std::size_t i) {
    const auto& c = cells[i];
    estimates[i] = empirical_relative_concavity(ThresholdSpec{c.kind, c.s}, c.s_star, c.dim, cs.trials, cfg.seed);
  });

  json list = json::array();
  Index exceeded = 0;
  for (const auto& e : estimates) {
    json j;
    j["operator"] = std::string(to_string(e.op.kind));
    j["s_star"] = e.s_star;
    j["s"] = e.op.s;
    j["dim"] = e.dim;
    j["trials"] = e.trials;
    j["evaluations"] = e.evaluations;
    j["estimate"] = number_or_null(e.estimate);
    if (e.theoretical_bound) {
      const bool within = e.estimate <= *e.theoretical_bound + 1e-9;
      if (!within) ++exceeded;
      j["theoretical_bound"] = *e.theoretical_bound;
      j["within_bound"] = within;
      j["ratio_to_bound"] = *e.theoretical_bound > 0 ? json(e.estimate / *e.theoretical_bound) : json(nullptr);
    } else {
      j["theoretical_bound"] = nullptr;
      j["within_bound"] = nullptr;
    }
    list.push_back(j);
  }
  json doc;
  doc["cells"] = list;
  doc["cells_exceeding_bound"] = exceeded;
  const json man = manifest("concavity", cfg);
  doc["config_hash"] = man["config_hash"];
  write_json(dir / "concavity.json", doc);
  write_json(dir / "manifest.json", man);
  log << "concavity: " << estimates.size() << " cells, " << exceeded << " above the bound\n";
  return kExitOk;
}

// --- check ----------------------------------------------------------------------

inline int cmd_check(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  fs::create_directories(dir);
  const SyntheticInstance inst = make_instance(cfg.instance, cfg.seed);
  RegularityParams params = compute_regularity(cfg.instance.design, cfg.check.s);
  params.mu *= cfg.check.mu_scale;
  params.L *= cfg.check.L_scale;

  json doc;
  json p;
  p["mu"] = params.mu;
  p["L"] = params.L;
  p["tau"] = params.tau;
  p["s"] = params.s;
  p["mu_bar"] = params.mu_bar();
  p["L_bar"] = params.L_bar();
  p["kappa_bar"] = params.kappa_bar() ? json(*params.kappa_bar()) : json(nullptr);
  p["theory_applicable"] = params.theory_applicable();
  doc["regularity"] = p;
  json reports = json::array();
  for (AssumptionKind kind : cfg.check.assumptions) {
    const auto rep = check_assumption(kind, inst.model, params, cfg.check.pairs, cfg.seed);
    json r;
    r["assumption"] = std::string(to_string(rep.assumption));
    r["pairs_tested"] = rep.pairs_tested;
    r["violations"] = rep.violations;
    r["worst_margin"] = number_or_null(rep.worst_margin);
    reports.push_back(r);
    log << "check: " << to_string(rep.assumption) << " " << rep.violations << '/' << rep.pairs_tested
        << " violations, worst margin " << format_g12(rep.worst_margin) << '\n';
  }
  doc["reports"] = reports;
  const json man = manifest("check", cfg);
  doc["config_hash"] = man["config_hash"];
  write_json(dir / "assumptions.json", doc);
  write_json(dir / "manifest.json", man);
  return kExitOk;
}

// --- dispatch -------------------------------------------------------------------

/// Loads the configuration and runs one subcommand, mapping failures to exit codes.
inline int execute(const std::string& command, const fs::path& config_path, const CliOverrides& ov,
                   std::ostream& log, std::ostream& err) {
  try {
    const ExperimentConfig cfg = load_config(config_path, ov);
    const fs::path dir = resolve_output_dir(command, cfg, ov);
    if (command == "run") return cmd_run(cfg, dir, log);
    if (command == "grid") return cmd_grid(cfg, dir, log);
    if (command == "sweep") return cmd_sweep(cfg, dir, log);
    if (command == "concavity") return cmd_concavity(cfg, dir, log);
    if (command == "check") return cmd_check(cfg, dir, log);
    err << "unknown command '" << command << "'\n";
    return kExitConfig;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const iteration_error& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const spolyak::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace spolyak::harness
