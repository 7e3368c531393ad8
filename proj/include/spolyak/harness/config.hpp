#pragma once

// Flat key-value experiment configuration.
//
//   # comment
//   design.omega = 0.5
//   grid.s = 20, 27, 33
//
// Every key must appear in schema(); unknown or repeated keys are rejected.
// Missing keys take their schema default. docs/config_schema.conf lists the
// same table with documentation.

#include <spolyak/concavity.hpp>
#include <spolyak/diagnostics.hpp>
#include <spolyak/optimizer.hpp>
#include <spolyak/synthdata.hpp>
#include <spolyak/thresholding.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spolyak::harness {

inline constexpr int kSchemaVersion = 1;

/// A configuration problem attributable to one key (or to a line of the file).
class config_error : public std::runtime_error {
 public:
  config_error(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct KeySpec {
  std::string key;
  std::string default_value;
  std::string doc;
};

inline const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> table = {
      {"experiment.family", "linear", "linear | logistic"},
      {"design.n", "0", "samples; 0 derives ceil(design.n_factor * s_star * log d)"},
      {"design.n_factor", "5", "multiplier used when design.n = 0"},
      {"design.d", "1000", "features"},
      {"design.omega", "0.5", "AR(1) correlation in [0, 1)"},
      {"design.column_normalize", "false", "rescale columns to ||X_j|| / sqrt(n) = 1"},
      {"truth.s_star", "20", "nonzeros in the ground truth"},
      {"noise.sigma", "0.5", "noise scale (linear family)"},
      {"operator.kind", "ht", "ht | rt"},
      {"operator.s", "0", "iterate sparsity; 0 means s_star"},
      {"step.kind", "sparse_polyak", "sparse_polyak | classic_polyak | fixed"},
      {"step.ht_width", "auto", "auto | s | 2s (auto: s for linear, 2s for logistic)"},
      {"step.fixed_gamma", "auto", "fixed step size; auto = 1 / L_hat from the design spectrum"},
      {"step.f_hat", "truth", "target value; truth = f(theta*)"},
      {"run.max_iters", "500", "iteration budget"},
      {"run.stop_tol", "1e-12", "stop when f - f_hat <= stop_tol * (|f_hat| + 1)"},
      {"run.seed", "1", "instance seed for `run`"},
      {"run.seeds", "1..11", "seed list for grid and sweep (odd count recommended)"},
      {"grid.s", "auto", "sparsity grid; auto = s_star * {1, 4/3, 5/3, 2, 7/3}"},
      {"grid.baselines", "none", "extra step rules compared on the same grid: none | fixed, classic_polyak"},
      {"sweep.d", "500, 2000", "dimensions; n = ceil(design.n_factor * s_star * log d) for each"},
      {"concavity.kind", "both", "ht | rt | both"},
      {"concavity.s_star", "1", "target sparsity"},
      {"concavity.s", "4", "operator sparsity"},
      {"concavity.dim", "8", "vector dimension"},
      {"concavity.trials", "100000", "randomized trials per cell"},
      {"concavity.all_cells", "false", "certify every (s*, s, dim) up to the given s and dim"},
      {"check.assumptions", "rsc, rss", "any of rsc, rss, weak_rsc"},
      {"check.pairs", "10000", "pairs per assumption"},
      {"check.s", "0", "sparsity of sampled pairs and of the regularity constants; 0 means s_star"},
      {"check.mu_scale", "1", "multiplier applied to the plug-in mu (values > 1 test checker power)"},
      {"check.L_scale", "1", "multiplier applied to the plug-in L"},
      {"output.dir", "", "artifact directory (overridden by --out)"},
      {"output.dataset", "none", "none | csv | binary | both"},
      {"runtime.workers", "1", "worker threads for grid and sweep cells"},
  };
  return table;
}

inline const KeySpec* find_key(const std::string& key) {
  for (const auto& k : schema())
    if (k.key == key) return &k;
  return nullptr;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

/// Raw key -> value entries as written in a file (plus overrides).
using FlatConfig = std::map<std::string, std::string>;

inline FlatConfig parse_flat_config(std::istream& in) {
  FlatConfig out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("", "line " + std::to_string(line_no) + ": expected `key = value`");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!find_key(key)) throw config_error(key, "unknown key (line " + std::to_string(line_no) + ")");
    if (out.count(key)) throw config_error(key, "repeated key (line " + std::to_string(line_no) + ")");
    out[key] = value;
  }
  return out;
}

/// Overlays `overrides` on `base`; override keys are schema-checked too.
inline FlatConfig merge(FlatConfig base, const FlatConfig& overrides) {
  for (const auto& [k, v] : overrides) {
    if (!find_key(k)) throw config_error(k, "unknown key");
    base[k] = v;
  }
  return base;
}

struct ConcavitySettings {
  std::vector<ThresholdKind> kinds;
  Index s_star = 1;
  Index s = 4;
  Index dim = 8;
  Index trials = 100000;
  bool all_cells = false;
};

struct CheckSettings {
  std::vector<AssumptionKind> assumptions;
  Index pairs = 10000;
  Index s = 0;
  double mu_scale = 1.0;
  double L_scale = 1.0;
};

enum class DatasetOutput { None, Csv, Binary, Both };

/// Typed, validated view of a configuration.
struct ExperimentConfig {
  InstanceSpec instance;
  double n_factor = 5.0;
  bool derive_n = true;
  ThresholdSpec op;
  StepKind step_kind = StepKind::SparsePolyak;
  HtWidth ht_width = HtWidth::S;
  std::optional<double> fixed_gamma;  // nullopt: 1 / L_hat
  std::optional<double> f_hat;        // nullopt: f(theta*)
  Index max_iters = 500;
  double stop_tol = 1e-12;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;
  std::vector<Index> grid_s;
  std::vector<StepKind> grid_baselines;
  std::vector<Index> sweep_d;
  ConcavitySettings concavity;
  CheckSettings check;
  std::string output_dir;
  DatasetOutput dataset_output = DatasetOutput::None;
  std::size_t workers = 1;
  FlatConfig resolved;  // every schema key with its effective text value
};

namespace detail {

class Reader {
 public:
  explicit Reader(const FlatConfig& raw) {
    for (const auto& k : schema()) values_[k.key] = k.default_value;
    for (const auto& [k, v] : raw) {
      if (!find_key(k)) throw config_error(k, "unknown key");
      values_[k] = v;
    }
  }

  const FlatConfig& values() const { return values_; }
  const std::string& text(const std::string& key) const { return values_.at(key); }

  long long integer(const std::string& key, long long lo, long long hi) const {
    return parse_int(key, text(key), lo, hi);
  }

  double real(const std::string& key) const {
    const std::string& v = text(key);
    try {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw config_error(key, "expected a finite number, got '" + v + "'");
    }
  }

  bool boolean(const std::string& key) const {
    const std::string& v = text(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error(key, "expected true or false, got '" + v + "'");
  }

  std::string choice(const std::string& key, const std::vector<std::string>& options) const {
    const std::string& v = text(key);
    if (std::find(options.begin(), options.end(), v) == options.end()) {
      std::string list;
      for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
      throw config_error(key, "expected one of {" + list + "}, got '" + v + "'");
    }
    return v;
  }

  /// Comma-separated integers; `a..b` expands to an inclusive range.
  std::vector<long long> int_list(const std::string& key, long long lo, long long hi) const {
    std::vector<long long> out;
    for (const auto& item : split_list(text(key))) {
      const auto dots = item.find("..");
      if (dots != std::string::npos) {
        const long long a = parse_int(key, trim(item.substr(0, dots)), lo, hi);
        const long long b = parse_int(key, trim(item.substr(dots + 2)), lo, hi);
        if (b < a) throw config_error(key, "empty range '" + item + "'");
        for (long long x = a; x <= b; ++x) out.push_back(x);
      } else {
        out.push_back(parse_int(key, item, lo, hi));
      }
    }
    return out;
  }

  std::vector<std::string> list(const std::string& key) const { return split_list(text(key)); }

 private:
  static long long parse_int(const std::string& key, const std::string& v, long long lo, long long hi) {
    long long x = 0;
    try {
      std::size_t used = 0;
      x = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw config_error(key, "expected an integer, got '" + v + "'");
    }
    if (x < lo || x > hi)
      throw config_error(key, "value " + v + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
  }

  FlatConfig values_;
};

inline StepKind parse_step_kind(const std::string& key, const std::string& v) {
  if (v == "sparse_polyak") return StepKind::SparsePolyak;
  if (v == "classic_polyak") return StepKind::ClassicPolyak;
  if (v == "fixed") return StepKind::Fixed;
  throw config_error(key, "unknown step rule '" + v + "'");
}

}  // namespace detail

inline constexpr long long kMaxInt = 1LL << 40;

inline ExperimentConfig resolve(const FlatConfig& raw) {
  const detail::Reader r(raw);
  ExperimentConfig c;

  c.instance.family = r.choice("experiment.family", {"linear", "logistic"}) == "linear" ? Family::Linear
                                                                                        : Family::Logistic;
  c.instance.design.d = static_cast<Index>(r.integer("design.d", 1, kMaxInt));
  c.instance.design.omega = r.real("design.omega");
  if (!(c.instance.design.omega >= 0.0 && c.instance.design.omega < 1.0))
    throw config_error("design.omega", "must lie in [0, 1)");
  c.instance.design.column_normalize = r.boolean("design.column_normalize");
  c.instance.s_star = static_cast<Index>(r.integer("truth.s_star", 0, kMaxInt));
  if (c.instance.s_star > c.instance.design.d)
    throw config_error("truth.s_star", "exceeds design.d=" + std::to_string(c.instance.design.d));
  c.instance.sigma = r.real("noise.sigma");
  if (c.instance.family == Family::Linear && !(c.instance.sigma > 0.0))
    throw config_error("noise.sigma", "must be positive for the linear family");

  c.n_factor = r.real("design.n_factor");
  if (!(c.n_factor > 0.0)) throw config_error("design.n_factor", "must be positive");
  const auto n = static_cast<Index>(r.integer("design.n", 0, kMaxInt));
  c.derive_n = n == 0;
  if (c.derive_n && c.instance.s_star == 0)
    throw config_error("design.n", "cannot derive n when truth.s_star = 0; set design.n");
  c.instance.design.n = c.derive_n ? samples_for(c.instance.design.d, c.instance.s_star, c.n_factor) : n;

  c.op.kind = r.choice("operator.kind", {"ht", "rt"}) == "ht" ? ThresholdKind::Hard : ThresholdKind::Reciprocal;
  const auto s = static_cast<Index>(r.integer("operator.s", 0, kMaxInt));
  c.op.s = s == 0 ? std::max<Index>(1, c.instance.s_star) : s;
  if (c.op.s > c.instance.design.d)
    throw config_error("operator.s", "s=" + std::to_string(c.op.s) + " exceeds design.d=" +
                                         std::to_string(c.instance.design.d));

  c.step_kind = detail::parse_step_kind("step.kind",
                                        r.choice("step.kind", {"sparse_polyak", "classic_polyak", "fixed"}));
  const std::string width = r.choice("step.ht_width", {"auto", "s", "2s"});
  c.ht_width = width == "auto" ? default_ht_width(c.instance.family) : (width == "s" ? HtWidth::S : HtWidth::TwoS);
  if (r.text("step.fixed_gamma") != "auto") {
    c.fixed_gamma = r.real("step.fixed_gamma");
    if (!(*c.fixed_gamma > 0.0)) throw config_error("step.fixed_gamma", "must be positive");
  } else if (c.step_kind == StepKind::Fixed && c.instance.s_star < 1) {
    throw config_error("step.fixed_gamma", "auto needs truth.s_star >= 1");
  }
  if (r.text("step.f_hat") != "truth") c.f_hat = r.real("step.f_hat");

  c.max_iters = static_cast<Index>(r.integer("run.max_iters", 0, kMaxInt));
  c.stop_tol = r.real("run.stop_tol");
  if (c.stop_tol < 0.0) throw config_error("run.stop_tol", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(r.integer("run.seed", 0, kMaxInt));
  for (long long x : r.int_list("run.seeds", 0, kMaxInt)) c.seeds.push_back(static_cast<std::uint64_t>(x));
  if (c.seeds.empty()) throw config_error("run.seeds", "needs at least one seed");

  if (r.text("grid.s") == "auto") {
    for (double ratio : {1.0, 4.0 / 3.0, 5.0 / 3.0, 2.0, 7.0 / 3.0}) {
      const auto g = std::max<Index>(1, static_cast<Index>(std::llround(ratio * static_cast<double>(c.instance.s_star))));
      if (g <= c.instance.design.d && (c.grid_s.empty() || c.grid_s.back() != g)) c.grid_s.push_back(g);
    }
  } else {
    for (long long x : r.int_list("grid.s", 1, kMaxInt)) {
      if (x > c.instance.design.d)
        throw config_error("grid.s", "s=" + std::to_string(x) + " exceeds design.d");
      c.grid_s.push_back(static_cast<Index>(x));
    }
  }
  if (c.grid_s.empty()) throw config_error("grid.s", "grid is empty");
  for (const auto& b : r.list("grid.baselines")) {
    if (b == "none") continue;
    c.grid_baselines.push_back(detail::parse_step_kind("grid.baselines", b));
  }

  for (long long x : r.int_list("sweep.d", 2, kMaxInt)) {
    if (x < c.instance.s_star) throw config_error("sweep.d", "d=" + std::to_string(x) + " is below s_star");
    c.sweep_d.push_back(static_cast<Index>(x));
  }
  if (c.sweep_d.empty()) throw config_error("sweep.d", "needs at least one dimension");

  const std::string ck = r.choice("concavity.kind", {"ht", "rt", "both"});
  if (ck != "rt") c.concavity.kinds.push_back(ThresholdKind::Hard);
  if (ck != "ht") c.concavity.kinds.push_back(ThresholdKind::Reciprocal);
  c.concavity.s_star = static_cast<Index>(r.integer("concavity.s_star", 1, kMaxInt));
  c.concavity.s = static_cast<Index>(r.integer("concavity.s", 1, kMaxInt));
  c.concavity.dim = static_cast<Index>(r.integer("concavity.dim", 1, kMaxInt));
  c.concavity.trials = static_cast<Index>(r.integer("concavity.trials", 1, kMaxInt));
  c.concavity.all_cells = r.boolean("concavity.all_cells");
  if (c.concavity.s_star > c.concavity.s) throw config_error("concavity.s_star", "exceeds concavity.s");
  if (c.concavity.s > c.concavity.dim) throw config_error("concavity.s", "exceeds concavity.dim");

  for (const auto& a : r.list("check.assumptions")) {
    if (a == "rsc") c.check.assumptions.push_back(AssumptionKind::RSC);
    else if (a == "rss") c.check.assumptions.push_back(AssumptionKind::RSS);
    else if (a == "weak_rsc") c.check.assumptions.push_back(AssumptionKind::WeakRSC);
    else throw config_error("check.assumptions", "unknown assumption '" + a + "'");
  }
  c.check.pairs = static_cast<Index>(r.integer("check.pairs", 1, kMaxInt));
  const auto cs = static_cast<Index>(r.integer("check.s", 0, kMaxInt));
  c.check.s = cs == 0 ? std::max<Index>(1, c.instance.s_star) : cs;
  if (c.check.s > c.instance.design.d) throw config_error("check.s", "exceeds design.d");
  c.check.mu_scale = r.real("check.mu_scale");
  c.check.L_scale = r.real("check.L_scale");

  c.output_dir = r.text("output.dir");
  const std::string ds = r.choice("output.dataset", {"none", "csv", "binary", "both"});
  c.dataset_output = ds == "none" ? DatasetOutput::None
                     : ds == "csv" ? DatasetOutput::Csv
                     : ds == "binary" ? DatasetOutput::Binary
                                      : DatasetOutput::Both;
  c.workers = static_cast<std::size_t>(r.integer("runtime.workers", 1, 1024));

  c.resolved = r.values();
  return c;
}

/// `key = value` lines in key order: the hashed and echoed form of a configuration.
inline std::string canonical_text(const FlatConfig& resolved) {
  std::string out;
  for (const auto& [k, v] : resolved) out += k + " = " + v + "\n";
  return out;
}

}  // namespace spolyak::harness
