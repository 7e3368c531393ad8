#include <spolyak/harness/commands.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

using namespace spolyak;
using namespace spolyak::harness;
namespace fs = std::filesystem;

namespace {

FlatConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_flat_config(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("spolyak_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "exp.conf";
  std::ofstream(p) << text;
  return p;
}

struct CliResult {
  int code;
  std::string err;
};

CliResult cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = env + " \"" + std::string(SPOLYAK_CLI) + "\" " + args + " > \"" +
                          (dir / "stdout.txt").string() + "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(err)};
}

const char* kSmall =
    "design.d = 120\n"
    "truth.s_star = 4\n"
    "run.max_iters = 60\n"
    "run.seeds = 1..3\n"
    "sweep.d = 60, 120\n"
    "concavity.trials = 500\n"
    "check.pairs = 100\n";

}  // namespace

TEST(Config, ParsesCommentsAndWhitespace) {
  const auto c = parse("# header\n  design.d = 50   # trailing\n\nnoise.sigma=0.25\n");
  EXPECT_EQ(c.at("design.d"), "50");
  EXPECT_EQ(c.at("noise.sigma"), "0.25");
  EXPECT_EQ(c.size(), 2u);
}

TEST(Config, RejectsUnknownRepeatedAndMalformed) {
  try {
    parse("design.dd = 4\n");
    FAIL();
  } catch (const config_error& e) {
    EXPECT_EQ(e.key(), "design.dd");
  }
  EXPECT_THROW(parse("design.d = 4\ndesign.d = 5\n"), config_error);
  EXPECT_THROW(parse("design.d 4\n"), config_error);
  EXPECT_THROW(merge({}, {{"nope", "1"}}), config_error);
}

TEST(Config, Defaults) {
  const auto c = resolve({});
  EXPECT_EQ(c.instance.family, Family::Linear);
  EXPECT_EQ(c.instance.design.d, 1000);
  EXPECT_EQ(c.instance.s_star, 20);
  EXPECT_EQ(c.instance.design.n, samples_for(1000, 20, 5.0));
  EXPECT_EQ(c.op.s, 20);
  EXPECT_EQ(c.seeds.size(), 11u);
  EXPECT_EQ(c.grid_s, (std::vector<Index>{20, 27, 33, 40, 47}));
  EXPECT_EQ(c.ht_width, HtWidth::S);
  EXPECT_EQ(c.resolved.size(), schema().size());
  const auto logistic = resolve({{"experiment.family", "logistic"}});
  EXPECT_EQ(logistic.ht_width, HtWidth::TwoS);
}

TEST(Config, ErrorsNameTheKey) {
  const auto key_of = [](const FlatConfig& raw) {
    try {
      resolve(raw);
    } catch (const config_error& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(key_of({{"design.d", "10"}, {"operator.s", "11"}, {"truth.s_star", "2"}}), "operator.s");
  EXPECT_EQ(key_of({{"design.omega", "1"}}), "design.omega");
  EXPECT_EQ(key_of({{"design.d", "abc"}}), "design.d");
  EXPECT_EQ(key_of({{"truth.s_star", "2000"}}), "truth.s_star");
  EXPECT_EQ(key_of({{"run.seeds", "5..3"}}), "run.seeds");
  EXPECT_EQ(key_of({{"grid.s", "5000"}}), "grid.s");
  EXPECT_EQ(key_of({{"step.kind", "newton"}}), "step.kind");
  EXPECT_EQ(key_of({{"concavity.s", "9"}}), "concavity.s");
  EXPECT_EQ(key_of({{"check.assumptions", "rip"}}), "check.assumptions");
  EXPECT_EQ(key_of({{"runtime.workers", "0"}}), "runtime.workers");
  EXPECT_EQ(key_of({{"design.column_normalize", "maybe"}}), "design.column_normalize");
}

TEST(Config, SeedOverrideShiftsSeedList) {
  const fs::path dir = scratch("seed");
  const fs::path conf = write_config(dir, "run.seeds = 1..5\n");
  CliOverrides ov;
  ov.seed = 40;
  const auto c = load_config(conf, ov);
  EXPECT_EQ(c.seed, 40u);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{40, 41, 42, 43, 44}));
}

TEST(Config, SchemaDocumentStaysInSync) {
  std::ifstream in(fs::path(SPOLYAK_SOURCE_DIR) / "docs" / "config_schema.conf");
  ASSERT_TRUE(in);
  const FlatConfig doc = parse_flat_config(in);
  ASSERT_EQ(doc.size(), schema().size());
  for (const auto& k : schema()) {
    ASSERT_TRUE(doc.count(k.key)) << k.key;
    EXPECT_EQ(doc.at(k.key), k.default_value) << k.key;
  }
}

TEST(Artifacts, GitBlobHash) {
  // `printf 'hello\n' | git hash-object --stdin`
  EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST(Artifacts, ManifestIsStable) {
  const auto a = resolve({{"design.d", "50"}, {"truth.s_star", "3"}});
  const auto b = resolve({{"truth.s_star", "3"}, {"design.d", "50"}});
  EXPECT_EQ(manifest("run", a).dump(), manifest("run", b).dump());
  const auto m = manifest("run", a);
  EXPECT_EQ(m["schema_version"], kSchemaVersion);
  EXPECT_EQ(m["toolkit_version"], kToolkitVersion);
  EXPECT_EQ(m["config"].size(), schema().size());
  EXPECT_NE(manifest("run", resolve({{"design.d", "51"}, {"truth.s_star", "3"}}))["config_hash"], m["config_hash"]);
}

TEST(Artifacts, AtomicWriteLeavesNoTemporary) {
  const fs::path dir = scratch("atomic");
  write_atomic(dir / "a.txt", [](std::ostream& out) { out << "x"; });
  write_atomic(dir / "a.txt", [](std::ostream& out) { out << "y"; });
  EXPECT_EQ(slurp(dir / "a.txt"), "y");
  EXPECT_FALSE(fs::exists(dir / "a.txt.tmp"));
}

TEST(Cli, RunWritesTraceWithExactHeader) {
  const fs::path dir = scratch("run");
  const fs::path conf = write_config(dir, std::string(kSmall) + "output.dataset = both\n");
  const auto r = cli("run --config \"" + conf.string() + "\" --out \"" + (dir / "out").string() + "\"", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream trace(dir / "out" / "trace.csv");
  std::string header;
  std::getline(trace, header);
  EXPECT_EQ(header, "iter,f_value,step_size,grad_ht_norm_sq,error_sq,support_size");
  const auto summary = json::parse(slurp(dir / "out" / "summary.json"));
  EXPECT_TRUE(summary.contains("final_error_sq"));
  EXPECT_TRUE(summary.contains("iterations_to_floor"));
  EXPECT_TRUE(summary.contains("config_hash"));
  const auto man = json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(man["config_hash"], summary["config_hash"]);
  EXPECT_EQ(man["config"]["design.d"], "120");

  // The saved dataset replays the same objective.
  std::ifstream bin(dir / "out" / "dataset.bin", std::ios::binary);
  const auto saved = read_dataset_binary(bin);
  const auto cfg = resolve(parse(kSmall));
  const auto inst = make_instance(cfg.instance, cfg.seed);
  EXPECT_EQ(saved.data.X, inst.model.data().X);
  EXPECT_EQ(saved.seed, cfg.seed);
  std::ifstream csv(dir / "out" / "dataset.csv");
  EXPECT_EQ(read_dataset_csv(csv).y, inst.model.data().y);
}

TEST(Cli, ReplayIsByteIdentical) {
  const fs::path dir = scratch("replay");
  const fs::path conf = write_config(dir, kSmall);
  for (const char* out : {"a", "b"}) {
    const auto r = cli("run -c \"" + conf.string() + "\" --seed 7 --out \"" + (dir / out).string() + "\"", dir);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(dir / "a" / "trace.csv"), slurp(dir / "b" / "trace.csv"));
  EXPECT_EQ(slurp(dir / "a" / "summary.json"), slurp(dir / "b" / "summary.json"));
  const auto r = cli("run -c \"" + conf.string() + "\" --seed 8 --out \"" + (dir / "c").string() + "\"", dir);
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(slurp(dir / "a" / "trace.csv"), slurp(dir / "c" / "trace.csv"));
}

TEST(Cli, ConfigErrorExitsTwoAndNamesKey) {
  const fs::path dir = scratch("badcfg");
  const fs::path conf = write_config(dir, std::string(kSmall) + "operator.s = 500\n");
  const auto r = cli("run -c \"" + conf.string() + "\" --out \"" + (dir / "out").string() + "\"", dir);
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("operator.s"), std::string::npos) << r.err;
  const fs::path unknown = write_config(dir, "design.q = 1\n");
  const auto u = cli("run -c \"" + unknown.string() + "\"", dir);
  EXPECT_EQ(u.code, kExitConfig);
  EXPECT_NE(u.err.find("design.q"), std::string::npos);
}

TEST(Cli, UnattainableTargetExitsThree) {
  const fs::path dir = scratch("stall");
  // No signal and noise so small that every gradient entry underflows to zero,
  // while f - f_hat stays at 1 > 0.
  const fs::path conf = write_config(dir,
                                     "design.d = 3\ndesign.n = 10\ntruth.s_star = 0\noperator.s = 3\n"
                                     "noise.sigma = 1e-300\nstep.f_hat = -1\n");
  const auto r = cli("run -c \"" + conf.string() + "\" --out \"" + (dir / "out").string() + "\"", dir);
  EXPECT_EQ(r.code, kExitNumerical) << r.err;
  EXPECT_EQ(json::parse(slurp(dir / "out" / "summary.json"))["status"], "StalledZeroGradient");
}

TEST(Cli, OutputRootFromEnvironment) {
  const fs::path dir = scratch("env");
  const fs::path conf = write_config(dir, kSmall);
  const auto r = cli("concavity -c \"" + conf.string() + "\"", dir,
                     std::string(kOutputRootEnv) + "=\"" + (dir / "root").string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "root" / "concavity" / "concavity.json"));
  EXPECT_TRUE(fs::exists(dir / "root" / "concavity" / "manifest.json"));
}

TEST(Cli, GridSweepConcavityCheck) {
  const fs::path dir = scratch("all");
  const fs::path conf = write_config(dir, std::string(kSmall) + "grid.baselines = fixed, classic_polyak\n");
  for (const char* cmd : {"grid", "sweep", "concavity", "check"}) {
    const auto r = cli(std::string(cmd) + " -c \"" + conf.string() + "\" --workers 2 --out \"" +
                           (dir / cmd).string() + "\"",
                       dir);
    ASSERT_EQ(r.code, 0) << cmd << ": " << r.err;
    EXPECT_TRUE(fs::exists(dir / cmd / "manifest.json")) << cmd;
  }
  std::ifstream comp(dir / "grid" / "comparison.csv");
  std::string header;
  std::getline(comp, header);
  EXPECT_EQ(header, "operator,s,seed,final_error_sq,iters_to_floor");
  std::set<std::string> ops;
  std::string line;
  int rows = 0;
  while (std::getline(comp, line)) {
    ++rows;
    ops.insert(line.substr(0, line.find(',')));
  }
  EXPECT_EQ(rows, 2 * 5 * 3);  // operators x auto grid {4, 5, 7, 8, 9} x seeds
  EXPECT_EQ(ops, (std::set<std::string>{"HT", "RT"}));
  EXPECT_TRUE(fs::exists(dir / "grid" / "comparison_fixed.csv"));
  EXPECT_TRUE(fs::exists(dir / "grid" / "comparison_classic_polyak.csv"));
  EXPECT_TRUE(fs::exists(dir / "grid" / "curves.csv"));
  EXPECT_TRUE(fs::exists(dir / "grid" / "table.txt"));
  const auto sweep = json::parse(slurp(dir / "sweep" / "sweep_report.json"));
  EXPECT_TRUE(sweep.contains("sparse_polyak"));
  EXPECT_TRUE(sweep.contains("classic_polyak"));
  const auto conc = json::parse(slurp(dir / "concavity" / "concavity.json"));
  EXPECT_EQ(conc["cells"].size(), 2u);
  EXPECT_EQ(conc["cells_exceeding_bound"], 0);
  const auto check = json::parse(slurp(dir / "check" / "assumptions.json"));
  EXPECT_EQ(check["reports"].size(), 2u);
}

TEST(Cli, ConcavityAllCells) {
  const fs::path dir = scratch("cells");
  const fs::path conf = write_config(dir, "concavity.all_cells = true\nconcavity.dim = 3\nconcavity.s = 2\n"
                                          "concavity.trials = 200\n");
  const auto r = cli("concavity -c \"" + conf.string() + "\" --out \"" + (dir / "out").string() + "\"", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  // dim 1: (1,1); dim 2, 3: (1,1), (1,2), (2,2) -> 7 cells per operator
  EXPECT_EQ(json::parse(slurp(dir / "out" / "concavity.json"))["cells"].size(), 14u);
}
