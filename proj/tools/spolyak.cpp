// spolyak: run, grid, sweep, concavity and check experiments from a flat config file.

#include <spolyak/harness/commands.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  namespace h = spolyak::harness;
  CLI::App app{"Sparse Polyak experiment toolkit"};
  app.set_version_flag("--version", std::string(spolyak::kToolkitVersion));
  app.require_subcommand(1);

  std::string config_path;
  h::CliOverrides ov;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t workers = 1;
  std::vector<std::string> sets;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"run", "one optimizer run; writes trace.csv, summary.json"},
      {"grid", "HT vs RT over an s grid and seeds; writes comparison.csv"},
      {"sweep", "dimension sweep for sparse and classic Polyak; writes sweep.csv"},
      {"concavity", "empirical relative concavity; writes concavity.json"},
      {"check", "randomized assumption checks; writes assumptions.json"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "flat key = value config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "instance seed; seed lists start here");
    sub->add_option("-o,--out", out, "output directory");
    sub->add_option("-w,--workers", workers, "worker threads")->check(CLI::Range(1, 1024));
    sub->add_option("--set", sets, "extra key=value overrides");
  }

  CLI11_PARSE(app, argc, argv);
  const auto* chosen = app.get_subcommands().front();
  if (chosen->count("--seed")) ov.seed = seed;
  if (chosen->count("--out")) ov.out = out;
  if (chosen->count("--workers")) ov.workers = workers;
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "--set expects key=value, got '" << kv << "'\n";
      return h::kExitConfig;
    }
    ov.sets[h::detail::trim(kv.substr(0, eq))] = h::detail::trim(kv.substr(eq + 1));
  }
  return h::execute(chosen->get_name(), config_path, ov, std::cout, std::cerr);
}
