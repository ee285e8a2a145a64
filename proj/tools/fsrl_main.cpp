// Command-line front end for the experiment harness.
//
//   fsrl run-control --config configs/grid_q_learning.ini --seeds 5 --jobs 4 --assert

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fsrl/config.hpp"
#include "fsrl/experiments.hpp"

namespace {

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t seeds = 0;
  std::size_t jobs = 0;
  std::string out;
  bool assert_mode = false;
  bool quiet = false;
  std::vector<std::string> overrides;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "experiment config file");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--seeds", f.seeds, "number of independent runs")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output root (default $FSRL_OUT or ./runs)");
  cmd->add_flag("--assert", f.assert_mode, "exit nonzero when a configured assertion fails");
  cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--set", f.overrides, "override a field, e.g. --set control.episodes=100");
  cmd->add_flag("--quiet", f.quiet, "print nothing but errors");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiments with action repetition"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> help{
      {"verify-bounds", "check the value-loss bounds on random MDPs"},
      {"run-prediction", "TD_d(lambda) on the chain"},
      {"run-control", "learning curves for a control algorithm"},
      {"run-bandit", "EXP3.1 over repetition counts"},
      {"sweep-d", "final performance across d (and gamma)"},
      {"calibrate-grid", "pit penalties for target prices of inertia"},
  };
  for (const auto& [name, text] : help) add_flags(app.add_subcommand(name, text), flags);
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();

  try {
    fsrl::Config config;
    if (!flags.config.empty()) config = fsrl::Config::load(flags.config);
    for (const auto& kv : flags.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw fsrl::ConfigError("--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    fsrl::RunOptions options;
    if (sub->count("--seed")) options.seed = flags.seed;
    if (sub->count("--seeds")) options.seeds = flags.seeds;
    if (sub->count("--jobs")) options.jobs = flags.jobs;
    if (sub->count("--out")) options.out = flags.out;
    if (!flags.quiet) options.log = &std::cout;
    const fsrl::RunResult result = fsrl::run_experiment(command, config, options);
    if (flags.assert_mode) {
      if (result.checked.empty()) std::cerr << "note: this config binds no assertions\n";
      for (const auto& f : result.failures) std::cerr << "assertion failed: " << f << "\n";
      return result.passed() ? 0 : 1;
    }
    return 0;
  } catch (const fsrl::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
