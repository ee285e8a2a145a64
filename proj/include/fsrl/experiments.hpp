#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fsrl/config.hpp"

namespace fsrl {

// Command-line overrides. Unset fields fall back to the [run] section of the
// config and then to defaults (seed 0, 5 seeds, 1 job).
struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seeds;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
  std::ostream* log = nullptr;  // summaries and assertion results
};

struct RunResult {
  std::string directory;  // <root>/<config hash>
  std::string config_hash;
  std::vector<std::string> checked;   // assertions evaluated
  std::vector<std::string> failures;  // the subset that failed
  bool passed() const { return failures.empty(); }
};

// verify-bounds, run-prediction, run-control, run-bandit, sweep-d, calibrate-grid.
const std::vector<std::string>& experiment_commands();

// --out, else $FSRL_OUT, else "runs".
std::string output_root(const RunOptions& options);

// Seed of run `index` under a master seed. Independent of how many runs there are.
std::uint64_t run_seed(std::uint64_t master, std::size_t index);

// Calls fn(0), ..., fn(n - 1) on up to `jobs` threads and rethrows the first
// exception (lowest index) after all have finished.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

// Runs one experiment and writes
//   <root>/<hash>/config.ini         effective config (hashed)
//   <root>/<hash>/<seed>/...          per-seed CSVs
//   <root>/<hash>/...                 aggregates, plot data, tables
//   <root>/<hash>/index.csv           every file written
// Throws ConfigError naming the offending field.
RunResult run_experiment(const std::string& command, Config config, const RunOptions& options);

}  // namespace fsrl
