#include "fsrl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "fsrl/acrobot.hpp"
#include "fsrl/bandit.hpp"
#include "fsrl/bounds.hpp"
#include "fsrl/chain.hpp"
#include "fsrl/features.hpp"
#include "fsrl/gridworld.hpp"
#include "fsrl/prediction.hpp"
#include "fsrl/q_learning.hpp"
#include "fsrl/random_models.hpp"
#include "fsrl/reinforce.hpp"
#include "fsrl/report.hpp"
#include "fsrl/rng.hpp"
#include "fsrl/sarsa.hpp"
#include "fsrl/stats.hpp"
#include "fsrl/tabular_env.hpp"

namespace fsrl {

namespace fs = std::filesystem;

const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> kCommands{"verify-bounds", "run-prediction",
                                                  "run-control",   "run-bandit",
                                                  "sweep-d",       "calibrate-grid"};
  return kCommands;
}

std::string output_root(const RunOptions& options) {
  if (options.out) return *options.out;
  if (const char* env = std::getenv("FSRL_OUT"); env && *env) return env;
  return "runs";
}

std::uint64_t run_seed(std::uint64_t master, std::size_t index) {
  return derive_seed(master, {static_cast<std::uint64_t>(index)});
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto body = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) body(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

// Output bookkeeping shared by every command.
class RunDir {
 public:
  RunDir(std::string root, std::string hash) : dir_(fs::path(root) / hash) {
    fs::create_directories(dir_);
  }

  const fs::path& path() const { return dir_; }

  std::ofstream open(const std::string& kind, const std::string& relative) {
    const fs::path p = dir_ / relative;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    std::lock_guard<std::mutex> lock(mu_);
    index_.emplace_back(kind, relative);
    return out;
  }

  void write_index() {
    std::sort(index_.begin(), index_.end(), [](const auto& a, const auto& b) {
      return a.second < b.second;
    });
    std::ofstream out(dir_ / "index.csv", std::ios::binary);
    write_csv_row(out, {"kind", "path"});
    for (const auto& [kind, rel] : index_) write_csv_row(out, {kind, rel});
  }

 private:
  fs::path dir_;
  std::mutex mu_;
  std::vector<std::pair<std::string, std::string>> index_;
};

struct Context {
  const Config* cfg = nullptr;
  std::vector<std::uint64_t> seeds;
  std::size_t jobs = 1;
  RunDir* dir = nullptr;
  std::ostream* log = nullptr;
  RunResult* result = nullptr;

  std::string seed_dir(std::size_t i) const { return std::to_string(seeds[i]); }

  void check(const std::string& name, bool ok, const std::string& detail) {
    result->checked.push_back(name);
    if (!ok) result->failures.push_back(name + ": " + detail);
    if (log) *log << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
  }
};

std::string num(double x) { return format_number(x); }
std::string num(std::size_t x) { return std::to_string(x); }

std::string join(const std::vector<std::size_t>& xs, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + std::to_string(xs[i]);
  return out;
}

// ---- shared config readers ----------------------------------------------

GridWorldSpec grid_from_config(const Config& c) {
  const std::string map = c.get_string("grid.map", "canonical");
  GridWorldSpec g = map == "canonical" ? canonical_grid() : load_grid(c.resolve_path(map));
  g.max_steps = c.get_size("grid.max_steps", g.max_steps);
  g.step_reward = c.get_double("grid.step_reward", g.step_reward);
  g.action_retention = c.get_double("grid.action_retention", g.action_retention);
  if (c.has("grid.redraw")) {
    const std::string r = c.get_string("grid.redraw");
    if (r == "all") {
      g.redraw = RedrawRule::kAllActions;
    } else if (r == "others") {
      g.redraw = RedrawRule::kOtherActions;
    } else {
      throw ConfigError("config: field 'grid.redraw' must be 'all' or 'others'");
    }
  }
  if (c.has("grid.target_delta")) {
    if (c.has("grid.pit_penalty")) {
      throw ConfigError("config: give only one of 'grid.pit_penalty' and 'grid.target_delta'");
    }
    g.pit_penalty = calibrate_pit_penalty(g, c.get_double("grid.target_delta")).pit_penalty;
  } else {
    g.pit_penalty = c.get_double("grid.pit_penalty", g.pit_penalty);
  }
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: grid: ") + e.what());
  }
  return g;
}

SarsaConfig sarsa_from_config(const Config& c) {
  SarsaConfig s;
  s.alpha = c.get_double("sarsa.alpha", s.alpha);
  s.lambda = c.get_double("sarsa.lambda", s.lambda);
  s.epsilon0 = c.get_double("sarsa.epsilon0", s.epsilon0);
  s.epsilon_decay = c.get_double("sarsa.epsilon_decay", s.epsilon_decay);
  s.normalize_alpha = c.get_bool("sarsa.normalize_alpha", s.normalize_alpha);
  const std::string trace = c.get_string("sarsa.trace", "replacing");
  if (trace == "replacing") {
    s.trace = TraceKind::kReplacing;
  } else if (trace == "accumulating") {
    s.trace = TraceKind::kAccumulating;
  } else {
    throw ConfigError("config: field 'sarsa.trace' must be 'replacing' or 'accumulating'");
  }
  return s;
}

struct AcrobotSetup {
  AcrobotParams params;
  std::size_t tilings = 8;
  std::size_t tiles = 8;
};

AcrobotSetup acrobot_from_config(const Config& c) {
  AcrobotSetup a;
  a.params.dt = c.get_double("acrobot.dt", a.params.dt);
  a.params.substeps = c.get_size("acrobot.substeps", a.params.substeps);
  a.params.max_steps = c.get_size("acrobot.max_steps", a.params.max_steps);
  a.params.start_range = c.get_double("acrobot.start_range", a.params.start_range);
  a.tilings = c.get_size("acrobot.tilings", a.tilings);
  a.tiles = c.get_size("acrobot.tiles", a.tiles);
  return a;
}

// ---- verify-bounds ------------------------------------------------------

struct BoundRow {
  std::string check;
  BoundReport report;
};

void verify_bounds(Context& ctx) {
  const Config& c = *ctx.cfg;
  const std::size_t n_mdps = c.get_size("bounds.n_mdps", 40);
  const std::size_t n_states = c.get_size("bounds.n_states", 8);
  const std::size_t n_actions = c.get_size("bounds.n_actions", 3);
  const std::vector<double> gammas = c.get_doubles("bounds.gammas", {0.5, 0.9, 0.99});
  const std::vector<std::size_t> ds = c.get_sizes("bounds.ds", {2, 3, 5});
  const double epsilon = c.get_double("bounds.epsilon", 0.1);
  const bool reversible = c.get_bool("bounds.reversible", true);
  const std::size_t grid_w = c.get_size("bounds.grid_width", 3);
  const std::size_t grid_h = c.get_size("bounds.grid_height", 3);
  for (double g : gammas) {
    if (!(g > 0.0 && g < 1.0)) throw ConfigError("config: field 'bounds.gammas' needs 0 < gamma < 1");
  }
  for (std::size_t d : ds) {
    if (d == 0) throw ConfigError("config: field 'bounds.ds' needs d >= 1");
  }

  std::vector<std::vector<BoundRow>> rows(ctx.seeds.size());
  parallel_for(ctx.seeds.size(), ctx.jobs, [&](std::size_t i) {
    Rng model_rng = make_rng(ctx.seeds[i], {stream::kModel});
    Rng noise_rng = make_rng(ctx.seeds[i], {stream::kNoise});
    auto& out = rows[i];
    for (double gamma : gammas) {
      for (std::size_t m = 0; m < n_mdps; ++m) {
        const TabularMDP mdp = random_mdp(n_states, n_actions, gamma, model_rng);
        const ActionValues q_star = value_iteration(mdp);
        const double delta = price_of_inertia(mdp, q_star).value;
        for (std::size_t d : ds) {
          const DeficitReport r = verify_value_deficit(mdp, d);
          out.push_back({"value_deficit_v", r.state_values});
          out.push_back({"value_deficit_q", r.action_values});
        }
        ActionValues q_hat = q_star;
        for (Eigen::Index s = 0; s < q_hat.values.rows(); ++s) {
          for (Eigen::Index a = 0; a < q_hat.values.cols(); ++a) {
            q_hat.values(s, a) += uniform(noise_rng, -epsilon, epsilon);
          }
        }
        out.push_back({"greedy_loss", greedy_loss_bound_check(mdp, q_star, q_hat)});
        for (std::size_t d : ds) {
          out.push_back({"aggregate", aggregate_bound_check(mdp, q_star, delta, q_hat, d).report});
        }
        if (reversible) {
          const TabularMDP rev = random_reversible_mdp(grid_w, grid_h, gamma, model_rng);
          const ReversibilityReport rr = check_reversible_inertia(rev);
          BoundReport sharp = rr.sharp;
          sharp.holds = sharp.holds && rr.reversible;
          out.push_back({"reversible_inertia", sharp});
        }
      }
    }
  });

  // check, gamma, d -> (count, holds, min slack)
  std::map<std::tuple<std::string, double, std::size_t>, std::tuple<std::size_t, std::size_t, double>>
      summary;
  for (std::size_t i = 0; i < ctx.seeds.size(); ++i) {
    std::ofstream out = ctx.dir->open("seed", ctx.seed_dir(i) + "/bounds.csv");
    write_csv_row(out, {"check", "bound", "exact", "slack", "holds", "gamma", "d", "delta",
                        "epsilon", "seed"});
    for (const auto& row : rows[i]) {
      const BoundReport& r = row.report;
      write_csv_row(out, {row.check, num(r.bound_value), num(r.exact_value), num(r.slack),
                          r.holds ? "true" : "false", num(r.context.gamma), num(r.context.d),
                          num(r.context.delta), num(r.context.epsilon), num(ctx.seeds[i])});
      auto& [n, held, min_slack] =
          summary.try_emplace({row.check, r.context.gamma, r.context.d}, 0, 0, INFINITY)
              .first->second;
      ++n;
      held += r.holds;
      min_slack = std::min(min_slack, r.slack);
    }
  }
  std::ofstream agg = ctx.dir->open("aggregate", "bounds_summary.csv");
  write_csv_row(agg, {"check", "gamma", "d", "n", "holds", "min_slack"});
  bool all = true;
  std::size_t total = 0, held_total = 0;
  for (const auto& [key, val] : summary) {
    const auto& [check, gamma, d] = key;
    const auto& [n, held, min_slack] = val;
    write_csv_row(agg, {check, num(gamma), num(d), num(n), num(held), num(min_slack)});
    all = all && held == n;
    total += n;
    held_total += held;
  }
  if (c.get_bool("assert.all_hold", true)) {
    ctx.check("all bounds hold", all,
              std::to_string(held_total) + " of " + std::to_string(total) + " reports hold");
  }
}

// ---- run-prediction -----------------------------------------------------

void run_prediction(Context& ctx) {
  const Config& c = *ctx.cfg;
  ChainSpec spec;
  spec.n_states = c.get_size("chain.n_states", spec.n_states);
  spec.gamma = c.get_double("chain.gamma", spec.gamma);
  spec.exponent = c.get_double("chain.exponent", spec.exponent);
  spec.reward_noise = c.get_double("chain.reward_noise", spec.reward_noise);
  spec.realizable = c.get_bool("chain.realizable", spec.realizable);
  const std::uint64_t model_seed = c.get_u64("chain.model_seed", 0);
  const std::vector<std::size_t> ds = c.get_sizes("td.ds", {1, 2, 4, 8});
  const std::vector<double> lambdas = c.get_doubles("td.lambdas", {0.0, 0.5, 0.9, 1.0});
  const std::vector<double> alphas = c.get_doubles("td.alphas", {0.01});
  const double tau = c.get_double("td.tau", 1e4);
  const std::size_t steps = c.get_size("td.steps", 100'000);
  const std::size_t snapshot_every = c.get_size("td.snapshot_every", 1000);
  const std::string order = c.get_string("td.trace_order", "trace_first");
  if (order != "trace_first" && order != "weight_first") {
    throw ConfigError("config: field 'td.trace_order' must be 'trace_first' or 'weight_first'");
  }
  const bool assert_bound = c.has("assert.margin");
  const double margin = c.get_double("assert.margin", 0.1);

  const ChainModel chain = chain_mrp(spec, model_seed);
  const double e_opt = value_error(chain.mrp, chain.features, optimal_weights(chain.mrp, chain.features));
  const Eigen::VectorXd start = Eigen::VectorXd::Constant(
      static_cast<Eigen::Index>(spec.n_states), 1.0 / static_cast<double>(spec.n_states));

  struct Cell {
    std::size_t d;
    std::size_t li, ai;
  };
  std::vector<Cell> cells;
  for (std::size_t d : ds) {
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
      for (std::size_t ai = 0; ai < alphas.size(); ++ai) cells.push_back({d, li, ai});
    }
  }
  struct Curve {
    std::vector<std::size_t> step;
    std::vector<double> error;
  };
  const std::size_t n_seeds = ctx.seeds.size();
  std::vector<Curve> curves(n_seeds * cells.size());
  parallel_for(curves.size(), ctx.jobs, [&](std::size_t job) {
    const std::size_t i = job / cells.size();
    const Cell& cell = cells[job % cells.size()];
    TabularEnv env = TabularEnv::from_mrp(
        chain.mrp, start, chain.features,
        derive_seed(ctx.seeds[i], {stream::kEnvironment, cell.d, cell.li, cell.ai}));
    TdConfig td;
    td.d = cell.d;
    td.lambda = lambdas[cell.li];
    td.step_size = {alphas[cell.ai], tau};
    td.steps = steps;
    td.snapshot_every = snapshot_every;
    td.order = order == "trace_first" ? TraceOrder::kTraceFirst : TraceOrder::kWeightFirst;
    const TdRun run = run_td(env, td);
    Curve& curve = curves[job];
    for (const auto& snap : run.snapshots) {
      curve.step.push_back(snap.step);
      curve.error.push_back(value_error(chain.mrp, chain.features, snap.w));
    }
    if (run.diverged) curve.error.back() = INFINITY;
  });

  auto bound_rhs = [&](const Cell& cell) {
    return td_error_factor(spec.gamma, cell.d, lambdas[cell.li]) * e_opt;
  };
  for (std::size_t i = 0; i < n_seeds; ++i) {
    std::ofstream out = ctx.dir->open("seed", ctx.seed_dir(i) + "/prediction.csv");
    write_csv_row(out, {"seed", "d", "lambda", "alpha", "step", "error", "bound_rhs"});
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const Curve& curve = curves[i * cells.size() + k];
      for (std::size_t p = 0; p < curve.step.size(); ++p) {
        write_csv_row(out, {num(ctx.seeds[i]), num(cells[k].d), num(lambdas[cells[k].li]),
                            num(alphas[cells[k].ai]), num(curve.step[p]), num(curve.error[p]),
                            num(bound_rhs(cells[k]))});
      }
    }
  }

  std::ofstream agg = ctx.dir->open("aggregate", "prediction_summary.csv");
  write_csv_row(agg, {"d", "lambda", "alpha", "n", "final_error_mean", "final_error_stderr",
                      "e_opt", "bound_rhs", "ratio"});
  std::map<std::pair<std::size_t, std::size_t>, Series> by_lambda_alpha;
  bool within = true;
  std::string worst;
  double worst_ratio = 0.0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    std::vector<std::vector<double>> runs;
    std::vector<double> finals;
    for (std::size_t i = 0; i < n_seeds; ++i) {
      runs.push_back(curves[i * cells.size() + k].error);
      finals.push_back(runs.back().back());
    }
    const MeanStderr f = mean_stderr(finals);
    const double rhs = bound_rhs(cells[k]);
    write_csv_row(agg, {num(cells[k].d), num(lambdas[cells[k].li]), num(alphas[cells[k].ai]),
                        num(f.n), num(f.mean), num(f.std_error), num(e_opt), num(rhs),
                        num(f.mean / rhs)});
    if (!(f.mean <= (1.0 + margin) * rhs)) within = false;
    if (f.mean / rhs > worst_ratio || std::isnan(f.mean)) {
      worst_ratio = f.mean / rhs;
      worst = "d=" + num(cells[k].d) + " lambda=" + num(lambdas[cells[k].li]) +
              " alpha=" + num(alphas[cells[k].ai]);
    }
    const std::vector<MeanStderr> curve = aggregate(runs);
    Series s;
    s.label = "d=" + num(cells[k].d) + " lambda=" + num(lambdas[cells[k].li]) +
              " alpha=" + num(alphas[cells[k].ai]);
    for (std::size_t step : curves[k].step) s.x.push_back(static_cast<double>(step));
    s.y = curve;
    std::ofstream dat = ctx.dir->open(
        "plot", "plots/curve_d" + num(cells[k].d) + "_l" + num(cells[k].li) + "_a" +
                    num(cells[k].ai) + ".dat");
    write_plot_data(dat, s);
    Series& vs_d = by_lambda_alpha[{cells[k].li, cells[k].ai}];
    vs_d.label = "lambda=" + num(lambdas[cells[k].li]) + " alpha=" + num(alphas[cells[k].ai]);
    vs_d.x.push_back(static_cast<double>(cells[k].d));
    vs_d.y.push_back(f);
  }
  std::vector<Series> all;
  for (auto& [key, s] : by_lambda_alpha) {
    std::ofstream dat = ctx.dir->open(
        "plot", "plots/error_vs_d_l" + num(key.first) + "_a" + num(key.second) + ".dat");
    write_plot_data(dat, s);
    all.push_back(s);
  }
  std::ofstream svg = ctx.dir->open("plot", "plots/error_vs_d.svg");
  write_svg(svg, all, "Final value error", "d", "E(w)");
  if (ctx.log) *ctx.log << "E(w_opt) = " << num(e_opt) << "; worst E/bound " << num(worst_ratio)
                        << " at " << worst << "\n";
  if (assert_bound) {
    ctx.check("TD fixed point within bound", within,
              "worst E / bound = " + num(worst_ratio) + " at " + worst + ", allowed " +
                  num(1.0 + margin));
  }
}

// ---- run-control / sweep-d ----------------------------------------------

enum class Algo { kQLearning, kSarsa, kFigar, kReinforce };

struct ControlCell {
  double gamma = 1.0;
  std::vector<std::size_t> d_set;
  std::string d_label() const { return join(d_set, "|"); }
};

void run_control(Context& ctx, bool sweep) {
  const Config& c = *ctx.cfg;
  const std::string algo_name = c.get_string("control.algo");
  Algo algo;
  if (algo_name == "q_learning") {
    algo = Algo::kQLearning;
  } else if (algo_name == "sarsa") {
    algo = Algo::kSarsa;
  } else if (algo_name == "figar") {
    algo = Algo::kFigar;
  } else if (algo_name == "reinforce") {
    algo = Algo::kReinforce;
  } else {
    throw ConfigError("config: field 'control.algo' must be q_learning, sarsa, figar or reinforce");
  }
  const std::string env_name = c.get_string("control.env");
  if (env_name != "grid" && env_name != "acrobot") {
    throw ConfigError("config: field 'control.env' must be 'grid' or 'acrobot'");
  }
  const bool grid = env_name == "grid";
  if (algo == Algo::kQLearning && !grid) {
    throw ConfigError("config: field 'control.env': q_learning needs the tabular grid");
  }
  if (algo == Algo::kReinforce && grid) {
    throw ConfigError("config: field 'control.env': reinforce needs observation features (acrobot)");
  }
  const std::vector<std::size_t> ds = c.get_sizes("control.ds", {1});
  for (std::size_t d : ds) {
    if (d == 0) throw ConfigError("config: field 'control.ds' needs d >= 1");
  }
  const std::vector<double> gammas = c.get_doubles("control.gammas", {1.0});
  const std::size_t episodes = c.get_size("control.episodes");
  const std::size_t eval_every = c.get_size("control.eval_every", 100);
  const std::size_t final_points = c.get_size("control.final_points", 5);
  if (eval_every == 0) throw ConfigError("config: field 'control.eval_every' must be positive");
  if (final_points == 0) throw ConfigError("config: field 'control.final_points' must be positive");

  GridWorldSpec grid_spec;
  bool alias = false;
  AcrobotSetup acro;
  if (grid) {
    grid_spec = grid_from_config(c);
    alias = c.get_bool("grid.alias", false);
  } else {
    acro = acrobot_from_config(c);
  }
  QLearningConfig qc;
  qc.epsilon = c.get_double("q_learning.epsilon", qc.epsilon);
  qc.alpha0 = c.get_double("q_learning.alpha0", qc.alpha0);
  qc.alpha_decay = c.get_double("q_learning.alpha_decay", qc.alpha_decay);
  qc.eval_episodes = c.get_size("q_learning.eval_episodes", qc.eval_episodes);
  const SarsaConfig sc = algo == Algo::kSarsa || algo == Algo::kFigar ? sarsa_from_config(c)
                                                                       : SarsaConfig{};
  ReinforceConfig rc;
  rc.lr = c.get_double("reinforce.lr", rc.lr);
  rc.baseline = c.get_bool("reinforce.baseline", rc.baseline);
  rc.baseline_decay = c.get_double("reinforce.baseline_decay", rc.baseline_decay);
  const bool assert_beats = c.get_bool("assert.best_d_beats_d1", false);
  const double z = c.get_double("assert.z", 2.0);
  const bool assert_best_cell = c.get_bool("assert.best_cell_d_gt_1", false);

  std::vector<ControlCell> cells;
  for (double g : gammas) {
    if (algo == Algo::kFigar) {
      cells.push_back({g, ds});
    } else {
      for (std::size_t d : ds) cells.push_back({g, {d}});
    }
  }

  std::shared_ptr<const FeatureMap> features;
  if (grid) {
    features = std::make_shared<OneHotFeatures>(grid_geometry(grid_spec).n_states());
  } else {
    features = std::make_shared<TileCoder>(TileCoder::acrobot_ranges(), acro.tilings, acro.tiles);
  }

  const std::size_t n_seeds = ctx.seeds.size();
  std::vector<std::vector<EvalPoint>> curves(n_seeds * cells.size());
  parallel_for(curves.size(), ctx.jobs, [&](std::size_t job) {
    const std::size_t i = job / cells.size();
    const ControlCell& cell = cells[job % cells.size()];
    const std::uint64_t seed = ctx.seeds[i];
    const std::uint64_t d_key = cell.d_set.size() == 1 ? cell.d_set[0] : 0;
    std::unique_ptr<Environment> env;
    if (grid) {
      env = std::make_unique<GridWorld>(grid_spec, derive_seed(seed, {stream::kEnvironment, d_key}));
    } else {
      env = std::make_unique<Acrobot>(acro.params, derive_seed(seed, {stream::kEnvironment, d_key}));
    }
    const std::uint64_t agent_seed = derive_seed(seed, {stream::kAgent, d_key});
    std::vector<EvalPoint>& curve = curves[job];
    if (algo == Algo::kQLearning) {
      auto& gw = static_cast<GridWorld&>(*env);
      AliasMap map = AliasMap::identity(gw.n_states());
      if (alias) {
        Rng arng = make_rng(seed, {stream::kAliasing});
        map = random_neighbour_pairs(gw.geometry(), arng);
      }
      QLearningConfig q = qc;
      q.d = cell.d_set[0];
      q.gamma = cell.gamma;
      q.episodes = episodes;
      q.eval_every = eval_every;
      curve = q_learning_run(gw, map, q, agent_seed).curve;
      return;
    }
    std::vector<double> returns;
    if (algo == Algo::kReinforce) {
      ReinforceConfig r = rc;
      r.d = cell.d_set[0];
      r.gamma = cell.gamma;
      returns = reinforce_run(*env, r, episodes, agent_seed).returns;
    } else {
      SarsaConfig s = sc;
      s.gamma = cell.gamma;
      returns = figar_sarsa_run(*env, features, cell.d_set, s, episodes, agent_seed).returns;
    }
    // Learning curves from training returns, one point per block.
    for (std::size_t b = 0; b + eval_every <= returns.size(); b += eval_every) {
      const MeanStderr m = mean_stderr(
          std::vector<double>(returns.begin() + static_cast<std::ptrdiff_t>(b),
                              returns.begin() + static_cast<std::ptrdiff_t>(b + eval_every)));
      curve.push_back({b + eval_every, m.mean, m.std_error});
    }
  });

  for (std::size_t i = 0; i < n_seeds; ++i) {
    std::ofstream out = ctx.dir->open("seed", ctx.seed_dir(i) + "/control.csv");
    write_csv_row(out, {"seed", "algo", "env", "d", "episode", "eval_return_mean",
                        "eval_return_stderr", "gamma"});
    for (std::size_t k = 0; k < cells.size(); ++k) {
      for (const EvalPoint& p : curves[i * cells.size() + k]) {
        write_csv_row(out, {num(ctx.seeds[i]), algo_name, env_name, cells[k].d_label(),
                            num(p.episode), num(p.mean), num(p.std_error), num(cells[k].gamma)});
      }
    }
  }

  std::ofstream agg = ctx.dir->open("aggregate", "curves.csv");
  write_csv_row(agg, {"gamma", "d", "episode", "mean", "stderr", "n"});
  std::ofstream fin = ctx.dir->open("aggregate", "final.csv");
  write_csv_row(fin, {"gamma", "d", "n", "final_mean", "final_stderr"});
  std::vector<MeanStderr> finals(cells.size());
  std::vector<Series> curve_series;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    std::vector<std::vector<double>> runs;
    std::vector<double> per_seed;
    for (std::size_t i = 0; i < n_seeds; ++i) {
      const auto& curve = curves[i * cells.size() + k];
      std::vector<double> means;
      for (const EvalPoint& p : curve) means.push_back(p.mean);
      if (means.empty()) throw ConfigError("config: field 'control.eval_every' exceeds 'control.episodes'");
      runs.push_back(means);
      per_seed.push_back(tail_mean(means, final_points));
    }
    finals[k] = mean_stderr(per_seed);
    const std::vector<MeanStderr> curve = aggregate(runs);
    Series s;
    s.label = "gamma=" + num(cells[k].gamma) + " d=" + cells[k].d_label();
    for (const EvalPoint& p : curves[k]) s.x.push_back(static_cast<double>(p.episode));
    s.y = curve;
    for (std::size_t p = 0; p < curve.size(); ++p) {
      write_csv_row(agg, {num(cells[k].gamma), cells[k].d_label(), num(curves[k][p].episode),
                          num(curve[p].mean), num(curve[p].std_error), num(curve[p].n)});
    }
    write_csv_row(fin, {num(cells[k].gamma), cells[k].d_label(), num(finals[k].n),
                        num(finals[k].mean), num(finals[k].std_error)});
    std::ofstream dat = ctx.dir->open("plot", "plots/curve_" + std::to_string(k) + ".dat");
    write_plot_data(dat, s);
    curve_series.push_back(std::move(s));
  }
  std::ofstream svg = ctx.dir->open("plot", "plots/curves.svg");
  write_svg(svg, curve_series, algo_name + " on " + env_name, "episode", "return");

  // gamma x d table of final performance.
  std::vector<std::string> row_labels, col_labels;
  for (double g : gammas) row_labels.push_back(num(g));
  if (algo == Algo::kFigar) {
    col_labels.push_back(join(ds, "|"));
  } else {
    for (std::size_t d : ds) col_labels.push_back(num(d));
  }
  std::vector<std::vector<std::optional<MeanStderr>>> table(gammas.size());
  const std::size_t per_row = col_labels.size();
  for (std::size_t k = 0; k < cells.size(); ++k) table[k / per_row].push_back(finals[k]);
  const std::string text = format_table("gamma \\ d", row_labels, col_labels, table);
  std::ofstream tab = ctx.dir->open("table", "table.txt");
  tab << text;
  if (ctx.log) *ctx.log << text;

  if (sweep && algo != Algo::kFigar) {
    std::vector<Series> vs_d;
    for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
      Series s;
      s.label = "gamma=" + num(gammas[gi]);
      for (std::size_t di = 0; di < ds.size(); ++di) {
        s.x.push_back(static_cast<double>(ds[di]));
        s.y.push_back(finals[gi * per_row + di]);
      }
      std::ofstream dat = ctx.dir->open("plot", "plots/final_vs_d_" + std::to_string(gi) + ".dat");
      write_plot_data(dat, s);
      vs_d.push_back(std::move(s));
    }
    std::ofstream fsvg = ctx.dir->open("plot", "plots/final_vs_d.svg");
    write_svg(fsvg, vs_d, "Final performance", "d", "return");
  }

  if (algo == Algo::kFigar && (assert_beats || assert_best_cell)) {
    throw ConfigError("config: section 'assert': d comparisons need algo other than figar");
  }
  if (assert_beats) {
    const auto one = std::find(ds.begin(), ds.end(), std::size_t{1});
    if (one == ds.end()) throw ConfigError("config: field 'assert.best_d_beats_d1' needs d = 1 in control.ds");
    const std::size_t i1 = static_cast<std::size_t>(one - ds.begin());
    for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
      std::size_t best = ds.size();
      for (std::size_t di = 0; di < ds.size(); ++di) {
        if (ds[di] <= 1) continue;
        if (best == ds.size() || finals[gi * per_row + di].mean > finals[gi * per_row + best].mean) {
          best = di;
        }
      }
      if (best == ds.size()) throw ConfigError("config: field 'control.ds' needs some d > 1");
      const MeanStderr& a = finals[gi * per_row + best];
      const MeanStderr& b = finals[gi * per_row + i1];
      const double se = std::hypot(a.std_error, b.std_error);
      const double gap = a.mean - b.mean;
      ctx.check("gamma=" + num(gammas[gi]) + ": best d beats d=1", gap >= z * se,
                "d=" + num(ds[best]) + " " + format_cell(a) + " vs d=1 " + format_cell(b) +
                    ", gap " + num(gap) + " needs " + num(z) + " x " + num(se));
    }
  }
  if (assert_best_cell) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < cells.size(); ++k) {
      if (finals[k].mean > finals[best].mean) best = k;
    }
    ctx.check("best cell has d > 1", cells[best].d_set[0] > 1,
              "best gamma=" + num(cells[best].gamma) + " d=" + cells[best].d_label() + " " +
                  format_cell(finals[best]));
  }
}

// ---- run-bandit ---------------------------------------------------------

void run_bandit(Context& ctx) {
  const Config& c = *ctx.cfg;
  const std::string env_name = c.get_string("bandit.env", "grid");
  const bool grid = env_name == "grid";
  if (!grid && env_name != "bernoulli") {
    throw ConfigError("config: field 'bandit.env' must be 'grid' or 'bernoulli'");
  }
  const std::size_t episodes = c.get_size("bandit.episodes", 20000);
  const std::size_t window = c.get_size("bandit.window", 500);
  if (window == 0) throw ConfigError("config: field 'bandit.window' must be positive");
  const bool assert_share = c.has("assert.dominant_share");
  const double share = c.get_double("assert.dominant_share", 0.5);

  MetaConfig meta;
  GridWorldSpec spec;
  std::vector<double> means;
  std::vector<std::string> arm_labels;
  if (grid) {
    spec = grid_from_config(c);
    meta.d_arms = c.get_sizes("bandit.arms", {1, 16, 32, 64});
    for (std::size_t d : meta.d_arms) {
      if (d == 0) throw ConfigError("config: field 'bandit.arms' needs d >= 1");
      arm_labels.push_back(num(d));
    }
    meta.sarsa = sarsa_from_config(c);
    meta.range = {c.get_double("bandit.range_lo", return_floor(spec)),
                  c.get_double("bandit.range_hi", 0.0)};
    if (!(meta.range.hi > meta.range.lo)) {
      throw ConfigError("config: fields 'bandit.range_lo' < 'bandit.range_hi' required");
    }
    meta.episodes = episodes;
    meta.window = window;
  } else {
    means = c.get_doubles("bandit.means");
    for (std::size_t i = 0; i < means.size(); ++i) {
      if (!(means[i] >= 0.0 && means[i] <= 1.0)) {
        throw ConfigError("config: field 'bandit.means' needs values in [0, 1]");
      }
      arm_labels.push_back(num(i));
    }
  }
  const std::size_t k = arm_labels.size();

  const std::size_t n_seeds = ctx.seeds.size();
  std::vector<MetaRun> runs(n_seeds);
  parallel_for(n_seeds, ctx.jobs, [&](std::size_t i) {
    const std::uint64_t seed = ctx.seeds[i];
    if (grid) {
      GridWorld env(spec, derive_seed(seed, {stream::kEnvironment}));
      auto features = std::make_shared<OneHotFeatures>(env.n_states());
      runs[i] = meta_run(env, features, meta, seed);
      return;
    }
    Exp31 b(k);
    Rng pick = make_rng(seed, {stream::kBandit});
    Rng payout = make_rng(seed, {stream::kEnvironment});
    MetaRun& run = runs[i];
    run.pulls.assign(k, 0);
    for (std::size_t e = 0; e < episodes; ++e) {
      auto [arm, p] = b.sample(pick);
      const double x = uniform01(payout) < means[arm] ? 1.0 : 0.0;
      b.update(arm, x);
      ++run.pulls[arm];
      run.arm.push_back(arm);
      run.raw_return.push_back(x);
      run.normalized.push_back(x);
      run.probabilities.push_back(std::move(p));
    }
    run.moving_average = moving_average(run.raw_return, window);
  });

  std::vector<std::vector<double>> fractions(k);
  std::vector<std::vector<double>> averages;
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    const MetaRun& run = runs[i];
    const std::string s = num(ctx.seeds[i]);
    std::ofstream out = ctx.dir->open("seed", ctx.seed_dir(i) + "/bandit.csv");
    write_csv_row(out, {"seed", "episode", "arm_d", "normalized_reward", "raw_return", "p_vector"});
    for (std::size_t e = 0; e < run.arm.size(); ++e) {
      std::string p;
      for (Eigen::Index a = 0; a < run.probabilities[e].size(); ++a) {
        p += (a ? " " : "") + num(run.probabilities[e](a));
      }
      write_csv_row(out, {s, num(e + 1), arm_labels[run.arm[e]], num(run.normalized[e]),
                          num(run.raw_return[e]), p});
    }
    std::ofstream hist = ctx.dir->open("seed", ctx.seed_dir(i) + "/histogram.csv");
    write_csv_row(hist, {"seed", "arm_d", "pulls", "fraction"});
    for (std::size_t a = 0; a < k; ++a) {
      const double f = static_cast<double>(run.pulls[a]) / static_cast<double>(episodes);
      write_csv_row(hist, {s, arm_labels[a], num(run.pulls[a]), num(f)});
      fractions[a].push_back(f);
    }
    averages.push_back(run.moving_average);
    clamped += run.clamped;
  }

  std::ofstream agg = ctx.dir->open("aggregate", "histogram_summary.csv");
  write_csv_row(agg, {"arm_d", "n", "mean_fraction", "stderr"});
  std::vector<std::optional<MeanStderr>> cells;
  std::size_t dominant = 0;
  std::vector<MeanStderr> f(k);
  for (std::size_t a = 0; a < k; ++a) {
    f[a] = mean_stderr(fractions[a]);
    write_csv_row(agg, {arm_labels[a], num(f[a].n), num(f[a].mean), num(f[a].std_error)});
    cells.push_back(f[a]);
    if (f[a].mean > f[dominant].mean) dominant = a;
  }
  const std::vector<std::vector<std::optional<MeanStderr>>> grid_cells{cells};
  const std::string table = format_table("pull share", {"mean"}, arm_labels, grid_cells, 3);
  std::ofstream tab = ctx.dir->open("table", "table.txt");
  tab << table << "clamped returns: " << clamped << "\n";
  if (ctx.log) *ctx.log << table << "clamped returns: " << clamped << "\n";

  // Moving average of raw returns, sampled every window episodes.
  const std::vector<MeanStderr> curve = aggregate(averages);
  Series s;
  s.label = "moving average (" + num(window) + ")";
  for (std::size_t e = window; e <= episodes; e += window) {
    s.x.push_back(static_cast<double>(e));
    s.y.push_back(curve[e - 1]);
  }
  std::ofstream dat = ctx.dir->open("plot", "plots/moving_average.dat");
  write_plot_data(dat, s);
  std::ofstream svg = ctx.dir->open("plot", "plots/moving_average.svg");
  write_svg(svg, {s}, "Meta-learner return", "episode", "return");

  if (assert_share) {
    ctx.check("dominant arm share", f[dominant].mean > share,
              "arm " + arm_labels[dominant] + " " + format_cell(f[dominant], 3) + " needs > " +
                  num(share));
  }
}

// ---- calibrate-grid -----------------------------------------------------

void calibrate_grid(Context& ctx) {
  const Config& c = *ctx.cfg;
  const GridWorldSpec base = grid_from_config(c);
  const std::vector<double> targets = c.get_doubles("calibrate.targets", {2.13, 10.12, 55.26});
  const double tol = c.get_double("calibrate.tol", 1e-3);
  const double min_penalty = c.get_double("calibrate.min_penalty", -1000.0);
  const std::size_t max_d = c.get_size("calibrate.max_d", 6);
  const bool assert_monotone = c.get_bool("assert.monotone", false);

  std::ofstream cal = ctx.dir->open("aggregate", "calibration.csv");
  write_csv_row(cal, {"target", "pit_penalty", "delta", "iterations"});
  std::ofstream def = ctx.dir->open("aggregate", "deficits.csv");
  write_csv_row(def, {"target", "d", "deficit"});
  std::ostringstream text;
  text << "delta \\ d";
  for (std::size_t d = 1; d <= max_d; ++d) text << ' ' << d;
  text << '\n';
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const Calibration cb = calibrate_pit_penalty(base, targets[t], tol, min_penalty);
    write_csv_row(cal, {num(targets[t]), num(cb.pit_penalty), num(cb.delta), num(cb.iterations)});
    GridWorldSpec g = base;
    g.pit_penalty = cb.pit_penalty;
    std::ofstream map = ctx.dir->open("grid", "grid_" + std::to_string(t) + ".txt");
    write_grid(map, g);
    const TabularMDP m = gridworld_to_tabular(g);
    double prev = -INFINITY;
    bool monotone = true;
    text << num(targets[t]);
    for (std::size_t d = 1; d <= max_d; ++d) {
      const double v = value_deficit(m, d);
      write_csv_row(def, {num(targets[t]), num(d), num(v)});
      text << ' ' << num(v);
      monotone = monotone && v >= prev - 1e-9;
      prev = v;
    }
    text << '\n';
    if (ctx.log) {
      *ctx.log << "target " << num(targets[t]) << ": pit_penalty " << num(cb.pit_penalty)
               << " (delta " << num(cb.delta) << ")\n";
    }
    if (assert_monotone) {
      ctx.check("deficit monotone in d at delta " + num(targets[t]), monotone,
                "pit_penalty " + num(cb.pit_penalty));
    }
  }
  std::ofstream tab = ctx.dir->open("table", "deficits.txt");
  tab << text.str();
  if (ctx.log) *ctx.log << text.str();
}

}  // namespace

RunResult run_experiment(const std::string& command, Config config, const RunOptions& options) {
  const auto& cmds = experiment_commands();
  if (std::find(cmds.begin(), cmds.end(), command) == cmds.end()) {
    throw ConfigError("unknown command '" + command + "'");
  }
  // Overrides go into the config so the hash and the saved copy describe the
  // run completely. The job count does not change results and is left out.
  if (options.seed) config.set("run.seed", std::to_string(*options.seed));
  if (options.seeds) config.set("run.seeds", std::to_string(*options.seeds));
  const std::size_t jobs = options.jobs.value_or(config.get_size("run.jobs", 1));
  config.erase("run.jobs");
  config.set("run.command", command);
  const std::uint64_t master = config.get_u64("run.seed", 0);
  const std::size_t n_seeds = config.get_size("run.seeds", 5);
  config.get_string("run.command");
  if (n_seeds == 0) throw ConfigError("config: field 'run.seeds' must be at least 1");

  RunResult result;
  result.config_hash = config.hash_hex();
  RunDir dir(output_root(options), result.config_hash);
  result.directory = dir.path().string();
  {
    std::ofstream copy = dir.open("config", "config.ini");
    copy << config.canonical();
  }

  Context ctx;
  ctx.cfg = &config;
  ctx.jobs = jobs;
  ctx.dir = &dir;
  ctx.log = options.log;
  ctx.result = &result;
  if (command != "calibrate-grid") {
    for (std::size_t i = 0; i < n_seeds; ++i) ctx.seeds.push_back(run_seed(master, i));
  }

  if (command == "verify-bounds") {
    verify_bounds(ctx);
  } else if (command == "run-prediction") {
    run_prediction(ctx);
  } else if (command == "run-control") {
    run_control(ctx, false);
  } else if (command == "sweep-d") {
    run_control(ctx, true);
  } else if (command == "run-bandit") {
    run_bandit(ctx);
  } else {
    calibrate_grid(ctx);
  }
  dir.write_index();
  if (options.log) {
    for (const auto& key : config.unused_keys()) {
      *options.log << "warning: config field '" << key << "' was not used\n";
    }
    *options.log << "output: " << result.directory << "\n";
  }
  return result;
}

}  // namespace fsrl
