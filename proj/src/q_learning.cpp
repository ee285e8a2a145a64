#include "fsrl/q_learning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fsrl/stats.hpp"

namespace fsrl {

using Eigen::Index;

std::size_t greedy_action(const Eigen::VectorXd& q) {
  Index best = 0;
  for (Index a = 1; a < q.size(); ++a) {
    if (q(a) > q(best)) best = a;
  }
  return static_cast<std::size_t>(best);
}

std::size_t epsilon_greedy(const Eigen::VectorXd& q, double epsilon, Rng& rng) {
  if (uniform01(rng) < epsilon) return uniform_index(rng, static_cast<std::size_t>(q.size()));
  return greedy_action(q);
}

AliasMap AliasMap::identity(std::size_t n_states) {
  AliasMap m;
  m.class_of.resize(n_states);
  for (std::size_t s = 0; s < n_states; ++s) m.class_of[s] = s;
  m.n_classes = n_states;
  return m;
}

AliasMap random_neighbour_pairs(const GridGeometry& geometry, Rng& rng) {
  const std::size_t n = geometry.n_states();
  std::vector<std::size_t> order(n);
  for (std::size_t s = 0; s < n; ++s) order[s] = s;
  std::shuffle(order.begin(), order.end(), rng);

  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> partner(n, kUnset);
  for (std::size_t s : order) {
    if (partner[s] != kUnset || geometry.goal[s]) continue;
    std::vector<std::size_t> candidates;
    for (std::size_t a = 0; a < kGridActions; ++a) {
      const std::size_t t = geometry.next[s][a];
      if (t != s && partner[t] == kUnset && !geometry.goal[t] &&
          std::find(candidates.begin(), candidates.end(), t) == candidates.end()) {
        candidates.push_back(t);
      }
    }
    if (candidates.empty()) continue;
    const std::size_t t = candidates[uniform_index(rng, candidates.size())];
    partner[s] = t;
    partner[t] = s;
  }

  AliasMap m;
  m.class_of.assign(n, kUnset);
  for (std::size_t s = 0; s < n; ++s) {
    if (m.class_of[s] != kUnset) continue;
    m.class_of[s] = m.n_classes;
    if (partner[s] != kUnset) m.class_of[partner[s]] = m.n_classes;
    ++m.n_classes;
  }
  return m;
}

AliasedQTable::AliasedQTable(AliasMap map, std::size_t n_actions)
    : q(Eigen::MatrixXd::Zero(static_cast<Index>(map.n_classes), static_cast<Index>(n_actions))),
      alias(std::move(map)) {}

EvalPoint evaluate_greedy(Environment& env, const AliasedQTable& table, std::size_t d,
                          double gamma, std::size_t episodes) {
  std::vector<double> returns;
  returns.reserve(episodes);
  for (std::size_t i = 0; i < episodes; ++i) {
    Observation obs = env.reset();
    double total = 0.0;
    while (true) {
      const SkipOutcome out = skip_step(env, greedy_action(table.row(obs.state)), d, gamma);
      total += out.reward_sum;
      if (out.terminal || out.truncated) break;
      obs = out.next;
    }
    returns.push_back(total);
  }
  const MeanStderr m = mean_stderr(returns);
  return {0, m.mean, m.std_error};
}

QLearningRun q_learning_run(Environment& env, AliasMap alias, const QLearningConfig& config,
                            std::uint64_t seed) {
  if (env.n_states() == 0) throw std::invalid_argument("q_learning_run: needs a tabular environment");
  if (alias.class_of.size() != env.n_states()) {
    throw std::invalid_argument("q_learning_run: alias map does not match the environment");
  }
  if (config.d == 0) throw std::invalid_argument("q_learning_run: d must be at least 1");
  Rng rng(derive_seed(seed, {stream::kAgent}));
  std::unique_ptr<Environment> eval_env = env.clone();
  eval_env->seed(derive_seed(seed, {stream::kEvaluation}));

  QLearningRun run{AliasedQTable(std::move(alias), env.n_actions()), {}, {}};
  auto evaluate = [&](std::size_t episode) {
    if (config.eval_episodes == 0) return;
    EvalPoint p = evaluate_greedy(*eval_env, run.table, config.d, config.gamma,
                                  config.eval_episodes);
    p.episode = episode;
    run.curve.push_back(p);
  };

  evaluate(0);
  double alpha = config.alpha0;
  for (std::size_t e = 0; e < config.episodes; ++e) {
    Observation obs = env.reset();
    double total = 0.0;
    while (true) {
      const std::size_t a = epsilon_greedy(run.table.row(obs.state), config.epsilon, rng);
      const SkipOutcome out = skip_step(env, a, config.d, config.gamma);
      total += out.reward_sum;
      double target = out.return_d;
      if (!out.terminal) {
        target += std::pow(config.gamma, static_cast<double>(out.steps_taken)) *
                  run.table.row(out.next.state).maxCoeff();
      }
      double& q = run.table.at(obs.state, a);
      q += alpha * (target - q);
      if (out.terminal || out.truncated) break;
      obs = out.next;
    }
    run.training_returns.push_back(total);
    alpha *= config.alpha_decay;
    if (config.eval_every > 0 &&
        ((e + 1) % config.eval_every == 0 || e + 1 == config.episodes)) {
      evaluate(e + 1);
    }
  }
  if (config.eval_every == 0) evaluate(config.episodes);
  return run;
}

}  // namespace fsrl
