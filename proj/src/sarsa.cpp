#include "fsrl/sarsa.hpp"

#include <cmath>
#include <stdexcept>

#include "fsrl/errors.hpp"

namespace fsrl {

using Eigen::Index;

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

SarsaAgent::SarsaAgent(std::shared_ptr<const FeatureMap> features, std::size_t n_actions,
                       SarsaConfig config, std::uint64_t seed)
    : features_(std::move(features)),
      n_actions_(n_actions),
      config_(std::move(config)),
      rng_(seed),
      epsilon_(config_.epsilon0) {
  if (!features_) throw std::invalid_argument("SarsaAgent: no feature map");
  if (n_actions_ == 0) throw std::invalid_argument("SarsaAgent: no actions");
  if (config_.d_set.empty()) throw std::invalid_argument("SarsaAgent: empty d_set");
  for (std::size_t d : config_.d_set) {
    if (d == 0) throw std::invalid_argument("SarsaAgent: repetition counts must be positive");
  }
  const Index n = static_cast<Index>(features_->size() * n_composite());
  w_ = Eigen::VectorXd::Zero(n);
  e_ = Eigen::VectorXd::Zero(n);
}

double SarsaAgent::q(const std::vector<std::size_t>& active, std::size_t c) const {
  const std::size_t base = c * features_->size();
  double sum = 0.0;
  for (std::size_t i : active) sum += w_(static_cast<Index>(base + i));
  return sum;
}

Eigen::VectorXd SarsaAgent::q_values(const Observation& obs) const {
  std::vector<std::size_t> active;
  features_->active(obs, active);
  Eigen::VectorXd out(static_cast<Index>(n_composite()));
  for (std::size_t c = 0; c < n_composite(); ++c) out(static_cast<Index>(c)) = q(active, c);
  return out;
}

std::size_t SarsaAgent::select(const std::vector<std::size_t>& active, double epsilon) {
  if (epsilon > 0.0 && uniform01(rng_) < epsilon) return uniform_index(rng_, n_composite());
  std::size_t best = 0;
  double best_q = q(active, 0);
  for (std::size_t c = 1; c < n_composite(); ++c) {
    const double v = q(active, c);
    if (v > best_q) {
      best_q = v;
      best = c;
    }
  }
  return best;
}

EpisodeResult SarsaAgent::train_episode(Environment& env) {
  const double alpha = config_.normalize_alpha
                           ? config_.alpha / static_cast<double>(features_->n_active())
                           : config_.alpha;
  const std::size_t block = features_->size();
  EpisodeResult result;
  e_.setZero();

  std::vector<std::size_t> active;
  std::vector<std::size_t> next_active;
  Observation obs = env.reset();
  features_->active(obs, active);
  std::size_t c = select(active, epsilon_);
  while (true) {
    const SkipOutcome out = skip_step(env, atomic_action(c), repeat(c), config_.gamma);
    result.reward_sum += out.reward_sum;
    result.steps += out.steps_taken;
    ++result.decisions;

    double delta = out.return_d - q(active, c);
    const std::size_t base = c * block;
    for (std::size_t i : active) {
      double& trace = e_(static_cast<Index>(base + i));
      trace = config_.trace == TraceKind::kReplacing ? 1.0 : trace + 1.0;
    }
    std::size_t next_c = 0;
    const double discount = std::pow(config_.gamma, static_cast<double>(out.steps_taken));
    if (!out.terminal) {
      features_->active(out.next, next_active);
      next_c = select(next_active, epsilon_);
      delta += discount * q(next_active, next_c);
    }
    w_ += (alpha * delta) * e_;
    if (!std::isfinite(delta)) throw DivergenceError("Sarsa: non-finite TD error");
    if (out.terminal || out.truncated) {
      result.terminal = out.terminal;
      break;
    }
    e_ *= discount * config_.lambda;
    active.swap(next_active);
    c = next_c;
  }
  epsilon_ *= config_.epsilon_decay;
  ++episodes_;
  return result;
}

EpisodeResult SarsaAgent::greedy_episode(Environment& env) const {
  EpisodeResult result;
  std::vector<std::size_t> active;
  Observation obs = env.reset();
  while (true) {
    features_->active(obs, active);
    std::size_t best = 0;
    double best_q = q(active, 0);
    for (std::size_t c = 1; c < n_composite(); ++c) {
      const double v = q(active, c);
      if (v > best_q) {
        best_q = v;
        best = c;
      }
    }
    const SkipOutcome out = skip_step(env, atomic_action(best), repeat(best), config_.gamma);
    result.reward_sum += out.reward_sum;
    result.steps += out.steps_taken;
    ++result.decisions;
    if (out.terminal || out.truncated) {
      result.terminal = out.terminal;
      break;
    }
    obs = out.next;
  }
  return result;
}

std::uint64_t SarsaAgent::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, w_.data(), sizeof(double) * static_cast<std::size_t>(w_.size()));
  h = fnv1a(h, &epsilon_, sizeof epsilon_);
  h = fnv1a(h, &episodes_, sizeof episodes_);
  Rng copy = rng_;
  const std::uint64_t next = copy();
  return fnv1a(h, &next, sizeof next);
}

SarsaRun sarsa_lambda_run(Environment& env, std::shared_ptr<const FeatureMap> features,
                          std::size_t d, SarsaConfig config, std::size_t episodes,
                          std::uint64_t seed) {
  return figar_sarsa_run(env, std::move(features), {d}, std::move(config), episodes, seed);
}

SarsaRun figar_sarsa_run(Environment& env, std::shared_ptr<const FeatureMap> features,
                         std::vector<std::size_t> d_set, SarsaConfig config,
                         std::size_t episodes, std::uint64_t seed) {
  config.d_set = std::move(d_set);
  SarsaAgent agent(std::move(features), env.n_actions(), std::move(config), seed);
  SarsaRun run;
  run.returns.reserve(episodes);
  for (std::size_t i = 0; i < episodes; ++i) {
    run.returns.push_back(agent.train_episode(env).reward_sum);
  }
  return run;
}

}  // namespace fsrl
