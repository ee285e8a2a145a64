#include "fsrl/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fsrl {

using Eigen::Index;

namespace {

constexpr double kE = 2.718281828459045;

}  // namespace

Eigen::VectorXd exp3_probabilities(const Eigen::VectorXd& log_weights, double gamma) {
  const Index k = log_weights.size();
  if (k == 0) throw std::invalid_argument("exp3_probabilities: no arms");
  Eigen::VectorXd w = (log_weights.array() - log_weights.maxCoeff()).exp();
  w /= w.sum();
  return (1.0 - gamma) * w.array() + gamma / static_cast<double>(k);
}

Exp31::Exp31(std::size_t n_arms) {
  if (n_arms == 0) throw std::invalid_argument("Exp31: no arms");
  log_w_ = Eigen::VectorXd::Zero(static_cast<Index>(n_arms));
  gains_ = Eigen::VectorXd::Zero(static_cast<Index>(n_arms));
}

double Exp31::gain_guess() const {
  const double k = static_cast<double>(n_arms());
  return k * std::log(k) / (kE - 1.0) * std::pow(4.0, static_cast<double>(epoch_));
}

double Exp31::exploration() const {
  const double k = static_cast<double>(n_arms());
  // With one arm ln K = 0 and the guess is 0; there is nothing to explore.
  if (n_arms() == 1) return 1.0;
  return std::min(1.0, std::sqrt(k * std::log(k) / ((kE - 1.0) * gain_guess())));
}

Eigen::VectorXd Exp31::probabilities() const {
  return exp3_probabilities(log_w_, exploration());
}

std::pair<std::size_t, Eigen::VectorXd> Exp31::sample(Rng& rng) const {
  Eigen::VectorXd p = probabilities();
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t arm = n_arms() - 1;
  for (Index i = 0; i < p.size(); ++i) {
    acc += p(i);
    if (u < acc) {
      arm = static_cast<std::size_t>(i);
      break;
    }
  }
  return {arm, std::move(p)};
}

void Exp31::update(std::size_t arm, double reward) {
  if (arm >= n_arms()) throw std::invalid_argument("Exp31: arm out of range");
  if (!(reward >= 0.0 && reward <= 1.0)) {
    throw std::invalid_argument("Exp31: reward " + std::to_string(reward) +
                                " outside [0, 1]");
  }
  const double gamma = exploration();
  const Index a = static_cast<Index>(arm);
  const double x_hat = reward / probabilities()(a);
  log_w_(a) += gamma * x_hat / static_cast<double>(n_arms());
  gains_(a) += x_hat;
  advance_epochs();
}

void Exp31::advance_epochs() {
  if (n_arms() == 1) return;
  const double k = static_cast<double>(n_arms());
  bool restarted = false;
  while (gains_.maxCoeff() > gain_guess() - k / exploration()) {
    ++epoch_;
    restarted = true;
  }
  if (restarted) log_w_.setZero();
}

double RewardRange::normalize(double x, bool* clamped) const {
  if (!(hi > lo)) throw std::invalid_argument("RewardRange: need lo < hi");
  double y = (x - lo) / (hi - lo);
  const bool out = y < 0.0 || y > 1.0;
  if (clamped) *clamped = out;
  return std::clamp(y, 0.0, 1.0);
}

std::vector<double> moving_average(const std::vector<double>& xs, std::size_t window) {
  if (window == 0) throw std::invalid_argument("moving_average: window must be positive");
  std::vector<double> out(xs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum += xs[i];
    if (i >= window) sum -= xs[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

namespace {

std::vector<SarsaAgent> make_arms(const std::shared_ptr<const FeatureMap>& features,
                                  std::size_t n_actions, const MetaConfig& config,
                                  std::uint64_t seed) {
  if (config.d_arms.empty()) throw std::invalid_argument("meta_run: no arms");
  std::vector<SarsaAgent> agents;
  agents.reserve(config.d_arms.size());
  for (std::size_t i = 0; i < config.d_arms.size(); ++i) {
    SarsaConfig c = config.sarsa;
    c.d_set = {config.d_arms[i]};
    agents.emplace_back(features, n_actions, std::move(c),
                        derive_seed(seed, {stream::kAgent, i}));
  }
  return agents;
}

}  // namespace

MetaLearner::MetaLearner(std::shared_ptr<const FeatureMap> features, std::size_t n_actions,
                         const MetaConfig& config, std::uint64_t seed)
    : range_(config.range),
      agents_(make_arms(features, n_actions, config, seed)),
      bandit_(agents_.size()),
      rng_(derive_seed(seed, {stream::kBandit})) {}

MetaStep MetaLearner::play_episode(Environment& env) {
  MetaStep step;
  auto [arm, p] = bandit_.sample(rng_);
  step.arm = arm;
  step.probabilities = std::move(p);
  step.raw_return = agents_[arm].train_episode(env).reward_sum;
  step.normalized = range_.normalize(step.raw_return, &step.clamped);
  bandit_.update(arm, step.normalized);
  return step;
}

MetaRun meta_run(Environment& env, std::shared_ptr<const FeatureMap> features,
                 const MetaConfig& config, std::uint64_t seed) {
  MetaLearner learner(std::move(features), env.n_actions(), config, seed);
  MetaRun run;
  run.pulls.assign(learner.n_arms(), 0);
  run.arm.reserve(config.episodes);
  run.raw_return.reserve(config.episodes);
  run.normalized.reserve(config.episodes);
  run.probabilities.reserve(config.episodes);
  for (std::size_t e = 0; e < config.episodes; ++e) {
    MetaStep step = learner.play_episode(env);
    run.clamped += step.clamped;
    ++run.pulls[step.arm];
    run.arm.push_back(step.arm);
    run.raw_return.push_back(step.raw_return);
    run.normalized.push_back(step.normalized);
    run.probabilities.push_back(std::move(step.probabilities));
  }
  run.moving_average = moving_average(run.raw_return, config.window);
  return run;
}

}  // namespace fsrl
