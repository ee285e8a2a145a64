#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fsrl/environment.hpp"
#include "fsrl/features.hpp"
#include "fsrl/rng.hpp"
#include "fsrl/sarsa.hpp"

namespace fsrl {

// p_i = (1 - gamma) w_i / sum w + gamma / K, with w = exp(log_weights).
Eigen::VectorXd exp3_probabilities(const Eigen::VectorXd& log_weights, double gamma);

// EXP3.1: EXP3 restarted over epochs r = 0, 1, ... with gain guesses
// g_r = (K ln K / (e - 1)) 4^r and exploration
// gamma_r = min(1, sqrt(K ln K / ((e - 1) g_r))). Weights are kept in log
// form and reset at each epoch; estimated gains accumulate over all epochs.
class Exp31 {
 public:
  explicit Exp31(std::size_t n_arms);

  std::size_t n_arms() const { return static_cast<std::size_t>(log_w_.size()); }
  std::size_t epoch() const { return epoch_; }
  double gain_guess() const;  // g_r
  double exploration() const;  // gamma_r

  Eigen::VectorXd probabilities() const;
  // Draws an arm and returns it with the distribution it was drawn from.
  std::pair<std::size_t, Eigen::VectorXd> sample(Rng& rng) const;
  // Importance-weighted update of the pulled arm. Throws
  // std::invalid_argument unless reward lies in [0, 1].
  void update(std::size_t arm, double reward);

  const Eigen::VectorXd& log_weights() const { return log_w_; }
  const Eigen::VectorXd& gain_estimates() const { return gains_; }

 private:
  void advance_epochs();

  Eigen::VectorXd log_w_;
  Eigen::VectorXd gains_;
  std::size_t epoch_ = 0;
};

// Affine map of [lo, hi] onto [0, 1], clamping values outside.
struct RewardRange {
  double lo = 0.0;
  double hi = 1.0;

  // Sets *clamped when the value had to be clamped.
  double normalize(double x, bool* clamped = nullptr) const;
};

struct MetaConfig {
  std::vector<std::size_t> d_arms;
  SarsaConfig sarsa;  // d_set is replaced per arm
  RewardRange range;
  std::size_t episodes = 20000;
  std::size_t window = 500;  // moving average length
};

struct MetaRun {
  std::vector<std::size_t> arm;  // index into d_arms per episode
  std::vector<double> raw_return;
  std::vector<double> normalized;
  std::vector<Eigen::VectorXd> probabilities;  // distribution each arm was drawn from
  std::vector<double> moving_average;  // of raw returns over the trailing window
  std::vector<std::size_t> pulls;  // histogram over arms
  std::size_t clamped = 0;  // returns outside the declared range
};

struct MetaStep {
  std::size_t arm = 0;
  double raw_return = 0.0;
  double normalized = 0.0;
  bool clamped = false;
  Eigen::VectorXd probabilities;
};

// EXP3.1 over persistent Sarsa learners, one per repetition count. Each round
// plays one episode with the sampled arm's learner at that arm's fixed d;
// arm learners never see each other's episodes.
class MetaLearner {
 public:
  MetaLearner(std::shared_ptr<const FeatureMap> features, std::size_t n_actions,
              const MetaConfig& config, std::uint64_t seed);

  MetaStep play_episode(Environment& env);

  const Exp31& bandit() const { return bandit_; }
  const SarsaAgent& arm(std::size_t i) const { return agents_.at(i); }
  std::size_t n_arms() const { return agents_.size(); }

 private:
  RewardRange range_;
  std::vector<SarsaAgent> agents_;
  Exp31 bandit_;
  Rng rng_;
};

// Runs config.episodes rounds of a fresh MetaLearner.
MetaRun meta_run(Environment& env, std::shared_ptr<const FeatureMap> features,
                 const MetaConfig& config, std::uint64_t seed);

// Trailing mean over at most `window` entries ending at each index.
std::vector<double> moving_average(const std::vector<double>& xs, std::size_t window);

}  // namespace fsrl
