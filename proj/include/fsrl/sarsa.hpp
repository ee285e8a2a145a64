#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "fsrl/environment.hpp"
#include "fsrl/features.hpp"
#include "fsrl/rng.hpp"

namespace fsrl {

enum class TraceKind { kReplacing, kAccumulating };

struct SarsaConfig {
  double alpha = 0.1;  // divided by the active-feature count when normalize_alpha
  double lambda = 0.9;
  double gamma = 1.0;
  double epsilon0 = 0.1;
  double epsilon_decay = 0.999;  // applied after every training episode
  // Repetition counts a decision may choose from. A single entry gives
  // Sarsa_d(lambda); several give the FiGAR product action set.
  std::vector<std::size_t> d_set{1};
  TraceKind trace = TraceKind::kReplacing;
  bool normalize_alpha = true;
};

struct EpisodeResult {
  double reward_sum = 0.0;  // undiscounted
  std::size_t steps = 0;
  std::size_t decisions = 0;
  bool terminal = false;
};

// On-policy linear Sarsa(lambda) over composite actions (a, d): weight block
// c = a * |d_set| + k holds the values of repeating atomic action a for
// d_set[k] steps. Each transition bootstraps with gamma^k for the k steps it
// actually took, and traces decay by gamma^k lambda. State persists across
// episodes so a caller may interleave episodes with other work.
class SarsaAgent {
 public:
  SarsaAgent(std::shared_ptr<const FeatureMap> features, std::size_t n_actions,
             SarsaConfig config, std::uint64_t seed);

  // Plays one training episode with epsilon-greedy selection and learns from
  // it, then decays epsilon.
  EpisodeResult train_episode(Environment& env);
  // Plays one episode greedily without learning. Uses no agent randomness.
  EpisodeResult greedy_episode(Environment& env) const;

  std::size_t n_composite() const { return n_actions_ * config_.d_set.size(); }
  std::size_t atomic_action(std::size_t c) const { return c / config_.d_set.size(); }
  std::size_t repeat(std::size_t c) const { return config_.d_set[c % config_.d_set.size()]; }

  // Values of every composite action at an observation.
  Eigen::VectorXd q_values(const Observation& obs) const;
  const Eigen::VectorXd& weights() const { return w_; }
  double epsilon() const { return epsilon_; }
  std::size_t episodes() const { return episodes_; }
  const SarsaConfig& config() const { return config_; }
  // Hash of everything that changes while learning.
  std::uint64_t fingerprint() const;

 private:
  double q(const std::vector<std::size_t>& active, std::size_t c) const;
  std::size_t select(const std::vector<std::size_t>& active, double epsilon);

  std::shared_ptr<const FeatureMap> features_;
  std::size_t n_actions_;
  SarsaConfig config_;
  Rng rng_;
  Eigen::VectorXd w_;
  Eigen::VectorXd e_;
  double epsilon_;
  std::size_t episodes_ = 0;
};

struct SarsaRun {
  std::vector<double> returns;  // undiscounted return of each training episode
};

// Trains a fresh agent for `episodes` episodes on env at fixed repetition d.
SarsaRun sarsa_lambda_run(Environment& env, std::shared_ptr<const FeatureMap> features,
                          std::size_t d, SarsaConfig config, std::size_t episodes,
                          std::uint64_t seed);

// The same with decisions over A x d_set.
SarsaRun figar_sarsa_run(Environment& env, std::shared_ptr<const FeatureMap> features,
                         std::vector<std::size_t> d_set, SarsaConfig config,
                         std::size_t episodes, std::uint64_t seed);

}  // namespace fsrl
