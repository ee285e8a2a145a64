#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "fsrl/environment.hpp"
#include "fsrl/gridworld.hpp"
#include "fsrl/rng.hpp"

namespace fsrl {

// Argmax with ties to the lowest index.
std::size_t greedy_action(const Eigen::VectorXd& q);
// With probability epsilon a uniformly random action, otherwise greedy. Draws
// one uniform always and a second only when exploring.
std::size_t epsilon_greedy(const Eigen::VectorXd& q, double epsilon, Rng& rng);

// Partition of states into classes of size 1 or 2 that share Q-values.
struct AliasMap {
  std::vector<std::size_t> class_of;
  std::size_t n_classes = 0;

  static AliasMap identity(std::size_t n_states);
};

// Random matching of grid-adjacent non-goal cells: states are visited in a
// shuffled order and each unpaired one is paired with a random unpaired
// neighbour when it has any.
AliasMap random_neighbour_pairs(const GridGeometry& geometry, Rng& rng);

struct AliasedQTable {
  Eigen::MatrixXd q;  // n_classes x n_actions
  AliasMap alias;

  AliasedQTable(AliasMap map, std::size_t n_actions);
  Eigen::VectorXd row(std::size_t s) const { return q.row(static_cast<Eigen::Index>(alias.class_of[s])).transpose(); }
  double& at(std::size_t s, std::size_t a) {
    return q(static_cast<Eigen::Index>(alias.class_of[s]), static_cast<Eigen::Index>(a));
  }
};

struct QLearningConfig {
  std::size_t d = 1;
  std::size_t episodes = 6000;
  double epsilon = 0.05;
  double alpha0 = 0.5;
  double alpha_decay = 0.9995;  // alpha_e = alpha0 * alpha_decay^e
  double gamma = 1.0;
  std::size_t eval_every = 200;  // episodes between greedy evaluations
  std::size_t eval_episodes = 50;
};

struct EvalPoint {
  std::size_t episode = 0;  // training episodes completed
  double mean = 0.0;
  double std_error = 0.0;
};

struct QLearningRun {
  AliasedQTable table;
  std::vector<EvalPoint> curve;
  std::vector<double> training_returns;
};

// Q-learning on d-step tuples with target G + gamma^k max_a Q(s', a), where k
// is the number of steps actually taken. The greedy policy, with the same
// repetition, is evaluated on a copy of `env` seeded from the evaluation
// stream of `seed`; exploration draws come from its agent stream.
QLearningRun q_learning_run(Environment& env, AliasMap alias, const QLearningConfig& config,
                            std::uint64_t seed);

// Mean and standard error of the return of acting greedily on `table` with
// d-fold repetition over `episodes` episodes.
EvalPoint evaluate_greedy(Environment& env, const AliasedQTable& table, std::size_t d,
                          double gamma, std::size_t episodes);

}  // namespace fsrl
