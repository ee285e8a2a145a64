#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "fsrl/environment.hpp"
#include "fsrl/rng.hpp"

namespace fsrl {

// Softmax over per-action linear scores theta_a . [x, 1]. Parameters are
// stored action-major: entry a * (n_features + 1) + i.
class SoftmaxLinearPolicy {
 public:
  SoftmaxLinearPolicy(std::size_t n_features, std::size_t n_actions);

  std::size_t n_features() const { return n_features_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t n_params() const { return n_actions_ * (n_features_ + 1); }

  Eigen::VectorXd probabilities(const Eigen::VectorXd& x) const;
  std::size_t sample(const Eigen::VectorXd& x, Rng& rng) const;
  // Gradient of log pi(a | x) with respect to the parameters.
  Eigen::VectorXd grad_log_prob(const Eigen::VectorXd& x, std::size_t a) const;

  const Eigen::VectorXd& params() const { return theta_; }
  Eigen::VectorXd& params() { return theta_; }

 private:
  std::size_t n_features_;
  std::size_t n_actions_;
  Eigen::VectorXd theta_;
};

// First/second-moment adaptive steps, used here for ascent.
class Adam {
 public:
  explicit Adam(std::size_t n, double lr = 0.01, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void ascend(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  std::size_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  std::size_t t_ = 0;
};

// One decision of a repeated-action episode.
struct Decision {
  Eigen::VectorXd x;
  std::size_t action = 0;
  double return_d = 0.0;  // discounted reward over the repeated steps
  std::size_t steps = 0;
};

struct Trajectory {
  std::vector<Decision> decisions;
  double reward_sum = 0.0;  // undiscounted
  std::size_t steps = 0;
  bool terminal = false;
};

// Plays one episode, repeating each sampled action d times.
Trajectory rollout(Environment& env, const SoftmaxLinearPolicy& policy, std::size_t d,
                   double gamma, Rng& rng);

// Discounted return from each decision onwards.
std::vector<double> returns_to_go(const Trajectory& traj, double gamma);

// Sample gradient of J(w) = E[discounted return from the start]:
//   sum_k gamma^{t_k} grad log pi(a_k | x_k) (G_k - baseline)
// where t_k is the time step of decision k and G_k its return to go.
Eigen::VectorXd episode_gradient(const SoftmaxLinearPolicy& policy, const Trajectory& traj,
                                 double gamma, double baseline);

struct ReinforceConfig {
  std::size_t d = 1;
  double gamma = 0.99;
  double lr = 0.01;
  bool baseline = true;
  double baseline_decay = 0.99;
};

class ReinforceAgent {
 public:
  ReinforceAgent(std::size_t n_features, std::size_t n_actions, ReinforceConfig config,
                 std::uint64_t seed);

  // Samples an episode, then takes one Adam step. Throws DivergenceError if
  // the gradient is not finite.
  Trajectory train_episode(Environment& env);

  const SoftmaxLinearPolicy& policy() const { return policy_; }
  double baseline() const { return baseline_; }
  const ReinforceConfig& config() const { return config_; }

 private:
  ReinforceConfig config_;
  SoftmaxLinearPolicy policy_;
  Adam adam_;
  Rng rng_;
  double baseline_ = 0.0;
  bool baseline_set_ = false;
};

struct ReinforceRun {
  std::vector<double> returns;  // undiscounted per episode
  SoftmaxLinearPolicy policy;
  double baseline = 0.0;
};

ReinforceRun reinforce_run(Environment& env, ReinforceConfig config, std::size_t episodes,
                           std::uint64_t seed);

// Runs the frozen policy for n_samples episodes and returns the trace of the
// sample covariance of their episode gradients.
double gradient_variance_probe(const SoftmaxLinearPolicy& policy, Environment& env,
                               std::size_t d, double gamma, double baseline,
                               std::size_t n_samples, Rng& rng);

}  // namespace fsrl
