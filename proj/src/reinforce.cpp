#include "fsrl/reinforce.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fsrl/errors.hpp"

namespace fsrl {

using Eigen::Index;

SoftmaxLinearPolicy::SoftmaxLinearPolicy(std::size_t n_features, std::size_t n_actions)
    : n_features_(n_features), n_actions_(n_actions) {
  if (n_actions == 0) throw std::invalid_argument("SoftmaxLinearPolicy: no actions");
  theta_ = Eigen::VectorXd::Zero(static_cast<Index>(n_params()));
}

Eigen::VectorXd SoftmaxLinearPolicy::probabilities(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != n_features_) {
    throw std::invalid_argument("SoftmaxLinearPolicy: feature size " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(n_features_));
  }
  const Index stride = static_cast<Index>(n_features_ + 1);
  Eigen::VectorXd z(static_cast<Index>(n_actions_));
  for (Index a = 0; a < z.size(); ++a) {
    z(a) = theta_.segment(a * stride, stride - 1).dot(x) + theta_(a * stride + stride - 1);
  }
  z.array() -= z.maxCoeff();
  z = z.array().exp();
  return z / z.sum();
}

std::size_t SoftmaxLinearPolicy::sample(const Eigen::VectorXd& x, Rng& rng) const {
  const Eigen::VectorXd p = probabilities(x);
  const double u = uniform01(rng);
  double acc = 0.0;
  for (Index a = 0; a < p.size(); ++a) {
    acc += p(a);
    if (u < acc) return static_cast<std::size_t>(a);
  }
  return n_actions_ - 1;
}

Eigen::VectorXd SoftmaxLinearPolicy::grad_log_prob(const Eigen::VectorXd& x,
                                                   std::size_t a) const {
  const Eigen::VectorXd p = probabilities(x);
  const Index stride = static_cast<Index>(n_features_ + 1);
  Eigen::VectorXd xb(stride);
  xb << x, 1.0;
  Eigen::VectorXd g(static_cast<Index>(n_params()));
  for (Index b = 0; b < p.size(); ++b) {
    const double coef = (static_cast<std::size_t>(b) == a ? 1.0 : 0.0) - p(b);
    g.segment(b * stride, stride) = coef * xb;
  }
  return g;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(Eigen::VectorXd::Zero(static_cast<Index>(n))),
      v_(Eigen::VectorXd::Zero(static_cast<Index>(n))) {}

void Adam::ascend(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() += lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

Trajectory rollout(Environment& env, const SoftmaxLinearPolicy& policy, std::size_t d,
                   double gamma, Rng& rng) {
  Trajectory traj;
  Observation obs = env.reset();
  while (true) {
    Decision dec;
    dec.x = obs.features;
    dec.action = policy.sample(dec.x, rng);
    SkipOutcome out = skip_step(env, dec.action, d, gamma);
    dec.return_d = out.return_d;
    dec.steps = out.steps_taken;
    traj.reward_sum += out.reward_sum;
    traj.steps += out.steps_taken;
    traj.decisions.push_back(std::move(dec));
    if (out.terminal || out.truncated) {
      traj.terminal = out.terminal;
      break;
    }
    obs = std::move(out.next);
  }
  return traj;
}

std::vector<double> returns_to_go(const Trajectory& traj, double gamma) {
  std::vector<double> g(traj.decisions.size());
  double acc = 0.0;
  for (std::size_t k = traj.decisions.size(); k-- > 0;) {
    const Decision& dec = traj.decisions[k];
    acc = dec.return_d + std::pow(gamma, static_cast<double>(dec.steps)) * acc;
    g[k] = acc;
  }
  return g;
}

Eigen::VectorXd episode_gradient(const SoftmaxLinearPolicy& policy, const Trajectory& traj,
                                 double gamma, double baseline) {
  const std::vector<double> g = returns_to_go(traj, gamma);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Index>(policy.n_params()));
  double discount = 1.0;
  for (std::size_t k = 0; k < traj.decisions.size(); ++k) {
    const Decision& dec = traj.decisions[k];
    grad += (discount * (g[k] - baseline)) * policy.grad_log_prob(dec.x, dec.action);
    discount *= std::pow(gamma, static_cast<double>(dec.steps));
  }
  return grad;
}

ReinforceAgent::ReinforceAgent(std::size_t n_features, std::size_t n_actions,
                               ReinforceConfig config, std::uint64_t seed)
    : config_(config),
      policy_(n_features, n_actions),
      adam_(policy_.n_params(), config.lr),
      rng_(seed) {
  if (config_.d == 0) throw std::invalid_argument("ReinforceAgent: d must be positive");
}

Trajectory ReinforceAgent::train_episode(Environment& env) {
  Trajectory traj = rollout(env, policy_, config_.d, config_.gamma, rng_);
  const double b = config_.baseline ? baseline_ : 0.0;
  const Eigen::VectorXd grad = episode_gradient(policy_, traj, config_.gamma, b);
  if (!grad.allFinite()) {
    throw DivergenceError("REINFORCE: non-finite gradient after " +
                          std::to_string(adam_.steps()) + " updates (episode length " +
                          std::to_string(traj.steps) + ")");
  }
  adam_.ascend(policy_.params(), grad);
  if (config_.baseline) {
    // Tracks the average return to go seen at a decision.
    const std::vector<double> g = returns_to_go(traj, config_.gamma);
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= static_cast<double>(g.size());
    if (!baseline_set_) {
      baseline_ = mean;
      baseline_set_ = true;
    } else {
      baseline_ = config_.baseline_decay * baseline_ + (1.0 - config_.baseline_decay) * mean;
    }
  }
  return traj;
}

ReinforceRun reinforce_run(Environment& env, ReinforceConfig config, std::size_t episodes,
                           std::uint64_t seed) {
  ReinforceAgent agent(env.n_features(), env.n_actions(), config, seed);
  std::vector<double> returns;
  returns.reserve(episodes);
  for (std::size_t i = 0; i < episodes; ++i) {
    returns.push_back(agent.train_episode(env).reward_sum);
  }
  return {std::move(returns), agent.policy(), agent.baseline()};
}

double gradient_variance_probe(const SoftmaxLinearPolicy& policy, Environment& env,
                               std::size_t d, double gamma, double baseline,
                               std::size_t n_samples, Rng& rng) {
  if (n_samples < 2) throw std::invalid_argument("gradient_variance_probe: need 2+ samples");
  const Index n = static_cast<Index>(policy.n_params());
  Eigen::MatrixXd g(n, static_cast<Index>(n_samples));
  for (std::size_t i = 0; i < n_samples; ++i) {
    const Trajectory traj = rollout(env, policy, d, gamma, rng);
    g.col(static_cast<Index>(i)) = episode_gradient(policy, traj, gamma, baseline);
  }
  const Eigen::VectorXd mean = g.rowwise().mean();
  const Eigen::MatrixXd centred = g.colwise() - mean;
  return centred.squaredNorm() / static_cast<double>(n_samples - 1);
}

}  // namespace fsrl
