#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fsrl {

// Tolerance for row-stochasticity checks.
inline constexpr double kStochasticTol = 1e-12;

// Finite Markov reward process. R(s) is the reward on exiting s.
class TabularMRP {
 public:
  TabularMRP(Eigen::VectorXd rewards, Eigen::MatrixXd transitions, double gamma,
             double r_max);

  std::size_t n_states() const { return static_cast<std::size_t>(rewards_.size()); }
  const Eigen::VectorXd& rewards() const { return rewards_; }
  const Eigen::MatrixXd& transitions() const { return transitions_; }
  double gamma() const { return gamma_; }
  double r_max() const { return r_max_; }

  // States with T(s,s) = 1 and R(s) = 0.
  std::vector<std::size_t> absorbing_states() const;

 private:
  Eigen::VectorXd rewards_;
  Eigen::MatrixXd transitions_;
  double gamma_;
  double r_max_;
};

// Finite MDP with expected rewards R(s,a) and one transition matrix per action.
class TabularMDP {
 public:
  TabularMDP(Eigen::MatrixXd rewards, std::vector<Eigen::MatrixXd> transitions,
             double gamma, double r_max,
             std::vector<std::size_t> terminal_states = {});

  std::size_t n_states() const { return static_cast<std::size_t>(rewards_.rows()); }
  std::size_t n_actions() const { return static_cast<std::size_t>(rewards_.cols()); }
  // n_states x n_actions.
  const Eigen::MatrixXd& rewards() const { return rewards_; }
  const Eigen::MatrixXd& transitions(std::size_t action) const {
    return transitions_.at(action);
  }
  const std::vector<Eigen::MatrixXd>& transitions() const { return transitions_; }
  double gamma() const { return gamma_; }
  double r_max() const { return r_max_; }
  const std::vector<std::size_t>& terminal_states() const { return terminal_states_; }

  // Declared terminals plus any state where every action self-loops with
  // reward 0.
  std::vector<std::size_t> absorbing_states() const;

 private:
  Eigen::MatrixXd rewards_;
  std::vector<Eigen::MatrixXd> transitions_;
  double gamma_;
  double r_max_;
  std::vector<std::size_t> terminal_states_;
};

struct StateValues {
  Eigen::VectorXd values;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  double operator[](std::size_t s) const { return values(static_cast<Eigen::Index>(s)); }
  double max_norm() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

struct ActionValues {
  Eigen::MatrixXd values;  // n_states x n_actions

  std::size_t n_states() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t n_actions() const { return static_cast<std::size_t>(values.cols()); }
  double operator()(std::size_t s, std::size_t a) const {
    return values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
  }
  double max_norm() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
  // V(s) = max_a Q(s,a).
  StateValues state_values() const;
};

struct DeterministicPolicy {
  std::vector<std::size_t> action;

  std::size_t operator[](std::size_t s) const { return action[s]; }
  bool operator==(const DeterministicPolicy&) const = default;
};

double max_norm_diff(const StateValues& a, const StateValues& b);
double max_norm_diff(const ActionValues& a, const ActionValues& b);

// ---------------------------------------------------------------------------
// Induced models: one step of the result is d steps of the input, discounted
// by gamma^d, with the d intermediate rewards accumulated.

TabularMRP induce_mrp(const TabularMRP& mrp, std::size_t d);
// Action a of the result repeats action a of the input d times.
TabularMDP induce_mdp(const TabularMDP& mdp, std::size_t d);

// The MRP obtained by fixing a deterministic policy.
TabularMRP policy_mrp(const TabularMDP& mdp, const DeterministicPolicy& pi);

// ---------------------------------------------------------------------------
// Ergodicity and stationary distribution.

struct ErgodicityReport {
  bool irreducible = false;
  std::size_t period = 0;  // 0 when not irreducible
  std::string diagnostic;

  bool ergodic() const { return irreducible && period == 1; }
  explicit operator bool() const { return ergodic(); }
};

ErgodicityReport check_ergodic(const TabularMRP& mrp);

// Power iteration from the uniform distribution. Throws StructuralError when
// the chain is not ergodic.
Eigen::VectorXd stationary_distribution(const TabularMRP& mrp,
                                        double tol = 1e-12,
                                        std::size_t max_iterations = 1'000'000);

// ---------------------------------------------------------------------------
// Exact solvers.

// Solves V = R + gamma T V. Direct LU solve up to kDirectSolveLimit states,
// fixed-point iteration above. With gamma = 1 the chain must be absorbing:
// every state must reach a zero-reward absorbing state.
inline constexpr std::size_t kDirectSolveLimit = 2000;
StateValues evaluate_mrp(const TabularMRP& mrp);

StateValues evaluate_policy(const TabularMDP& mdp, const DeterministicPolicy& pi);

// Value of executing pi with every action repeated d times, read in the
// input model's discounting.
StateValues evaluate_policy_with_repeat(const TabularMDP& mdp,
                                        const DeterministicPolicy& pi,
                                        std::size_t d);

// Q(s,a) = R(s,a) + gamma sum_s' T(s,a,s') V(s').
ActionValues q_from_v(const TabularMDP& mdp, const StateValues& v);

// (BQ)(s,a) = R(s,a) + gamma sum_s' T(s,a,s') max_a' Q(s',a').
ActionValues bellman_operator(const TabularMDP& mdp, const ActionValues& q);

// Optimal action values. Value iteration until the Bellman residual is below
// tol, then policy-iteration polishing with exact evaluation so the result is
// accurate to solver precision. Throws ConvergenceError on the iteration cap.
ActionValues value_iteration(const TabularMDP& mdp, double tol = 1e-10,
                             std::size_t max_iterations = 1'000'000);

// Argmax per state, ties to the lowest action index.
DeterministicPolicy greedy_policy(const ActionValues& q);

// Q*(s, a^d): repeat a for d steps, then act optimally.
double q_star_repeat(const TabularMDP& mdp, const ActionValues& q_star,
                     std::size_t s, std::size_t a, std::size_t d);
// Column a of the same quantity for every state.
Eigen::VectorXd q_star_repeat(const TabularMDP& mdp, const ActionValues& q_star,
                              std::size_t a, std::size_t d);

struct PriceOfInertia {
  double value = 0.0;
  std::size_t state = 0;
  std::size_t action = 0;
};

// max_{s,a} Q*(s,a) - Q*(s,a^2).
PriceOfInertia price_of_inertia(const TabularMDP& mdp, const ActionValues& q_star);
PriceOfInertia price_of_inertia(const TabularMDP& mdp);

// True when every state can reach an absorbing state under some action
// sequence (equivalently, under the uniform-random policy).
bool is_episodic(const TabularMDP& mdp);

}  // namespace fsrl
