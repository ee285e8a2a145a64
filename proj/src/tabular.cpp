#include "fsrl/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fsrl/errors.hpp"

namespace fsrl {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_stochastic(const MatrixXd& t, const std::string& what) {
  if (t.rows() != t.cols()) {
    throw std::invalid_argument(what + ": transition matrix must be square");
  }
  for (Index s = 0; s < t.rows(); ++s) {
    double sum = 0.0;
    for (Index j = 0; j < t.cols(); ++j) {
      const double p = t(s, j);
      if (!(p >= 0.0 && p <= 1.0)) {
        std::ostringstream msg;
        msg << what << ": entry (" << s << "," << j << ") = " << p
            << " outside [0,1]";
        throw std::invalid_argument(msg.str());
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kStochasticTol) {
      std::ostringstream msg;
      msg << what << ": row " << s << " sums to " << sum;
      throw std::invalid_argument(msg.str());
    }
  }
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in [0,1]");
  }
}

double horizon_sum(double gamma, std::size_t d) {
  double total = 0.0, g = 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    total += g;
    g *= gamma;
  }
  return total;
}

MatrixXd matrix_power(const MatrixXd& t, std::size_t d) {
  MatrixXd result = MatrixXd::Identity(t.rows(), t.cols());
  MatrixXd base = t;
  while (d > 0) {
    if (d & 1U) result = result * base;
    d >>= 1U;
    if (d > 0) base = base * base;
  }
  return result;
}

// Every state from which `targets` is reachable along positive-probability
// edges of any of the given matrices.
std::vector<bool> can_reach(const std::vector<const MatrixXd*>& matrices,
                            const std::vector<std::size_t>& targets,
                            std::size_t n) {
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue;
  for (std::size_t t : targets) {
    seen[t] = true;
    queue.push_back(t);
  }
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for (std::size_t u = 0; u < n; ++u) {
      if (seen[u]) continue;
      for (const MatrixXd* m : matrices) {
        if ((*m)(static_cast<Index>(u), static_cast<Index>(v)) > 0.0) {
          seen[u] = true;
          queue.push_back(u);
          break;
        }
      }
    }
  }
  return seen;
}

VectorXd solve_absorbing(const MatrixXd& t, const VectorXd& r,
                         const std::vector<std::size_t>& absorbing) {
  const std::size_t n = static_cast<std::size_t>(r.size());
  if (absorbing.empty()) {
    throw std::invalid_argument(
        "undiscounted evaluation requires a zero-reward absorbing state");
  }
  const auto reach = can_reach({&t}, absorbing, n);
  std::vector<bool> is_absorbing(n, false);
  for (std::size_t s : absorbing) is_absorbing[s] = true;
  std::vector<std::size_t> transient;
  for (std::size_t s = 0; s < n; ++s) {
    if (!reach[s]) {
      std::ostringstream msg;
      msg << "undiscounted evaluation: state " << s
          << " never reaches an absorbing state";
      throw std::invalid_argument(msg.str());
    }
    if (!is_absorbing[s]) transient.push_back(s);
  }
  VectorXd v = VectorXd::Zero(static_cast<Index>(n));
  const Index m = static_cast<Index>(transient.size());
  if (m == 0) return v;
  MatrixXd a(m, m);
  VectorXd b(m);
  for (Index i = 0; i < m; ++i) {
    const Index si = static_cast<Index>(transient[i]);
    b(i) = r(si);
    for (Index j = 0; j < m; ++j) {
      a(i, j) = (i == j ? 1.0 : 0.0) - t(si, static_cast<Index>(transient[j]));
    }
  }
  const VectorXd x = a.partialPivLu().solve(b);
  for (Index i = 0; i < m; ++i) v(static_cast<Index>(transient[i])) = x(i);
  return v;
}

}  // namespace

// -- Models ------------------------------------------------------------------

TabularMRP::TabularMRP(VectorXd rewards, MatrixXd transitions, double gamma,
                       double r_max)
    : rewards_(std::move(rewards)),
      transitions_(std::move(transitions)),
      gamma_(gamma),
      r_max_(r_max) {
  if (rewards_.size() == 0) throw std::invalid_argument("MRP needs at least one state");
  if (transitions_.rows() != rewards_.size()) {
    throw std::invalid_argument("MRP reward/transition size mismatch");
  }
  check_stochastic(transitions_, "MRP");
  check_gamma(gamma_);
  if (!(r_max_ > 0.0)) throw std::invalid_argument("r_max must be positive");
  for (Index s = 0; s < rewards_.size(); ++s) {
    if (!std::isfinite(rewards_(s)) || std::abs(rewards_(s)) > r_max_ * (1 + 1e-12)) {
      std::ostringstream msg;
      msg << "MRP reward at state " << s << " exceeds r_max";
      throw std::invalid_argument(msg.str());
    }
  }
}

std::vector<std::size_t> TabularMRP::absorbing_states() const {
  std::vector<std::size_t> out;
  for (Index s = 0; s < rewards_.size(); ++s) {
    if (transitions_(s, s) == 1.0 && rewards_(s) == 0.0) out.push_back(static_cast<std::size_t>(s));
  }
  return out;
}

TabularMDP::TabularMDP(MatrixXd rewards, std::vector<MatrixXd> transitions,
                       double gamma, double r_max,
                       std::vector<std::size_t> terminal_states)
    : rewards_(std::move(rewards)),
      transitions_(std::move(transitions)),
      gamma_(gamma),
      r_max_(r_max),
      terminal_states_(std::move(terminal_states)) {
  if (rewards_.rows() == 0 || rewards_.cols() == 0) {
    throw std::invalid_argument("MDP needs at least one state and one action");
  }
  if (transitions_.size() != static_cast<std::size_t>(rewards_.cols())) {
    throw std::invalid_argument("MDP needs one transition matrix per action");
  }
  for (std::size_t a = 0; a < transitions_.size(); ++a) {
    if (transitions_[a].rows() != rewards_.rows()) {
      throw std::invalid_argument("MDP reward/transition size mismatch");
    }
    check_stochastic(transitions_[a], "MDP action " + std::to_string(a));
  }
  check_gamma(gamma_);
  if (!(r_max_ > 0.0)) throw std::invalid_argument("r_max must be positive");
  for (Index s = 0; s < rewards_.rows(); ++s) {
    for (Index a = 0; a < rewards_.cols(); ++a) {
      if (!std::isfinite(rewards_(s, a)) ||
          std::abs(rewards_(s, a)) > r_max_ * (1 + 1e-12)) {
        std::ostringstream msg;
        msg << "MDP reward at (" << s << "," << a << ") exceeds r_max";
        throw std::invalid_argument(msg.str());
      }
    }
  }
  std::sort(terminal_states_.begin(), terminal_states_.end());
  terminal_states_.erase(std::unique(terminal_states_.begin(), terminal_states_.end()),
                         terminal_states_.end());
  for (std::size_t s : terminal_states_) {
    if (s >= n_states()) throw std::invalid_argument("terminal state out of range");
    const Index si = static_cast<Index>(s);
    for (std::size_t a = 0; a < n_actions(); ++a) {
      if (transitions_[a](si, si) != 1.0 || rewards_(si, static_cast<Index>(a)) != 0.0) {
        throw std::invalid_argument("terminal state " + std::to_string(s) +
                                    " must self-loop with reward 0");
      }
    }
  }
}

std::vector<std::size_t> TabularMDP::absorbing_states() const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < n_states(); ++s) {
    const Index si = static_cast<Index>(s);
    bool absorbing = true;
    for (std::size_t a = 0; a < n_actions() && absorbing; ++a) {
      absorbing = transitions_[a](si, si) == 1.0 && rewards_(si, static_cast<Index>(a)) == 0.0;
    }
    if (absorbing) out.push_back(s);
  }
  return out;
}

StateValues ActionValues::state_values() const {
  return StateValues{values.rowwise().maxCoeff()};
}

double max_norm_diff(const StateValues& a, const StateValues& b) {
  if (a.values.size() != b.values.size()) throw std::invalid_argument("size mismatch");
  return a.values.size() ? (a.values - b.values).cwiseAbs().maxCoeff() : 0.0;
}

double max_norm_diff(const ActionValues& a, const ActionValues& b) {
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols()) {
    throw std::invalid_argument("size mismatch");
  }
  return a.values.size() ? (a.values - b.values).cwiseAbs().maxCoeff() : 0.0;
}

// -- Induced models ----------------------------------------------------------

TabularMRP induce_mrp(const TabularMRP& mrp, std::size_t d) {
  if (d == 0) throw std::invalid_argument("frame-skip d must be at least 1");
  if (d == 1) return mrp;
  const MatrixXd& t = mrp.transitions();
  VectorXd acc = mrp.rewards();
  VectorXd term = mrp.rewards();
  for (std::size_t j = 1; j < d; ++j) {
    term = mrp.gamma() * (t * term);
    acc += term;
  }
  return TabularMRP(std::move(acc), matrix_power(t, d), std::pow(mrp.gamma(), static_cast<double>(d)),
                    mrp.r_max() * horizon_sum(mrp.gamma(), d));
}

TabularMDP induce_mdp(const TabularMDP& mdp, std::size_t d) {
  if (d == 0) throw std::invalid_argument("frame-skip d must be at least 1");
  if (d == 1) return mdp;
  MatrixXd rewards(mdp.rewards().rows(), mdp.rewards().cols());
  std::vector<MatrixXd> transitions;
  transitions.reserve(mdp.n_actions());
  for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
    const MatrixXd& t = mdp.transitions(a);
    VectorXd term = mdp.rewards().col(static_cast<Index>(a));
    VectorXd acc = term;
    for (std::size_t j = 1; j < d; ++j) {
      term = mdp.gamma() * (t * term);
      acc += term;
    }
    rewards.col(static_cast<Index>(a)) = acc;
    transitions.push_back(matrix_power(t, d));
  }
  return TabularMDP(std::move(rewards), std::move(transitions),
                    std::pow(mdp.gamma(), static_cast<double>(d)),
                    mdp.r_max() * horizon_sum(mdp.gamma(), d), mdp.terminal_states());
}

TabularMRP policy_mrp(const TabularMDP& mdp, const DeterministicPolicy& pi) {
  const Index n = static_cast<Index>(mdp.n_states());
  if (pi.action.size() != mdp.n_states()) throw std::invalid_argument("policy size mismatch");
  VectorXd r(n);
  MatrixXd t(n, n);
  for (Index s = 0; s < n; ++s) {
    const std::size_t a = pi.action[static_cast<std::size_t>(s)];
    if (a >= mdp.n_actions()) throw std::invalid_argument("policy action out of range");
    r(s) = mdp.rewards()(s, static_cast<Index>(a));
    t.row(s) = mdp.transitions(a).row(s);
  }
  return TabularMRP(std::move(r), std::move(t), mdp.gamma(), mdp.r_max());
}

// -- Ergodicity --------------------------------------------------------------

ErgodicityReport check_ergodic(const TabularMRP& mrp) {
  const std::size_t n = mrp.n_states();
  const MatrixXd& t = mrp.transitions();
  ErgodicityReport report;

  // BFS levels from state 0 along forward edges.
  std::vector<long> level(n, -1);
  std::deque<std::size_t> queue{0};
  level[0] = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v = 0; v < n; ++v) {
      if (level[v] < 0 && t(static_cast<Index>(u), static_cast<Index>(v)) > 0.0) {
        level[v] = level[u] + 1;
        queue.push_back(v);
      }
    }
  }
  for (std::size_t s = 0; s < n; ++s) {
    if (level[s] < 0) {
      report.diagnostic = "not irreducible: state " + std::to_string(s) +
                          " unreachable from state 0";
      return report;
    }
  }
  const auto back = can_reach({&t}, {0}, n);
  for (std::size_t s = 0; s < n; ++s) {
    if (!back[s]) {
      report.diagnostic = "not irreducible: state 0 unreachable from state " +
                          std::to_string(s);
      return report;
    }
  }
  report.irreducible = true;

  // The period is the gcd of level[u] + 1 - level[v] over all edges u -> v.
  long g = 0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (t(static_cast<Index>(u), static_cast<Index>(v)) > 0.0) {
        g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
      }
    }
  }
  report.period = static_cast<std::size_t>(g);
  if (report.period != 1) {
    report.diagnostic = "not aperiodic: period " + std::to_string(report.period);
  }
  return report;
}

VectorXd stationary_distribution(const TabularMRP& mrp, double tol,
                                 std::size_t max_iterations) {
  const auto report = check_ergodic(mrp);
  if (!report.ergodic()) throw StructuralError(report.diagnostic);
  const Index n = static_cast<Index>(mrp.n_states());
  const MatrixXd tt = mrp.transitions().transpose();
  VectorXd mu = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  double residual = 0.0;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    VectorXd next = tt * mu;
    next /= next.sum();
    residual = (next - mu).cwiseAbs().maxCoeff();
    mu = std::move(next);
    if (residual <= tol) return mu;
  }
  throw ConvergenceError("stationary distribution did not converge", residual);
}

// -- Solvers -----------------------------------------------------------------

StateValues evaluate_mrp(const TabularMRP& mrp) {
  const MatrixXd& t = mrp.transitions();
  const VectorXd& r = mrp.rewards();
  const Index n = r.size();
  if (mrp.gamma() >= 1.0) {
    return StateValues{solve_absorbing(t, r, mrp.absorbing_states())};
  }
  if (static_cast<std::size_t>(n) <= kDirectSolveLimit) {
    const MatrixXd a = MatrixXd::Identity(n, n) - mrp.gamma() * t;
    return StateValues{a.partialPivLu().solve(r)};
  }
  VectorXd v = VectorXd::Zero(n);
  for (std::size_t it = 0; it < 10'000'000; ++it) {
    VectorXd next = r + mrp.gamma() * (t * v);
    const double residual = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (residual <= 1e-10) return StateValues{v};
  }
  throw ConvergenceError("fixed-point evaluation did not converge", 0.0);
}

StateValues evaluate_policy(const TabularMDP& mdp, const DeterministicPolicy& pi) {
  return evaluate_mrp(policy_mrp(mdp, pi));
}

StateValues evaluate_policy_with_repeat(const TabularMDP& mdp,
                                        const DeterministicPolicy& pi,
                                        std::size_t d) {
  return evaluate_policy(induce_mdp(mdp, d), pi);
}

ActionValues q_from_v(const TabularMDP& mdp, const StateValues& v) {
  MatrixXd q(mdp.rewards().rows(), mdp.rewards().cols());
  for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
    const Index ai = static_cast<Index>(a);
    q.col(ai) = mdp.rewards().col(ai) + mdp.gamma() * (mdp.transitions(a) * v.values);
  }
  return ActionValues{std::move(q)};
}

ActionValues bellman_operator(const TabularMDP& mdp, const ActionValues& q) {
  return q_from_v(mdp, q.state_values());
}

bool is_episodic(const TabularMDP& mdp) {
  const auto absorbing = mdp.absorbing_states();
  if (absorbing.empty()) return false;
  std::vector<const MatrixXd*> ms;
  for (const auto& t : mdp.transitions()) ms.push_back(&t);
  const auto reach = can_reach(ms, absorbing, mdp.n_states());
  return std::all_of(reach.begin(), reach.end(), [](bool b) { return b; });
}

ActionValues value_iteration(const TabularMDP& mdp, double tol,
                             std::size_t max_iterations) {
  if (mdp.gamma() >= 1.0 && !is_episodic(mdp)) {
    throw std::invalid_argument(
        "value iteration with gamma = 1 requires an episodic model");
  }
  ActionValues q{MatrixXd::Zero(mdp.rewards().rows(), mdp.rewards().cols())};
  double residual = 0.0;
  bool converged = false;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    ActionValues next = bellman_operator(mdp, q);
    residual = max_norm_diff(next, q);
    q = std::move(next);
    if (residual <= tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "value iteration did not converge; residual " << residual;
    throw ConvergenceError(msg.str(), residual);
  }

  // Policy-iteration polish: exact evaluation of the greedy policy.
  DeterministicPolicy pi = greedy_policy(q);
  for (int round = 0; round < 100; ++round) {
    ActionValues exact;
    try {
      exact = q_from_v(mdp, evaluate_policy(mdp, pi));
    } catch (const std::invalid_argument&) {
      break;  // improper greedy policy in an undiscounted model
    }
    q = std::move(exact);
    DeterministicPolicy next = greedy_policy(q);
    if (next == pi) break;
    pi = std::move(next);
  }
  return q;
}

DeterministicPolicy greedy_policy(const ActionValues& q) {
  DeterministicPolicy pi;
  pi.action.resize(q.n_states());
  for (Index s = 0; s < q.values.rows(); ++s) {
    Index best = 0;
    for (Index a = 1; a < q.values.cols(); ++a) {
      if (q.values(s, a) > q.values(s, best)) best = a;
    }
    pi.action[static_cast<std::size_t>(s)] = static_cast<std::size_t>(best);
  }
  return pi;
}

VectorXd q_star_repeat(const TabularMDP& mdp, const ActionValues& q_star,
                       std::size_t a, std::size_t d) {
  if (d == 0) throw std::invalid_argument("repeat count must be at least 1");
  if (a >= mdp.n_actions()) throw std::out_of_range("action out of range");
  const Index ai = static_cast<Index>(a);
  VectorXd q = q_star.values.col(ai);
  for (std::size_t k = 2; k <= d; ++k) {
    q = mdp.rewards().col(ai) + mdp.gamma() * (mdp.transitions(a) * q);
  }
  return q;
}

double q_star_repeat(const TabularMDP& mdp, const ActionValues& q_star,
                     std::size_t s, std::size_t a, std::size_t d) {
  if (s >= mdp.n_states()) throw std::out_of_range("state out of range");
  return q_star_repeat(mdp, q_star, a, d)(static_cast<Index>(s));
}

PriceOfInertia price_of_inertia(const TabularMDP& mdp, const ActionValues& q_star) {
  MatrixXd twice(q_star.values.rows(), q_star.values.cols());
  for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
    twice.col(static_cast<Index>(a)) = q_star_repeat(mdp, q_star, a, 2);
  }
  PriceOfInertia best{-std::numeric_limits<double>::infinity(), 0, 0};
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      const double gap = q_star(s, a) - twice(static_cast<Index>(s), static_cast<Index>(a));
      if (gap > best.value) best = {gap, s, a};
    }
  }
  return best;
}

PriceOfInertia price_of_inertia(const TabularMDP& mdp) {
  return price_of_inertia(mdp, value_iteration(mdp));
}

}  // namespace fsrl
