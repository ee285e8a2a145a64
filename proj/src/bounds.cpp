#include "fsrl/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace fsrl {

using Eigen::Index;

BoundReport make_report(double bound, double exact, BoundContext context) {
  BoundReport r;
  r.bound_value = bound;
  r.exact_value = exact;
  r.slack = bound - exact;
  r.holds = r.slack >= -kBoundSlackTol;
  r.context = context;
  return r;
}

GeometricTerms geometric_terms(std::size_t m, std::size_t n, double gamma) {
  if (m < 2) throw std::invalid_argument("geometric_terms: m must be at least 2");
  if (n < 1) throw std::invalid_argument("geometric_terms: n must be at least 1");
  if (gamma < 0.0) throw std::invalid_argument("geometric_terms: gamma must be >= 0");
  GeometricTerms t;
  double power = 1.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    t.g += power;
    power *= gamma;
  }
  const double gm = std::pow(gamma, static_cast<double>(m));
  if (n == kInfinite) {
    if (gamma >= 1.0) {
      throw std::invalid_argument("geometric_terms: H_{m,inf} requires gamma < 1");
    }
    t.h = 1.0 / (1.0 - gm);
  } else {
    double p = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      t.h += p;
      p *= gm;
    }
  }
  return t;
}

double repetition_constant(double gamma, std::size_t d) {
  if (d == 0) throw std::invalid_argument("frame-skip d must be at least 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("repetition bound requires gamma in [0,1)");
  }
  const double gd1 = std::pow(gamma, static_cast<double>(d - 1));
  const double gd = std::pow(gamma, static_cast<double>(d));
  return (1.0 - gd1) / ((1.0 - gamma) * (1.0 - gd));
}

double deficit_bound(double delta, double gamma, std::size_t d) {
  if (delta < 0.0) throw std::invalid_argument("deficit_bound: delta must be >= 0");
  return delta * repetition_constant(gamma, d);
}

double value_deficit(const TabularMDP& mdp, std::size_t d) {
  const ActionValues q = value_iteration(mdp);
  const ActionValues qd = value_iteration(induce_mdp(mdp, d));
  return max_norm_diff(q.state_values(), qd.state_values());
}

DeficitReport verify_value_deficit(const TabularMDP& mdp, std::size_t d) {
  const double c3 = repetition_constant(mdp.gamma(), d);
  const ActionValues q = value_iteration(mdp);
  const ActionValues qd = value_iteration(induce_mdp(mdp, d));
  const PriceOfInertia inertia = price_of_inertia(mdp, q);
  BoundContext ctx;
  ctx.gamma = mdp.gamma();
  ctx.d = d;
  ctx.delta = inertia.value;
  ctx.c3 = c3;
  const double bound = std::max(inertia.value, 0.0) * c3;
  DeficitReport out;
  out.state_values = make_report(bound, max_norm_diff(q.state_values(), qd.state_values()), ctx);
  out.action_values = make_report(bound, max_norm_diff(q, qd), ctx);
  return out;
}

TabularMDP lower_bound_mdp(double delta, double gamma, std::size_t d) {
  if (d < 2) throw std::invalid_argument("lower_bound_mdp: d must be at least 2");
  if (!(delta > 0.0)) throw std::invalid_argument("lower_bound_mdp: delta must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("lower_bound_mdp: gamma must lie in (0,1)");
  }
  const double x = delta / gamma;
  const Index n = static_cast<Index>(d);
  Eigen::MatrixXd rewards = Eigen::MatrixXd::Zero(n, 2);
  std::vector<Eigen::MatrixXd> transitions(2, Eigen::MatrixXd::Zero(n, n));
  for (Index s = 0; s < n; ++s) {
    transitions[kStay](s, s) = 1.0;
    rewards(s, kStay) = s == 0 ? 0.0 : x;
    transitions[kMove](s, (s + 1) % n) = 1.0;
    rewards(s, kMove) = s == 0 ? x : 0.0;
  }
  return TabularMDP(std::move(rewards), std::move(transitions), gamma, x);
}

ReversibilityReport check_reversible_inertia(const TabularMDP& mdp) {
  const std::size_t n = mdp.n_states();
  // successor[s][a], or throw when a row is not a unit vector.
  std::vector<std::vector<std::size_t>> successor(n, std::vector<std::size_t>(mdp.n_actions()));
  for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
    const auto& t = mdp.transitions(a);
    for (std::size_t s = 0; s < n; ++s) {
      Index next = 0;
      const double p = t.row(static_cast<Index>(s)).maxCoeff(&next);
      if (p != 1.0) {
        throw std::invalid_argument("check_reversible_inertia: model is not deterministic");
      }
      successor[s][a] = static_cast<std::size_t>(next);
    }
  }

  ReversibilityReport out;
  out.reversible = true;
  for (std::size_t s = 0; s < n && out.reversible; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      const std::size_t to = successor[s][a];
      bool has_inverse = false;
      for (std::size_t b = 0; b < mdp.n_actions() && !has_inverse; ++b) {
        has_inverse = successor[to][b] == s;
      }
      if (!has_inverse) {
        out.reversible = false;
        out.witness = Edge{s, a, to};
        break;
      }
    }
  }

  const PriceOfInertia inertia = price_of_inertia(mdp);
  BoundContext ctx;
  ctx.gamma = mdp.gamma();
  ctx.delta = inertia.value;
  const double g = mdp.gamma();
  out.sharp = make_report(2.0 * g * (1.0 + g) * mdp.r_max(), inertia.value, ctx);
  out.loose = make_report(4.0 * mdp.r_max(), inertia.value, ctx);
  if (!out.reversible) {
    out.sharp.holds = false;
    out.loose.holds = false;
  }
  return out;
}

BoundReport greedy_loss_bound_check(const TabularMDP& mdp, const ActionValues& q_star,
                                    const ActionValues& q_hat) {
  const double g = mdp.gamma();
  if (!(g < 1.0)) throw std::invalid_argument("greedy loss bound requires gamma < 1");
  const double eps = max_norm_diff(q_star, q_hat);
  const StateValues v_hat = evaluate_policy(mdp, greedy_policy(q_hat));
  BoundContext ctx;
  ctx.gamma = g;
  ctx.epsilon = eps;
  return make_report(2.0 * eps * g / (1.0 - g), max_norm_diff(q_star.state_values(), v_hat),
                     ctx);
}

BoundReport greedy_loss_bound_check(const TabularMDP& mdp, const ActionValues& q_hat) {
  return greedy_loss_bound_check(mdp, value_iteration(mdp), q_hat);
}

AggregateReport aggregate_bound_check(const TabularMDP& mdp, const ActionValues& q_star,
                                      double delta, const ActionValues& q_hat,
                                      std::size_t d) {
  const double g = mdp.gamma();
  const double c3 = repetition_constant(g, d);
  const double gd = std::pow(g, static_cast<double>(d));
  const double horizon = gd / (1.0 - gd);
  BoundContext ctx;
  ctx.gamma = g;
  ctx.d = d;
  ctx.delta = delta;
  ctx.epsilon = max_norm_diff(q_star, q_hat);
  ctx.c3 = c3;
  ctx.c1 = c3 * (1.0 + 2.0 * horizon);
  ctx.c2 = 2.0 * ctx.epsilon;

  const StateValues v_d = evaluate_policy_with_repeat(mdp, greedy_policy(q_hat), d);
  AggregateReport out;
  out.inertia_term = std::max(delta, 0.0) * ctx.c1;
  out.approximation_term = horizon * ctx.c2;
  out.report = make_report(out.inertia_term + out.approximation_term,
                           max_norm_diff(q_star.state_values(), v_d), ctx);
  return out;
}

AggregateReport aggregate_bound_check(const TabularMDP& mdp, const ActionValues& q_hat,
                                      std::size_t d) {
  const ActionValues q_star = value_iteration(mdp);
  const double delta = price_of_inertia(mdp, q_star).value;
  return aggregate_bound_check(mdp, q_star, delta, q_hat, d);
}

}  // namespace fsrl
