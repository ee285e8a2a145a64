#pragma once

#include <cstddef>
#include <limits>
#include <optional>

#include "fsrl/tabular.hpp"

namespace fsrl {

// A bound is considered to hold when bound - exact >= -kBoundSlackTol.
inline constexpr double kBoundSlackTol = 1e-9;

struct BoundContext {
  double gamma = 0.0;
  std::size_t d = 1;
  double delta = 0.0;    // price of inertia
  double epsilon = 0.0;  // max-norm error of an approximate Q
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

struct BoundReport {
  double bound_value = 0.0;
  double exact_value = 0.0;
  double slack = 0.0;
  bool holds = false;
  BoundContext context;
};

BoundReport make_report(double bound, double exact, BoundContext context);

// G_m = sum_{i < m-1} gamma^i and H_{m,n} = sum_{i < n} gamma^{m i}.
struct GeometricTerms {
  double g = 0.0;
  double h = 0.0;
};
inline constexpr std::size_t kInfinite = std::numeric_limits<std::size_t>::max();
// Pass n = kInfinite for the closed-form limit 1 / (1 - gamma^m).
GeometricTerms geometric_terms(std::size_t m, std::size_t n, double gamma);

// (1 - gamma^{d-1}) / ((1 - gamma)(1 - gamma^d)).
double repetition_constant(double gamma, std::size_t d);

// delta * repetition_constant(gamma, d).
double deficit_bound(double delta, double gamma, std::size_t d);

// Both max-norm deficits ||V*_M - V*_{M_d}|| and ||Q*_M - Q*_{M_d}|| against
// deficit_bound(price_of_inertia(M), gamma, d).
struct DeficitReport {
  BoundReport state_values;
  BoundReport action_values;
  bool holds() const { return state_values.holds && action_values.holds; }
};
DeficitReport verify_value_deficit(const TabularMDP& mdp, std::size_t d);

// Exact deficit ||V*_M - V*_{M_d}|| without a bound; valid for gamma = 1
// episodic models too.
double value_deficit(const TabularMDP& mdp, std::size_t d);

// Two actions (STAY = 0, MOVE = 1) on a d-state deterministic cycle where the
// deficit bound is attained with equality.
inline constexpr std::size_t kStay = 0;
inline constexpr std::size_t kMove = 1;
TabularMDP lower_bound_mdp(double delta, double gamma, std::size_t d);

struct Edge {
  std::size_t from = 0;
  std::size_t action = 0;
  std::size_t to = 0;
};

struct ReversibilityReport {
  bool reversible = false;
  std::optional<Edge> witness;  // an edge with no inverse action
  BoundReport sharp;            // Delta_M <= 2 gamma (1 + gamma) r_max
  BoundReport loose;            // Delta_M <= 4 r_max
  bool holds() const { return reversible && sharp.holds && loose.holds; }
};
// Throws std::invalid_argument when the model is not deterministic.
ReversibilityReport check_reversible_inertia(const TabularMDP& mdp);

// ||V*_M - V^greedy(q_hat)_M|| against 2 eps gamma / (1 - gamma).
BoundReport greedy_loss_bound_check(const TabularMDP& mdp, const ActionValues& q_hat);
BoundReport greedy_loss_bound_check(const TabularMDP& mdp, const ActionValues& q_star,
                                    const ActionValues& q_hat);

// ||V*_M - V^{pi_d}_M|| for pi greedy w.r.t. q_hat and executed with d-fold
// repetition, against delta C1 + gamma^d / (1 - gamma^d) C2 with
//   C3 = repetition_constant(gamma, d),
//   C1 = C3 (1 + 2 gamma^d / (1 - gamma^d)),
//   C2 = 2 ||Q*_M - q_hat||.
struct AggregateReport {
  BoundReport report;
  double inertia_term = 0.0;  // delta * C1
  double approximation_term = 0.0;  // gamma^d / (1 - gamma^d) * C2
};
AggregateReport aggregate_bound_check(const TabularMDP& mdp, const ActionValues& q_hat,
                                      std::size_t d);
AggregateReport aggregate_bound_check(const TabularMDP& mdp, const ActionValues& q_star,
                                      double delta, const ActionValues& q_hat,
                                      std::size_t d);

}  // namespace fsrl
