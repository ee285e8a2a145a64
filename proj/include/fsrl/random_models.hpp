#pragma once

#include <cstddef>

#include "fsrl/rng.hpp"
#include "fsrl/tabular.hpp"

namespace fsrl {

// Dirichlet(1,...,1) transition rows, rewards uniform in [-1, 1], r_max = 1.
TabularMDP random_mdp(std::size_t n_states, std::size_t n_actions, double gamma,
                      Rng& rng);

// Dirichlet(1,...,1) rows, so every entry is positive and the chain is ergodic.
TabularMRP random_ergodic_mrp(std::size_t n_states, double gamma, Rng& rng);

// Deterministic width x height grid with moves up/down/left/right; blocked
// moves stay put. Every edge has an inverse action, so the model is
// reversible. Rewards uniform in [-1, 1] per (state, action), r_max = 1.
TabularMDP random_reversible_mdp(std::size_t width, std::size_t height,
                                 double gamma, Rng& rng);

// A row drawn from Dirichlet(1,...,1).
Eigen::RowVectorXd dirichlet_row(std::size_t n, Rng& rng);

}  // namespace fsrl
