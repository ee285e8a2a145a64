#include "fsrl/random_models.hpp"

#include <random>

namespace fsrl {

using Eigen::Index;

Eigen::RowVectorXd dirichlet_row(std::size_t n, Rng& rng) {
  std::exponential_distribution<double> exp1(1.0);
  Eigen::RowVectorXd row(static_cast<Index>(n));
  for (Index j = 0; j < row.size(); ++j) row(j) = exp1(rng);
  return row / row.sum();
}

TabularMDP random_mdp(std::size_t n_states, std::size_t n_actions, double gamma,
                      Rng& rng) {
  const Index n = static_cast<Index>(n_states);
  Eigen::MatrixXd rewards(n, static_cast<Index>(n_actions));
  std::vector<Eigen::MatrixXd> transitions(n_actions, Eigen::MatrixXd(n, n));
  for (Index s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      rewards(s, static_cast<Index>(a)) = uniform(rng, -1.0, 1.0);
      transitions[a].row(s) = dirichlet_row(n_states, rng);
    }
  }
  return TabularMDP(std::move(rewards), std::move(transitions), gamma, 1.0);
}

TabularMRP random_ergodic_mrp(std::size_t n_states, double gamma, Rng& rng) {
  const Index n = static_cast<Index>(n_states);
  Eigen::VectorXd rewards(n);
  Eigen::MatrixXd transitions(n, n);
  for (Index s = 0; s < n; ++s) {
    rewards(s) = uniform(rng, -1.0, 1.0);
    transitions.row(s) = dirichlet_row(n_states, rng);
  }
  return TabularMRP(std::move(rewards), std::move(transitions), gamma, 1.0);
}

TabularMDP random_reversible_mdp(std::size_t width, std::size_t height,
                                 double gamma, Rng& rng) {
  const Index n = static_cast<Index>(width * height);
  constexpr int kDr[4] = {-1, 1, 0, 0};
  constexpr int kDc[4] = {0, 0, -1, 1};
  Eigen::MatrixXd rewards(n, 4);
  std::vector<Eigen::MatrixXd> transitions(4, Eigen::MatrixXd::Zero(n, n));
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const Index s = static_cast<Index>(r * width + c);
      for (int a = 0; a < 4; ++a) {
        const long nr = static_cast<long>(r) + kDr[a];
        const long nc = static_cast<long>(c) + kDc[a];
        Index next = s;
        if (nr >= 0 && nc >= 0 && nr < static_cast<long>(height) &&
            nc < static_cast<long>(width)) {
          next = static_cast<Index>(nr * static_cast<long>(width) + nc);
        }
        transitions[static_cast<std::size_t>(a)](s, next) = 1.0;
        rewards(s, a) = uniform(rng, -1.0, 1.0);
      }
    }
  }
  return TabularMDP(std::move(rewards), std::move(transitions), gamma, 1.0);
}

}  // namespace fsrl
