#pragma once

#include <cstdint>

#include "fsrl/tabular.hpp"

namespace fsrl {

// Random walk on n states: step left or right with probability 1/2 each, and
// the end states stay put instead of stepping off. Reward r(s) = x^exponent
// with x = (s + 1) / n, plus optional uniform noise in [-reward_noise,
// reward_noise]. One feature per state, phi(s) = x, so values are only
// approximately linear in phi unless `realizable` replaces phi with V.
struct ChainSpec {
  std::size_t n_states = 19;
  double gamma = 0.95;
  double exponent = 2.0;
  double reward_noise = 0.0;
  bool realizable = false;
};

struct ChainModel {
  TabularMRP mrp;
  Eigen::MatrixXd features;  // n_states x 1
};

ChainModel chain_mrp(const ChainSpec& spec, std::uint64_t seed = 0);

}  // namespace fsrl
