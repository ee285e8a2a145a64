#include "fsrl/chain.hpp"

#include <cmath>
#include <stdexcept>

#include "fsrl/rng.hpp"

namespace fsrl {

using Eigen::Index;

ChainModel chain_mrp(const ChainSpec& spec, std::uint64_t seed) {
  if (spec.n_states < 2) throw std::invalid_argument("chain_mrp: need at least 2 states");
  if (!(spec.gamma >= 0.0 && spec.gamma < 1.0)) {
    throw std::invalid_argument("chain_mrp: gamma must lie in [0,1)");
  }
  const Index n = static_cast<Index>(spec.n_states);
  Rng rng(seed);
  Eigen::VectorXd rewards(n);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd phi(n, 1);
  for (Index s = 0; s < n; ++s) {
    const double x = static_cast<double>(s + 1) / static_cast<double>(n);
    phi(s, 0) = x;
    rewards(s) = std::pow(x, spec.exponent);
    if (spec.reward_noise > 0.0) rewards(s) += uniform(rng, -spec.reward_noise, spec.reward_noise);
    t(s, s > 0 ? s - 1 : s) += 0.5;
    t(s, s + 1 < n ? s + 1 : s) += 0.5;
  }
  const double r_max = rewards.cwiseAbs().maxCoeff();
  TabularMRP mrp(std::move(rewards), std::move(t), spec.gamma, r_max > 0.0 ? r_max : 1.0);
  if (spec.realizable) phi = evaluate_mrp(mrp).values;
  return {std::move(mrp), std::move(phi)};
}

}  // namespace fsrl
