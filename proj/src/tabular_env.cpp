#include "fsrl/tabular_env.hpp"

#include <stdexcept>

namespace fsrl {

using Eigen::Index;

namespace {

Eigen::RowVectorXd cumulative(const Eigen::RowVectorXd& p) {
  Eigen::RowVectorXd c(p.size());
  double acc = 0.0;
  for (Index j = 0; j < p.size(); ++j) c(j) = acc += p(j);
  return c;
}

}  // namespace

TabularEnv::TabularEnv(TabularMDP mdp, Eigen::VectorXd start,
                       std::optional<Eigen::MatrixXd> features, std::uint64_t seed,
                       std::size_t max_steps)
    : Environment(seed, max_steps), mdp_(std::move(mdp)), features_(std::move(features)) {
  const Index n = static_cast<Index>(mdp_.n_states());
  if (start.size() != n) throw std::invalid_argument("TabularEnv: start size mismatch");
  if ((start.array() < 0.0).any() || std::abs(start.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("TabularEnv: start must be a distribution");
  }
  if (features_ && features_->rows() != n) {
    throw std::invalid_argument("TabularEnv: feature matrix needs one row per state");
  }
  start_cdf_ = cumulative(start.transpose());
  for (const auto& t : mdp_.transitions()) {
    Eigen::MatrixXd c(n, n);
    for (Index s = 0; s < n; ++s) c.row(s) = cumulative(t.row(s));
    cdf_.push_back(std::move(c));
  }
  absorbing_.assign(mdp_.n_states(), false);
  for (std::size_t s : mdp_.absorbing_states()) absorbing_[s] = true;
}

TabularEnv TabularEnv::from_mrp(const TabularMRP& mrp, Eigen::VectorXd start,
                                std::optional<Eigen::MatrixXd> features,
                                std::uint64_t seed) {
  TabularMDP mdp(mrp.rewards(), {mrp.transitions()}, mrp.gamma(), mrp.r_max());
  return TabularEnv(std::move(mdp), std::move(start), std::move(features), seed);
}

std::unique_ptr<Environment> TabularEnv::clone() const {
  return std::make_unique<TabularEnv>(*this);
}

void TabularEnv::set_state(std::size_t s) {
  if (s >= mdp_.n_states()) throw std::invalid_argument("TabularEnv: state out of range");
  state_ = s;
}

Observation TabularEnv::observe(std::size_t s) const {
  Observation o;
  o.state = s;
  if (features_) o.features = features_->row(static_cast<Index>(s)).transpose();
  return o;
}

std::size_t TabularEnv::sample(const Eigen::RowVectorXd& cdf) {
  const double u = uniform01(rng());
  for (Index j = 0; j < cdf.size(); ++j) {
    if (u < cdf(j)) return static_cast<std::size_t>(j);
  }
  // Rounding left the last partial sum just below 1.
  Index j = cdf.size() - 1;
  while (j > 0 && cdf(j) == cdf(j - 1)) --j;
  return static_cast<std::size_t>(j);
}

Observation TabularEnv::do_reset() {
  state_ = sample(start_cdf_);
  return observe(state_);
}

StepOutcome TabularEnv::do_step(std::size_t action) {
  StepOutcome out;
  const Index s = static_cast<Index>(state_);
  out.reward = mdp_.rewards()(s, static_cast<Index>(action));
  state_ = sample(cdf_[action].row(s));
  out.next = observe(state_);
  out.terminal = absorbing_[state_];
  return out;
}

}  // namespace fsrl
