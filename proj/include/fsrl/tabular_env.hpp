#pragma once

#include <optional>
#include <vector>

#include "fsrl/environment.hpp"
#include "fsrl/tabular.hpp"

namespace fsrl {

// Samples trajectories from a TabularMDP. Rewards are the model's expected
// rewards R(s,a); entering an absorbing state ends the episode.
class TabularEnv : public Environment {
 public:
  // `start` is a distribution over states. `features`, when given, is an
  // n_states x k matrix whose rows are attached to observations.
  TabularEnv(TabularMDP mdp, Eigen::VectorXd start,
             std::optional<Eigen::MatrixXd> features = std::nullopt,
             std::uint64_t seed = 0, std::size_t max_steps = 0);

  // Single-action environment driven by an MRP.
  static TabularEnv from_mrp(const TabularMRP& mrp, Eigen::VectorXd start,
                             std::optional<Eigen::MatrixXd> features = std::nullopt,
                             std::uint64_t seed = 0);

  std::size_t n_actions() const override { return mdp_.n_actions(); }
  std::size_t n_features() const override {
    return features_ ? static_cast<std::size_t>(features_->cols()) : 0;
  }
  std::size_t n_states() const override { return mdp_.n_states(); }
  double r_max() const override { return mdp_.r_max(); }
  std::unique_ptr<Environment> clone() const override;

  const TabularMDP& model() const { return mdp_; }
  std::size_t state() const { return state_; }
  // Puts a running episode in state s.
  void set_state(std::size_t s);

 protected:
  Observation do_reset() override;
  StepOutcome do_step(std::size_t action) override;

 private:
  Observation observe(std::size_t s) const;
  std::size_t sample(const Eigen::RowVectorXd& cumulative);

  TabularMDP mdp_;
  Eigen::RowVectorXd start_cdf_;
  std::vector<Eigen::MatrixXd> cdf_;  // per action, cumulative rows
  std::vector<bool> absorbing_;
  std::optional<Eigen::MatrixXd> features_;
  std::size_t state_ = 0;
};

}  // namespace fsrl
