#pragma once

#include <array>

#include "fsrl/environment.hpp"

namespace fsrl {

struct AcrobotParams {
  double dt = 0.2;  // seconds per action (5 actions per second)
  std::size_t substeps = 4;  // RK4 steps per action
  std::size_t max_steps = 500;
  double start_range = 0.1;  // start state uniform in [-start_range, start_range]^4
};

// Two-link underactuated pendulum with torques {-1, 0, +1} on the second
// joint. Reward -1 per step and 0 on the step that reaches the goal height.
// Observation features: cos t1, sin t1, cos t2, sin t2, dt1, dt2.
class Acrobot : public Environment {
 public:
  static constexpr double kLinkLength1 = 1.0;
  static constexpr double kLinkMass1 = 1.0;
  static constexpr double kLinkMass2 = 1.0;
  static constexpr double kLinkCom1 = 0.5;
  static constexpr double kLinkCom2 = 0.5;
  static constexpr double kLinkMoi = 1.0;
  static constexpr double kGravity = 9.8;
  static constexpr double kPi = 3.14159265358979323846;
  static constexpr double kMaxVel1 = 4 * kPi;
  static constexpr double kMaxVel2 = 9 * kPi;

  // theta1, theta2, dtheta1, dtheta2
  using State = std::array<double, 4>;

  explicit Acrobot(AcrobotParams params = {}, std::uint64_t seed = 0);

  std::size_t n_actions() const override { return 3; }
  std::size_t n_features() const override { return 6; }
  double r_max() const override { return 1.0; }
  std::unique_ptr<Environment> clone() const override;

  const State& state() const { return state_; }
  void set_state(const State& s) { state_ = s; }
  const AcrobotParams& params() const { return params_; }

  // Time derivative of the state under a torque.
  static State derivative(const State& s, double torque);
  // Integrates one action interval without wrapping or clamping.
  State integrate(const State& s, double torque) const;
  static bool at_goal(const State& s);
  static Eigen::VectorXd features(const State& s);

 protected:
  Observation do_reset() override;
  StepOutcome do_step(std::size_t action) override;

 private:
  AcrobotParams params_;
  State state_{};
};

}  // namespace fsrl
