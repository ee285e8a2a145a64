#include "fsrl/acrobot.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fsrl {

namespace {

double wrap(double x) {
  const double two_pi = 2.0 * Acrobot::kPi;
  while (x > Acrobot::kPi) x -= two_pi;
  while (x < -Acrobot::kPi) x += two_pi;
  return x;
}

}  // namespace

Acrobot::Acrobot(AcrobotParams params, std::uint64_t seed)
    : Environment(seed, params.max_steps), params_(params) {
  if (!(params_.dt > 0.0) || params_.substeps == 0) {
    throw std::invalid_argument("Acrobot: dt and substeps must be positive");
  }
}

std::unique_ptr<Environment> Acrobot::clone() const {
  return std::make_unique<Acrobot>(*this);
}

Acrobot::State Acrobot::derivative(const State& s, double torque) {
  const double m1 = kLinkMass1, m2 = kLinkMass2, l1 = kLinkLength1;
  const double lc1 = kLinkCom1, lc2 = kLinkCom2, i1 = kLinkMoi, i2 = kLinkMoi;
  const double g = kGravity;
  const double t1 = s[0], t2 = s[1], dt1 = s[2], dt2 = s[3];
  const double d1 =
      m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2 * l1 * lc2 * std::cos(t2)) + i1 + i2;
  const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(t2)) + i2;
  const double phi2 = m2 * lc2 * g * std::cos(t1 + t2 - kPi / 2.0);
  const double phi1 = -m2 * l1 * lc2 * dt2 * dt2 * std::sin(t2) -
                      2 * m2 * l1 * lc2 * dt2 * dt1 * std::sin(t2) +
                      (m1 * lc1 + m2 * l1) * g * std::cos(t1 - kPi / 2.0) + phi2;
  const double ddt2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dt1 * dt1 * std::sin(t2) - phi2) /
                      (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
  const double ddt1 = -(d2 * ddt2 + phi1) / d1;
  return {dt1, dt2, ddt1, ddt2};
}

Acrobot::State Acrobot::integrate(const State& s, double torque) const {
  const double h = params_.dt / static_cast<double>(params_.substeps);
  State y = s;
  auto axpy = [](const State& a, double k, const State& b) {
    return State{a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2], a[3] + k * b[3]};
  };
  for (std::size_t i = 0; i < params_.substeps; ++i) {
    const State k1 = derivative(y, torque);
    const State k2 = derivative(axpy(y, h / 2.0, k1), torque);
    const State k3 = derivative(axpy(y, h / 2.0, k2), torque);
    const State k4 = derivative(axpy(y, h, k3), torque);
    for (int j = 0; j < 4; ++j) y[j] += h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
  }
  return y;
}

bool Acrobot::at_goal(const State& s) {
  return -std::cos(s[0]) - std::cos(s[1] + s[0]) > 1.0;
}

Eigen::VectorXd Acrobot::features(const State& s) {
  Eigen::VectorXd f(6);
  f << std::cos(s[0]), std::sin(s[0]), std::cos(s[1]), std::sin(s[1]), s[2], s[3];
  return f;
}

Observation Acrobot::do_reset() {
  for (double& x : state_) x = uniform(rng(), -params_.start_range, params_.start_range);
  Observation o;
  o.features = features(state_);
  return o;
}

StepOutcome Acrobot::do_step(std::size_t action) {
  const double torque = static_cast<double>(action) - 1.0;
  State next = integrate(state_, torque);
  next[0] = wrap(next[0]);
  next[1] = wrap(next[1]);
  next[2] = std::clamp(next[2], -kMaxVel1, kMaxVel1);
  next[3] = std::clamp(next[3], -kMaxVel2, kMaxVel2);
  state_ = next;
  StepOutcome out;
  out.terminal = at_goal(state_);
  out.reward = out.terminal ? 0.0 : -1.0;
  out.next.features = features(state_);
  return out;
}

}  // namespace fsrl
