#include "fsrl/environment.hpp"

#include <stdexcept>
#include <string>

#include "fsrl/errors.hpp"

namespace fsrl {

Observation Environment::reset() {
  steps_ = 0;
  running_ = true;
  return do_reset();
}

StepOutcome Environment::step(std::size_t action) {
  if (!running_) {
    throw InvalidStateError("step called on an environment with no running episode");
  }
  if (action >= n_actions()) {
    throw std::invalid_argument("action " + std::to_string(action) + " out of range");
  }
  StepOutcome out = do_step(action);
  ++steps_;
  if (out.terminal) {
    running_ = false;
  } else if (max_steps_ > 0 && steps_ >= max_steps_) {
    out.truncated = true;
    running_ = false;
  }
  return out;
}

SkipOutcome skip_step(Environment& env, std::size_t action, std::size_t d, double gamma) {
  if (d == 0) throw std::invalid_argument("skip_step: d must be at least 1");
  SkipOutcome out;
  double discount = 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    StepOutcome s = env.step(action);
    out.return_d += discount * s.reward;
    out.reward_sum += s.reward;
    discount *= gamma;
    ++out.steps_taken;
    out.next = std::move(s.next);
    if (s.terminal || s.truncated) {
      out.terminal = s.terminal;
      out.truncated = s.truncated;
      break;
    }
  }
  return out;
}

}  // namespace fsrl
