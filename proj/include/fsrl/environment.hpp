#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>

#include <Eigen/Dense>

#include "fsrl/rng.hpp"

namespace fsrl {

// Tabular environments fill `state`; continuous ones fill `features`. A
// tabular environment may also attach a feature row for its state.
struct Observation {
  std::size_t state = 0;
  Eigen::VectorXd features;
};

struct StepOutcome {
  double reward = 0.0;
  Observation next;
  bool terminal = false;
  // The step cap was reached without termination. The next observation is a
  // real state, so learners may still bootstrap from it.
  bool truncated = false;
};

struct SkipOutcome {
  double return_d = 0.0;    // sum_{j < steps_taken} gamma^j r_j
  double reward_sum = 0.0;  // the same rewards undiscounted
  Observation next;
  bool terminal = false;
  bool truncated = false;
  std::size_t steps_taken = 0;
};

// Episodic environment with its own random stream. Identical seeds and action
// sequences give identical trajectories.
class Environment {
 public:
  explicit Environment(std::uint64_t seed = 0, std::size_t max_steps = 0)
      : rng_(seed), max_steps_(max_steps) {}
  virtual ~Environment() = default;

  virtual std::size_t n_actions() const = 0;
  // Length of Observation::features; 0 for index-only environments.
  virtual std::size_t n_features() const = 0;
  // Number of states for tabular environments, 0 otherwise.
  virtual std::size_t n_states() const { return 0; }
  virtual double r_max() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;

  Observation reset();
  // Throws InvalidStateError when no episode is running, std::invalid_argument
  // on a bad action.
  StepOutcome step(std::size_t action);

  void seed(std::uint64_t s) { rng_.seed(s); }
  bool running() const { return running_; }
  std::size_t steps() const { return steps_; }
  // 0 means no cap.
  std::size_t max_steps() const { return max_steps_; }
  void set_max_steps(std::size_t cap) { max_steps_ = cap; }

 protected:
  virtual Observation do_reset() = 0;
  // Fills reward, next and terminal; truncation is handled by step().
  virtual StepOutcome do_step(std::size_t action) = 0;
  Rng& rng() { return rng_; }

 private:
  Rng rng_;
  std::size_t max_steps_;
  std::size_t steps_ = 0;
  bool running_ = false;
};

// Applies `action` up to d times, accumulating gamma-discounted rewards, and
// stops early when the episode terminates or is truncated.
SkipOutcome skip_step(Environment& env, std::size_t action, std::size_t d, double gamma);

}  // namespace fsrl
