#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "fsrl/tabular.hpp"
#include "fsrl/tabular_env.hpp"

namespace fsrl {

// Where phi(s) enters the trace relative to the weight update.
enum class TraceOrder {
  kTraceFirst,   // e <- gamma^d lambda e + phi(s), then w <- w + alpha delta e
  kWeightFirst   // w <- w + alpha delta e, then e <- gamma^d lambda e + phi(s)
};

// Linear value estimate w . phi(s) with an accumulating trace, updated once
// per d-step tuple (s, G, s').
struct LinearEstimator {
  Eigen::VectorXd w;
  Eigen::VectorXd e;
  double alpha = 0.1;
  double lambda = 0.0;
  double gamma_d = 1.0;  // gamma^d
  TraceOrder order = TraceOrder::kTraceFirst;

  LinearEstimator() = default;
  LinearEstimator(std::size_t k, double alpha, double lambda, double gamma_d);

  double value(const Eigen::VectorXd& phi) const { return w.dot(phi); }
  void reset_trace() { e.setZero(); }
};

// One update from (phi(s), G, phi(s')). The bootstrap term is dropped when
// next_terminal. Returns the TD error. Throws DivergenceError when the
// weights stop being finite.
double td_update(LinearEstimator& est, const Eigen::VectorXd& phi_s, double return_d,
                 const Eigen::VectorXd& phi_next, bool next_terminal);

// alpha_t = alpha0 / (1 + t / tau); tau = 0 keeps alpha constant.
struct StepSize {
  double alpha0 = 0.1;
  double tau = 0.0;
  double at(std::size_t t) const {
    return tau > 0.0 ? alpha0 / (1.0 + static_cast<double>(t) / tau) : alpha0;
  }
};

struct TdConfig {
  std::size_t d = 1;
  double lambda = 0.0;
  StepSize step_size;
  std::size_t steps = 100'000;  // environment steps; floor(steps / d) updates
  std::size_t snapshot_every = 0;  // in updates; 0 records only the final weights
  TraceOrder order = TraceOrder::kTraceFirst;
};

struct TdSnapshot {
  std::size_t update = 0;
  std::size_t step = 0;
  Eigen::VectorXd w;
};

struct TdRun {
  std::vector<TdSnapshot> snapshots;  // last entry holds the final weights
  std::size_t updates = 0;
  bool diverged = false;
};

// TD_d(lambda) on a tabular environment whose observations carry features.
// Weights start at zero. Episodes that terminate restart with a cleared
// trace; continuing chains run as one stream.
TdRun run_td(TabularEnv& env, const TdConfig& config);

// E(w) = sum_s mu(s) (V(s) - w . phi(s))^2 with `features` n_states x k.
double value_error(const TabularMRP& mrp, const Eigen::MatrixXd& features,
                   const Eigen::VectorXd& w);

// argmin_w E(w). Throws StructuralError naming the dependent columns when
// the mu-weighted features are rank deficient.
Eigen::VectorXd optimal_weights(const TabularMRP& mrp, const Eigen::MatrixXd& features);

// (1 - gamma^d lambda) / (1 - gamma^d): the factor by which the TD_d(lambda)
// fixed point may exceed E(w_opt).
double td_error_factor(double gamma, std::size_t d, double lambda);

}  // namespace fsrl
