#include "fsrl/prediction.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fsrl/environment.hpp"
#include "fsrl/errors.hpp"

namespace fsrl {

using Eigen::Index;

LinearEstimator::LinearEstimator(std::size_t k, double alpha_, double lambda_,
                                 double gamma_d_)
    : w(Eigen::VectorXd::Zero(static_cast<Index>(k))),
      e(Eigen::VectorXd::Zero(static_cast<Index>(k))),
      alpha(alpha_),
      lambda(lambda_),
      gamma_d(gamma_d_) {}

double td_update(LinearEstimator& est, const Eigen::VectorXd& phi_s, double return_d,
                 const Eigen::VectorXd& phi_next, bool next_terminal) {
  const double bootstrap = next_terminal ? 0.0 : est.gamma_d * est.w.dot(phi_next);
  const double delta = return_d + bootstrap - est.w.dot(phi_s);
  if (est.order == TraceOrder::kTraceFirst) {
    est.e = est.gamma_d * est.lambda * est.e + phi_s;
    est.w += est.alpha * delta * est.e;
  } else {
    est.w += est.alpha * delta * est.e;
    est.e = est.gamma_d * est.lambda * est.e + phi_s;
  }
  if (!std::isfinite(delta) || !est.w.allFinite()) {
    throw DivergenceError("td_update: weights are no longer finite");
  }
  return delta;
}

TdRun run_td(TabularEnv& env, const TdConfig& config) {
  if (config.d == 0) throw std::invalid_argument("run_td: d must be at least 1");
  if (env.n_features() == 0) throw std::invalid_argument("run_td: environment has no features");
  const double gamma = env.model().gamma();
  LinearEstimator est(env.n_features(), config.step_size.alpha0, config.lambda,
                      std::pow(gamma, static_cast<double>(config.d)));
  est.order = config.order;

  TdRun run;
  const std::size_t total = config.steps / config.d;
  Observation obs = env.reset();
  std::size_t step = 0;
  try {
    for (std::size_t u = 0; u < total; ++u) {
      SkipOutcome out = skip_step(env, 0, config.d, gamma);
      step += out.steps_taken;
      est.alpha = config.step_size.at(u);
      td_update(est, obs.features, out.return_d, out.next.features, out.terminal);
      ++run.updates;
      if (config.snapshot_every > 0 && run.updates % config.snapshot_every == 0) {
        run.snapshots.push_back({run.updates, step, est.w});
      }
      if (out.terminal || out.truncated) {
        est.reset_trace();
        obs = env.reset();
      } else {
        obs = std::move(out.next);
      }
    }
  } catch (const DivergenceError&) {
    run.diverged = true;
  }
  if (run.snapshots.empty() || run.snapshots.back().update != run.updates) {
    run.snapshots.push_back({run.updates, step, est.w});
  }
  return run;
}

double value_error(const TabularMRP& mrp, const Eigen::MatrixXd& features,
                   const Eigen::VectorXd& w) {
  const Eigen::VectorXd mu = stationary_distribution(mrp);
  const Eigen::VectorXd residual = evaluate_mrp(mrp).values - features * w;
  return mu.dot(residual.cwiseProduct(residual));
}

Eigen::VectorXd optimal_weights(const TabularMRP& mrp, const Eigen::MatrixXd& features) {
  if (features.rows() != static_cast<Index>(mrp.n_states())) {
    throw std::invalid_argument("optimal_weights: feature matrix needs one row per state");
  }
  const Eigen::VectorXd root_mu = stationary_distribution(mrp).cwiseSqrt();
  const Eigen::MatrixXd a = root_mu.asDiagonal() * features;
  const Eigen::VectorXd b = root_mu.cwiseProduct(evaluate_mrp(mrp).values);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < features.cols()) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Index j = qr.rank(); j < features.cols(); ++j) {
      if (!cols.empty()) cols += ", ";
      cols += std::to_string(perm(j));
    }
    throw StructuralError("optimal_weights: features are linearly dependent (columns " + cols +
                          ")");
  }
  return qr.solve(b);
}

double td_error_factor(double gamma, std::size_t d, double lambda) {
  if (d == 0) throw std::invalid_argument("td_error_factor: d must be at least 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("td_error_factor: gamma must lie in [0,1)");
  }
  const double gd = std::pow(gamma, static_cast<double>(d));
  return (1.0 - gd * lambda) / (1.0 - gd);
}

}  // namespace fsrl
