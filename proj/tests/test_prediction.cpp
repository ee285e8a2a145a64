#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "fsrl/chain.hpp"
#include "fsrl/errors.hpp"
#include "fsrl/prediction.hpp"
#include "fsrl/stats.hpp"

using namespace fsrl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Deterministic 4-cycle with rewards 1, 2, 3, 4 and features (1, s).
TabularEnv cycle_env(double gamma) {
  VectorXd r(4);
  r << 1, 2, 3, 4;
  MatrixXd t = MatrixXd::Zero(4, 4);
  for (int s = 0; s < 4; ++s) t(s, (s + 1) % 4) = 1;
  MatrixXd phi(4, 2);
  phi << 1, 0, 1, 1, 1, 2, 1, 3;
  VectorXd start = VectorXd::Zero(4);
  start(0) = 1;
  return TabularEnv::from_mrp(TabularMRP(r, t, gamma, 4.0), start, phi, 0);
}

}  // namespace

TEST_CASE("td_update against a direct transcription") {
  // Random tuples fed to both the estimator and plain arrays.
  Rng rng(3);
  const std::size_t k = 3;
  for (TraceOrder order : {TraceOrder::kTraceFirst, TraceOrder::kWeightFirst}) {
    LinearEstimator est(k, 0.05, 0.7, 0.81);
    est.order = order;
    std::vector<double> w(k, 0.0), e(k, 0.0);
    for (int i = 0; i < 200; ++i) {
      VectorXd phi(k), next(k);
      for (std::size_t j = 0; j < k; ++j) {
        phi(j) = uniform(rng, -1, 1);
        next(j) = uniform(rng, -1, 1);
      }
      const double g = uniform(rng, -2, 2);
      const bool terminal = uniform01(rng) < 0.1;
      td_update(est, phi, g, next, terminal);

      double v = 0, vn = 0;
      for (std::size_t j = 0; j < k; ++j) {
        v += w[j] * phi(j);
        vn += w[j] * next(j);
      }
      const double delta = g + (terminal ? 0.0 : 0.81 * vn) - v;
      for (std::size_t j = 0; j < k; ++j) {
        if (order == TraceOrder::kTraceFirst) {
          e[j] = 0.81 * 0.7 * e[j] + phi(j);
          w[j] += 0.05 * delta * e[j];
        } else {
          w[j] += 0.05 * delta * e[j];
          e[j] = 0.81 * 0.7 * e[j] + phi(j);
        }
      }
    }
    for (std::size_t j = 0; j < k; ++j) CHECK(est.w(j) == doctest::Approx(w[j]).epsilon(1e-12));
  }
}

TEST_CASE("td_update reports divergence") {
  LinearEstimator est(1, 1e308, 0.0, 1.0);
  VectorXd phi = VectorXd::Constant(1, 1e10);
  CHECK_THROWS_AS(td_update(est, phi, 1e300, phi, false), DivergenceError);
}

TEST_CASE("run_td uses d-step returns") {
  const double gamma = 0.9;
  for (std::size_t d : {1, 2, 3}) {
    TabularEnv env = cycle_env(gamma);
    TdConfig cfg;
    cfg.d = d;
    cfg.lambda = 0.5;
    cfg.step_size = {0.02, 50.0};
    cfg.steps = 600;
    const TdRun run = run_td(env, cfg);
    REQUIRE_FALSE(run.diverged);
    CHECK(run.updates == 600 / d);

    // The cycle is deterministic, so the tuple stream can be written out.
    const double rewards[4] = {1, 2, 3, 4};
    std::vector<double> w(2, 0.0), e(2, 0.0);
    const double gd = std::pow(gamma, double(d));
    std::size_t s = 0;
    for (std::size_t u = 0; u < run.updates; ++u) {
      double g = 0;
      for (std::size_t j = 0; j < d; ++j) g += std::pow(gamma, double(j)) * rewards[(s + j) % 4];
      const std::size_t next = (s + d) % 4;
      const double alpha = 0.02 / (1.0 + double(u) / 50.0);
      const double delta = g + gd * (w[0] + w[1] * next) - (w[0] + w[1] * s);
      e[0] = gd * 0.5 * e[0] + 1;
      e[1] = gd * 0.5 * e[1] + double(s);
      w[0] += alpha * delta * e[0];
      w[1] += alpha * delta * e[1];
      s = next;
    }
    const VectorXd& got = run.snapshots.back().w;
    CHECK(got(0) == doctest::Approx(w[0]).epsilon(1e-12));
    CHECK(got(1) == doctest::Approx(w[1]).epsilon(1e-12));
  }
}

TEST_CASE("run_td snapshots and validation") {
  TabularEnv env = cycle_env(0.5);
  TdConfig cfg;
  cfg.steps = 100;
  cfg.snapshot_every = 10;
  const TdRun run = run_td(env, cfg);
  CHECK(run.snapshots.size() == 10);
  CHECK(run.snapshots.back().update == 100);
  CHECK(run.snapshots.front().step == 10);
  cfg.d = 0;
  CHECK_THROWS_AS(run_td(env, cfg), std::invalid_argument);

  MatrixXd r = MatrixXd::Zero(2, 1);
  TabularEnv bare(TabularMDP(r, {MatrixXd::Identity(2, 2)}, 0.5, 1.0), VectorXd::Constant(2, 0.5));
  CHECK_THROWS_AS(run_td(bare, TdConfig{}), std::invalid_argument);
}

TEST_CASE("run_td flags divergence") {
  TabularEnv env = cycle_env(0.99);
  TdConfig cfg;
  cfg.step_size = {50.0, 0.0};
  cfg.steps = 5000;
  const TdRun run = run_td(env, cfg);
  CHECK(run.diverged);
}

TEST_CASE("value_error") {
  const ChainModel c = chain_mrp({});
  const VectorXd mu = stationary_distribution(c.mrp);
  const VectorXd v = evaluate_mrp(c.mrp).values;
  double direct = 0;
  for (Eigen::Index s = 0; s < v.size(); ++s) direct += mu(s) * v(s) * v(s);
  CHECK(value_error(c.mrp, c.features, VectorXd::Zero(1)) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("optimal_weights") {
  SUBCASE("closed form for the canonical chain") {
    const ChainModel c = chain_mrp({});
    const VectorXd w = optimal_weights(c.mrp, c.features);
    // One feature: w = sum mu phi V / sum mu phi^2.
    const VectorXd mu = stationary_distribution(c.mrp);
    const VectorXd v = evaluate_mrp(c.mrp).values;
    double num = 0, den = 0;
    for (Eigen::Index s = 0; s < v.size(); ++s) {
      num += mu(s) * c.features(s, 0) * v(s);
      den += mu(s) * c.features(s, 0) * c.features(s, 0);
    }
    CHECK(w(0) == doctest::Approx(num / den).epsilon(1e-10));
    const double e_opt = value_error(c.mrp, c.features, w);
    CHECK(e_opt > 0.0);  // the chain is not realizable
    // Grid search never beats the optimum.
    for (double x = w(0) - 1.0; x <= w(0) + 1.0; x += 0.01) {
      CHECK(value_error(c.mrp, c.features, VectorXd::Constant(1, x)) >= e_opt - 1e-12);
    }
  }
  SUBCASE("normal equations with two features") {
    const ChainModel c = chain_mrp({});
    MatrixXd phi(c.features.rows(), 2);
    phi.col(0).setOnes();
    phi.col(1) = c.features.col(0);
    const VectorXd w = optimal_weights(c.mrp, phi);
    const VectorXd mu = stationary_distribution(c.mrp);
    const VectorXd v = evaluate_mrp(c.mrp).values;
    const MatrixXd a = phi.transpose() * mu.asDiagonal() * phi;
    const VectorXd b = phi.transpose() * mu.asDiagonal() * v;
    const VectorXd expected = a.ldlt().solve(b);
    CHECK((w - expected).norm() < 1e-9);
  }
  SUBCASE("dependent columns are rejected") {
    const ChainModel c = chain_mrp({});
    MatrixXd phi(c.features.rows(), 2);
    phi.col(0) = c.features.col(0);
    phi.col(1) = 2.0 * c.features.col(0);
    CHECK_THROWS_AS(optimal_weights(c.mrp, phi), StructuralError);
  }
}

TEST_CASE("td_error_factor") {
  CHECK(td_error_factor(0.9, 1, 1.0) == 1.0);
  CHECK(td_error_factor(0.9, 3, 0.0) == doctest::Approx(1.0 / (1.0 - std::pow(0.9, 3))));
  CHECK(td_error_factor(0.95, 2, 0.5) ==
        doctest::Approx((1 - 0.95 * 0.95 * 0.5) / (1 - 0.95 * 0.95)));
  // Larger d tightens the bound for fixed lambda < 1.
  CHECK(td_error_factor(0.95, 8, 0.0) < td_error_factor(0.95, 1, 0.0));
}

TEST_CASE("StepSize") {
  StepSize s{0.5, 10.0};
  CHECK(s.at(0) == 0.5);
  CHECK(s.at(10) == doctest::Approx(0.25));
  StepSize constant{0.3, 0.0};
  CHECK(constant.at(1000) == 0.3);
}

TEST_CASE("TD_d(lambda) converges within the bound on the chain") {
  // A shorter run than the acceptance check, so lambda = 1 (the noisiest
  // target) gets a looser margin.
  const ChainModel c = chain_mrp({});
  const double e_opt = value_error(c.mrp, c.features, optimal_weights(c.mrp, c.features));
  for (double lambda : {0.0, 0.5, 0.9, 1.0}) {
    for (std::size_t d : {1, 2, 4, 8}) {
      TabularEnv env = TabularEnv::from_mrp(c.mrp, VectorXd::Constant(19, 1.0 / 19), c.features,
                                            derive_seed(1, {stream::kEnvironment, d}));
      TdConfig cfg;
      cfg.d = d;
      cfg.lambda = lambda;
      cfg.step_size = {0.01, 1e4};
      cfg.steps = 400'000;
      const TdRun run = run_td(env, cfg);
      const double e = value_error(c.mrp, c.features, run.snapshots.back().w);
      INFO("lambda " << lambda << " d " << d << " E/E_opt " << e / e_opt);
      const double margin = lambda == 1.0 ? 1.25 : 1.1;
      CHECK(e <= margin * td_error_factor(c.mrp.gamma(), d, lambda) * e_opt);
    }
  }
}

TEST_CASE("realizable features are learned exactly") {
  ChainSpec spec;
  spec.realizable = true;
  const ChainModel c = chain_mrp(spec);
  TabularEnv env = TabularEnv::from_mrp(c.mrp, VectorXd::Constant(19, 1.0 / 19), c.features, 5);
  TdConfig cfg;
  cfg.d = 2;
  cfg.lambda = 0.5;
  cfg.step_size = {0.0005, 5e4};
  cfg.steps = 1'000'000;
  const TdRun run = run_td(env, cfg);
  CHECK(std::abs(run.snapshots.back().w(0) - 1.0) < 0.02);
}

TEST_CASE("mean_stderr") {
  SUBCASE("known values") {
    const MeanStderr m = mean_stderr({1, 2, 3, 4});
    CHECK(m.mean == 2.5);
    // sd = sqrt(5/3), stderr = sd / 2.
    CHECK(m.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-12));
    CHECK(m.n == 4);
  }
  SUBCASE("single value and constants have zero stderr") {
    CHECK(mean_stderr({7}).std_error == 0.0);
    CHECK(mean_stderr({3, 3, 3}).std_error == 0.0);
  }
  SUBCASE("synthetic known variance") {
    // +-1 alternating: sample variance n / (n - 1).
    std::vector<double> xs;
    for (int i = 0; i < 100; ++i) xs.push_back(i % 2 ? 1.0 : -1.0);
    const MeanStderr m = mean_stderr(xs);
    CHECK(std::abs(m.std_error - std::sqrt(100.0 / 99.0) / 10.0) < 1e-12);
  }
  CHECK(tail_mean({1, 2, 3, 4}, 2) == 3.5);
  CHECK(tail_mean({1, 2}, 5) == 1.5);
}
