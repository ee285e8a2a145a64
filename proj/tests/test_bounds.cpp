#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fsrl/bounds.hpp"
#include "fsrl/random_models.hpp"

using namespace fsrl;
using Eigen::MatrixXd;

TEST_CASE("geometric_terms") {
  CHECK(geometric_terms(2, 1, 0.3).g == 1.0);
  CHECK(geometric_terms(2, 5, 0.99).g == 1.0);
  CHECK(geometric_terms(3, 1, 0.5).g == doctest::Approx(1.5));
  CHECK(geometric_terms(2, kInfinite, 0.5).h == doctest::Approx(4.0 / 3.0));
  CHECK(geometric_terms(4, 1, 0.9).g == doctest::Approx(2.71));
  // Finite H approaches the closed form.
  CHECK(geometric_terms(3, 400, 0.9).h == doctest::Approx(geometric_terms(3, kInfinite, 0.9).h));
  CHECK_THROWS_AS(geometric_terms(2, kInfinite, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(geometric_terms(1, 1, 0.5), std::invalid_argument);
}

TEST_CASE("deficit_bound") {
  CHECK(deficit_bound(3.0, 0.7, 1) == 0.0);
  CHECK(deficit_bound(1.0, 0.5, 2) == doctest::Approx(4.0 / 3.0));
  CHECK(deficit_bound(2.0, 0.9, 3) == doctest::Approx(2.0 * 0.19 / (0.1 * 0.271)));
  CHECK(deficit_bound(2.0, 0.9, 3) == doctest::Approx(14.0221).epsilon(1e-5));
  CHECK_THROWS_AS(deficit_bound(1.0, 1.0, 2), std::invalid_argument);

  SUBCASE("equals delta G_d H_{d,inf} and is nondecreasing in d") {
    for (double g : {0.1, 0.5, 0.9, 0.99}) {
      double prev = 0.0;
      for (std::size_t d = 2; d <= 40; ++d) {
        const auto t = geometric_terms(d, kInfinite, g);
        const double b = deficit_bound(1.7, g, d);
        CHECK(std::abs(b - 1.7 * t.g * t.h) <= 1e-12 * std::max(1.0, b));
        CHECK(b >= prev);
        prev = b;
      }
    }
  }
}

TEST_CASE("verify_value_deficit") {
  Rng rng(1);
  SUBCASE("d = 1 has zero deficit and zero bound") {
    const auto m = random_mdp(5, 3, 0.9, rng);
    const auto r = verify_value_deficit(m, 1);
    CHECK(r.state_values.exact_value < 1e-12);
    CHECK(r.state_values.bound_value == 0.0);
    CHECK(r.holds());
  }
  SUBCASE("random models satisfy both bounds") {
    for (int i = 0; i < 200; ++i) {
      const auto m = random_mdp(5, 3, 0.9, rng);
      for (std::size_t d : {2, 3, 5}) {
        const auto r = verify_value_deficit(m, d);
        CHECK(r.state_values.holds);
        CHECK(r.action_values.holds);
      }
    }
  }
  SUBCASE("lower-bound construction is tight") {
    const auto r = verify_value_deficit(lower_bound_mdp(1.0, 0.5, 2), 2);
    CHECK(std::abs(r.state_values.slack) <= 1e-8);
    CHECK(r.state_values.exact_value == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("lower_bound_mdp") {
  CHECK_THROWS_AS(lower_bound_mdp(1.0, 0.5, 1), std::invalid_argument);
  const auto m = lower_bound_mdp(0.9, 0.9, 3);
  CHECK(m.r_max() == doctest::Approx(1.0));
  CHECK(price_of_inertia(m).value == doctest::Approx(0.9).epsilon(1e-12));
  for (double delta : {0.5, 1.0, 2.0}) {
    for (double g : {0.5, 0.9, 0.99}) {
      for (std::size_t d : {2, 3, 5, 8}) {
        const auto lb = lower_bound_mdp(delta, g, d);
        CHECK(std::abs(price_of_inertia(lb).value - delta) <= 1e-9);
        const auto r = verify_value_deficit(lb, d);
        CHECK(std::abs(r.state_values.slack) <= 1e-8);
        CHECK(std::abs(r.state_values.exact_value - r.action_values.exact_value) <= 1e-8);
      }
    }
  }
}

TEST_CASE("check_reversible_inertia") {
  SUBCASE("a one-way cycle has no inverse actions") {
    MatrixXd t(3, 3);
    t << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    const TabularMDP cycle(MatrixXd::Zero(3, 1), {t}, 0.9, 1.0);
    const auto r = check_reversible_inertia(cycle);
    CHECK_FALSE(r.reversible);
    REQUIRE(r.witness.has_value());
    CHECK(t(static_cast<Eigen::Index>(r.witness->from), static_cast<Eigen::Index>(r.witness->to)) == 1.0);
    CHECK_FALSE(r.holds());
  }
  SUBCASE("self-loops are reversible with zero inertia") {
    const TabularMDP loops(MatrixXd::Constant(2, 2, 0.5), {MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2)},
                           0.9, 1.0);
    const auto r = check_reversible_inertia(loops);
    CHECK(r.reversible);
    CHECK(std::abs(r.sharp.exact_value) < 1e-12);
    CHECK(r.holds());
  }
  SUBCASE("stochastic models are rejected") {
    Rng rng(3);
    CHECK_THROWS_AS(check_reversible_inertia(random_mdp(3, 2, 0.9, rng)), std::invalid_argument);
  }
  SUBCASE("random reversible grids") {
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
      const double g = i % 3 == 0 ? 0.5 : (i % 3 == 1 ? 0.9 : 0.99);
      const auto m = random_reversible_mdp(2 + i % 4, 2 + (i / 4) % 3, g, rng);
      const auto r = check_reversible_inertia(m);
      CHECK(r.reversible);
      CHECK(r.sharp.holds);
      CHECK(r.loose.exact_value <= 4.0);
    }
  }
}

TEST_CASE("greedy_loss_bound_check") {
  Rng rng(2);
  const auto m = random_mdp(5, 3, 0.9, rng);
  const auto q = value_iteration(m);
  SUBCASE("exact Q has no loss") {
    const auto r = greedy_loss_bound_check(m, q);
    CHECK(r.context.epsilon == 0.0);
    CHECK(r.exact_value < 1e-12);
  }
  SUBCASE("a constant shift keeps the policy but loosens the bound") {
    const ActionValues shifted{q.values.array() + 0.3};
    const auto r = greedy_loss_bound_check(m, shifted);
    CHECK(r.exact_value < 1e-12);
    CHECK(r.bound_value == doctest::Approx(2 * 0.3 * 0.9 / 0.1));
  }
  SUBCASE("noisy estimates on random models") {
    for (int i = 0; i < 100; ++i) {
      const auto mi = random_mdp(5, 3, 0.9, rng);
      const auto qi = value_iteration(mi);
      MatrixXd noisy = qi.values;
      for (Eigen::Index k = 0; k < noisy.size(); ++k) noisy(k) += uniform(rng, -0.1, 0.1);
      CHECK(greedy_loss_bound_check(mi, qi, ActionValues{noisy}).holds);
    }
  }
}

TEST_CASE("aggregate_bound_check") {
  Rng rng(4);
  SUBCASE("d = 1 with exact Q is zero on both sides") {
    const auto m = random_mdp(4, 2, 0.9, rng);
    const auto r = aggregate_bound_check(m, value_iteration(m), 1);
    CHECK(r.report.bound_value == 0.0);
    CHECK(r.report.exact_value < 1e-12);
  }
  SUBCASE("degenerates to the greedy-loss bound at d = 1") {
    const auto m = random_mdp(4, 3, 0.9, rng);
    const auto q = value_iteration(m);
    MatrixXd noisy = q.values;
    for (Eigen::Index k = 0; k < noisy.size(); ++k) noisy(k) += uniform(rng, -0.5, 0.5);
    const auto agg = aggregate_bound_check(m, ActionValues{noisy}, 1);
    const auto greedy = greedy_loss_bound_check(m, ActionValues{noisy});
    CHECK(agg.inertia_term == 0.0);
    CHECK(agg.approximation_term == doctest::Approx(greedy.bound_value).epsilon(1e-12));
    CHECK(agg.report.exact_value == doctest::Approx(greedy.exact_value).epsilon(1e-12));
  }
  SUBCASE("random models with noisy estimates") {
    for (int i = 0; i < 40; ++i) {
      const auto m = random_mdp(5, 3, 0.9, rng);
      const auto q = value_iteration(m);
      MatrixXd noisy = q.values;
      for (Eigen::Index k = 0; k < noisy.size(); ++k) noisy(k) += uniform(rng, -0.5, 0.5);
      for (std::size_t d = 1; d <= 6; ++d) {
        CHECK(aggregate_bound_check(m, ActionValues{noisy}, d).report.holds);
      }
    }
  }
  SUBCASE("lower-bound construction with exact Q") {
    const auto m = lower_bound_mdp(1.0, 0.9, 3);
    const auto q = value_iteration(m);
    const auto r = aggregate_bound_check(m, q, 3);
    const double delta = price_of_inertia(m, q).value;
    CHECK(r.approximation_term == 0.0);
    CHECK(r.inertia_term == doctest::Approx(delta * r.report.context.c1));
    // pi* repeated 3 times is MOVE^3 everywhere, which here is optimal for M_3.
    CHECK(r.report.exact_value == doctest::Approx(delta * r.report.context.c3).epsilon(1e-9));
    CHECK(r.report.exact_value <= r.inertia_term);
  }
}
