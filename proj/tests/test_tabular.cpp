#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <sstream>

#include "fsrl/bounds.hpp"
#include "fsrl/errors.hpp"
#include "fsrl/model_io.hpp"
#include "fsrl/random_models.hpp"
#include "fsrl/tabular.hpp"

using namespace fsrl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::size_t sample_row(const MatrixXd& t, std::size_t s, Rng& rng) {
  double u = uniform01(rng);
  const auto row = t.row(static_cast<Eigen::Index>(s));
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    u -= row(j);
    if (u < 0.0) return static_cast<std::size_t>(j);
  }
  return static_cast<std::size_t>(row.size() - 1);
}

TabularMRP swap_chain() {
  MatrixXd t(2, 2);
  t << 0, 1, 1, 0;
  return TabularMRP(VectorXd::Map(std::vector<double>{1.0, 0.0}.data(), 2), t, 0.5, 1.0);
}

TabularMRP from_rows(std::vector<std::vector<double>> rows, std::vector<double> r,
                     double gamma) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  MatrixXd t(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) t(i, j) = rows[i][j];
  }
  return TabularMRP(VectorXd::Map(r.data(), n), t, gamma, 10.0);
}

// Mean and standard error of a sample.
std::pair<double, double> mean_se(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
  return {m, sd / std::sqrt(static_cast<double>(x.size()))};
}

// Exhaustive enumeration over all deterministic policies.
StateValues brute_force_optimal(const TabularMDP& mdp) {
  const std::size_t n = mdp.n_states(), k = mdp.n_actions();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= k;
  VectorXd best = VectorXd::Constant(static_cast<Eigen::Index>(n), -1e300);
  for (std::size_t code = 0; code < total; ++code) {
    DeterministicPolicy pi;
    std::size_t c = code;
    for (std::size_t s = 0; s < n; ++s) {
      pi.action.push_back(c % k);
      c /= k;
    }
    // Direct solve (I - gamma T_pi) V = R_pi, built by hand.
    MatrixXd a = MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    VectorXd b(static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < n; ++s) {
      const auto si = static_cast<Eigen::Index>(s);
      b(si) = mdp.rewards()(si, static_cast<Eigen::Index>(pi[s]));
      a.row(si) -= mdp.gamma() * mdp.transitions(pi[s]).row(si);
    }
    best = best.cwiseMax(a.fullPivLu().solve(b));
  }
  return StateValues{best};
}

}  // namespace

TEST_CASE("model construction validates invariants") {
  MatrixXd t(2, 2);
  t << 0.5, 0.6, 0.5, 0.5;
  CHECK_THROWS_AS(TabularMRP(VectorXd::Zero(2), t, 0.9, 1.0), std::invalid_argument);
  t << 0.5, 0.5, 1.2, -0.2;
  CHECK_THROWS_AS(TabularMRP(VectorXd::Zero(2), t, 0.9, 1.0), std::invalid_argument);
  t << 0.5, 0.5, 0.5, 0.5;
  CHECK_THROWS_AS(TabularMRP(VectorXd::Constant(2, 2.0), t, 0.9, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TabularMRP(VectorXd::Zero(2), t, 1.5, 1.0), std::invalid_argument);
  // Terminal states must self-loop with reward 0.
  CHECK_THROWS_AS(TabularMDP(MatrixXd::Zero(2, 1), {t}, 0.9, 1.0, {0}), std::invalid_argument);
}

TEST_CASE("induce_mrp") {
  SUBCASE("d = 1 is the identity") {
    Rng rng(1);
    const auto p = random_ergodic_mrp(5, 0.9, rng);
    const auto p1 = induce_mrp(p, 1);
    CHECK(p1.rewards() == p.rewards());
    CHECK(p1.transitions() == p.transitions());
    CHECK(p1.gamma() == p.gamma());
  }
  SUBCASE("swap chain, d = 2") {
    const auto p2 = induce_mrp(swap_chain(), 2);
    CHECK(p2.transitions().isApprox(MatrixXd::Identity(2, 2)));
    CHECK(p2.rewards()(0) == doctest::Approx(1.0));
    CHECK(p2.rewards()(1) == doctest::Approx(0.5));
    CHECK(p2.gamma() == doctest::Approx(0.25));
  }
  SUBCASE("d = 0 rejected") { CHECK_THROWS_AS(induce_mrp(swap_chain(), 0), std::invalid_argument); }
  SUBCASE("rewards match Monte-Carlo 3-step returns") {
    Rng rng(7);
    const auto p = random_ergodic_mrp(5, 0.8, rng);
    const auto p3 = induce_mrp(p, 3);
    Rng sim(99);
    for (std::size_t s = 0; s < 5; ++s) {
      std::vector<double> returns(100'000);
      for (double& g : returns) {
        std::size_t x = s;
        double disc = 1.0;
        g = 0.0;
        for (int j = 0; j < 3; ++j) {
          g += disc * p.rewards()(static_cast<Eigen::Index>(x));
          disc *= p.gamma();
          x = sample_row(p.transitions(), x, sim);
        }
      }
      const auto [m, se] = mean_se(returns);
      CHECK(std::abs(m - p3.rewards()(static_cast<Eigen::Index>(s))) <= 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("induce_mdp") {
  Rng rng(3);
  const auto m = random_mdp(4, 3, 0.9, rng);
  SUBCASE("d = 1 is the identity") {
    const auto m1 = induce_mdp(m, 1);
    CHECK(m1.rewards() == m.rewards());
    for (std::size_t a = 0; a < 3; ++a) CHECK(m1.transitions(a) == m.transitions(a));
  }
  SUBCASE("single action agrees with the induced MRP") {
    const TabularMDP one(m.rewards().col(0), {m.transitions(0)}, m.gamma(), m.r_max());
    const TabularMRP p(m.rewards().col(0), m.transitions(0), m.gamma(), m.r_max());
    for (std::size_t d : {2, 3, 5}) {
      const auto md = induce_mdp(one, d);
      const auto pd = induce_mrp(p, d);
      CHECK((md.rewards().col(0) - pd.rewards()).cwiseAbs().maxCoeff() < 1e-14);
      CHECK((md.transitions(0) - pd.transitions()).cwiseAbs().maxCoeff() < 1e-14);
      CHECK(md.gamma() == doctest::Approx(pd.gamma()));
    }
  }
  SUBCASE("lower-bound construction, value iteration on M_2") {
    const auto lb = lower_bound_mdp(1.0, 0.5, 2);
    const auto v2 = value_iteration(induce_mdp(lb, 2)).state_values();
    // Hand-derived: MOVE^2 from state 0 cycles back with reward 2 at discount
    // 1/4; STAY^2 at state 1 earns 2 + 1 per decision.
    CHECK(v2[0] == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
    CHECK(v2[1] == doctest::Approx(3.0 / 0.75).epsilon(1e-12));
  }
}

TEST_CASE("check_ergodic") {
  CHECK_FALSE(check_ergodic(swap_chain()).ergodic());
  CHECK(check_ergodic(swap_chain()).period == 2);
  CHECK(check_ergodic(from_rows({{0.3, 0.7}, {0.1, 0.9}}, {0, 0}, 0.9)).ergodic());
  // Ring 0 -> 1 -> 2 -> 0 has period 3; a self-loop at 2 adds a cycle of length 1.
  const auto ring = from_rows({{0, 1, 0}, {0, 0, 1}, {1, 0, 0}}, {0, 0, 0}, 0.9);
  CHECK(check_ergodic(ring).period == 3);
  const auto looped = from_rows({{0, 1, 0}, {0, 0, 1}, {0.5, 0, 0.5}}, {0, 0, 0}, 0.9);
  CHECK(check_ergodic(looped).ergodic());
  // Two closed classes {0,1} and {2,3} with 0 -> 3 one-way.
  const auto even = from_rows({{0, 0.5, 0, 0.5}, {1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}},
                              {0, 0, 0, 0}, 0.9);
  CHECK_FALSE(check_ergodic(even).irreducible);
  // Bipartite: every cycle has even length.
  const auto bip = from_rows({{0, 0.5, 0.5, 0}, {0.5, 0, 0, 0.5}, {0.5, 0, 0, 0.5}, {0, 0.5, 0.5, 0}},
                             {0, 0, 0, 0}, 0.9);
  CHECK(check_ergodic(bip).period == 2);
  const auto reducible = from_rows({{1, 0}, {0.5, 0.5}}, {0, 0}, 0.9);
  CHECK_FALSE(check_ergodic(reducible).irreducible);
  CHECK(check_ergodic(reducible).diagnostic.find("irreducible") != std::string::npos);
}

TEST_CASE("stationary_distribution") {
  const auto uni = from_rows({{0.5, 0.5}, {0.5, 0.5}}, {0, 0}, 0.9);
  CHECK(stationary_distribution(uni)(0) == doctest::Approx(0.5));
  const auto skew = from_rows({{0.9, 0.1}, {0.5, 0.5}}, {0, 0}, 0.9);
  const VectorXd mu = stationary_distribution(skew);
  CHECK(mu(0) == doctest::Approx(5.0 / 6.0).epsilon(1e-10));
  CHECK(mu(1) == doctest::Approx(1.0 / 6.0).epsilon(1e-10));
  CHECK_THROWS_AS(stationary_distribution(swap_chain()), StructuralError);

  SUBCASE("matches long-run visit frequencies") {
    Rng rng(11);
    const auto p = random_ergodic_mrp(8, 0.9, rng);
    const VectorXd mu8 = stationary_distribution(p);
    CHECK(std::abs(mu8.sum() - 1.0) < 1e-12);
    CHECK(mu8.minCoeff() > 0.0);
    CHECK((mu8.transpose() * p.transitions() - mu8.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    std::vector<double> visits(8, 0.0);
    Rng sim(5);
    std::size_t x = 0;
    const std::size_t steps = 1'000'000;
    for (std::size_t t = 0; t < steps; ++t) {
      visits[x] += 1.0;
      x = sample_row(p.transitions(), x, sim);
    }
    for (std::size_t s = 0; s < 8; ++s) {
      CHECK(std::abs(visits[s] / steps - mu8(static_cast<Eigen::Index>(s))) < 1e-2);
    }
  }
}

TEST_CASE("evaluate_mrp") {
  const auto absorbing = from_rows({{1.0}}, {0.0}, 1.0);
  CHECK(evaluate_mrp(absorbing)[0] == 0.0);
  const auto loop = from_rows({{1.0}}, {1.0}, 0.9);
  CHECK(evaluate_mrp(loop)[0] == doctest::Approx(10.0).epsilon(1e-12));
  // Undiscounted and non-episodic.
  CHECK_THROWS_AS(evaluate_mrp(from_rows({{1.0}}, {1.0}, 1.0)), std::invalid_argument);
  // Undiscounted episodic: 0 -> 1 -> terminal 2, reward -1 per step.
  const auto ep = from_rows({{0, 1, 0}, {0, 0, 1}, {0, 0, 1}}, {-1, -1, 0}, 1.0);
  CHECK(evaluate_mrp(ep)[0] == doctest::Approx(-2.0));

  SUBCASE("matches Monte-Carlo returns") {
    Rng rng(21);
    const auto p = random_ergodic_mrp(6, 0.8, rng);
    const auto v = evaluate_mrp(p);
    CHECK((v.values - p.rewards() - p.gamma() * p.transitions() * v.values)
              .cwiseAbs()
              .maxCoeff() <= 1e-10);
    Rng sim(18);
    for (std::size_t s = 0; s < 6; ++s) {
      std::vector<double> returns(100'000);
      for (double& g : returns) {
        std::size_t x = s;
        double disc = 1.0;
        g = 0.0;
        // gamma^150 * r_max / (1 - gamma) < 1e-13
        for (int j = 0; j < 150; ++j) {
          g += disc * p.rewards()(static_cast<Eigen::Index>(x));
          disc *= p.gamma();
          x = sample_row(p.transitions(), x, sim);
        }
      }
      const auto [m, se] = mean_se(returns);
      CHECK(std::abs(m - v[s]) <= 3.0 * se);
    }
  }
}

TEST_CASE("value_iteration") {
  const TabularMDP single(MatrixXd::Constant(1, 1, 1.0), {MatrixXd::Identity(1, 1)}, 0.5, 1.0);
  CHECK(value_iteration(single)(0, 0) == doctest::Approx(2.0).epsilon(1e-12));

  SUBCASE("lower-bound construction") {
    const auto lb = lower_bound_mdp(1.0, 0.5, 2);
    const auto q = value_iteration(lb);
    CHECK(q(0, kMove) - q_star_repeat(lb, q, 0, kMove, 2) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("agrees with exhaustive policy enumeration") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t n = 2 + trial % 3, k = 2 + trial % 2;
      const auto m = random_mdp(n, k, 0.9, rng);
      const auto q = value_iteration(m, 1e-10);
      const auto v_brute = brute_force_optimal(m);
      CHECK(max_norm_diff(q.state_values(), v_brute) < 1e-8);
      CHECK(max_norm_diff(bellman_operator(m, q), q) <= 1e-10);
      // The greedy policy attains V* within tol / (1 - gamma).
      const auto v_greedy = evaluate_policy(m, greedy_policy(q));
      CHECK(max_norm_diff(v_greedy, q.state_values()) <= 1e-10 / (1 - 0.9));
    }
  }

  SUBCASE("iteration cap") {
    Rng rng(2);
    const auto m = random_mdp(4, 2, 0.99, rng);
    CHECK_THROWS_AS(value_iteration(m, 1e-12, 5), ConvergenceError);
  }

  SUBCASE("undiscounted models must be episodic") {
    const TabularMDP loop(MatrixXd::Constant(1, 1, -1.0), {MatrixXd::Identity(1, 1)}, 1.0, 1.0);
    CHECK_THROWS_AS(value_iteration(loop), std::invalid_argument);
  }
}

TEST_CASE("q_star_repeat") {
  Rng rng(8);
  const auto m = random_mdp(4, 3, 0.9, rng);
  const auto q = value_iteration(m);
  const auto v = q.state_values();
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t a = 0; a < 3; ++a) {
      CHECK(q_star_repeat(m, q, s, a, 1) == q(s, a));
      // Explicit expectation over all 3-step paths, then V*.
      const auto& t = m.transitions(a);
      auto r = [&](std::size_t x) { return m.rewards()(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a)); };
      auto p = [&](std::size_t x, std::size_t y) { return t(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)); };
      const double g = m.gamma();
      double expected = r(s);
      for (std::size_t s1 = 0; s1 < 4; ++s1) {
        for (std::size_t s2 = 0; s2 < 4; ++s2) {
          for (std::size_t s3 = 0; s3 < 4; ++s3) {
            const double prob = p(s, s1) * p(s1, s2) * p(s2, s3);
            expected += prob * g * g * g * v[s3];
          }
          expected += p(s, s1) * p(s1, s2) * g * g * r(s2);
        }
        expected += p(s, s1) * g * r(s1);
      }
      CHECK(q_star_repeat(m, q, s, a, 3) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("price_of_inertia") {
  SUBCASE("self-loops with state-only rewards cost nothing") {
    Rng rng(4);
    MatrixXd r(3, 2);
    for (int i = 0; i < 3; ++i) r.row(i).setConstant(uniform(rng, -1, 1));
    const TabularMDP m(r, {MatrixXd::Identity(3, 3), MatrixXd::Identity(3, 3)}, 0.9, 1.0);
    CHECK(std::abs(price_of_inertia(m).value) < 1e-12);
  }
  SUBCASE("lower-bound construction") {
    const auto inertia = price_of_inertia(lower_bound_mdp(1.0, 0.5, 2));
    CHECK(inertia.value == doctest::Approx(1.0).epsilon(1e-12));
    // (0, MOVE) and (0, STAY) both attain it; ties go to the lowest action.
    CHECK(inertia.state == 0);
    const auto q = value_iteration(lower_bound_mdp(1.0, 0.5, 2));
    CHECK(q(0, kMove) - q_star_repeat(lower_bound_mdp(1.0, 0.5, 2), q, 0, kMove, 2) ==
          doctest::Approx(inertia.value));
  }
  SUBCASE("nonnegative on random models") {
    Rng rng(12);
    for (int i = 0; i < 50; ++i) {
      const auto m = random_mdp(3 + i % 4, 2 + i % 3, 0.9, rng);
      CHECK(price_of_inertia(m).value >= -1e-12);
    }
  }
}

TEST_CASE("greedy_policy") {
  CHECK(greedy_policy(ActionValues{MatrixXd::Constant(3, 4, 2.5)}).action ==
        std::vector<std::size_t>{0, 0, 0});
  MatrixXd q(2, 3);
  q << 0, 5, 1, 7, -1, 3;
  CHECK(greedy_policy(ActionValues{q}).action == std::vector<std::size_t>{1, 0});

  SUBCASE("stable under perturbations below half the action gap") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
      const auto m = random_mdp(5, 3, 0.9, rng);
      const auto qs = value_iteration(m);
      double gap = 1e300;
      for (Eigen::Index s = 0; s < qs.values.rows(); ++s) {
        std::vector<double> row;
        for (Eigen::Index a = 0; a < 3; ++a) row.push_back(qs.values(s, a));
        std::sort(row.rbegin(), row.rend());
        gap = std::min(gap, row[0] - row[1]);
      }
      MatrixXd noisy = qs.values;
      for (Eigen::Index i = 0; i < noisy.size(); ++i) {
        noisy(i) += uniform(rng, -0.49, 0.49) * gap;
      }
      CHECK(greedy_policy(ActionValues{noisy}) == greedy_policy(qs));
    }
  }
  SUBCASE("invariant under positive affine maps") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      MatrixXd x = MatrixXd::NullaryExpr(6, 4, [&]() { return uniform(rng, -1, 1); });
      const double c = uniform(rng, 0.1, 10.0), k = uniform(rng, -5, 5);
      CHECK(greedy_policy(ActionValues{(c * x).array() + k}) == greedy_policy(ActionValues{x}));
    }
  }
}

TEST_CASE("evaluate_policy_with_repeat") {
  Rng rng(14);
  const auto m = random_mdp(5, 3, 0.9, rng);
  const auto pi = greedy_policy(value_iteration(m));
  CHECK(max_norm_diff(evaluate_policy_with_repeat(m, pi, 1), evaluate_policy(m, pi)) < 1e-14);
  for (std::size_t d : {2, 3, 4}) {
    const auto qd = value_iteration(induce_mdp(m, d));
    const auto vd = evaluate_policy_with_repeat(m, greedy_policy(qd), d);
    CHECK(max_norm_diff(vd, qd.state_values()) < 1e-9);
  }
}

TEST_CASE("frame-skip consistency: V_d = V and mu_d = mu") {
  Rng rng(100);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_ergodic_mrp(5 + trial % 10, uniform(rng, 0.5, 0.99), rng);
    const auto v = evaluate_mrp(p);
    const VectorXd mu = stationary_distribution(p);
    for (std::size_t d = 1; d <= 8; ++d) {
      const auto pd = induce_mrp(p, d);
      CHECK(max_norm_diff(evaluate_mrp(pd), v) <= 1e-9);
      CHECK((stationary_distribution(pd) - mu).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("induced models compose") {
  Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_ergodic_mrp(6, 0.9, rng);
    for (auto [a, b] : {std::pair{2, 3}, {3, 2}, {1, 4}, {4, 4}}) {
      const auto ab = induce_mrp(induce_mrp(p, a), b);
      const auto direct = induce_mrp(p, a * b);
      CHECK((ab.rewards() - direct.rewards()).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((ab.transitions() - direct.transitions()).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(ab.gamma() == doctest::Approx(direct.gamma()).epsilon(1e-14));
    }
  }
}

TEST_CASE("model text format") {
  SUBCASE("round trip") {
    Rng rng(77);
    const auto m = random_mdp(4, 3, 0.95, rng);
    std::stringstream ss;
    write_mdp(ss, m);
    const auto back = read_mdp(ss);
    CHECK(back.rewards() == m.rewards());
    for (std::size_t a = 0; a < 3; ++a) CHECK(back.transitions(a) == m.transitions(a));
    CHECK(back.gamma() == m.gamma());

    const auto p = random_ergodic_mrp(3, 0.5, rng);
    std::stringstream ps;
    write_mrp(ps, p);
    const auto pb = read_mrp(ps);
    CHECK(pb.transitions() == p.transitions());
  }
  SUBCASE("comments and terminal states") {
    std::istringstream in(
        "# two states\n"
        "mdp 2 1 1.0 1   # header\n"
        "terminal 1\n"
        "-1 0 1\n"
        "\n"
        "0 0 1\n");
    const auto m = read_mdp(in);
    CHECK(m.terminal_states() == std::vector<std::size_t>{1});
    CHECK(value_iteration(m)(0, 0) == doctest::Approx(-1.0));
  }
  SUBCASE("malformed input") {
    std::istringstream bad_header("mdp 2\n");
    CHECK_THROWS(read_mdp(bad_header));
    std::istringstream short_row("mdp 1 1 0.5 1\n1\n");
    CHECK_THROWS(read_mdp(short_row));
    std::istringstream bad_prob("mdp 1 1 0.5 1\n0 0.7\n");
    CHECK_THROWS_AS(read_mdp(bad_prob), std::invalid_argument);
  }
}
