#include <doctest.h>

#include <cmath>

#include "rcelab/envs.hpp"
#include "rcelab/robust.hpp"

using namespace rcelab;

TEST_CASE("worst-case visitation") {
    SUBCASE("symmetric inputs stay uniform") {
        const auto pu = robust::worst_case_pU({0.5, 0.5}, {0.5, 0.5});
        CHECK(pu[0] == doctest::Approx(0.5));
        CHECK(pu[1] == doctest::Approx(0.5));
    }
    SUBCASE("mirrored skews cancel") {
        const auto pu = robust::worst_case_pU({0.8, 0.2}, {0.2, 0.8});
        CHECK(pu[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(pu[1] == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("0.9/0.1 against uniform") {
        const auto pu = robust::worst_case_pU({0.9, 0.1}, {0.5, 0.5});
        CHECK(pu[0] == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(pu[1] == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("disjoint supports are an error") {
        CHECK_THROWS_AS(robust::worst_case_pU({1.0, 0.0}, {0.0, 1.0}), InvariantViolation);
    }
}

TEST_CASE("robust objective closed form") {
    CHECK(robust::robust_objective({0.3, 0.7}, {0.3, 0.7}, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(robust::robust_objective({1.0, 0.0}, {0.0, 1.0}, 0.7) == doctest::Approx(0.0));
    // (sqrt(0.45) + sqrt(0.05))^2 = 0.5 + 2 sqrt(0.0225) = 0.8 exactly
    CHECK(std::fabs(robust::robust_objective({0.9, 0.1}, {0.5, 0.5}, 1.0) - 0.8) < 1e-12);
}

TEST_CASE("squared Hellinger distance") {
    CHECK(robust::hellinger_sq({0.2, 0.8}, {0.2, 0.8}) == doctest::Approx(0.0));
    CHECK(robust::hellinger_sq({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(2.0));
    CHECK(robust::hellinger_sq({0.5, 0.5}, {1.0, 0.0}) == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("numeric inner minimizer agrees with the closed form") {
    SUBCASE("two states, exponentiated gradient") {
        const auto out = robust::numeric_inner_min({0.9, 0.1}, {0.5, 0.5});
        CHECK(std::fabs(out.pu_hat[0] - 0.75) + std::fabs(out.pu_hat[1] - 0.25) < 1e-3);
        const double closed = robust::robust_objective({0.9, 0.1}, {0.5, 0.5}, 1.0);
        CHECK(out.value >= closed - 1e-6);
        CHECK(out.value <= closed * (1.0 + 1e-3));
    }
    SUBCASE("uniform stays uniform") {
        const auto out = robust::numeric_inner_min({0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25});
        for (double v : out.pu_hat) CHECK(v == doctest::Approx(0.25).epsilon(1e-6));
    }
    SUBCASE("grid mode matches on two states") {
        robust::InnerMinConfig cfg;
        cfg.mode = robust::InnerMinConfig::Mode::grid;
        const auto out = robust::numeric_inner_min({0.9, 0.1}, {0.5, 0.5}, cfg);
        CHECK(std::fabs(out.pu_hat[0] - 0.75) < 1e-3);
    }
    SUBCASE("grid mode rejects large state spaces") {
        robust::InnerMinConfig cfg;
        cfg.mode = robust::InnerMinConfig::Mode::grid;
        CHECK_THROWS_AS(robust::numeric_inner_min({0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25}, cfg),
                        std::invalid_argument);
    }
}

TEST_CASE("robust report ties its fields together") {
    Rng rng(5150);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.index(8);
        std::vector<double> rho(n), p(n);
        for (std::size_t s = 0; s < n; ++s) {
            rho[s] = -std::log(1.0 - rng.uniform());
            p[s] = -std::log(1.0 - rng.uniform());
        }
        rho = normalized(rho);
        p = normalized(p);
        const double prior = 0.1 + 0.9 * rng.uniform();
        const auto rep = robust::make_robust_report(rho, p, prior);
        CHECK(std::fabs(rep.robust_value - rep.bhattacharyya * rep.bhattacharyya * prior) < 1e-10);
        CHECK(std::fabs(rep.bhattacharyya - (1.0 - rep.hellinger_sq / 2.0)) < 1e-10);
        CHECK_FALSE(rep.support_mismatch);
    }
}

TEST_CASE("support mismatch is flagged, not hidden") {
    const auto rep = robust::make_robust_report({1.0, 0.0, 0.0}, {0.5, 0.5, 0.0}, 1.0);
    CHECK(rep.support_mismatch);
    CHECK(rep.robust_value == doctest::Approx(0.5 * 1.0));  // (sqrt(0.5))^2
}

TEST_CASE("iterated training reaches a one-point fixed point immediately") {
    // single success state: the occupancy/success ratio has one support point,
    // so the proportionality diagnostic is trivially tight
    EnvSpec spec;
    spec.kind = EnvSpec::Kind::grid2d;
    spec.rows = spec.cols = 3;
    spec.start_row = spec.start_col = 0;
    spec.success_cells = {{2, 2}};
    const auto mdp = make_env(spec);

    robust::IteratedConfig cfg;
    cfg.train.gamma = 0.9;
    cfg.train.max_iterations = 2000;
    cfg.train.metric_every = 0;
    cfg.initial_random_steps = 4000;
    cfg.steps_per_outer = 1000;
    cfg.seed = 1;
    const auto out = robust::iterated_rce(mdp, sample_success_examples(mdp, [&] {
                                              const TaskSpec task{0.9, 1000};
                                              return discounted_occupancy(mdp, task, Policy::uniform(9, 4));
                                          }(), 100, 2),
                                          cfg, 1);
    CHECK(out.fixed_point.max_ratio_deviation_final == doctest::Approx(0.0));
    CHECK(out.fixed_point.reached);
    CHECK(out.policies.size() == 1);
}

TEST_CASE("constant success probability makes every policy optimal") {
    // p(e|s) flat: the objective cannot distinguish policies, so outer
    // iterations shuffle nothing of value
    auto mdp = envs::make_random_dirichlet(4, 2, 9);
    mdp.success_prob.assign(4, 0.6);
    const TaskSpec task{0.9, 1000};
    const auto marginal = discounted_occupancy(mdp, task, Policy::uniform(4, 2));
    const auto successes = sample_success_examples(mdp, marginal, 400, 5);

    robust::IteratedConfig cfg;
    cfg.train.gamma = 0.9;
    cfg.train.max_iterations = 5000;
    cfg.train.metric_every = 0;
    cfg.initial_random_steps = 3000;
    cfg.steps_per_outer = 1000;
    cfg.seed = 3;
    const auto out = robust::iterated_rce(mdp, successes, cfg, 4);
    const double base = control_objective(mdp, task, out.policies.front());
    CHECK(base == doctest::Approx(0.6).epsilon(1e-9));
    for (const auto& pi : out.policies)
        CHECK(control_objective(mdp, task, pi) == doctest::Approx(base).epsilon(1e-9));
}
