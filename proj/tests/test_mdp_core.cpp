#include <doctest.h>

#include <cmath>
#include <cstring>

#include "rcelab/envs.hpp"
#include "rcelab/json_io.hpp"
#include "rcelab/mdp.hpp"

using namespace rcelab;

namespace {

/// Test-only oracle: truncated-horizon occupancy by explicit distribution
/// rollout, independent of the linear solver.
std::vector<double> occupancy_by_rollout(const TabularMDP& mdp, double gamma, const Policy& pi,
                                         const std::vector<double>& start, std::size_t horizon) {
    std::vector<double> mu = start, rho(mdp.num_states, 0.0);
    double discount = 1.0;
    for (std::size_t k = 0; k <= horizon; ++k) {
        for (std::size_t s = 0; s < mdp.num_states; ++s) rho[s] += (1.0 - gamma) * discount * mu[s];
        std::vector<double> next(mdp.num_states, 0.0);
        for (std::size_t s = 0; s < mdp.num_states; ++s) {
            if (mu[s] == 0.0) continue;
            for (std::size_t a = 0; a < mdp.num_actions; ++a) {
                const double w = mu[s] * pi(s, a);
                if (w == 0.0) continue;
                for (std::size_t s2 = 0; s2 < mdp.num_states; ++s2) next[s2] += w * mdp.p(s, a, s2);
            }
        }
        mu = std::move(next);
        discount *= gamma;
    }
    return rho;
}

TabularMDP chain2() { return envs::make_chain(2); }

}  // namespace

TEST_CASE("discounted occupancy matches truncated enumeration on chain2") {
    const auto mdp = chain2();
    const TaskSpec task{0.5, 1000};
    const Policy pi = Policy::uniform(2, 1);

    const auto oracle = occupancy_by_rollout(mdp, 0.5, pi, mdp.initial_dist, 60);
    CHECK(oracle[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(oracle[1] == doctest::Approx(0.5).epsilon(1e-12));

    const auto rho = discounted_occupancy(mdp, task, pi);
    CHECK(std::fabs(rho[0] - oracle[0]) < 1e-9);
    CHECK(std::fabs(rho[1] - oracle[1]) < 1e-9);
    CHECK(std::fabs(rho[0] + rho[1] - 1.0) < 1e-9);
}

TEST_CASE("gamma zero occupancy is the start distribution") {
    const auto mdp = envs::make_random_dirichlet(5, 3, 11);
    const TaskSpec task{0.0, 10};
    const Policy pi = Policy::uniform(5, 3);
    const auto rho = discounted_occupancy(mdp, task, pi);
    CHECK(sup_norm_diff(rho, mdp.initial_dist) < 1e-12);

    const auto rho_sa = discounted_occupancy(mdp, task, pi, FromStateAction{2, 1});
    for (std::size_t s = 0; s < 5; ++s) CHECK(rho_sa[s] == doctest::Approx(s == 2 ? 1.0 : 0.0));
}

TEST_CASE("single absorbing state has unit occupancy") {
    const auto mdp = envs::make_chain(1);
    const TaskSpec task{0.9, 1000};
    const auto rho = discounted_occupancy(mdp, task, Policy::uniform(1, 1));
    CHECK(rho[0] == doctest::Approx(1.0));
}

TEST_CASE("occupancy from a fixed state-action pair matches the rollout oracle") {
    const auto mdp = envs::make_random_dirichlet(6, 3, 42);
    const Policy pi = Policy::uniform(6, 3);
    const TaskSpec task{0.9, 1000};
    for (std::size_t a = 0; a < 3; ++a) {
        const auto rho = discounted_occupancy(mdp, task, pi, FromStateAction{4, a});
        // brute force: occupancy of the pair = (1-g) delta_s + g * P[s][a] . rollout
        std::vector<double> start(6, 0.0);
        for (std::size_t s2 = 0; s2 < 6; ++s2) start[s2] = mdp.p(4, a, s2);
        auto oracle = occupancy_by_rollout(mdp, 0.9, pi, start, 250);  // 0.9^251 ~ 3e-12
        for (double& v : oracle) v *= 0.9;
        oracle[4] += 1.0 - 0.9;
        CHECK(sup_norm_diff(rho, oracle) < 1e-9);
        CHECK(std::fabs(sum(rho) - 1.0) < 1e-9);
    }
}

TEST_CASE("future success probability on chain2 equals the geometric series") {
    const auto mdp = chain2();
    const TaskSpec task{0.5, 1000};
    const Policy pi = Policy::uniform(2, 1);
    // oracle: from state 0 the success flag is seen from step 1 on, so
    // (1-g) * sum_{k>=1} g^k = g; from state 1 it is 1
    const double from0 = [&] {
        double acc = 0.0, d = 0.5;
        for (int k = 1; k < 120; ++k) {
            acc += 0.5 * d;
            d *= 0.5;
        }
        return acc;
    }();
    CHECK(from0 == doctest::Approx(0.5).epsilon(1e-12));

    const auto q = future_success_prob(mdp, task, pi);
    CHECK(q(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(q(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("degenerate success probabilities propagate exactly") {
    auto mdp = envs::make_random_dirichlet(7, 2, 3);
    const TaskSpec task{0.9, 1000};
    const Policy pi = Policy::uniform(7, 2);

    mdp.success_prob.assign(7, 0.0);
    auto q = future_success_prob(mdp, task, pi);
    for (double v : q.data) CHECK(v == doctest::Approx(0.0));
    CHECK(control_objective(mdp, task, pi) == doctest::Approx(0.0));

    mdp.success_prob.assign(7, 1.0);
    q = future_success_prob(mdp, task, pi);
    for (double v : q.data) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(control_objective(mdp, task, pi) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("control objective on chain2 from the start state") {
    const auto mdp = chain2();
    CHECK(control_objective(mdp, TaskSpec{0.5, 1000}, Policy::uniform(2, 1)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("success posterior arithmetic") {
    SUBCASE("point mass") {
        SuccessExampleSet set;
        set.examples = {1};
        set.dist = {0.0, 1.0};
        set.prior = 0.5;
        const auto out = success_posterior(set, {0.5, 0.5});
        CHECK(out.posterior[0] == doctest::Approx(0.0));
        CHECK(out.posterior[1] == doctest::Approx(1.0));
        CHECK_FALSE(out.clamped);
    }
    SUBCASE("dist equal to marginal gives the prior everywhere") {
        SuccessExampleSet set;
        set.examples = {0, 1};
        set.dist = {0.3, 0.7};
        set.prior = 0.42;
        const auto out = success_posterior(set, {0.3, 0.7});
        CHECK(out.posterior[0] == doctest::Approx(0.42));
        CHECK(out.posterior[1] == doctest::Approx(0.42));
    }
    SUBCASE("elementwise Bayes") {
        SuccessExampleSet set;
        set.examples = {0, 1};
        set.dist = {2.0 / 3.0, 1.0 / 3.0};
        set.prior = 0.3;
        const auto out = success_posterior(set, {0.8, 0.2});
        CHECK(out.posterior[0] == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(out.posterior[1] == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("unvisited success state is an error naming the state") {
        SuccessExampleSet set;
        set.examples = {1};
        set.dist = {0.0, 1.0};
        set.prior = 0.5;
        CHECK_THROWS_WITH_AS(success_posterior(set, {1.0, 0.0}), doctest::Contains("state 1"), InvariantViolation);
    }
    SUBCASE("values above one are clamped and flagged") {
        SuccessExampleSet set;
        set.examples = {1};
        set.dist = {0.0, 1.0};
        set.prior = 1.0;
        const auto out = success_posterior(set, {0.6, 0.4});  // unclamped 2.5
        CHECK(out.posterior[1] == doctest::Approx(1.0));
        CHECK(out.clamped);
    }
}

TEST_CASE("type invariants are enforced") {
    auto mdp = chain2();
    mdp.transition[0] = 0.5;  // row no longer sums to 1
    CHECK_THROWS_AS(mdp.validate(), InvariantViolation);

    auto mdp2 = chain2();
    mdp2.initial_dist = {0.5, 0.4};
    CHECK_THROWS_WITH_AS(mdp2.validate(), doctest::Contains("initial_dist"), InvariantViolation);

    auto mdp3 = chain2();
    mdp3.success_prob[0] = 1.5;
    CHECK_THROWS_WITH_AS(mdp3.validate(), doctest::Contains("success_prob"), InvariantViolation);

    const TaskSpec bad_gamma{1.0, 10};
    CHECK_THROWS_WITH_AS(bad_gamma.validate(), doctest::Contains("gamma"), InvariantViolation);
    const TaskSpec undiscounted{0.0, 10};
    CHECK_NOTHROW(undiscounted.validate());

    Policy pi(2, 2);
    pi(0, 0) = 0.6;
    pi(0, 1) = 0.6;
    pi(1, 0) = 1.0;
    CHECK_THROWS_AS(pi.validate(), InvariantViolation);
}

TEST_CASE("MDP json round trip is bit-faithful") {
    for (const std::uint64_t seed : {1u, 2u, 3u}) {
        const auto mdp = envs::make_random_dirichlet(4, 3, seed);
        const auto text = io::to_json(mdp).dump();
        const auto back = io::mdp_from_json(io::json::parse(text));
        REQUIRE(back.transition.size() == mdp.transition.size());
        CHECK(std::memcmp(back.transition.data(), mdp.transition.data(), mdp.transition.size() * sizeof(double)) == 0);
        CHECK(std::memcmp(back.initial_dist.data(), mdp.initial_dist.data(), mdp.initial_dist.size() * sizeof(double)) == 0);
        CHECK(std::memcmp(back.success_prob.data(), mdp.success_prob.data(), mdp.success_prob.size() * sizeof(double)) == 0);
        // serializing again reproduces the same bytes
        CHECK(io::to_json(back).dump() == text);
    }
}
