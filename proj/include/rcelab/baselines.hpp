#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rcelab/mdp.hpp"
#include "rcelab/oracle.hpp"

namespace rcelab {
namespace baselines {

/// Per-state reward inferred from success examples by one of the comparison
/// methods. The point of the tabular versions is that they are Bayes-optimal
/// by construction, so differences against recursive classification come from
/// the reward form alone.
struct RewardModel {
    enum class Provenance { sqil, vice_ratio, density };
    std::vector<double> reward;
    Provenance provenance = Provenance::sqil;

    static std::string provenance_name(Provenance p) {
        switch (p) {
            case Provenance::sqil: return "sqil";
            case Provenance::vice_ratio: return "vice_ratio";
            case Provenance::density: return "density";
        }
        return "?";
    }
};

/// +1 on states that appear in the success set, 0 elsewhere.
inline RewardModel sqil_reward(const SuccessExampleSet& successes, std::size_t num_states) {
    RewardModel rm;
    rm.provenance = RewardModel::Provenance::sqil;
    rm.reward.assign(num_states, 0.0);
    for (std::size_t s : successes.examples) rm.reward[s] = 1.0;
    return rm;
}

struct ViceOptions {
    bool log_form = false;  // use log of the ratio as the reward
};

/// Bayes-optimal success-vs-negatives classifier ratio p(s|e=1) / q(s).
/// q is the negatives distribution the discriminator was (notionally)
/// trained against.
inline RewardModel vice_ratio_reward(const SuccessExampleSet& successes, const std::vector<double>& q,
                                     const ViceOptions& opts = {}) {
    RewardModel rm;
    rm.provenance = RewardModel::Provenance::vice_ratio;
    rm.reward.assign(q.size(), 0.0);
    for (std::size_t s = 0; s < q.size(); ++s) {
        if (successes.dist[s] == 0.0) {
            rm.reward[s] = opts.log_form ? -1e9 : 0.0;  // log 0 stand-in, never selected
            continue;
        }
        if (q[s] <= 0.0)
            throw InvariantViolation("vice_ratio_reward: success mass on state " + std::to_string(s) +
                                     " with zero negatives mass");
        const double ratio = successes.dist[s] / q[s];
        rm.reward[s] = opts.log_form ? std::log(ratio) : ratio;
    }
    return rm;
}

/// The empirical success-state density used directly as a reward.
inline RewardModel density_reward(const SuccessExampleSet& successes) {
    RewardModel rm;
    rm.provenance = RewardModel::Provenance::density;
    rm.reward = successes.dist;
    return rm;
}

struct BaselineSolution {
    oracle::QTable q;
    Policy policy;
};

/// Optimizes an inferred reward with exact control value iteration and greedy
/// extraction, the "then run RL on it" stage shared by every baseline.
inline BaselineSolution solve_baseline(const DynamicsView& dyn, const TaskSpec& task, const RewardModel& rm) {
    BaselineSolution sol;
    sol.q = oracle::value_iteration(dyn, task, rm.reward, oracle::ValueIterationMode::control);
    sol.policy = oracle::greedy_policy(sol.q);
    return sol;
}

/// Adversarial-discriminator variant: the negatives distribution is re-fit to
/// the current policy's exact occupancy each round, then the reward is
/// re-optimized. At tabular Bayes-optimality this is the whole content of the
/// iterative discriminator methods.
inline BaselineSolution solve_vice_iterative(const DynamicsView& dyn, const std::vector<double>& initial_dist,
                                             const TaskSpec& task, const SuccessExampleSet& successes,
                                             const std::vector<double>& q0, std::size_t rounds,
                                             const ViceOptions& opts = {}) {
    std::vector<double> q = q0;
    BaselineSolution sol;
    for (std::size_t k = 0; k < rounds; ++k) {
        sol = solve_baseline(dyn, task, vice_ratio_reward(successes, q, opts));
        if (k + 1 == rounds) break;
        const auto rho = discounted_occupancy(dyn, initial_dist, task, sol.policy, FromInitial{});
        // keep support over the success states: mix a little of the original
        // negatives so the ratio stays defined
        for (std::size_t s = 0; s < q.size(); ++s) q[s] = 0.9 * rho[s] + 0.1 * q0[s];
    }
    return sol;
}

}  // namespace baselines
}  // namespace rcelab
