#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rcelab/mdp.hpp"
#include "rcelab/rng.hpp"

namespace rcelab {

/// Recipe for a generated environment. Everything downstream of a spec and a
/// seed is deterministic.
struct EnvSpec {
    enum class Kind { chain, grid2d, random_dirichlet };
    Kind kind = Kind::chain;

    // chain
    std::size_t length = 2;

    // grid2d
    std::size_t rows = 11;
    std::size_t cols = 11;
    std::size_t start_row = 3;
    std::size_t start_col = 0;
    std::vector<std::pair<std::size_t, std::size_t>> success_cells;  // (row, col)
    double noise = 0.0;  // chance the commanded move is replaced by a random one

    // random_dirichlet
    std::size_t num_states = 5;
    std::size_t num_actions = 2;
    std::uint64_t seed = 0;

    static std::string kind_name(Kind k) {
        switch (k) {
            case Kind::chain: return "chain";
            case Kind::grid2d: return "grid2d";
            case Kind::random_dirichlet: return "random_dirichlet";
        }
        return "?";
    }
};

namespace envs {

/// Deterministic forward chain: states 0..L-1, one action, s -> min(s+1, L-1),
/// start at 0, success at the last state.
inline TabularMDP make_chain(std::size_t length) {
    if (length == 0) throw InvariantViolation("EnvSpec: chain length must be positive");
    TabularMDP mdp;
    mdp.num_states = length;
    mdp.num_actions = 1;
    mdp.transition.assign(length * length, 0.0);
    mdp.initial_dist.assign(length, 0.0);
    mdp.success_prob.assign(length, 0.0);
    mdp.initial_dist[0] = 1.0;
    mdp.success_prob[length - 1] = 1.0;
    for (std::size_t s = 0; s < length; ++s) mdp.p(s, 0, std::min(s + 1, length - 1)) = 1.0;
    mdp.validate();
    return mdp;
}

inline TabularMDP make_grid2d(const EnvSpec& spec) {
    const std::size_t R = spec.rows, C = spec.cols;
    if (R == 0 || C == 0) throw InvariantViolation("EnvSpec: grid dimensions must be positive");
    if (spec.start_row >= R || spec.start_col >= C)
        throw InvariantViolation("EnvSpec: grid start cell out of range");
    const std::size_t S = R * C, A = 4;
    const auto id = [C](std::size_t r, std::size_t c) { return r * C + c; };

    TabularMDP mdp;
    mdp.num_states = S;
    mdp.num_actions = A;
    mdp.transition.assign(S * A * S, 0.0);
    mdp.initial_dist.assign(S, 0.0);
    mdp.success_prob.assign(S, 0.0);
    mdp.initial_dist[id(spec.start_row, spec.start_col)] = 1.0;
    for (const auto& [r, c] : spec.success_cells) {
        if (r >= R || c >= C) throw InvariantViolation("EnvSpec: success cell out of range");
        mdp.success_prob[id(r, c)] = 1.0;
    }

    // actions: 0 up, 1 down, 2 left, 3 right; bumping a wall stays put
    const auto move = [&](std::size_t r, std::size_t c, std::size_t a) {
        switch (a) {
            case 0: return id(r == 0 ? r : r - 1, c);
            case 1: return id(r + 1 >= R ? r : r + 1, c);
            case 2: return id(r, c == 0 ? c : c - 1);
            default: return id(r, c + 1 >= C ? c : c + 1);
        }
    };
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t a = 0; a < A; ++a) {
                const std::size_t s = id(r, c);
                mdp.p(s, a, move(r, c, a)) += 1.0 - spec.noise;
                for (std::size_t b = 0; b < A; ++b) mdp.p(s, a, move(r, c, b)) += spec.noise / 4.0;
            }
    mdp.validate();
    return mdp;
}

/// Random MDP with Dirichlet(1,...,1) transition rows, Dirichlet initial
/// distribution and uniform success probabilities.
inline TabularMDP make_random_dirichlet(std::size_t num_states, std::size_t num_actions, std::uint64_t seed) {
    if (num_states == 0 || num_actions == 0)
        throw InvariantViolation("EnvSpec: random MDP needs positive state/action counts");
    Rng rng(seed);
    const auto dirichlet_row = [&](std::size_t n) {
        std::vector<double> v(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            // exponential draws normalized give Dirichlet(1,..,1)
            v[i] = -std::log(1.0 - rng.uniform());
            total += v[i];
        }
        for (double& x : v) x /= total;
        return v;
    };

    TabularMDP mdp;
    mdp.num_states = num_states;
    mdp.num_actions = num_actions;
    mdp.transition.reserve(num_states * num_actions * num_states);
    for (std::size_t s = 0; s < num_states; ++s)
        for (std::size_t a = 0; a < num_actions; ++a) {
            auto row = dirichlet_row(num_states);
            mdp.transition.insert(mdp.transition.end(), row.begin(), row.end());
        }
    mdp.initial_dist = dirichlet_row(num_states);
    mdp.success_prob.resize(num_states);
    for (std::size_t s = 0; s < num_states; ++s) mdp.success_prob[s] = rng.uniform();
    mdp.validate();
    return mdp;
}

}  // namespace envs

inline TabularMDP make_env(const EnvSpec& spec) {
    switch (spec.kind) {
        case EnvSpec::Kind::chain: return envs::make_chain(spec.length);
        case EnvSpec::Kind::grid2d: return envs::make_grid2d(spec);
        case EnvSpec::Kind::random_dirichlet:
            return envs::make_random_dirichlet(spec.num_states, spec.num_actions, spec.seed);
    }
    throw std::invalid_argument("make_env: unknown kind");
}

struct Trajectory {
    std::vector<std::size_t> states;   // length T+1
    std::vector<std::size_t> actions;  // length T
};

/// Replay storage: trajectories plus flat transition index and empirical
/// counts for p(s,a,s'), p(s) and p(a|s). Appending keeps counts in sync.
class TransitionDataset {
  public:
    TransitionDataset() = default;
    TransitionDataset(std::size_t num_states, std::size_t num_actions, std::uint64_t seed)
        : num_states_(num_states), num_actions_(num_actions), seed_(seed),
          sa_counts_(num_states, num_actions), state_counts_(num_states, 0.0) {}

    void append(Trajectory traj) {
        if (traj.states.size() != traj.actions.size() + 1)
            throw InvariantViolation("TransitionDataset: trajectory shape mismatch");
        const std::uint32_t ti = static_cast<std::uint32_t>(trajectories_.size());
        for (std::size_t t = 0; t < traj.actions.size(); ++t) {
            flat_.push_back({ti, static_cast<std::uint32_t>(t)});
            sa_counts_(traj.states[t], traj.actions[t]) += 1.0;
            state_counts_[traj.states[t]] += 1.0;
            ++num_transitions_;
        }
        trajectories_.push_back(std::move(traj));
    }

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t num_transitions() const { return num_transitions_; }
    const std::vector<Trajectory>& trajectories() const { return trajectories_; }

    struct FlatRef {
        std::uint32_t traj;
        std::uint32_t t;
    };
    const FlatRef& flat(std::size_t i) const { return flat_[i]; }

    /// Empirical p(s): marginal of transition source states.
    std::vector<double> state_marginal() const {
        std::vector<double> m = state_counts_;
        if (num_transitions_ == 0) throw InvariantViolation("TransitionDataset: empty dataset has no marginals");
        for (double& v : m) v /= static_cast<double>(num_transitions_);
        return m;
    }

    /// Empirical p(s,a).
    Matrix sa_marginal() const {
        Matrix m = sa_counts_;
        if (num_transitions_ == 0) throw InvariantViolation("TransitionDataset: empty dataset has no marginals");
        for (double& v : m.data) v /= static_cast<double>(num_transitions_);
        return m;
    }

    /// Empirical p(s,a,s'), flat [s][a][s'].
    std::vector<double> sas_marginal() const {
        if (num_transitions_ == 0) throw InvariantViolation("TransitionDataset: empty dataset has no marginals");
        std::vector<double> m(num_states_ * num_actions_ * num_states_, 0.0);
        const double w = 1.0 / static_cast<double>(num_transitions_);
        for (const auto& traj : trajectories_)
            for (std::size_t t = 0; t < traj.actions.size(); ++t)
                m[(traj.states[t] * num_actions_ + traj.actions[t]) * num_states_ + traj.states[t + 1]] += w;
        return m;
    }

    /// Empirical p(a|s); rows of unvisited states fall back to uniform.
    Policy empirical_behavior() const {
        Policy pi(num_states_, num_actions_);
        for (std::size_t s = 0; s < num_states_; ++s) {
            if (state_counts_[s] > 0.0) {
                for (std::size_t a = 0; a < num_actions_; ++a) pi(s, a) = sa_counts_(s, a) / state_counts_[s];
            } else {
                for (std::size_t a = 0; a < num_actions_; ++a) pi(s, a) = 1.0 / static_cast<double>(num_actions_);
            }
        }
        return pi;
    }

  private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<Trajectory> trajectories_;
    std::vector<FlatRef> flat_;
    Matrix sa_counts_;
    std::vector<double> state_counts_;
    std::size_t num_transitions_ = 0;
};

/// Seeded rollout collection. Continuing-task semantics: the state resets to
/// the initial distribution every `episode_len` steps, no terminal flag.
inline TransitionDataset collect(const TabularMDP& mdp, const Policy& behavior, std::size_t num_steps,
                                 std::size_t episode_len, std::uint64_t seed) {
    if (episode_len == 0) throw InvariantViolation("collect: episode_len must be >= 1");
    TransitionDataset data(mdp.num_states, mdp.num_actions, seed);
    Rng rng(seed);

    std::size_t done = 0;
    while (done < num_steps) {
        const std::size_t steps = std::min(episode_len, num_steps - done);
        Trajectory traj;
        traj.states.reserve(steps + 1);
        traj.actions.reserve(steps);
        std::size_t s = rng.categorical(mdp.initial_dist);
        traj.states.push_back(s);
        for (std::size_t t = 0; t < steps; ++t) {
            std::vector<double> row(mdp.num_actions);
            for (std::size_t a = 0; a < mdp.num_actions; ++a) row[a] = behavior(s, a);
            const std::size_t a = rng.categorical(row);
            std::vector<double> next(mdp.num_states);
            for (std::size_t s2 = 0; s2 < mdp.num_states; ++s2) next[s2] = mdp.p(s, a, s2);
            const std::size_t s2 = rng.categorical(next);
            traj.actions.push_back(a);
            traj.states.push_back(s2);
            s = s2;
        }
        data.append(std::move(traj));
        done += steps;
    }
    return data;
}

/// Draws success examples s* with probability proportional to
/// marginal(s) * p(e=1|s), the generative model behind the posterior
/// inversion. The exact prior p(e=1) is recorded on the result.
inline SuccessExampleSet sample_success_examples(const TabularMDP& mdp, const std::vector<double>& behavior_marginal,
                                                 std::size_t count, std::uint64_t seed) {
    std::vector<double> weights(mdp.num_states);
    double prior = 0.0;
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
        weights[s] = behavior_marginal[s] * mdp.success_prob[s];
        prior += weights[s];
    }
    if (prior <= 0.0)
        throw InvariantViolation("sample_success_examples: marginal * success_prob has zero total mass");

    Rng rng(seed);
    std::vector<std::size_t> examples;
    examples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) examples.push_back(rng.categorical(weights));
    return SuccessExampleSet::from_examples(std::move(examples), mdp.num_states, prior);
}

/// Success examples drawn under a visitation that differs from the transition
/// data: the setting where the user's capabilities diverge from the agent's.
inline SuccessExampleSet violate_assumption_sampler(const TabularMDP& mdp, const std::vector<double>& user_marginal,
                                                    std::size_t count, std::uint64_t seed) {
    return sample_success_examples(mdp, user_marginal, count, seed);
}

}  // namespace rcelab
