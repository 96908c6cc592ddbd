#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rcelab/envs.hpp"
#include "rcelab/mdp.hpp"
#include "rcelab/oracle.hpp"
#include "rcelab/rng.hpp"

namespace rcelab {
namespace rce {

/// Future-success classifier over (state, action), stored as logits so
/// C = logistic(theta) never saturates to exactly 0 or 1 for finite logits
/// and the odds C/(1-C) = exp(theta) stay well behaved.
struct Classifier {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> logits;  // flat [s][a]

    Classifier() = default;
    Classifier(std::size_t s, std::size_t a, double logit_fill = 0.0)
        : num_states(s), num_actions(a), logits(s * a, logit_fill) {}

    double logit(std::size_t s, std::size_t a) const { return logits[s * num_actions + a]; }
    double& logit(std::size_t s, std::size_t a) { return logits[s * num_actions + a]; }

    double c(std::size_t s, std::size_t a) const { return 1.0 / (1.0 + std::exp(-logit(s, a))); }

    static Classifier from_ratio_table(const Matrix& ratio) {
        Classifier cls(ratio.rows, ratio.cols);
        for (std::size_t i = 0; i < ratio.data.size(); ++i) cls.logits[i] = std::log(ratio.data[i]);
        return cls;
    }

    Matrix ratio_table() const {
        Matrix m(num_states, num_actions);
        for (std::size_t i = 0; i < logits.size(); ++i) m.data[i] = std::exp(logits[i]);
        return m;
    }
};

/// Classifier odds C/(1-C) = exp(theta) at one entry.
inline double ratio(const Classifier& cls, std::size_t s, std::size_t a) { return std::exp(cls.logit(s, a)); }

/// Expected next-step odds under the policy. This is the bootstrapped
/// quantity the classifier is trained against; it carries no gradient
/// (target-table semantics) and its odds are clipped before averaging.
inline double td_target_w(const Classifier& cls_target, const Policy& pi, std::size_t s_next,
                          double ratio_clip = std::numeric_limits<double>::infinity()) {
    double w = 0.0;
    for (std::size_t a = 0; a < cls_target.num_actions; ++a) {
        const double pa = pi(s_next, a);
        if (pa == 0.0) continue;
        w += pa * std::min(ratio(cls_target, s_next, a), ratio_clip);
    }
    return w;
}

/// Cross-entropy label induced by the bootstrapped odds: y = gamma w / (gamma w + 1).
inline double label_from_w(double w, double gamma) {
    const double gw = gamma * w;
    return gw / (gw + 1.0);
}

/// Two-horizon label: the mean of the one-step label and the label built from
/// the odds n steps ahead, discounted by gamma^n. n = 1 with both odds taken
/// at the next step reduces to label_from_w.
inline double n_step_label(double w_1step, double w_nstep, double gamma, std::size_t n) {
    const double gn = std::pow(gamma, static_cast<double>(n));
    const double far = gn * w_nstep / (gn * w_nstep + 1.0);
    return 0.5 * (label_from_w(w_1step, gamma) + far);
}

/// Target pair for a sampled transition: the one-step bootstrapped odds
/// (which also sets the cross-entropy weight 1 + gamma w) and the label.
struct TdTarget {
    double w = 0.0;  // bootstrapped odds at the next step
    double y = 0.0;  // resulting cross-entropy label, in [0, 1)
};

// Per-sample logit gradients of the two cross-entropy terms. dCE/dtheta for
// CE(C; y) with weight m is m * (C - y).
inline double success_logit_grad(double c, double gamma, double success_weight) {
    return (1.0 - gamma) * success_weight * (c - 1.0);
}
inline double transition_logit_grad(double c, double w_1step, double y, double gamma) {
    return (1.0 + gamma * w_1step) * (c - y);
}

/// Synchronous assignment over all (s, a):
///   odds <- (1-gamma) p_e + gamma E_{s', a'}[odds'],
/// the expected-update form of recursive classification. `p_e_implied` is the
/// posterior recovered from success examples (or ground truth in verification
/// harnesses); the dynamics view carries no success information.
inline Classifier expected_update(const Classifier& cls, const Policy& pi, const std::vector<double>& p_e_implied,
                                  const DynamicsView& dyn, double gamma) {
    const std::size_t S = dyn.num_states, A = dyn.num_actions;
    std::vector<double> mean_odds(S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) mean_odds[s] += pi(s, a) * std::exp(cls.logit(s, a));

    Classifier out(S, A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            double boot = 0.0;
            for (std::size_t s2 = 0; s2 < S; ++s2) boot += dyn.p(s, a, s2) * mean_odds[s2];
            out.logit(s, a) = std::log((1.0 - gamma) * p_e_implied[s] + gamma * boot);
        }
    return out;
}

enum class ActionSource { current_policy, behavior_policy };
enum class LrSchedule { constant, robbins_monro };
enum class PolicyUpdate { greedy, soft, frozen };

struct TrainConfig {
    double gamma = 0.99;
    double learning_rate = 0.1;
    double entropy_coeff = 1e-4;  // temperature of soft policy extraction
    double polyak_tau = 0.005;    // 1 disables the target table
    std::size_t n_step = 10;      // 1 disables n-step targets
    std::size_t success_batch = 64;
    std::size_t transition_batch = 256;
    std::size_t max_iterations = 20'000;
    double convergence_tol = 1e-10;  // expected-mode assignment residual
    ActionSource action_source_for_successes = ActionSource::current_policy;
    double ratio_clip = 10.0;
    bool use_success_prior = true;  // weight the success term by p(e=1)
    LrSchedule lr_schedule = LrSchedule::constant;
    std::size_t lr_decay_horizon = 1000;  // K in eta/(1 + k/K)
    PolicyUpdate policy_update = PolicyUpdate::greedy;
    std::size_t metric_every = 100;
    // online collection
    std::size_t collect_every = 1000;
    std::size_t collect_steps = 453;
    std::size_t episode_len = 151;
    double explore_eps = 0.1;  // uniform mixing for online collection
    std::uint64_t seed = 0;

    void validate() const {
        if (!(gamma >= 0.0 && gamma < 1.0)) throw InvariantViolation("TrainConfig: gamma must lie in [0,1)");
        if (learning_rate < 0.0) throw InvariantViolation("TrainConfig: learning_rate must be >= 0");
        if (entropy_coeff <= 0.0) throw InvariantViolation("TrainConfig: entropy_coeff must be positive");
        if (!(polyak_tau > 0.0 && polyak_tau <= 1.0)) throw InvariantViolation("TrainConfig: polyak_tau must lie in (0,1]");
        if (n_step < 1) throw InvariantViolation("TrainConfig: n_step must be >= 1");
        if (ratio_clip <= 0.0) throw InvariantViolation("TrainConfig: ratio_clip must be positive");
        if (episode_len == 0) throw InvariantViolation("TrainConfig: episode_len must be >= 1");
    }
};

struct SuccessSample {
    std::size_t state;
    std::size_t action;
};
struct TransitionSample {
    std::size_t s;
    std::size_t a;
    std::size_t s_next;
    std::size_t s_nstep;   // state min(n, remaining) steps ahead
    std::size_t n_actual;  // horizon actually used for the far label
};

inline TdTarget make_td_target(const Classifier& cls_target, const Policy& pi, const TransitionSample& x,
                               const TrainConfig& cfg) {
    TdTarget t;
    t.w = td_target_w(cls_target, pi, x.s_next, cfg.ratio_clip);
    const double w_far = td_target_w(cls_target, pi, x.s_nstep, cfg.ratio_clip);
    t.y = n_step_label(t.w, w_far, cfg.gamma, x.n_actual);
    return t;
}

/// One sampled gradient step on the classifier logits. Success examples get a
/// cross-entropy pull toward y = 1 with weight (1-gamma) (times the recorded
/// success prior when configured); transitions get a pull toward the
/// bootstrapped label with weight (1 + gamma w). Empty batches are a no-op.
inline Classifier stochastic_update(const Classifier& cls, const Classifier& cls_target, const Policy& pi,
                                    const std::vector<SuccessSample>& success_batch,
                                    const std::vector<TransitionSample>& transition_batch, const TrainConfig& cfg,
                                    double eta, double success_prior = 1.0) {
    if (success_batch.empty() && transition_batch.empty()) {
        std::cerr << "stochastic_update: empty batches, no-op\n";
        return cls;
    }
    const double g = cfg.gamma;
    const double prior_w = cfg.use_success_prior ? success_prior : 1.0;
    Classifier out = cls;

    if (!success_batch.empty()) {
        const double scale = eta / static_cast<double>(success_batch.size());
        for (const auto& x : success_batch) {
            const double c = cls.c(x.state, x.action);
            out.logit(x.state, x.action) -= scale * success_logit_grad(c, g, prior_w);
        }
    }
    if (!transition_batch.empty()) {
        const double scale = eta / static_cast<double>(transition_batch.size());
        for (const auto& x : transition_batch) {
            const TdTarget target = make_td_target(cls_target, pi, x, cfg);
            const double c = cls.c(x.s, x.a);
            out.logit(x.s, x.a) -= scale * transition_logit_grad(c, target.w, target.y, g);
        }
    }
    return out;
}

enum class PolicyMode { greedy, soft };

/// Greedy: point mass on the argmax of C, ties to the lowest action index.
/// Soft: pi(a|s) proportional to exp(theta / temperature).
inline Policy extract_policy(const Classifier& cls, PolicyMode mode, double temperature = 1e-4) {
    const std::size_t S = cls.num_states, A = cls.num_actions;
    Policy pi(S, A);
    if (mode == PolicyMode::greedy) {
        for (std::size_t s = 0; s < S; ++s) {
            std::size_t best = 0;
            for (std::size_t a = 1; a < A; ++a)
                if (cls.logit(s, a) > cls.logit(s, best)) best = a;
            pi(s, best) = 1.0;
        }
        return pi;
    }
    for (std::size_t s = 0; s < S; ++s) {
        double top = cls.logit(s, 0);
        for (std::size_t a = 1; a < A; ++a) top = std::max(top, cls.logit(s, a));
        if (!std::isfinite(top)) {  // all odds zero: no preference to express
            for (std::size_t a = 0; a < A; ++a) pi(s, a) = 1.0 / static_cast<double>(A);
            continue;
        }
        double z = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            pi(s, a) = std::exp((cls.logit(s, a) - top) / temperature);
            z += pi(s, a);
        }
        for (std::size_t a = 0; a < A; ++a) pi(s, a) /= z;
    }
    return pi;
}

struct MetricsRow {
    std::size_t iteration = 0;
    double objective = 0.0;
    double bellman_residual = 0.0;
    double policy_delta = 0.0;
    std::uint64_t wallclock_ns = 0;
};

enum class TrainMode { expected, stochastic };

struct TrainResult {
    Classifier classifier;
    Policy policy;
    std::vector<MetricsRow> metrics;
    bool converged = false;
    bool iteration_cap_hit = false;
    std::vector<double> p_e_implied;  // the posterior the run actually fit
};

namespace detail {

inline double bellman_residual(const Classifier& cls, const Policy& pi, const std::vector<double>& p_e,
                               const DynamicsView& dyn, double gamma) {
    const Classifier next = expected_update(cls, pi, p_e, dyn, gamma);
    double r = 0.0;
    for (std::size_t i = 0; i < cls.logits.size(); ++i)
        r = std::max(r, std::fabs(std::exp(next.logits[i]) - std::exp(cls.logits[i])));
    return r;
}

inline double greedy_delta(const Classifier& a, const Classifier& b) {
    std::size_t changed = 0;
    for (std::size_t s = 0; s < a.num_states; ++s) {
        std::size_t ba = 0, bb = 0;
        for (std::size_t x = 1; x < a.num_actions; ++x) {
            if (a.logit(s, x) > a.logit(s, ba)) ba = x;
            if (b.logit(s, x) > b.logit(s, bb)) bb = x;
        }
        if (ba != bb) ++changed;
    }
    return static_cast<double>(changed) / static_cast<double>(a.num_states);
}

inline Policy mix_uniform(const Policy& pi, double eps) {
    Policy out = pi;
    const double u = eps / static_cast<double>(pi.num_actions);
    for (double& v : out.probs) v = (1.0 - eps) * v + u;
    return out;
}

}  // namespace detail

/// Trains a classifier and policy from transitions and success examples.
///
/// Expected mode sweeps the synchronous assignment until the odds stop moving;
/// stochastic mode runs sampled cross-entropy steps with a Polyak target
/// table. The posterior the run fits is recovered from the success set and
/// the dataset marginal unless `p_e_override` supplies it (verification runs
/// pass ground truth there). The environment is used for online collection
/// and for oracle-evaluated metrics only.
inline TrainResult train(const TabularMDP& env, TransitionDataset data, const SuccessExampleSet& successes,
                         const TrainConfig& cfg, TrainMode mode, bool online,
                         const std::optional<std::vector<double>>& p_e_override = std::nullopt,
                         const std::optional<Policy>& frozen_policy = std::nullopt) {
    cfg.validate();
    if (data.num_transitions() == 0) throw InvariantViolation("train: transition dataset is empty");
    if (successes.examples.empty()) throw InvariantViolation("train: success example set is empty");

    const auto dyn = env.dynamics();
    const TaskSpec task{cfg.gamma, 1000};
    const double g = cfg.gamma;
    const auto t0 = std::chrono::steady_clock::now();
    const auto now_ns = [&] {
        return static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count());
    };

    TrainResult res;
    res.p_e_implied = p_e_override ? *p_e_override : success_posterior(successes, data.state_marginal()).posterior;

    Classifier cls(env.num_states, env.num_actions);  // logits 0, C = 0.5
    Classifier target = cls;
    Policy pi = frozen_policy ? *frozen_policy : Policy::uniform(env.num_states, env.num_actions);
    Rng rng(cfg.seed);

    const auto pick_policy = [&](const Classifier& c) -> Policy {
        switch (cfg.policy_update) {
            case PolicyUpdate::frozen: return pi;
            case PolicyUpdate::greedy: return extract_policy(c, PolicyMode::greedy);
            case PolicyUpdate::soft: return extract_policy(c, PolicyMode::soft, cfg.entropy_coeff);
        }
        return pi;
    };
    const auto record = [&](std::size_t iter, const Classifier& before, const Classifier& after) {
        MetricsRow row;
        row.iteration = iter;
        row.objective = control_objective(env, task, extract_policy(after, PolicyMode::greedy));
        row.bellman_residual = detail::bellman_residual(after, pick_policy(after), res.p_e_implied, dyn, g);
        row.policy_delta = detail::greedy_delta(before, after);
        row.wallclock_ns = now_ns();
        res.metrics.push_back(row);
    };

    if (mode == TrainMode::expected) {
        for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
            if (online && iter > 0 && cfg.collect_every > 0 && iter % cfg.collect_every == 0) {
                const Policy explore = detail::mix_uniform(pi, cfg.explore_eps);
                auto fresh = collect(env, explore, cfg.collect_steps, cfg.episode_len, cfg.seed + iter);
                for (const auto& t : fresh.trajectories()) data.append(t);
                if (!p_e_override)
                    res.p_e_implied = success_posterior(successes, data.state_marginal()).posterior;
            }
            pi = pick_policy(cls);
            const Classifier next = expected_update(cls, pi, res.p_e_implied, dyn, g);
            double step = 0.0;
            for (std::size_t i = 0; i < cls.logits.size(); ++i)
                step = std::max(step, std::fabs(std::exp(next.logits[i]) - std::exp(cls.logits[i])));
            if (cfg.metric_every > 0 && iter % cfg.metric_every == 0) record(iter, cls, next);
            cls = next;
            if (step < cfg.convergence_tol) {
                res.converged = true;
                break;
            }
        }
        if (!res.converged) res.iteration_cap_hit = true;
        res.classifier = cls;
        res.policy = pick_policy(cls);
        return res;
    }

    // stochastic mode
    Policy behavior = data.empirical_behavior();
    for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
        if (online && iter > 0 && cfg.collect_every > 0 && iter % cfg.collect_every == 0) {
            const Policy explore = detail::mix_uniform(pi, cfg.explore_eps);
            auto fresh = collect(env, explore, cfg.collect_steps, cfg.episode_len, cfg.seed + iter);
            for (const auto& t : fresh.trajectories()) data.append(t);
            behavior = data.empirical_behavior();
        }
        pi = pick_policy(cls);

        std::vector<SuccessSample> sb;
        sb.reserve(cfg.success_batch);
        for (std::size_t i = 0; i < cfg.success_batch; ++i) {
            const std::size_t st = successes.examples[rng.index(successes.examples.size())];
            std::vector<double> row(env.num_actions);
            const Policy& src = (cfg.action_source_for_successes == ActionSource::current_policy) ? pi : behavior;
            for (std::size_t a = 0; a < env.num_actions; ++a) row[a] = src(st, a);
            sb.push_back({st, rng.categorical(row)});
        }

        std::vector<TransitionSample> tb;
        tb.reserve(cfg.transition_batch);
        for (std::size_t i = 0; i < cfg.transition_batch; ++i) {
            const auto ref = data.flat(rng.index(data.num_transitions()));
            const auto& traj = data.trajectories()[ref.traj];
            const std::size_t t = ref.t;
            const std::size_t remaining = traj.actions.size() - t;  // >= 1
            const std::size_t n = std::min<std::size_t>(cfg.n_step, remaining);
            tb.push_back({traj.states[t], traj.actions[t], traj.states[t + 1], traj.states[t + n], n});
        }

        const double eta = (cfg.lr_schedule == LrSchedule::constant)
                               ? cfg.learning_rate
                               : cfg.learning_rate /
                                     (1.0 + static_cast<double>(iter) / static_cast<double>(cfg.lr_decay_horizon));
        const Classifier next = stochastic_update(cls, target, pi, sb, tb, cfg, eta, successes.prior);
        for (std::size_t i = 0; i < target.logits.size(); ++i)
            target.logits[i] = (1.0 - cfg.polyak_tau) * target.logits[i] + cfg.polyak_tau * next.logits[i];
        if (cfg.metric_every > 0 && iter % cfg.metric_every == 0) record(iter, cls, next);
        cls = next;
    }
    res.classifier = cls;  // stochastic mode runs its full budget by design
    res.policy = pick_policy(cls);
    return res;
}

}  // namespace rce
}  // namespace rcelab
