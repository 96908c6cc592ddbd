#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "rcelab/mdp.hpp"

namespace rcelab {
namespace oracle {

/// Q-values per (state, action); for the implicit reward (1-gamma) p_e the
/// fixed point lies in [0, 1].
using QTable = Matrix;

/// Ties go to the lowest action index, everywhere. Keeping this in one place
/// makes greedy policies reproducible across the whole library.
inline std::size_t argmax_action(const Matrix& q, std::size_t s) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < q.cols; ++a)
        if (q(s, a) > q(s, best)) best = a;
    return best;
}

inline Policy greedy_policy(const Matrix& q) {
    Policy pi(q.rows, q.cols);
    for (std::size_t s = 0; s < q.rows; ++s) pi(s, argmax_action(q, s)) = 1.0;
    return pi;
}

enum class ValueIterationMode { policy_eval, control };

inline constexpr std::size_t kValueIterationCap = 1'000'000;

/// Iterates Q <- r + gamma * (P Pi Q) (policy_eval) or r + gamma * (P max_a Q)
/// (control) to a sup-norm residual below `tol`. The reward is per state.
inline QTable value_iteration(const DynamicsView& dyn, const TaskSpec& task, const std::vector<double>& reward,
                              ValueIterationMode mode, const Policy* pi = nullptr, double tol = 1e-12) {
    task.validate();
    if (mode == ValueIterationMode::policy_eval && pi == nullptr)
        throw std::invalid_argument("value_iteration: policy_eval mode needs a policy");
    for (double r : reward)
        if (!std::isfinite(r)) throw InvariantViolation("value_iteration: reward must be finite");

    const std::size_t S = dyn.num_states, A = dyn.num_actions;
    const double g = task.gamma;
    Matrix q(S, A);
    std::vector<double> next_value(S, 0.0);  // Pi Q or max_a Q at the next state

    for (std::size_t iter = 0; iter < kValueIterationCap; ++iter) {
        for (std::size_t s = 0; s < S; ++s) {
            if (mode == ValueIterationMode::control) {
                double m = q(s, 0);
                for (std::size_t a = 1; a < A; ++a) m = std::max(m, q(s, a));
                next_value[s] = m;
            } else {
                double v = 0.0;
                for (std::size_t a = 0; a < A; ++a) v += (*pi)(s, a) * q(s, a);
                next_value[s] = v;
            }
        }
        double residual = 0.0;
        Matrix q_new(S, A);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                double next = 0.0;
                for (std::size_t s2 = 0; s2 < S; ++s2) next += dyn.p(s, a, s2) * next_value[s2];
                q_new(s, a) = reward[s] + g * next;
                residual = std::max(residual, std::fabs(q_new(s, a) - q(s, a)));
            }
        q = std::move(q_new);
        if (residual < tol) return q;
    }
    throw std::runtime_error("value_iteration: iteration cap hit before reaching tolerance");
}

/// One synchronous assignment Q <- r + gamma * (P Pi Q), exposed so the
/// recursive-classification equivalence can be checked step by step.
inline QTable value_iteration_step(const DynamicsView& dyn, double gamma, const std::vector<double>& reward,
                                   const Policy& pi, const Matrix& q) {
    const std::size_t S = dyn.num_states, A = dyn.num_actions;
    Matrix out(S, A);
    std::vector<double> v(S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) v[s] += pi(s, a) * q(s, a);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            double next = 0.0;
            for (std::size_t s2 = 0; s2 < S; ++s2) next += dyn.p(s, a, s2) * v[s2];
            out(s, a) = reward[s] + gamma * next;
        }
    return out;
}

/// Bayes-optimal future-success classifier for a policy and data marginal.
/// Entries with zero data mass are undefined and flagged, never interpolated.
struct BayesClassifier {
    Matrix c;                        // C(s,a), valid where defined
    std::vector<bool> defined;       // flat [s][a]
    double future_success_mass = 0.0;  // p(e_{t+}=1) under the data marginal

    bool is_defined(std::size_t s, std::size_t a) const { return defined[s * c.cols + a]; }
};

inline BayesClassifier bayes_optimal_classifier(const TabularMDP& mdp, const TaskSpec& task, const Policy& pi,
                                                const Matrix& data_marginal) {
    const Matrix q = future_success_prob(mdp, task, pi);
    const std::size_t S = mdp.num_states, A = mdp.num_actions;

    // class weighting over the supplied data marginal
    double p_future = 0.0;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) p_future += data_marginal(s, a) * q(s, a);

    BayesClassifier out;
    out.c = Matrix(S, A);
    out.defined.assign(S * A, false);
    out.future_success_mass = p_future;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const double mass = data_marginal(s, a);
            if (mass <= 0.0) continue;
            // p(s,a | e+ = 1) p(e+ = 1) = Q(s,a) p(s,a); the marginal cancels
            // so C = Q / (Q + 1) wherever data exists.
            const double positives = q(s, a) * mass;
            out.c(s, a) = positives / (positives + mass);
            out.defined[s * A + a] = true;
        }
    return out;
}

/// Policy-improvement check: is the greedy policy at least as good?
struct ImprovementReport {
    double old_objective = 0.0;
    double new_objective = 0.0;
    bool improved = false;
};

inline ImprovementReport verify_policy_improvement(const TabularMDP& mdp, const TaskSpec& task, const Policy& pi,
                                                   const Policy& pi_greedy, double tol = 1e-10) {
    ImprovementReport rep;
    rep.old_objective = control_objective(mdp, task, pi);
    rep.new_objective = control_objective(mdp, task, pi_greedy);
    rep.improved = rep.new_objective >= rep.old_objective - tol;
    return rep;
}

/// Brute-force truncated-horizon evaluation of the future-success probability,
/// by explicit distribution rollout. Independent of the linear solver; the
/// truncation error is bounded by gamma^(H+1).
inline QTable enumerate_future_success(const TabularMDP& mdp, const TaskSpec& task, const Policy& pi, std::size_t horizon) {
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    const double g = task.gamma;
    const auto dyn = mdp.dynamics();
    const Matrix p_pi = detail::policy_transition(dyn, pi);

    Matrix q(S, A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            // mu_k = state distribution k steps after taking (s, a)
            std::vector<double> mu(S, 0.0);
            mu[s] = 1.0;
            double acc = mdp.success_prob[s];  // k = 0 term
            double discount = 1.0;
            for (std::size_t k = 1; k <= horizon; ++k) {
                std::vector<double> next(S, 0.0);
                if (k == 1) {
                    for (std::size_t s2 = 0; s2 < S; ++s2) next[s2] = dyn.p(s, a, s2);
                } else {
                    for (std::size_t i = 0; i < S; ++i) {
                        if (mu[i] == 0.0) continue;
                        for (std::size_t j = 0; j < S; ++j) next[j] += mu[i] * p_pi(i, j);
                    }
                }
                mu = std::move(next);
                discount *= g;
                double pe = 0.0;
                for (std::size_t s2 = 0; s2 < S; ++s2) pe += mu[s2] * mdp.success_prob[s2];
                acc += discount * pe;
            }
            q(s, a) = (1.0 - g) * acc;
        }
    return q;
}

}  // namespace oracle
}  // namespace rcelab
