#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rcelab/linalg.hpp"

namespace rcelab {

/// Raised when a value fails one of the documented type invariants.
/// The message names the violated invariant; the CLI maps it to exit code 3.
class InvariantViolation : public std::runtime_error {
  public:
    explicit InvariantViolation(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kStochasticityTol = 1e-12;  // row sums of probability tables
inline constexpr double kSolverTol = 1e-9;          // residuals of exact solves

/// Transition structure of a controlled Markov process, with no success
/// information attached. Learning code receives this view, never the full
/// TabularMDP, so ground-truth success probabilities stay on the oracle side.
struct DynamicsView {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    const std::vector<double>* transition = nullptr;  // flat [s][a][s']

    double p(std::size_t s, std::size_t a, std::size_t s2) const {
        return (*transition)[(s * num_actions + a) * num_states + s2];
    }
};

/// Controlled Markov process over finite states and actions.
/// `success_prob` is the ground-truth per-state probability that the task is
/// solved there; only oracle and environment-generation code may read it.
struct TabularMDP {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> transition;    // flat [s][a][s']
    std::vector<double> initial_dist;  // [s]
    std::vector<double> success_prob;  // [s], oracle-only

    double p(std::size_t s, std::size_t a, std::size_t s2) const {
        return transition[(s * num_actions + a) * num_states + s2];
    }
    double& p(std::size_t s, std::size_t a, std::size_t s2) {
        return transition[(s * num_actions + a) * num_states + s2];
    }

    DynamicsView dynamics() const { return {num_states, num_actions, &transition}; }

    void validate() const {
        if (num_states == 0) throw InvariantViolation("TabularMDP: num_states must be positive");
        if (num_actions == 0) throw InvariantViolation("TabularMDP: num_actions must be positive");
        if (transition.size() != num_states * num_actions * num_states)
            throw InvariantViolation("TabularMDP: transition tensor has wrong shape");
        if (initial_dist.size() != num_states)
            throw InvariantViolation("TabularMDP: initial_dist has wrong length");
        if (success_prob.size() != num_states)
            throw InvariantViolation("TabularMDP: success_prob has wrong length");
        for (std::size_t s = 0; s < num_states; ++s) {
            for (std::size_t a = 0; a < num_actions; ++a) {
                double row = 0.0;
                for (std::size_t s2 = 0; s2 < num_states; ++s2) {
                    const double v = p(s, a, s2);
                    if (v < 0.0) throw InvariantViolation("TabularMDP: transition entries must be >= 0");
                    row += v;
                }
                if (std::fabs(row - 1.0) > kStochasticityTol)
                    throw InvariantViolation("TabularMDP: transition row P[" + std::to_string(s) + "][" +
                                             std::to_string(a) + "][.] must sum to 1");
            }
        }
        double init = 0.0;
        for (double v : initial_dist) {
            if (v < 0.0) throw InvariantViolation("TabularMDP: initial_dist entries must be >= 0");
            init += v;
        }
        if (std::fabs(init - 1.0) > kStochasticityTol)
            throw InvariantViolation("TabularMDP: initial_dist must sum to 1");
        for (double v : success_prob)
            if (v < 0.0 || v > 1.0) throw InvariantViolation("TabularMDP: success_prob entries must lie in [0,1]");
    }
};

/// Discounting and the truncation horizon used by enumeration oracles.
struct TaskSpec {
    double gamma = 0.99;
    std::size_t horizon_truncation = 1000;

    void validate() const {
        if (!(gamma >= 0.0 && gamma < 1.0)) throw InvariantViolation("TaskSpec: gamma must lie in [0,1)");
        if (horizon_truncation == 0) throw InvariantViolation("TaskSpec: horizon_truncation must be positive");
    }
};

/// Row-stochastic state -> action table.
struct Policy {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> probs;  // flat [s][a]

    Policy() = default;
    Policy(std::size_t s, std::size_t a, double fill = 0.0) : num_states(s), num_actions(a), probs(s * a, fill) {}

    static Policy uniform(std::size_t s, std::size_t a) { return Policy(s, a, 1.0 / static_cast<double>(a)); }

    double operator()(std::size_t s, std::size_t a) const { return probs[s * num_actions + a]; }
    double& operator()(std::size_t s, std::size_t a) { return probs[s * num_actions + a]; }

    void validate() const {
        if (probs.size() != num_states * num_actions) throw InvariantViolation("Policy: probs has wrong shape");
        for (std::size_t s = 0; s < num_states; ++s) {
            double row = 0.0;
            for (std::size_t a = 0; a < num_actions; ++a) {
                if ((*this)(s, a) < 0.0) throw InvariantViolation("Policy: entries must be >= 0");
                row += (*this)(s, a);
            }
            if (std::fabs(row - 1.0) > kStochasticityTol)
                throw InvariantViolation("Policy: row " + std::to_string(s) + " must sum to 1");
        }
    }
};

/// Multiset of user-provided success states with its normalized distribution
/// and the success prior recorded at sampling time.
struct SuccessExampleSet {
    std::vector<std::size_t> examples;  // state ids, multiset
    std::vector<double> dist;           // [s], sums to 1
    double prior = 1.0;                 // p(e=1), in (0,1]

    /// Builds the set from an explicit multiset of states.
    static SuccessExampleSet from_examples(std::vector<std::size_t> ex, std::size_t num_states, double prior = 1.0) {
        SuccessExampleSet set;
        set.examples = std::move(ex);
        set.dist.assign(num_states, 0.0);
        for (std::size_t s : set.examples) {
            if (s >= num_states) throw InvariantViolation("SuccessExampleSet: example state out of range");
            set.dist[s] += 1.0;
        }
        if (!set.examples.empty())
            for (double& v : set.dist) v /= static_cast<double>(set.examples.size());
        set.prior = prior;
        set.validate();
        return set;
    }

    void validate() const {
        if (!(prior > 0.0 && prior <= 1.0)) throw InvariantViolation("SuccessExampleSet: prior must lie in (0,1]");
        if (examples.empty()) return;  // dist meaningless without examples
        double total = 0.0;
        for (double v : dist) {
            if (v < 0.0) throw InvariantViolation("SuccessExampleSet: dist entries must be >= 0");
            total += v;
        }
        if (std::fabs(total - 1.0) > kStochasticityTol)
            throw InvariantViolation("SuccessExampleSet: dist must sum to 1");
    }
};

/// Start specification for an occupancy query: the MDP's initial distribution,
/// or a fixed first (state, action) pair.
struct FromInitial {};
struct FromStateAction {
    std::size_t state;
    std::size_t action;
};
using OccupancyStart = std::variant<FromInitial, FromStateAction>;

namespace detail {

/// Policy-averaged transition matrix P_pi[s][s'] = sum_a pi(a|s) P[s][a][s'].
inline Matrix policy_transition(const DynamicsView& dyn, const Policy& pi) {
    Matrix m(dyn.num_states, dyn.num_states);
    for (std::size_t s = 0; s < dyn.num_states; ++s)
        for (std::size_t a = 0; a < dyn.num_actions; ++a) {
            const double pa = pi(s, a);
            if (pa == 0.0) continue;
            for (std::size_t s2 = 0; s2 < dyn.num_states; ++s2) m(s, s2) += pa * dyn.p(s, a, s2);
        }
    return m;
}

/// Solves v^T = c^T (I - gamma P_pi)^(-1), i.e. (I - gamma P_pi)^T v = c.
inline std::vector<double> solve_transposed(const Matrix& p_pi, double gamma, const std::vector<double>& c) {
    const std::size_t n = p_pi.rows;
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - gamma * p_pi(j, i);
    return lu_solve(std::move(a), c);
}

/// Solves (I - gamma P_pi) v = c.
inline std::vector<double> solve_forward(const Matrix& p_pi, double gamma, const std::vector<double>& c) {
    const std::size_t n = p_pi.rows;
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - gamma * p_pi(i, j);
    return lu_solve(std::move(a), c);
}

}  // namespace detail

/// Discounted state occupancy (1-gamma) sum_k gamma^k p(s_{t+k} = s | start),
/// computed by an exact linear solve. The result is a probability vector.
inline std::vector<double> discounted_occupancy(const DynamicsView& dyn, const std::vector<double>& initial_dist,
                                                const TaskSpec& task, const Policy& pi,
                                                const OccupancyStart& from = FromInitial{}) {
    task.validate();
    const Matrix p_pi = detail::policy_transition(dyn, pi);
    const double g = task.gamma;

    if (std::holds_alternative<FromInitial>(from)) {
        auto v = detail::solve_transposed(p_pi, g, initial_dist);
        for (double& x : v) x *= (1.0 - g);
        return v;
    }
    const auto [s0, a0] = std::get<FromStateAction>(from);
    // occupancy = (1-gamma) e_{s0} + gamma * P[s0][a0] . rho_pi(.|s')
    std::vector<double> c(dyn.num_states, 0.0);
    for (std::size_t s2 = 0; s2 < dyn.num_states; ++s2) c[s2] = dyn.p(s0, a0, s2);
    auto v = detail::solve_transposed(p_pi, g, c);
    std::vector<double> rho(dyn.num_states, 0.0);
    for (std::size_t s = 0; s < dyn.num_states; ++s) rho[s] = g * (1.0 - g) * v[s];
    rho[s0] += 1.0 - g;
    return rho;
}

inline std::vector<double> discounted_occupancy(const TabularMDP& mdp, const TaskSpec& task, const Policy& pi,
                                                const OccupancyStart& from = FromInitial{}) {
    return discounted_occupancy(mdp.dynamics(), mdp.initial_dist, task, pi, from);
}

/// Probability of solving the task at any discounted future step, per (s, a).
/// Exact fixed point of Q = (1-gamma) p_e + gamma P Pi Q.
inline Matrix future_success_prob(const TabularMDP& mdp, const TaskSpec& task, const Policy& pi) {
    task.validate();
    const auto dyn = mdp.dynamics();
    const Matrix p_pi = detail::policy_transition(dyn, pi);
    const double g = task.gamma;

    std::vector<double> r(mdp.num_states);
    for (std::size_t s = 0; s < mdp.num_states; ++s) r[s] = (1.0 - g) * mdp.success_prob[s];
    const auto v = detail::solve_forward(p_pi, g, r);  // V(s) = sum_a pi Q(s,a)

    Matrix q(mdp.num_states, mdp.num_actions);
    for (std::size_t s = 0; s < mdp.num_states; ++s)
        for (std::size_t a = 0; a < mdp.num_actions; ++a) {
            double next = 0.0;
            for (std::size_t s2 = 0; s2 < mdp.num_states; ++s2) next += dyn.p(s, a, s2) * v[s2];
            q(s, a) = r[s] + g * next;
        }
    return q;
}

/// The control objective: probability of future success from the initial
/// distribution, E_{p1, pi}[Q(s1, a1)].
inline double control_objective(const TabularMDP& mdp, const TaskSpec& task, const Policy& pi) {
    const Matrix q = future_success_prob(mdp, task, pi);
    double total = 0.0;
    for (std::size_t s = 0; s < mdp.num_states; ++s)
        for (std::size_t a = 0; a < mdp.num_actions; ++a) total += mdp.initial_dist[s] * pi(s, a) * q(s, a);
    return total;
}

/// Bayes inversion of a success-example distribution against the visitation
/// marginal it was sampled under: p(e=1|s) = dist(s)/marginal(s) * prior.
struct PosteriorResult {
    std::vector<double> posterior;
    bool clamped = false;  // some unclamped value exceeded 1 + 1e-9
};

inline PosteriorResult success_posterior(const SuccessExampleSet& success, const std::vector<double>& behavior_marginal) {
    PosteriorResult out;
    out.posterior.assign(success.dist.size(), 0.0);
    for (std::size_t s = 0; s < success.dist.size(); ++s) {
        if (success.dist[s] == 0.0) continue;
        if (behavior_marginal[s] <= 0.0)
            throw InvariantViolation("success_posterior: success mass on state " + std::to_string(s) +
                                     " which the behavior marginal never visits");
        double v = success.dist[s] / behavior_marginal[s] * success.prior;
        if (v > 1.0 + kSolverTol) out.clamped = true;
        out.posterior[s] = std::min(v, 1.0);
    }
    return out;
}

}  // namespace rcelab
