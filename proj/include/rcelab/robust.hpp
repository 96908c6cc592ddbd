#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rcelab/envs.hpp"
#include "rcelab/mdp.hpp"
#include "rcelab/rce.hpp"

namespace rcelab {
namespace robust {

/// Squared Hellinger distance sum_s (sqrt(p) - sqrt(q))^2, in [0, 2].
inline double hellinger_sq(const std::vector<double>& p, const std::vector<double>& q) {
    double h = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s) {
        const double d = std::sqrt(p[s]) - std::sqrt(q[s]);
        h += d * d;
    }
    return h;
}

/// Bhattacharyya coefficient sum_s sqrt(p q) = 1 - H^2/2.
inline double bhattacharyya(const std::vector<double>& p, const std::vector<double>& q) {
    double b = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s) b += std::sqrt(p[s] * q[s]);
    return b;
}

/// The adversary's minimizing visitation: p_U(s) proportional to
/// sqrt(rho(s) p(s)). Support is the intersection of the two supports.
inline std::vector<double> worst_case_pU(const std::vector<double>& rho, const std::vector<double>& success_dist) {
    std::vector<double> pu(rho.size());
    double z = 0.0;
    for (std::size_t s = 0; s < rho.size(); ++s) {
        pu[s] = std::sqrt(rho[s] * success_dist[s]);
        z += pu[s];
    }
    if (z <= 0.0) throw InvariantViolation("worst_case_pU: occupancy and success distribution have disjoint supports");
    for (double& v : pu) v /= z;
    return pu;
}

/// Value of the max-min game at the worst-case visitation:
/// (sum_s sqrt(rho p))^2 * prior.
inline double robust_objective(const std::vector<double>& rho, const std::vector<double>& success_dist, double prior) {
    const double b = bhattacharyya(rho, success_dist);
    return b * b * prior;
}

struct InnerMinConfig {
    enum class Mode { exponentiated_gradient, grid };
    Mode mode = Mode::exponentiated_gradient;
    std::size_t iterations = 200'000;
    double step = 0.05;        // base EG step, decays harmonically
    double grid_resolution = 1e-3;  // grid mode, <= 3 states
};

struct InnerMinResult {
    std::vector<double> pu_hat;
    double value = 0.0;  // sum_s rho(s) p(s) / pu_hat(s) over the support
};

namespace detail {

inline double inner_value(const std::vector<double>& c, const std::vector<double>& q) {
    double v = 0.0;
    for (std::size_t s = 0; s < c.size(); ++s)
        if (c[s] > 0.0) v += c[s] / q[s];
    return v;
}

}  // namespace detail

/// Independent numeric oracle for the inner minimization
/// min_{q in simplex} sum_s rho(s) p(s) / q(s). Exponentiated-gradient descent
/// by default; dense grid search for <= 3 states.
inline InnerMinResult numeric_inner_min(const std::vector<double>& rho, const std::vector<double>& success_dist,
                                        const InnerMinConfig& cfg = {}) {
    const std::size_t n = rho.size();
    if (cfg.mode == InnerMinConfig::Mode::grid && n > 3)
        throw std::invalid_argument("numeric_inner_min: grid mode supports at most 3 states");
    if (n > 50) throw std::invalid_argument("numeric_inner_min: state count above oracle budget (50)");

    std::vector<double> c(n);
    double cz = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        c[s] = rho[s] * success_dist[s];
        cz += c[s];
    }
    if (cz <= 0.0) throw InvariantViolation("numeric_inner_min: objective has no support");

    if (cfg.mode == InnerMinConfig::Mode::grid) {
        const std::size_t k = static_cast<std::size_t>(std::llround(1.0 / cfg.grid_resolution));
        InnerMinResult best;
        best.value = std::numeric_limits<double>::infinity();
        std::vector<double> q(n, 0.0);
        const auto consider = [&] {
            const double v = detail::inner_value(c, q);
            if (v < best.value) {
                best.value = v;
                best.pu_hat = q;
            }
        };
        if (n == 1) {
            q[0] = 1.0;
            consider();
        } else if (n == 2) {
            for (std::size_t i = 1; i < k; ++i) {
                q[0] = static_cast<double>(i) / static_cast<double>(k);
                q[1] = 1.0 - q[0];
                consider();
            }
        } else {
            for (std::size_t i = 1; i < k; ++i)
                for (std::size_t j = 1; i + j < k; ++j) {
                    q[0] = static_cast<double>(i) / static_cast<double>(k);
                    q[1] = static_cast<double>(j) / static_cast<double>(k);
                    q[2] = 1.0 - q[0] - q[1];
                    consider();
                }
        }
        return best;
    }

    // exponentiated gradient on the support of c; off-support mass is wasted
    // for the minimizer, so it is dropped up front
    std::vector<double> q(n, 0.0);
    std::size_t support = 0;
    for (std::size_t s = 0; s < n; ++s)
        if (c[s] > 0.0) ++support;
    for (std::size_t s = 0; s < n; ++s) q[s] = (c[s] > 0.0) ? 1.0 / static_cast<double>(support) : 0.0;

    std::vector<double> grad(n, 0.0);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const double step = cfg.step / (1.0 + static_cast<double>(it) / 2000.0);
        // multiplicative update along the (sign-flipped, normalized) gradient
        // of sum c/q; the fixed point has c_s / q_s^2 constant on the support
        double scale = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            if (c[s] <= 0.0) continue;
            grad[s] = c[s] / (q[s] * q[s]);
            scale = std::max(scale, grad[s]);
        }
        double z = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            if (c[s] <= 0.0) continue;
            q[s] *= std::exp(step * (grad[s] / scale - 1.0));
            z += q[s];
        }
        for (std::size_t s = 0; s < n; ++s) q[s] /= z;
    }
    return {q, detail::inner_value(c, q)};
}

/// Summary of the robust objective at a given occupancy / success pair.
struct RobustReport {
    std::vector<double> worst_pU;
    double robust_value = 0.0;
    double hellinger_sq = 0.0;
    double bhattacharyya = 0.0;
    bool support_mismatch = false;  // success mass where the occupancy is zero
};

inline RobustReport make_robust_report(const std::vector<double>& rho, const std::vector<double>& success_dist,
                                       double prior) {
    RobustReport rep;
    rep.worst_pU = worst_case_pU(rho, success_dist);
    rep.bhattacharyya = bhattacharyya(rho, success_dist);
    rep.hellinger_sq = hellinger_sq(rho, success_dist);
    rep.robust_value = robust_objective(rho, success_dist, prior);
    for (std::size_t s = 0; s < rho.size(); ++s)
        if (success_dist[s] > 0.0 && rho[s] == 0.0) rep.support_mismatch = true;
    return rep;
}

struct IteratedConfig {
    rce::TrainConfig train;
    rce::TrainMode train_mode = rce::TrainMode::expected;
    std::size_t initial_random_steps = 30'000;
    std::size_t steps_per_outer = 15'000;
    double explore_eps = 0.2;  // uniform mixing of the collection policy
    bool accumulate = true;    // keep old transitions in the replay
    std::uint64_t seed = 0;
};

struct FixedPointReport {
    // |rho(s)/p(s) - median ratio| over the success support
    double max_ratio_deviation_final = 0.0;
    double max_ratio_deviation_mean = 0.0;
    double median_ratio_final = 0.0;
    bool reached = false;  // mean-occupancy deviation under the declared 0.05 tolerance
};

struct IteratedResult {
    std::vector<Policy> policies;                 // one per outer iteration
    std::vector<std::vector<double>> occupancies;  // exact, per outer iteration
    std::vector<double> mean_occupancy;
    FixedPointReport fixed_point;
};

namespace detail {

inline double ratio_deviation(const std::vector<double>& rho, const std::vector<double>& dist, double* median_out) {
    std::vector<double> ratios;
    for (std::size_t s = 0; s < dist.size(); ++s)
        if (dist[s] > 0.0) ratios.push_back(rho[s] / dist[s]);
    if (ratios.empty()) return 0.0;
    std::sort(ratios.begin(), ratios.end());
    const double median = ratios[ratios.size() / 2];
    if (median_out) *median_out = median;
    double dev = 0.0;
    for (double r : ratios) dev = std::max(dev, std::fabs(r - median));
    return dev;
}

}  // namespace detail

/// Alternates data collection under the current policy with a full
/// recursive-classification training pass, the loop whose fixed points
/// relate to the robust objective. The returned occupancies are exact
/// discounted occupancies of each outer iteration's greedy policy.
inline IteratedResult iterated_rce(const TabularMDP& env, const SuccessExampleSet& successes,
                                   const IteratedConfig& cfg, std::size_t outer_iters) {
    if (outer_iters == 0) throw std::invalid_argument("iterated_rce: need at least one outer iteration");
    const TaskSpec task{cfg.train.gamma, 1000};

    const Policy uniform = Policy::uniform(env.num_states, env.num_actions);
    TransitionDataset data =
        collect(env, uniform, cfg.initial_random_steps, cfg.train.episode_len, cfg.seed);

    IteratedResult out;
    out.mean_occupancy.assign(env.num_states, 0.0);
    for (std::size_t k = 0; k < outer_iters; ++k) {
        auto trained = rce::train(env, data, successes, cfg.train, cfg.train_mode, /*online=*/false);
        const Policy pi = extract_policy(trained.classifier, rce::PolicyMode::greedy);
        const auto rho = discounted_occupancy(env, task, pi, FromInitial{});
        out.policies.push_back(pi);
        out.occupancies.push_back(rho);
        for (std::size_t s = 0; s < env.num_states; ++s) out.mean_occupancy[s] += rho[s];

        if (k + 1 == outer_iters) break;
        const Policy explore = rce::detail::mix_uniform(pi, cfg.explore_eps);
        auto fresh = collect(env, explore, cfg.steps_per_outer, cfg.train.episode_len, cfg.seed + 1 + k);
        if (!cfg.accumulate) data = TransitionDataset(env.num_states, env.num_actions, cfg.seed + 1 + k);
        for (const auto& t : fresh.trajectories()) data.append(t);
    }
    for (double& v : out.mean_occupancy) v /= static_cast<double>(out.occupancies.size());

    out.fixed_point.max_ratio_deviation_final =
        detail::ratio_deviation(out.occupancies.back(), successes.dist, &out.fixed_point.median_ratio_final);
    out.fixed_point.max_ratio_deviation_mean = detail::ratio_deviation(out.mean_occupancy, successes.dist, nullptr);
    out.fixed_point.reached = out.fixed_point.max_ratio_deviation_mean < 0.05;
    return out;
}

}  // namespace robust
}  // namespace rcelab
