#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "rcelab/baselines.hpp"
#include "rcelab/envs.hpp"
#include "rcelab/mdp.hpp"
#include "rcelab/oracle.hpp"
#include "rcelab/rce.hpp"
#include "rcelab/robust.hpp"

namespace rcelab {
namespace verify {

struct SuiteOptions {
    std::vector<std::uint64_t> seeds;          // empty -> suite default
    std::vector<double> gammas = {0.5, 0.9, 0.99};
};

struct SuiteResult {
    std::string suite;
    std::size_t cases = 0;
    std::size_t failures = 0;
    double max_residual = 0.0;
    std::vector<std::string> failure_messages;  // capped

    void fail(const std::string& msg) {
        ++failures;
        if (failure_messages.size() < 8) failure_messages.push_back(msg);
    }
    void residual(double r) { max_residual = std::max(max_residual, r); }
    bool passed() const { return failures == 0; }
};

namespace detail {

inline std::vector<std::uint64_t> seeds_or(const SuiteOptions& opt, std::uint64_t count) {
    if (!opt.seeds.empty()) return opt.seeds;
    std::vector<std::uint64_t> s(count);
    std::iota(s.begin(), s.end(), 0);
    return s;
}

/// Runs one property case, converting exceptions into named failures.
template <typename Fn>
void run_case(SuiteResult& res, Fn&& fn) {
    ++res.cases;
    try {
        fn();
    } catch (const std::exception& e) {
        res.fail(e.what());
    }
}

struct RandomInstance {
    TabularMDP mdp;
    Policy pi;
    rce::Classifier cls;
};

/// Seeded random MDP (2..10 states, 1..4 actions unless capped), random
/// stochastic policy, random classifier with logits in [-2, 2].
inline RandomInstance random_instance(std::uint64_t seed, std::size_t max_states = 10, std::size_t max_actions = 4) {
    Rng rng(seed * 0x9E3779B97F4A7C15ull + 1);
    const std::size_t S = 2 + rng.index(max_states - 1);
    const std::size_t A = 1 + rng.index(max_actions);
    RandomInstance inst;
    inst.mdp = envs::make_random_dirichlet(S, A, seed);
    inst.pi = Policy(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        double z = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            inst.pi(s, a) = -std::log(1.0 - rng.uniform());
            z += inst.pi(s, a);
        }
        for (std::size_t a = 0; a < A; ++a) inst.pi(s, a) /= z;
    }
    inst.cls = rce::Classifier(S, A);
    for (double& t : inst.cls.logits) t = 4.0 * rng.uniform() - 2.0;
    return inst;
}

inline void check(SuiteResult& res, bool ok, const std::string& msg) {
    if (!ok) res.fail(msg);
}

}  // namespace detail

// ---- mdp_core ----------------------------------------------------------------

/// Occupancies are probability vectors; the control objective equals the
/// occupancy-weighted success probability; the exact Q satisfies its
/// recursion; gamma = 0 degenerates correctly.
inline SuiteResult suite_mdp_identities(const SuiteOptions& opt) {
    SuiteResult res;
    res.suite = "mdp_identities";
    for (const auto seed : detail::seeds_or(opt, 40)) {
        detail::run_case(res, [&] {
            const auto inst = detail::random_instance(seed);
            for (const double gamma : opt.gammas) {
                const TaskSpec task{gamma, 1000};
                const auto rho = discounted_occupancy(inst.mdp, task, inst.pi);
                double total = 0.0, lo = 0.0;
                for (double v : rho) {
                    total += v;
                    lo = std::min(lo, v);
                }
                res.residual(std::fabs(total - 1.0));
                detail::check(res, lo >= -1e-12, "occupancy has a negative entry");
                detail::check(res, std::fabs(total - 1.0) < 1e-9, "occupancy does not sum to 1");

                const auto q = future_success_prob(inst.mdp, task, inst.pi);
                // recursion residual
                const auto step = oracle::value_iteration_step(
                    inst.mdp.dynamics(), gamma,
                    [&] {
                        std::vector<double> r(inst.mdp.num_states);
                        for (std::size_t s = 0; s < r.size(); ++s) r[s] = (1.0 - gamma) * inst.mdp.success_prob[s];
                        return r;
                    }(),
                    inst.pi, q);
                double rec = 0.0, qlo = 0.0, qhi = 1.0;
                for (std::size_t i = 0; i < q.data.size(); ++i) {
                    rec = std::max(rec, std::fabs(step.data[i] - q.data[i]));
                    qlo = std::min(qlo, q.data[i]);
                    qhi = std::max(qhi, q.data[i]);
                }
                res.residual(rec);
                detail::check(res, rec < 1e-9, "future_success_prob violates its recursion");
                detail::check(res, qlo >= -1e-12 && qhi <= 1.0 + 1e-12, "future_success_prob leaves [0,1]");

                const double obj = control_objective(inst.mdp, task, inst.pi);
                const double via_occupancy = dot(rho, inst.mdp.success_prob);
                res.residual(std::fabs(obj - via_occupancy));
                detail::check(res, std::fabs(obj - via_occupancy) < 1e-9,
                              "control objective disagrees with occupancy-weighted success");

            }
            // gamma = 0: occupancy collapses onto the start distribution
            const TaskSpec degenerate{0.0, 10};
            const auto rho0 = discounted_occupancy(inst.mdp, degenerate, inst.pi);
            detail::check(res, sup_norm_diff(rho0, inst.mdp.initial_dist) < 1e-12,
                          "gamma=0 occupancy is not the initial distribution");
        });
    }
    return res;
}

/// Bayes-inversion round trip: sampling success examples from
/// marginal * p_e and inverting against that marginal recovers p_e.
inline SuiteResult suite_posterior_roundtrip(const SuiteOptions& opt) {
    SuiteResult res;
    res.suite = "posterior_roundtrip";
    const std::size_t n = 100'000;
    for (const auto seed : detail::seeds_or(opt, 5)) {
        detail::run_case(res, [&] {
            const auto inst = detail::random_instance(seed, 6, 3);
            const TaskSpec task{0.9, 1000};
            const auto marginal = discounted_occupancy(inst.mdp, task, inst.pi);
            const auto successes = sample_success_examples(inst.mdp, marginal, n, seed + 1);
            const auto post = success_posterior(successes, marginal);
            for (std::size_t s = 0; s < inst.mdp.num_states; ++s) {
                const double q = marginal[s] * inst.mdp.success_prob[s] / successes.prior;
                const double sd = successes.prior / marginal[s] * std::sqrt(q * (1.0 - q) / n);
                // the +3-count slack covers the Poisson regime where the
                // normal 3-sigma band is too narrow
                const double slack = 3.0 / static_cast<double>(n) * successes.prior / marginal[s];
                const double diff = std::fabs(post.posterior[s] - inst.mdp.success_prob[s]);
                res.residual(diff);
                detail::check(res, diff <= 3.0 * sd + slack + 1e-12,
                              "posterior round trip misses p_e beyond 3 sigma at state " + std::to_string(s));
            }
        });
    }
    return res;
}

// ---- oracle -------------------------------------------------------------------

/// The linear-solve Q matches brute-force truncated enumeration.
inline SuiteResult suite_oracle_enum(const SuiteOptions& opt) {
    SuiteResult res;
    res.suite = "oracle_enum";
    for (const auto seed : detail::seeds_or(opt, 30)) {
        detail::run_case(res, [&] {
            const auto inst = detail::random_instance(seed, 6, 4);
            for (const double gamma : opt.gammas) {
                const TaskSpec task{gamma, 1000};
                // gamma^(H+1) < 1e-10
                const std::size_t H =
                    gamma == 0.0 ? 1 : static_cast<std::size_t>(std::ceil(std::log(1e-10) / std::log(gamma)));
                const auto exact = future_success_prob(inst.mdp, task, inst.pi);
                const auto brute = oracle::enumerate_future_success(inst.mdp, task, inst.pi, H);
                double diff = 0.0;
                for (std::size_t i = 0; i < exact.data.size(); ++i)
                    diff = std::max(diff, std::fabs(exact.data[i] - brute.data[i]));
                res.residual(diff);
                detail::check(res, diff < 2e-10, "linear solve and enumeration disagree beyond 2e-10");
            }
        });
    }
    return res;
}

/// Ratio identity C/(1-C) = Q and the classifier Bellman identity.
inline SuiteResult suite_lemma1(const SuiteOptions& opt) {
    SuiteResult res;
    res.suite = "lemma1";
    for (const auto seed : detail::seeds_or(opt, 50)) {
        detail::run_case(res, [&] {
            const auto inst = detail::random_instance(seed);
            for (const double gamma : opt.gammas) {
                const TaskSpec task{gamma, 1000};
                const std::size_t S = inst.mdp.num_states, A = inst.mdp.num_actions;
                Matrix marginal(S, A, 1.0 / static_cast<double>(S * A));
                const auto bayes = oracle::bayes_optimal_classifier(inst.mdp, task, inst.pi, marginal);
                const auto q = future_success_prob(inst.mdp, task, inst.pi);

                double ratio_err = 0.0, bellman_err = 0.0;
                for (std::size_t s = 0; s < S; ++s)
                    for (std::size_t a = 0; a < A; ++a) {
                        if (!bayes.is_defined(s, a)) continue;
                        const double ratio = bayes.c(s, a) / (1.0 - bayes.c(s, a));
                        ratio_err = std::max(ratio_err, std::fabs(ratio - q(s, a)));
                        double boot = 0.0;
                        for (std::size_t s2 = 0; s2 < S; ++s2) {
                            double inner = 0.0;
                            for (std::size_t a2 = 0; a2 < A; ++a2) {
                                const double c2 = bayes.c(s2, a2);
                                inner += inst.pi(s2, a2) * c2 / (1.0 - c2);
                            }
                            boot += inst.mdp.p(s, a, s2) * inner;
                        }
                        const double rhs = (1.0 - gamma) * inst.mdp.success_prob[s] + gamma * boot;
                        bellman_err = std::max(bellman_err, std::fabs(ratio - rhs));
                    }
                res.residual(std::max(ratio_err, bellman_err));
                detail::check(res, ratio_err < 1e-9, "classifier odds do not equal the future success probability");
                detail::check(res, bellman_err < 1e-9, "classifier odds violate the Bellman identity");
            }
        });
    }
    return res;
}

/// One expected recursive-classification update equals one value-iteration
/// step on the odds, elementwise to 1e-12.
inline SuiteResult suite_lemma2(const SuiteOptions& opt) {
    SuiteResult res;
    res.suite = "lemma2";
    for (const auto seed : detail::seeds_or(opt, 100)) {
        detail::run_case(res, [&] {
            const auto inst = detail::random_instance(seed);
            for (const double gamma : opt.gammas) {
                const TaskSpec task{gamma, 1000};
                task.validate();
                std::vector<double> reward(inst.mdp.num_states);
                for (std::size_t s = 0; s < reward.size(); ++s)
                    reward[s] = (1.0 - gamma) * inst.mdp.success_prob[s];

                const auto updated =
                    rce::expected_update(inst.cls, inst.pi, inst.mdp.success_prob, inst.mdp.dynamics(), gamma);
                const auto vi_step = oracle::value_iteration_step(inst.mdp.dynamics(), gamma, reward, inst.pi,
                                                                  inst.cls.ratio_table());
                double err = 0.0;
                for (std::size_t i = 0; i < vi_step.data.size(); ++i)
                    err = std::max(err, std::fabs(std::exp(updated.logits[i]) - vi_step.data[i]));
                res.residual(err);
                detail::check(res, err < 1e-12, "expected update and value-iteration step differ beyond 1e-12");
            }
        });
    }
    return res;
}

/// Expected-mode training converges, and the converged odds are the exact
/// policy-conditioned future success probability.
inline SuiteResult suite_corollary3(const SuiteOptions& opt) {
    SuiteResult res;
    res.suite = "corollary3";
    for (const auto seed : detail::seeds_or(opt, 100)) {
        detail::run_case(res, [&] {
            const auto inst = detail::random_instance(seed);
            const auto data =
                collect(inst.mdp, Policy::uniform(inst.mdp.num_states, inst.mdp.num_actions), 400, 151, seed);
            const auto successes = SuccessExampleSet::from_examples({0}, inst.mdp.num_states, 1.0);
            for (const double gamma : opt.gammas) {
                const TaskSpec task{gamma, 1000};
                task.validate();

                rce::TrainConfig cfg;
                cfg.gamma = gamma;
                cfg.max_iterations = 200'000;
                cfg.convergence_tol = 1e-12;
                cfg.policy_update = rce::PolicyUpdate::frozen;
                cfg.metric_every = 0;
                const auto result = rce::train(inst.mdp, data, successes, cfg, rce::TrainMode::expected,
                                               /*online=*/false, inst.mdp.success_prob, inst.pi);
                detail::check(res, result.converged, "expected-mode training failed to converge");

                const auto q = future_success_prob(inst.mdp, task, inst.pi);
                const auto odds = result.classifier.ratio_table();
                double err = 0.0;
                for (std::size_t i = 0; i < q.data.size(); ++i)
                    err = std::max(err, std::fabs(odds.data[i] - q.data[i]));
                res.residual(err);
                detail::check(res, err < 1e-9, "converged odds miss the exact future success probability");

                // Bellman identity residual at the fixed point
                const auto next = rce::expected_update(result.classifier, inst.pi, inst.mdp.success_prob,
                                                       inst.mdp.dynamics(), gamma);
                double bell = 0.0;
                for (std::size_t i = 0; i < odds.data.size(); ++i)
                    bell = std::max(bell, std::fabs(std::exp(next.logits[i]) - odds.data[i]));
                res.residual(bell);
                detail::check(res, bell < 1e-9, "converged classifier violates the Bellman identity");
            }
        });
    }
    return res;
}

/// gamma = 0: the converged odds equal p_e broadcast over actions.
inline SuiteResult suite_gamma_zero(const SuiteOptions& opt) {
    SuiteResult res;
    res.suite = "gamma_zero";
    for (const auto seed : detail::seeds_or(opt, 20)) {
        detail::run_case(res, [&] {
            const auto inst = detail::random_instance(seed);
            const auto updated = rce::expected_update(inst.cls, inst.pi, inst.mdp.success_prob, inst.mdp.dynamics(), 0.0);
            double err = 0.0;
            for (std::size_t s = 0; s < inst.mdp.num_states; ++s)
                for (std::size_t a = 0; a < inst.mdp.num_actions; ++a)
                    err = std::max(err, std::fabs(std::exp(updated.logit(s, a)) - inst.mdp.success_prob[s]));
            res.residual(err);
            detail::check(res, err < 1e-12, "gamma=0 odds are not p_e broadcast over actions");
        });
    }
    return res;
}

/// Greedy improvement is monotone over repeated rounds.
inline SuiteResult suite_lemma4(const SuiteOptions& opt) {
    SuiteResult res;
    res.suite = "lemma4";
    const std::size_t rounds = 3;
    for (const auto seed : detail::seeds_or(opt, 100)) {
        detail::run_case(res, [&] {
            const auto inst = detail::random_instance(seed);
            const TaskSpec task{0.9, 1000};
            const std::size_t S = inst.mdp.num_states, A = inst.mdp.num_actions;
            Matrix marginal(S, A, 1.0 / static_cast<double>(S * A));
            Policy pi = inst.pi;
            for (std::size_t k = 0; k < rounds; ++k) {
                const auto bayes = oracle::bayes_optimal_classifier(inst.mdp, task, pi, marginal);
                const Policy greedy = oracle::greedy_policy(bayes.c);
                const auto rep = oracle::verify_policy_improvement(inst.mdp, task, pi, greedy);
                res.residual(std::max(0.0, rep.old_objective - rep.new_objective));
                detail::check(res, rep.improved, "greedy policy degraded the objective at round " + std::to_string(k));
                pi = greedy;
            }
        });
    }
    return res;
}

/// Expected gradient of the sampled objective vanishes at the Bayes-optimal
/// classifier, computed exactly by exhausting every batch element.
inline SuiteResult suite_stochastic_grad(const SuiteOptions& opt) {
    SuiteResult res;
    res.suite = "stochastic_grad";
    for (const auto seed : detail::seeds_or(opt, 20)) {
        detail::run_case(res, [&] {
            const auto inst = detail::random_instance(seed, 4, 2);
            const std::size_t S = inst.mdp.num_states, A = inst.mdp.num_actions;
            for (const double gamma : opt.gammas) {
                const TaskSpec task{gamma, 1000};

                // behavior policy and its exact visitation
                const Policy behavior = inst.pi;
                const auto mu = discounted_occupancy(inst.mdp, task, behavior);
                double prior = 0.0;
                std::vector<double> dist(S);
                for (std::size_t s = 0; s < S; ++s) {
                    dist[s] = mu[s] * inst.mdp.success_prob[s];
                    prior += dist[s];
                }
                for (double& v : dist) v /= prior;

                // Bayes-optimal classifier for an arbitrary target policy
                Rng prng(seed + 1000);
                Policy pi(S, A);
                for (std::size_t s = 0; s < S; ++s) {
                    double z = 0.0;
                    for (std::size_t a = 0; a < A; ++a) {
                        pi(s, a) = -std::log(1.0 - prng.uniform());
                        z += pi(s, a);
                    }
                    for (std::size_t a = 0; a < A; ++a) pi(s, a) /= z;
                }
                const auto q = future_success_prob(inst.mdp, task, pi);

                double grad_norm = 0.0;
                for (std::size_t s = 0; s < S; ++s)
                    for (std::size_t a = 0; a < A; ++a) {
                        const double c = q(s, a) / (q(s, a) + 1.0);
                        const double d_success = dist[s] * behavior(s, a);
                        double g = d_success * rce::success_logit_grad(c, gamma, prior);
                        const double d_trans = mu[s] * behavior(s, a);
                        for (std::size_t s2 = 0; s2 < S; ++s2) {
                            const double p = inst.mdp.p(s, a, s2);
                            if (p == 0.0) continue;
                            double w = 0.0;
                            for (std::size_t a2 = 0; a2 < A; ++a2) w += pi(s2, a2) * q(s2, a2);
                            const double y = rce::label_from_w(w, gamma);
                            g += d_trans * p * rce::transition_logit_grad(c, w, y, gamma);
                        }
                        grad_norm = std::max(grad_norm, std::fabs(g));
                    }
                res.residual(grad_norm);
                detail::check(res, grad_norm < 1e-8, "expected gradient at the Bayes-optimal classifier is nonzero");
            }
        });
    }
    return res;
}

/// Greedy extraction is invariant to strictly monotone transforms of C.
inline SuiteResult suite_greedy_invariance(const SuiteOptions& opt) {
    SuiteResult res;
    res.suite = "greedy_invariance";
    for (const auto seed : detail::seeds_or(opt, 30)) {
        detail::run_case(res, [&] {
            const auto inst = detail::random_instance(seed);
            const Policy from_logits = rce::extract_policy(inst.cls, rce::PolicyMode::greedy);
            const std::size_t S = inst.cls.num_states, A = inst.cls.num_actions;
            for (std::size_t s = 0; s < S; ++s) {
                std::size_t best_c = 0, best_ratio = 0;
                for (std::size_t a = 1; a < A; ++a) {
                    if (inst.cls.c(s, a) > inst.cls.c(s, best_c)) best_c = a;
                    if (rce::ratio(inst.cls, s, a) > rce::ratio(inst.cls, s, best_ratio)) best_ratio = a;
                }
                detail::check(res, from_logits(s, best_c) == 1.0 && from_logits(s, best_ratio) == 1.0,
                              "greedy policy differs across monotone transforms at state " + std::to_string(s));
            }
        });
    }
    return res;
}

// ---- robust --------------------------------------------------------------------

/// Hellinger identity, the closed-form two-state value, and agreement between
/// the analytic worst case and the numeric simplex minimizer.
inline SuiteResult suite_lemma5(const SuiteOptions& opt) {
    SuiteResult res;
    res.suite = "lemma5";
    // pinned closed-form instance
    detail::run_case(res, [&] {
        const std::vector<double> rho{0.9, 0.1}, p{0.5, 0.5};
        const double v = robust::robust_objective(rho, p, 1.0);
        res.residual(std::fabs(v - 0.8));
        detail::check(res, std::fabs(v - 0.8) < 1e-12, "two-state closed form is not 0.8");
    });
    for (const auto seed : detail::seeds_or(opt, 50)) {
        detail::run_case(res, [&] {
            Rng rng(seed + 77);
            const std::size_t n = 2 + rng.index(9);
            std::vector<double> rho(n), p(n);
            for (std::size_t s = 0; s < n; ++s) {
                rho[s] = -std::log(1.0 - rng.uniform());
                p[s] = -std::log(1.0 - rng.uniform());
            }
            rho = normalized(rho);
            p = normalized(p);

            const double bc = robust::bhattacharyya(rho, p);
            const double h2 = robust::hellinger_sq(rho, p);
            res.residual(std::fabs(bc - (1.0 - h2 / 2.0)));
            detail::check(res, std::fabs(bc - (1.0 - h2 / 2.0)) < 1e-12, "Hellinger identity violated");

            const auto analytic = robust::worst_case_pU(rho, p);
            const auto numeric = robust::numeric_inner_min(rho, p);
            const double l1 = l1_diff(analytic, numeric.pu_hat);
            res.residual(l1);
            detail::check(res, l1 < 1e-3, "numeric minimizer misses the analytic worst case in L1");

            const double closed = robust::robust_objective(rho, p, 1.0);
            detail::check(res, numeric.value >= closed - 1e-6, "numeric minimum undershoots the closed form");
            detail::check(res, numeric.value <= closed * (1.0 + 1e-3) + 1e-12,
                          "numeric minimum exceeds the closed form by more than 1e-3 relative");
        });
    }
    return res;
}

/// The closed form is a true minimum (random simplex probes), its stationarity
/// holds on the support, and everything is permutation invariant.
inline SuiteResult suite_robust_min(const SuiteOptions& opt) {
    SuiteResult res;
    res.suite = "robust_min";
    for (const auto seed : detail::seeds_or(opt, 20)) {
        detail::run_case(res, [&] {
            Rng rng(seed + 1234);
            const std::size_t n = 2 + rng.index(6);
            std::vector<double> rho(n), p(n);
            for (std::size_t s = 0; s < n; ++s) {
                rho[s] = -std::log(1.0 - rng.uniform());
                p[s] = -std::log(1.0 - rng.uniform());
            }
            rho = normalized(rho);
            p = normalized(p);
            const double closed = robust::robust_objective(rho, p, 1.0);

            for (std::size_t trial = 0; trial < 1000; ++trial) {
                std::vector<double> q(n);
                for (std::size_t s = 0; s < n; ++s) q[s] = -std::log(1.0 - rng.uniform());
                q = normalized(q);
                double val = 0.0;
                for (std::size_t s = 0; s < n; ++s) val += rho[s] * p[s] / q[s];
                detail::check(res, closed <= val + 1e-9, "closed form exceeds a probed simplex point");
            }

            // stationarity: rho p / pU^2 constant on the support
            const auto pu = robust::worst_case_pU(rho, p);
            double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
            for (std::size_t s = 0; s < n; ++s) {
                if (pu[s] == 0.0) continue;
                const double lam = rho[s] * p[s] / (pu[s] * pu[s]);
                lo = std::min(lo, lam);
                hi = std::max(hi, lam);
            }
            res.residual(hi - lo);
            detail::check(res, hi - lo < 1e-8, "worst-case visitation is not stationary on the support");

            // permutation invariance
            std::vector<std::size_t> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
            std::vector<double> rho2(n), p2(n);
            for (std::size_t s = 0; s < n; ++s) {
                rho2[perm[s]] = rho[s];
                p2[perm[s]] = p[s];
            }
            const double permuted = robust::robust_objective(rho2, p2, 1.0);
            res.residual(std::fabs(permuted - closed));
            detail::check(res, std::fabs(permuted - closed) < 1e-12, "robust objective is not permutation invariant");
        });
    }
    return res;
}

// ---- baselines ------------------------------------------------------------------

namespace detail {

/// Enumerates all deterministic policies of a small MDP and returns the best
/// control objective.
inline double best_deterministic_objective(const TabularMDP& mdp, const TaskSpec& task) {
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    std::size_t total = 1;
    for (std::size_t s = 0; s < S; ++s) total *= A;
    double best = 0.0;
    for (std::size_t code = 0; code < total; ++code) {
        Policy pi(S, A);
        std::size_t rest = code;
        for (std::size_t s = 0; s < S; ++s) {
            pi(s, rest % A) = 1.0;
            rest /= A;
        }
        best = std::max(best, control_objective(mdp, task, pi));
    }
    return best;
}

/// The skewed-visitation counterexample: a start state with a frequently
/// visited decent option and a rarely visited better one.
struct Counterexample {
    TabularMDP mdp;
    TaskSpec task;
    std::vector<double> marginal;  // = user visitation, assumption satisfied
    SuccessExampleSet successes;
};

inline Counterexample skewed_counterexample() {
    Counterexample ce;
    ce.mdp.num_states = 3;
    ce.mdp.num_actions = 2;
    ce.mdp.transition.assign(3 * 2 * 3, 0.0);
    ce.mdp.p(0, 0, 1) = 1.0;  // frequent option
    ce.mdp.p(0, 1, 2) = 1.0;  // better option
    for (std::size_t a = 0; a < 2; ++a) {
        ce.mdp.p(1, a, 1) = 1.0;
        ce.mdp.p(2, a, 2) = 1.0;
    }
    ce.mdp.initial_dist = {1.0, 0.0, 0.0};
    ce.mdp.success_prob = {0.0, 0.9, 1.0};
    ce.mdp.validate();
    ce.task = TaskSpec{0.8, 1000};
    ce.marginal = {0.2, 0.7, 0.1};  // user hangs around the decent state
    double prior = 0.0;
    std::vector<double> dist(3);
    for (std::size_t s = 0; s < 3; ++s) {
        dist[s] = ce.marginal[s] * ce.mdp.success_prob[s];
        prior += dist[s];
    }
    for (double& v : dist) v /= prior;
    ce.successes.examples = {1, 2};
    ce.successes.dist = dist;
    ce.successes.prior = prior;
    ce.successes.validate();
    return ce;
}

}  // namespace detail

/// Reward-form separation: the density and uniform-negatives classifier-ratio
/// rewards pick a provably suboptimal policy on the skewed counterexample,
/// while the recovered posterior attains the enumeration optimum. On a
/// matched-visitation task with binary p_e, the +1-labeling baseline ties the
/// recursive method.
inline SuiteResult suite_baseline_separation(const SuiteOptions& opt) {
    (void)opt;
    SuiteResult res;
    res.suite = "baseline_separation";
    detail::run_case(res, [&] {
        const auto ce = detail::skewed_counterexample();
        const double best = detail::best_deterministic_objective(ce.mdp, ce.task);

        // user visitation is realizable as a behavior occupancy: check it
        Policy behavior(3, 2);
        behavior(0, 0) = 0.875;
        behavior(0, 1) = 0.125;
        behavior(1, 0) = behavior(2, 0) = 1.0;
        const auto occ = discounted_occupancy(ce.mdp, ce.task, behavior);
        detail::check(res, sup_norm_diff(occ, ce.marginal) < 1e-12, "counterexample marginal is not an occupancy");

        // recovered posterior reaches the optimum
        const auto post = success_posterior(ce.successes, ce.marginal);
        const auto q = oracle::value_iteration(
            ce.mdp.dynamics(), ce.task,
            [&] {
                std::vector<double> r(3);
                for (std::size_t s = 0; s < 3; ++s) r[s] = (1.0 - ce.task.gamma) * post.posterior[s];
                return r;
            }(),
            oracle::ValueIterationMode::control);
        const double rce_obj = control_objective(ce.mdp, ce.task, oracle::greedy_policy(q));
        res.residual(std::fabs(rce_obj - best));
        detail::check(res, std::fabs(rce_obj - best) < 1e-9, "posterior-based control misses the enumeration optimum");

        // density and uniform-negatives ratio rewards are strictly worse
        const std::vector<double> uniform_q(3, 1.0 / 3.0);
        const auto density = baselines::solve_baseline(ce.mdp.dynamics(), ce.task,
                                                       baselines::density_reward(ce.successes));
        const auto vice = baselines::solve_baseline(
            ce.mdp.dynamics(), ce.task, baselines::vice_ratio_reward(ce.successes, uniform_q));
        const double density_obj = control_objective(ce.mdp, ce.task, density.policy);
        const double vice_obj = control_objective(ce.mdp, ce.task, vice.policy);
        detail::check(res, density_obj < best - 1e-6, "density reward is not strictly suboptimal");
        detail::check(res, vice_obj < best - 1e-6, "classifier-ratio reward is not strictly suboptimal");
    });

    detail::run_case(res, [&] {
        // matched setting: binary p_e, examples drawn from the optimal
        // policy's visitation; the +1 labeling recovers the same optimum
        const auto mdp = envs::make_chain(3);
        const TaskSpec task{0.5, 1000};
        const auto successes = SuccessExampleSet::from_examples({2, 2, 2}, 3, 1.0);
        const auto sqil = baselines::solve_baseline(mdp.dynamics(), task, baselines::sqil_reward(successes, 3));
        const double sqil_obj = control_objective(mdp, task, sqil.policy);
        const double best = detail::best_deterministic_objective(mdp, task);
        res.residual(std::fabs(sqil_obj - best));
        detail::check(res, std::fabs(sqil_obj - best) < 1e-12, "+1 labeling misses the optimum on the matched task");
    });
    return res;
}

// ---- envs_data ---------------------------------------------------------------

/// Empirical marginals approach the exact per-episode state distribution as
/// the step budget doubles.
inline SuiteResult suite_dataset_convergence(const SuiteOptions& opt) {
    SuiteResult res;
    res.suite = "dataset_convergence";
    for (const auto seed : detail::seeds_or(opt, 5)) {
        detail::run_case(res, [&] {
            const auto inst = detail::random_instance(seed, 5, 3);
            const std::size_t episode_len = 40;
            // exact time-averaged state distribution over one episode
            const auto dyn = inst.mdp.dynamics();
            const Matrix p_pi = rcelab::detail::policy_transition(dyn, inst.pi);
            std::vector<double> mu = inst.mdp.initial_dist, avg(inst.mdp.num_states, 0.0);
            for (std::size_t t = 0; t < episode_len; ++t) {
                for (std::size_t s = 0; s < avg.size(); ++s) avg[s] += mu[s] / static_cast<double>(episode_len);
                std::vector<double> next(mu.size(), 0.0);
                for (std::size_t i = 0; i < mu.size(); ++i)
                    for (std::size_t j = 0; j < mu.size(); ++j) next[j] += mu[i] * p_pi(i, j);
                mu = std::move(next);
            }
            // mean over repetitions tames the sampling noise of a single run
            std::vector<double> errs;
            for (const std::size_t steps : {2'000, 20'000, 200'000}) {
                double mean = 0.0;
                for (std::uint64_t rep = 0; rep < 3; ++rep) {
                    const auto data = collect(inst.mdp, inst.pi, steps, episode_len, seed + steps + rep);
                    mean += l1_diff(data.state_marginal(), avg) / 3.0;
                }
                errs.push_back(mean);
            }
            detail::check(res, errs[1] < errs[0] && errs[2] < errs[1],
                          "mean marginal L1 error did not shrink with 10x more steps");
            res.residual(errs[2]);
            detail::check(res, errs[2] < 0.01, "empirical marginal off by more than 0.01 L1 at 2e5 steps");
        });
    }
    return res;
}

// ---- registry -------------------------------------------------------------------

using SuiteFn = std::function<SuiteResult(const SuiteOptions&)>;

inline const std::vector<std::pair<std::string, SuiteFn>>& suite_registry() {
    static const std::vector<std::pair<std::string, SuiteFn>> suites = {
        {"mdp_identities", suite_mdp_identities},
        {"posterior_roundtrip", suite_posterior_roundtrip},
        {"oracle_enum", suite_oracle_enum},
        {"lemma1", suite_lemma1},
        {"lemma2", suite_lemma2},
        {"corollary3", suite_corollary3},
        {"gamma_zero", suite_gamma_zero},
        {"lemma4", suite_lemma4},
        {"stochastic_grad", suite_stochastic_grad},
        {"greedy_invariance", suite_greedy_invariance},
        {"lemma5", suite_lemma5},
        {"robust_min", suite_robust_min},
        {"baseline_separation", suite_baseline_separation},
        {"dataset_convergence", suite_dataset_convergence},
    };
    return suites;
}

inline SuiteResult run_suite(const std::string& name, const SuiteOptions& opt = {}) {
    for (const auto& [n, fn] : suite_registry())
        if (n == name) return fn(opt);
    throw std::invalid_argument("unknown verification suite: " + name);
}

/// Runs every suite with its fixed default seeding.
inline std::vector<SuiteResult> verify_all(const SuiteOptions& opt = {}) {
    std::vector<SuiteResult> results;
    for (const auto& [name, fn] : suite_registry()) results.push_back(fn(opt));
    return results;
}

}  // namespace verify
}  // namespace rcelab
