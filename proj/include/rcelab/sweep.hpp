#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "rcelab/envs.hpp"
#include "rcelab/mdp.hpp"
#include "rcelab/metrics.hpp"
#include "rcelab/rce.hpp"

namespace rcelab {
namespace sweep {

enum class Axis { n_step, num_successes, action_source };

inline Axis axis_from_name(const std::string& name) {
    if (name == "n_step") return Axis::n_step;
    if (name == "num_successes") return Axis::num_successes;
    if (name == "action_source") return Axis::action_source;
    throw std::invalid_argument("unknown sweep axis: " + name);
}

struct SweepConfig {
    rce::TrainConfig train;
    std::size_t collect_steps = 20'000;
    std::size_t num_successes = 200;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
};

struct SweepRow {
    std::string axis_value;
    std::uint64_t seed;
    double objective;  // oracle-evaluated final objective
};

/// One training run: behavior data from a uniform policy, success examples
/// drawn against the empirical visitation, stochastic-mode training, final
/// greedy policy scored by the exact control objective.
inline double run_cell(const TabularMDP& env, const rce::TrainConfig& cfg, std::size_t collect_steps,
                       std::size_t num_successes, std::uint64_t seed) {
    const Policy uniform = Policy::uniform(env.num_states, env.num_actions);
    auto data = collect(env, uniform, collect_steps, cfg.episode_len, seed);
    const auto successes = sample_success_examples(env, data.state_marginal(), num_successes, seed + 0x51ull);

    rce::TrainConfig run_cfg = cfg;
    run_cfg.seed = seed;
    const auto result = rce::train(env, std::move(data), successes, run_cfg, rce::TrainMode::stochastic,
                                   /*online=*/false);
    const TaskSpec task{cfg.gamma, 1000};
    return control_objective(env, task, rce::extract_policy(result.classifier, rce::PolicyMode::greedy));
}

/// Ablation sweep along one axis; every cell is evaluated for every seed.
inline std::vector<SweepRow> run_sweep(const TabularMDP& env, const SweepConfig& cfg, Axis axis) {
    std::vector<SweepRow> rows;
    switch (axis) {
        case Axis::n_step:
            for (const std::size_t n : {std::size_t{1}, std::size_t{10}}) {
                rce::TrainConfig c = cfg.train;
                c.n_step = n;
                for (const auto seed : cfg.seeds)
                    rows.push_back({std::to_string(n), seed, run_cell(env, c, cfg.collect_steps, cfg.num_successes, seed)});
            }
            break;
        case Axis::num_successes:
            for (const std::size_t count : {std::size_t{1}, std::size_t{20}, std::size_t{100}, std::size_t{200}}) {
                for (const auto seed : cfg.seeds)
                    rows.push_back({std::to_string(count), seed, run_cell(env, cfg.train, cfg.collect_steps, count, seed)});
            }
            break;
        case Axis::action_source:
            for (const auto source : {rce::ActionSource::current_policy, rce::ActionSource::behavior_policy}) {
                rce::TrainConfig c = cfg.train;
                c.action_source_for_successes = source;
                const std::string label = source == rce::ActionSource::current_policy ? "current_policy" : "behavior_policy";
                for (const auto seed : cfg.seeds)
                    rows.push_back({label, seed, run_cell(env, c, cfg.collect_steps, cfg.num_successes, seed)});
            }
            break;
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << kCsvSchemaLine << "\n";
    os << "axis_value,seed,objective\n";
    for (const auto& r : rows) os << r.axis_value << ',' << r.seed << ',' << fmt_double(r.objective) << "\n";
}

}  // namespace sweep
}  // namespace rcelab
