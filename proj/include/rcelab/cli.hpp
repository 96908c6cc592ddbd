#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rcelab/baselines.hpp"
#include "rcelab/config.hpp"
#include "rcelab/envs.hpp"
#include "rcelab/json_io.hpp"
#include "rcelab/mdp.hpp"
#include "rcelab/metrics.hpp"
#include "rcelab/oracle.hpp"
#include "rcelab/rce.hpp"
#include "rcelab/robust.hpp"
#include "rcelab/sweep.hpp"
#include "rcelab/verify.hpp"

namespace rcelab {
namespace cli {

namespace detail {

/// RCE_LAB_SEED beats any configured or flagged seed.
inline std::uint64_t effective_seed(std::uint64_t fallback) {
    if (const char* env = std::getenv("RCE_LAB_SEED")) return std::stoull(env);
    return fallback;
}

inline void require_file(const std::string& path, const std::string& who) {
    if (!std::filesystem::exists(path))
        throw InvariantViolation(who + ": referenced file does not exist: " + path);
}

inline Config load_config(const std::string& path) {
    if (path.empty()) return Config{};
    require_file(path, "config");
    return Config::parse(io::read_text_file(path));
}

inline rce::TrainConfig train_config_from(const Config& c) {
    rce::TrainConfig cfg;
    cfg.gamma = c.get_double("train.gamma", cfg.gamma);
    cfg.learning_rate = c.get_double("train.learning_rate", cfg.learning_rate);
    cfg.entropy_coeff = c.get_double("train.entropy_coeff", cfg.entropy_coeff);
    cfg.polyak_tau = c.get_double("train.polyak_tau", cfg.polyak_tau);
    cfg.n_step = static_cast<std::size_t>(c.get_int("train.n_step", static_cast<std::int64_t>(cfg.n_step)));
    cfg.success_batch =
        static_cast<std::size_t>(c.get_int("train.success_batch", static_cast<std::int64_t>(cfg.success_batch)));
    cfg.transition_batch = static_cast<std::size_t>(
        c.get_int("train.transition_batch", static_cast<std::int64_t>(cfg.transition_batch)));
    cfg.max_iterations =
        static_cast<std::size_t>(c.get_int("train.max_iterations", static_cast<std::int64_t>(cfg.max_iterations)));
    cfg.convergence_tol = c.get_double("train.convergence_tol", cfg.convergence_tol);
    const std::string source = c.get_string("train.action_source_for_successes", "current_policy");
    if (source == "current_policy")
        cfg.action_source_for_successes = rce::ActionSource::current_policy;
    else if (source == "behavior_policy")
        cfg.action_source_for_successes = rce::ActionSource::behavior_policy;
    else
        throw InvariantViolation("TrainConfig: unknown action source '" + source + "'");
    cfg.ratio_clip = c.get_double("train.ratio_clip", cfg.ratio_clip);
    cfg.use_success_prior = c.get_bool("train.use_success_prior", cfg.use_success_prior);
    const std::string sched = c.get_string("train.lr_schedule", "constant");
    if (sched == "constant")
        cfg.lr_schedule = rce::LrSchedule::constant;
    else if (sched == "robbins_monro")
        cfg.lr_schedule = rce::LrSchedule::robbins_monro;
    else
        throw InvariantViolation("TrainConfig: unknown lr schedule '" + sched + "'");
    cfg.lr_decay_horizon = static_cast<std::size_t>(
        c.get_int("train.lr_decay_horizon", static_cast<std::int64_t>(cfg.lr_decay_horizon)));
    const std::string pol = c.get_string("train.policy_update", "greedy");
    if (pol == "greedy")
        cfg.policy_update = rce::PolicyUpdate::greedy;
    else if (pol == "soft")
        cfg.policy_update = rce::PolicyUpdate::soft;
    else if (pol == "frozen")
        cfg.policy_update = rce::PolicyUpdate::frozen;
    else
        throw InvariantViolation("TrainConfig: unknown policy update '" + pol + "'");
    cfg.metric_every =
        static_cast<std::size_t>(c.get_int("train.metric_every", static_cast<std::int64_t>(cfg.metric_every)));
    cfg.collect_every =
        static_cast<std::size_t>(c.get_int("train.collect_every", static_cast<std::int64_t>(cfg.collect_every)));
    cfg.collect_steps =
        static_cast<std::size_t>(c.get_int("train.collect_steps", static_cast<std::int64_t>(cfg.collect_steps)));
    cfg.episode_len =
        static_cast<std::size_t>(c.get_int("train.episode_len", static_cast<std::int64_t>(cfg.episode_len)));
    cfg.explore_eps = c.get_double("train.explore_eps", cfg.explore_eps);
    cfg.seed = effective_seed(static_cast<std::uint64_t>(c.get_int("train.seed", 0)));
    cfg.validate();
    return cfg;
}

inline TabularMDP load_mdp(const std::string& path) {
    if (path.empty()) throw InvariantViolation("missing required input --env");
    require_file(path, "env");
    return io::mdp_from_json(io::read_json_file(path));
}

inline SuccessExampleSet load_successes(const std::string& path, const std::string& who) {
    if (path.empty()) throw InvariantViolation(who + ": missing required input --successes");
    require_file(path, who);
    return io::successes_from_json(io::read_json_file(path));
}

inline Policy load_policy(const std::string& path, const std::string& who) {
    if (path.empty()) throw InvariantViolation(who + ": missing required input --policy");
    require_file(path, who);
    return io::policy_from_json(io::read_json_file(path));
}

inline void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

inline std::vector<rce::MetricsRow> read_metrics_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<rce::MetricsRow> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("iteration", 0) == 0) continue;
        rce::MetricsRow r;
        std::istringstream row(line);
        std::string tok;
        std::getline(row, tok, ',');
        r.iteration = std::stoull(tok);
        std::getline(row, tok, ',');
        r.objective = std::stod(tok);
        std::getline(row, tok, ',');
        r.bellman_residual = std::stod(tok);
        std::getline(row, tok, ',');
        r.policy_delta = std::stod(tok);
        std::getline(row, tok, ',');
        r.wallclock_ns = std::stoull(tok);
        rows.push_back(r);
    }
    return rows;
}

// ---- subcommand options ------------------------------------------------------

struct GenEnvOpts {
    std::string kind = "chain";
    std::size_t length = 2;
    std::size_t rows = 11, cols = 11;
    std::size_t start_row = 3, start_col = 0;
    std::vector<std::string> success_cells;
    double noise = 0.0;
    std::size_t states = 5, actions = 2;
    std::uint64_t seed = 0;
    std::string out;
    std::string spec_out;
};

inline void run_gen_env(const GenEnvOpts& o) {
    EnvSpec spec;
    spec.seed = effective_seed(o.seed);
    if (o.kind == "chain") {
        spec.kind = EnvSpec::Kind::chain;
        spec.length = o.length;
    } else if (o.kind == "grid2d") {
        spec.kind = EnvSpec::Kind::grid2d;
        spec.rows = o.rows;
        spec.cols = o.cols;
        spec.start_row = o.start_row;
        spec.start_col = o.start_col;
        spec.noise = o.noise;
        for (const auto& cell : o.success_cells) {
            const auto comma = cell.find(',');
            if (comma == std::string::npos)
                throw InvariantViolation("gen-env: --success-cell expects 'row,col', got '" + cell + "'");
            spec.success_cells.emplace_back(std::stoull(cell.substr(0, comma)), std::stoull(cell.substr(comma + 1)));
        }
        if (spec.success_cells.empty()) spec.success_cells = {{0, spec.cols - 1}, {spec.rows - 1, spec.cols - 1}};
    } else if (o.kind == "random" || o.kind == "random_dirichlet") {
        spec.kind = EnvSpec::Kind::random_dirichlet;
        spec.num_states = o.states;
        spec.num_actions = o.actions;
    } else {
        throw InvariantViolation("gen-env: unknown kind '" + o.kind + "'");
    }
    const TabularMDP mdp = make_env(spec);
    if (o.out.empty()) throw InvariantViolation("gen-env: missing required output -o");
    io::write_json_file(o.out, io::to_json(mdp));
    if (!o.spec_out.empty()) io::write_json_file(o.spec_out, io::to_json(spec));
    std::cout << "wrote " << o.out << " (" << mdp.num_states << " states, " << mdp.num_actions << " actions)\n";
}

struct CollectOpts {
    std::string env;
    std::string policy;
    std::string spec;
    std::size_t steps = 10'000;
    std::size_t episode_len = 151;
    std::uint64_t seed = 0;
    std::string out;
    std::string successes_out;
    std::size_t num_successes = 200;
    std::uint64_t success_seed = 0;
    bool success_seed_set = false;
    std::string user_marginal_file;
};

inline void run_collect(const CollectOpts& o) {
    const TabularMDP mdp = load_mdp(o.env);
    const Policy behavior =
        o.policy.empty() ? Policy::uniform(mdp.num_states, mdp.num_actions) : load_policy(o.policy, "collect");
    if (behavior.num_states != mdp.num_states || behavior.num_actions != mdp.num_actions)
        throw InvariantViolation("collect: policy shape does not match the environment");
    const std::uint64_t seed = effective_seed(o.seed);
    const auto data = collect(mdp, behavior, o.steps, o.episode_len, seed);

    if (o.out.empty()) throw InvariantViolation("collect: missing required output -o");
    std::optional<EnvSpec> spec;
    if (!o.spec.empty()) spec = io::env_spec_from_json(io::read_json_file(o.spec));
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + o.out);
    io::write_dataset_jsonl(f, data, spec);

    if (!o.successes_out.empty()) {
        const std::uint64_t s2 = o.success_seed_set ? o.success_seed : seed + 1;
        SuccessExampleSet successes;
        if (!o.user_marginal_file.empty()) {
            const auto marginal = io::read_json_file(o.user_marginal_file).get<std::vector<double>>();
            successes = violate_assumption_sampler(mdp, marginal, o.num_successes, s2);
        } else {
            successes = sample_success_examples(mdp, data.state_marginal(), o.num_successes, s2);
        }
        io::write_json_file(o.successes_out, io::to_json(successes));
    }
    std::cout << "collected " << data.num_transitions() << " transitions over " << data.trajectories().size()
              << " trajectories\n";
}

struct TrainOpts {
    std::string method = "rce_expected";
    std::string env;
    std::string data;
    std::string successes;
    std::string config;
    std::string out = "run";
    bool online = false;
    std::size_t vice_rounds = 10;
    std::string vice_negatives = "data";  // data | uniform
    bool vice_log = false;
};

inline void run_train(const TrainOpts& o) {
    const TabularMDP env = load_mdp(o.env);
    const SuccessExampleSet successes = load_successes(o.successes, "train");
    const Config conf = load_config(o.config);
    rce::TrainConfig cfg = train_config_from(conf);
    const TaskSpec task{cfg.gamma, 1000};
    ensure_dir(o.out);

    const auto need_data = [&]() -> TransitionDataset {
        if (o.data.empty()) throw InvariantViolation("train: missing required input --data");
        require_file(o.data, "train");
        std::ifstream f(o.data);
        if (!f) throw std::runtime_error("cannot open for reading: " + o.data);
        auto d = io::read_dataset_jsonl(f);
        if (d.num_states() != env.num_states || d.num_actions() != env.num_actions)
            throw InvariantViolation("train: dataset shape does not match the environment");
        return d;
    };

    nlohmann::json result{{"method", o.method}};
    Policy policy;
    if (o.method == "rce_expected" || o.method == "rce_stochastic") {
        const auto mode = o.method == "rce_expected" ? rce::TrainMode::expected : rce::TrainMode::stochastic;
        auto trained = rce::train(env, need_data(), successes, cfg, mode, o.online);
        policy = extract_policy(trained.classifier, rce::PolicyMode::greedy);
        io::write_json_file(o.out + "/classifier.json", io::to_json(trained.classifier));
        std::ofstream mf(o.out + "/metrics.csv", std::ios::binary);
        write_metrics_csv(mf, trained.metrics);
        result["converged"] = trained.converged;
        result["iteration_cap_hit"] = trained.iteration_cap_hit;
    } else {
        baselines::RewardModel rm;
        if (o.method == "sqil") {
            rm = baselines::sqil_reward(successes, env.num_states);
        } else if (o.method == "density") {
            rm = baselines::density_reward(successes);
        } else if (o.method == "vice" || o.method == "vice_iterative") {
            std::vector<double> q;
            if (o.vice_negatives == "uniform") {
                q.assign(env.num_states, 1.0 / static_cast<double>(env.num_states));
            } else if (o.vice_negatives == "data") {
                q = need_data().state_marginal();
            } else {
                throw InvariantViolation("train: unknown --vice-negatives '" + o.vice_negatives + "'");
            }
            const baselines::ViceOptions vo{o.vice_log};
            if (o.method == "vice_iterative") {
                const auto sol = baselines::solve_vice_iterative(env.dynamics(), env.initial_dist, task, successes, q,
                                                                 o.vice_rounds, vo);
                policy = sol.policy;
                io::write_json_file(o.out + "/reward.json",
                                    io::to_json(baselines::vice_ratio_reward(successes, q, vo)));
                io::write_json_file(o.out + "/policy.json", io::to_json(policy));
                result["objective"] = control_objective(env, task, policy);
                io::write_json_file(o.out + "/result.json", result);
                std::cout << "objective = " << fmt_double(result["objective"].get<double>()) << "\n";
                return;
            }
            rm = baselines::vice_ratio_reward(successes, q, vo);
        } else {
            throw InvariantViolation("train: unknown method '" + o.method + "'");
        }
        const auto sol = baselines::solve_baseline(env.dynamics(), task, rm);
        policy = sol.policy;
        io::write_json_file(o.out + "/reward.json", io::to_json(rm));
    }
    io::write_json_file(o.out + "/policy.json", io::to_json(policy));
    result["objective"] = control_objective(env, task, policy);
    io::write_json_file(o.out + "/result.json", result);
    std::cout << "objective = " << fmt_double(result["objective"].get<double>()) << "\n";
}

struct OracleEvalOpts {
    std::string env;
    std::string policy;
    double gamma = 0.99;
    std::string out;
};

inline void run_oracle_eval(const OracleEvalOpts& o) {
    const TabularMDP env = load_mdp(o.env);
    const Policy pi = load_policy(o.policy, "oracle-eval");
    const TaskSpec task{o.gamma, 1000};
    const double obj = control_objective(env, task, pi);
    const auto rho = discounted_occupancy(env, task, pi);
    nlohmann::json rep{{"gamma", o.gamma}, {"objective", obj}, {"occupancy", rho}};
    if (!o.out.empty()) io::write_json_file(o.out, rep);
    std::cout << "objective = " << fmt_double(obj) << "\n";
}

struct RobustEvalOpts {
    std::string env;
    std::string policy;
    std::string successes;
    double gamma = 0.99;
    std::string out;
    std::string heatmap;
    std::size_t rows = 0, cols = 0;
    bool numeric = false;
};

inline void run_robust_eval(const RobustEvalOpts& o) {
    const TabularMDP env = load_mdp(o.env);
    const Policy pi = load_policy(o.policy, "robust-eval");
    const SuccessExampleSet successes = load_successes(o.successes, "robust-eval");
    const TaskSpec task{o.gamma, 1000};
    const auto rho = discounted_occupancy(env, task, pi);
    const auto rep = robust::make_robust_report(rho, successes.dist, successes.prior);
    nlohmann::json j = io::to_json(rep);
    if (o.numeric) {
        const auto num = robust::numeric_inner_min(rho, successes.dist);
        j["numeric_pu_hat"] = num.pu_hat;
        j["numeric_value"] = num.value;
    }
    if (!o.out.empty()) io::write_json_file(o.out, j);
    if (!o.heatmap.empty()) {
        if (o.rows * o.cols != env.num_states)
            throw InvariantViolation("robust-eval: --rows/--cols do not tile the state space");
        std::ofstream f(o.heatmap, std::ios::binary);
        write_heatmap_csv(f, rho, o.rows, o.cols);
    }
    std::cout << "robust_value = " << fmt_double(rep.robust_value) << "\n";
}

struct IterateOpts {
    std::string env;
    std::string successes;
    std::string config;
    std::size_t outer = 10;
    std::uint64_t seed = 0;
    std::string out = "iterate";
    std::size_t rows = 0, cols = 0;
};

inline void run_iterate(const IterateOpts& o) {
    const TabularMDP env = load_mdp(o.env);
    const SuccessExampleSet successes = load_successes(o.successes, "iterate");
    const Config conf = load_config(o.config);
    robust::IteratedConfig cfg;
    cfg.train = train_config_from(conf);
    cfg.initial_random_steps = static_cast<std::size_t>(
        conf.get_int("iterate.initial_random_steps", static_cast<std::int64_t>(cfg.initial_random_steps)));
    cfg.steps_per_outer = static_cast<std::size_t>(
        conf.get_int("iterate.steps_per_outer", static_cast<std::int64_t>(cfg.steps_per_outer)));
    cfg.explore_eps = conf.get_double("iterate.explore_eps", cfg.explore_eps);
    cfg.accumulate = conf.get_bool("iterate.accumulate", cfg.accumulate);
    cfg.seed = effective_seed(o.seed != 0 ? o.seed : static_cast<std::uint64_t>(conf.get_int("iterate.seed", 0)));

    const auto result = robust::iterated_rce(env, successes, cfg, o.outer);
    ensure_dir(o.out);
    nlohmann::json fp{{"max_ratio_deviation_final", result.fixed_point.max_ratio_deviation_final},
                      {"max_ratio_deviation_mean", result.fixed_point.max_ratio_deviation_mean},
                      {"median_ratio_final", result.fixed_point.median_ratio_final},
                      {"reached", result.fixed_point.reached},
                      {"outer_iterations", result.occupancies.size()}};
    io::write_json_file(o.out + "/fixed_point.json", fp);
    io::write_json_file(o.out + "/policy.json", io::to_json(result.policies.back()));
    if (o.rows * o.cols == env.num_states && o.rows > 0) {
        std::ofstream mf(o.out + "/occupancy_mean.csv", std::ios::binary);
        write_heatmap_csv(mf, result.mean_occupancy, o.rows, o.cols);
        std::ofstream ff(o.out + "/occupancy_final.csv", std::ios::binary);
        write_heatmap_csv(ff, result.occupancies.back(), o.rows, o.cols);
    }
    std::cout << "fixed point " << (result.fixed_point.reached ? "reached" : "not reached")
              << ", mean deviation = " << fmt_double(result.fixed_point.max_ratio_deviation_mean) << "\n";
}

struct VerifyOpts {
    std::string suite;
    bool all = false;
    std::string seeds;
    double inject_gamma = 0.0;
    bool inject_gamma_set = false;
    std::string out;
};

inline int run_verify(const VerifyOpts& o, std::ostream& os = std::cout) {
    verify::SuiteOptions options;
    if (!o.seeds.empty()) options.seeds = parse_seed_list(o.seeds);
    if (o.inject_gamma_set) options.gammas = {o.inject_gamma};

    std::vector<verify::SuiteResult> results;
    if (o.all) {
        results = verify::verify_all(options);
    } else {
        results.push_back(verify::run_suite(o.suite, options));
    }
    nlohmann::json summary = nlohmann::json::array();
    bool ok = true;
    for (const auto& r : results) {
        os << r.suite << ": " << (r.cases - r.failures) << "/" << r.cases
           << " (max_residual=" << fmt_double(r.max_residual) << ")\n";
        for (const auto& msg : r.failure_messages) os << "  failure: " << msg << "\n";
        summary.push_back({{"suite", r.suite},
                           {"cases", r.cases},
                           {"failures", r.failures},
                           {"max_residual", r.max_residual}});
        ok = ok && r.passed();
    }
    if (!o.out.empty()) io::write_json_file(o.out, summary);
    return ok ? 0 : 1;
}

struct ReportOpts {
    std::string run;
    std::string out;
};

inline void run_report(const ReportOpts& o) {
    if (o.run.empty()) throw InvariantViolation("report: missing required input --run");
    nlohmann::json summary{{"run", o.run}};
    const std::string metrics_path = o.run + "/metrics.csv";
    if (std::filesystem::exists(metrics_path)) {
        const auto rows = read_metrics_csv(metrics_path);
        summary["metrics_source"] = metrics_path;
        summary["metric_rows"] = rows.size();
        if (!rows.empty()) {
            summary["final_iteration"] = rows.back().iteration;
            summary["final_objective"] = rows.back().objective;
            summary["final_bellman_residual"] = rows.back().bellman_residual;
        }
    }
    const std::string result_path = o.run + "/result.json";
    if (std::filesystem::exists(result_path)) summary["result"] = io::read_json_file(result_path);
    if (!summary.contains("result") && !summary.contains("metrics_source"))
        throw InvariantViolation("report: no metrics.csv or result.json under --run directory");
    if (!o.out.empty()) io::write_json_file(o.out, summary);
    std::cout << summary.dump(2) << "\n";
}

struct SweepOpts {
    std::string env;
    std::string axis = "n_step";
    std::string seeds = "0..9";
    std::string config;
    std::string out;
};

inline void run_sweep_cmd(const SweepOpts& o) {
    const TabularMDP env = load_mdp(o.env);
    const Config conf = load_config(o.config);
    sweep::SweepConfig cfg;
    cfg.train = train_config_from(conf);
    cfg.collect_steps = static_cast<std::size_t>(
        conf.get_int("sweep.collect_steps", static_cast<std::int64_t>(cfg.collect_steps)));
    cfg.num_successes = static_cast<std::size_t>(
        conf.get_int("sweep.num_successes", static_cast<std::int64_t>(cfg.num_successes)));
    cfg.seeds = o.seeds.empty() || o.seeds == "none" ? std::vector<std::uint64_t>{} : parse_seed_list(o.seeds);

    const auto rows = sweep::run_sweep(env, cfg, sweep::axis_from_name(o.axis));
    if (o.out.empty()) throw InvariantViolation("sweep: missing required output -o");
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + o.out);
    sweep::write_sweep_csv(f, rows);
    std::cout << "wrote " << rows.size() << " sweep rows to " << o.out << "\n";
}

}  // namespace detail

/// Entry point shared by the binary and the tests. `args` includes the
/// program name. Exit codes: 0 success, 1 runtime failure, 2 usage error,
/// 3 violated input invariant.
inline int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"exact tabular laboratory for example-based control"};
    app.require_subcommand(0, 1);

    detail::GenEnvOpts gen;
    auto* gen_cmd = app.add_subcommand("gen-env", "generate an environment file");
    gen_cmd->add_option("--kind", gen.kind, "chain | grid2d | random");
    gen_cmd->add_option("--len", gen.length, "chain length");
    gen_cmd->add_option("--rows", gen.rows);
    gen_cmd->add_option("--cols", gen.cols);
    gen_cmd->add_option("--start-row", gen.start_row);
    gen_cmd->add_option("--start-col", gen.start_col);
    gen_cmd->add_option("--success-cell", gen.success_cells, "row,col (repeatable)");
    gen_cmd->add_option("--noise", gen.noise);
    gen_cmd->add_option("--states", gen.states);
    gen_cmd->add_option("--actions", gen.actions);
    gen_cmd->add_option("--seed", gen.seed);
    gen_cmd->add_option("-o,--out", gen.out, "output env.json");
    gen_cmd->add_option("--spec-out", gen.spec_out, "also write the generating spec");
    gen_cmd->callback([&] { detail::run_gen_env(gen); });

    detail::CollectOpts col;
    auto* col_cmd = app.add_subcommand("collect", "roll out a behavior policy into a dataset");
    col_cmd->add_option("--env", col.env, "environment json");
    col_cmd->add_option("--policy", col.policy, "behavior policy json (default uniform)");
    col_cmd->add_option("--spec", col.spec, "env spec json for the dataset header");
    col_cmd->add_option("--steps", col.steps);
    col_cmd->add_option("--episode-len", col.episode_len);
    col_cmd->add_option("--seed", col.seed);
    col_cmd->add_option("-o,--out", col.out, "output dataset jsonl");
    col_cmd->add_option("--successes-out", col.successes_out, "also sample success examples");
    col_cmd->add_option("--num-successes", col.num_successes);
    col_cmd->add_option("--success-seed", col.success_seed)->each([&](const std::string&) { col.success_seed_set = true; });
    col_cmd->add_option("--user-marginal-file", col.user_marginal_file,
                        "sample successes under this visitation instead of the data marginal");
    col_cmd->callback([&] { detail::run_collect(col); });

    detail::TrainOpts tr;
    auto* tr_cmd = app.add_subcommand("train", "train a method on a dataset and success examples");
    tr_cmd->add_option("--method", tr.method,
                       "rce_expected | rce_stochastic | sqil | vice | vice_iterative | density");
    tr_cmd->add_option("--env", tr.env);
    tr_cmd->add_option("--data", tr.data);
    tr_cmd->add_option("--successes", tr.successes);
    tr_cmd->add_option("--config", tr.config);
    tr_cmd->add_option("-o,--out", tr.out, "output directory");
    tr_cmd->add_flag("--online", tr.online, "recollect transitions with the current policy");
    tr_cmd->add_option("--vice-rounds", tr.vice_rounds);
    tr_cmd->add_option("--vice-negatives", tr.vice_negatives, "data | uniform");
    tr_cmd->add_flag("--vice-log", tr.vice_log, "use the log of the ratio");
    tr_cmd->callback([&] { detail::run_train(tr); });

    detail::OracleEvalOpts oe;
    auto* oe_cmd = app.add_subcommand("oracle-eval", "exact objective of a policy");
    oe_cmd->add_option("--env", oe.env);
    oe_cmd->add_option("--policy", oe.policy);
    oe_cmd->add_option("--gamma", oe.gamma);
    oe_cmd->add_option("-o,--out", oe.out);
    oe_cmd->callback([&] { detail::run_oracle_eval(oe); });

    detail::RobustEvalOpts re;
    auto* re_cmd = app.add_subcommand("robust-eval", "robust objective report for a policy");
    re_cmd->add_option("--env", re.env);
    re_cmd->add_option("--policy", re.policy);
    re_cmd->add_option("--successes", re.successes);
    re_cmd->add_option("--gamma", re.gamma);
    re_cmd->add_option("-o,--out", re.out);
    re_cmd->add_option("--heatmap", re.heatmap, "occupancy heatmap csv");
    re_cmd->add_option("--rows", re.rows);
    re_cmd->add_option("--cols", re.cols);
    re_cmd->add_flag("--numeric", re.numeric, "also run the numeric inner minimizer");
    re_cmd->callback([&] { detail::run_robust_eval(re); });

    detail::IterateOpts it;
    auto* it_cmd = app.add_subcommand("iterate", "alternate collection and training");
    it_cmd->add_option("--env", it.env);
    it_cmd->add_option("--successes", it.successes);
    it_cmd->add_option("--config", it.config);
    it_cmd->add_option("--outer", it.outer);
    it_cmd->add_option("--seed", it.seed);
    it_cmd->add_option("-o,--out", it.out);
    it_cmd->add_option("--rows", it.rows);
    it_cmd->add_option("--cols", it.cols);
    it_cmd->callback([&] { detail::run_iterate(it); });

    detail::VerifyOpts ve;
    int verify_rc = 0;
    auto* ve_cmd = app.add_subcommand("verify", "run property suites");
    ve_cmd->add_option("--suite", ve.suite, "suite name");
    ve_cmd->add_flag("--all", ve.all, "run every suite");
    ve_cmd->add_option("--seeds", ve.seeds, "e.g. 0..99 or 0,3,7");
    ve_cmd->add_option("--inject-gamma", ve.inject_gamma, "fault injection: force this discount")
        ->each([&](const std::string&) { ve.inject_gamma_set = true; });
    ve_cmd->add_option("-o,--out", ve.out, "json summary");
    ve_cmd->callback([&] {
        if (!ve.all && ve.suite.empty())
            throw CLI::ValidationError("verify", "select --suite NAME or --all");
        try {
            verify_rc = detail::run_verify(ve);
        } catch (const std::invalid_argument& e) {
            throw CLI::ValidationError("verify", e.what());
        }
    });

    detail::ReportOpts rp;
    auto* rp_cmd = app.add_subcommand("report", "summarize a run directory");
    rp_cmd->add_option("--run", rp.run, "run directory");
    rp_cmd->add_option("-o,--out", rp.out);
    rp_cmd->callback([&] { detail::run_report(rp); });

    detail::SweepOpts sw;
    auto* sw_cmd = app.add_subcommand("sweep", "ablation sweep along one axis");
    sw_cmd->add_option("--env", sw.env);
    sw_cmd->add_option("--axis", sw.axis, "n_step | num_successes | action_source");
    sw_cmd->add_option("--seeds", sw.seeds, "e.g. 0..9, or 'none' for an empty sweep");
    sw_cmd->add_option("--config", sw.config);
    sw_cmd->add_option("-o,--out", sw.out);
    sw_cmd->callback([&] { detail::run_sweep_cmd(sw); });

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    if (app.get_subcommands().empty()) {
        std::cout << app.help();
        return 0;
    }
    return verify_rc;
}

}  // namespace cli
}  // namespace rcelab
