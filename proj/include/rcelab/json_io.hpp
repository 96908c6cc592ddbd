#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcelab/baselines.hpp"
#include "rcelab/envs.hpp"
#include "rcelab/mdp.hpp"
#include "rcelab/rce.hpp"
#include "rcelab/robust.hpp"

namespace rcelab {
namespace io {

using nlohmann::json;

// ---- TabularMDP ------------------------------------------------------------

inline json to_json(const TabularMDP& mdp) {
    json t = json::array();
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
        json per_action = json::array();
        for (std::size_t a = 0; a < mdp.num_actions; ++a) {
            json row = json::array();
            for (std::size_t s2 = 0; s2 < mdp.num_states; ++s2) row.push_back(mdp.p(s, a, s2));
            per_action.push_back(std::move(row));
        }
        t.push_back(std::move(per_action));
    }
    return json{{"num_states", mdp.num_states},
                {"num_actions", mdp.num_actions},
                {"transition", std::move(t)},
                {"initial_dist", mdp.initial_dist},
                {"success_prob", mdp.success_prob}};
}

inline TabularMDP mdp_from_json(const json& j) {
    TabularMDP mdp;
    mdp.num_states = j.at("num_states").get<std::size_t>();
    mdp.num_actions = j.at("num_actions").get<std::size_t>();
    mdp.initial_dist = j.at("initial_dist").get<std::vector<double>>();
    mdp.success_prob = j.at("success_prob").get<std::vector<double>>();
    const auto& t = j.at("transition");
    mdp.transition.reserve(mdp.num_states * mdp.num_actions * mdp.num_states);
    for (const auto& per_action : t)
        for (const auto& row : per_action)
            for (const auto& v : row) mdp.transition.push_back(v.get<double>());
    mdp.validate();
    return mdp;
}

// ---- Policy / Classifier / SuccessExampleSet --------------------------------

inline json to_json(const Policy& pi) {
    json rows = json::array();
    for (std::size_t s = 0; s < pi.num_states; ++s) {
        json row = json::array();
        for (std::size_t a = 0; a < pi.num_actions; ++a) row.push_back(pi(s, a));
        rows.push_back(std::move(row));
    }
    return json{{"num_states", pi.num_states}, {"num_actions", pi.num_actions}, {"probs", std::move(rows)}};
}

inline Policy policy_from_json(const json& j) {
    Policy pi(j.at("num_states").get<std::size_t>(), j.at("num_actions").get<std::size_t>());
    const auto& rows = j.at("probs");
    for (std::size_t s = 0; s < pi.num_states; ++s)
        for (std::size_t a = 0; a < pi.num_actions; ++a) pi(s, a) = rows[s][a].get<double>();
    pi.validate();
    return pi;
}

inline json to_json(const rce::Classifier& cls) {
    json rows = json::array();
    for (std::size_t s = 0; s < cls.num_states; ++s) {
        json row = json::array();
        for (std::size_t a = 0; a < cls.num_actions; ++a) row.push_back(cls.logit(s, a));
        rows.push_back(std::move(row));
    }
    return json{{"num_states", cls.num_states}, {"num_actions", cls.num_actions}, {"logits", std::move(rows)}};
}

inline rce::Classifier classifier_from_json(const json& j) {
    rce::Classifier cls(j.at("num_states").get<std::size_t>(), j.at("num_actions").get<std::size_t>());
    const auto& rows = j.at("logits");
    for (std::size_t s = 0; s < cls.num_states; ++s)
        for (std::size_t a = 0; a < cls.num_actions; ++a) cls.logit(s, a) = rows[s][a].get<double>();
    return cls;
}

inline json to_json(const SuccessExampleSet& set) {
    return json{{"examples", set.examples}, {"dist", set.dist}, {"prior", set.prior}};
}

inline SuccessExampleSet successes_from_json(const json& j) {
    SuccessExampleSet set;
    set.examples = j.at("examples").get<std::vector<std::size_t>>();
    set.dist = j.at("dist").get<std::vector<double>>();
    set.prior = j.at("prior").get<double>();
    set.validate();
    return set;
}

// ---- EnvSpec ----------------------------------------------------------------

inline json to_json(const EnvSpec& spec) {
    json j{{"kind", EnvSpec::kind_name(spec.kind)}, {"seed", spec.seed}};
    switch (spec.kind) {
        case EnvSpec::Kind::chain:
            j["length"] = spec.length;
            break;
        case EnvSpec::Kind::grid2d: {
            j["rows"] = spec.rows;
            j["cols"] = spec.cols;
            j["start_row"] = spec.start_row;
            j["start_col"] = spec.start_col;
            j["noise"] = spec.noise;
            json cells = json::array();
            for (const auto& [r, c] : spec.success_cells) cells.push_back(json::array({r, c}));
            j["success_cells"] = std::move(cells);
            break;
        }
        case EnvSpec::Kind::random_dirichlet:
            j["num_states"] = spec.num_states;
            j["num_actions"] = spec.num_actions;
            break;
    }
    return j;
}

inline EnvSpec env_spec_from_json(const json& j) {
    EnvSpec spec;
    const std::string kind = j.at("kind").get<std::string>();
    spec.seed = j.value("seed", std::uint64_t{0});
    if (kind == "chain") {
        spec.kind = EnvSpec::Kind::chain;
        spec.length = j.at("length").get<std::size_t>();
    } else if (kind == "grid2d") {
        spec.kind = EnvSpec::Kind::grid2d;
        spec.rows = j.at("rows").get<std::size_t>();
        spec.cols = j.at("cols").get<std::size_t>();
        spec.start_row = j.at("start_row").get<std::size_t>();
        spec.start_col = j.at("start_col").get<std::size_t>();
        spec.noise = j.value("noise", 0.0);
        spec.success_cells.clear();
        for (const auto& cell : j.at("success_cells"))
            spec.success_cells.emplace_back(cell[0].get<std::size_t>(), cell[1].get<std::size_t>());
    } else if (kind == "random_dirichlet") {
        spec.kind = EnvSpec::Kind::random_dirichlet;
        spec.num_states = j.at("num_states").get<std::size_t>();
        spec.num_actions = j.at("num_actions").get<std::size_t>();
    } else {
        throw InvariantViolation("EnvSpec: unknown kind '" + kind + "'");
    }
    return spec;
}

// ---- RewardModel / RobustReport ----------------------------------------------

inline json to_json(const baselines::RewardModel& rm) {
    return json{{"reward", rm.reward}, {"provenance", baselines::RewardModel::provenance_name(rm.provenance)}};
}

inline json to_json(const robust::RobustReport& rep) {
    return json{{"worst_pU", rep.worst_pU},
                {"robust_value", rep.robust_value},
                {"hellinger_sq", rep.hellinger_sq},
                {"bhattacharyya", rep.bhattacharyya},
                {"support_mismatch", rep.support_mismatch}};
}

// ---- Dataset JSONL -----------------------------------------------------------

/// First line: header {env_spec (or null), seed, num_states, num_actions}.
/// Every other line: one trajectory [[s0,a0],[s1,a1],...,[sT]].
inline void write_dataset_jsonl(std::ostream& os, const TransitionDataset& data,
                                const std::optional<EnvSpec>& spec) {
    json header{{"env_spec", spec ? to_json(*spec) : json(nullptr)},
                {"seed", data.seed()},
                {"num_states", data.num_states()},
                {"num_actions", data.num_actions()}};
    os << header.dump() << "\n";
    for (const auto& traj : data.trajectories()) {
        json line = json::array();
        for (std::size_t t = 0; t < traj.actions.size(); ++t)
            line.push_back(json::array({traj.states[t], traj.actions[t]}));
        line.push_back(json::array({traj.states.back()}));
        os << line.dump() << "\n";
    }
}

inline TransitionDataset read_dataset_jsonl(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw InvariantViolation("dataset: missing header line");
    const json header = json::parse(line);
    TransitionDataset data(header.at("num_states").get<std::size_t>(), header.at("num_actions").get<std::size_t>(),
                           header.at("seed").get<std::uint64_t>());
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        Trajectory traj;
        for (const auto& step : j) {
            traj.states.push_back(step[0].get<std::size_t>());
            if (step.size() > 1) traj.actions.push_back(step[1].get<std::size_t>());
        }
        data.append(std::move(traj));
    }
    return data;
}

// ---- file helpers --------------------------------------------------------------

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

inline json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    return json::parse(f);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace io
}  // namespace rcelab
