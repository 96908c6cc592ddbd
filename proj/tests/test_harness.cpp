#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "rcelab/cli.hpp"
#include "rcelab/config.hpp"
#include "rcelab/json_io.hpp"
#include "rcelab/metrics.hpp"

using namespace rcelab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("rcelab_test_" + std::to_string(std::rand()) + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(std::initializer_list<std::string> args) {
    std::vector<std::string> argv{"rcelab"};
    argv.insert(argv.end(), args);
    return cli::dispatch(argv);
}

}  // namespace

TEST_CASE("config parsing") {
    const auto cfg = Config::parse("# comment\ntrain.gamma = 0.95\n\nenv.kind = grid2d\ntrain.n_step = 1\n");
    CHECK(cfg.get_double("train.gamma", 0.0) == doctest::Approx(0.95));
    CHECK(cfg.get_string("env.kind", "") == "grid2d");
    CHECK(cfg.get_int("train.n_step", 10) == 1);
    CHECK(cfg.get_int("train.absent", 13) == 13);

    CHECK_THROWS(Config::parse("a = 1\na = 2\n"));
    CHECK_THROWS(Config::parse("no equals sign\n"));
    CHECK_THROWS(cfg.get_double("env.kind", 0.0));

    // deterministic sorted rendering
    CHECK(Config::parse("b = 2\na = 1\n").dump() == "a = 1\nb = 2\n");
}

TEST_CASE("seed list parsing") {
    CHECK(parse_seed_list("0..99").size() == 100);
    CHECK(parse_seed_list("0..0") == std::vector<std::uint64_t>{0});
    CHECK(parse_seed_list("4,7,9") == std::vector<std::uint64_t>{4, 7, 9});
    CHECK_THROWS(parse_seed_list("9..4"));
}

TEST_CASE("cli: gen-env determinism and validation exit codes") {
    TempDir tmp;
    CHECK(run({"gen-env", "--kind", "chain", "--len", "2", "-o", tmp.file("env.json")}) == 0);
    CHECK(run({"gen-env", "--kind", "chain", "--len", "2", "-o", tmp.file("env2.json")}) == 0);
    CHECK(io::read_text_file(tmp.file("env.json")) == io::read_text_file(tmp.file("env2.json")));

    // unknown flag: usage error
    CHECK(run({"gen-env", "--bogus-flag", "1"}) == 2);
    // unknown kind: invariant violation in inputs
    CHECK(run({"gen-env", "--kind", "moebius", "-o", tmp.file("x.json")}) == 3);
}

TEST_CASE("cli: referenced files must exist") {
    CHECK(run({"oracle-eval", "--env", "/nonexistent/env.json", "--policy", "/nonexistent/pi.json"}) == 3);
    CHECK(run({"train", "--method", "rce_expected", "--env", "/nonexistent/env.json", "--successes",
               "/nonexistent/s.json"}) == 3);
}

TEST_CASE("cli: train without successes names the missing input") {
    TempDir tmp;
    REQUIRE(run({"gen-env", "--kind", "chain", "--len", "2", "-o", tmp.file("env.json")}) == 0);
    REQUIRE(run({"collect", "--env", tmp.file("env.json"), "--steps", "500", "-o", tmp.file("data.jsonl")}) == 0);
    CHECK(run({"train", "--method", "rce_expected", "--env", tmp.file("env.json"), "--data", tmp.file("data.jsonl"),
               "-o", tmp.file("run")}) == 3);
}

TEST_CASE("cli: full pipeline on chain2") {
    TempDir tmp;
    REQUIRE(run({"gen-env", "--kind", "chain", "--len", "2", "-o", tmp.file("env.json"), "--spec-out",
                 tmp.file("spec.json")}) == 0);
    REQUIRE(run({"collect", "--env", tmp.file("env.json"), "--spec", tmp.file("spec.json"), "--steps", "2000",
                 "--seed", "5", "-o", tmp.file("data.jsonl"), "--successes-out", tmp.file("succ.json"),
                 "--num-successes", "100"}) == 0);

    std::ofstream cfg(tmp.file("cfg.txt"));
    cfg << "train.gamma = 0.5\ntrain.max_iterations = 500\n";
    cfg.close();

    REQUIRE(run({"train", "--method", "rce_expected", "--env", tmp.file("env.json"), "--data", tmp.file("data.jsonl"),
                 "--successes", tmp.file("succ.json"), "--config", tmp.file("cfg.txt"), "-o", tmp.file("run")}) == 0);
    CHECK(fs::exists(tmp.file("run/policy.json")));
    CHECK(fs::exists(tmp.file("run/classifier.json")));
    CHECK(fs::exists(tmp.file("run/metrics.csv")));

    const auto result = io::read_json_file(tmp.file("run/result.json"));
    CHECK(result.at("objective").get<double>() == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(result.at("converged").get<bool>());

    // metrics csv is schema-versioned
    const auto metrics_text = io::read_text_file(tmp.file("run/metrics.csv"));
    CHECK(metrics_text.rfind("# schema=1\n", 0) == 0);

    REQUIRE(run({"oracle-eval", "--env", tmp.file("env.json"), "--policy", tmp.file("run/policy.json"), "--gamma",
                 "0.5", "-o", tmp.file("oracle.json")}) == 0);
    CHECK(io::read_json_file(tmp.file("oracle.json")).at("objective").get<double>() == doctest::Approx(0.5));

    REQUIRE(run({"robust-eval", "--env", tmp.file("env.json"), "--policy", tmp.file("run/policy.json"),
                 "--successes", tmp.file("succ.json"), "--gamma", "0.5", "-o", tmp.file("robust.json")}) == 0);
    const auto robust = io::read_json_file(tmp.file("robust.json"));
    CHECK(robust.at("robust_value").get<double>() > 0.0);

    REQUIRE(run({"report", "--run", tmp.file("run"), "-o", tmp.file("summary.json")}) == 0);
    const auto summary = io::read_json_file(tmp.file("summary.json"));
    CHECK(summary.at("final_objective").get<double>() == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("cli: baseline training writes a reward model") {
    TempDir tmp;
    REQUIRE(run({"gen-env", "--kind", "chain", "--len", "2", "-o", tmp.file("env.json")}) == 0);
    REQUIRE(run({"collect", "--env", tmp.file("env.json"), "--steps", "1000", "-o", tmp.file("data.jsonl"),
                 "--successes-out", tmp.file("succ.json")}) == 0);
    REQUIRE(run({"train", "--method", "sqil", "--env", tmp.file("env.json"), "--successes", tmp.file("succ.json"),
                 "-o", tmp.file("sqil_run")}) == 0);
    const auto rm = io::read_json_file(tmp.file("sqil_run/reward.json"));
    CHECK(rm.at("provenance").get<std::string>() == "sqil");
    CHECK(rm.at("reward")[1].get<double>() == 1.0);
}

TEST_CASE("cli: verify subcommand") {
    CHECK(run({"verify", "--suite", "lemma2", "--seeds", "0..4"}) == 0);
    CHECK(run({"verify"}) == 2);                               // empty selection
    CHECK(run({"verify", "--suite", "not_a_suite"}) == 2);     // unknown suite
    CHECK(run({"verify", "--suite", "lemma2", "--seeds", "0..2", "--inject-gamma", "1.0"}) == 1);
}

TEST_CASE("verify prints one pass-count line per suite") {
    cli::detail::VerifyOpts opts;
    opts.suite = "lemma2";
    opts.seeds = "0..99";
    std::ostringstream out;
    CHECK(cli::detail::run_verify(opts, out) == 0);
    CHECK(out.str().find("lemma2: 100/100") == 0);

    // fault injection fails the suite and names the violated invariant
    opts.seeds = "0..1";
    opts.inject_gamma = 1.0;
    opts.inject_gamma_set = true;
    std::ostringstream bad;
    CHECK(cli::detail::run_verify(opts, bad) == 1);
    CHECK(bad.str().find("lemma2: 0/2") == 0);
    CHECK(bad.str().find("gamma must lie in [0,1)") != std::string::npos);
}

TEST_CASE("cli: verify --all on reduced seeds") {
    TempDir tmp;
    CHECK(run({"verify", "--all", "--seeds", "0..1", "-o", tmp.file("summary.json")}) == 0);
    const auto summary = io::read_json_file(tmp.file("summary.json"));
    CHECK(summary.is_array());
    CHECK(summary.size() == 14);
    for (const auto& suite : summary) {
        CHECK(suite.at("failures").get<std::size_t>() == 0);
        CHECK(suite.contains("max_residual"));
    }
}

TEST_CASE("cli: sweep with an empty seed list writes a header-only csv") {
    TempDir tmp;
    REQUIRE(run({"gen-env", "--kind", "chain", "--len", "2", "-o", tmp.file("env.json")}) == 0);
    REQUIRE(run({"sweep", "--env", tmp.file("env.json"), "--axis", "n_step", "--seeds", "none", "-o",
                 tmp.file("sweep.csv")}) == 0);
    CHECK(io::read_text_file(tmp.file("sweep.csv")) == "# schema=1\naxis_value,seed,objective\n");
}

TEST_CASE("cli: RCE_LAB_SEED overrides the flag seed") {
    TempDir tmp;
    REQUIRE(run({"gen-env", "--kind", "random", "--states", "4", "--actions", "2", "--seed", "1", "-o",
                 tmp.file("a.json")}) == 0);
    ::setenv("RCE_LAB_SEED", "1", 1);
    const int rc = run({"gen-env", "--kind", "random", "--states", "4", "--actions", "2", "--seed", "999", "-o",
                        tmp.file("b.json")});
    ::unsetenv("RCE_LAB_SEED");
    REQUIRE(rc == 0);
    CHECK(io::read_text_file(tmp.file("a.json")) == io::read_text_file(tmp.file("b.json")));
}

TEST_CASE("metrics csv round trips through the report reader") {
    TempDir tmp;
    std::vector<rce::MetricsRow> rows{{0, 0.25, 1e-3, 1.0, 10}, {100, 0.5, 1e-9, 0.0, 20}};
    std::ofstream f(tmp.file("metrics.csv"), std::ios::binary);
    write_metrics_csv(f, rows);
    f.close();
    const auto back = cli::detail::read_metrics_csv(tmp.file("metrics.csv"));
    REQUIRE(back.size() == 2);
    CHECK(back[1].iteration == 100);
    CHECK(back[1].objective == 0.5);
    CHECK(back[1].bellman_residual == 1e-9);
}
