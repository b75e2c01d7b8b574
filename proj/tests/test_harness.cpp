#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mdiotbc/harness.hpp"

using namespace mdiotbc;
using namespace mdiotbc::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("mdiotbc_harness_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

int run(const RunConfig& cfg) {
    std::ostringstream log;
    const int code = run_experiment(cfg, log);
    INFO(log.str());
    return code;
}

const char* kDeskOt = R"(
schema_version = 1
trials = 30
master_seed = 17
[params]
epsilon = 0.05
l = 4
e_err = 0.02
c_ec = 2.0
[run]
n = 60
)";

}  // namespace

TEST_CASE("config: defaults and overrides") {
    const auto cfg = parse_config(kDeskOt, Protocol::Ot);
    CHECK(cfg.trials == 30);
    CHECK(cfg.master_seed == 17);
    CHECK(cfg.params.l == 4);
    CHECK(cfg.params.c_ec == 2.0);
    CHECK(cfg.n == std::optional<uint64_t>(60));
    CHECK_FALSE(cfg.emit_traces);

    const auto dec = parse_config(R"(
schema_version = 1
[sources.alice]
kind = "coherent"
levels = [{label = "s", mean = 0.3, prob = 0.6}, {label = "d1", mean = 0.05, prob = 0.2}, {label = "d2", mean = 0.15, prob = 0.2}]
[sources.bob]
kind = "coherent"
levels = [{label = "s", mean = 0.3, prob = 0.6}, {label = "d1", mean = 0.05, prob = 0.2}, {label = "d2", mean = 0.15, prob = 0.2}]
[run]
N = 1000
[decoy]
method = "vertex-enum"
[[p_fail_table]]
alice = "s"
bob = "d1"
p_fail = 0.25
)",
                                  Protocol::DecoyEstimate);
    CHECK(dec.src_a.levels.size() == 3);
    CHECK(dec.src_b.levels[2].mean == 0.15);
    CHECK(dec.estimator == decoy::Method::VertexEnum);
    CHECK(dec.p_fail_table.at({"s", "d1"}) == 0.25);
}

TEST_CASE("config: every offending key is listed") {
    try {
        parse_config(R"(
schema_version = 1
tirals = 4
[params]
epsilon = 0.05
colour = "blue"
l = -3
[run]
n = "many"
)",
                     Protocol::Ot);
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        const auto& k = e.keys();
        auto has = [&](const char* key) { return std::find(k.begin(), k.end(), key) != k.end(); };
        CHECK(has("tirals"));
        CHECK(has("params.colour"));
        CHECK(has("params.l"));
        CHECK(has("run.n"));
        CHECK(std::string(e.what()).find("params.colour") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("trials = 3\n", Protocol::Ot), ConfigError);
    CHECK_THROWS_AS(parse_config("schema_version = 2\n", Protocol::Ot), ConfigError);
    CHECK_THROWS_AS(parse_config("schema_version = 1\nprotocol = \"ot\"\n", Protocol::BcPerfect), ConfigError);
    CHECK_THROWS_AS(parse_config("schema_version = 1\n[run]\nN = 5\n", Protocol::Ot), ConfigError);
    CHECK_THROWS_AS(parse_config("schema_version = 1\n", Protocol::DecoyEstimate), ConfigError);
    CHECK_THROWS_AS(parse_config("schema_version = 1\n[params]\nepsilon = 2.0\n", Protocol::Params), ConfigError);
    CHECK_THROWS_AS(parse_config("schema_version = \n", Protocol::Params), ConfigError);
}

TEST_CASE("params: infeasible point exits with 2") {
    auto cfg = parse_config("schema_version = 1\n[params]\ne_err = 0.3\n", Protocol::Params);
    cfg.output_dir = scratch("infeasible");
    CHECK(run(cfg) == kExitInfeasible);
    // The table is still written, with every row flagged.
    CHECK(line_count(cfg.output_dir / "summary.csv") == 3);
}

TEST_CASE("params: single point and mixed grid") {
    auto cfg = parse_config(R"(
schema_version = 1
[params]
epsilon = 0.05
l = 32
[grid]
modes = ["bc-perfect"]
e_err = [0.005]
)",
                            Protocol::Params);
    const auto rows = param_table(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].feasible);
    CHECK(rows[0].plan.n == 17903);
    auto p = cfg.params;
    p.e_err = 0.005;
    CHECK(rows[0].plan.n == bounds::solve_rounds(bounds::Mode::BcPerfect, p).value().n);
    CHECK(param_table_csv(rows).find("\n") != std::string::npos);

    cfg.grid.e_err = {0.0, 0.3};
    cfg.output_dir = scratch("grid");
    CHECK(run(cfg) == kExitOk);
    const auto table = param_table(cfg);
    REQUIRE(table.size() == 2);
    CHECK(table[0].feasible);
    CHECK(table[0].plan.n == 9701);
    CHECK_FALSE(table[1].feasible);
    CHECK_FALSE(table[1].factor.empty());
    CHECK(line_count(cfg.output_dir / "summary.csv") == 3);
}

TEST_CASE("reports are byte-identical across re-runs and thread counts") {
    auto cfg = parse_config(kDeskOt, Protocol::Ot);
    cfg.emit_traces = true;
    cfg.output_dir = scratch("det_a");
    cfg.threads = 1;
    REQUIRE(run(cfg) == kExitOk);
    auto again = cfg;
    again.output_dir = scratch("det_b");
    again.threads = 3;
    REQUIRE(run(again) == kExitOk);
    for (const char* f : {"result.json", "summary.csv", "trace.jsonl"})
        CHECK(slurp(cfg.output_dir / f) == slurp(again.output_dir / f));
    CHECK(line_count(cfg.output_dir / "summary.csv") == 31);
    CHECK(line_count(cfg.output_dir / "trace.jsonl") > 30);

    auto other = cfg;
    other.master_seed = 18;
    other.output_dir = scratch("det_c");
    REQUIRE(run(other) == kExitOk);
    CHECK(slurp(cfg.output_dir / "trace.jsonl") != slurp(other.output_dir / "trace.jsonl"));
}

TEST_CASE("result schema") {
    auto cfg = parse_config(kDeskOt, Protocol::Ot);
    cfg.output_dir = scratch("schema");
    REQUIRE(run(cfg) == kExitOk);
    const auto j = nlohmann::json::parse(slurp(cfg.output_dir / "result.json"));
    for (const char* k : {"protocol", "params", "n", "aborted_fraction", "accept_fraction", "stats", "seed", "version"})
        CHECK(j.contains(k));
    CHECK(j["protocol"] == "ot");
    CHECK(j["seed"] == 17);
    CHECK(validate_outputs(cfg.output_dir, Protocol::Ot, false).empty());

    // Tampering is caught by the validation pass.
    std::ofstream(cfg.output_dir / "summary.csv", std::ios::app) << "1,2,3\n";
    CHECK_FALSE(validate_outputs(cfg.output_dir, Protocol::Ot, false).empty());
    std::ofstream(cfg.output_dir / "result.json") << "{\"protocol\": \"ot\"}";
    CHECK_FALSE(validate_outputs(cfg.output_dir, Protocol::Ot, false).empty());
}

TEST_CASE("attack-ot writes one row per trial") {
    auto cfg = parse_config(R"(
schema_version = 1
trials = 250
master_seed = 3
[params]
l = 4
gamma = 0.1
mu = 1.0
[run]
n = 200
)",
                            Protocol::AttackOt);
    cfg.output_dir = scratch("attack");
    REQUIRE(run(cfg) == kExitOk);
    CHECK(line_count(cfg.output_dir / "summary.csv") == 251);
    std::ifstream in(cfg.output_dir / "summary.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "trial,C,b,kappa,alpha,omega");
    const auto j = nlohmann::json::parse(slurp(cfg.output_dir / "result.json"));
    CHECK(j["stats"]["p_guess_hat"].get<double>() > 0.5);
}

TEST_CASE("commitment runs") {
    SUBCASE("solver-sized perfect run is infeasible at e_err = 0.02") {
        auto cfg = parse_config("schema_version = 1\n[params]\ne_err = 0.02\n", Protocol::BcPerfect);
        cfg.output_dir = scratch("bc_infeasible");
        CHECK(run(cfg) == kExitInfeasible);
    }
    SUBCASE("honest perfect run at a fixed size") {
        auto cfg = parse_config(R"(
schema_version = 1
trials = 20
emit_traces = true
[params]
l = 8
e_err = 0.01
[run]
n = 400
code = "fixed-k"
code_k = 120
)",
                                Protocol::BcPerfect);
        cfg.output_dir = scratch("bc_honest");
        REQUIRE(run(cfg) == kExitOk);
        const auto j = nlohmann::json::parse(slurp(cfg.output_dir / "result.json"));
        CHECK(j["stats"]["accepted_with_output_mismatch"] == 0);
        CHECK(j["n"] == 400);
        CHECK(validate_outputs(cfg.output_dir, Protocol::BcPerfect, true).empty());
    }
    SUBCASE("cheating run against a screened code") {
        auto cfg = parse_config(R"(
schema_version = 1
trials = 10
[params]
l = 8
e_err = 0.01
[run]
n = 600
code = "screened"
cheat = "codeword-flip"
)",
                                Protocol::BcPerfect);
        cfg.output_dir = scratch("bc_cheat");
        REQUIRE(run(cfg) == kExitOk);
        const auto j = nlohmann::json::parse(slurp(cfg.output_dir / "result.json"));
        CHECK(j["accept_fraction"] == 0.0);
    }
}

TEST_CASE("decoy estimate run") {
    auto cfg = parse_config(R"(
schema_version = 1
trials = 3
emit_traces = true
[params]
gamma = 0.45
[sources.alice]
kind = "coherent"
levels = [{label = "s", mean = 0.3, prob = 0.6}, {label = "d1", mean = 0.05, prob = 0.2}, {label = "d2", mean = 0.15, prob = 0.2}]
[sources.bob]
kind = "coherent"
levels = [{label = "s", mean = 0.3, prob = 0.6}, {label = "d1", mean = 0.05, prob = 0.2}, {label = "d2", mean = 0.15, prob = 0.2}]
[run]
N = 1000000
)",
                            Protocol::DecoyEstimate);
    cfg.output_dir = scratch("decoy");
    REQUIRE(run(cfg) == kExitOk);
    const auto j = nlohmann::json::parse(slurp(cfg.output_dir / "result.json"));
    CHECK(j["N"] == 1000000);
    CHECK(j["stats"]["valid"] == 3);
    CHECK(j["stats"]["violations"] == 0);
    CHECK(validate_outputs(cfg.output_dir, Protocol::DecoyEstimate, true).empty());
}
