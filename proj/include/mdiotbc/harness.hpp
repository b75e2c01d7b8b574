#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mdiotbc/bc.hpp"
#include "mdiotbc/bounds.hpp"
#include "mdiotbc/decoy.hpp"
#include "mdiotbc/source.hpp"

namespace mdiotbc::harness {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "1.0.0";

enum class Protocol { BcPerfect, BcDecoy, Ot, AttackOt, DecoyEstimate, Params };
const char* protocol_name(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view name);
std::vector<std::string> protocol_names();

enum class Cheat { None, CodewordFlip, FlipOutsideKnowledge };

// Sweep for the params protocol. Empty axes fall back to the single value
// in RunConfig::params.
struct GridSpec {
    std::vector<bounds::Mode> modes;
    std::vector<double> epsilon, e_err, gamma;
    std::vector<uint32_t> l;
    std::vector<uint64_t> D;
};

struct RunConfig {
    Protocol protocol = Protocol::Params;
    bounds::SecurityParams params;
    SourceModel src_a = SourceModel::perfect();
    SourceModel src_b = SourceModel::perfect();
    uint64_t trials = 1;
    uint64_t master_seed = 0;
    std::filesystem::path output_dir = "out";
    bool emit_traces = false;
    unsigned threads = 0;  // 0 selects the number of logical cores

    // [run]
    std::optional<uint64_t> n, N;
    std::optional<double> channel_e_err;
    bc::CodePolicy code = bc::CodePolicy::bound_rate();
    Cheat cheat = Cheat::None;

    // [decoy]
    decoy::ChernoffEps chernoff;
    decoy::Method estimator = decoy::Method::ClosedFormQ2;

    std::map<std::pair<std::string, std::string>, double> p_fail_table;
    GridSpec grid;
};

// Schema violation. `keys` lists every offending key by its dotted path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::vector<std::string> keys)
        : std::runtime_error(what), keys_(std::move(keys)) {}
    const std::vector<std::string>& keys() const { return keys_; }

private:
    std::vector<std::string> keys_;
};

// Parses and validates a TOML document. A `protocol` key in the document,
// when present, must agree with `protocol`.
RunConfig parse_config(std::string_view toml_text, Protocol protocol);
RunConfig load_config(const std::filesystem::path& file, Protocol protocol);

struct ParamRow {
    bounds::Mode mode = bounds::Mode::BcPerfect;
    bounds::SecurityParams params;
    bool feasible = false;
    bounds::RoundPlan plan;
    std::string factor, detail;  // set when infeasible
};

std::vector<ParamRow> param_table(const RunConfig& cfg);
std::string param_table_csv(const std::vector<ParamRow>& rows);

// Seed of trial t: derive_seed(master_seed, protocol name, t).
uint64_t trial_seed(const RunConfig& cfg, uint64_t trial);

// Exit codes of run_experiment.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInfeasible = 2;

// Runs the configured experiment and writes result.json, summary.csv and,
// when traces are on, trace.jsonl into cfg.output_dir. Diagnostics go to
// `log`. Never throws; failures map to the exit codes above.
int run_experiment(const RunConfig& cfg, std::ostream& log);

// Re-reads the files of a finished run and checks them against their
// schemas. Returns the list of problems, empty when all files conform.
std::vector<std::string> validate_outputs(const std::filesystem::path& dir, Protocol protocol, bool traces);

}  // namespace mdiotbc::harness
