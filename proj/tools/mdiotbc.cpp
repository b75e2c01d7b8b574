// Command-line front end: mdiotbc <protocol> --config FILE [--seed S]
// [--trials T] [--out DIR] [--emit-traces] [--threads K]

#include <CLI11.hpp>

#include <iostream>

#include "mdiotbc/harness.hpp"

using namespace mdiotbc::harness;

int main(int argc, char** argv) {
    CLI::App app{"MDI bit commitment and oblivious transfer simulator"};
    std::string protocol, config_file, out_dir;
    uint64_t seed = 0, trials = 0;
    unsigned threads = 0;
    bool emit_traces = false;

    app.add_option("protocol", protocol, "experiment to run")->required()->check(CLI::IsMember(protocol_names()));
    app.add_option("--config", config_file, "TOML run configuration")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides the config)");
    auto* trials_opt = app.add_option("--trials", trials, "number of trials (overrides the config)")->check(CLI::PositiveNumber);
    auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides the config)");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads, 0 for all logical cores");
    app.add_flag("--emit-traces", emit_traces, "write trace.jsonl");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Usage errors share the exit code of other invalid input.
        return app.exit(e) == 0 ? kExitOk : kExitInternal;
    }

    const Protocol p = *parse_protocol(protocol);
    RunConfig cfg;
    try {
        cfg = config_file.empty() ? parse_config("schema_version = 1\n", p) : load_config(config_file, p);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitInternal;
    }
    if (*seed_opt) cfg.master_seed = seed;
    if (*trials_opt) cfg.trials = trials;
    if (*out_opt) cfg.output_dir = out_dir;
    if (*threads_opt) cfg.threads = threads;
    if (emit_traces) cfg.emit_traces = true;

    const int code = run_experiment(cfg, std::cerr);
    if (code == kExitOk) std::cerr << "wrote " << cfg.output_dir.string() << "\n";
    return code;
}
