#include "mdiotbc/harness.hpp"

#include <json.hpp>
#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mdiotbc/adversary.hpp"
#include "mdiotbc/common.hpp"
#include "mdiotbc/ot.hpp"
#include "mdiotbc/parallel.hpp"
#include "mdiotbc/rng.hpp"

namespace mdiotbc::harness {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const char* protocol_name(Protocol p) {
    switch (p) {
        case Protocol::BcPerfect: return "bc-perfect";
        case Protocol::BcDecoy: return "bc-decoy";
        case Protocol::Ot: return "ot";
        case Protocol::AttackOt: return "attack-ot";
        case Protocol::DecoyEstimate: return "decoy-estimate";
        case Protocol::Params: return "params";
    }
    return "?";
}

std::vector<std::string> protocol_names() {
    return {"bc-perfect", "bc-decoy", "ot", "attack-ot", "decoy-estimate", "params"};
}

std::optional<Protocol> parse_protocol(std::string_view name) {
    for (auto p : {Protocol::BcPerfect, Protocol::BcDecoy, Protocol::Ot, Protocol::AttackOt, Protocol::DecoyEstimate,
                   Protocol::Params})
        if (name == protocol_name(p)) return p;
    return std::nullopt;
}

namespace {

std::optional<bounds::Mode> parse_mode(std::string_view s) {
    for (auto m : {bounds::Mode::BcPerfect, bounds::Mode::Ot, bounds::Mode::BcDecoy})
        if (s == bounds::mode_name(m)) return m;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Config reading. Every problem is collected so that one error lists all
// offending keys at once.

class Reader {
public:
    std::vector<std::string> keys;
    std::vector<std::string> messages;

    void fail(const std::string& key, const std::string& msg) {
        keys.push_back(key);
        messages.push_back(key + ": " + msg);
    }

    void check_known(const toml::table& t, const std::string& prefix, std::initializer_list<std::string_view> allowed) {
        for (auto&& [k, v] : t) {
            const std::string_view name = k.str();
            if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
                fail(join(prefix, name), "unknown key");
        }
    }

    static std::string join(const std::string& prefix, std::string_view key) {
        return prefix.empty() ? std::string(key) : prefix + "." + std::string(key);
    }

    std::optional<double> number(const toml::node& n, const std::string& key) {
        if (n.is_floating_point()) return n.value<double>();
        if (n.is_integer()) return static_cast<double>(*n.value<int64_t>());
        fail(key, "expected a number");
        return std::nullopt;
    }

    std::optional<uint64_t> unsigned_int(const toml::node& n, const std::string& key) {
        if (!n.is_integer()) {
            fail(key, "expected an integer");
            return std::nullopt;
        }
        const int64_t v = *n.value<int64_t>();
        if (v < 0) {
            fail(key, "must not be negative");
            return std::nullopt;
        }
        return static_cast<uint64_t>(v);
    }

    std::optional<bool> boolean(const toml::node& n, const std::string& key) {
        if (!n.is_boolean()) {
            fail(key, "expected a boolean");
            return std::nullopt;
        }
        return n.value<bool>();
    }

    std::optional<std::string> string(const toml::node& n, const std::string& key) {
        if (!n.is_string()) {
            fail(key, "expected a string");
            return std::nullopt;
        }
        return n.value<std::string>();
    }

    template <class T, class F>
    std::vector<T> list(const toml::node& n, const std::string& key, F&& each) {
        std::vector<T> out;
        const auto* arr = n.as_array();
        if (!arr) {
            fail(key, "expected an array");
            return out;
        }
        for (std::size_t i = 0; i < arr->size(); ++i) {
            auto v = each((*arr)[i], key + "[" + std::to_string(i) + "]");
            if (v) out.push_back(*v);
        }
        if (out.empty() && arr->size() == 0) fail(key, "array must not be empty");
        return out;
    }
};

template <class T>
void assign(std::optional<T> v, T& dst) {
    if (v) dst = *v;
}

void read_params(Reader& r, const toml::table& t, bounds::SecurityParams& p) {
    r.check_known(t, "params",
                  {"epsilon", "l", "D", "e_err", "gamma", "mu", "p_fail", "delta_t", "n_max", "c_ec",
                   "lambda_smoothing_term"});
    if (auto* n = t.get("epsilon")) assign(r.number(*n, "params.epsilon"), p.epsilon);
    if (auto* n = t.get("l")) {
        if (auto v = r.unsigned_int(*n, "params.l")) p.l = static_cast<uint32_t>(*v);
    }
    if (auto* n = t.get("D")) assign(r.unsigned_int(*n, "params.D"), p.D);
    if (auto* n = t.get("e_err")) assign(r.number(*n, "params.e_err"), p.e_err);
    if (auto* n = t.get("gamma")) assign(r.number(*n, "params.gamma"), p.gamma);
    if (auto* n = t.get("mu")) assign(r.number(*n, "params.mu"), p.mu);
    if (auto* n = t.get("p_fail")) assign(r.number(*n, "params.p_fail"), p.p_fail);
    if (auto* n = t.get("delta_t")) assign(r.number(*n, "params.delta_t"), p.delta_t);
    if (auto* n = t.get("n_max")) assign(r.unsigned_int(*n, "params.n_max"), p.n_max);
    if (auto* n = t.get("c_ec")) assign(r.number(*n, "params.c_ec"), p.c_ec);
    if (auto* n = t.get("lambda_smoothing_term")) assign(r.boolean(*n, "params.lambda_smoothing_term"), p.lambda_smoothing_term);
}

std::optional<SourceModel> read_source(Reader& r, const toml::node& node, const std::string& key) {
    const auto* t = node.as_table();
    if (!t) {
        r.fail(key, "expected a table");
        return std::nullopt;
    }
    r.check_known(*t, key, {"kind", "levels"});
    std::string kind = "perfect";
    if (auto* n = t->get("kind")) assign(r.string(*n, key + ".kind"), kind);
    if (kind == "perfect") {
        if (t->get("levels")) r.fail(key + ".levels", "a perfect source has no intensity levels");
        return SourceModel::perfect();
    }
    if (kind != "coherent") {
        r.fail(key + ".kind", "expected \"perfect\" or \"coherent\"");
        return std::nullopt;
    }
    const auto* lv = t->get("levels");
    if (!lv) {
        r.fail(key + ".levels", "required for a coherent source");
        return std::nullopt;
    }
    auto levels = r.list<IntensityLevel>(*lv, key + ".levels", [&](const toml::node& e, const std::string& ek)
                                                                   -> std::optional<IntensityLevel> {
        const auto* et = e.as_table();
        if (!et) {
            r.fail(ek, "expected a table {label, mean, prob}");
            return std::nullopt;
        }
        r.check_known(*et, ek, {"label", "mean", "prob"});
        const auto* lab = et->get("label");
        const auto* mean = et->get("mean");
        const auto* prob = et->get("prob");
        if (!lab || !mean || !prob) {
            r.fail(ek, "label, mean and prob are all required");
            return std::nullopt;
        }
        auto l = r.string(*lab, ek + ".label");
        auto m = r.number(*mean, ek + ".mean");
        auto p = r.number(*prob, ek + ".prob");
        if (!l || !m || !p) return std::nullopt;
        return IntensityLevel{*l, *m, *p};
    });
    try {
        return SourceModel::coherent(levels);
    } catch (const std::exception& e) {
        r.fail(key, e.what());
        return std::nullopt;
    }
}

void read_run(Reader& r, const toml::table& t, RunConfig& cfg) {
    r.check_known(t, "run", {"n", "N", "channel_e_err", "code", "code_k", "tail_log2", "cheat"});
    if (auto* n = t.get("n")) {
        if (auto v = r.unsigned_int(*n, "run.n")) cfg.n = *v;
    }
    if (auto* n = t.get("N")) {
        if (auto v = r.unsigned_int(*n, "run.N")) cfg.N = *v;
    }
    if (auto* n = t.get("channel_e_err")) {
        if (auto v = r.number(*n, "run.channel_e_err")) cfg.channel_e_err = *v;
    }
    std::string code = "bound-rate";
    if (auto* n = t.get("code")) assign(r.string(*n, "run.code"), code);
    if (code == "bound-rate") {
        cfg.code = bc::CodePolicy::bound_rate();
    } else if (code == "fixed-k") {
        const auto* k = t.get("code_k");
        if (!k) {
            r.fail("run.code_k", "required when run.code = \"fixed-k\"");
        } else if (auto v = r.unsigned_int(*k, "run.code_k")) {
            cfg.code = bc::CodePolicy::fixed_k(*v);
        }
    } else if (code == "screened") {
        double tail = -30.0;
        if (auto* n = t.get("tail_log2")) assign(r.number(*n, "run.tail_log2"), tail);
        cfg.code = bc::CodePolicy::screened(tail);
    } else {
        r.fail("run.code", "expected \"bound-rate\", \"fixed-k\" or \"screened\"");
    }
    if (code != "fixed-k" && t.get("code_k")) r.fail("run.code_k", "only allowed with run.code = \"fixed-k\"");
    if (code != "screened" && t.get("tail_log2")) r.fail("run.tail_log2", "only allowed with run.code = \"screened\"");

    if (auto* n = t.get("cheat")) {
        const auto s = r.string(*n, "run.cheat");
        if (s == "none") cfg.cheat = Cheat::None;
        else if (s == "codeword-flip") cfg.cheat = Cheat::CodewordFlip;
        else if (s == "flip-outside-knowledge") cfg.cheat = Cheat::FlipOutsideKnowledge;
        else if (s) r.fail("run.cheat", "expected \"none\", \"codeword-flip\" or \"flip-outside-knowledge\"");
    }
}

void read_decoy(Reader& r, const toml::table& t, RunConfig& cfg) {
    r.check_known(t, "decoy", {"method", "epsilon", "eps_var", "eps_hat", "eps1"});
    if (auto* n = t.get("method")) {
        const auto s = r.string(*n, "decoy.method");
        if (s == "closed-form") cfg.estimator = decoy::Method::ClosedFormQ2;
        else if (s == "vertex-enum") cfg.estimator = decoy::Method::VertexEnum;
        else if (s) r.fail("decoy.method", "expected \"closed-form\" or \"vertex-enum\"");
    }
    if (auto* n = t.get("epsilon")) assign(r.number(*n, "decoy.epsilon"), cfg.chernoff.epsilon);
    if (auto* n = t.get("eps_var")) assign(r.number(*n, "decoy.eps_var"), cfg.chernoff.eps_var);
    if (auto* n = t.get("eps_hat")) assign(r.number(*n, "decoy.eps_hat"), cfg.chernoff.eps_hat);
    if (auto* n = t.get("eps1")) assign(r.number(*n, "decoy.eps1"), cfg.chernoff.eps1);
}

void read_grid(Reader& r, const toml::table& t, GridSpec& g) {
    r.check_known(t, "grid", {"modes", "epsilon", "l", "D", "e_err", "gamma"});
    auto num = [&](const toml::node& n, const std::string& k) { return r.number(n, k); };
    if (auto* n = t.get("modes")) {
        g.modes = r.list<bounds::Mode>(*n, "grid.modes", [&](const toml::node& e, const std::string& k)
                                                             -> std::optional<bounds::Mode> {
            auto s = r.string(e, k);
            if (!s) return std::nullopt;
            auto m = parse_mode(*s);
            if (!m) r.fail(k, "expected \"bc-perfect\", \"ot\" or \"bc-decoy\"");
            return m;
        });
    }
    if (auto* n = t.get("epsilon")) g.epsilon = r.list<double>(*n, "grid.epsilon", num);
    if (auto* n = t.get("e_err")) g.e_err = r.list<double>(*n, "grid.e_err", num);
    if (auto* n = t.get("gamma")) g.gamma = r.list<double>(*n, "grid.gamma", num);
    if (auto* n = t.get("l")) {
        g.l = r.list<uint32_t>(*n, "grid.l", [&](const toml::node& e, const std::string& k) -> std::optional<uint32_t> {
            auto v = r.unsigned_int(e, k);
            if (!v) return std::nullopt;
            return static_cast<uint32_t>(*v);
        });
    }
    if (auto* n = t.get("D"))
        g.D = r.list<uint64_t>(*n, "grid.D", [&](const toml::node& e, const std::string& k) { return r.unsigned_int(e, k); });
}

void read_p_fail_table(Reader& r, const toml::node& node, RunConfig& cfg) {
    const auto* arr = node.as_array();
    if (!arr) {
        r.fail("p_fail_table", "expected an array of tables");
        return;
    }
    for (std::size_t i = 0; i < arr->size(); ++i) {
        const std::string key = "p_fail_table[" + std::to_string(i) + "]";
        const auto* t = (*arr)[i].as_table();
        if (!t) {
            r.fail(key, "expected a table {alice, bob, p_fail}");
            continue;
        }
        r.check_known(*t, key, {"alice", "bob", "p_fail"});
        const auto* a = t->get("alice");
        const auto* b = t->get("bob");
        const auto* p = t->get("p_fail");
        if (!a || !b || !p) {
            r.fail(key, "alice, bob and p_fail are all required");
            continue;
        }
        auto as = r.string(*a, key + ".alice");
        auto bs = r.string(*b, key + ".bob");
        auto pv = r.number(*p, key + ".p_fail");
        if (as && bs && pv) cfg.p_fail_table[{*as, *bs}] = *pv;
    }
}

}  // namespace

RunConfig parse_config(std::string_view toml_text, Protocol protocol) {
    toml::table doc;
    try {
        doc = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "config is not valid TOML: " << e.description() << " at line " << e.source().begin.line;
        throw ConfigError(os.str(), {});
    }

    Reader r;
    RunConfig cfg;
    cfg.protocol = protocol;
    r.check_known(doc, "",
                  {"schema_version", "protocol", "trials", "master_seed", "output_dir", "emit_traces", "threads", "params",
                   "sources", "run", "decoy", "grid", "p_fail_table"});

    if (auto* n = doc.get("schema_version")) {
        auto v = r.unsigned_int(*n, "schema_version");
        if (v && *v != static_cast<uint64_t>(kSchemaVersion))
            r.fail("schema_version", "unsupported version " + std::to_string(*v) + ", expected " +
                                         std::to_string(kSchemaVersion));
    } else {
        r.fail("schema_version", "required");
    }
    if (auto* n = doc.get("protocol")) {
        auto s = r.string(*n, "protocol");
        if (s && *s != protocol_name(protocol))
            r.fail("protocol", "config is for \"" + *s + "\" but \"" + protocol_name(protocol) + "\" was requested");
    }
    if (auto* n = doc.get("trials")) {
        auto v = r.unsigned_int(*n, "trials");
        if (v && *v == 0) r.fail("trials", "must be positive");
        else assign(v, cfg.trials);
    }
    if (auto* n = doc.get("master_seed")) assign(r.unsigned_int(*n, "master_seed"), cfg.master_seed);
    if (auto* n = doc.get("output_dir")) {
        if (auto s = r.string(*n, "output_dir")) cfg.output_dir = *s;
    }
    if (auto* n = doc.get("emit_traces")) assign(r.boolean(*n, "emit_traces"), cfg.emit_traces);
    if (auto* n = doc.get("threads")) {
        if (auto v = r.unsigned_int(*n, "threads")) cfg.threads = static_cast<unsigned>(*v);
    }

    auto section = [&](const char* name) -> const toml::table* {
        const auto* n = doc.get(name);
        if (!n) return nullptr;
        if (!n->is_table()) {
            r.fail(name, "expected a table");
            return nullptr;
        }
        return n->as_table();
    };
    if (const auto* t = section("params")) read_params(r, *t, cfg.params);
    if (const auto* t = section("sources")) {
        r.check_known(*t, "sources", {"alice", "bob"});
        if (const auto* a = t->get("alice")) {
            if (auto s = read_source(r, *a, "sources.alice")) cfg.src_a = *s;
        }
        if (const auto* b = t->get("bob")) {
            if (auto s = read_source(r, *b, "sources.bob")) cfg.src_b = *s;
        }
    }
    if (const auto* t = section("run")) read_run(r, *t, cfg);
    if (const auto* t = section("decoy")) read_decoy(r, *t, cfg);
    if (const auto* t = section("grid")) read_grid(r, *t, cfg.grid);
    if (const auto* n = doc.get("p_fail_table")) read_p_fail_table(r, *n, cfg);

    // Cross-field rules.
    try {
        cfg.params.validate();
    } catch (const std::exception& e) {
        r.fail("params", e.what());
    }
    try {
        cfg.chernoff.validate();
    } catch (const std::exception& e) {
        r.fail("decoy", e.what());
    }
    const bool coherent = !cfg.src_a.is_perfect() && !cfg.src_b.is_perfect();
    if ((protocol == Protocol::BcDecoy || protocol == Protocol::DecoyEstimate) && !coherent)
        r.fail("sources", "this protocol needs coherent sources for both parties");
    if ((protocol == Protocol::BcPerfect || protocol == Protocol::Ot || protocol == Protocol::AttackOt) &&
        doc.get("sources") && coherent)
        r.fail("sources", "this protocol runs with perfect sources");
    if (protocol == Protocol::DecoyEstimate && !cfg.N) r.fail("run.N", "required for decoy-estimate");
    if (cfg.N && protocol != Protocol::BcDecoy && protocol != Protocol::DecoyEstimate)
        r.fail("run.N", "only used by bc-decoy and decoy-estimate");
    if (cfg.cheat != Cheat::None && protocol != Protocol::BcPerfect && protocol != Protocol::BcDecoy)
        r.fail("run.cheat", "only used by the commitment protocols");
    if (doc.get("grid") && protocol != Protocol::Params) r.fail("grid", "only used by the params protocol");
    if (cfg.channel_e_err && (*cfg.channel_e_err < 0 || *cfg.channel_e_err > 1))
        r.fail("run.channel_e_err", "must lie in [0, 1]");

    if (!r.keys.empty()) {
        std::string msg = "invalid config:";
        for (const auto& m : r.messages) msg += "\n  " + m;
        throw ConfigError(msg, r.keys);
    }
    return cfg;
}

RunConfig load_config(const fs::path& file, Protocol protocol) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file.string(), {});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), protocol);
}

uint64_t trial_seed(const RunConfig& cfg, uint64_t trial) {
    return derive_seed(cfg.master_seed, protocol_name(cfg.protocol), trial);
}

// ---------------------------------------------------------------------------
// Parameter table

std::vector<ParamRow> param_table(const RunConfig& cfg) {
    const auto& g = cfg.grid;
    std::vector<bounds::Mode> modes = g.modes;
    if (modes.empty()) {
        modes = {bounds::Mode::BcPerfect, bounds::Mode::Ot};
        if (!cfg.src_a.is_perfect() && !cfg.src_b.is_perfect()) modes.push_back(bounds::Mode::BcDecoy);
    }
    auto or_one = [](auto v, auto fallback) {
        if (v.empty()) v.push_back(fallback);
        return v;
    };
    const auto eps = or_one(g.epsilon, cfg.params.epsilon);
    const auto ls = or_one(g.l, cfg.params.l);
    const auto Ds = or_one(g.D, cfg.params.D);
    const auto es = or_one(g.e_err, cfg.params.e_err);
    const auto gs = or_one(g.gamma, cfg.params.gamma);

    std::vector<ParamRow> rows;
    for (auto mode : modes)
        for (double e : eps)
            for (auto l : ls)
                for (auto D : Ds)
                    for (double ee : es)
                        for (double ga : gs) {
                            ParamRow row;
                            row.mode = mode;
                            row.params = cfg.params;
                            row.params.epsilon = e;
                            row.params.l = l;
                            row.params.D = D;
                            row.params.e_err = ee;
                            row.params.gamma = ga;
                            try {
                                row.params.validate();
                                const bool perfect = mode != bounds::Mode::BcDecoy;
                                const auto sa = perfect ? SourceModel::perfect() : cfg.src_a;
                                const auto sb = perfect ? SourceModel::perfect() : cfg.src_b;
                                auto plan = bounds::solve_rounds(mode, row.params, sa, sb);
                                if (plan) {
                                    row.feasible = true;
                                    row.plan = plan.value();
                                } else {
                                    row.factor = plan.why().factor;
                                    row.detail = plan.why().detail;
                                }
                            } catch (const std::exception& ex) {
                                row.factor = "invalid";
                                row.detail = ex.what();
                            }
                            rows.push_back(std::move(row));
                        }
    return rows;
}

namespace {

std::string fmt_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header) {
        for (std::size_t i = 0; i < header.size(); ++i) out_ += (i ? "," : "") + header[i];
        out_ += '\n';
    }
    CsvWriter& field(const std::string& s) {
        if (!first_) out_ += ',';
        out_ += csv_field(s);
        first_ = false;
        return *this;
    }
    CsvWriter& field(double v) { return field(fmt_double(v)); }
    CsvWriter& field(uint64_t v) { return field(std::to_string(v)); }
    CsvWriter& field(bool v) { return field(std::string(v ? "1" : "0")); }
    CsvWriter& field(int v) { return field(std::to_string(v)); }
    void end() {
        out_ += '\n';
        first_ = true;
    }
    const std::string& str() const { return out_; }

private:
    std::string out_;
    bool first_ = true;
};

const std::vector<std::string>& header_for(Protocol p) {
    static const std::vector<std::string> bc = {"trial",     "seed",    "n",      "N",           "k",
                                                "alice_abort", "bob_abort", "inconclusive", "accepted", "reason",
                                                "c_match",   "disagreements", "error_fraction", "note"};
    static const std::vector<std::string> ot = {"trial", "seed", "n", "m", "k_m", "c", "aborted", "correct", "leak_bits"};
    static const std::vector<std::string> attack = {"trial", "C", "b", "kappa", "alpha", "omega"};
    static const std::vector<std::string> dec = {"trial",   "seed",    "N",      "retained", "signal_successes",
                                                 "L1",      "n1_true", "valid",  "violation", "ratio_A",
                                                 "abort_A", "ratio_B", "abort_B"};
    static const std::vector<std::string> params = {"mode", "epsilon", "l", "D", "e_err", "gamma", "feasible",
                                                    "n",    "N",       "lambda", "delta", "factor", "detail"};
    switch (p) {
        case Protocol::BcPerfect:
        case Protocol::BcDecoy: return bc;
        case Protocol::Ot: return ot;
        case Protocol::AttackOt: return attack;
        case Protocol::DecoyEstimate: return dec;
        case Protocol::Params: return params;
    }
    return params;
}

}  // namespace

std::string param_table_csv(const std::vector<ParamRow>& rows) {
    CsvWriter w(header_for(Protocol::Params));
    for (const auto& r : rows) {
        w.field(std::string(bounds::mode_name(r.mode)))
            .field(r.params.epsilon)
            .field(static_cast<uint64_t>(r.params.l))
            .field(r.params.D)
            .field(r.params.e_err)
            .field(r.params.gamma)
            .field(r.feasible);
        if (r.feasible) {
            w.field(r.plan.n).field(r.plan.N ? std::to_string(*r.plan.N) : std::string()).field(r.plan.lambda).field(r.plan.delta);
        } else {
            w.field(std::string()).field(std::string()).field(std::string()).field(std::string());
        }
        w.field(r.factor).field(r.detail);
        w.end();
    }
    return w.str();
}

namespace {

// ---------------------------------------------------------------------------
// Experiment runners

struct Report {
    json result;
    std::string csv;
    std::vector<std::string> trace;
    bool all_infeasible = false;
};

json params_json(const bounds::SecurityParams& p) {
    return json{{"epsilon", p.epsilon}, {"l", p.l},           {"D", p.D},         {"e_err", p.e_err},
                {"gamma", p.gamma},     {"mu", p.mu},         {"p_fail", p.p_fail}, {"delta_t", p.delta_t},
                {"n_max", p.n_max},     {"c_ec", p.c_ec},     {"lambda_smoothing_term", p.lambda_smoothing_term}};
}

json source_json(const SourceModel& s) {
    json j{{"kind", s.is_perfect() ? "perfect" : "coherent"}};
    if (!s.is_perfect()) {
        json levels = json::array();
        for (const auto& l : s.levels) levels.push_back({{"label", l.label}, {"mean", l.mean}, {"prob", l.prob}});
        j["levels"] = levels;
    }
    return j;
}

json interval_json(const adversary::Interval& i) { return json{{"lo", i.lo}, {"hi", i.hi}}; }

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

json base_result(const RunConfig& cfg) {
    json j;
    j["protocol"] = protocol_name(cfg.protocol);
    j["schema_version"] = kSchemaVersion;
    j["version"] = kVersion;
    j["seed"] = cfg.master_seed;
    j["trials"] = cfg.trials;
    j["params"] = params_json(cfg.params);
    j["sources"] = json{{"alice", source_json(cfg.src_a)}, {"bob", source_json(cfg.src_b)}};
    return j;
}

void append_trace(std::vector<std::string>& out, uint64_t trial, const Trace& t) {
    for (const auto& l : t.lines()) {
        json j;
        j["trial"] = trial;
        j["phase"] = l.phase;
        j["direction"] = l.direction;
        if (l.round) j["round"] = *l.round;
        j["message_type"] = l.message_type;
        j["payload_hex"] = l.payload_hex;
        j["bits"] = l.bits;
        out.push_back(j.dump());
    }
}

unsigned worker_count(const RunConfig& cfg) { return cfg.threads ? cfg.threads : default_threads(); }

bc::BcConfig make_bc_config(const RunConfig& cfg, bc::Variant variant) {
    bc::BcConfig b;
    b.params = cfg.params;
    b.variant = variant;
    if (variant == bc::Variant::Decoy) {
        b.src_a = cfg.src_a;
        b.src_b = cfg.src_b;
    }
    b.chernoff = cfg.chernoff;
    b.estimator = cfg.estimator;
    b.p_fail_table = cfg.p_fail_table;
    b.channel_e_err = cfg.channel_e_err;
    b.code = cfg.code;
    b.n_override = cfg.n;
    b.N_override = cfg.N;
    b.keep_trace = cfg.emit_traces;
    return b;
}

struct BcRow {
    uint64_t seed = 0, n = 0, k = 0;
    std::optional<uint64_t> N;
    bool alice_abort = false, bob_abort = false, inconclusive = false, accepted = false, c_match = false;
    bc::Reason reason = bc::Reason::None;
    uint64_t disagreements = 0;
    double error_fraction = 0;
    std::string note;
    Trace trace;
};

Report run_bc(const RunConfig& cfg, bc::Variant variant) {
    const auto bcfg = make_bc_config(cfg, variant);
    const auto plan = bc::plan_rounds(bcfg);
    std::vector<BcRow> rows(cfg.trials);
    parallel_for(cfg.trials, worker_count(cfg), [&](uint64_t t) {
        BcRow& row = rows[t];
        row.seed = trial_seed(cfg, t);
        bc::BcSession s(bcfg, plan, row.seed);
        s.prepare();
        s.commit();
        bc::OpenOutcome out;
        if (cfg.cheat == Cheat::None) {
            out = s.open_honest();
        } else {
            std::optional<adversary::LeakageRecord> leak;
            if (variant == bc::Variant::Decoy) {
                Rng leak_rng(derive_seed(row.seed, "leakage"));
                leak = adversary::sample_leakage(s.bob_I(), s.transcript().n, cfg.params.gamma, cfg.params.mu, leak_rng);
            }
            const auto strategy = cfg.cheat == Cheat::CodewordFlip ? bc::CheatStrategy::codeword_flip()
                                                                   : bc::CheatStrategy::flip_outside_knowledge();
            try {
                out = bc::bc_cheating_open(s, leak ? &*leak : nullptr, strategy);
            } catch (const bc::StrategyImpossible& e) {
                row.note = e.what();
                out = s.open_honest();
            }
        }
        row.n = s.transcript().n;
        row.N = s.total_rounds();
        row.k = s.code().k;
        row.alice_abort = s.alice_abort_pending();
        row.bob_abort = s.bob_abort_pending();
        row.inconclusive = s.inconclusive();
        row.accepted = out.accepted;
        row.reason = out.reason;
        row.c_match = out.c_tilde == s.commit_result().c;
        row.disagreements = out.disagreements;
        row.error_fraction = out.error_fraction;
        row.trace = s.trace();
    });

    Report rep;
    CsvWriter w(header_for(cfg.protocol));
    uint64_t accepted = 0, aborted = 0, inconclusive = 0, accepted_mismatch = 0;
    std::map<std::string, uint64_t> reasons;
    for (const char* r : {"none", "syndrome-mismatch", "error-window", "committed-abort"}) reasons[r] = 0;
    for (uint64_t t = 0; t < cfg.trials; ++t) {
        const auto& r = rows[t];
        w.field(t).field(r.seed).field(r.n).field(r.N ? std::to_string(*r.N) : std::string()).field(r.k);
        w.field(r.alice_abort).field(r.bob_abort).field(r.inconclusive).field(r.accepted);
        w.field(std::string(bc::reason_name(r.reason))).field(r.c_match).field(r.disagreements).field(r.error_fraction);
        w.field(r.note);
        w.end();
        accepted += r.accepted;
        aborted += r.alice_abort || r.bob_abort;
        inconclusive += r.inconclusive;
        accepted_mismatch += r.accepted && !r.c_match;
        reasons[bc::reason_name(r.reason)]++;
        append_trace(rep.trace, t, r.trace);
    }
    const double T = static_cast<double>(cfg.trials);
    rep.result = base_result(cfg);
    rep.result["n"] = plan.n;
    if (plan.N) rep.result["N"] = *plan.N;
    rep.result["aborted_fraction"] = aborted / T;
    rep.result["accept_fraction"] = accepted / T;
    json reason_counts;
    for (const auto& [k, v] : reasons) reason_counts[k] = v;
    rep.result["stats"] = json{{"accepted", accepted},
                               {"accept_ci", interval_json(adversary::wilson(accepted, cfg.trials))},
                               {"aborted", aborted},
                               {"inconclusive", inconclusive},
                               {"accepted_with_output_mismatch", accepted_mismatch},
                               {"reasons", reason_counts},
                               {"lambda", plan.lambda},
                               {"delta", plan.delta},
                               {"cheat", cfg.cheat == Cheat::None            ? "none"
                                         : cfg.cheat == Cheat::CodewordFlip ? "codeword-flip"
                                                                            : "flip-outside-knowledge"}};
    rep.csv = w.str();
    return rep;
}

ot::OtConfig make_ot_config(const RunConfig& cfg, bool keep_trace) {
    ot::OtConfig o;
    o.params = cfg.params;
    o.p_fail_table = cfg.p_fail_table;
    o.channel_e_err = cfg.channel_e_err;
    o.n_override = cfg.n;
    o.keep_trace = keep_trace;
    return o;
}

Report run_ot(const RunConfig& cfg) {
    const auto ocfg = make_ot_config(cfg, cfg.emit_traces);
    const auto plan = ot::plan_rounds(ocfg);
    struct Row {
        uint64_t seed = 0, n = 0, m = 0, k_m = 0, leak = 0;
        bool c = false, aborted = false, correct = false;
        Trace trace;
    };
    std::vector<Row> rows(cfg.trials);
    parallel_for(cfg.trials, worker_count(cfg), [&](uint64_t t) {
        Row& row = rows[t];
        row.seed = trial_seed(cfg, t);
        auto run = ot::ot_run(ocfg, plan, row.seed);
        const auto& r = run.result;
        row.n = run.n;
        row.m = run.m;
        row.k_m = run.k_m;
        row.leak = run.leak_bits;
        row.c = r.c;
        row.aborted = r.aborted;
        row.correct = r.s_hat == (r.c ? r.s1 : r.s0);
        row.trace = std::move(run.trace);
    });

    Report rep;
    CsvWriter w(header_for(cfg.protocol));
    uint64_t aborted = 0, failures = 0, wrong_unaborted = 0;
    for (uint64_t t = 0; t < cfg.trials; ++t) {
        const auto& r = rows[t];
        w.field(t).field(r.seed).field(r.n).field(r.m).field(r.k_m).field(r.c).field(r.aborted).field(r.correct).field(r.leak);
        w.end();
        aborted += r.aborted;
        failures += r.aborted || !r.correct;
        wrong_unaborted += !r.aborted && !r.correct;
        append_trace(rep.trace, t, r.trace);
    }
    const double T = static_cast<double>(cfg.trials);
    rep.result = base_result(cfg);
    rep.result["n"] = plan.n;
    rep.result["aborted_fraction"] = aborted / T;
    rep.result["accept_fraction"] = (T - aborted) / T;
    rep.result["stats"] = json{{"aborted", aborted},
                               {"failures", failures},
                               {"failure_fraction", failures / T},
                               {"failure_ci", interval_json(adversary::wilson(failures, cfg.trials))},
                               {"wrong_output_without_abort", wrong_unaborted},
                               {"lambda", plan.lambda},
                               {"delta", plan.delta}};
    rep.csv = w.str();
    return rep;
}

Report run_attack(const RunConfig& cfg) {
    const auto ocfg = make_ot_config(cfg, false);
    const auto plan = ot::plan_rounds(ocfg);
    const uint64_t base = derive_seed(cfg.master_seed, protocol_name(cfg.protocol));
    std::vector<adversary::AttackTrial> rows;
    const auto st = adversary::estimate_attack_advantage(ocfg, plan, {cfg.params.gamma, cfg.params.mu}, cfg.trials,
                                                         base, worker_count(cfg), &rows);
    Report rep;
    CsvWriter w(header_for(cfg.protocol));
    for (const auto& r : rows) {
        w.field(r.trial).field(r.c).field(r.b).field(static_cast<uint64_t>(r.kappa)).field(r.alpha).field(r.omega);
        w.end();
    }
    if (cfg.emit_traces) {
        const auto traced = make_ot_config(cfg, true);
        std::vector<Trace> traces(cfg.trials);
        parallel_for(cfg.trials, worker_count(cfg), [&](uint64_t t) {
            traces[t] = ot::ot_run(traced, plan, derive_seed(base, "attack", t)).trace;
        });
        for (uint64_t t = 0; t < cfg.trials; ++t) append_trace(rep.trace, t, traces[t]);
    }
    const double T = static_cast<double>(cfg.trials);
    rep.result = base_result(cfg);
    rep.result["n"] = plan.n;
    rep.result["aborted_fraction"] = st.aborted / T;
    rep.result["accept_fraction"] = (T - st.aborted) / T;
    rep.result["stats"] = json{{"trials", st.trials},
                               {"correct", st.correct},
                               {"omega", st.omega},
                               {"correct_given_omega", st.correct_given_omega},
                               {"aborted", st.aborted},
                               {"p_guess_hat", st.p_guess_hat},
                               {"p_guess_ci", interval_json(st.p_guess_ci)},
                               {"p_omega_hat", st.p_omega_hat},
                               {"p_omega_ci", interval_json(st.p_omega_ci)},
                               {"alpha_hat", st.alpha_hat},
                               {"alpha_count", st.alpha_count},
                               {"min_alpha_on_omega", st.min_alpha_on_omega},
                               {"conditional_guess_hat", st.conditional_guess_hat},
                               {"conditional_ci", interval_json(st.conditional_ci)},
                               {"gamma", cfg.params.gamma},
                               {"mu", cfg.params.mu}};
    rep.csv = w.str();
    return rep;
}

Report run_decoy_estimate(const RunConfig& cfg) {
    auto bcfg = make_bc_config(cfg, bc::Variant::Decoy);
    if (!bcfg.n_override) bcfg.n_override = 1;
    const auto plan = bc::plan_rounds(bcfg);
    const auto cond = decoy::intensity_given_count(cfg.src_a);
    struct Row {
        uint64_t seed = 0, N = 0, retained = 0, signal = 0, n1 = 0;
        double L1 = std::nan(""), ratio_a = std::nan(""), ratio_b = std::nan("");
        bool valid = false, violation = false, abort_a = false, abort_b = false;
        Trace trace;
    };
    std::vector<Row> rows(cfg.trials);
    parallel_for(cfg.trials, worker_count(cfg), [&](uint64_t t) {
        Row& row = rows[t];
        row.seed = trial_seed(cfg, t);
        bc::BcSession s(bcfg, plan, row.seed);
        s.prepare();
        const auto& tr = s.transcript();
        row.N = tr.rounds.size();
        row.retained = tr.n;
        for (const auto& r : tr.rounds) {
            row.signal += r.success && r.intensity_a == 0;
            row.n1 += r.success && r.intensity_a == 0 && r.k_a == 1;
        }
        try {
            const auto obs = decoy::tally(tr.alice_view(), tr.labels_a);
            row.L1 = decoy::single_photon_lower_bound(obs, cond, cfg.chernoff, cfg.estimator).L1;
            row.valid = true;
            row.violation = row.L1 > static_cast<double>(row.n1);
        } catch (const ValidityViolation&) {
        }
        for (const auto& c : s.checks()) {
            if (c.name == "multiphoton_A") {
                row.ratio_a = c.value;
                row.abort_a = !c.passed;
            } else if (c.name == "multiphoton_B") {
                row.ratio_b = c.value;
                row.abort_b = !c.passed;
            }
        }
        row.trace = s.trace();
    });

    Report rep;
    CsvWriter w(header_for(cfg.protocol));
    uint64_t valid = 0, violations = 0, aborted = 0;
    double ratio_sum = 0;
    for (uint64_t t = 0; t < cfg.trials; ++t) {
        const auto& r = rows[t];
        w.field(t).field(r.seed).field(r.N).field(r.retained).field(r.signal).field(r.L1).field(r.n1);
        w.field(r.valid).field(r.violation).field(r.ratio_a).field(r.abort_a).field(r.ratio_b).field(r.abort_b);
        w.end();
        valid += r.valid;
        violations += r.violation;
        aborted += r.abort_a || r.abort_b;
        if (r.valid && r.n1 > 0) ratio_sum += r.L1 / static_cast<double>(r.n1);
        append_trace(rep.trace, t, r.trace);
    }
    const double T = static_cast<double>(cfg.trials);
    rep.result = base_result(cfg);
    rep.result["n"] = plan.n;
    rep.result["N"] = *plan.N;
    rep.result["aborted_fraction"] = aborted / T;
    rep.result["accept_fraction"] = (T - aborted) / T;
    rep.result["stats"] = json{{"valid", valid},
                               {"violations", violations},
                               {"violation_fraction", valid ? violations / static_cast<double>(valid) : 0.0},
                               {"violation_ci", interval_json(adversary::wilson(violations, std::max<uint64_t>(valid, 1)))},
                               {"failure_bound", cfg.chernoff.failure_bound()},
                               {"mean_L1_over_n1", number_or_null(valid ? ratio_sum / static_cast<double>(valid) : std::nan(""))},
                               {"estimator", cfg.estimator == decoy::Method::ClosedFormQ2 ? "closed-form" : "vertex-enum"}};
    rep.csv = w.str();
    return rep;
}

Report run_params(const RunConfig& cfg) {
    const auto rows = param_table(cfg);
    Report rep;
    rep.csv = param_table_csv(rows);
    uint64_t feasible = 0;
    std::optional<uint64_t> first_n, first_N;
    for (const auto& r : rows) {
        if (!r.feasible) continue;
        ++feasible;
        if (!first_n) {
            first_n = r.plan.n;
            first_N = r.plan.N;
        }
    }
    rep.result = base_result(cfg);
    rep.result["n"] = first_n ? json(*first_n) : json(nullptr);
    if (first_N) rep.result["N"] = *first_N;
    rep.result["aborted_fraction"] = nullptr;
    rep.result["accept_fraction"] = nullptr;
    rep.result["stats"] = json{{"points", rows.size()}, {"feasible", feasible}};
    rep.all_infeasible = feasible == 0;
    return rep;
}

Report dispatch(const RunConfig& cfg) {
    switch (cfg.protocol) {
        case Protocol::BcPerfect: return run_bc(cfg, bc::Variant::Perfect);
        case Protocol::BcDecoy: return run_bc(cfg, bc::Variant::Decoy);
        case Protocol::Ot: return run_ot(cfg);
        case Protocol::AttackOt: return run_attack(cfg);
        case Protocol::DecoyEstimate: return run_decoy_estimate(cfg);
        case Protocol::Params: return run_params(cfg);
    }
    throw std::logic_error("unknown protocol");
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + p.string());
}

}  // namespace

int run_experiment(const RunConfig& cfg, std::ostream& log) {
    try {
        const Report rep = dispatch(cfg);
        fs::create_directories(cfg.output_dir);
        write_file(cfg.output_dir / "result.json", rep.result.dump(2) + "\n");
        write_file(cfg.output_dir / "summary.csv", rep.csv);
        if (cfg.emit_traces) {
            std::string body;
            for (const auto& l : rep.trace) body += l + "\n";
            write_file(cfg.output_dir / "trace.jsonl", body);
        }
        const auto problems = validate_outputs(cfg.output_dir, cfg.protocol, cfg.emit_traces);
        if (!problems.empty()) {
            log << "output validation failed:\n";
            for (const auto& p : problems) log << "  " << p << "\n";
            return kExitInternal;
        }
        if (rep.all_infeasible) {
            log << "infeasible: no grid point admits a round count\n";
            return kExitInfeasible;
        }
        return kExitOk;
    } catch (const InfeasibleError& e) {
        log << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        log << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

// ---------------------------------------------------------------------------
// Self-validation

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

bool is_number_or_null(const json& j) { return j.is_number() || j.is_null(); }

}  // namespace

std::vector<std::string> validate_outputs(const fs::path& dir, Protocol protocol, bool traces) {
    std::vector<std::string> problems;
    json result;
    {
        std::ifstream in(dir / "result.json");
        if (!in) return {"result.json is missing"};
        try {
            result = json::parse(in);
        } catch (const std::exception& e) {
            return {std::string("result.json does not parse: ") + e.what()};
        }
    }
    auto need = [&](const char* key, bool ok) {
        if (!ok) problems.push_back(std::string("result.json: field '") + key + "' missing or of the wrong type");
    };
    need("protocol", result.contains("protocol") && result["protocol"] == protocol_name(protocol));
    need("schema_version", result.contains("schema_version") && result["schema_version"] == kSchemaVersion);
    need("version", result.contains("version") && result["version"].is_string());
    need("seed", result.contains("seed") && result["seed"].is_number_unsigned());
    need("trials", result.contains("trials") && result["trials"].is_number_unsigned());
    need("params", result.contains("params") && result["params"].is_object());
    need("n", result.contains("n") && (result["n"].is_number_unsigned() || result["n"].is_null()));
    if (result.contains("N")) need("N", result["N"].is_number_unsigned());
    need("aborted_fraction", result.contains("aborted_fraction") && is_number_or_null(result["aborted_fraction"]));
    need("accept_fraction", result.contains("accept_fraction") && is_number_or_null(result["accept_fraction"]));
    need("stats", result.contains("stats") && result["stats"].is_object());
    if (!problems.empty()) return problems;

    {
        std::ifstream in(dir / "summary.csv");
        if (!in) {
            problems.push_back("summary.csv is missing");
        } else {
            const auto& header = header_for(protocol);
            std::string line;
            std::getline(in, line);
            if (split_csv_line(line) != header) problems.push_back("summary.csv: unexpected header '" + line + "'");
            uint64_t rows = 0;
            while (std::getline(in, line)) {
                ++rows;
                if (split_csv_line(line).size() != header.size())
                    problems.push_back("summary.csv: row " + std::to_string(rows) + " has the wrong number of fields");
            }
            const uint64_t want = protocol == Protocol::Params ? result["stats"]["points"].get<uint64_t>()
                                                               : result["trials"].get<uint64_t>();
            if (rows != want)
                problems.push_back("summary.csv: " + std::to_string(rows) + " rows, expected " + std::to_string(want));
        }
    }

    if (traces) {
        std::ifstream in(dir / "trace.jsonl");
        if (!in) {
            problems.push_back("trace.jsonl is missing");
        } else {
            std::string line;
            uint64_t no = 0;
            while (std::getline(in, line)) {
                ++no;
                const std::string where = "trace.jsonl line " + std::to_string(no) + ": ";
                json j;
                try {
                    j = json::parse(line);
                } catch (const std::exception& e) {
                    problems.push_back(where + "does not parse");
                    continue;
                }
                const bool shape = j.is_object() && j.contains("trial") && j["trial"].is_number_unsigned() &&
                                   j.contains("phase") && j["phase"].is_string() && j.contains("direction") &&
                                   j["direction"].is_string() && j.contains("message_type") &&
                                   j["message_type"].is_string() && j.contains("payload_hex") &&
                                   j["payload_hex"].is_string() && j.contains("bits") &&
                                   j["bits"].is_number_unsigned() &&
                                   (!j.contains("round") || j["round"].is_number_unsigned()) && j.size() <= 7;
                if (!shape) {
                    problems.push_back(where + "fields missing or of the wrong type");
                    continue;
                }
                const auto hex = j["payload_hex"].get<std::string>();
                const auto bits = j["bits"].get<uint64_t>();
                if (hex.size() != (bits + 3) / 4 ||
                    hex.find_first_not_of("0123456789abcdef") != std::string::npos)
                    problems.push_back(where + "payload_hex does not match bits");
            }
        }
    }
    return problems;
}

}  // namespace mdiotbc::harness
