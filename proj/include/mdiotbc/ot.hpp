#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "mdiotbc/bounds.hpp"
#include "mdiotbc/channel.hpp"
#include "mdiotbc/gf2.hpp"
#include "mdiotbc/rng.hpp"
#include "mdiotbc/trace.hpp"

namespace mdiotbc::ot {

using gf2::BitString;
using gf2::IndexSet;

struct OtConfig {
    bounds::SecurityParams params;
    std::map<std::pair<std::string, std::string>, double> p_fail_table;
    std::optional<double> channel_e_err;  // physical error rate when it differs from params.e_err
    std::optional<uint64_t> n_override;
    bool keep_trace = false;

    channel::ChannelModel channel_model() const;
};

// Plan from solve_rounds(Ot) unless n is overridden. Throws InfeasibleError.
bounds::RoundPlan plan_rounds(const OtConfig& cfg);

// m = ceil((1/2 - alpha1) n).
std::size_t half_size(uint64_t n, double epsilon);

struct ChoiceSets {
    bool abort_pending = false;
    std::size_t m = 0;
    bool c = false;
    IndexSet I_trunc;  // the kept part of the sifted set, size m
    IndexSet I_bad;    // size m, disjoint from I_trunc
    IndexSet I0, I1;
};

// Bob's truncation, bad-set choice and relabelling. When |I| < m, or the
// complement is too small for I_Bad, the sets are padded so that both
// still have size m and the run goes on with abort pending.
ChoiceSets bob_choice_sets(const IndexSet& I, uint64_t n, double alpha1, Rng& rng);

// k_m with m - k_m = ceil(h(e_err) m + c_ec sqrt(m)), floored at 0.
std::size_t ec_dimension(std::size_t m, double e_err, double c_ec);

struct EcResult {
    BitString corrected;
    std::size_t leak_bits = 0;
};

// Syndrome-based correction of one half. Coset decoding only runs when the
// syndromes differ, so long halves work whenever they arrive error free.
EcResult error_correct(const BitString& x_half, const BitString& x_hat_half, const gf2::LinearCode& ec_code);

struct OtResult {
    BitString s0, s1;  // Alice's outputs
    bool c = false;
    BitString s_hat;   // Bob's output
    bool aborted = false;
    // Values before uniformisation, for correctness accounting.
    BitString s0_raw, s1_raw, s_hat_raw;
};

// Everything one run produced. Alice's view is her preparation view plus
// the messages she received; it is serialised by alice_view_string.
struct OtRun {
    OtResult result;
    uint64_t n = 0;
    std::size_t m = 0, k_m = 0;
    channel::Transcript transcript;
    BitString x;           // Alice's retained bits
    BitString theta;       // Alice's retained bases
    IndexSet I;            // Bob's sifted set before truncation
    ChoiceSets sets;
    BitString syn0, syn1;  // error-correction messages
    gf2::ToeplitzSeed r0, r1;
    std::size_t leak_bits = 0;
    Trace trace;
};

OtRun ot_run(const OtConfig& cfg, const bounds::RoundPlan& plan, uint64_t seed);

std::string alice_view_string(const OtRun& run);

}  // namespace mdiotbc::ot
