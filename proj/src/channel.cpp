#include "mdiotbc/channel.hpp"

#include <stdexcept>

#include "mdiotbc/common.hpp"

namespace mdiotbc::channel {

unsigned sample_photon_count(double mean, Rng& rng) {
    if (mean < 0) throw std::invalid_argument("intensity must be non-negative");
    return rng.poisson(mean);
}

unsigned sample_photon_count(const SourceModel& src, std::size_t level, Rng& rng) {
    if (level >= src.levels.size()) throw std::invalid_argument("unknown intensity level");
    if (src.is_perfect()) return 1;
    return rng.poisson(src.levels[level].mean);
}

unsigned sample_photon_count(const SourceModel& src, const std::string& label, Rng& rng) {
    return sample_photon_count(src, src.index_of(label), rng);
}

BellOutcome bell_round(bool x, bool theta, bool x_hat, bool theta_hat, double e_err, double p_fail, Rng& station) {
    if (station.bernoulli(p_fail)) return {false, false};
    if (theta == theta_hat) return {true, static_cast<bool>(x ^ x_hat ^ station.bernoulli(e_err))};
    return {true, static_cast<bool>(station.bit())};
}

double ChannelModel::p_fail_for(const std::string& a, const std::string& b) const {
    if (auto it = p_fail_table.find({a, b}); it != p_fail_table.end()) return it->second;
    return p_fail;
}

const char* discard_reason_name(DiscardReason r) {
    switch (r) {
        case DiscardReason::None: return "none";
        case DiscardReason::Failure: return "failure";
        case DiscardReason::IntensityMismatch: return "intensity-mismatch";
    }
    return "?";
}

std::vector<std::size_t> Transcript::retained() const {
    std::vector<std::size_t> out;
    out.reserve(n);
    for (std::size_t i = 0; i < rounds.size(); ++i)
        if (!rounds[i].discarded) out.push_back(i);
    return out;
}

namespace {

PartyView project(const Transcript& t, Party who) {
    PartyView v;
    v.party = who;
    v.rounds.reserve(t.rounds.size());
    for (const auto& r : t.rounds) {
        ViewRound o;
        const bool alice = who == Party::Alice;
        o.bit = alice ? r.x : r.x_hat;
        o.basis = alice ? r.theta : r.theta_hat;
        o.own_intensity = alice ? r.intensity_a : r.intensity_b;
        o.other_intensity = alice ? r.intensity_b : r.intensity_a;
        o.success = r.success;
        o.parity = r.success && r.parity;
        o.retained = !r.discarded;
        v.rounds.push_back(o);
    }
    return v;
}

}  // namespace

PartyView Transcript::alice_view() const { return project(*this, Party::Alice); }
PartyView Transcript::bob_view() const { return project(*this, Party::Bob); }

std::string PartyView::serialize() const {
    std::string s;
    s.reserve(rounds.size() * 10 + 2);
    s += party == Party::Alice ? 'A' : 'B';
    for (const auto& r : rounds) {
        s += static_cast<char>('0' + r.bit);
        s += static_cast<char>('0' + r.basis);
        s += std::to_string(r.own_intensity);
        s += ':';
        s += std::to_string(r.other_intensity);
        s += r.success ? (r.parity ? 'P' : 'p') : 'F';
        s += r.retained ? 'r' : 'd';
        s += ';';
    }
    return s;
}

Transcript run_preparation(const ChannelModel& ch, const SourceModel& src_a, const SourceModel& src_b, PrepMode mode,
                           PrepRngs& rngs, uint64_t round_cap) {
    src_a.validate();
    src_b.validate();
    Transcript t;
    t.signal_only_retention = mode.kind == PrepMode::Kind::FixedN;
    for (const auto& lv : src_a.levels) t.labels_a.push_back(lv.label);
    for (const auto& lv : src_b.levels) t.labels_b.push_back(lv.label);

    if (round_cap == 0) round_cap = 1000 * mode.count + 1000000;

    auto pick_level = [](const SourceModel& s, Rng& rng) -> uint16_t {
        if (s.levels.size() == 1) return 0;
        const double u = rng.uniform();
        double acc = 0;
        for (std::size_t i = 0; i < s.levels.size(); ++i) {
            acc += s.levels[i].prob;
            if (u < acc) return static_cast<uint16_t>(i);
        }
        return static_cast<uint16_t>(s.levels.size() - 1);
    };

    uint64_t successes = 0;
    for (uint64_t round = 0;; ++round) {
        if (mode.kind == PrepMode::Kind::FixedN && round >= mode.count) break;
        if (mode.kind == PrepMode::Kind::UntilN && successes >= mode.count) break;
        if (round >= round_cap)
            throw NoProgress("preparation made " + std::to_string(successes) + " successes in " +
                             std::to_string(round) + " rounds");
        RoundRecord r;
        r.x = rngs.alice.bit();
        r.theta = rngs.alice.bit();
        r.intensity_a = pick_level(src_a, rngs.alice);
        r.k_a = sample_photon_count(src_a, r.intensity_a, rngs.alice);
        r.x_hat = rngs.bob.bit();
        r.theta_hat = rngs.bob.bit();
        r.intensity_b = pick_level(src_b, rngs.bob);
        r.k_b = sample_photon_count(src_b, r.intensity_b, rngs.bob);

        const double pf = ch.p_fail_for(t.labels_a[r.intensity_a], t.labels_b[r.intensity_b]);
        BellOutcome o = bell_round(r.x, r.theta, r.x_hat, r.theta_hat, ch.e_err, pf, rngs.station);
        // No dark counts: an empty pulse on either side cannot click.
        if (r.k_a == 0 || r.k_b == 0) o = {false, false};
        r.success = o.success;
        r.parity = o.parity;
        if (!r.success) {
            r.discarded = true;
            r.reason = DiscardReason::Failure;
        } else if (t.signal_only_retention && (r.intensity_a != 0 || r.intensity_b != 0)) {
            r.discarded = true;
            r.reason = DiscardReason::IntensityMismatch;
        } else {
            r.discarded = false;
            r.reason = DiscardReason::None;
            ++t.n;
        }
        if (r.success) ++successes;
        t.rounds.push_back(r);
    }
    return t;
}

AliceStrings alice_strings(const Transcript& t) {
    AliceStrings s{BitString(t.n), BitString(t.n)};
    std::size_t j = 0;
    for (const auto& r : t.rounds) {
        if (r.discarded) continue;
        s.x.set(j, r.x);
        s.theta.set(j, r.theta);
        ++j;
    }
    return s;
}

BobStrings bob_strings(const Transcript& t) {
    BobStrings s{BitString(t.n), BitString(t.n)};
    std::size_t j = 0;
    for (const auto& r : t.rounds) {
        if (r.discarded) continue;
        s.x_hat.set(j, r.corrected_bob_bit());
        s.theta_hat.set(j, r.theta_hat);
        ++j;
    }
    return s;
}

SiftResult sift(const BobStrings& bob, const BitString& theta_reveal) {
    if (theta_reveal.size() != bob.theta_hat.size()) throw std::invalid_argument("sift: basis string length mismatch");
    BitString agree = bob.theta_hat ^ theta_reveal;
    std::vector<uint32_t> idx;
    for (std::size_t i = 0; i < agree.size(); ++i)
        if (!agree.get(i)) idx.push_back(static_cast<uint32_t>(i));
    IndexSet I(agree.size(), std::move(idx));
    BitString xi = bob.x_hat.restrict_to(I);
    return {std::move(I), std::move(xi)};
}

}  // namespace mdiotbc::channel
