#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mdiotbc/rng.hpp"

namespace mdiotbc::gf2 {

class IndexSet;

// Packed bit string. Bit 0 is the leftmost bit when written out, in traces,
// hashes and syndromes alike. Storage is little-endian within each word.
class BitString {
public:
    BitString() = default;
    explicit BitString(std::size_t n) : n_(n), w_((n + 63) / 64, 0) {}

    static BitString from_string(std::string_view bits);
    static BitString random(std::size_t n, Rng& rng);

    std::size_t size() const { return n_; }
    bool empty() const { return n_ == 0; }

    bool get(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1ULL; }
    void set(std::size_t i, bool v) {
        const uint64_t m = 1ULL << (i & 63);
        if (v) w_[i >> 6] |= m; else w_[i >> 6] &= ~m;
    }
    void flip(std::size_t i) { w_[i >> 6] ^= 1ULL << (i & 63); }

    BitString& operator^=(const BitString& o);
    friend BitString operator^(BitString a, const BitString& b) { return a ^= b; }
    bool operator==(const BitString& o) const { return n_ == o.n_ && w_ == o.w_; }
    bool operator!=(const BitString& o) const { return !(*this == o); }

    std::size_t weight() const;
    // Inner product over GF(2).
    bool dot(const BitString& o) const;
    // 64 bits starting at `pos`, bit `pos` landing in the lowest position.
    // Positions past the end read as zero.
    uint64_t word_at(std::size_t pos) const;

    BitString restrict_to(const IndexSet& idx) const;
    BitString slice(std::size_t start, std::size_t len) const;
    BitString reversed() const;

    std::string to_string() const;
    // Hex of the bits in order, four bits per digit, first bit is the most
    // significant bit of the first digit; the tail is zero padded.
    std::string to_hex() const;

    const std::vector<uint64_t>& words() const { return w_; }
    std::vector<uint64_t>& words() { return w_; }

private:
    void check_same(const BitString& o) const;

    std::size_t n_ = 0;
    std::vector<uint64_t> w_;
};

// Sorted, duplicate-free subset of [0, n).
class IndexSet {
public:
    IndexSet() = default;
    IndexSet(std::size_t ambient, std::vector<uint32_t> members);

    static IndexSet all(std::size_t ambient);
    static IndexSet from_mask(const BitString& mask);

    std::size_t ambient() const { return n_; }
    std::size_t size() const { return idx_.size(); }
    bool empty() const { return idx_.empty(); }
    const std::vector<uint32_t>& members() const { return idx_; }
    uint32_t operator[](std::size_t i) const { return idx_[i]; }
    bool contains(uint32_t i) const;

    IndexSet complement() const;
    IndexSet set_union(const IndexSet& o) const;
    IndexSet intersect(const IndexSet& o) const;
    IndexSet minus(const IndexSet& o) const;
    BitString mask() const;

    // Uniformly random subset of exactly `count` members.
    IndexSet random_subset(std::size_t count, Rng& rng) const;

    bool operator==(const IndexSet& o) const { return n_ == o.n_ && idx_ == o.idx_; }

private:
    std::size_t n_ = 0;
    std::vector<uint32_t> idx_;
};

class BitMatrix {
public:
    BitMatrix() = default;
    BitMatrix(std::size_t rows, std::size_t cols);

    std::size_t rows() const { return rows_.size(); }
    std::size_t cols() const { return cols_; }
    BitString& row(std::size_t i) { return rows_[i]; }
    const BitString& row(std::size_t i) const { return rows_[i]; }

    std::size_t rank() const;
    bool full_row_rank() const;
    BitString mul(const BitString& x) const;
    // Basis of {x : M x = 0}.
    std::vector<BitString> nullspace() const;
    // Row-major hex, one entry per row.
    std::vector<std::string> to_hex_rows() const;

private:
    std::size_t cols_ = 0;
    std::vector<BitString> rows_;
};

struct LinearCode {
    std::size_t n = 0;
    std::size_t k = 0;
    BitMatrix parity_check;  // (n-k) x n, full row rank
};

struct ToeplitzSeed {
    std::size_t n = 0;
    std::size_t l = 0;
    BitString diagonal;  // n + l - 1 bits

    static ToeplitzSeed random(std::size_t n, std::size_t l, Rng& rng);
    // Matrix entry T[i][j].
    bool entry(std::size_t i, std::size_t j) const { return diagonal.get(i + n - 1 - j); }
};

LinearCode sample_code(std::size_t n, std::size_t k, Rng& rng);
LinearCode code_from_parity_check(const BitMatrix& h);

BitString syndrome(const LinearCode& code, const BitString& x);
bool is_codeword(const LinearCode& code, const BitString& x);

// Basis of the code itself (k vectors).
std::vector<BitString> codeword_basis(const LinearCode& code);

// Exhaustive over all nonzero codewords; requires 1 <= k <= 24.
std::size_t min_distance(const LinearCode& code);

// Smallest-weight vector among the basis rows and their pairwise sums.
// A cheap heuristic for codes too large for min_distance.
BitString low_weight_codeword(const LinearCode& code);

BitString toeplitz_extract(const BitString& x, const ToeplitzSeed& seed);

// Minimum-weight coset-leader correction; ties go to the lexicographically
// smallest error pattern. Requires n <= 24 unless no correction is needed.
BitString coset_decode(const LinearCode& code, const BitString& target_syndrome, const BitString& y);

inline constexpr std::size_t kDeskScale = 24;

}  // namespace mdiotbc::gf2
