#include "mdiotbc/gf2.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

#include "mdiotbc/common.hpp"

namespace mdiotbc::gf2 {

namespace {

uint64_t tail_mask(std::size_t n) {
    const std::size_t r = n & 63;
    return r == 0 ? ~0ULL : ((1ULL << r) - 1);
}

// Dense row-major scratch matrix used by the elimination routines.
struct Flat {
    std::size_t rows, cols, nw;
    std::vector<uint64_t> a;
    uint64_t* row(std::size_t i) { return a.data() + i * nw; }
};

Flat flatten(const std::vector<BitString>& rows, std::size_t cols, std::size_t use_cols) {
    Flat f{rows.size(), use_cols, (use_cols + 63) / 64, {}};
    f.a.assign(f.rows * f.nw, 0);
    for (std::size_t i = 0; i < f.rows; ++i) {
        const auto& w = rows[i].words();
        std::copy_n(w.begin(), f.nw, f.row(i));
        if (use_cols < cols && f.nw > 0) f.row(i)[f.nw - 1] &= tail_mask(use_cols);
    }
    return f;
}

// Row-reduce in place. With `full` set the result is reduced row echelon
// form; otherwise only the part below each pivot is cleared. Returns pivot
// columns in order.
std::vector<std::size_t> eliminate(Flat& f, bool full) {
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < f.cols && r < f.rows; ++c) {
        const std::size_t wi = c >> 6;
        const uint64_t bit = 1ULL << (c & 63);
        std::size_t p = r;
        while (p < f.rows && !(f.row(p)[wi] & bit)) ++p;
        if (p == f.rows) continue;
        if (p != r) std::swap_ranges(f.row(p), f.row(p) + f.nw, f.row(r));
        const uint64_t* pr = f.row(r);
        for (std::size_t i = full ? 0 : r + 1; i < f.rows; ++i) {
            if (i == r) continue;
            uint64_t* ri = f.row(i);
            if (!(ri[wi] & bit)) continue;
            for (std::size_t w = wi; w < f.nw; ++w) ri[w] ^= pr[w];
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

}  // namespace

// ---------------------------------------------------------------- BitString

BitString BitString::from_string(std::string_view bits) {
    BitString b(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1') b.set(i, true);
        else if (bits[i] != '0') throw std::invalid_argument("bit string may contain only 0 and 1");
    }
    return b;
}

BitString BitString::random(std::size_t n, Rng& rng) {
    BitString b(n);
    for (auto& w : b.w_) w = rng.next();
    if (!b.w_.empty()) b.w_.back() &= tail_mask(n);
    return b;
}

void BitString::check_same(const BitString& o) const {
    if (n_ != o.n_) throw std::invalid_argument("bit string length mismatch");
}

BitString& BitString::operator^=(const BitString& o) {
    check_same(o);
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] ^= o.w_[i];
    return *this;
}

std::size_t BitString::weight() const {
    std::size_t s = 0;
    for (uint64_t w : w_) s += static_cast<std::size_t>(std::popcount(w));
    return s;
}

bool BitString::dot(const BitString& o) const {
    check_same(o);
    uint64_t acc = 0;
    for (std::size_t i = 0; i < w_.size(); ++i) acc ^= w_[i] & o.w_[i];
    return std::popcount(acc) & 1;
}

uint64_t BitString::word_at(std::size_t pos) const {
    const std::size_t wi = pos >> 6, sh = pos & 63;
    uint64_t lo = wi < w_.size() ? w_[wi] : 0;
    if (sh == 0) return lo;
    uint64_t hi = wi + 1 < w_.size() ? w_[wi + 1] : 0;
    return (lo >> sh) | (hi << (64 - sh));
}

BitString BitString::restrict_to(const IndexSet& idx) const {
    if (idx.ambient() != n_) throw std::invalid_argument("index set ambient size differs from string length");
    BitString out(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j)
        if (get(idx[j])) out.set(j, true);
    return out;
}

BitString BitString::slice(std::size_t start, std::size_t len) const {
    if (start + len > n_) throw std::invalid_argument("slice out of range");
    BitString out(len);
    for (std::size_t w = 0; w < out.w_.size(); ++w) out.w_[w] = word_at(start + 64 * w);
    if (!out.w_.empty()) out.w_.back() &= tail_mask(len);
    return out;
}

BitString BitString::reversed() const {
    BitString out(n_);
    for (std::size_t i = 0; i < n_; ++i)
        if (get(i)) out.set(n_ - 1 - i, true);
    return out;
}

std::string BitString::to_string() const {
    std::string s(n_, '0');
    for (std::size_t i = 0; i < n_; ++i)
        if (get(i)) s[i] = '1';
    return s;
}

std::string BitString::to_hex() const {
    static const char* digits = "0123456789abcdef";
    std::string s((n_ + 3) / 4, '0');
    for (std::size_t d = 0; d < s.size(); ++d) {
        unsigned v = 0;
        for (std::size_t b = 0; b < 4; ++b) {
            const std::size_t i = 4 * d + b;
            v = (v << 1) | (i < n_ && get(i) ? 1u : 0u);
        }
        s[d] = digits[v];
    }
    return s;
}

// ----------------------------------------------------------------- IndexSet

IndexSet::IndexSet(std::size_t ambient, std::vector<uint32_t> members) : n_(ambient), idx_(std::move(members)) {
    for (std::size_t i = 0; i < idx_.size(); ++i) {
        if (idx_[i] >= n_) throw std::invalid_argument("index out of ambient range");
        if (i > 0 && idx_[i] <= idx_[i - 1]) throw std::invalid_argument("index set must be strictly increasing");
    }
}

IndexSet IndexSet::all(std::size_t ambient) {
    std::vector<uint32_t> v(ambient);
    for (std::size_t i = 0; i < ambient; ++i) v[i] = static_cast<uint32_t>(i);
    return IndexSet(ambient, std::move(v));
}

IndexSet IndexSet::from_mask(const BitString& mask) {
    std::vector<uint32_t> v;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask.get(i)) v.push_back(static_cast<uint32_t>(i));
    return IndexSet(mask.size(), std::move(v));
}

bool IndexSet::contains(uint32_t i) const { return std::binary_search(idx_.begin(), idx_.end(), i); }

BitString IndexSet::mask() const {
    BitString m(n_);
    for (uint32_t i : idx_) m.set(i, true);
    return m;
}

IndexSet IndexSet::complement() const {
    std::vector<uint32_t> v;
    v.reserve(n_ - idx_.size());
    std::size_t j = 0;
    for (uint32_t i = 0; i < n_; ++i) {
        if (j < idx_.size() && idx_[j] == i) { ++j; continue; }
        v.push_back(i);
    }
    return IndexSet(n_, std::move(v));
}

IndexSet IndexSet::set_union(const IndexSet& o) const {
    if (o.n_ != n_) throw std::invalid_argument("ambient size mismatch");
    std::vector<uint32_t> v;
    std::set_union(idx_.begin(), idx_.end(), o.idx_.begin(), o.idx_.end(), std::back_inserter(v));
    return IndexSet(n_, std::move(v));
}

IndexSet IndexSet::intersect(const IndexSet& o) const {
    if (o.n_ != n_) throw std::invalid_argument("ambient size mismatch");
    std::vector<uint32_t> v;
    std::set_intersection(idx_.begin(), idx_.end(), o.idx_.begin(), o.idx_.end(), std::back_inserter(v));
    return IndexSet(n_, std::move(v));
}

IndexSet IndexSet::minus(const IndexSet& o) const {
    if (o.n_ != n_) throw std::invalid_argument("ambient size mismatch");
    std::vector<uint32_t> v;
    std::set_difference(idx_.begin(), idx_.end(), o.idx_.begin(), o.idx_.end(), std::back_inserter(v));
    return IndexSet(n_, std::move(v));
}

IndexSet IndexSet::random_subset(std::size_t count, Rng& rng) const {
    if (count > idx_.size()) throw std::invalid_argument("subset larger than set");
    std::vector<uint32_t> pool = idx_;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return IndexSet(n_, std::move(pool));
}

// ---------------------------------------------------------------- BitMatrix

BitMatrix::BitMatrix(std::size_t rows, std::size_t cols) : cols_(cols), rows_(rows, BitString(cols)) {}

std::size_t BitMatrix::rank() const {
    Flat f = flatten(rows_, cols_, cols_);
    return eliminate(f, false).size();
}

bool BitMatrix::full_row_rank() const {
    const std::size_t r = rows_.size();
    if (r == 0) return true;
    if (r > cols_) return false;
    // A random matrix almost always reaches full rank within a few columns
    // past r, so try a narrow slab first and only fall back when it fails.
    const std::size_t slab = std::min(cols_, r + 64);
    Flat f = flatten(rows_, cols_, slab);
    if (eliminate(f, false).size() == r) return true;
    if (slab == cols_) return false;
    return rank() == r;
}

BitString BitMatrix::mul(const BitString& x) const {
    if (x.size() != cols_) throw std::invalid_argument("matrix/vector dimension mismatch");
    BitString y(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i)
        if (rows_[i].dot(x)) y.set(i, true);
    return y;
}

std::vector<BitString> BitMatrix::nullspace() const {
    Flat f = flatten(rows_, cols_, cols_);
    const auto pivots = eliminate(f, true);
    std::vector<bool> is_pivot(cols_, false);
    for (auto p : pivots) is_pivot[p] = true;
    std::vector<BitString> basis;
    for (std::size_t fc = 0; fc < cols_; ++fc) {
        if (is_pivot[fc]) continue;
        BitString v(cols_);
        v.set(fc, true);
        for (std::size_t i = 0; i < pivots.size(); ++i)
            if ((f.row(i)[fc >> 6] >> (fc & 63)) & 1ULL) v.set(pivots[i], true);
        basis.push_back(std::move(v));
    }
    return basis;
}

std::vector<std::string> BitMatrix::to_hex_rows() const {
    std::vector<std::string> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r.to_hex());
    return out;
}

// -------------------------------------------------------------------- codes

ToeplitzSeed ToeplitzSeed::random(std::size_t n, std::size_t l, Rng& rng) {
    if (n == 0 || l == 0) throw std::invalid_argument("Toeplitz seed needs n >= 1 and l >= 1");
    return ToeplitzSeed{n, l, BitString::random(n + l - 1, rng)};
}

LinearCode sample_code(std::size_t n, std::size_t k, Rng& rng) {
    if (k > n) throw std::invalid_argument("code dimension exceeds block length");
    LinearCode c{n, k, BitMatrix(n - k, n)};
    do {
        for (std::size_t i = 0; i < n - k; ++i) c.parity_check.row(i) = BitString::random(n, rng);
    } while (!c.parity_check.full_row_rank());
    return c;
}

LinearCode code_from_parity_check(const BitMatrix& h) {
    if (!h.full_row_rank()) throw std::invalid_argument("parity check must have full row rank");
    return LinearCode{h.cols(), h.cols() - h.rows(), h};
}

BitString syndrome(const LinearCode& code, const BitString& x) {
    if (x.size() != code.n) throw std::invalid_argument("syndrome: input length differs from code length");
    return code.parity_check.mul(x);
}

bool is_codeword(const LinearCode& code, const BitString& x) { return syndrome(code, x).weight() == 0; }

std::vector<BitString> codeword_basis(const LinearCode& code) {
    if (code.parity_check.rows() == 0) {
        std::vector<BitString> basis;
        for (std::size_t i = 0; i < code.n; ++i) {
            BitString e(code.n);
            e.set(i, true);
            basis.push_back(std::move(e));
        }
        return basis;
    }
    return code.parity_check.nullspace();
}

std::size_t min_distance(const LinearCode& code) {
    if (code.k == 0) throw std::invalid_argument("minimum distance undefined for a zero-dimensional code");
    if (code.k > kDeskScale) throw ScaleExceeded("min_distance is exhaustive and limited to k <= 24");
    const auto basis = codeword_basis(code);
    // Gray-code walk: each step adds exactly one basis vector.
    BitString cur(code.n);
    std::size_t best = code.n;
    const uint64_t total = 1ULL << code.k;
    for (uint64_t g = 1; g < total; ++g) {
        cur ^= basis[static_cast<std::size_t>(std::countr_zero(g))];
        best = std::min(best, cur.weight());
        if (best == 1) break;
    }
    return best;
}

BitString low_weight_codeword(const LinearCode& code) {
    if (code.k == 0) throw std::invalid_argument("no nonzero codeword in a zero-dimensional code");
    const auto basis = codeword_basis(code);
    const BitString* best = &basis[0];
    for (const auto& b : basis)
        if (b.weight() < best->weight()) best = &b;
    BitString out = *best;
    const std::size_t lim = std::min<std::size_t>(basis.size(), 256);
    for (std::size_t i = 0; i < lim; ++i)
        for (std::size_t j = i + 1; j < lim; ++j) {
            BitString s = basis[i] ^ basis[j];
            if (s.weight() < out.weight()) out = std::move(s);
        }
    return out;
}

BitString toeplitz_extract(const BitString& x, const ToeplitzSeed& seed) {
    if (x.size() != seed.n) throw std::invalid_argument("Toeplitz seed was drawn for a different input length");
    if (seed.diagonal.size() != seed.n + seed.l - 1) throw std::invalid_argument("Toeplitz seed has wrong diagonal length");
    // Row i of T read left to right is diagonal[i+n-1], ..., diagonal[i],
    // which is a contiguous window of the reversed diagonal.
    const BitString rd = seed.diagonal.reversed();
    const auto& xw = x.words();
    BitString y(seed.l);
    for (std::size_t i = 0; i < seed.l; ++i) {
        const std::size_t start = seed.l - 1 - i;
        uint64_t acc = 0;
        for (std::size_t w = 0; w < xw.size(); ++w) acc ^= rd.word_at(start + 64 * w) & xw[w];
        if (std::popcount(acc) & 1) y.set(i, true);
    }
    return y;
}

BitString coset_decode(const LinearCode& code, const BitString& target_syndrome, const BitString& y) {
    if (y.size() != code.n) throw std::invalid_argument("coset_decode: word length differs from code length");
    if (target_syndrome.size() != code.n - code.k)
        throw std::invalid_argument("coset_decode: syndrome length differs from n-k");
    BitString s = syndrome(code, y) ^ target_syndrome;
    if (s.weight() == 0) return y;
    if (code.n > kDeskScale) throw ScaleExceeded("coset_decode is exhaustive and limited to n <= 24");

    const std::size_t n = code.n, r = code.n - code.k;
    // Column syndromes as integers; column j maps to mask bit (n-1-j) so that
    // numeric order on masks equals lexicographic order on strings.
    std::vector<uint32_t> col(n, 0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < r; ++i)
            if (code.parity_check.row(i).get(j)) col[j] |= 1u << i;
    uint32_t want = 0;
    for (std::size_t i = 0; i < r; ++i)
        if (s.get(i)) want |= 1u << i;

    const uint64_t limit = 1ULL << n;
    for (std::size_t w = 1; w <= n; ++w) {
        // Gosper's hack visits all weight-w masks in increasing order.
        uint64_t m = (1ULL << w) - 1;
        while (m < limit) {
            uint32_t acc = 0;
            for (uint64_t t = m; t; t &= t - 1) acc ^= col[n - 1 - static_cast<std::size_t>(std::countr_zero(t))];
            if (acc == want) {
                BitString out = y;
                for (uint64_t t = m; t; t &= t - 1) out.flip(n - 1 - static_cast<std::size_t>(std::countr_zero(t)));
                return out;
            }
            const uint64_t c = m & (~m + 1);
            const uint64_t rr = m + c;
            m = (((rr ^ m) >> 2) / c) | rr;
        }
    }
    throw std::logic_error("coset_decode: syndrome unreachable (parity check not full rank)");
}

}  // namespace mdiotbc::gf2
