#include <doctest.h>

#include <cmath>
#include <set>

#include "mdiotbc/bounds.hpp"
#include "mdiotbc/common.hpp"
#include "mdiotbc/gf2.hpp"
#include "oracles/gf2_oracle.hpp"

using namespace mdiotbc;
using namespace mdiotbc::gf2;

static BitMatrix matrix_from(std::initializer_list<const char*> rows) {
    std::size_t cols = std::string(*rows.begin()).size();
    BitMatrix m(rows.size(), cols);
    std::size_t i = 0;
    for (auto r : rows) m.row(i++) = BitString::from_string(r);
    return m;
}

TEST_CASE("bit strings") {
    auto a = BitString::from_string("1011001");
    CHECK(a.size() == 7);
    CHECK(a.to_string() == "1011001");
    CHECK(a.weight() == 4);
    CHECK(a.to_hex() == "b2");
    CHECK(BitString::from_string("0001").to_hex() == "1");
    auto b = BitString::from_string("0110101");
    CHECK((a ^ b).to_string() == "1101100");
    CHECK_THROWS_AS(a ^= BitString(3), std::invalid_argument);
    CHECK_THROWS_AS(BitString::from_string("10x"), std::invalid_argument);
    CHECK(a.reversed().to_string() == "1001101");
    CHECK(a.slice(2, 4).to_string() == "1100");

    Rng rng(5);
    auto big = BitString::random(200, rng);
    CHECK(big.slice(70, 100).to_string() == big.to_string().substr(70, 100));
}

TEST_CASE("index sets") {
    IndexSet s(10, {1, 3, 4, 8});
    CHECK(s.contains(3));
    CHECK_FALSE(s.contains(2));
    CHECK(s.complement().members() == std::vector<uint32_t>{0, 2, 5, 6, 7, 9});
    CHECK(s.intersect(IndexSet(10, {3, 9})).members() == std::vector<uint32_t>{3});
    CHECK(s.minus(IndexSet(10, {3, 9})).members() == std::vector<uint32_t>{1, 4, 8});
    CHECK_THROWS_AS(IndexSet(5, {2, 1}), std::invalid_argument);
    CHECK_THROWS_AS(IndexSet(5, {1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(IndexSet(5, {5}), std::invalid_argument);
    Rng rng(3);
    auto sub = IndexSet::all(50).random_subset(20, rng);
    CHECK(sub.size() == 20);
    CHECK(IndexSet::from_mask(sub.mask()) == sub);
}

TEST_CASE("sample_code shape, rank and determinism") {
    Rng rng(11);
    auto c = sample_code(4, 1, rng);
    CHECK(c.parity_check.rows() == 3);
    CHECK(c.parity_check.cols() == 4);
    CHECK(c.parity_check.rank() == 3);

    auto full = sample_code(3, 3, rng);
    CHECK(full.parity_check.rows() == 0);
    CHECK(syndrome(full, BitString::from_string("101")).size() == 0);

    Rng r1(99), r2(99);
    auto a = sample_code(8, 4, r1), b = sample_code(8, 4, r2);
    CHECK(a.parity_check.to_hex_rows() == b.parity_check.to_hex_rows());
    CHECK_THROWS_AS(sample_code(3, 4, rng), std::invalid_argument);

    for (int t = 0; t < 50; ++t) {
        auto big = sample_code(300, 120, rng);
        CHECK(big.parity_check.rank() == 180);
    }
}

TEST_CASE("syndrome fixtures") {
    auto h = matrix_from({"101", "011"});
    auto code = code_from_parity_check(h);
    CHECK(syndrome(code, BitString::from_string("101")).to_string() == "01");
    CHECK(syndrome(code, BitString(3)).weight() == 0);
    CHECK(syndrome(code, BitString::from_string("111")).weight() == 0);
    CHECK_THROWS_AS(syndrome(code, BitString(4)), std::invalid_argument);
}

TEST_CASE("syndrome is linear and matches the brute-force multiply") {
    Rng rng(21);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + rng.below(90), k = rng.below(n + 1);
        auto c = sample_code(n, k, rng);
        auto x = BitString::random(n, rng), y = BitString::random(n, rng);
        CHECK(syndrome(c, x ^ y) == (syndrome(c, x) ^ syndrome(c, y)));
        CHECK(oracle::to_vec(syndrome(c, x)) == oracle::mul(oracle::to_mat(c.parity_check), oracle::to_vec(x)));
    }
}

TEST_CASE("zero syndrome exactly on codewords") {
    Rng rng(8);
    for (int t = 0; t < 5; ++t) {
        const std::size_t n = 12, k = 1 + rng.below(12);
        auto c = sample_code(n, k, rng);
        std::set<std::string> from_basis;
        auto basis = codeword_basis(c);
        REQUIRE(basis.size() == k);
        for (uint64_t m = 0; m < (1ULL << k); ++m) {
            BitString w(n);
            for (std::size_t i = 0; i < k; ++i)
                if ((m >> i) & 1) w ^= basis[i];
            from_basis.insert(w.to_string());
        }
        CHECK(from_basis.size() == (1ULL << k));
        for (uint64_t v = 0; v < (1ULL << n); ++v) {
            BitString x(n);
            for (std::size_t i = 0; i < n; ++i) x.set(i, (v >> i) & 1);
            CHECK(is_codeword(c, x) == (from_basis.count(x.to_string()) == 1));
        }
    }
}

TEST_CASE("minimum distance") {
    auto rep = code_from_parity_check(matrix_from({"110", "011"}));
    CHECK(min_distance(rep) == 3);
    Rng rng(4);
    CHECK(min_distance(sample_code(7, 7, rng)) == 1);
    CHECK_THROWS_AS(min_distance(sample_code(5, 0, rng)), std::invalid_argument);
    CHECK_THROWS_AS(min_distance(sample_code(40, 25, rng)), ScaleExceeded);
    for (int t = 0; t < 20; ++t) {
        auto c = sample_code(12, 4, rng);
        CHECK(min_distance(c) == oracle::min_distance(oracle::to_mat(c.parity_check), 12));
    }
    for (int t = 0; t < 10; ++t) {
        auto c = sample_code(14, 1 + rng.below(8), rng);
        CHECK(min_distance(c) == oracle::min_distance(oracle::to_mat(c.parity_check), 14));
        CHECK(low_weight_codeword(c).weight() >= min_distance(c));
        CHECK(is_codeword(c, low_weight_codeword(c)));
    }
}

TEST_CASE("Toeplitz extraction") {
    // T rows (1,0,1) and (1,1,0) correspond to diagonal bits d0..d3 = 1,0,1,1.
    ToeplitzSeed s{3, 2, BitString::from_string("1011")};
    CHECK(s.entry(0, 0) == 1);
    CHECK(s.entry(0, 1) == 0);
    CHECK(s.entry(1, 2) == 0);
    CHECK(toeplitz_extract(BitString::from_string("110"), s).to_string() == "10");
    CHECK(toeplitz_extract(BitString(3), s).weight() == 0);
    ToeplitzSeed z{5, 3, BitString(7)};
    CHECK(toeplitz_extract(BitString::from_string("11011"), z).weight() == 0);
    CHECK_THROWS_AS(toeplitz_extract(BitString(4), s), std::invalid_argument);

    Rng rng(31);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + rng.below(300), l = 1 + rng.below(70);
        auto seed = ToeplitzSeed::random(n, l, rng);
        auto x = BitString::random(n, rng), y = BitString::random(n, rng);
        auto ex = toeplitz_extract(x, seed);
        CHECK(toeplitz_extract(x ^ y, seed) == (ex ^ toeplitz_extract(y, seed)));
        for (std::size_t i = 0; i < l; ++i) {
            int acc = 0;
            for (std::size_t j = 0; j < n; ++j) acc ^= seed.entry(i, j) & x.get(j);
            CHECK(ex.get(i) == static_cast<bool>(acc));
        }
    }
}

TEST_CASE("Toeplitz family is 2-universal (empirical)") {
    Rng rng(1234);
    const std::size_t n = 40;
    const int trials = 100000;
    for (std::size_t l : {1u, 2u, 4u}) {
        auto x = BitString::random(n, rng);
        auto y = x;
        y.flip(rng.below(n));
        y.flip(rng.below(n));
        if (y == x) y.flip(0);
        int collisions = 0;
        for (int t = 0; t < trials; ++t) {
            auto s = ToeplitzSeed::random(n, l, rng);
            collisions += toeplitz_extract(x, s) == toeplitz_extract(y, s);
        }
        const double p = std::exp2(-static_cast<double>(l));
        CHECK(collisions / double(trials) <= p + 3 * std::sqrt(p / trials));
    }
}

TEST_CASE("coset decoding") {
    Rng rng(17);
    auto c = sample_code(10, 4, rng);
    auto y = BitString::random(10, rng);
    CHECK(coset_decode(c, syndrome(c, y), y) == y);

    // Hamming [7,4]: distance 3 so a single error is always corrected.
    auto ham = code_from_parity_check(matrix_from({"1010101", "0110011", "0001111"}));
    CHECK(min_distance(ham) == 3);
    auto word = BitString::from_string("1110000");
    REQUIRE(is_codeword(ham, word));
    for (std::size_t i = 0; i < 7; ++i) {
        auto noisy = word;
        noisy.flip(i);
        CHECK(coset_decode(ham, BitString(3), noisy) == word);
    }

    // Two weight-1 leaders share a syndrome when two columns are equal;
    // the lexicographically smaller string (the later position) wins.
    auto tie = code_from_parity_check(matrix_from({"110", "001"}));
    auto out = coset_decode(tie, BitString::from_string("10"), BitString(3));
    CHECK(out.to_string() == "010");

    CHECK_THROWS_AS(coset_decode(sample_code(30, 10, rng), BitString::random(20, rng), BitString(30)),
                    ScaleExceeded);
}

TEST_CASE("coset decoding matches the brute-force leader and hits the target") {
    Rng rng(23);
    for (int t = 0; t < 60; ++t) {
        const std::size_t n = 4 + rng.below(9), k = rng.below(n + 1);
        auto c = sample_code(n, k, rng);
        auto y = BitString::random(n, rng);
        auto target = BitString::random(n - k, rng);
        auto out = coset_decode(c, target, y);
        CHECK(syndrome(c, out) == target);
        auto s = oracle::to_vec(syndrome(c, y) ^ target);
        auto e = oracle::coset_leader(oracle::to_mat(c.parity_check), n, s);
        CHECK(oracle::to_vec(out ^ y) == e);
    }
}

TEST_CASE("random-code distance tail") {
    Rng rng(2024);
    const int codes = 2000;
    std::vector<int> dist(codes);
    for (auto& d : dist) d = static_cast<int>(min_distance(sample_code(16, 4, rng)));
    for (int j = 1; j <= 8; ++j) {
        const double delta = j / 16.0;
        int hits = 0;
        for (int d : dist) hits += d <= j;
        const double bound = bounds::code_distance_tail(0.25, delta, 16);
        const double pb = std::min(1.0, bound);
        const double sigma = std::sqrt(pb * (1 - pb) / codes);
        CHECK(hits / double(codes) <= bound + 3 * sigma);
    }
}
