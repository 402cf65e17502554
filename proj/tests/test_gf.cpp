#include <catch_amalgamated.hpp>

#include <random>

#include "ncmix/gf.hpp"

using ncmix::GaloisField;

namespace {

// Independent multiplication oracle: plain carry-less multiply followed by
// polynomial reduction, no tables involved.
uint8_t shift_reduce_mul(unsigned a, unsigned b, unsigned poly, int m) {
    unsigned acc = 0;
    for (int i = 0; i < m; ++i)
        if (b & (1u << i)) acc ^= a << i;
    for (int bit = 2 * m - 2; bit >= m; --bit)
        if (acc & (1u << bit)) acc ^= poly << (bit - m);
    return static_cast<uint8_t>(acc);
}

}  // namespace

TEST_CASE("multiplication matches the shift-and-reduce oracle on all pairs") {
    const GaloisField& gf = GaloisField::gf256();
    for (int a = 0; a < 256; ++a)
        for (int b = 0; b < 256; ++b)
            REQUIRE(gf.mul(static_cast<uint8_t>(a), static_cast<uint8_t>(b)) ==
                    shift_reduce_mul(a, b, 0x11b, 8));

    const GaloisField& g16 = GaloisField::gf16();
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b)
            REQUIRE(g16.mul(static_cast<uint8_t>(a), static_cast<uint8_t>(b)) ==
                    shift_reduce_mul(a, b, 0x13, 4));
}

TEST_CASE("multiplicative identities") {
    const GaloisField& gf = GaloisField::gf256();
    for (int a = 0; a < 256; ++a) {
        REQUIRE(gf.mul(static_cast<uint8_t>(a), 1) == a);
        REQUIRE(gf.mul(static_cast<uint8_t>(a), 0) == 0);
    }
    // a known inverse pair in the 0x11b field
    REQUIRE(gf.mul(0x53, 0xCA) == 0x01);
}

TEST_CASE("every nonzero element has an inverse") {
    const GaloisField& gf = GaloisField::gf256();
    for (int a = 1; a < 256; ++a) {
        const uint8_t inv = gf.inv(static_cast<uint8_t>(a));
        REQUIRE(gf.mul(static_cast<uint8_t>(a), inv) == 1);
        REQUIRE(gf.div(1, static_cast<uint8_t>(a)) == inv);
    }
    REQUIRE_THROWS(gf.inv(0));
}

TEST_CASE("field axioms on random triples") {
    const GaloisField& gf = GaloisField::gf256();
    std::mt19937_64 rng(12345);
    std::uniform_int_distribution<int> d(0, 255);
    for (int i = 0; i < 100000; ++i) {
        const uint8_t a = static_cast<uint8_t>(d(rng));
        const uint8_t b = static_cast<uint8_t>(d(rng));
        const uint8_t c = static_cast<uint8_t>(d(rng));
        REQUIRE(gf.mul(a, b) == gf.mul(b, a));
        REQUIRE(gf.mul(a, gf.mul(b, c)) == gf.mul(gf.mul(a, b), c));
        REQUIRE(gf.mul(a, GaloisField::add(b, c)) ==
                GaloisField::add(gf.mul(a, b), gf.mul(a, c)));
        REQUIRE(GaloisField::add(a, a) == 0);
    }
}

TEST_CASE("pow agrees with repeated multiplication") {
    const GaloisField& gf = GaloisField::gf256();
    for (int a = 0; a < 256; a += 7) {
        uint8_t acc = 1;
        for (int e = 0; e < 16; ++e) {
            REQUIRE(gf.pow(static_cast<uint8_t>(a), e) == acc);
            acc = gf.mul(acc, static_cast<uint8_t>(a));
        }
    }
}
