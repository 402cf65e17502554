#include <catch_amalgamated.hpp>

#include <random>

#include "ncmix/gf.hpp"
#include "ncmix/matrix.hpp"

using ncmix::CoeffMatrix;
using ncmix::GaloisField;

namespace {

// Second, deliberately different rank routine: column-at-a-time elimination
// without pivot normalization (cross-multiplication instead of inverses).
std::size_t naive_rank(CoeffMatrix m, const GaloisField& gf) {
    std::size_t r = 0;
    std::vector<bool> used(m.rows(), false);
    for (std::size_t col = 0; col < m.cols(); ++col) {
        std::size_t pivot = SIZE_MAX;
        for (std::size_t row = 0; row < m.rows(); ++row) {
            if (!used[row] && m.at(row, col) != 0) {
                pivot = row;
                break;
            }
        }
        if (pivot == SIZE_MAX) continue;
        used[pivot] = true;
        ++r;
        for (std::size_t row = 0; row < m.rows(); ++row) {
            if (used[row] || m.at(row, col) == 0) continue;
            const uint8_t a = m.at(pivot, col);
            const uint8_t b = m.at(row, col);
            for (std::size_t c = 0; c < m.cols(); ++c) {
                m.at(row, c) = GaloisField::add(gf.mul(a, m.at(row, c)),
                                                gf.mul(b, m.at(pivot, c)));
            }
        }
    }
    return r;
}

CoeffMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> d(0, 255);
    CoeffMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m.at(r, c) = static_cast<uint8_t>(d(rng));
    return m;
}

}  // namespace

TEST_CASE("rank of identity and duplicated rows") {
    const GaloisField& gf = GaloisField::gf256();
    for (std::size_t n : {1u, 4u, 9u}) {
        CoeffMatrix id(n, n);
        for (std::size_t i = 0; i < n; ++i) id.at(i, i) = 1;
        REQUIRE(ncmix::rank(id, gf) == n);
    }
    CoeffMatrix dup(2, 5);
    for (std::size_t c = 0; c < 5; ++c) {
        dup.at(0, c) = static_cast<uint8_t>(c + 3);
        dup.at(1, c) = static_cast<uint8_t>(c + 3);
    }
    REQUIRE(ncmix::rank(dup, gf) == 1);
}

TEST_CASE("rank matches the naive elimination oracle on seeded matrices") {
    const GaloisField& gf = GaloisField::gf256();
    std::mt19937_64 rng(777);
    std::uniform_int_distribution<std::size_t> dim(1, 14);
    for (int trial = 0; trial < 1000; ++trial) {
        CoeffMatrix m = random_matrix(dim(rng), dim(rng), rng);
        // sprinkle zeros and duplicated rows for degenerate cases
        if (trial % 3 == 0 && m.rows() >= 2) {
            for (std::size_t c = 0; c < m.cols(); ++c) m.at(1, c) = m.at(0, c);
        }
        REQUIRE(ncmix::rank(m, gf) == naive_rank(m, gf));
    }
}

TEST_CASE("row echelon preserves rank") {
    const GaloisField& gf = GaloisField::gf256();
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        CoeffMatrix m = random_matrix(6, 8, rng);
        REQUIRE(ncmix::rank(m, gf) == ncmix::rank(ncmix::row_echelon(m, gf), gf));
    }
}

TEST_CASE("random tall matrix has full column rank with high probability") {
    const GaloisField& gf = GaloisField::gf256();
    std::mt19937_64 rng(99);
    int full = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t)
        if (ncmix::rank(random_matrix(12, 10, rng), gf) == 10) ++full;
    // deficiency is O(1/q) per excess dimension
    REQUIRE(full >= trials * (1.0 - 10.0 / 256.0));
}

TEST_CASE("solve_for_source on an identity system returns the payload") {
    const GaloisField& gf = GaloisField::gf256();
    CoeffMatrix id(3, 3);
    for (int i = 0; i < 3; ++i) id.at(i, i) = 1;
    const std::vector<uint8_t> rhs = {11, 22, 33};
    const auto res = ncmix::solve_for_source(id, rhs, 0, 3, gf);
    REQUIRE(res.feasible);
    REQUIRE(res.symbols == rhs);
}

TEST_CASE("two generic mixed rows decode both single-symbol blocks") {
    const GaloisField& gf = GaloisField::gf256();
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> d(1, 255);
    int decoded = 0;
    for (int t = 0; t < 200; ++t) {
        CoeffMatrix m(2, 2);
        m.at(0, 0) = static_cast<uint8_t>(d(rng));
        m.at(0, 1) = static_cast<uint8_t>(d(rng));
        m.at(1, 0) = static_cast<uint8_t>(d(rng));
        m.at(1, 1) = static_cast<uint8_t>(d(rng));
        const uint8_t x0 = static_cast<uint8_t>(d(rng));
        const uint8_t x1 = static_cast<uint8_t>(d(rng));
        std::vector<uint8_t> rhs = {
            GaloisField::add(gf.mul(m.at(0, 0), x0), gf.mul(m.at(0, 1), x1)),
            GaloisField::add(gf.mul(m.at(1, 0), x0), gf.mul(m.at(1, 1), x1))};
        // determinant decides solvability; check consistency with the solver
        const uint8_t det = GaloisField::add(gf.mul(m.at(0, 0), m.at(1, 1)),
                                             gf.mul(m.at(0, 1), m.at(1, 0)));
        const auto res = ncmix::solve_for_source(m, rhs, 0, 1, gf);
        REQUIRE(res.feasible == (det != 0));
        if (res.feasible) {
            REQUIRE(res.symbols[0] == x0);
            ++decoded;
        }
    }
    REQUIRE(decoded > 190);  // singular draws are O(1/q)
}

TEST_CASE("one mixed row over two unknowns is infeasible") {
    const GaloisField& gf = GaloisField::gf256();
    CoeffMatrix m(1, 2);
    m.at(0, 0) = 7;
    m.at(0, 1) = 9;
    const auto res = ncmix::solve_for_source(m, {42}, 0, 1, gf);
    REQUIRE_FALSE(res.feasible);
}
