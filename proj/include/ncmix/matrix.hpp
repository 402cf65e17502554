#pragma once

// Dense matrices of GF(2^m) coefficients and the elimination routines behind
// rank computation, innovation checks and client-side decoding.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ncmix/gf.hpp"

namespace ncmix {

class CoeffMatrix {
public:
    CoeffMatrix() : rows_(0), cols_(0) {}
    CoeffMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    uint8_t& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    uint8_t at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    uint8_t* row(std::size_t r) { return data_.data() + r * cols_; }
    const uint8_t* row(std::size_t r) const { return data_.data() + r * cols_; }

    void append_row(const std::vector<uint8_t>& v) {
        if (v.size() != cols_) throw std::invalid_argument("append_row: width mismatch");
        data_.insert(data_.end(), v.begin(), v.end());
        ++rows_;
    }

    bool operator==(const CoeffMatrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<uint8_t> data_;
};

// Forward elimination into row echelon form. Column order is left to right
// (source-index order); rows are swapped in place.
inline CoeffMatrix row_echelon(CoeffMatrix m, const GaloisField& gf = GaloisField::gf256()) {
    std::size_t pivot_row = 0;
    for (std::size_t col = 0; col < m.cols() && pivot_row < m.rows(); ++col) {
        std::size_t sel = pivot_row;
        while (sel < m.rows() && m.at(sel, col) == 0) ++sel;
        if (sel == m.rows()) continue;
        if (sel != pivot_row) {
            for (std::size_t c = 0; c < m.cols(); ++c) std::swap(m.at(sel, c), m.at(pivot_row, c));
        }
        const uint8_t pinv = gf.inv(m.at(pivot_row, col));
        for (std::size_t r = pivot_row + 1; r < m.rows(); ++r) {
            const uint8_t f = m.at(r, col);
            if (f == 0) continue;
            const uint8_t scale = gf.mul(f, pinv);
            for (std::size_t c = col; c < m.cols(); ++c) {
                m.at(r, c) = GaloisField::add(m.at(r, c), gf.mul(scale, m.at(pivot_row, c)));
            }
        }
        ++pivot_row;
    }
    return m;
}

inline std::size_t rank(const CoeffMatrix& m, const GaloisField& gf = GaloisField::gf256()) {
    CoeffMatrix e = row_echelon(m, gf);
    std::size_t r = 0;
    for (std::size_t i = 0; i < e.rows(); ++i) {
        const uint8_t* row = e.row(i);
        for (std::size_t c = 0; c < e.cols(); ++c) {
            if (row[c] != 0) {
                ++r;
                break;
            }
        }
    }
    return r;
}

struct SolveResult {
    bool feasible = false;
    std::vector<uint8_t> symbols;  // decoded block, length = block_len
};

// Gauss-Jordan on the augmented system [A | rhs]. A column is decoded when its
// pivot row has no other nonzero entries, i.e. the variable is uniquely
// determined by the received combinations. The target block decodes iff all of
// its columns are determined; extra determined blocks are ignored.
inline SolveResult solve_for_source(const CoeffMatrix& system, const std::vector<uint8_t>& rhs,
                                    std::size_t block_begin, std::size_t block_len,
                                    const GaloisField& gf = GaloisField::gf256()) {
    if (rhs.size() != system.rows()) throw std::invalid_argument("solve_for_source: rhs size mismatch");
    if (block_begin + block_len > system.cols())
        throw std::invalid_argument("solve_for_source: block out of range");

    CoeffMatrix a = system;
    std::vector<uint8_t> y = rhs;
    std::vector<std::size_t> pivot_of_col(a.cols(), SIZE_MAX);

    std::size_t pivot_row = 0;
    for (std::size_t col = 0; col < a.cols() && pivot_row < a.rows(); ++col) {
        std::size_t sel = pivot_row;
        while (sel < a.rows() && a.at(sel, col) == 0) ++sel;
        if (sel == a.rows()) continue;
        if (sel != pivot_row) {
            for (std::size_t c = 0; c < a.cols(); ++c) std::swap(a.at(sel, c), a.at(pivot_row, c));
            std::swap(y[sel], y[pivot_row]);
        }
        const uint8_t pinv = gf.inv(a.at(pivot_row, col));
        for (std::size_t c = 0; c < a.cols(); ++c) a.at(pivot_row, c) = gf.mul(a.at(pivot_row, c), pinv);
        y[pivot_row] = gf.mul(y[pivot_row], pinv);
        for (std::size_t r = 0; r < a.rows(); ++r) {
            if (r == pivot_row) continue;
            const uint8_t f = a.at(r, col);
            if (f == 0) continue;
            for (std::size_t c = 0; c < a.cols(); ++c) {
                a.at(r, c) = GaloisField::add(a.at(r, c), gf.mul(f, a.at(pivot_row, c)));
            }
            y[r] = GaloisField::add(y[r], gf.mul(f, y[pivot_row]));
        }
        pivot_of_col[col] = pivot_row;
        ++pivot_row;
    }

    SolveResult res;
    res.symbols.assign(block_len, 0);
    for (std::size_t j = 0; j < block_len; ++j) {
        const std::size_t col = block_begin + j;
        const std::size_t pr = pivot_of_col[col];
        if (pr == SIZE_MAX) return SolveResult{};
        for (std::size_t c = 0; c < a.cols(); ++c) {
            if (c != col && a.at(pr, c) != 0) return SolveResult{};
        }
        res.symbols[j] = y[pr];
    }
    res.feasible = true;
    return res;
}

}  // namespace ncmix
