#pragma once

// Arithmetic over GF(2^m) for m in {4, 8}. Addition is XOR; multiplication
// goes through log/antilog tables built once per field instance from a fixed
// irreducible polynomial (0x13 for m=4, 0x11b for m=8). The 0x11b field is
// the AES field, which has plenty of published tables to cross-check against.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ncmix {

class GaloisField {
public:
    explicit GaloisField(int m) : m_(m) {
        if (m == 4) {
            poly_ = 0x13;
        } else if (m == 8) {
            poly_ = 0x11b;
        } else {
            throw std::invalid_argument("GaloisField: m must be 4 or 8");
        }
        q_ = 1 << m;
        build_tables();
    }

    int m() const { return m_; }
    int size() const { return q_; }
    int order() const { return q_ - 1; }
    unsigned polynomial() const { return poly_; }

    static uint8_t add(uint8_t a, uint8_t b) { return a ^ b; }
    static uint8_t sub(uint8_t a, uint8_t b) { return a ^ b; }

    uint8_t mul(uint8_t a, uint8_t b) const {
        if (a == 0 || b == 0) return 0;
        return exp_[log_[a] + log_[b]];
    }

    uint8_t inv(uint8_t a) const {
        if (a == 0) throw std::domain_error("GaloisField: inverse of zero");
        return exp_[order() - log_[a]];
    }

    uint8_t div(uint8_t a, uint8_t b) const {
        if (b == 0) throw std::domain_error("GaloisField: division by zero");
        if (a == 0) return 0;
        return exp_[log_[a] + order() - log_[b]];
    }

    uint8_t pow(uint8_t a, uint64_t e) const {
        if (e == 0) return 1;
        if (a == 0) return 0;
        return exp_[static_cast<int>((static_cast<uint64_t>(log_[a]) * e) % order())];
    }

    // Shared instances; construction is thread-safe and happens before first use.
    static const GaloisField& gf256() {
        static const GaloisField f(8);
        return f;
    }
    static const GaloisField& gf16() {
        static const GaloisField f(4);
        return f;
    }

private:
    // Multiply by the generator via shift-and-reduce; used only to seed the tables.
    uint8_t mul_slow(uint8_t a, uint8_t b) const {
        unsigned acc = 0;
        unsigned aa = a;
        for (int i = 0; i < m_; ++i) {
            if (b & (1u << i)) acc ^= aa << i;
        }
        for (int bit = 2 * m_ - 2; bit >= m_; --bit) {
            if (acc & (1u << bit)) acc ^= poly_ << (bit - m_);
        }
        return static_cast<uint8_t>(acc);
    }

    void build_tables() {
        // x is primitive for 0x13; x+1 (= 3) is primitive for 0x11b.
        const uint8_t gen = (m_ == 8) ? 3 : 2;
        exp_.assign(2 * q_, 0);
        log_.assign(q_, 0);
        uint8_t v = 1;
        for (int i = 0; i < order(); ++i) {
            exp_[i] = v;
            log_[v] = i;
            v = mul_slow(v, gen);
        }
        if (v != 1) throw std::logic_error("GaloisField: generator is not primitive");
        for (int i = order(); i < 2 * q_; ++i) exp_[i] = exp_[i - order()];
    }

    int m_;
    int q_;
    unsigned poly_;
    std::vector<uint8_t> exp_;
    std::vector<int> log_;
};

}  // namespace ncmix
