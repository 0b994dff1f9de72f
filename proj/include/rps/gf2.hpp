#pragma once
// Bit-packed GF(2) vectors/matrices and forced-pivot Gaussian elimination.
//
// Systems can have 2^{n_q} columns (one per monomial), so rows are packed
// into 64-bit words and elimination works word-at-a-time.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rps/bits.hpp"

namespace rps {

class Gf2Matrix {
public:
    Gf2Matrix() : n_cols_(0), wpr_(0) {}
    explicit Gf2Matrix(std::size_t n_cols)
        : n_cols_(n_cols), wpr_((n_cols + 63) / 64) {
        if (n_cols == 0) throw std::invalid_argument("Gf2Matrix: zero columns");
    }

    std::size_t n_rows() const { return wpr_ ? words_.size() / wpr_ : 0; }
    std::size_t n_cols() const { return n_cols_; }
    std::size_t words_per_row() const { return wpr_; }

    // Appends an all-zero row and returns its index.
    std::size_t add_row() {
        words_.resize(words_.size() + wpr_, 0);
        return n_rows() - 1;
    }

    void set(std::size_t r, std::size_t c, bool v) {
        std::uint64_t& w = words_[r * wpr_ + c / 64];
        std::uint64_t m = std::uint64_t(1) << (c % 64);
        w = v ? (w | m) : (w & ~m);
    }
    bool get(std::size_t r, std::size_t c) const {
        return (words_[r * wpr_ + c / 64] >> (c % 64)) & 1u;
    }

    const std::uint64_t* row(std::size_t r) const { return words_.data() + r * wpr_; }
    std::uint64_t* row(std::size_t r) { return words_.data() + r * wpr_; }

    static void xor_rows(std::uint64_t* dst, const std::uint64_t* src, std::size_t words) {
        for (std::size_t i = 0; i < words; ++i) dst[i] ^= src[i];
    }

    static bool row_is_zero(const std::uint64_t* r, std::size_t words) {
        for (std::size_t i = 0; i < words; ++i) if (r[i]) return false;
        return true;
    }

    // Index of lowest set bit in a row, or -1 if zero.
    static long first_set(const std::uint64_t* r, std::size_t words) {
        for (std::size_t i = 0; i < words; ++i)
            if (r[i]) return long(i * 64 + std::countr_zero(r[i]));
        return -1;
    }

    static int dot_parity(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < words; ++i) acc ^= a[i] & b[i];
        return std::popcount(acc) & 1;
    }

private:
    std::size_t n_cols_;
    std::size_t wpr_;
    std::vector<std::uint64_t> words_;
};

struct Gf2Solution {
    std::vector<std::uint8_t> coeffs;        // one bit per column; unresolved columns are 0
    std::vector<std::uint8_t> pivoted;       // 1 if a pivot landed on this column
    std::vector<std::size_t> inconsistent_rows; // rows discarded as contradicting earlier rows
    std::size_t rank = 0;
};

// Forward elimination honoring the caller's row order (rows must already be
// sorted by priority: earlier rows win conflicts). Each incoming row is
// reduced by the pivots accumulated so far; a nonzero remainder forces a new
// pivot at its first set column, a zero remainder with rhs=1 marks the row
// inconsistent. Unresolved (pivot-free) columns default to coefficient 0.
inline Gf2Solution gf2_eliminate(const Gf2Matrix& system, const std::vector<std::uint8_t>& rhs) {
    const std::size_t n = system.n_rows();
    if (n == 0) throw std::invalid_argument("gf2_eliminate: empty system");
    if (rhs.size() != n) throw std::invalid_argument("gf2_eliminate: rhs size mismatch");

    const std::size_t cols = system.n_cols();
    const std::size_t wpr = system.words_per_row();

    Gf2Matrix echelon(cols);
    std::vector<std::uint8_t> ech_rhs;
    std::vector<long> pivot_col_of_row; // parallel to echelon rows
    std::vector<long> pivot_row_of_col(cols, -1);

    Gf2Solution out;
    out.coeffs.assign(cols, 0);
    out.pivoted.assign(cols, 0);

    std::vector<std::uint64_t> work(wpr);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < wpr; ++i) work[i] = system.row(r)[i];
        std::uint8_t b = rhs[r] & 1;
        // Reduce against existing pivots, scanning set bits low to high. A
        // pivot row has no bits below its pivot column, so one pass suffices.
        for (std::size_t wi = 0; wi < wpr; ++wi) {
            std::uint64_t skip = 0; // columns in this word already inspected and left set
            while (std::uint64_t w = work[wi] & ~skip) {
                std::size_t off = std::size_t(std::countr_zero(w));
                std::size_t c = wi * 64 + off;
                long pr = pivot_row_of_col[c];
                if (pr < 0) {
                    skip |= std::uint64_t(1) << off;
                    continue;
                }
                Gf2Matrix::xor_rows(work.data(), echelon.row(std::size_t(pr)), wpr);
                b ^= ech_rhs[std::size_t(pr)];
            }
        }
        long lead = Gf2Matrix::first_set(work.data(), wpr);
        if (lead < 0) {
            if (b) out.inconsistent_rows.push_back(r);
            continue;
        }
        std::size_t er = echelon.add_row();
        for (std::size_t i = 0; i < wpr; ++i) echelon.row(er)[i] = work[i];
        ech_rhs.push_back(b);
        pivot_col_of_row.push_back(lead);
        pivot_row_of_col[std::size_t(lead)] = long(er);
        out.pivoted[std::size_t(lead)] = 1;
        ++out.rank;
    }

    // Back-substitution: pivot columns descending; free columns stay 0.
    std::vector<std::uint64_t> sol(wpr, 0);
    std::vector<std::pair<long, std::size_t>> order; // (pivot col, echelon row)
    order.reserve(pivot_col_of_row.size());
    for (std::size_t i = 0; i < pivot_col_of_row.size(); ++i)
        order.emplace_back(pivot_col_of_row[i], i);
    std::sort(order.begin(), order.end(), [](auto& a, auto& b) { return a.first > b.first; });
    for (auto& [pc, er] : order) {
        int v = ech_rhs[er] ^ Gf2Matrix::dot_parity(echelon.row(er), sol.data(), wpr);
        // dot above counted pivot column too, but sol bit there is still 0.
        if (v) sol[std::size_t(pc) / 64] |= std::uint64_t(1) << (std::size_t(pc) % 64);
    }
    for (std::size_t c = 0; c < cols; ++c)
        out.coeffs[c] = std::uint8_t((sol[c / 64] >> (c % 64)) & 1u);
    return out;
}

} // namespace rps
