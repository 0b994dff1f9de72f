#pragma once
// Bitstring arithmetic and the fast Walsh-Hadamard transform.
//
// A bitstring over {0,1}^{n_q} is stored in the low n_q bits of an unsigned
// integer; qubit i corresponds to bit i (bit 0 = qubit 1 in 1-based prose,
// everything in code is 0-based).

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rps {

using Bits = std::uint32_t; // enough for n_q <= 24 (dense-table memory cap)

inline int hamming_weight(Bits x) { return std::popcount(x); }

inline int hamming_distance(Bits x, Bits y) { return std::popcount(x ^ y); }

inline int parity(Bits x) { return std::popcount(x) & 1; }

inline bool get_bit(Bits x, int i) { return (x >> i) & 1u; }

// Index of the most significant set bit; x must be nonzero.
inline int msb_index(Bits x) {
    if (x == 0) throw std::invalid_argument("msb_index: zero input");
    return 31 - std::countl_zero(x);
}

inline bool is_power_of_two(std::size_t n) { return n && !(n & (n - 1)); }

// In-place unnormalized Walsh-Hadamard transform (butterfly recursion).
// Applying it twice multiplies by the length; pass normalize=true to divide
// by sqrt(length) so the transform is an involution/orthogonal map.
template <typename T>
inline void walsh_hadamard_transform(std::vector<T>& v, bool normalize = false) {
    const std::size_t n = v.size();
    if (!is_power_of_two(n)) throw std::invalid_argument("walsh_hadamard_transform: length not a power of two");
    for (std::size_t h = 1; h < n; h <<= 1) {
        for (std::size_t i = 0; i < n; i += h << 1) {
            for (std::size_t j = i; j < i + h; ++j) {
                T a = v[j], b = v[j + h];
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
    }
    if (normalize) {
        double s = 1.0 / std::sqrt(double(n));
        for (auto& x : v) x = x * s;
    }
}

} // namespace rps
