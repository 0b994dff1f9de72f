#pragma once
// Boolean functions (dense sign table + ANF), random phase states, concepts
// and the relational label oracle b = f(y) xor f(y xor alpha).

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rps/bits.hpp"
#include "rps/rng.hpp"
#include "rps/state.hpp"

namespace rps {

// Hidden function f: {0,1}^{n_q} -> {0,1}. The dense sign table
// c_k = (-1)^{f(k)} is canonical; the ANF monomial set is derived on demand.
struct BooleanFunction {
    int n_q = 0;
    std::vector<std::int8_t> signs; // entries in {+1, -1}

    BooleanFunction() = default;
    BooleanFunction(int nq, std::vector<std::int8_t> s) : n_q(nq), signs(std::move(s)) {
        if (signs.size() != (std::size_t(1) << nq)) throw std::invalid_argument("BooleanFunction: table size");
    }

    int f(Bits k) const { return (1 - signs[k]) / 2; }
    int sign(Bits k) const { return signs[k]; }
    std::size_t dim() const { return signs.size(); }
};

inline BooleanFunction random_function(int n_q, RandomSource& rng, int cap = kMaxQubitsDense) {
    if (n_q < 1 || n_q > cap) throw std::invalid_argument("random_function: n_q exceeds cap");
    std::vector<std::int8_t> s(std::size_t(1) << n_q);
    for (auto& v : s) v = rng.bit() ? std::int8_t(-1) : std::int8_t(1);
    return BooleanFunction(n_q, std::move(s));
}

// |psi_f> = 2^{-n_q/2} sum_k (-1)^{f(k)} |k>
inline StateVector build_phase_state(const BooleanFunction& f) {
    StateVector st(f.n_q);
    double a = 1.0 / std::sqrt(double(st.dim()));
    for (std::size_t k = 0; k < st.dim(); ++k) st.amp[k] = a * double(f.signs[k]);
    return st;
}

// Concept alpha: the final qubit (index n_q-1) is the control and its bit is
// always set.
struct Concept {
    int n_q = 0;
    Bits alpha = 0;

    Concept() = default;
    Concept(int nq, Bits a) : n_q(nq), alpha(a) {
        if (!get_bit(a, nq - 1)) throw std::invalid_argument("Concept: final bit of alpha must be 1");
        if (a >= (Bits(1) << nq)) throw std::invalid_argument("Concept: alpha out of range");
    }

    int weight() const { return hamming_weight(alpha); }
};

// Label oracle. y must follow the (y', 0) convention: final bit clear.
inline int target_bit(const BooleanFunction& f, Bits y, const Concept& alpha) {
    if (get_bit(y, f.n_q - 1)) throw std::invalid_argument("target_bit: y must have final bit 0");
    return f.f(y) ^ f.f(y ^ alpha.alpha);
}

// ANF via the GF(2) Moebius transform (an involution). Monomials are encoded
// as Bits masks and returned in increasing mask order for determinism.
inline std::vector<std::uint8_t> anf_table_from_dense(const BooleanFunction& f) {
    std::vector<std::uint8_t> w(f.dim());
    for (std::size_t k = 0; k < f.dim(); ++k) w[k] = std::uint8_t(f.f(Bits(k)));
    for (std::size_t h = 1; h < w.size(); h <<= 1)
        for (std::size_t i = 0; i < w.size(); i += h << 1)
            for (std::size_t j = i; j < i + h; ++j)
                w[j + h] ^= w[j];
    return w;
}

inline std::vector<Bits> anf_from_dense(const BooleanFunction& f) {
    auto w = anf_table_from_dense(f);
    std::vector<Bits> monomials;
    for (std::size_t e = 0; e < w.size(); ++e)
        if (w[e]) monomials.push_back(Bits(e));
    return monomials;
}

inline BooleanFunction dense_from_anf(int n_q, const std::vector<Bits>& monomials) {
    std::vector<std::uint8_t> w(std::size_t(1) << n_q, 0);
    for (Bits e : monomials) {
        if (e >= w.size()) throw std::invalid_argument("dense_from_anf: monomial out of range");
        w[e] ^= 1;
    }
    // The Moebius transform is its own inverse over GF(2).
    for (std::size_t h = 1; h < w.size(); h <<= 1)
        for (std::size_t i = 0; i < w.size(); i += h << 1)
            for (std::size_t j = i; j < i + h; ++j)
                w[j + h] ^= w[j];
    std::vector<std::int8_t> s(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) s[k] = w[k] ? std::int8_t(-1) : std::int8_t(1);
    return BooleanFunction(n_q, std::move(s));
}

// Optional source of computational-basis states (the 1/poly admixture some
// protocols use to expose alpha through data). Not exercised by the main
// pipelines; provided for completeness.
inline StateVector basis_state_source(int n_q, RandomSource& rng) {
    return basis_state(n_q, Bits(rng.below(std::uint64_t(1) << n_q)));
}

} // namespace rps
