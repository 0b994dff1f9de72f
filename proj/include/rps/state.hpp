#pragma once
// Dense statevector container and computational-basis sampling.

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rps/bits.hpp"
#include "rps/rng.hpp"

namespace rps {

using cplx = std::complex<double>;

// Hard memory cap for dense representations; configurable caps downstream
// must stay at or below this.
inline constexpr int kMaxQubitsDense = 24;

struct StateVector {
    int n_q = 0;
    std::vector<cplx> amp;

    StateVector() = default;
    explicit StateVector(int nq) : n_q(nq), amp(std::size_t(1) << nq, cplx(0.0, 0.0)) {
        if (nq < 1 || nq > kMaxQubitsDense) throw std::invalid_argument("StateVector: n_q out of range");
    }

    std::size_t dim() const { return amp.size(); }

    double norm_sq() const {
        double s = 0.0;
        for (const auto& a : amp) s += std::norm(a);
        return s;
    }

    void normalize() {
        double n = std::sqrt(norm_sq());
        if (n <= 0.0) throw std::runtime_error("StateVector: zero norm");
        double inv = 1.0 / n;
        for (auto& a : amp) a *= inv;
    }
};

inline StateVector basis_state(int n_q, Bits k) {
    StateVector s(n_q);
    s.amp[k] = 1.0;
    return s;
}

// i.i.d. Born-rule draws from |amplitude|^2 via inverse-CDF sampling.
inline std::vector<Bits> sample_measurement(const StateVector& state, std::size_t shots, RandomSource& rng) {
    const std::size_t n = state.dim();
    std::vector<double> cdf(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) { acc += std::norm(state.amp[i]); cdf[i] = acc; }
    std::vector<Bits> out;
    out.reserve(shots);
    for (std::size_t s = 0; s < shots; ++s) {
        double u = rng.uniform() * acc;
        std::size_t lo = 0, hi = n - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (cdf[mid] > u) hi = mid; else lo = mid + 1;
        }
        out.push_back(Bits(lo));
    }
    return out;
}

// Readout error: independent bit flips with probability eps_r.
inline Bits apply_readout_flips(Bits outcome, int n_q, double eps_r, RandomSource& rng) {
    if (eps_r < 0.0 || eps_r > 1.0) throw std::invalid_argument("apply_readout_flips: eps_r out of [0,1]");
    for (int i = 0; i < n_q; ++i)
        if (rng.bernoulli(eps_r)) outcome ^= Bits(1) << i;
    return outcome;
}

} // namespace rps
