#pragma once
// Dense density matrices at validation scale: exact channel action and
// conversions. Used by oracle checks and the explicit shadow estimator.

#include <stdexcept>
#include <vector>

#include "rps/linalg.hpp"
#include "rps/noise.hpp"
#include "rps/state.hpp"

namespace rps {

struct DensityMatrix {
    int n_q = 0;
    std::vector<cplx> m; // row-major, dim x dim

    DensityMatrix() = default;
    explicit DensityMatrix(int nq) : n_q(nq), m((std::size_t(1) << nq) * (std::size_t(1) << nq), cplx(0)) {
        if (nq < 1 || nq > 12) throw std::invalid_argument("DensityMatrix: n_q out of range (dense cap 12)");
    }

    std::size_t dim() const { return std::size_t(1) << n_q; }
    cplx& at(std::size_t i, std::size_t j) { return m[i * dim() + j]; }
    const cplx& at(std::size_t i, std::size_t j) const { return m[i * dim() + j]; }

    double trace_real() const {
        double t = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) t += at(i, i).real();
        return t;
    }
};

inline DensityMatrix density_from_state(const StateVector& s) {
    DensityMatrix r(s.n_q);
    const std::size_t d = r.dim();
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            r.m[i * d + j] = s.amp[i] * std::conj(s.amp[j]);
    return r;
}

// rho -> sum_j (K_j on qubit q) rho (K_j on qubit q)^dagger
inline void apply_channel_qubit(DensityMatrix& rho, int q, const std::vector<Mat2>& ks) {
    const std::size_t d = rho.dim();
    const std::size_t qm = std::size_t(1) << q;
    std::vector<cplx> out(d * d, cplx(0));
    for (const Mat2& k : ks) {
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                // (K rho K^dag)_{ij} = sum_{a,b} K[i_q][a] rho_{i(a), j(b)} conj(K[j_q][b])
                int iq = int((i & qm) != 0), jq = int((j & qm) != 0);
                cplx acc = 0.0;
                for (int a = 0; a < 2; ++a) {
                    cplx kia = k[iq][a];
                    if (kia == cplx(0)) continue;
                    std::size_t ia = a ? (i | qm) : (i & ~qm);
                    for (int b = 0; b < 2; ++b) {
                        cplx kjb = k[jq][b];
                        if (kjb == cplx(0)) continue;
                        std::size_t jb = b ? (j | qm) : (j & ~qm);
                        acc += kia * rho.m[ia * d + jb] * std::conj(kjb);
                    }
                }
                out[i * d + j] += acc;
            }
        }
    }
    rho.m = std::move(out);
}

// Product channel: the same single-qubit channel on every qubit.
inline DensityMatrix apply_channel_all(const DensityMatrix& rho, const NoiseChannelSpec& spec) {
    DensityMatrix out = rho;
    auto ks = kraus_operators(spec);
    for (int q = 0; q < rho.n_q; ++q) apply_channel_qubit(out, q, ks);
    return out;
}

} // namespace rps
