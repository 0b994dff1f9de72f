#pragma once
// Local-Clifford classical shadows (explicit protocol) and a task-averaged
// Gaussian surrogate for the reconstructed density matrix. The surrogate
// draws structured fluctuations whose covariance is diagonalized by the
// Walsh-Hadamard transform, so sampling costs O(N log N) per mask sector
// instead of a dense Cholesky factorization.

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rps/bits.hpp"
#include "rps/boolean_function.hpp"
#include "rps/density.hpp"
#include "rps/linalg.hpp"
#include "rps/statevector_ops.hpp"

namespace rps {

// ---------------------------------------------------------------------------
// Explicit shadows
// ---------------------------------------------------------------------------

// One randomized-measurement shot. Each qubit carries a label basis*2 + bit
// with basis 0 = Z, 1 = X, 2 = Y, identifying one of the six single-qubit
// stabilizer states |s> (the post-selected eigenstate U^dag |b>).
struct ShadowSnapshot {
    int n_q = 0;
    std::vector<std::uint8_t> labels;
};

// 3|s><s| - I for the labeled stabilizer state; each factor has trace 1.
inline Mat2 snapshot_factor(std::uint8_t label) {
    if (label > 5) throw std::invalid_argument("snapshot_factor: bad label");
    const int basis = label >> 1;
    const double sg = (label & 1) ? -1.0 : 1.0;
    switch (basis) {
        case 0: // Z: |0>, |1>
            return (label & 1) ? Mat2{{{-1.0, 0.0}, {0.0, 2.0}}} : Mat2{{{2.0, 0.0}, {0.0, -1.0}}};
        case 1: // X: |+>, |->
            return Mat2{{{0.5, 1.5 * sg}, {1.5 * sg, 0.5}}};
        default: // Y: |+i>, |-i>
            return Mat2{{{0.5, cplx(0.0, -1.5 * sg)}, {cplx(0.0, 1.5 * sg), 0.5}}};
    }
}

// Random per-qubit Pauli basis, rotate, one computational-basis shot.
inline ShadowSnapshot shadow_snapshot(const StateVector& state, RandomSource& rng) {
    StateVector s = state;
    ShadowSnapshot snap;
    snap.n_q = s.n_q;
    snap.labels.resize(s.n_q);
    std::vector<int> basis(s.n_q);
    // H S^dag maps the Y eigenbasis onto the computational basis.
    static const double r = 0.70710678118654752440;
    const Mat2 hs = {{{r, cplx(0.0, -r)}, {r, cplx(0.0, r)}}};
    for (int q = 0; q < s.n_q; ++q) {
        basis[q] = int(rng.below(3));
        if (basis[q] == 1) apply_h(s, q);
        else if (basis[q] == 2) apply_single_qubit(s, q, hs);
    }
    Bits b = sample_measurement(s, 1, rng)[0];
    for (int q = 0; q < s.n_q; ++q)
        snap.labels[q] = std::uint8_t(basis[q] * 2 + get_bit(b, q));
    return snap;
}

// Dense tensor product of the per-qubit factors (validation scale).
inline DensityMatrix snapshot_density(const ShadowSnapshot& snap) {
    if (snap.n_q < 1 || snap.n_q > 8) throw std::invalid_argument("snapshot_density: n_q cap is 8");
    DensityMatrix out(snap.n_q);
    std::vector<cplx> acc{cplx(1.0)};
    std::size_t dim = 1;
    // factor for qubit q must occupy bit q, so higher qubits go to higher bits
    for (int q = 0; q < snap.n_q; ++q) {
        Mat2 m = snapshot_factor(snap.labels[q]);
        std::vector<cplx> next(4 * dim * dim);
        const std::size_t nd = 2 * dim;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (std::size_t i = 0; i < dim; ++i)
                    for (std::size_t j = 0; j < dim; ++j)
                        next[(a * dim + i) * nd + (b * dim + j)] = m[a][b] * acc[i * dim + j];
        acc = std::move(next);
        dim = nd;
    }
    out.m = std::move(acc);
    return out;
}

// Mean of n_c inverted snapshots; `gen(shot)` supplies the (possibly noisy)
// state for each shot, so trajectory ensembles plug in directly.
template <class StateGen>
inline DensityMatrix explicit_shadow_estimate_gen(int n_q, std::size_t n_c, StateGen&& gen,
                                                  RandomSource& rng) {
    if (n_q < 1 || n_q > 8) throw std::invalid_argument("explicit_shadow_estimate: n_q cap is 8");
    if (n_c < 1) throw std::invalid_argument("explicit_shadow_estimate: n_c < 1");
    DensityMatrix acc(n_q);
    for (std::size_t k = 0; k < n_c; ++k) {
        StateVector st = gen(k);
        auto snap = shadow_snapshot(st, rng);
        auto dm = snapshot_density(snap);
        for (std::size_t i = 0; i < acc.m.size(); ++i) acc.m[i] += dm.m[i];
    }
    const double inv = 1.0 / double(n_c);
    for (auto& v : acc.m) v *= inv;
    return acc;
}

inline DensityMatrix explicit_shadow_estimate(const StateVector& state, std::size_t n_c,
                                              RandomSource& rng) {
    return explicit_shadow_estimate_gen(state.n_q, n_c, [&](std::size_t) { return state; }, rng);
}

// Task-averaged variance of one reconstructed element at Hamming distance w.
inline double element_variance(int n_q, int w, std::size_t n_c) {
    if (w < 0 || w > n_q) throw std::invalid_argument("element_variance: w out of range");
    if (n_c < 1) throw std::invalid_argument("element_variance: n_c < 1");
    return (std::pow(1.5, w) - std::pow(4.0, -n_q)) / double(n_c);
}

// ---------------------------------------------------------------------------
// Gaussian surrogate
// ---------------------------------------------------------------------------

enum class SurrogateMode { sectors, full };

// Row anchored at y^alpha, column anchored at y, the diagonal, and (in full
// mode) the complete Hermitian matrix. n_c = 0 marks an exact-mean sample.
struct SurrogateSectorSample {
    int n_q = 0;
    Bits y = 0;
    Bits alpha_mask = 0;
    std::size_t n_c = 0;
    std::vector<cplx> row; // r_t = rho(y^alpha, t)
    std::vector<cplx> col; // c_t = rho(t, y)
    std::vector<double> diag;
    bool has_full = false;
    DensityMatrix full;
};

namespace detail {

// Index-preserving damping of one off-diagonal element: gamma_act on each
// differing qubit, the y-resolved passive factor on each agreeing qubit.
inline double offdiag_damping(const AttenuationFactors& a, int n_q, Bits n, Bits m) {
    const int w = hamming_distance(n, m);
    const int ones = hamming_weight(n & m);
    const int zeros = n_q - w - ones;
    return std::pow(a.gamma_act, w) * std::pow(a.gamma_p1, ones) * std::pow(a.gamma_p0, zeros);
}

// Exact noisy diagonal: uniform for unital channels; for relaxation the
// per-qubit populations shift to (1+eps)/2 and (1-eps)/2, preserving the
// unit trace exactly.
inline double diagonal_mean(const NoiseChannelSpec& prep, int n_q, Bits n) {
    if (prep.kind != ChannelKind::relaxation) return std::pow(2.0, -n_q);
    const double q0 = 0.5 * (1.0 + prep.eps_p), q1 = 0.5 * (1.0 - prep.eps_p);
    double p = 1.0;
    for (int i = 0; i < n_q; ++i) p *= get_bit(n, i) ? q1 : q0;
    return p;
}

inline cplx offdiag_mean(const BooleanFunction& f, const AttenuationFactors& a, Bits n, Bits m) {
    return cplx(double(f.sign(n) * f.sign(m)) * std::pow(2.0, -f.n_q) *
                offdiag_damping(a, f.n_q, n, m));
}

// Zero-mean trace-preserving diagonal fluctuation: spectral draw in the
// Walsh-Hadamard eigenbasis with the trace mode pinned to zero.
inline std::vector<double> diagonal_fluctuation(int n_q, std::size_t n_c, RandomSource& rng) {
    const std::size_t d = std::size_t(1) << n_q;
    std::vector<double> g(d, 0.0);
    for (std::size_t k = 1; k < d; ++k) {
        int w = hamming_weight(Bits(k));
        double lam = std::pow(1.5, w) * std::pow(0.5, n_q - w);
        g[k] = rng.normal() * std::sqrt(lam / double(n_c));
    }
    walsh_hadamard_transform(g);
    const double scale = std::pow(2.0, -0.5 * n_q);
    for (auto& x : g) x *= scale;
    return g;
}

// Proper complex spectral draw over one (mask, active-assignment) block:
// covariance (3/2)^{|delta|} (-1/2)^{w(u,u')} - 4^{-n_q} I over the m
// passive bits. All eigenvalues are strictly positive (asserted).
inline std::vector<cplx> block_fluctuation(int n_q, int delta_weight, int m, std::size_t n_c,
                                           RandomSource& rng) {
    const std::size_t dm = std::size_t(1) << m;
    const double shift = std::pow(4.0, -n_q);
    std::vector<cplx> g(dm);
    for (std::size_t s = 0; s < dm; ++s) {
        int ws = hamming_weight(Bits(s));
        double lam = std::pow(1.5, delta_weight + ws) * std::pow(0.5, m - ws) - shift;
        assert(lam > 0.0 && "surrogate block eigenvalue must be positive");
        double sd = std::sqrt(0.5 * lam / double(n_c));
        g[s] = cplx(rng.normal() * sd, rng.normal() * sd);
    }
    walsh_hadamard_transform(g);
    const double scale = std::pow(2.0, -0.5 * m);
    for (auto& x : g) x *= scale;
    return g;
}

inline cplx proper_normal(double var, RandomSource& rng) {
    double sd = std::sqrt(0.5 * var);
    return {rng.normal() * sd, rng.normal() * sd};
}

inline SurrogateSectorSample build_surrogate(const BooleanFunction& f, const NoiseChannelSpec& prep,
                                             const Concept& alpha, Bits y, std::size_t n_c,
                                             SurrogateMode mode, bool fluctuate, RandomSource& rng) {
    const int n_q = f.n_q;
    if (alpha.n_q != n_q) throw std::invalid_argument("sample_surrogate: n_q mismatch");
    if (get_bit(y, n_q - 1)) throw std::invalid_argument("sample_surrogate: y final bit must be 0");
    const int cap = mode == SurrogateMode::full ? 12 : 16;
    if (n_q > cap) throw std::invalid_argument("sample_surrogate: n_q exceeds mode cap");
    if (fluctuate && n_c < 1) throw std::invalid_argument("sample_surrogate: n_c < 1");

    const std::size_t d = std::size_t(1) << n_q;
    const Bits ya = y ^ alpha.alpha;
    const AttenuationFactors att = attenuation(prep);

    SurrogateSectorSample out;
    out.n_q = n_q;
    out.y = y;
    out.alpha_mask = alpha.alpha;
    out.n_c = fluctuate ? n_c : 0;
    out.diag.resize(d);
    for (Bits t = 0; t < d; ++t) out.diag[t] = diagonal_mean(prep, n_q, t);
    if (fluctuate) {
        auto fl = diagonal_fluctuation(n_q, n_c, rng);
        for (std::size_t i = 0; i < d; ++i) out.diag[i] += fl[i];
    }

    if (mode == SurrogateMode::full) {
        out.has_full = true;
        out.full = DensityMatrix(n_q);
        for (Bits t = 0; t < d; ++t) out.full.at(t, t) = out.diag[t];
        for (Bits n = 0; n < d; ++n)
            for (Bits m = n + 1; m < d; ++m) {
                cplx v = offdiag_mean(f, att, n, m);
                out.full.at(n, m) = v;
                out.full.at(m, n) = std::conj(v);
            }
        if (fluctuate) {
            for (Bits delta = 1; delta < d; ++delta) {
                const int h = msb_index(delta);
                const int dw = hamming_weight(delta);
                const int m = n_q - dw;
                const Bits act_wo_h = delta & ~(Bits(1) << h);
                const Bits pass = Bits(d - 1) & ~delta;
                std::vector<int> pass_pos;
                for (int i = 0; i < n_q; ++i)
                    if (get_bit(pass, i)) pass_pos.push_back(i);
                Bits a = 0;
                do {
                    auto z = block_fluctuation(n_q, dw, m, n_c, rng);
                    for (std::size_t u = 0; u < z.size(); ++u) {
                        Bits idx = a;
                        for (int b = 0; b < m; ++b)
                            if ((u >> b) & 1u) idx |= Bits(1) << pass_pos[b];
                        out.full.at(idx, idx ^ delta) += z[u];
                        out.full.at(idx ^ delta, idx) += std::conj(z[u]);
                    }
                    a = (a - act_wo_h) & act_wo_h;
                } while (a != 0);
            }
        }
        out.row.resize(d);
        out.col.resize(d);
        for (Bits t = 0; t < d; ++t) {
            out.row[t] = out.full.at(ya, t);
            out.col[t] = out.full.at(t, y);
        }
        return out;
    }

    // Sector mode: means first.
    out.row.resize(d);
    out.col.resize(d);
    for (Bits t = 0; t < d; ++t) {
        out.row[t] = t == ya ? cplx(out.diag[ya]) : offdiag_mean(f, att, ya, t);
        out.col[t] = t == y ? cplx(out.diag[y]) : offdiag_mean(f, att, t, y);
    }
    if (!fluctuate) return out;

    const double shift = std::pow(4.0, -n_q);
    for (Bits delta = 1; delta < d; ++delta) {
        const int dw = hamming_weight(delta);
        const double var = std::pow(1.5, dw) - shift;
        if (delta == alpha.alpha) {
            // Shared central element rho(y^alpha, y) = r_y = c_{y^alpha}.
            cplx z = proper_normal(var / double(n_c), rng);
            out.row[y] += z;
            out.col[ya] += z;
            continue;
        }
        const int h = msb_index(delta);
        const Bits tr = ya ^ delta; // row index with this mask
        const Bits tc = y ^ delta;  // column index with this mask
        const bool conj1 = get_bit(ya, h);
        const bool conj2 = get_bit(tc, h);
        const Bits n1 = conj1 ? tr : ya;
        const Bits n2 = conj2 ? y : tc;
        double cov = 0.0;
        if ((n1 & delta) == (n2 & delta)) {
            int r = hamming_weight((n1 ^ n2) & ~delta);
            cov = std::pow(1.5, dw) * std::pow(-0.5, r);
        }
        cplx z1 = proper_normal(var / double(n_c), rng);
        cplx z2;
        if (cov == 0.0) {
            z2 = proper_normal(var / double(n_c), rng);
        } else {
            double beta = cov / var;
            double resid = (var - cov * cov / var) / double(n_c);
            z2 = beta * z1 + proper_normal(resid, rng);
        }
        out.row[tr] += conj1 ? std::conj(z1) : z1;
        out.col[tc] += conj2 ? std::conj(z2) : z2;
    }
    // Diagonal anchors override the off-diagonal bookkeeping above.
    out.row[ya] = cplx(out.diag[ya]);
    out.col[y] = cplx(out.diag[y]);
    return out;
}

} // namespace detail

inline SurrogateSectorSample sample_surrogate(const BooleanFunction& f, const NoiseChannelSpec& prep,
                                              const Concept& alpha, Bits y, std::size_t n_c,
                                              SurrogateMode mode, RandomSource& rng) {
    return detail::build_surrogate(f, prep, alpha, y, n_c, mode, true, rng);
}

// Exact-mean sample (the infinite-n_c limit): damped elements, no noise.
inline SurrogateSectorSample surrogate_mean(const BooleanFunction& f, const NoiseChannelSpec& prep,
                                            const Concept& alpha, Bits y, SurrogateMode mode) {
    RandomSource unused(0);
    return detail::build_surrogate(f, prep, alpha, y, 0, mode, false, unused);
}

// ---------------------------------------------------------------------------
// Validation: explicit shadows vs surrogate, trace distance to the truth
// ---------------------------------------------------------------------------

struct SurrogateTruthPoint {
    std::size_t n_c = 0;
    double td_explicit = 0.0;
    double td_surrogate = 0.0;
};

inline std::vector<SurrogateTruthPoint> surrogate_vs_truth_report(
    int n_q, const std::vector<std::size_t>& nc_grid, const NoiseChannelSpec& channel,
    int repetitions, RandomSource rng) {
    if (n_q < 1 || n_q > 6) throw std::invalid_argument("surrogate_vs_truth_report: n_q cap is 6");
    if (repetitions < 1) throw std::invalid_argument("surrogate_vs_truth_report: repetitions < 1");
    for (std::size_t nc : nc_grid)
        if (nc < 1) throw std::invalid_argument("surrogate_vs_truth_report: n_c < 1");

    const std::size_t dim = std::size_t(1) << n_q;
    Concept alpha(n_q, Bits(dim - 1));
    std::vector<SurrogateTruthPoint> out;
    for (std::size_t gi = 0; gi < nc_grid.size(); ++gi) {
        SurrogateTruthPoint pt;
        pt.n_c = nc_grid[gi];
        for (int rep = 0; rep < repetitions; ++rep) {
            RandomSource r = rng.sub(gi * 1000 + rep);
            auto f = random_function(n_q, r);
            auto psi = build_phase_state(f);
            auto truth = channel.eps_p > 0.0
                             ? apply_channel_all(density_from_state(psi), channel)
                             : density_from_state(psi);
            RandomSource shadow_rng = r.sub(1);
            auto est = explicit_shadow_estimate_gen(
                n_q, pt.n_c,
                [&](std::size_t) {
                    StateVector st = psi;
                    if (channel.eps_p > 0.0) sample_kraus_trajectory(st, channel, shadow_rng);
                    return st;
                },
                shadow_rng);
            pt.td_explicit += trace_distance(est.m, truth.m, dim);

            RandomSource surr_rng = r.sub(2);
            auto surr = sample_surrogate(f, channel, alpha, 0, pt.n_c, SurrogateMode::full, surr_rng);
            pt.td_surrogate += trace_distance(surr.full.m, truth.m, dim);
        }
        pt.td_explicit /= repetitions;
        pt.td_surrogate /= repetitions;
        out.push_back(pt);
    }
    return out;
}

} // namespace rps
