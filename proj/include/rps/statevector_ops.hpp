#pragma once
// Gate application and stochastic Kraus unraveling on dense statevectors.

#include <cassert>
#include <cstdint>
#include <stdexcept>

#include "rps/noise.hpp"
#include "rps/state.hpp"

namespace rps {

enum class GateKind { H, X, CNOT, SWAP, Idle };

// A circuit element. Idle placeholders carry only noise (no unitary action);
// gate_eps is the depolarizing strength applied stochastically after the
// ideal unitary in trajectory mode (0 = ideal gate).
struct GateOp {
    GateKind kind = GateKind::H;
    int q0 = 0;         // target / first qubit
    int q1 = -1;        // control (CNOT) or second qubit (SWAP)
    double duration = 0.0;
    double gate_eps = 0.0;
    IdleNoiseSpec idle; // only meaningful for Idle

    static GateOp h(int q) { return {GateKind::H, q, -1, 0.0, 0.0, {}}; }
    static GateOp x(int q) { return {GateKind::X, q, -1, 0.0, 0.0, {}}; }
    static GateOp cnot(int control, int target) { return {GateKind::CNOT, target, control, 0.0, 0.0, {}}; }
    static GateOp swap(int a, int b) { return {GateKind::SWAP, a, b, 0.0, 0.0, {}}; }
};

namespace detail {
inline void check_qubit(const StateVector& s, int q) {
    if (q < 0 || q >= s.n_q) throw std::out_of_range("gate qubit index out of range");
}
} // namespace detail

inline void apply_single_qubit(StateVector& s, int q, const Mat2& m) {
    detail::check_qubit(s, q);
    const std::size_t stride = std::size_t(1) << q;
    const std::size_t dim = s.dim();
    for (std::size_t base = 0; base < dim; base += stride << 1) {
        for (std::size_t i = base; i < base + stride; ++i) {
            cplx a0 = s.amp[i], a1 = s.amp[i + stride];
            s.amp[i] = m[0][0] * a0 + m[0][1] * a1;
            s.amp[i + stride] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

inline void apply_h(StateVector& s, int q) {
    static const double r = 0.70710678118654752440;
    apply_single_qubit(s, q, Mat2{{{r, r}, {r, -r}}});
}

inline void apply_x(StateVector& s, int q) {
    detail::check_qubit(s, q);
    const std::size_t stride = std::size_t(1) << q;
    for (std::size_t base = 0; base < s.dim(); base += stride << 1)
        for (std::size_t i = base; i < base + stride; ++i)
            std::swap(s.amp[i], s.amp[i + stride]);
}

// pauli: 1 = X, 2 = Y, 3 = Z
inline void apply_pauli(StateVector& s, int q, int pauli) {
    switch (pauli) {
        case 0: return;
        case 1: apply_x(s, q); return;
        case 2: apply_single_qubit(s, q, Mat2{{{0.0, cplx(0, -1)}, {cplx(0, 1), 0.0}}}); return;
        case 3: apply_single_qubit(s, q, Mat2{{{1.0, 0.0}, {0.0, -1.0}}}); return;
    }
    throw std::invalid_argument("apply_pauli: bad index");
}

inline void apply_cnot(StateVector& s, int control, int target) {
    detail::check_qubit(s, control);
    detail::check_qubit(s, target);
    if (control == target) throw std::invalid_argument("apply_cnot: equal qubits");
    const std::size_t cm = std::size_t(1) << control;
    const std::size_t tm = std::size_t(1) << target;
    for (std::size_t i = 0; i < s.dim(); ++i)
        if ((i & cm) && !(i & tm)) std::swap(s.amp[i], s.amp[i | tm]);
}

inline void apply_swap(StateVector& s, int a, int b) {
    detail::check_qubit(s, a);
    detail::check_qubit(s, b);
    if (a == b) throw std::invalid_argument("apply_swap: equal qubits");
    const std::size_t am = std::size_t(1) << a;
    const std::size_t bm = std::size_t(1) << b;
    for (std::size_t i = 0; i < s.dim(); ++i)
        if ((i & am) && !(i & bm)) std::swap(s.amp[i ^ am ^ bm], s.amp[i]);
}

// Ideal (noise-free) action only; Idle placeholders do nothing here.
inline void apply_gate(StateVector& s, const GateOp& g) {
    switch (g.kind) {
        case GateKind::H: apply_h(s, g.q0); break;
        case GateKind::X: apply_x(s, g.q0); break;
        case GateKind::CNOT: apply_cnot(s, g.q1, g.q0); break;
        case GateKind::SWAP: apply_swap(s, g.q0, g.q1); break;
        case GateKind::Idle: break;
    }
}

// Per-qubit Kraus-index record of one preparation-noise trajectory; two bits
// per qubit (up to four Kraus operators), so n_q <= 24 fits comfortably.
using JumpCode = std::uint64_t;

inline int jump_index(JumpCode code, int q) { return int((code >> (2 * q)) & 3u); }

// Applies one preparation-noise trajectory: for each qubit, draw Kraus index
// j with probability ||K_j psi||^2, apply it and renormalize. Returns the
// jump code. Exact unraveling: averaging over trajectories reproduces the
// channel.
inline JumpCode sample_kraus_trajectory(StateVector& s, const NoiseChannelSpec& channel, RandomSource& rng) {
    const auto ks = kraus_operators(channel);
    JumpCode code = 0;
    for (int q = 0; q < s.n_q; ++q) {
        const std::size_t stride = std::size_t(1) << q;
        double p[4] = {0, 0, 0, 0};
        for (std::size_t base = 0; base < s.dim(); base += stride << 1) {
            for (std::size_t i = base; i < base + stride; ++i) {
                cplx a0 = s.amp[i], a1 = s.amp[i + stride];
                for (std::size_t j = 0; j < ks.size(); ++j) {
                    p[j] += std::norm(ks[j][0][0] * a0 + ks[j][0][1] * a1);
                    p[j] += std::norm(ks[j][1][0] * a0 + ks[j][1][1] * a1);
                }
            }
        }
        double u = rng.uniform();
        std::size_t pick = ks.size() - 1;
        double acc = 0.0;
        for (std::size_t j = 0; j < ks.size(); ++j) {
            acc += p[j];
            if (u < acc) { pick = j; break; }
        }
        assert(p[pick] > 0.0 && "probability-0 Kraus selected");
        const double inv = 1.0 / std::sqrt(p[pick]);
        Mat2 m = ks[pick];
        for (auto& row : m) for (auto& e : row) e *= inv;
        apply_single_qubit(s, q, m);
        code |= JumpCode(pick) << (2 * q);
    }
    return code;
}

// Idle-placeholder noise on one qubit: amplitude damping then phase damping
// over the same interval, each as a stochastic Kraus draw.
inline void apply_idle_noise(StateVector& s, int q, const IdleNoiseSpec& idle, RandomSource& rng) {
    auto [p_amp, p_phase] = idle_probabilities(idle);
    if (p_amp > 0.0) {
        // Amplitude damping Kraus: K0 = diag(1, sqrt(1-p)), K1 = sqrt(p)|0><1|.
        NoiseChannelSpec relax(ChannelKind::relaxation, p_amp);
        auto ks = kraus_operators(relax);
        const std::size_t stride = std::size_t(1) << q;
        double p1 = 0.0;
        for (std::size_t base = 0; base < s.dim(); base += stride << 1)
            for (std::size_t i = base; i < base + stride; ++i)
                p1 += std::norm(s.amp[i + stride]);
        double pj = p_amp * p1; // probability of the decay branch
        std::size_t pick = rng.uniform() < pj ? 1 : 0;
        double norm = pick == 1 ? pj : 1.0 - pj;
        assert(norm > 0.0);
        const double inv = 1.0 / std::sqrt(norm);
        Mat2 m = ks[pick];
        for (auto& row : m) for (auto& e : row) e *= inv;
        apply_single_qubit(s, q, m);
    }
    if (p_phase > 0.0) {
        // Phase damping with probability p: coherence shrinks by sqrt(1-p),
        // equivalent to a stochastic Z with q = (1 - sqrt(1-p))/2.
        const double qz = 0.5 * (1.0 - std::sqrt(1.0 - p_phase));
        const std::size_t stride = std::size_t(1) << q;
        if (rng.uniform() < qz) {
            for (std::size_t base = 0; base < s.dim(); base += stride << 1)
                for (std::size_t i = base; i < base + stride; ++i)
                    s.amp[i + stride] = -s.amp[i + stride];
        }
    }
}

} // namespace rps
