#pragma once
// Single-qubit preparation-noise channels: Kraus operators, closed-form
// attenuation factors, idle decoherence probabilities, gate error rates.

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rps/state.hpp"

namespace rps {

enum class ChannelKind { dephasing, depolarizing, relaxation };

inline const char* channel_name(ChannelKind k) {
    switch (k) {
        case ChannelKind::dephasing: return "dephasing";
        case ChannelKind::depolarizing: return "depolarizing";
        case ChannelKind::relaxation: return "relaxation";
    }
    return "?";
}

inline ChannelKind channel_from_name(const std::string& s) {
    if (s == "dephasing") return ChannelKind::dephasing;
    if (s == "depolarizing") return ChannelKind::depolarizing;
    if (s == "relaxation") return ChannelKind::relaxation;
    throw std::invalid_argument("unknown channel kind: " + s);
}

struct NoiseChannelSpec {
    ChannelKind kind = ChannelKind::dephasing;
    double eps_p = 0.0;

    NoiseChannelSpec() = default;
    NoiseChannelSpec(ChannelKind k, double e) : kind(k), eps_p(e) {
        if (e < 0.0 || e > 1.0) throw std::invalid_argument("NoiseChannelSpec: eps_p out of [0,1]");
    }
};

using Mat2 = std::array<std::array<cplx, 2>, 2>;

inline std::vector<Mat2> kraus_operators(const NoiseChannelSpec& spec) {
    const double e = spec.eps_p;
    const double s1 = std::sqrt(1.0 - e);
    std::vector<Mat2> ks;
    switch (spec.kind) {
        case ChannelKind::dephasing: {
            ks.push_back({{{s1, 0.0}, {0.0, s1}}});
            double sz = std::sqrt(e);
            ks.push_back({{{sz, 0.0}, {0.0, -sz}}});
            break;
        }
        case ChannelKind::depolarizing: {
            ks.push_back({{{s1, 0.0}, {0.0, s1}}});
            double sp = std::sqrt(e / 3.0);
            ks.push_back({{{0.0, sp}, {sp, 0.0}}});                              // X
            ks.push_back({{{0.0, cplx(0, -sp)}, {cplx(0, sp), 0.0}}});           // Y
            ks.push_back({{{sp, 0.0}, {0.0, -sp}}});                             // Z
            break;
        }
        case ChannelKind::relaxation: {
            ks.push_back({{{1.0, 0.0}, {0.0, s1}}});                             // K0
            ks.push_back({{{0.0, std::sqrt(e)}, {0.0, 0.0}}});                   // K1 = sqrt(e)|0><1|
            break;
        }
    }
    return ks;
}

// Effective attenuation factors. gamma_act damps coherences on qubits where
// the two basis strings differ; gamma_pass is the random-input average on
// agreeing qubits, with the y-resolved pair (gamma_p0, gamma_p1) available
// for relaxation (the only channel where they differ).
struct AttenuationFactors {
    double gamma_act = 1.0;
    double gamma_pass = 1.0;
    double gamma_p0 = 1.0;
    double gamma_p1 = 1.0;
};

inline AttenuationFactors attenuation(const NoiseChannelSpec& spec) {
    const double e = spec.eps_p;
    AttenuationFactors a;
    switch (spec.kind) {
        case ChannelKind::dephasing:
            a.gamma_act = 1.0 - 2.0 * e;
            a.gamma_pass = a.gamma_p0 = a.gamma_p1 = 1.0;
            break;
        case ChannelKind::depolarizing:
            a.gamma_act = 1.0 - 4.0 * e / 3.0;
            a.gamma_pass = a.gamma_p0 = a.gamma_p1 = 1.0 - 2.0 * e / 3.0;
            break;
        case ChannelKind::relaxation:
            a.gamma_act = std::sqrt(1.0 - e);
            a.gamma_p0 = 1.0;
            a.gamma_p1 = 1.0 - e;
            a.gamma_pass = 1.0 - e / 2.0; // average of gamma_p0, gamma_p1
            break;
    }
    return a;
}

// V_p = gamma_act^{|alpha|} gamma_pass^{n_q-|alpha|}. Depolarizing eps_p>3/4
// would make gamma_act negative; rejected rather than guessing a sign.
inline double expected_visibility_vp(const NoiseChannelSpec& spec, int n_q, int alpha_weight) {
    if (alpha_weight < 1 || alpha_weight > n_q) throw std::invalid_argument("expected_visibility_vp: |alpha| out of range");
    if (spec.kind == ChannelKind::depolarizing && spec.eps_p > 0.75)
        throw std::domain_error("expected_visibility_vp: depolarizing eps_p > 3/4 unsupported");
    AttenuationFactors a = attenuation(spec);
    return std::pow(a.gamma_act, alpha_weight) * std::pow(a.gamma_pass, n_q - alpha_weight);
}

// Idle decoherence over an interval: amplitude damping with p1(t), then
// phase damping with p_phi(t), where 1/T_phi = max{0, 1/T2 - 1/(2 T1)}.
struct IdleNoiseSpec {
    double t1 = std::numeric_limits<double>::infinity();
    double t2 = std::numeric_limits<double>::infinity();
    double duration = 0.0;
};

inline std::pair<double, double> idle_probabilities(const IdleNoiseSpec& s) {
    if (s.duration < 0.0) throw std::invalid_argument("idle_probabilities: negative duration");
    double p_amp = std::isinf(s.t1) ? 0.0 : 1.0 - std::exp(-s.duration / s.t1);
    double inv_t1 = std::isinf(s.t1) ? 0.0 : 1.0 / s.t1;
    double inv_t2 = std::isinf(s.t2) ? 0.0 : 1.0 / s.t2;
    double inv_tphi = std::max(0.0, inv_t2 - 0.5 * inv_t1);
    double p_phase = inv_tphi == 0.0 ? 0.0 : 1.0 - std::exp(-s.duration * inv_tphi);
    return {p_amp, p_phase};
}

// Depolarizing-parameter equivalents of average gate fidelities.
inline std::pair<double, double> gate_error_params(double f1q, double f2q) {
    if (f1q < 0.0 || f1q > 1.0 || f2q < 0.0 || f2q > 1.0)
        throw std::invalid_argument("gate_error_params: fidelity out of [0,1]");
    return {1.5 * (1.0 - f1q), 1.25 * (1.0 - f2q)};
}

} // namespace rps
