#pragma once
// Shadow-based measure-first decoders for the relation bit b = f(y) xor
// f(y xor alpha): single matrix element, cumulative sums over intermediate
// states (local subcube or the full hypercube), and the principal-eigenvector
// method. Also houses the closed-form SNR and sample-complexity laws for
// each method.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "rps/linalg.hpp"
#include "rps/shadows.hpp"

namespace rps {

enum class MfMethod { single_element, local_sum, global_sum, eigenshadow };

inline std::string mf_method_name(MfMethod m) {
    switch (m) {
        case MfMethod::single_element: return "single-element";
        case MfMethod::local_sum: return "local-sum";
        case MfMethod::global_sum: return "global-sum";
        default: return "eigenshadow";
    }
}

struct MfPrediction {
    int bit = 0;         // predicted relation bit
    double score = 0.0;  // signed evidence; positive favors bit 0
    MfMethod method = MfMethod::single_element;
    bool converged = true; // eigenshadow only; others always true
};

namespace detail {

// score == 0 carries no evidence either way: fair coin.
inline int bit_from_score(double score, RandomSource& rng) {
    if (score > 0.0) return 0;
    if (score < 0.0) return 1;
    return int(rng.bit());
}

inline void require_sectors(const SurrogateSectorSample& s) {
    const std::size_t d = std::size_t(1) << s.n_q;
    if (s.row.size() != d || s.col.size() != d)
        throw std::invalid_argument("mf decode: row/column sectors missing");
}

} // namespace detail

// Sign of the single coherence rho(y, y^alpha); its real part carries the
// relation bit. Scores are scaled by 2^{n_q} so the ideal value is +-1.
inline MfPrediction single_element_decode(const SurrogateSectorSample& s, RandomSource& rng) {
    detail::require_sectors(s);
    MfPrediction p;
    p.method = MfMethod::single_element;
    p.score = s.row[s.y].real() * std::pow(2.0, s.n_q);
    p.bit = detail::bit_from_score(p.score, rng);
    return p;
}

enum class SumDomain { local, global };

// Sign of sum_t rho(y^alpha, t) rho(t, y): the (y^alpha, y) element of
// rho^2 restricted to the chosen intermediate domain. Local sums run over
// the 2^{|alpha|} subcube y ^ span(alpha); global sums over everything.
inline MfPrediction sum_decode(const SurrogateSectorSample& s, SumDomain domain, RandomSource& rng) {
    detail::require_sectors(s);
    MfPrediction p;
    p.method = domain == SumDomain::local ? MfMethod::local_sum : MfMethod::global_sum;
    double acc = 0.0;
    if (domain == SumDomain::local) {
        Bits sub = 0;
        while (true) { // iterate subsets of the active mask
            Bits t = s.y ^ sub;
            acc += (s.row[t] * s.col[t]).real();
            if (sub == s.alpha_mask) break;
            sub = (sub - s.alpha_mask) & s.alpha_mask;
        }
    } else {
        const std::size_t d = std::size_t(1) << s.n_q;
        for (std::size_t t = 0; t < d; ++t) acc += (s.row[t] * s.col[t]).real();
    }
    p.score = acc * std::pow(4.0, s.n_q); // ideal value +-2^{|alpha| or n_q}
    p.bit = detail::bit_from_score(p.score, rng);
    return p;
}

// Principal eigenvector of the reconstructed matrix via shifted power
// iteration; the relative phase between v_y and v_{y^alpha} encodes the bit.
// Non-convergence degrades to score 0 (fair coin), reported on the result.
inline MfPrediction eigenshadow_decode(const SurrogateSectorSample& s, RandomSource& rng,
                                       int max_iters = 10000) {
    if (!s.has_full) throw std::invalid_argument("eigenshadow_decode: full matrix sector required");
    const std::size_t d = std::size_t(1) << s.n_q;
    auto pr = power_iteration_principal(s.full.m, d, rng, max_iters);
    MfPrediction p;
    p.method = MfMethod::eigenshadow;
    p.converged = pr.converged;
    if (pr.converged) p.score = (pr.vec[s.y] * std::conj(pr.vec[s.y ^ s.alpha_mask])).real();
    p.bit = detail::bit_from_score(p.score, rng);
    return p;
}

// sum_z beta_act^{w_act(z, z^alpha)} beta_pass^{w_pass(z, z^alpha)} over the
// full hypercube: active bits always differ, passive bits contribute a
// binomial expansion.
inline double hypercube_master_sum(int n_q, int alpha_weight, double beta_act, double beta_pass) {
    if (alpha_weight < 0 || alpha_weight > n_q)
        throw std::invalid_argument("hypercube_master_sum: alpha weight out of range");
    return std::pow(2.0 * beta_act, alpha_weight) *
           std::pow(1.0 + beta_pass * beta_pass, n_q - alpha_weight);
}

// Per-method signal-to-noise ratio at a given snapshot budget. Accuracy of
// the corresponding decoder is approximately Phi(SNR).
inline double single_element_snr(int n_q, int alpha_weight, const NoiseChannelSpec& prep,
                                 std::size_t n_c) {
    auto att = attenuation(prep);
    double mu = std::pow(2.0, -n_q) * std::pow(att.gamma_act, alpha_weight) *
                std::pow(att.gamma_pass, n_q - alpha_weight);
    double sigma = std::pow(1.5, 0.5 * alpha_weight) / std::sqrt(2.0 * double(n_c));
    return mu / sigma;
}

inline double sum_snr(int n_q, int alpha_weight, const NoiseChannelSpec& prep, std::size_t n_c,
                      SumDomain domain) {
    auto att = attenuation(prep);
    double snr = 2.0 * double(n_c) / std::pow(4.0, n_q) *
                 std::pow(2.0 * att.gamma_act / std::sqrt(3.0), alpha_weight);
    if (domain == SumDomain::local)
        return snr * std::pow(att.gamma_pass, n_q - alpha_weight);
    return snr * std::pow((1.0 + att.gamma_pass * att.gamma_pass) / std::sqrt(3.25),
                          n_q - alpha_weight);
}

// Snapshot budget reaching SNR = 1 (~84.1% accuracy). Eigenshadow requires
// gamma_eff > 1/2; at or below it the budget diverges and infinity is
// returned.
inline double scaling_law(MfMethod method, int n_q, int alpha_weight,
                          const NoiseChannelSpec& prep) {
    if (alpha_weight < 1 || alpha_weight > n_q)
        throw std::invalid_argument("scaling_law: alpha weight out of range");
    auto att = attenuation(prep);
    const double ga = att.gamma_act, gp = att.gamma_pass;
    const int pw = n_q - alpha_weight;
    switch (method) {
        case MfMethod::single_element:
            return std::pow(4.0, n_q) * std::pow(1.5 / (ga * ga), alpha_weight) *
                   std::pow(gp, -2.0 * pw);
        case MfMethod::local_sum:
            return std::pow(4.0, n_q) * std::pow(0.5 * std::sqrt(3.0) / ga, alpha_weight) *
                   std::pow(gp, -double(pw));
        case MfMethod::global_sum:
            return std::pow(4.0, n_q) * std::pow(0.5 * std::sqrt(3.0) / ga, alpha_weight) *
                   std::pow(std::sqrt(3.25) / (1.0 + gp * gp), pw);
        default: {
            double geff = 0.5 * (ga + gp);
            if (geff <= 0.5) return std::numeric_limits<double>::infinity();
            return std::pow(2.5 / (geff * geff), n_q);
        }
    }
}

} // namespace rps
