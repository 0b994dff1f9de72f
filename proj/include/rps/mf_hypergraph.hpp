#pragma once
// Hypergraph (ANF) measure-first method: separable X/Z measurement sampling,
// pooled GF(2) system assembly, frequency-sorted forced-pivot elimination,
// and the per-channel critical sample budget formulas.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "rps/boolean_function.hpp"
#include "rps/gf2.hpp"
#include "rps/noise.hpp"
#include "rps/statevector_ops.hpp"

namespace rps {

struct SeparableMeasurementRecord {
    int l = 0;       // X-basis qubit
    Bits s = 0;      // outcome: X result at bit l, Z results elsewhere
    long count = 1;  // multiplicity
};

// Noiseless Boolean derivative at a spectator configuration: bit l of a valid
// outcome must equal f(y) xor f(nu) with y, nu matching s off bit l.
inline int boolean_derivative(const BooleanFunction& f, int l, Bits spectators) {
    Bits y = spectators & ~(Bits(1) << l);
    return f.f(y) ^ f.f(y | (Bits(1) << l));
}

namespace detail {

inline std::vector<SeparableMeasurementRecord> collapse_counts(std::map<Bits, long>& counts, int l) {
    std::vector<SeparableMeasurementRecord> out;
    out.reserve(counts.size());
    for (auto& [s, c] : counts) out.push_back({l, s, c});
    return out;
}

} // namespace detail

// Exact Born sampling of H_l E(|psi_f>) in the computational basis via
// per-shot Kraus trajectories on the dense statevector.
inline std::vector<SeparableMeasurementRecord> sample_separable(const BooleanFunction& f,
                                                                const NoiseChannelSpec& prep, int l,
                                                                long shots, RandomSource& rng) {
    if (l < 0 || l >= f.n_q) throw std::invalid_argument("sample_separable: bad configuration");
    if (shots < 1) throw std::invalid_argument("sample_separable: shots < 1");
    auto psi = build_phase_state(f);
    std::map<Bits, long> counts;
    for (long k = 0; k < shots; ++k) {
        StateVector st = psi;
        sample_kraus_trajectory(st, prep, rng);
        apply_h(st, l);
        ++counts[sample_measurement(st, 1, rng)[0]];
    }
    return detail::collapse_counts(counts, l);
}

// Distribution-equivalent fast path. Phase states keep product-form
// magnitudes under qubit-wise Kraus jumps, so jump codes sample as
// independent per-qubit draws; given the code, spectator bits are independent
// Bernoulli and the X-basis bit follows from the interference of the two
// amplitudes that differ at bit l. O(n_q) per shot instead of O(2^{n_q}).
inline std::vector<SeparableMeasurementRecord> sample_separable_fast(const BooleanFunction& f,
                                                                     const NoiseChannelSpec& prep,
                                                                     int l, long shots,
                                                                     RandomSource& rng) {
    if (l < 0 || l >= f.n_q) throw std::invalid_argument("sample_separable_fast: bad configuration");
    if (shots < 1) throw std::invalid_argument("sample_separable_fast: shots < 1");
    const int nq = f.n_q;
    const double eps = prep.eps_p;
    const double p1_k0 = (2.0 - eps) > 0.0 ? (1.0 - eps) / (2.0 - eps) : 0.0;
    std::map<Bits, long> counts;
    for (long k = 0; k < shots; ++k) {
        Bits flips = 0;  // X-type argument shifts
        Bits phases = 0; // Z-type relative phases
        Bits spect = 0;  // sampled Z outcomes off bit l
        double gl0 = 1.0, gl1 = 1.0; // amplitude weights of the two l-branches
        for (int q = 0; q < nq; ++q) {
            const Bits bq = Bits(1) << q;
            switch (prep.kind) {
                case ChannelKind::dephasing:
                    if (rng.bernoulli(eps)) phases |= bq;
                    if (q != l && rng.bit()) spect |= bq;
                    break;
                case ChannelKind::depolarizing:
                    if (rng.bernoulli(eps)) {
                        switch (rng.below(3)) {
                            case 0: flips |= bq; break;                 // X
                            case 1: flips |= bq; phases |= bq; break;   // Y
                            default: phases |= bq; break;               // Z
                        }
                    }
                    if (q != l && rng.bit()) spect |= bq;
                    break;
                default: // relaxation
                    if (rng.bernoulli(eps * 0.5)) {
                        // K1: the qubit collapses to |0> from its |1> branch
                        flips |= bq;
                        if (q == l) gl1 = 0.0;
                    } else {
                        if (q == l) gl1 = std::sqrt(1.0 - eps);
                        else if (rng.bernoulli(p1_k0)) spect |= bq;
                    }
                    break;
            }
        }
        Bits y = (spect & ~(Bits(1) << l)) ^ flips;
        int rel = f.f(y & ~(Bits(1) << l)) ^ f.f(y | (Bits(1) << l)) ^ int(get_bit(phases, l));
        int sl;
        if (gl1 == 0.0) {
            sl = int(rng.bit()); // collapsed target: no interference
        } else if (gl0 == gl1) {
            sl = rel; // balanced branches: deterministic
        } else {
            double r = (rel ? -1.0 : 1.0) * 2.0 * gl0 * gl1 / (gl0 * gl0 + gl1 * gl1);
            sl = rng.bernoulli(0.5 * (1.0 + r)) ? 0 : 1;
        }
        Bits s = (spect & ~(Bits(1) << l)) | (Bits(sl) << l);
        ++counts[s];
    }
    return detail::collapse_counts(counts, l);
}

// Pooled GF(2) system over all measurement configurations. Columns are the
// 2^{n_q} monomials ordered by (degree, numeric value); a configuration-l row
// activates only monomials containing qubit l, with the spectator outcomes
// substituted into the remaining variables.
struct PooledSystem {
    Gf2Matrix matrix;
    std::vector<std::uint8_t> rhs;
    std::vector<long> freq;
    std::vector<std::pair<int, Bits>> row_ids; // (l, outcome)
    std::vector<Bits> col_monomials;           // column -> monomial mask
    int n_q = 0;
};

inline PooledSystem assemble_pooled_system(const std::vector<SeparableMeasurementRecord>& records,
                                           int n_q) {
    if (records.empty()) throw std::invalid_argument("assemble_pooled_system: no records");
    PooledSystem sys;
    sys.n_q = n_q;
    const std::size_t d = std::size_t(1) << n_q;
    sys.col_monomials.resize(d);
    for (std::size_t e = 0; e < d; ++e) sys.col_monomials[e] = Bits(e);
    std::sort(sys.col_monomials.begin(), sys.col_monomials.end(), [](Bits a, Bits b) {
        int wa = hamming_weight(a), wb = hamming_weight(b);
        return wa != wb ? wa < wb : a < b;
    });

    sys.matrix = Gf2Matrix(d);
    for (const auto& rec : records) {
        if (rec.l < 0 || rec.l >= n_q || rec.count < 1)
            throw std::invalid_argument("assemble_pooled_system: bad record");
        const Bits lbit = Bits(1) << rec.l;
        const Bits spect = rec.s & ~lbit;
        std::size_t r = sys.matrix.add_row();
        for (std::size_t c = 0; c < d; ++c) {
            Bits e = sys.col_monomials[c];
            if (!(e & lbit)) continue;            // monomial must contain qubit l
            if ((e & ~lbit) & ~spect) continue;   // a spectator variable is 0
            sys.matrix.set(r, c, true);
        }
        sys.rhs.push_back(std::uint8_t(get_bit(rec.s, rec.l)));
        sys.freq.push_back(rec.count);
        sys.row_ids.emplace_back(rec.l, rec.s);
    }
    return sys;
}

struct HypergraphSolution {
    BooleanFunction f_hat{1, std::vector<std::int8_t>(2, 1)};
    std::size_t rank = 0;
    std::size_t discarded_rows = 0;      // inconsistent under earlier pivots
    std::vector<std::size_t> discarded;  // indices into the sorted row order
};

// Rows sorted by descending empirical frequency (ties: outcome bits, then
// configuration index), then forced-pivot elimination; unresolved monomial
// coefficients default to 0 and the best-effort function is returned.
inline HypergraphSolution solve_with_frequency_sorting(const PooledSystem& sys) {
    const std::size_t n = sys.rhs.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sys.freq[a] != sys.freq[b]) return sys.freq[a] > sys.freq[b];
        if (sys.row_ids[a].second != sys.row_ids[b].second)
            return sys.row_ids[a].second < sys.row_ids[b].second;
        return sys.row_ids[a].first < sys.row_ids[b].first;
    });

    Gf2Matrix sorted(sys.matrix.n_cols());
    std::vector<std::uint8_t> rhs;
    rhs.reserve(n);
    for (std::size_t i : order) {
        std::size_t r = sorted.add_row();
        for (std::size_t w = 0; w < sorted.words_per_row(); ++w)
            sorted.row(r)[w] = sys.matrix.row(i)[w];
        rhs.push_back(sys.rhs[i]);
    }
    auto sol = gf2_eliminate(sorted, rhs);

    HypergraphSolution out;
    out.rank = sol.rank;
    out.discarded = sol.inconsistent_rows;
    out.discarded_rows = sol.inconsistent_rows.size();
    std::vector<Bits> monomials;
    for (std::size_t c = 0; c < sol.coeffs.size(); ++c)
        if (sol.coeffs[c]) monomials.push_back(sys.col_monomials[c]);
    out.f_hat = dense_from_anf(sys.n_q, monomials);
    return out;
}

// End-to-end: kappa shots in each of the n_q configurations, pooled solve,
// recovered function. The task answer is then f_hat(y) xor f_hat(y ^ alpha).
inline HypergraphSolution run_hypergraph(const BooleanFunction& f, const NoiseChannelSpec& prep,
                                         long kappa, RandomSource& rng, bool fast_path = true) {
    std::vector<SeparableMeasurementRecord> all;
    for (int l = 0; l < f.n_q; ++l) {
        auto recs = fast_path ? sample_separable_fast(f, prep, l, kappa, rng)
                              : sample_separable(f, prep, l, kappa, rng);
        all.insert(all.end(), recs.begin(), recs.end());
    }
    return solve_with_frequency_sorting(assemble_pooled_system(all, f.n_q));
}

struct CriticalBudget {
    ChannelKind kind = ChannelKind::dephasing;
    double kappa_max = 0.0;                 // adversarial worst case
    int m_star = 0;                         // relaxation argmin dimension (0 otherwise)
    std::vector<double> per_config;         // kappa_crit per (l, spectator), if f given
};

namespace detail {

// Depolarizing low-pass-filtered derivative over one configuration l:
// Walsh spectrum of (-1)^{D_l f} damped by c^{|k|}.
inline std::vector<double> filtered_derivative_depol(const BooleanFunction& f, int l, double c) {
    const int m = f.n_q - 1;
    const std::size_t dm = std::size_t(1) << m;
    std::vector<double> g(dm);
    for (std::size_t x = 0; x < dm; ++x) {
        // scatter the m spectator bits around position l
        Bits s = 0;
        int bit = 0;
        for (int q = 0; q < f.n_q; ++q) {
            if (q == l) continue;
            if (get_bit(Bits(x), bit)) s |= Bits(1) << q;
            ++bit;
        }
        g[x] = boolean_derivative(f, l, s) ? -1.0 : 1.0;
    }
    walsh_hadamard_transform(g);
    for (std::size_t k = 0; k < dm; ++k)
        g[k] *= std::pow(c, hamming_weight(Bits(k))) / double(dm);
    walsh_hadamard_transform(g);
    return g; // indexed by compacted spectator string
}

// Relaxation-constrained derivative: error strings k restricted to positions
// where both the target branch and the spectators read 0.
inline double filtered_derivative_relax(const BooleanFunction& f, int l, Bits spect, double eps) {
    const Bits lbit = Bits(1) << l;
    const Bits full = (Bits(1) << f.n_q) - 1;
    Bits zeros = full & ~lbit & ~spect;
    Bits y = spect & ~lbit, nu = y | lbit;
    double acc = 0.0;
    Bits k = 0;
    while (true) {
        double term = std::pow(eps, hamming_weight(k));
        acc += ((f.f(y ^ k) ^ f.f(nu ^ k)) ? -1.0 : 1.0) * term;
        if (k == zeros) break;
        k = (k - zeros) & zeros;
    }
    return acc;
}

} // namespace detail

// Critical per-configuration budgets (SNR = 1) and the channel's adversarial
// worst case. With a concrete f the per-(l, spectator) values are evaluated;
// vanishing signal gaps report infinity.
inline CriticalBudget critical_budget(const NoiseChannelSpec& prep, int n_q,
                                      const BooleanFunction* f = nullptr) {
    if (prep.eps_p >= 1.0) throw std::invalid_argument("critical_budget: eps_p must be < 1");
    const double eps = prep.eps_p;
    const double inf = std::numeric_limits<double>::infinity();
    CriticalBudget out;
    out.kind = prep.kind;
    const double half = std::pow(2.0, n_q - 1);

    switch (prep.kind) {
        case ChannelKind::dephasing: {
            out.kappa_max = eps < 1.0 ? half / ((1.0 - eps) * (1.0 - eps)) : inf;
            break;
        }
        case ChannelKind::depolarizing: {
            double c = 1.0 - 4.0 * eps / 3.0;
            out.kappa_max = c != 0.0 ? half / std::pow(c * c, n_q) : inf;
            break;
        }
        default: { // relaxation
            double c = std::sqrt(1.0 - eps);
            double best = inf;
            int mstar = 0;
            for (int m = 0; m <= n_q - 1; ++m) {
                double p = std::pow(1.0 + eps, m);
                double denom = std::abs(0.5 * eps * p + c * (2.0 - p));
                if (denom < best) {
                    best = denom;
                    mstar = m;
                }
            }
            out.m_star = mstar;
            double p = std::pow(1.0 + eps, mstar);
            double denom = 0.5 * eps * p + c * (2.0 - p);
            if (denom == 0.0) {
                out.kappa_max = inf;
            } else {
                out.kappa_max = std::pow(2.0, n_q - 2) * (2.0 + eps) * p /
                                (std::pow(1.0 - eps, n_q - 1 - mstar) * denom * denom);
            }
            break;
        }
    }

    if (f != nullptr) {
        if (f->n_q != n_q) throw std::invalid_argument("critical_budget: n_q mismatch");
        const int m = n_q - 1;
        const std::size_t dm = std::size_t(1) << m;
        for (int l = 0; l < n_q; ++l) {
            std::vector<double> depol_d;
            if (prep.kind == ChannelKind::depolarizing)
                depol_d = detail::filtered_derivative_depol(*f, l, 1.0 - 4.0 * eps / 3.0);
            for (std::size_t x = 0; x < dm; ++x) {
                Bits spect = 0;
                int bit = 0;
                for (int q = 0; q < n_q; ++q) {
                    if (q == l) continue;
                    if (get_bit(Bits(x), bit)) spect |= Bits(1) << q;
                    ++bit;
                }
                double kappa;
                switch (prep.kind) {
                    case ChannelKind::dephasing:
                        kappa = out.kappa_max;
                        break;
                    case ChannelKind::depolarizing: {
                        double dd = depol_d[x];
                        double c = 1.0 - 4.0 * eps / 3.0;
                        kappa = dd != 0.0 ? half / (c * c * dd * dd) : inf;
                        break;
                    }
                    default: {
                        int sw = hamming_weight(spect);
                        double dd = detail::filtered_derivative_relax(*f, l, spect, eps);
                        double base = boolean_derivative(*f, l, spect) ? -1.0 : 1.0;
                        double p = std::pow(1.0 + eps, n_q - 1 - sw);
                        double denom = 0.5 * eps * base * p + std::sqrt(1.0 - eps) * dd;
                        if (denom == 0.0) {
                            kappa = inf;
                        } else {
                            kappa = std::pow(2.0, n_q - 2) * (2.0 + eps) * p /
                                    (std::pow(1.0 - eps, sw) * denom * denom);
                        }
                        break;
                    }
                }
                out.per_config.push_back(kappa);
            }
        }
    }
    return out;
}

} // namespace rps
