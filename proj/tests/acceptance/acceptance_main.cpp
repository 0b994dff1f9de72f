// Acceptance harness: runs the ten release criteria end to end and prints
// one PASS/FAIL line per criterion. Each criterion is self-contained and
// deterministic (fixed seeds); indented lines are supporting measurements.
//
// Usage: rps_acceptance [criterion ids...]   (no ids = run all ten)
// Exit code: number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rps/extrapolation.hpp"
#include "rps/fq.hpp"
#include "rps/mf_hypergraph.hpp"
#include "rps/mf_spectral.hpp"

using namespace rps;

namespace {

constexpr std::uint64_t kSeed = 20260823;

std::string strf(const char* fmt, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    return buf;
}

void note(const char* fmt, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    std::printf("         %s\n", buf);
    std::fflush(stdout);
}

// alpha with |alpha| = w: the mandatory top bit plus the w-1 lowest bits
Concept alpha_of_weight(int n_q, int w) {
    return Concept(n_q, (Bits(1) << (n_q - 1)) | ((Bits(1) << (w - 1)) - 1));
}

Concept half_alpha(int n_q) { return alpha_of_weight(n_q, std::max(1, n_q / 2)); }

bool recovered_up_to_constant(const BooleanFunction& f, const BooleanFunction& fh) {
    int c = f.f(0) ^ fh.f(0);
    for (Bits x = 0; x < (Bits(1) << f.n_q); ++x)
        if ((f.f(x) ^ c) != fh.f(x)) return false;
    return true;
}

// fraction of relation bits the recovered function gets right
double task_accuracy(const BooleanFunction& f, const BooleanFunction& fh, const Concept& alpha) {
    const Bits ny = Bits(1) << (f.n_q - 1);
    long ok = 0;
    for (Bits y = 0; y < ny; ++y) {
        int bh = fh.f(y) ^ fh.f(y ^ alpha.alpha);
        ok += (bh == target_bit(f, y, alpha));
    }
    return double(ok) / double(ny);
}

// ---------------------------------------------------------------------------
// 1. Noiseless determinism
// ---------------------------------------------------------------------------

bool criterion1(std::string& detail) {
    ProtocolOptions opts;
    opts.circuit_noise = false;
    opts.readout_noise = false;
    NoiseChannelSpec none(ChannelKind::dephasing, 0.0);
    SimulationBudget budget{100, 1, 8};
    RandomSource root(kSeed, 1);
    long runs = 0;
    std::uint64_t stream = 0;
    for (int nq = 3; nq <= 10; ++nq) {
        for (int w = 1; w <= nq; ++w) {
            for (const DeviceModel& dev : {device_a(), device_c()}) {
                auto est = simulate_protocol(nq, alpha_of_weight(nq, w), none, dev, budget,
                                             root.sub(stream++), opts);
                ++runs;
                if (est.accuracy != 1.0 || est.std_error != 0.0) {
                    detail = strf("n_q=%d |alpha|=%d device=%s accuracy=%.6f (want exactly 1)", nq,
                                  w, dev.name.c_str(), est.accuracy);
                    return false;
                }
            }
        }
    }
    detail = strf("accuracy exactly 1.0 in all %ld runs (100 functions each, 8 sizes, "
                  "all alpha weights, both connectivities)",
                  runs);
    return true;
}

// ---------------------------------------------------------------------------
// 2. Preparation-noise analytics
// ---------------------------------------------------------------------------

bool criterion2(std::string& detail) {
    ProtocolOptions opts;
    opts.circuit_noise = false;
    opts.readout_noise = false;
    DeviceModel ideal; // noiseless all-to-all device
    SimulationBudget budget{200, 500, 200};
    RandomSource root(kSeed, 2);
    std::uint64_t stream = 0;
    double worst = 0.0;
    std::string worst_at;
    for (int nq : {4, 6, 8}) {
        for (double eps : {0.05, 0.1}) {
            for (ChannelKind kind :
                 {ChannelKind::dephasing, ChannelKind::depolarizing, ChannelKind::relaxation}) {
                NoiseChannelSpec spec(kind, eps);
                for (int w : {nq / 2, nq}) {
                    double pred = 0.5 * (1.0 + expected_visibility_vp(spec, nq, w));
                    auto est = simulate_protocol(nq, alpha_of_weight(nq, w), spec, ideal, budget,
                                                 root.sub(stream++), opts);
                    double err = std::abs(est.accuracy - pred);
                    if (err > worst) {
                        worst = err;
                        worst_at = strf("%s eps=%.2f n_q=%d |alpha|=%d (sim %.4f vs formula %.4f)",
                                        channel_name(kind), eps, nq, w, est.accuracy, pred);
                    }
                    if (err > 0.02) {
                        detail = strf("deviation %.4f > 0.02 at %s", err, worst_at.c_str());
                        return false;
                    }
                }
            }
        }
    }
    detail = strf("36 combinations within 0.02 of the closed forms; worst %.4f at %s", worst,
                  worst_at.c_str());
    return true;
}

// ---------------------------------------------------------------------------
// 3. Factorization bound at n_q = 12 on device C
// ---------------------------------------------------------------------------

bool criterion3(std::string& detail) {
    RandomSource root(kSeed, 3);
    DeviceModel dev = device_c();
    // fit through n_q = 12 so the prediction at 12 is anchored by direct
    // circuit-only measurements rather than an extrapolated tail
    auto vmfit = fit_vm_for_device(dev, {3, 4, 5, 6, 7, 8, 10, 12},
                                   SimulationBudget{192, 1, 400}, root.sub(1));
    note("V_m fit on device C: c=%.4f beta=%.4f (V_m(12)=%.4f)", vmfit.c, vmfit.beta,
         vmfit.vm(12));

    const int nq = 12;
    Concept alpha = alpha_of_weight(nq, nq);
    SimulationBudget budget{256, 640, 4};
    std::uint64_t stream = 100;
    bool ok = true;
    for (ChannelKind kind :
         {ChannelKind::dephasing, ChannelKind::depolarizing, ChannelKind::relaxation}) {
        for (double eps : {0.05, 0.1}) {
            NoiseChannelSpec spec(kind, eps);
            double pred = predict_accuracy(nq, nq, spec, dev, vmfit);
            auto est = simulate_protocol(nq, alpha, spec, dev, budget, root.sub(stream++));
            double delta = est.accuracy - pred;
            bool lower = pred <= est.accuracy + 0.01;
            bool close = std::abs(delta) <= 0.1;
            note("%s eps=%.2f: simulated %.4f (se %.4f), predicted %.4f, delta %+.4f %s",
                 channel_name(kind), eps, est.accuracy, est.std_error, pred, delta,
                 (lower && close) ? "" : "<-- violation");
            if (!(lower && close)) {
                ok = false;
                detail = strf("%s eps=%.2f: prediction %.4f vs simulation %.4f breaks the bound",
                              channel_name(kind), eps, pred, est.accuracy);
            }
        }
    }
    if (ok)
        detail = "prediction stays a lower bound (within +0.01) and within 0.1 of simulation for "
                 "all 6 channel/noise combinations";
    return ok;
}

// ---------------------------------------------------------------------------
// 4. Shadow variance law + surrogate trace-distance agreement
// ---------------------------------------------------------------------------

bool criterion4(std::string& detail) {
    RandomSource root(kSeed, 4);
    const std::size_t shots = 10000;
    for (int nq : {3, 4, 5}) {
        const std::size_t d = std::size_t(1) << nq;
        RandomSource rng = root.sub(nq);
        std::vector<double> sumsq(nq + 1, 0.0);
        std::vector<long> counts(nq + 1, 0);
        for (std::size_t s = 0; s < shots; ++s) {
            auto f = random_function(nq, rng);
            auto dm = snapshot_density(shadow_snapshot(build_phase_state(f), rng));
            for (Bits n = 0; n < d; ++n)
                for (Bits m = 0; m < d; ++m) {
                    int w = hamming_distance(n, m);
                    cplx truth = cplx(double(f.sign(n) * f.sign(m)) / double(d));
                    sumsq[w] += std::norm(dm.at(n, m) - truth);
                    ++counts[w];
                }
        }
        for (int w = 0; w <= nq; ++w) {
            // per-snapshot variance scaled to the n_c = 1e4 budget
            double emp = sumsq[w] / double(counts[w]) / double(shots);
            double law = element_variance(nq, w, shots);
            if (std::abs(emp - law) > 0.10 * law) {
                detail = strf("variance law: n_q=%d w=%d empirical %.3e vs law %.3e (>10%%)", nq, w,
                              emp, law);
                return false;
            }
        }
        note("variance law holds at n_q=%d (all Hamming groups within 10%% at n_c=1e4)", nq);
    }

    NoiseChannelSpec none(ChannelKind::dephasing, 0.0);
    for (int nq : {3, 4, 5}) {
        auto report = surrogate_vs_truth_report(nq, {64, 256, 1024}, none, 20, root.sub(50 + nq));
        for (const auto& pt : report) {
            if (std::abs(pt.td_explicit - pt.td_surrogate) > 0.10 * pt.td_explicit) {
                detail = strf("trace distance: n_q=%d n_c=%zu explicit %.4f vs surrogate %.4f "
                              "(>10%% apart)",
                              nq, pt.n_c, pt.td_explicit, pt.td_surrogate);
                return false;
            }
        }
        note("surrogate trace distance tracks explicit shadows at n_q=%d "
             "(n_c=64/256/1024 within 10%%)",
             nq);
    }
    detail = "element variances match [(3/2)^w - 4^{-n}]/n_c and surrogate trace distances track "
             "explicit shadows (both within 10%)";
    return true;
}

// ---------------------------------------------------------------------------
// 5. Surrogate covariance kernels + sampler equality in distribution
// ---------------------------------------------------------------------------

double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double dmax = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i;
        else ++j;
        double diff = std::abs(double(i) / double(a.size()) - double(j) / double(b.size()));
        dmax = std::max(dmax, diff);
    }
    double ne = double(a.size()) * double(b.size()) / double(a.size() + b.size());
    double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * dmax;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
    return std::min(1.0, std::max(0.0, p));
}

// lower-triangular Cholesky factor of a dense SPD matrix
std::vector<double> cholesky(const std::vector<double>& k, std::size_t d) {
    std::vector<double> l(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = k[i * d + j];
            for (std::size_t m = 0; m < j; ++m) s -= l[i * d + m] * l[j * d + m];
            if (i == j) {
                if (s <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
                l[i * d + i] = std::sqrt(s);
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    return l;
}

bool criterion5(std::string& detail) {
    const int nq = 3;
    const std::size_t d = 8, samples = 100000;
    const double shift = std::pow(4.0, -nq);
    RandomSource root(kSeed, 5);

    // --- K_diag: empirical covariance of the diagonal sector ---
    {
        RandomSource rng = root.sub(1);
        auto f = random_function(nq, rng);
        Concept alpha(nq, 0b111);
        NoiseChannelSpec none(ChannelKind::dephasing, 0.0);
        std::vector<double> mean(d, std::pow(2.0, -nq));
        std::vector<double> cov(d * d, 0.0);
        for (std::size_t s = 0; s < samples; ++s) {
            auto smp = sample_surrogate(f, none, alpha, 0, 1, SurrogateMode::sectors, rng);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    cov[i * d + j] += (smp.diag[i] - mean[i]) * (smp.diag[j] - mean[j]);
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                double want = std::pow(-0.5, hamming_distance(Bits(i), Bits(j))) - shift;
                double got = cov[i * d + j] / double(samples);
                worst = std::max(worst, std::abs(got - want) / std::abs(want));
            }
        note("K_diag entrywise relative error: worst %.3f (bound 0.05)", worst);
        if (worst > 0.05) {
            detail = strf("K_diag empirical covariance off by %.3f relative (>5%%)", worst);
            return false;
        }
    }

    // --- one off-diagonal mask block: delta = alpha = 0b100, passive bits {0,1} ---
    {
        RandomSource rng = root.sub(2);
        auto f = random_function(nq, rng);
        Concept alpha(nq, 0b100);
        NoiseChannelSpec none(ChannelKind::dephasing, 0.0);
        auto mean = surrogate_mean(f, none, alpha, 0, SurrogateMode::full);
        const std::size_t bd = 4; // elements rho(u, u ^ 0b100), u in {0..3}
        std::vector<cplx> cov(bd * bd, 0.0), pseudo(bd * bd, 0.0);
        for (std::size_t s = 0; s < samples; ++s) {
            auto smp = sample_surrogate(f, none, alpha, 0, 1, SurrogateMode::full, rng);
            cplx dz[bd];
            for (std::size_t u = 0; u < bd; ++u)
                dz[u] = smp.full.at(Bits(u), Bits(u) ^ 0b100) - mean.full.at(Bits(u), Bits(u) ^ 0b100);
            for (std::size_t u = 0; u < bd; ++u)
                for (std::size_t v = 0; v < bd; ++v) {
                    cov[u * bd + v] += dz[u] * std::conj(dz[v]);
                    pseudo[u * bd + v] += dz[u] * dz[v];
                }
        }
        double worst = 0.0, worst_aux = 0.0;
        const double diag_mag = 1.5 - shift;
        for (std::size_t u = 0; u < bd; ++u)
            for (std::size_t v = 0; v < bd; ++v) {
                double want = 1.5 * std::pow(-0.5, hamming_distance(Bits(u), Bits(v))) -
                              (u == v ? shift : 0.0);
                cplx got = cov[u * bd + v] / double(samples);
                worst = std::max(worst, std::abs(got.real() - want) / std::abs(want));
                worst_aux = std::max(worst_aux, std::abs(got.imag()) / diag_mag);
                worst_aux =
                    std::max(worst_aux, std::abs(pseudo[u * bd + v]) / double(samples) / diag_mag);
            }
        note("K block (|delta|=1, 2 passive bits): worst relative error %.3f, "
             "spurious imaginary/pseudo parts %.3f (bounds 0.05)",
             worst, worst_aux);
        if (worst > 0.05 || worst_aux > 0.05) {
            detail = strf("mask-block covariance off by %.3f relative (>5%%)", std::max(worst, worst_aux));
            return false;
        }
    }

    // --- spectral (WHT) samplers vs dense Cholesky samplers, per-coordinate KS ---
    const std::size_t nks = 20000;
    std::vector<double> pvals;
    {
        RandomSource rng_w = root.sub(3), rng_c = root.sub(4);
        // diagonal sector: trace-pinned kernel, sample 7 coordinates by
        // Cholesky and force the eighth onto the zero-trace hyperplane
        std::vector<double> k7(49);
        for (std::size_t i = 0; i < 7; ++i)
            for (std::size_t j = 0; j < 7; ++j)
                k7[i * 7 + j] = std::pow(-0.5, hamming_distance(Bits(i), Bits(j))) - shift;
        auto l7 = cholesky(k7, 7);
        std::vector<std::vector<double>> wht(d), dns(d);
        for (std::size_t s = 0; s < nks; ++s) {
            auto g = detail::diagonal_fluctuation(nq, 1, rng_w);
            for (std::size_t i = 0; i < d; ++i) wht[i].push_back(g[i]);
            double z[7], x[8] = {0};
            for (auto& v : z) v = rng_c.normal();
            double tr = 0.0;
            for (std::size_t i = 0; i < 7; ++i) {
                for (std::size_t j = 0; j <= i; ++j) x[i] += l7[i * 7 + j] * z[j];
                tr += x[i];
            }
            x[7] = -tr;
            for (std::size_t i = 0; i < d; ++i) dns[i].push_back(x[i]);
        }
        for (std::size_t i = 0; i < d; ++i) pvals.push_back(ks_two_sample_p(wht[i], dns[i]));
    }
    {
        RandomSource rng_w = root.sub(5), rng_c = root.sub(6);
        // one mask block (|delta|=1 over 2 passive bits): proper complex draws
        std::vector<double> k4(16);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                k4[i * 4 + j] = 1.5 * std::pow(-0.5, hamming_distance(Bits(i), Bits(j))) -
                                (i == j ? shift : 0.0);
        auto l4 = cholesky(k4, 4);
        std::vector<std::vector<double>> wht(8), dns(8);
        for (std::size_t s = 0; s < nks; ++s) {
            auto z = detail::block_fluctuation(nq, 1, 2, 1, rng_w);
            for (std::size_t i = 0; i < 4; ++i) {
                wht[2 * i].push_back(z[i].real());
                wht[2 * i + 1].push_back(z[i].imag());
            }
            cplx u[4], x[4] = {};
            for (auto& v : u) v = cplx(rng_c.normal(), rng_c.normal()) / std::sqrt(2.0);
            for (std::size_t i = 0; i < 4; ++i)
                for (std::size_t j = 0; j <= i; ++j) x[i] += l4[i * 4 + j] * u[j];
            for (std::size_t i = 0; i < 4; ++i) {
                dns[2 * i].push_back(x[i].real());
                dns[2 * i + 1].push_back(x[i].imag());
            }
        }
        for (std::size_t i = 0; i < 8; ++i) pvals.push_back(ks_two_sample_p(wht[i], dns[i]));
    }
    double pmin = *std::min_element(pvals.begin(), pvals.end());
    double bonferroni = 0.01 / double(pvals.size());
    note("KS spectral-vs-Cholesky: %zu coordinates, min p = %.4f (Bonferroni bound %.5f)",
         pvals.size(), pmin, bonferroni);
    if (pmin <= bonferroni) {
        detail = strf("KS test rejects sampler equality: min p %.5f <= %.5f", pmin, bonferroni);
        return false;
    }
    detail = strf("covariance kernels match within 5%% and both samplers agree in distribution "
                  "(min KS p %.3f over %zu coordinates)",
                  pmin, pvals.size());
    return true;
}

// ---------------------------------------------------------------------------
// 6. Eigenvector-method scaling crossings
// ---------------------------------------------------------------------------

bool criterion6(std::string& detail) {
    const double threshold = 0.8413; // Phi(1), the SNR = 1 point
    RandomSource root(kSeed, 6);
    struct Setup {
        NoiseChannelSpec spec;
        double target;
    };
    std::vector<Setup> setups{{NoiseChannelSpec(ChannelKind::dephasing, 0.0), std::log2(2.5)},
                              {NoiseChannelSpec(ChannelKind::relaxation, 0.1), std::log2(2.8)}};
    std::vector<double> kgrid;
    for (int i = 0; i <= 8; ++i) kgrid.push_back(1.1 + 0.1 * i); // 1.1 .. 1.9
    bool ok = true;
    for (int nq : {8, 10}) {
        const int trials = nq == 10 ? 56 : 96;
        Concept alpha = alpha_of_weight(nq, nq);
        for (const auto& su : setups) {
            RandomSource rng = root.sub(nq * 10 + (su.spec.eps_p > 0 ? 1 : 0));
            AccuracyCurve curve;
            curve.k = kgrid;
            for (double k : kgrid) {
                std::size_t nc = std::size_t(std::llround(std::pow(2.0, k * nq)));
                int hits = 0;
                for (int t = 0; t < trials; ++t) {
                    auto f = random_function(nq, rng);
                    Bits y = Bits(rng.below(std::uint64_t(1) << (nq - 1)));
                    auto s = sample_surrogate(f, su.spec, alpha, y, nc, SurrogateMode::full, rng);
                    auto p = eigenshadow_decode(s, rng, 3000);
                    hits += (p.bit == target_bit(f, y, alpha));
                }
                curve.accuracy.push_back(double(hits) / trials);
            }
            auto cr = threshold_crossing(curve, threshold);
            if (!cr.ok()) {
                detail = strf("n_q=%d %s: curve never crosses %.4f on k in [1.1, 1.9]", nq,
                              channel_name(su.spec.kind), threshold);
                return false;
            }
            double dev = std::abs(cr.k_x - su.target);
            note("n_q=%d %s eps=%.2f: crossing k=%.3f, reference %.3f (|diff| %.3f, bound 0.2)",
                 nq, channel_name(su.spec.kind), su.spec.eps_p, cr.k_x, su.target, dev);
            if (dev > 0.2) {
                ok = false;
                detail = strf("n_q=%d %s: crossing %.3f departs from %.3f by %.3f > 0.2", nq,
                              channel_name(su.spec.kind), cr.k_x, su.target, dev);
            }
        }
    }
    if (ok)
        detail = "accuracy-vs-k crossings at n_q=8,10 sit within 0.2 of log2(2.5) (noiseless) and "
                 "log2(2.8) (relaxation eps=0.1)";
    return ok;
}

// ---------------------------------------------------------------------------
// 7. Hypergraph budget thresholds
// ---------------------------------------------------------------------------

// Analytic sign census for the relaxation channel: for every measurement
// configuration (target l, spectator outcome s), the expected parity signal
// is a base term of magnitude eps (1+eps)^m / 2 plus sqrt(1-eps) times a
// polynomial in eps whose first-order coefficients carry arbitrary signs. A
// configuration is "inverted" when those terms overwhelm the base and flip
// the majority outcome, which is the only mechanism that can defeat the
// frequency-sorted solver at any budget.
long census_inverted(int nq, double eps, int n_f, RandomSource rng, double* min_margin) {
    long inverted = 0;
    double minmarg = 1e300;
    const Bits full = (Bits(1) << nq) - 1;
    for (int fi = 0; fi < n_f; ++fi) {
        auto f = random_function(nq, rng);
        for (int l = 0; l < nq; ++l) {
            const Bits lbit = Bits(1) << l;
            const Bits nspect = Bits(1) << (nq - 1);
            for (Bits sp = 0; sp < nspect; ++sp) {
                // scatter spectator bits around position l
                Bits spect = 0;
                int bit = 0;
                for (int q = 0; q < nq; ++q) {
                    if (q == l) continue;
                    if (get_bit(sp, bit)) spect |= Bits(1) << q;
                    ++bit;
                }
                int m = nq - 1 - hamming_weight(spect);
                int dlf = boolean_derivative(f, l, spect);
                double dtil = detail::filtered_derivative_relax(f, l, spect, eps);
                double base = 0.5 * eps * std::pow(1.0 + eps, m) * (dlf ? -1.0 : 1.0);
                double bracket = base + std::sqrt(1.0 - eps) * dtil;
                double oriented = bracket * (dlf ? -1.0 : 1.0);
                Bits zeros = full & ~lbit & ~spect;
                double scale = 0.5 * eps * std::pow(1.0 + eps, hamming_weight(zeros));
                minmarg = std::min(minmarg, oriented / std::max(scale, 1e-300));
                if (oriented <= 0.0) ++inverted;
            }
        }
    }
    if (min_margin) *min_margin = minmarg;
    return inverted;
}

bool criterion7(std::string& detail) {
    RandomSource root(kSeed, 7);
    bool ok = true;
    std::string first_fail;

    // (a) noiseless exact recovery at kappa = 4 * 2^{n_q}
    {
        NoiseChannelSpec none(ChannelKind::dephasing, 0.0);
        for (int nq = 4; nq <= 8; ++nq) {
            RandomSource rng = root.sub(nq);
            const int trials = 60;
            int rec = 0;
            for (int t = 0; t < trials; ++t) {
                auto f = random_function(nq, rng);
                auto sol = run_hypergraph(f, none, 4L << nq, rng);
                rec += recovered_up_to_constant(f, sol.f_hat);
            }
            double rate = double(rec) / trials;
            note("noiseless n_q=%d: exact recovery %.3f at kappa=4*2^n (bound 0.95)", nq, rate);
            if (rate < 0.95) {
                ok = false;
                if (first_fail.empty())
                    first_fail = strf("noiseless recovery %.3f < 0.95 at n_q=%d", rate, nq);
            }
        }
    }

    // (b) dephasing bracket around kappa_crit = 2^{n_q-1} / 0.81
    {
        NoiseChannelSpec deph(ChannelKind::dephasing, 0.1);
        for (int nq = 4; nq <= 8; ++nq) {
            double kc = std::pow(2.0, nq - 1) / 0.81;
            auto rate_at = [&](double mult, std::uint64_t salt) {
                RandomSource rng = root.sub(100 + nq * 10 + salt);
                const int trials = 60;
                int rec = 0;
                for (int t = 0; t < trials; ++t) {
                    auto f = random_function(nq, rng);
                    auto sol = run_hypergraph(f, deph, std::lround(mult * kc), rng);
                    rec += recovered_up_to_constant(f, sol.f_hat);
                }
                return double(rec) / trials;
            };
            double hi = rate_at(4.0, 1), lo = rate_at(0.25, 2);
            note("dephasing eps=0.1 n_q=%d: recovery %.3f at 4x kappa_crit (bound >= 0.9), "
                 "%.3f at 0.25x (bound <= 0.6)",
                 nq, hi, lo);
            if (hi < 0.9 || lo > 0.6) {
                ok = false;
                if (first_fail.empty())
                    first_fail = strf("dephasing bracket broken at n_q=%d (hi %.3f, lo %.3f)", nq,
                                      hi, lo);
            }
        }
    }

    // (c) relaxation eps=0.1 at n_q=12: the criterion expects task accuracy to
    // plateau below 0.9 for total budgets up to 2^{2 n_q}. Measured as stated.
    {
        const int nq = 12;
        NoiseChannelSpec rel(ChannelKind::relaxation, 0.1);
        Concept alpha = half_alpha(nq);
        double plateau = 0.0;
        for (double log2nc : {16.0, 20.0, 24.0}) {
            long kappa = std::lround(std::pow(2.0, log2nc) / nq);
            RandomSource rng = root.sub(300 + long(log2nc));
            const int trials = 10;
            double acc = 0.0;
            for (int t = 0; t < trials; ++t) {
                auto f = random_function(nq, rng);
                auto sol = run_hypergraph(f, rel, kappa, rng);
                acc += task_accuracy(f, sol.f_hat, alpha);
            }
            acc /= trials;
            note("relaxation eps=0.1 n_q=12: task accuracy %.4f at n_c=2^%.0f "
                 "(plateau clause wants < 0.9)",
                 acc, log2nc);
            plateau = std::max(plateau, acc);
        }
        double margin12 = 0.0, margin15 = 0.0;
        long inv12 = census_inverted(12, 0.1, 24, root.sub(400), &margin12);
        long inv15 = census_inverted(15, 0.1, 3, root.sub(401), &margin15);
        note("sign census: %ld inverted configurations across 24 functions at n_q=12 "
             "(min margin %.3f) vs %ld across 3 functions at n_q=15 (min margin %.3f)",
             inv12, margin12, inv15, margin15);
        if (plateau >= 0.9) {
            ok = false;
            if (first_fail.empty())
                first_fail = strf(
                    "relaxation plateau clause unmet: accuracy reaches %.4f at n_q=12 (needs "
                    "< 0.9); the sign census shows the responsible inversion mechanism first "
                    "activates at n_q=15, so the collapse is out of reach at this size",
                    plateau);
        }
    }

    detail = ok ? "noiseless and dephasing budget thresholds hold; relaxation collapse clause met"
                : first_fail;
    return ok;
}

// ---------------------------------------------------------------------------
// 8. GF(2) elimination vs exhaustive enumeration
// ---------------------------------------------------------------------------

bool criterion8(std::string& detail) {
    RandomSource rng(kSeed, 8);
    for (int trial = 0; trial < 100; ++trial) {
        int cols = 1 + int(rng.below(12));
        int rows = 1 + int(rng.below(std::uint64_t(3 * cols)));
        Gf2Matrix a{std::size_t(cols)};
        std::vector<Bits> rowbits;
        Bits xt = Bits(rng.below(std::uint64_t(1) << cols));
        std::vector<std::uint8_t> rhs;
        for (int r = 0; r < rows; ++r) {
            Bits rb = Bits(rng.below(std::uint64_t(1) << cols));
            std::size_t ri = a.add_row();
            for (int c = 0; c < cols; ++c) a.set(ri, std::size_t(c), get_bit(rb, c));
            rowbits.push_back(rb);
            rhs.push_back(std::uint8_t(parity(rb & xt))); // consistent by construction
        }
        auto sol = gf2_eliminate(a, rhs);
        if (!sol.inconsistent_rows.empty()) {
            detail = strf("trial %d: consistent system flagged %zu inconsistent rows", trial,
                          sol.inconsistent_rows.size());
            return false;
        }
        // exhaustive: collect every solution of the system
        Bits xs = 0;
        for (int c = 0; c < cols; ++c) xs |= Bits(sol.coeffs[std::size_t(c)]) << c;
        long nsol = 0;
        bool found = false;
        for (Bits x = 0; x < (Bits(1) << cols); ++x) {
            bool sat = true;
            for (int r = 0; r < rows && sat; ++r)
                sat = (parity(rowbits[std::size_t(r)] & x) == rhs[std::size_t(r)]);
            if (sat) {
                ++nsol;
                found = found || (x == xs);
            }
        }
        if (!found || nsol != (1L << (cols - int(sol.rank)))) {
            detail = strf("trial %d: solver output %svalid, rank %zu vs %ld enumerated solutions "
                          "over %d columns",
                          trial, found ? "" : "in", sol.rank, nsol, cols);
            return false;
        }
        // free columns stay zero by convention
        for (int c = 0; c < cols; ++c)
            if (!sol.pivoted[std::size_t(c)] && sol.coeffs[std::size_t(c)]) {
                detail = strf("trial %d: free column %d nonzero", trial, c);
                return false;
            }
    }
    detail = "100 random consistent systems (up to 12 columns): elimination output always among "
             "the enumerated solutions, rank matches the solution count, free columns pinned to 0";
    return true;
}

// ---------------------------------------------------------------------------
// 9. Extrapolation machinery
// ---------------------------------------------------------------------------

AccuracyCurve logistic_curve(const std::vector<double>& grid, double c, double slope) {
    AccuracyCurve out;
    out.k = grid;
    for (double k : grid) out.accuracy.push_back(0.5 + 0.5 / (1.0 + std::exp(-slope * (k - c))));
    return out;
}

ThresholdSurface synthetic_surface(const std::vector<double>& thresholds,
                                   const std::vector<int>& sizes,
                                   const std::function<double(double, int)>& kx,
                                   const std::function<double(double, int)>& sigma) {
    ThresholdSurface s;
    s.thresholds = thresholds;
    s.sizes = sizes;
    s.z_boot = 1.645;
    s.B = 0;
    for (double t : thresholds) {
        std::vector<SurfacePoint> row;
        for (int nq : sizes) {
            SurfacePoint pt;
            pt.n_q = nq;
            pt.valid = true;
            pt.n_success = 1000;
            pt.median_kx = kx(t, nq);
            pt.sigma_k = sigma(t, nq);
            pt.k_lo = pt.median_kx - 1.645 * pt.sigma_k;
            pt.k_hi = pt.median_kx + 1.645 * pt.sigma_k;
            row.push_back(pt);
        }
        s.points.push_back(row);
    }
    return s;
}

bool criterion9(std::string& detail) {
    RandomSource root(kSeed, 9);

    // exact coefficient recovery on noise-free surfaces
    auto surf = synthetic_surface(
        {0.6, 0.7, 0.8}, {6, 8, 10, 12},
        [](double t, int nq) { return (1.0 + t) + (0.5 + t) / double(nq); },
        [](double, int) { return 0.02; });
    auto fit = fit_finite_size(surf);
    for (const auto& s : fit.slices)
        if (std::abs(s.C - (1.0 + s.T)) > 1e-9 || std::abs(s.beta - (0.5 + s.T)) > 1e-9) {
            detail = strf("exact recovery failed at T=%.2f: C=%.12f beta=%.12f", s.T, s.C, s.beta);
            return false;
        }
    note("noise-free synthetic surfaces: (C, beta) recovered to 1e-9");

    // bootstrap interval coverage on Gaussian crossings
    std::vector<double> grid;
    for (int i = 0; i <= 30; ++i) grid.push_back(0.8 + i / 30.0);
    RandomSource rng = root.sub(1);
    const int reps = 200;
    int covered = 0;
    for (int rep = 0; rep < reps; ++rep) {
        CurveSet set;
        set.n_q = 10;
        for (int r = 0; r < 12; ++r)
            set.replicates.push_back(logistic_curve(grid, 1.3 + 0.05 * rng.normal(), 3.0));
        auto s = bootstrap_surface({set}, {0.75}, 600, 0.10, rng);
        const auto& pt = s.points[0][0];
        if (!pt.valid) {
            detail = "bootstrap produced an invalid point on well-behaved synthetic data";
            return false;
        }
        covered += (pt.k_lo <= 1.3 && 1.3 <= pt.k_hi);
    }
    note("nominal 90%% bootstrap interval: empirical coverage %d/%d (bound 170)", covered, reps);
    if (covered < int(0.85 * reps)) {
        detail = strf("coverage %d/%d below the 85%% floor", covered, reps);
        return false;
    }

    // trust gates: pass on clean data, fire on constructed violations
    std::vector<double> tgrid = default_threshold_grid();
    std::vector<int> sizes{5, 6, 7, 8, 9, 10, 11, 12};
    auto clean = synthetic_surface(
        tgrid, sizes, [](double t, int nq) { return (1.0 + t) + (0.5 + t) / double(nq); },
        [](double, int) { return 0.02; });
    auto dclean = forward_validation(clean);
    if (!trust_gate(dclean, 12).trusted) {
        detail = "trust gate rejected model-consistent data";
        return false;
    }
    auto bent = clean;
    std::size_t hot = std::size_t(std::llround(0.9 * double(tgrid.size() - 1)));
    for (auto& pt : bent.points[hot]) {
        pt.median_kx += 40.0 / double(pt.n_q) / double(pt.n_q);
        if (pt.n_q > 8) pt.valid = false;
    }
    auto gate_bent = trust_gate(forward_validation(bent), 12);
    if (gate_bent.trusted || gate_bent.reason != "cross-slice instability") {
        detail = strf("instability gate did not fire (reason '%s')", gate_bent.reason.c_str());
        return false;
    }
    auto small = synthetic_surface(
        tgrid, {8, 10, 12, 14},
        [](double t, int nq) { return (1.0 + t) + (0.5 + t) / double(nq); },
        [](double, int) { return 0.02; });
    auto gate_small = trust_gate(forward_validation(small), 14);
    if (gate_small.trusted || gate_small.reason != "insufficient horizons") {
        detail = strf("horizon gate did not fire (reason '%s')", gate_small.reason.c_str());
        return false;
    }
    auto big = dclean;
    big.sigma_cv_extrap = 0.2;
    auto gate_big = trust_gate(big, 12);
    if (gate_big.trusted || gate_big.reason != "boundary discrepancy exceeds one octave") {
        detail = strf("octave gate did not fire (reason '%s')", gate_big.reason.c_str());
        return false;
    }
    note("trust gates: pass on clean data; fire with the expected reasons on violations");

    detail = strf("exact (C, beta) recovery, %d/%d coverage of the 90%% interval, and all three "
                  "trust gates behave as designed",
                  covered, reps);
    return true;
}

// ---------------------------------------------------------------------------
// 10. End-to-end advantage report (desk-scale substitute)
// ---------------------------------------------------------------------------

bool criterion10(std::string& detail) {
    RandomSource root(kSeed, 10);
    DeviceModel dev = device_c();
    auto vmfit =
        fit_vm_for_device(dev, {3, 4, 5, 6, 7, 8}, SimulationBudget{10, 1, 400}, root.sub(1));
    note("A_Q model: device C, half-weight alpha, V_m fit c=%.4f beta=%.4f", vmfit.c, vmfit.beta);

    struct Channel {
        std::string label;
        NoiseChannelSpec spec;
    };
    std::vector<Channel> chans{{"dephasing eps=0.10", {ChannelKind::dephasing, 0.1}},
                               {"relaxation eps=0.10", {ChannelKind::relaxation, 0.1}},
                               {"relaxation eps=0.01", {ChannelKind::relaxation, 0.01}}};
    const std::vector<double> kgrid{1.0, 1.2, 1.4, 1.6, 1.8, 2.0};
    const std::vector<int> sizes{5, 6, 7, 8, 9, 10};
    const std::vector<int> targets{5, 6, 7, 8, 9, 10, 11, 12};
    const int reps = 5, trials = 10;
    const double eta = 0.01;

    // replicate accuracy at one (method, channel, size, k) cell
    auto eigen_cell = [&](const NoiseChannelSpec& spec, int nq, double k, RandomSource rng) {
        Concept alpha = half_alpha(nq);
        std::size_t nc = std::size_t(std::llround(std::pow(2.0, k * nq)));
        int hits = 0;
        for (int t = 0; t < trials; ++t) {
            auto f = random_function(nq, rng);
            Bits y = Bits(rng.below(std::uint64_t(1) << (nq - 1)));
            auto s = sample_surrogate(f, spec, alpha, y, nc, SurrogateMode::full, rng);
            auto p = eigenshadow_decode(s, rng, 3000);
            hits += (p.bit == target_bit(f, y, alpha));
        }
        return double(hits) / trials;
    };
    auto hyper_cell = [&](const NoiseChannelSpec& spec, int nq, double k, RandomSource rng) {
        Concept alpha = half_alpha(nq);
        long kappa = std::max(1L, std::lround(std::pow(2.0, k * nq) / nq));
        double acc = 0.0;
        for (int t = 0; t < trials; ++t) {
            auto f = random_function(nq, rng);
            auto sol = run_hypergraph(f, spec, kappa, rng);
            acc += task_accuracy(f, sol.f_hat, alpha);
        }
        return acc / trials;
    };

    struct MethodReport {
        std::string name;
        AdvantageInputs inputs;
    };
    std::map<std::string, std::vector<AdvantagePoint>> reports; // channel label -> report
    std::uint64_t stream = 100;
    for (const auto& ch : chans) {
        std::vector<AdvantageInputs> inputs;
        for (int mi = 0; mi < 2; ++mi) {
            const bool eig = mi == 0;
            std::vector<CurveSet> sets;
            for (int nq : sizes) {
                CurveSet set;
                set.n_q = nq;
                for (int r = 0; r < reps; ++r) {
                    AccuracyCurve c;
                    c.k = kgrid;
                    for (double k : kgrid) {
                        RandomSource rng = root.sub(stream++);
                        c.accuracy.push_back(eig ? eigen_cell(ch.spec, nq, k, rng)
                                                 : hyper_cell(ch.spec, nq, k, rng));
                    }
                    set.replicates.push_back(std::move(c));
                }
                sets.push_back(std::move(set));
            }
            RandomSource brng = root.sub(stream++);
            auto surf = bootstrap_surface(sets, default_threshold_grid(), 400, 0.10, brng);
            AdvantageInputs in;
            in.method = eig ? "eigenvector" : "hypergraph";
            in.fit = fit_finite_size(surf);
            in.diag = forward_validation(surf);
            in.nq_max_obs = sizes.back();
            auto gate = trust_gate(in.diag, in.nq_max_obs);
            note("%s / %s: %zu usable threshold slices, validation %s%s%s", ch.label.c_str(),
                 in.method.c_str(), in.fit.slices.size(), gate.trusted ? "trusted" : "untrusted",
                 gate.trusted ? "" : " (", gate.trusted ? "" : (gate.reason + ")").c_str());
            inputs.push_back(std::move(in));
        }
        auto a_q = [&](int nq) {
            return predict_accuracy(nq, std::max(1, nq / 2), ch.spec, dev, vmfit);
        };
        reports[ch.label] = advantage_report(inputs, a_q, targets, eta, 1e-6);
        for (const auto& p : reports[ch.label])
            if (p.n_q == 10 || p.n_q == sizes.back())
                note("%s n_q=%d %s: A_Q=%.3f T_eta=%.3f log2(n_c)=%.2f %s%s%s", ch.label.c_str(),
                     p.n_q, p.method.c_str(), p.a_q, p.t_eta, p.log2_nc,
                     p.trusted ? "trusted" : "untrusted", p.best ? " best" : "",
                     p.censor_flag.empty() ? "" : (" [" + p.censor_flag + "]").c_str());
    }

    bool ok = true;
    std::string first_fail;
    auto fail = [&](const std::string& msg) {
        ok = false;
        if (first_fail.empty()) first_fail = msg;
        note("check failed: %s", msg.c_str());
    };

    // (a) best-method selection at the largest observed size
    auto best_at = [&](const std::string& chan, int nq) -> std::string {
        for (const auto& p : reports[chan])
            if (p.n_q == nq && p.best) return p.method;
        return "(none)";
    };
    std::string best_deph = best_at("dephasing eps=0.10", 10);
    std::string best_rel = best_at("relaxation eps=0.10", 10);
    note("best MF method at n_q=10: dephasing -> %s, relaxation eps=0.1 -> %s", best_deph.c_str(),
         best_rel.c_str());
    if (best_deph != "hypergraph")
        fail(strf("dephasing at n_q=10 selected %s, expected hypergraph", best_deph.c_str()));
    if (best_rel != "eigenvector")
        fail(strf("relaxation eps=0.1 at n_q=10 selected %s, expected the eigenvector method; "
                  "that ranking relies on the hypergraph solver collapsing, and its sign-"
                  "inversion mechanism first activates at n_q=15 (criterion 7 census), so at "
                  "observable sizes the hypergraph route stays cheaper",
                  best_rel.c_str()));

    // (b) budgets grow with size along every trusted, uncensored track
    for (const auto& [chan, rep] : reports) {
        std::map<std::string, double> last;
        for (const auto& p : rep) {
            if (!p.trusted || !p.censor_flag.empty() || std::isnan(p.log2_nc)) continue;
            auto it = last.find(p.method);
            if (it != last.end() && p.log2_nc <= it->second)
                fail(strf("%s %s: log2(n_c) %.3f at n_q=%d does not exceed the previous size's "
                          "%.3f",
                          chan.c_str(), p.method.c_str(), p.log2_nc, p.n_q, it->second));
            last[p.method] = p.log2_nc;
        }
    }

    // (c) at fixed size, the reported relaxation budget is larger at eps=0.1
    {
        int comparable = 0;
        for (int nq : targets) {
            double hi = std::numeric_limits<double>::quiet_NaN();
            double lo = std::numeric_limits<double>::quiet_NaN();
            for (const auto& p : reports["relaxation eps=0.10"])
                if (p.n_q == nq && p.best && p.censor_flag.empty()) hi = p.log2_nc;
            for (const auto& p : reports["relaxation eps=0.01"])
                if (p.n_q == nq && p.best && p.censor_flag.empty()) lo = p.log2_nc;
            if (std::isnan(hi) || std::isnan(lo)) continue;
            ++comparable;
            if (hi <= lo)
                fail(strf("relaxation n_q=%d: best log2(n_c) %.3f at eps=0.1 not larger than "
                          "%.3f at eps=0.01",
                          nq, hi, lo));
            else
                note("relaxation n_q=%d: best log2(n_c) %.3f at eps=0.1 vs %.3f at eps=0.01", nq,
                     hi, lo);
        }
        if (comparable == 0) fail("no size had uncensored best points for both relaxation levels");
    }

    detail = ok ? "pipeline runs end to end; method selection, budget growth, and the "
                  "noise-level ordering all match"
                : first_fail;
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        const char* name;
        bool (*run)(std::string&);
    };
    const std::vector<Criterion> all{
        {1, "noiseless determinism", criterion1},
        {2, "preparation-noise analytics", criterion2},
        {3, "factorization bound", criterion3},
        {4, "shadow variance law", criterion4},
        {5, "surrogate covariance", criterion5},
        {6, "eigenvector-method scaling", criterion6},
        {7, "hypergraph thresholds", criterion7},
        {8, "GF(2) oracle equivalence", criterion8},
        {9, "extrapolation machinery", criterion9},
        {10, "end-to-end advantage report", criterion10},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool pass = false;
        try {
            pass = c.run(detail);
        } catch (const std::exception& e) {
            detail = strf("exception: %s", e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %2d (%s): %s [%.1fs]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    detail.c_str(), secs);
        std::fflush(stdout);
        failed += !pass;
    }
    if (failed) std::printf("%d criterion(s) failed\n", failed);
    else std::printf("all criteria passed\n");
    return failed;
}
