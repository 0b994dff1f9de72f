#pragma once
// Sample-complexity extrapolation: threshold-crossing compression of accuracy
// curves, curve-level bootstrap of the crossing surface, inverse-size
// weighted least-squares fits with PCHIP interpolation over threshold,
// forward-chaining validation with trust gates, and the advantage report
// comparing measure-first budgets against the quantum reference curve.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rps/rng.hpp"

namespace rps {

struct AccuracyCurve {
    std::vector<double> k;        // strictly increasing sampling coordinate
    std::vector<double> accuracy; // values in [0, 1]
};

enum class Censor { none, left, right };

struct Crossing {
    double k_x = 0.0;
    Censor censor = Censor::none;
    bool ok() const { return censor == Censor::none; }
};

namespace detail {

inline void check_curve(const AccuracyCurve& c) {
    if (c.k.size() != c.accuracy.size() || c.k.size() < 2)
        throw std::invalid_argument("AccuracyCurve: need >= 2 aligned points");
    for (std::size_t i = 0; i < c.k.size(); ++i) {
        if (i > 0 && !(c.k[i] > c.k[i - 1]))
            throw std::invalid_argument("AccuracyCurve: k grid must be strictly increasing");
        if (c.accuracy[i] < 0.0 || c.accuracy[i] > 1.0)
            throw std::invalid_argument("AccuracyCurve: accuracy outside [0, 1]");
    }
}

inline std::vector<double> running_maximum(std::vector<double> v) {
    for (std::size_t i = 1; i < v.size(); ++i) v[i] = std::max(v[i], v[i - 1]);
    return v;
}

// Acklam's rational approximation of the standard normal quantile;
// relative error below 1.15e-9 over the open unit interval.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double pl = 0.02425;
    if (p < pl) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - pl) return -normal_quantile(1.0 - p);
    double q = p - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Type-7 empirical quantile (linear interpolation between order statistics).
inline double quantile(std::vector<double> v, double p) {
    if (v.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(v.begin(), v.end());
    double h = p * double(v.size() - 1);
    std::size_t lo = std::size_t(std::floor(h));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - double(lo)) * (v[hi] - v[lo]);
}

// Fritsch-Carlson monotone cubic Hermite slopes.
inline std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> h(n - 1), delta(n - 1), m(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    if (n == 2) return {delta[0], delta[0]};
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            m[i] = 0.0;
        } else {
            double w1 = 2.0 * h[i] + h[i - 1], w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    // one-sided endpoint rule with monotonicity clamping
    auto endpoint = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0.0) return 0.0;
        if (d0 * d1 <= 0.0 && std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return s;
    };
    m[0] = endpoint(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return m;
}

// PCHIP evaluation with linear fallback for two knots and clamping outside
// the knot range.
inline double pchip_eval(const std::vector<double>& x, const std::vector<double>& y, double t) {
    if (x.size() != y.size() || x.empty()) throw std::invalid_argument("pchip_eval: bad knots");
    if (x.size() == 1) return y[0];
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t i = std::size_t(it - x.begin()) - 1;
    auto m = pchip_slopes(x, y);
    double h = x[i + 1] - x[i], s = (t - x[i]) / h;
    double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    double h10 = s * (1.0 - s) * (1.0 - s);
    double h01 = s * s * (3.0 - 2.0 * s);
    double h11 = s * s * (s - 1.0);
    return h00 * y[i] + h10 * h * m[i] + h01 * y[i + 1] + h11 * h * m[i + 1];
}

} // namespace detail

// Crossing of the running-maximum envelope with the threshold T via linear
// interpolation between bracketing grid points.
inline Crossing threshold_crossing(const AccuracyCurve& curve, double T) {
    detail::check_curve(curve);
    if (!(T > 0.5 && T < 1.0))
        throw std::invalid_argument("threshold_crossing: T must lie in (0.5, 1)");
    auto a = detail::running_maximum(curve.accuracy);
    if (a.front() >= T) return {curve.k.front(), Censor::left};
    if (a.back() < T) return {curve.k.back(), Censor::right};
    for (std::size_t j = 0; j + 1 < a.size(); ++j) {
        if (a[j] < T && T <= a[j + 1]) {
            double kx = curve.k[j] +
                        (T - a[j]) / (a[j + 1] - a[j]) * (curve.k[j + 1] - curve.k[j]);
            return {kx, Censor::none};
        }
    }
    throw std::logic_error("threshold_crossing: bracket not found");
}

inline std::vector<double> default_threshold_grid() {
    std::vector<double> t;
    for (int i = 0; i < 24; ++i) t.push_back(0.51 + 0.02 * i); // 0.51 .. 0.97
    return t;
}

// Replicated empirical accuracy curves at one system size; replicates must
// share the k grid.
struct CurveSet {
    int n_q = 0;
    std::vector<AccuracyCurve> replicates;
};

struct SurfacePoint {
    int n_q = 0;
    double median_kx = 0.0;
    double k_lo = 0.0, k_hi = 0.0;
    double sigma_k = 0.0;
    long n_success = 0;
    bool valid = false;
};

struct ThresholdSurface {
    std::vector<double> thresholds;
    std::vector<int> sizes;
    std::vector<std::vector<SurfacePoint>> points; // [threshold][size]
    double z_boot = 0.0;
    long B = 0;
};

// Curve-level bootstrap: each replicate resamples whole curves with
// replacement, averages them, monotonicizes and inverts. Points with fewer
// than 20 successful (non-censored) inversions are marked invalid.
inline ThresholdSurface bootstrap_surface(const std::vector<CurveSet>& data,
                                          const std::vector<double>& thresholds, long B,
                                          double alpha_ci, RandomSource& rng) {
    if (data.empty()) throw std::invalid_argument("bootstrap_surface: no curve sets");
    if (B < 1 || !(alpha_ci > 0.0 && alpha_ci < 1.0))
        throw std::invalid_argument("bootstrap_surface: bad B or alpha");
    ThresholdSurface surf;
    surf.thresholds = thresholds;
    surf.B = B;
    surf.z_boot = detail::normal_quantile(1.0 - alpha_ci / 2.0);
    surf.points.assign(thresholds.size(), {});
    for (const auto& set : data) {
        if (set.replicates.size() < 2)
            throw std::invalid_argument("bootstrap_surface: need >= 2 replicate curves");
        const auto& grid = set.replicates.front().k;
        for (const auto& c : set.replicates) {
            detail::check_curve(c);
            if (c.k != grid)
                throw std::invalid_argument("bootstrap_surface: replicates must share the k grid");
        }
        surf.sizes.push_back(set.n_q);
        const std::size_t R = set.replicates.size();
        std::vector<std::vector<double>> samples(thresholds.size());
        AccuracyCurve mean{grid, std::vector<double>(grid.size())};
        for (long b = 0; b < B; ++b) {
            std::fill(mean.accuracy.begin(), mean.accuracy.end(), 0.0);
            for (std::size_t r = 0; r < R; ++r) {
                const auto& c = set.replicates[rng.below(R)];
                for (std::size_t j = 0; j < grid.size(); ++j) mean.accuracy[j] += c.accuracy[j];
            }
            for (auto& v : mean.accuracy) v /= double(R);
            for (std::size_t t = 0; t < thresholds.size(); ++t) {
                auto cr = threshold_crossing(mean, thresholds[t]);
                if (cr.ok()) samples[t].push_back(cr.k_x);
            }
        }
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            SurfacePoint pt;
            pt.n_q = set.n_q;
            pt.n_success = long(samples[t].size());
            if (pt.n_success >= 20) {
                pt.valid = true;
                pt.median_kx = detail::quantile(samples[t], 0.5);
                pt.k_lo = detail::quantile(samples[t], alpha_ci / 2.0);
                pt.k_hi = detail::quantile(samples[t], 1.0 - alpha_ci / 2.0);
                pt.sigma_k = 0.5 * (pt.k_hi - pt.k_lo) / surf.z_boot;
            }
            surf.points[t].push_back(pt);
        }
    }
    return surf;
}

struct SliceFit {
    double T = 0.0;
    double C = 0.0, beta = 0.0;
    double cov_cc = 0.0, cov_cb = 0.0, cov_bb = 0.0; // (X^T W X)^{-1}
    int n_points = 0;
};

namespace detail {

// WLS of y = C + beta * x with weights w; returns false if degenerate.
inline bool wls_line(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& w, SliceFit& out) {
    double S = 0, Sx = 0, Sxx = 0, Sy = 0, Sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        S += w[i];
        Sx += w[i] * x[i];
        Sxx += w[i] * x[i] * x[i];
        Sy += w[i] * y[i];
        Sxy += w[i] * x[i] * y[i];
    }
    double det = S * Sxx - Sx * Sx;
    if (!(det > 0.0) || !std::isfinite(det)) return false;
    out.C = (Sxx * Sy - Sx * Sxy) / det;
    out.beta = (S * Sxy - Sx * Sy) / det;
    out.cov_cc = Sxx / det;
    out.cov_cb = -Sx / det;
    out.cov_bb = S / det;
    out.n_points = int(x.size());
    return true;
}

} // namespace detail

// Per-threshold inverse-size fits plus PCHIP interpolation of coefficients
// (and covariance elements) over the fitted threshold support.
struct FiniteSizeFit {
    std::vector<SliceFit> slices; // sorted by T, only slices with >= 3 points

    double support_lo() const { return slices.front().T; }
    double support_hi() const { return slices.back().T; }

    double predict_kx(double T, int n_q) const {
        return interp([](const SliceFit& s) { return s.C; }, T) +
               interp([](const SliceFit& s) { return s.beta; }, T) / double(n_q);
    }

    // Propagated WLS band on log2 n_c = n_q * C + beta; interpolated
    // covariance elements can dip slightly negative off-grid and are clipped.
    double sigma_wls_log2nc(double T, int n_q) const {
        double cc = interp([](const SliceFit& s) { return s.cov_cc; }, T);
        double cb = interp([](const SliceFit& s) { return s.cov_cb; }, T);
        double bb = interp([](const SliceFit& s) { return s.cov_bb; }, T);
        double v = double(n_q) * double(n_q) * cc + 2.0 * double(n_q) * cb + bb;
        return std::sqrt(std::max(v, 0.0));
    }

private:
    template <class Get>
    double interp(Get get, double T) const {
        std::vector<double> xs, ys;
        xs.reserve(slices.size());
        for (const auto& s : slices) {
            xs.push_back(s.T);
            ys.push_back(get(s));
        }
        return detail::pchip_eval(xs, ys, T);
    }
};

inline FiniteSizeFit fit_finite_size(const ThresholdSurface& surf) {
    FiniteSizeFit fit;
    const double sigma_floor = 1e-9; // zero-width bootstrap intervals keep finite weight
    for (std::size_t t = 0; t < surf.thresholds.size(); ++t) {
        std::vector<double> x, y, w;
        for (const auto& pt : surf.points[t]) {
            if (!pt.valid) continue;
            x.push_back(1.0 / double(pt.n_q));
            y.push_back(pt.median_kx);
            double s = std::max(pt.sigma_k, sigma_floor);
            w.push_back(1.0 / (s * s));
        }
        if (x.size() < 3) continue;
        SliceFit s;
        s.T = surf.thresholds[t];
        if (detail::wls_line(x, y, w, s)) fit.slices.push_back(s);
    }
    if (fit.slices.empty()) throw std::runtime_error("fit_finite_size: no usable threshold slices");
    return fit;
}

// Optional post-fit stabilization: the T -> k_x profile at fixed n_q as a
// running maximum over a dense 256-point grid. Diagnostics only; not part of
// the default pipeline.
inline std::vector<std::pair<double, double>> guarded_kx_profile(const FiniteSizeFit& fit,
                                                                 int n_q) {
    std::vector<std::pair<double, double>> prof;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 256; ++i) {
        double T = 0.51 + (0.97 - 0.51) * double(i) / 255.0;
        best = std::max(best, fit.predict_kx(T, n_q));
        prof.emplace_back(T, best);
    }
    return prof;
}

struct ValidationDiagnostics {
    bool applicable = false;
    std::string reason;          // empty when applicable
    long n_hor = 0;              // pooled held-out forecasts
    double rmse_pooled = 0.0;
    double rmse_max = 0.0;
    double sigma_cv_obs = 0.0;    // 68.27% quantile of |e_k|, one-step only
    double sigma_cv_extrap = 0.0; // same over horizons 1..3
    std::vector<double> slice_thresholds;
    std::vector<double> slice_rmse;
    std::vector<double> coverage_z;  // z values probed
    std::vector<double> coverage_h1; // fraction |e| <= z * sigma_cv_extrap, h = 1
    std::vector<double> coverage_h2; // same for h >= 2
};

// Forward-chaining validation in n_q on five interior threshold slices
// (percentile targets 10/30/50/70/90% snapped to the usable slice index):
// fit the inverse-size model on the first t sizes, predict the next 1..3.
inline ValidationDiagnostics forward_validation(const ThresholdSurface& surf) {
    ValidationDiagnostics d;
    std::vector<std::size_t> usable;
    for (std::size_t t = 0; t < surf.thresholds.size(); ++t) {
        std::size_t nvalid = 0;
        for (const auto& pt : surf.points[t]) nvalid += pt.valid;
        if (nvalid >= 3) usable.push_back(t);
    }
    if (usable.size() < 3) {
        d.reason = "insufficient threshold slices";
        return d;
    }
    std::vector<std::size_t> picks;
    for (double p : {0.10, 0.30, 0.50, 0.70, 0.90}) {
        std::size_t idx = usable[std::size_t(std::llround(p * double(usable.size() - 1)))];
        if (picks.empty() || picks.back() != idx) picks.push_back(idx);
    }

    std::vector<std::pair<int, double>> residuals; // (horizon, e_k)
    for (std::size_t t : picks) {
        std::vector<const SurfacePoint*> pts;
        for (const auto& pt : surf.points[t])
            if (pt.valid) pts.push_back(&pt);
        std::sort(pts.begin(), pts.end(),
                  [](const SurfacePoint* a, const SurfacePoint* b) { return a->n_q < b->n_q; });
        std::vector<double> slice_res;
        const std::size_t m = pts.size();
        for (std::size_t tr = 3; tr < m; ++tr) {
            std::vector<double> x, y, w;
            for (std::size_t i = 0; i < tr; ++i) {
                x.push_back(1.0 / double(pts[i]->n_q));
                y.push_back(pts[i]->median_kx);
                double s = std::max(pts[i]->sigma_k, 1e-9);
                w.push_back(1.0 / (s * s));
            }
            SliceFit s;
            if (!detail::wls_line(x, y, w, s)) continue;
            for (std::size_t h = 1; h <= 3 && tr + h - 1 < m; ++h) {
                const auto* held = pts[tr + h - 1];
                double e = held->median_kx - (s.C + s.beta / double(held->n_q));
                residuals.emplace_back(int(h), e);
                slice_res.push_back(e);
            }
        }
        if (!slice_res.empty()) {
            double sq = 0.0;
            for (double e : slice_res) sq += e * e;
            d.slice_thresholds.push_back(surf.thresholds[t]);
            d.slice_rmse.push_back(std::sqrt(sq / double(slice_res.size())));
        }
    }

    if (residuals.empty()) {
        d.reason = "no held-out forecast horizons";
        return d;
    }
    d.applicable = true;
    d.n_hor = long(residuals.size());
    double sq = 0.0;
    std::vector<double> abs_all, abs_h1;
    for (auto& [h, e] : residuals) {
        sq += e * e;
        abs_all.push_back(std::abs(e));
        if (h == 1) abs_h1.push_back(std::abs(e));
    }
    d.rmse_pooled = std::sqrt(sq / double(d.n_hor));
    d.rmse_max = d.slice_rmse.empty()
                     ? 0.0
                     : *std::max_element(d.slice_rmse.begin(), d.slice_rmse.end());
    d.sigma_cv_extrap = detail::quantile(abs_all, 0.6827);
    d.sigma_cv_obs = abs_h1.empty() ? d.sigma_cv_extrap : detail::quantile(abs_h1, 0.6827);

    d.coverage_z = {1.0, 1.64485, 1.95996};
    for (double z : d.coverage_z) {
        long c1 = 0, n1 = 0, c2 = 0, n2 = 0;
        for (auto& [h, e] : residuals) {
            bool in = std::abs(e) <= z * d.sigma_cv_extrap;
            if (h == 1) {
                ++n1;
                c1 += in;
            } else {
                ++n2;
                c2 += in;
            }
        }
        d.coverage_h1.push_back(n1 ? double(c1) / double(n1) : 0.0);
        d.coverage_h2.push_back(n2 ? double(c2) / double(n2) : 0.0);
    }
    return d;
}

struct TrustGate {
    bool trusted = false;
    std::string reason; // empty when trusted
};

// Extrapolated points beyond the observed range are reported only when all
// gates hold: validation applicable, N_hor >= 12, boundary discrepancy
// n_q_max * sigma_cv <= 1 in log2 n_c units, instability ratio <= 2.5.
inline TrustGate trust_gate(const ValidationDiagnostics& d, int nq_max_obs) {
    if (!d.applicable) return {false, d.reason.empty() ? "validation not applicable" : d.reason};
    if (d.n_hor < 12) return {false, "insufficient horizons"};
    if (double(nq_max_obs) * d.sigma_cv_extrap > 1.0)
        return {false, "boundary discrepancy exceeds one octave"};
    if (d.rmse_pooled > 0.0 && d.rmse_max / d.rmse_pooled > 2.5)
        return {false, "cross-slice instability"};
    return {true, ""};
}

struct AdvantageInputs {
    std::string method;
    FiniteSizeFit fit;
    ValidationDiagnostics diag;
    int nq_max_obs = 0;
};

struct AdvantagePoint {
    int n_q = 0;
    std::string method;
    double a_q = 0.0, t_eta = 0.0;
    double log2_nc = 0.0;
    double ci68_lo = 0.0, ci68_hi = 0.0, ci95_lo = 0.0, ci95_hi = 0.0;
    double runtime_s = 0.0;
    bool trusted = false;
    std::string censor_flag; // "", "chance", "upper-censored"
    bool best = false;       // smallest budget among methods at this size
};

// Per-size evaluation of each method's fitted predictor at the target
// threshold T_eta = A_Q - eta, with quadrature uncertainty bands and the
// chance-level / upper-censoring conventions.
inline std::vector<AdvantagePoint> advantage_report(const std::vector<AdvantageInputs>& methods,
                                                    const std::function<double(int)>& a_q,
                                                    const std::vector<int>& targets, double eta,
                                                    double cycle_time_s) {
    if (methods.empty() || targets.empty())
        throw std::invalid_argument("advantage_report: empty inputs");
    if (eta < 0.0 || cycle_time_s <= 0.0)
        throw std::invalid_argument("advantage_report: bad eta or cycle time");
    const double z95 = 1.95996;
    std::vector<AdvantagePoint> report;
    for (int nq : targets) {
        std::size_t first = report.size();
        double best_log2 = std::numeric_limits<double>::infinity();
        std::size_t best_idx = std::size_t(-1);
        for (const auto& m : methods) {
            AdvantagePoint p;
            p.n_q = nq;
            p.method = m.method;
            p.a_q = a_q(nq);
            p.t_eta = p.a_q - eta;
            bool extrapolated = nq > m.nq_max_obs;
            p.trusted = !extrapolated || trust_gate(m.diag, m.nq_max_obs).trusted;
            if (p.t_eta < 0.52) {
                p.censor_flag = "chance";
                p.log2_nc = 0.0; // n_c = 1 convention
                p.runtime_s = cycle_time_s;
            } else if (p.t_eta > std::min(0.97, m.fit.support_hi())) {
                p.censor_flag = "upper-censored";
                p.log2_nc = std::numeric_limits<double>::quiet_NaN();
            } else {
                p.log2_nc = double(nq) * m.fit.predict_kx(p.t_eta, nq);
                double s_wls = m.fit.sigma_wls_log2nc(p.t_eta, nq);
                double s_cv = double(nq) * m.diag.sigma_cv_extrap;
                double s_eff = std::sqrt(s_wls * s_wls + s_cv * s_cv);
                p.ci68_lo = p.log2_nc - s_eff;
                p.ci68_hi = p.log2_nc + s_eff;
                p.ci95_lo = p.log2_nc - z95 * s_eff;
                p.ci95_hi = p.log2_nc + z95 * s_eff;
                p.runtime_s = std::exp2(p.log2_nc) * cycle_time_s;
                if (p.log2_nc < best_log2) {
                    best_log2 = p.log2_nc;
                    best_idx = report.size();
                }
            }
            report.push_back(p);
        }
        if (best_idx != std::size_t(-1)) {
            report[best_idx].best = true;
        } else {
            // all methods censored at this size; a chance-level point (n_c = 1)
            // still identifies the cheapest convention if present
            for (std::size_t i = first; i < report.size(); ++i)
                if (report[i].censor_flag == "chance") {
                    report[i].best = true;
                    break;
                }
        }
    }
    return report;
}

} // namespace rps
