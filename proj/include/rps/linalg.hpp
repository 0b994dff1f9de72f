#pragma once
// Small dense linear algebra: Hermitian eigenvalues via Jacobi rotations on
// the real embedding (validation-scale matrices), and shifted power
// iteration for principal eigenvectors at simulation scale.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "rps/state.hpp"

namespace rps {

// Eigenvalues of a Hermitian matrix (row-major, dim x dim). The complex
// matrix H = A + iB embeds into the real symmetric [[A, -B], [B, A]] whose
// spectrum is that of H with every eigenvalue doubled.
inline std::vector<double> hermitian_eigenvalues(const std::vector<cplx>& h, std::size_t dim) {
    if (h.size() != dim * dim) throw std::invalid_argument("hermitian_eigenvalues: size mismatch");
    const std::size_t n = 2 * dim;
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            double a = h[i * dim + j].real();
            double b = h[i * dim + j].imag();
            m[i * n + j] = a;
            m[(i + dim) * n + (j + dim)] = a;
            m[i * n + (j + dim)] = -b;
            m[(i + dim) * n + j] = b;
        }
    }
    // Cyclic Jacobi sweeps.
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += m[i * n + j] * m[i * n + j];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = m[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                double app = m[p * n + p], aqq = m[q * n + q];
                double theta = 0.5 * (aqq - app) / apq;
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double mkp = m[k * n + p], mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double mpk = m[p * n + k], mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    // Each eigenvalue of H appears twice; sort and take every other one.
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = m[i * n + i];
    std::sort(diag.begin(), diag.end());
    std::vector<double> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = 0.5 * (diag[2 * i] + diag[2 * i + 1]);
    return out;
}

// Trace distance (1/2) * ||r1 - r2||_1 between two density matrices.
inline double trace_distance(const std::vector<cplx>& r1, const std::vector<cplx>& r2, std::size_t dim) {
    if (r1.size() != r2.size() || r1.size() != dim * dim)
        throw std::invalid_argument("trace_distance: size mismatch");
    std::vector<cplx> d(r1.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = r1[i] - r2[i];
    auto ev = hermitian_eigenvalues(d, dim);
    double s = 0.0;
    for (double e : ev) s += std::abs(e);
    return 0.5 * s;
}

struct PowerIterationResult {
    std::vector<cplx> vec;
    double eigenvalue = 0.0; // of the unshifted matrix
    bool converged = false;
    int iterations = 0;
};

// Shifted power iteration on H + shift*I, so the algebraically largest
// eigenvalue dominates even when shadow noise creates large negative
// eigenvalues. The shift is sized from a short burn-in estimate of the
// spectral radius (power iteration on H^2, which converges regardless of the
// sign structure); the loose Gershgorin row-sum bound overestimates the
// radius of noise-dominated shadow matrices by ~sqrt(dim) and would crush
// the convergence rate. Convergence: successive Rayleigh quotients within
// 1e-10 * max(1, shift); iteration cap 1e4.
inline PowerIterationResult power_iteration_principal(const std::vector<cplx>& h, std::size_t dim,
                                                      RandomSource& rng, int max_iters = 10000) {
    if (h.size() != dim * dim) throw std::invalid_argument("power_iteration_principal: size mismatch");

    std::vector<cplx> v(dim), w(dim);
    auto normalize = [&](std::vector<cplx>& x) {
        double n = 0.0;
        for (auto& e : x) n += std::norm(e);
        n = std::sqrt(n);
        if (n > 0.0) {
            double inv = 1.0 / n;
            for (auto& e : x) e *= inv;
        }
        return n;
    };
    auto apply = [&](const std::vector<cplx>& x, std::vector<cplx>& out) {
        for (std::size_t i = 0; i < dim; ++i) {
            const cplx* row = &h[i * dim];
            double ar = 0.0, ai = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                double xr = x[j].real(), xi = x[j].imag();
                double hr = row[j].real(), hi = row[j].imag();
                ar += hr * xr - hi * xi;
                ai += hr * xi + hi * xr;
            }
            out[i] = cplx(ar, ai);
        }
    };

    for (auto& x : v) x = cplx(rng.normal(), rng.normal());
    normalize(v);

    // burn-in: |lambda|_max estimate from H^2 applications
    double radius = 0.0;
    std::vector<cplx> u(dim);
    for (int it = 0; it < 15; ++it) {
        apply(v, w);
        if (normalize(w) <= 0.0) break;
        apply(w, u);
        radius = normalize(u);
        if (radius <= 0.0) break;
        v = u;
    }
    // 1.5x covers the burn-in being a lower bound; the shift only needs to
    // exceed (|lambda_min| - lambda_max) / 2 for the top eigenvalue to win
    const double shift = 1.5 * radius + 1e-300;
    const double tol = 1e-10 * std::max(1.0, shift);

    PowerIterationResult res;
    double prev_rq = 1e300;
    for (int it = 0; it < max_iters; ++it) {
        // w = H v (+ shift v)
        for (std::size_t i = 0; i < dim; ++i) {
            const cplx* row = &h[i * dim];
            double ar = 0.0, ai = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                double xr = v[j].real(), xi = v[j].imag();
                double hr = row[j].real(), hi = row[j].imag();
                ar += hr * xr - hi * xi;
                ai += hr * xi + hi * xr;
            }
            w[i] = cplx(ar, ai) + shift * v[i];
        }
        double rq = 0.0, wn = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            rq += (std::conj(v[i]) * w[i]).real();
            wn += std::norm(w[i]);
        }
        wn = std::sqrt(wn);
        if (wn <= 0.0) break; // pathological: stay unconverged
        double inv = 1.0 / wn;
        for (std::size_t i = 0; i < dim; ++i) v[i] = w[i] * inv;
        res.iterations = it + 1;
        if (std::abs(rq - prev_rq) < tol) {
            res.converged = true;
            res.eigenvalue = rq - shift;
            break;
        }
        prev_rq = rq;
    }
    if (!res.converged) res.eigenvalue = prev_rq - shift;
    res.vec = std::move(v);
    return res;
}

} // namespace rps
