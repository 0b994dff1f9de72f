#pragma once
// Shell-feature extraction from shadow sectors and a regularized logistic
// classifier trained with Adam, used as a learned measure-first decoder for
// the relation bit in the y = 0 gauge.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rps/mf_spectral.hpp"
#include "rps/shadows.hpp"

namespace rps {

enum class FeatureVariant { baseline, paired };

struct ShellFeatures {
    FeatureVariant variant = FeatureVariant::baseline;
    int n_q = 0;
    std::vector<double> values;         // anchors first, then shell averages
    std::vector<std::size_t> shell_sizes; // |S_k| for k = 1..n_q-1
    std::vector<bool> empty_shell;      // flag per shell (value forced to 0)

    std::size_t dim() const { return values.size(); }
};

// Shell averages of row-column coherence products around the anchors
// d_{y^alpha}, d_y and the central coherence Re[r_y]. Shells collect the
// intermediate basis states at Hamming weight k from y, excluding the two
// anchor points. Requires the y = 0 gauge.
inline ShellFeatures extract_features(const SurrogateSectorSample& s, FeatureVariant variant) {
    const std::size_t d = std::size_t(1) << s.n_q;
    if (s.row.size() != d || s.col.size() != d || s.diag.size() != d)
        throw std::invalid_argument("extract_features: sectors missing");
    if (s.y != 0) throw std::invalid_argument("extract_features: y = 0 gauge required");

    ShellFeatures out;
    out.variant = variant;
    out.n_q = s.n_q;
    const Bits ya = s.alpha_mask;
    out.values = {s.diag[ya], s.diag[0], s.row[0].real()};

    const int shells = s.n_q - 1;
    std::vector<double> rr(std::max(shells, 0), 0.0), ii(std::max(shells, 0), 0.0);
    out.shell_sizes.assign(shells, 0);
    for (Bits t = 1; t < d; ++t) {
        if (t == ya) continue; // y = 0 itself never reaches k >= 1
        int k = hamming_weight(t);
        if (k < 1 || k > shells) continue;
        rr[k - 1] += s.row[t].real() * s.col[t].real();
        ii[k - 1] += s.row[t].imag() * s.col[t].imag();
        ++out.shell_sizes[k - 1];
    }
    out.empty_shell.assign(shells, false);
    for (int k = 0; k < shells; ++k) {
        if (out.shell_sizes[k] == 0) {
            out.empty_shell[k] = true;
            rr[k] = ii[k] = 0.0;
        } else {
            rr[k] /= double(out.shell_sizes[k]);
            ii[k] /= double(out.shell_sizes[k]);
        }
    }
    for (int k = 0; k < shells; ++k) out.values.push_back(rr[k]);
    if (variant == FeatureVariant::paired)
        for (int k = 0; k < shells; ++k) out.values.push_back(ii[k]);
    return out;
}

struct LogisticModel {
    std::vector<double> weights;
    double intercept = 0.0;
    std::vector<double> feat_mean; // standardization fitted on the training split
    std::vector<double> feat_std;

    double score(const std::vector<double>& x) const {
        if (x.size() != weights.size()) throw std::invalid_argument("LogisticModel: dim mismatch");
        double s = intercept;
        for (std::size_t i = 0; i < x.size(); ++i)
            s += weights[i] * (x[i] - feat_mean[i]) / feat_std[i];
        return s;
    }
    double probability(const std::vector<double>& x) const {
        return 1.0 / (1.0 + std::exp(-score(x)));
    }
    int classify(const std::vector<double>& x) const { return score(x) > 0.0 ? 1 : 0; }
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 256;    // 0 selects full-batch gradient descent
    double learning_rate = 1e-2;
    double l2_lambda = 1e-3;
    double train_fraction = 0.8;
};

struct TrainResult {
    LogisticModel model;
    double validation_accuracy = 0.0;
    std::vector<double> epoch_loss; // regularized training loss after each epoch
    std::size_t n_train = 0, n_val = 0;
};

// Regularized binary cross-entropy on a balanced dataset: random 80/20 split,
// standardization fitted on the training split only, zero-initialized Adam
// (full-batch mode falls back to plain gradient descent).
inline TrainResult train_logistic(const std::vector<std::vector<double>>& x,
                                  const std::vector<int>& labels, const TrainConfig& cfg,
                                  RandomSource& rng) {
    const std::size_t n = x.size();
    if (n == 0 || labels.size() != n) throw std::invalid_argument("train_logistic: bad dataset");
    const std::size_t dim = x[0].size();
    std::size_t ones = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i].size() != dim) throw std::invalid_argument("train_logistic: ragged features");
        if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("train_logistic: labels");
        ones += std::size_t(labels[i]);
    }
    if (2 * ones != n) throw std::invalid_argument("train_logistic: dataset must be balanced");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
    const std::size_t ntr = std::size_t(cfg.train_fraction * double(n));
    if (ntr == 0 || ntr == n) throw std::invalid_argument("train_logistic: empty split");

    TrainResult res;
    res.n_train = ntr;
    res.n_val = n - ntr;
    auto& m = res.model;
    m.feat_mean.assign(dim, 0.0);
    m.feat_std.assign(dim, 0.0);
    for (std::size_t i = 0; i < ntr; ++i)
        for (std::size_t j = 0; j < dim; ++j) m.feat_mean[j] += x[idx[i]][j];
    for (auto& v : m.feat_mean) v /= double(ntr);
    for (std::size_t i = 0; i < ntr; ++i)
        for (std::size_t j = 0; j < dim; ++j) {
            double dlt = x[idx[i]][j] - m.feat_mean[j];
            m.feat_std[j] += dlt * dlt;
        }
    for (auto& v : m.feat_std) {
        v = std::sqrt(v / double(ntr));
        if (v < 1e-12) v = 1.0; // degenerate feature guard
    }

    // standardized training matrix
    std::vector<std::vector<double>> xt(ntr, std::vector<double>(dim));
    std::vector<int> yt(ntr);
    for (std::size_t i = 0; i < ntr; ++i) {
        for (std::size_t j = 0; j < dim; ++j)
            xt[i][j] = (x[idx[i]][j] - m.feat_mean[j]) / m.feat_std[j];
        yt[i] = labels[idx[i]];
    }

    m.weights.assign(dim, 0.0);
    m.intercept = 0.0;
    std::vector<double> mw(dim, 0.0), vw(dim, 0.0);
    double mb = 0.0, vb = 0.0;
    const double b1 = 0.9, b2 = 0.999, aeps = 1e-8;
    long step = 0;

    auto raw_score = [&](const std::vector<double>& row) {
        double s = m.intercept;
        for (std::size_t j = 0; j < dim; ++j) s += m.weights[j] * row[j];
        return s;
    };
    auto full_loss = [&]() {
        double loss = 0.0;
        for (std::size_t i = 0; i < ntr; ++i) {
            double s = raw_score(xt[i]);
            // numerically stable log(1 + exp(-|s|)) form
            loss += std::max(s, 0.0) - s * yt[i] + std::log1p(std::exp(-std::abs(s)));
        }
        loss /= double(ntr);
        double w2 = 0.0;
        for (double w : m.weights) w2 += w * w;
        return loss + 0.5 * cfg.l2_lambda * w2;
    };

    std::vector<std::size_t> order(ntr);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> gw(dim);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.batch_size <= 0) {
            // full-batch plain gradient descent
            std::fill(gw.begin(), gw.end(), 0.0);
            double gb = 0.0;
            for (std::size_t i = 0; i < ntr; ++i) {
                double p = 1.0 / (1.0 + std::exp(-raw_score(xt[i])));
                double e = p - yt[i];
                for (std::size_t j = 0; j < dim; ++j) gw[j] += e * xt[i][j];
                gb += e;
            }
            for (std::size_t j = 0; j < dim; ++j) {
                gw[j] = gw[j] / double(ntr) + cfg.l2_lambda * m.weights[j];
                m.weights[j] -= cfg.learning_rate * gw[j];
            }
            m.intercept -= cfg.learning_rate * gb / double(ntr);
        } else {
            for (std::size_t i = ntr - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
            for (std::size_t start = 0; start < ntr; start += std::size_t(cfg.batch_size)) {
                std::size_t stop = std::min(ntr, start + std::size_t(cfg.batch_size));
                std::fill(gw.begin(), gw.end(), 0.0);
                double gb = 0.0;
                for (std::size_t k = start; k < stop; ++k) {
                    const auto& row = xt[order[k]];
                    double p = 1.0 / (1.0 + std::exp(-raw_score(row)));
                    double e = p - yt[order[k]];
                    for (std::size_t j = 0; j < dim; ++j) gw[j] += e * row[j];
                    gb += e;
                }
                double inv = 1.0 / double(stop - start);
                ++step;
                double c1 = 1.0 - std::pow(b1, double(step));
                double c2 = 1.0 - std::pow(b2, double(step));
                for (std::size_t j = 0; j < dim; ++j) {
                    double g = gw[j] * inv + cfg.l2_lambda * m.weights[j];
                    mw[j] = b1 * mw[j] + (1.0 - b1) * g;
                    vw[j] = b2 * vw[j] + (1.0 - b2) * g * g;
                    m.weights[j] -= cfg.learning_rate * (mw[j] / c1) / (std::sqrt(vw[j] / c2) + aeps);
                }
                double g = gb * inv;
                mb = b1 * mb + (1.0 - b1) * g;
                vb = b2 * vb + (1.0 - b2) * g * g;
                m.intercept -= cfg.learning_rate * (mb / c1) / (std::sqrt(vb / c2) + aeps);
            }
        }
        res.epoch_loss.push_back(full_loss());
    }

    std::size_t hits = 0;
    for (std::size_t i = ntr; i < n; ++i)
        if (m.classify(x[idx[i]]) == labels[idx[i]]) ++hits;
    res.validation_accuracy = double(hits) / double(res.n_val);
    return res;
}

// Threshold of the central target coherence at zero: the non-learned control
// the trained classifier is compared against.
inline MfPrediction baseline_classifier(const SurrogateSectorSample& s, RandomSource& rng) {
    return single_element_decode(s, rng);
}

struct ShellDataset {
    std::vector<std::vector<double>> features;
    std::vector<int> labels; // relation bit at y = 0
};

// Balanced dataset of shell features for random hidden functions at a fixed
// (n_q, alpha, channel, n_c) configuration.
inline ShellDataset generate_shell_dataset(int n_q, const Concept& alpha,
                                           const NoiseChannelSpec& prep, std::size_t n_c,
                                           std::size_t n_samples, FeatureVariant variant,
                                           RandomSource& rng) {
    if (n_samples % 2 != 0) throw std::invalid_argument("generate_shell_dataset: need even size");
    ShellDataset out;
    std::size_t want[2] = {n_samples / 2, n_samples / 2};
    while (want[0] + want[1] > 0) {
        auto f = random_function(n_q, rng);
        int b = target_bit(f, 0, alpha);
        if (want[b] == 0) continue;
        --want[b];
        auto s = sample_surrogate(f, prep, alpha, 0, n_c, SurrogateMode::sectors, rng);
        out.features.push_back(extract_features(s, variant).values);
        out.labels.push_back(b);
    }
    return out;
}

} // namespace rps
