// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Scalar similarity metrics, their per-channel (axis-averaged) application
// to multi-channel windows, and pairwise score matrices.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffsim/signal.hpp"
#include "diffsim/spectral.hpp"

namespace diffsim {

inline void require_same_nonempty(const std::vector<double>& a, const std::vector<double>& b,
                                  const char* who) {
    if (a.empty() || b.empty()) throw std::invalid_argument(std::string(who) + ": empty input");
    if (a.size() != b.size()) throw std::invalid_argument(std::string(who) + ": length mismatch");
}

/// Cosine similarity in [-1, 1]. A zero vector has no direction, so the
/// value is undefined and raises.
inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    require_same_nonempty(a, b, "cosine");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw std::runtime_error("cosine: undefined cosine for zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Pearson correlation in [-1, 1]. Constant input has zero variance, so the
/// value is undefined and raises.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    require_same_nonempty(a, b, "pearson");
    if (a.size() < 2) throw std::invalid_argument("pearson: need at least 2 samples");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0)
        throw std::runtime_error("pearson: undefined correlation for constant input");
    return cov / (std::sqrt(va) * std::sqrt(vb));
}

/// Root mean squared error; 0 means identical, larger means less similar.
inline double rmse(const std::vector<double>& a, const std::vector<double>& b) {
    require_same_nonempty(a, b, "rmse");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

enum class MetricKind { Cosine, Pearson, Rmse };
enum class ScoreDomain { Time, Psd };

inline const char* metric_kind_name(MetricKind k) {
    switch (k) {
        case MetricKind::Cosine: return "cosine";
        case MetricKind::Pearson: return "pearson";
        case MetricKind::Rmse: return "rmse";
    }
    throw std::invalid_argument("metric_kind_name: bad kind");
}

inline bool metric_higher_is_better(MetricKind k) { return k != MetricKind::Rmse; }

struct MetricParams {
    MetricKind kind = MetricKind::Cosine;
    ScoreDomain domain = ScoreDomain::Time;
    WelchConfig welch;  ///< applies when domain == Psd
};

inline double scalar_metric(MetricKind kind, const std::vector<double>& a,
                            const std::vector<double>& b) {
    switch (kind) {
        case MetricKind::Cosine: return cosine(a, b);
        case MetricKind::Pearson: return pearson(a, b);
        case MetricKind::Rmse: return rmse(a, b);
    }
    throw std::invalid_argument("scalar_metric: bad kind");
}

/// Applies a scalar metric channel by channel and averages the per-channel
/// scores. In the Psd domain each channel is first reduced to its Welch
/// spectrum, so windows only need matching segment configuration.
inline double multi_axis_score(const TimeWindow& a, const TimeWindow& b, const MetricParams& p) {
    if (a.channels() != b.channels())
        throw std::invalid_argument("multi_axis_score: channel count mismatch");
    if (a.channels() == 0) throw std::invalid_argument("multi_axis_score: no channels");
    double acc = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        const auto& ca = a.data[static_cast<std::size_t>(c)];
        const auto& cb = b.data[static_cast<std::size_t>(c)];
        if (p.domain == ScoreDomain::Time) {
            acc += scalar_metric(p.kind, ca, cb);
        } else {
            acc += scalar_metric(p.kind, welch_psd(ca, a.sample_rate_hz, p.welch).power,
                                 welch_psd(cb, b.sample_rate_hz, p.welch).power);
        }
    }
    return acc / static_cast<double>(a.channels());
}

/// values[i][j] scores rows[i] against cols[j].
struct ScoreMatrix {
    std::vector<std::vector<double>> values;

    int rows() const { return static_cast<int>(values.size()); }
    int cols() const { return values.empty() ? 0 : static_cast<int>(values[0].size()); }

    double row_max(int i) const {
        const auto& row = values[static_cast<std::size_t>(i)];
        if (row.empty()) throw std::invalid_argument("ScoreMatrix: empty row");
        double m = row[0];
        for (double v : row) m = std::max(m, v);
        return m;
    }

    double row_mean(int i) const {
        const auto& row = values[static_cast<std::size_t>(i)];
        if (row.empty()) throw std::invalid_argument("ScoreMatrix: empty row");
        double s = 0.0;
        for (double v : row) s += v;
        return s / static_cast<double>(row.size());
    }

    double mean() const {
        if (rows() == 0 || cols() == 0) throw std::invalid_argument("ScoreMatrix: empty");
        double s = 0.0;
        for (const auto& row : values)
            for (double v : row) s += v;
        return s / (static_cast<double>(rows()) * static_cast<double>(cols()));
    }
};

/// Pairwise scores with position context attached to any scoring failure,
/// so a single bad pair inside a large sweep is locatable.
template <typename Item, typename Scorer>
ScoreMatrix score_matrix(const std::vector<Item>& rows_in,
                         const std::vector<Item>& cols_in, Scorer&& score) {
    ScoreMatrix out;
    out.values.resize(rows_in.size());
    for (std::size_t i = 0; i < rows_in.size(); ++i) {
        out.values[i].resize(cols_in.size());
        for (std::size_t j = 0; j < cols_in.size(); ++j) {
            try {
                out.values[i][j] = score(rows_in[i], cols_in[j]);
            } catch (const std::exception& e) {
                throw std::runtime_error("score_matrix at (i=" + std::to_string(i) +
                                         ", j=" + std::to_string(j) + "): " + e.what());
            }
        }
    }
    return out;
}

}  // namespace diffsim
