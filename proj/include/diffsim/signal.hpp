// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Time-domain sample types, sliding-window segmentation and the dataset
// splitting used by the leave-one-subject-out experiments.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diffsim/rng.hpp"

namespace diffsim {

/// One fixed-length multi-channel sample. data is [channels][timesteps].
struct TimeWindow {
    std::vector<std::vector<double>> data;
    double sample_rate_hz = 50.0;

    int channels() const { return static_cast<int>(data.size()); }
    int timesteps() const { return data.empty() ? 0 : static_cast<int>(data[0].size()); }

    void validate() const {
        if (data.empty()) throw std::invalid_argument("TimeWindow: no channels");
        if (data[0].empty()) throw std::invalid_argument("TimeWindow: no timesteps");
        if (sample_rate_hz <= 0.0) throw std::invalid_argument("TimeWindow: sample rate must be positive");
        for (const auto& ch : data) {
            if (ch.size() != data[0].size())
                throw std::invalid_argument("TimeWindow: ragged channel lengths");
            for (double v : ch)
                if (!std::isfinite(v)) throw std::invalid_argument("TimeWindow: non-finite value");
        }
    }
};

struct ActivityLabel {
    std::string name;
    int index = 0;

    bool operator==(const ActivityLabel& o) const { return name == o.name && index == o.index; }
};

struct ParticipantId {
    int id = 0;

    bool operator==(const ParticipantId& o) const { return id == o.id; }
    bool operator<(const ParticipantId& o) const { return id < o.id; }
};

struct LabeledWindow {
    TimeWindow window;
    ActivityLabel label;
    ParticipantId participant;
};

/// A collection of labeled windows sharing channel count and length.
/// label_names defines the label set; indices are positions in it.
struct Dataset {
    std::vector<LabeledWindow> windows;
    std::vector<std::string> label_names;
    int channels = 0;
    std::string meta;

    void validate() const {
        std::set<std::string> seen(label_names.begin(), label_names.end());
        if (seen.size() != label_names.size())
            throw std::invalid_argument("Dataset: duplicate label names");
        for (const auto& w : windows) {
            w.window.validate();
            if (w.window.channels() != channels)
                throw std::invalid_argument("Dataset: inconsistent channel count");
            if (!windows.empty() && w.window.timesteps() != windows.front().window.timesteps())
                throw std::invalid_argument("Dataset: inconsistent window length");
            if (w.label.index < 0 || w.label.index >= static_cast<int>(label_names.size()) ||
                label_names[static_cast<std::size_t>(w.label.index)] != w.label.name)
                throw std::invalid_argument("Dataset: label not in label set");
        }
    }

    std::vector<int> participant_ids() const {
        std::set<int> ids;
        for (const auto& w : windows) ids.insert(w.participant.id);
        return {ids.begin(), ids.end()};
    }

    /// Windows of one class, preserving order.
    std::vector<const LabeledWindow*> windows_of_class(int label_index) const {
        std::vector<const LabeledWindow*> out;
        for (const auto& w : windows)
            if (w.label.index == label_index) out.push_back(&w);
        return out;
    }
};

struct SlidingWindowConfig {
    int width = 160;
    int overlap = 40;

    int stride() const { return width - overlap; }

    void validate() const {
        if (width <= 0) throw std::invalid_argument("SlidingWindowConfig: width must be positive");
        if (overlap < 0 || overlap >= width)
            throw std::invalid_argument("SlidingWindowConfig: need 0 <= overlap < width");
    }
};

/// Segments a continuous [channels][N] signal into fixed-width windows at
/// stride (width - overlap). A trailing remainder shorter than width is
/// dropped.
inline std::vector<TimeWindow> slide_windows(const std::vector<std::vector<double>>& signal,
                                             const SlidingWindowConfig& cfg,
                                             double sample_rate_hz = 50.0) {
    cfg.validate();
    if (signal.empty()) throw std::invalid_argument("slide_windows: no channels");
    const int n = static_cast<int>(signal[0].size());
    for (const auto& ch : signal)
        if (static_cast<int>(ch.size()) != n)
            throw std::invalid_argument("slide_windows: ragged channel lengths");
    if (n < cfg.width) throw std::invalid_argument("slide_windows: signal too short");

    const int stride = cfg.stride();
    const int count = (n - cfg.width) / stride + 1;
    std::vector<TimeWindow> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int w = 0; w < count; ++w) {
        const int start = w * stride;
        TimeWindow tw;
        tw.sample_rate_hz = sample_rate_hz;
        tw.data.reserve(signal.size());
        for (const auto& ch : signal)
            tw.data.emplace_back(ch.begin() + start, ch.begin() + start + cfg.width);
        out.push_back(std::move(tw));
    }
    return out;
}

struct LosoSplit {
    std::vector<int> train_participants;
    int test_participant = 0;
};

/// One split per participant; the test participant never appears in the
/// train set.
inline std::vector<LosoSplit> loso_splits(const Dataset& ds) {
    const std::vector<int> ids = ds.participant_ids();
    if (ids.size() < 2)
        throw std::invalid_argument("loso_splits: need at least 2 participants");
    std::vector<LosoSplit> splits;
    splits.reserve(ids.size());
    for (int test : ids) {
        LosoSplit s;
        s.test_participant = test;
        for (int id : ids)
            if (id != test) s.train_participants.push_back(id);
        splits.push_back(std::move(s));
    }
    return splits;
}

/// Restricts a dataset to a participant subset, preserving window order.
inline Dataset filter_participants(const Dataset& ds, const std::vector<int>& keep) {
    Dataset out;
    out.label_names = ds.label_names;
    out.channels = ds.channels;
    out.meta = ds.meta;
    std::set<int> keep_set(keep.begin(), keep.end());
    for (const auto& w : ds.windows)
        if (keep_set.count(w.participant.id)) out.windows.push_back(w);
    return out;
}

/// Stratified train/validation split by (participant, label). Deterministic
/// for a given seed; per-stratum fractions are within one window of the
/// requested fraction.
struct TrainValSplit {
    Dataset train;
    Dataset val;
};

/// Stratified split: within each (participant, class) stratum, a shuffled
/// val_fraction share goes to validation and the rest to training.
inline TrainValSplit train_val_split(const Dataset& ds, double val_fraction, std::uint64_t seed) {
    if (ds.windows.empty()) throw std::invalid_argument("train_val_split: empty dataset");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw std::invalid_argument("train_val_split: fraction must be in (0, 1)");

    std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < ds.windows.size(); ++i) {
        const auto& w = ds.windows[i];
        strata[{w.participant.id, w.label.index}].push_back(i);
    }

    std::vector<std::size_t> train_idx, val_idx;
    for (auto& [key, idx] : strata) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(key.first),
                                   static_cast<std::uint64_t>(key.second)}));
        rng.shuffle(idx);
        const auto n_val = static_cast<std::size_t>(
            std::lround(val_fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < idx.size(); ++k)
            (k < n_val ? val_idx : train_idx).push_back(idx[k]);
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());

    auto build = [&](const std::vector<std::size_t>& idx) {
        Dataset out;
        out.label_names = ds.label_names;
        out.channels = ds.channels;
        out.meta = ds.meta;
        for (std::size_t i : idx) out.windows.push_back(ds.windows[i]);
        return out;
    };
    return {build(train_idx), build(val_idx)};
}

/// Keeps exactly k randomly chosen windows per (participant, class) stratum.
inline Dataset subsample_per_participant(const Dataset& ds, int k, std::uint64_t seed) {
    if (k < 0) throw std::invalid_argument("subsample_per_participant: k must be >= 0");

    std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < ds.windows.size(); ++i) {
        const auto& w = ds.windows[i];
        strata[{w.participant.id, w.label.index}].push_back(i);
    }

    std::vector<std::size_t> keep;
    for (auto& [key, idx] : strata) {
        if (static_cast<int>(idx.size()) < k)
            throw std::runtime_error("subsample_per_participant: participant " +
                                        std::to_string(key.first) + " has only " +
                                        std::to_string(idx.size()) + " windows of class " +
                                        ds.label_names[static_cast<std::size_t>(key.second)]);
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(key.first),
                                   static_cast<std::uint64_t>(key.second)}));
        rng.shuffle(idx);
        keep.insert(keep.end(), idx.begin(), idx.begin() + k);
    }
    std::sort(keep.begin(), keep.end());

    Dataset out;
    out.label_names = ds.label_names;
    out.channels = ds.channels;
    out.meta = ds.meta;
    for (std::size_t i : keep) out.windows.push_back(ds.windows[i]);
    return out;
}

/// Collects the raw TimeWindows of one class from a dataset.
inline std::vector<TimeWindow> class_windows(const Dataset& ds, int label_index) {
    std::vector<TimeWindow> out;
    for (const auto& w : ds.windows)
        if (w.label.index == label_index) out.push_back(w.window);
    return out;
}

}  // namespace diffsim
