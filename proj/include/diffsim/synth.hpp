// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic wearable-sensor recordings: per-class harmonic series with
// per-participant frequency and amplitude variation plus Gaussian noise.
// Stands in for real on-body recordings in tests and desk experiments.

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffsim/rng.hpp"
#include "diffsim/signal.hpp"

namespace diffsim {

/// One activity class: a fundamental plus harmonic amplitudes.
/// harmonics[k] scales frequency (k+1) * fundamental_hz.
struct SynthClass {
    std::string name;
    double fundamental_hz = 1.0;
    std::vector<double> harmonics = {1.0};
};

struct SynthConfig {
    double sample_rate_hz = 50.0;
    int channels = 6;
    int samples_per_class = 2000;      ///< continuous samples per (participant, class)
    double freq_jitter = 0.03;         ///< relative fundamental spread across participants
    double amp_jitter = 0.2;           ///< relative amplitude spread across participants
    double noise_std = 0.25;           ///< additive white noise level
    double channel_phase_step = 0.7;   ///< phase offset between adjacent channels, radians
    std::vector<SynthClass> classes;

    void validate() const {
        if (sample_rate_hz <= 0.0) throw std::invalid_argument("SynthConfig: sample rate must be positive");
        if (channels <= 0) throw std::invalid_argument("SynthConfig: channels must be positive");
        if (samples_per_class <= 0) throw std::invalid_argument("SynthConfig: samples_per_class must be positive");
        if (classes.empty()) throw std::invalid_argument("SynthConfig: no classes");
        const double nyquist = sample_rate_hz / 2.0;
        for (const auto& c : classes) {
            if (c.fundamental_hz <= 0.0)
                throw std::invalid_argument("SynthConfig: fundamental must be positive");
            if (c.harmonics.empty())
                throw std::invalid_argument("SynthConfig: class without harmonics");
            const double top = c.fundamental_hz * static_cast<double>(c.harmonics.size());
            if (top >= nyquist)
                throw std::invalid_argument("SynthConfig: harmonic " + c.name +
                                            " exceeds Nyquist frequency");
        }
    }
};

/// Default class set. Fundamentals sit on distinct spectral bins at the
/// 50 Hz rate so classes separate cleanly under short-window analysis.
inline std::vector<SynthClass> default_synth_classes() {
    return {
        {"walking", 1.5625, {1.0, 0.45, 0.18}},
        {"running", 3.125, {1.0, 0.35, 0.12}},
        {"jumping", 4.6875, {1.0, 0.3}},
        {"cycling", 6.25, {1.0, 0.25}},
    };
}

/// One continuous recording of one class for one participant.
/// Deterministic in (seed, participant, class index).
inline std::vector<std::vector<double>> synth_recording(const SynthConfig& cfg, int participant,
                                                        int class_index, std::uint64_t seed) {
    cfg.validate();
    if (class_index < 0 || class_index >= static_cast<int>(cfg.classes.size()))
        throw std::invalid_argument("synth_recording: class index out of range");
    const SynthClass& cls = cfg.classes[static_cast<std::size_t>(class_index)];

    Rng traits_rng(derive_seed(seed, {0x7261697473ULL, static_cast<std::uint64_t>(participant),
                                      static_cast<std::uint64_t>(class_index)}));
    const double freq = cls.fundamental_hz *
                        (1.0 + cfg.freq_jitter * (2.0 * traits_rng.uniform() - 1.0));
    std::vector<double> amps(cls.harmonics.size());
    for (std::size_t h = 0; h < amps.size(); ++h)
        amps[h] = cls.harmonics[h] * (1.0 + cfg.amp_jitter * (2.0 * traits_rng.uniform() - 1.0));
    const double phase0 = traits_rng.uniform(0.0, 2.0 * std::numbers::pi);

    Rng noise_rng(derive_seed(seed, {0x6e6f697365ULL, static_cast<std::uint64_t>(participant),
                                     static_cast<std::uint64_t>(class_index)}));

    std::vector<std::vector<double>> signal(
        static_cast<std::size_t>(cfg.channels),
        std::vector<double>(static_cast<std::size_t>(cfg.samples_per_class)));
    const double dt = 1.0 / cfg.sample_rate_hz;
    for (int c = 0; c < cfg.channels; ++c) {
        const double chan_phase = phase0 + cfg.channel_phase_step * static_cast<double>(c);
        // Even channels carry the full harmonic stack, odd channels emphasize
        // the fundamental, mimicking sensor axes with different orientations.
        const double harmonic_gain = (c % 2 == 0) ? 1.0 : 0.5;
        auto& ch = signal[static_cast<std::size_t>(c)];
        for (int t = 0; t < cfg.samples_per_class; ++t) {
            const double time = static_cast<double>(t) * dt;
            double v = 0.0;
            for (std::size_t h = 0; h < amps.size(); ++h) {
                const double gain = (h == 0) ? 1.0 : harmonic_gain;
                v += gain * amps[h] *
                     std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(h + 1) * time +
                              chan_phase * static_cast<double>(h + 1));
            }
            ch[static_cast<std::size_t>(t)] = v + cfg.noise_std * noise_rng.normal();
        }
    }
    return signal;
}

/// Full labeled dataset: every participant performs every class, recordings
/// are segmented by slide_windows.
inline Dataset synth_activity_dataset(const SynthConfig& cfg, int participants,
                                      const SlidingWindowConfig& win, std::uint64_t seed) {
    cfg.validate();
    win.validate();
    if (participants <= 0)
        throw std::invalid_argument("synth_activity_dataset: participants must be positive");

    Dataset ds;
    ds.channels = cfg.channels;
    for (const auto& c : cfg.classes) ds.label_names.push_back(c.name);

    for (int p = 0; p < participants; ++p) {
        for (int ci = 0; ci < static_cast<int>(cfg.classes.size()); ++ci) {
            const auto rec = synth_recording(cfg, p, ci, seed);
            for (auto& tw : slide_windows(rec, win, cfg.sample_rate_hz)) {
                LabeledWindow lw;
                lw.window = std::move(tw);
                lw.label = {cfg.classes[static_cast<std::size_t>(ci)].name, ci};
                lw.participant = {p};
                ds.windows.push_back(std::move(lw));
            }
        }
    }
    ds.validate();
    return ds;
}

}  // namespace diffsim
