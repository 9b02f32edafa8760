// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Spectral transforms: Hann windowing, a small cached-table DFT, the
// short-time Fourier transform with weighted overlap-add inversion, and
// Welch power spectral density estimation.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffsim/signal.hpp"

namespace diffsim {

/// Symmetric Hann window: w[k] = 0.5 (1 - cos(2 pi k / (n - 1))).
/// Both endpoints are exactly zero for n >= 2; n == 1 gives [1].
inline std::vector<double> hanning(int n) {
    if (n <= 0) throw std::invalid_argument("hanning: length must be positive");
    if (n == 1) return {1.0};
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        w[static_cast<std::size_t>(k)] =
            0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                  static_cast<double>(n - 1)));
    return w;
}

/// Direct O(n^2) DFT with a cached twiddle table. Transform sizes here are
/// tens of samples, so the quadratic cost is irrelevant and the table keeps
/// trig arguments exactly periodic.
class Dft {
  public:
    explicit Dft(int n) : n_(n) {
        if (n <= 0) throw std::invalid_argument("Dft: size must be positive");
        cos_.resize(static_cast<std::size_t>(n));
        sin_.resize(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            cos_[static_cast<std::size_t>(k)] = std::cos(a);
            sin_[static_cast<std::size_t>(k)] = std::sin(a);
        }
    }

    int size() const { return n_; }
    int bins() const { return n_ / 2 + 1; }

    /// Real input of length n to the one-sided spectrum (bins 0 .. n/2).
    std::vector<std::complex<double>> forward_real(const std::vector<double>& x) const {
        if (static_cast<int>(x.size()) != n_)
            throw std::invalid_argument("Dft: input length mismatch");
        std::vector<std::complex<double>> out(static_cast<std::size_t>(bins()));
        for (int f = 0; f < bins(); ++f) {
            double re = 0.0, im = 0.0;
            for (int t = 0; t < n_; ++t) {
                const auto k = static_cast<std::size_t>(
                    (static_cast<long long>(f) * t) % n_);
                re += x[static_cast<std::size_t>(t)] * cos_[k];
                im -= x[static_cast<std::size_t>(t)] * sin_[k];
            }
            out[static_cast<std::size_t>(f)] = {re, im};
        }
        return out;
    }

    /// One-sided spectrum back to the real signal, assuming conjugate
    /// symmetry of the implied full spectrum.
    std::vector<double> inverse_real(const std::vector<std::complex<double>>& spec) const {
        if (static_cast<int>(spec.size()) != bins())
            throw std::invalid_argument("Dft: spectrum length mismatch");
        const bool even = (n_ % 2 == 0);
        const int mid = even ? n_ / 2 : (n_ + 1) / 2;
        std::vector<double> x(static_cast<std::size_t>(n_));
        for (int t = 0; t < n_; ++t) {
            double acc = spec[0].real();
            for (int f = 1; f < mid; ++f) {
                const auto k = static_cast<std::size_t>(
                    (static_cast<long long>(f) * t) % n_);
                acc += 2.0 * (spec[static_cast<std::size_t>(f)].real() * cos_[k] -
                              spec[static_cast<std::size_t>(f)].imag() * sin_[k]);
            }
            if (even) acc += spec[static_cast<std::size_t>(n_ / 2)].real() * (t % 2 == 0 ? 1.0 : -1.0);
            x[static_cast<std::size_t>(t)] = acc / static_cast<double>(n_);
        }
        return x;
    }

  private:
    int n_;
    std::vector<double> cos_, sin_;
};

struct StftConfig {
    int window_size = 22;
    int overlap = 20;

    int hop() const { return window_size - overlap; }

    void validate() const {
        if (window_size <= 0) throw std::invalid_argument("StftConfig: window size must be positive");
        if (overlap < 0 || overlap >= window_size)
            throw std::invalid_argument("StftConfig: need 0 <= overlap < window size");
    }
};

/// Hann-windowed one-sided STFT frames of a multi-channel window.
/// channels[ch][frame][bin]; frame f covers samples [f*hop, f*hop + window_size).
struct Spectrogram {
    std::vector<std::vector<std::vector<std::complex<double>>>> channels;
    int window_size = 0;
    int hop = 0;
    int original_len = 0;
    double sample_rate_hz = 50.0;

    int num_channels() const { return static_cast<int>(channels.size()); }
    int frames() const { return channels.empty() ? 0 : static_cast<int>(channels[0].size()); }
    int bins() const { return window_size / 2 + 1; }
};

inline Spectrogram stft(const TimeWindow& w, const StftConfig& cfg) {
    cfg.validate();
    w.validate();
    const int n = w.timesteps();
    if (n < cfg.window_size) throw std::invalid_argument("stft: signal too short");

    const std::vector<double> win = hanning(cfg.window_size);
    const Dft dft(cfg.window_size);
    const int frames = (n - cfg.window_size) / cfg.hop() + 1;

    Spectrogram sg;
    sg.window_size = cfg.window_size;
    sg.hop = cfg.hop();
    sg.original_len = n;
    sg.sample_rate_hz = w.sample_rate_hz;
    sg.channels.resize(w.data.size());
    std::vector<double> seg(static_cast<std::size_t>(cfg.window_size));
    for (std::size_t c = 0; c < w.data.size(); ++c) {
        sg.channels[c].reserve(static_cast<std::size_t>(frames));
        for (int f = 0; f < frames; ++f) {
            const int start = f * sg.hop;
            for (int k = 0; k < cfg.window_size; ++k)
                seg[static_cast<std::size_t>(k)] =
                    w.data[c][static_cast<std::size_t>(start + k)] * win[static_cast<std::size_t>(k)];
            sg.channels[c].push_back(dft.forward_real(seg));
        }
    }
    return sg;
}

/// Weighted overlap-add inverse. Each inverse frame is the windowed segment,
/// so accumulating window * frame and dividing by the accumulated squared
/// window recovers the signal wherever the windows overlap with energy.
/// Boundary samples with zero window energy (the symmetric Hann endpoints)
/// are zero-filled; zero energy anywhere else means the hop/window pair
/// cannot reconstruct and raises a COLA violation.
inline TimeWindow istft(const Spectrogram& sg) {
    if (sg.channels.empty()) throw std::invalid_argument("istft: no channels");
    if (sg.frames() == 0) throw std::invalid_argument("istft: no frames");
    const int coverage = (sg.frames() - 1) * sg.hop + sg.window_size;
    if (sg.original_len > coverage)
        throw std::runtime_error("istft: signal length exceeds frame coverage");

    const std::vector<double> win = hanning(sg.window_size);
    const Dft dft(sg.window_size);

    TimeWindow out;
    out.sample_rate_hz = sg.sample_rate_hz;
    out.data.assign(sg.channels.size(),
                    std::vector<double>(static_cast<std::size_t>(sg.original_len), 0.0));

    std::vector<double> energy(static_cast<std::size_t>(coverage), 0.0);
    for (int f = 0; f < sg.frames(); ++f)
        for (int k = 0; k < sg.window_size; ++k)
            energy[static_cast<std::size_t>(f * sg.hop + k)] +=
                win[static_cast<std::size_t>(k)] * win[static_cast<std::size_t>(k)];

    constexpr double kTiny = 1e-12;
    for (int t = 0; t < sg.original_len; ++t) {
        if (energy[static_cast<std::size_t>(t)] > kTiny) continue;
        if (t == 0 || t == sg.original_len - 1) continue;  // zero-filled boundary
        throw std::runtime_error("istft: COLA violation at sample " + std::to_string(t));
    }

    std::vector<double> acc(static_cast<std::size_t>(coverage));
    for (std::size_t c = 0; c < sg.channels.size(); ++c) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int f = 0; f < sg.frames(); ++f) {
            const std::vector<double> frame = dft.inverse_real(sg.channels[c][static_cast<std::size_t>(f)]);
            const int start = f * sg.hop;
            for (int k = 0; k < sg.window_size; ++k)
                acc[static_cast<std::size_t>(start + k)] +=
                    win[static_cast<std::size_t>(k)] * frame[static_cast<std::size_t>(k)];
        }
        for (int t = 0; t < sg.original_len; ++t)
            if (energy[static_cast<std::size_t>(t)] > kTiny)
                out.data[c][static_cast<std::size_t>(t)] =
                    acc[static_cast<std::size_t>(t)] / energy[static_cast<std::size_t>(t)];
    }
    return out;
}

struct WelchConfig {
    int segment_len = 0;  ///< 0 picks min(64, signal length)
    int overlap = -1;     ///< -1 picks segment_len / 2
    bool density = false; ///< scale to power per Hz instead of power per bin

    void validate() const {
        if (segment_len < 0) throw std::invalid_argument("WelchConfig: negative segment length");
        if (overlap < -1) throw std::invalid_argument("WelchConfig: bad overlap");
    }
};

/// One-sided averaged spectrum. power[i] is the estimate at i * freq_step_hz.
struct PsdVector {
    std::vector<double> power;
    double freq_step_hz = 0.0;
    double sample_rate_hz = 0.0;
    int segments = 0;

    double freq(int i) const { return static_cast<double>(i) * freq_step_hz; }
    int argmax() const {
        int best = 0;
        for (int i = 1; i < static_cast<int>(power.size()); ++i)
            if (power[static_cast<std::size_t>(i)] > power[static_cast<std::size_t>(best)]) best = i;
        return best;
    }
};

/// Welch estimate: Hann-windowed overlapping segments, per-segment
/// periodogram |X|^2 / M, averaged, then folded one-sided with doubling of
/// every bin that has a mirror image. density=true replaces the 1/M scale
/// with 1 / (fs * sum w^2) so the spectrum integrates to signal power.
inline PsdVector welch_psd(const std::vector<double>& x, double sample_rate_hz,
                           const WelchConfig& cfg = {}) {
    cfg.validate();
    if (sample_rate_hz <= 0.0) throw std::invalid_argument("welch_psd: sample rate must be positive");
    const int n = static_cast<int>(x.size());
    if (n < 2) throw std::invalid_argument("welch_psd: signal too short");

    int m = cfg.segment_len;
    if (m == 0) m = std::min(64, n);
    else if (m > n) throw std::invalid_argument("welch_psd: segment length exceeds signal length");

    int overlap = cfg.overlap;
    if (overlap == -1) overlap = m / 2;
    if (overlap < 0 || overlap >= m)
        throw std::invalid_argument("welch_psd: need 0 <= overlap < segment length");
    const int shift = m - overlap;
    const int segments = (n - m) / shift + 1;

    const std::vector<double> win = hanning(m);
    const Dft dft(m);
    const int bins = dft.bins();

    std::vector<double> avg(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> seg(static_cast<std::size_t>(m));
    for (int s = 0; s < segments; ++s) {
        const int start = s * shift;
        for (int k = 0; k < m; ++k)
            seg[static_cast<std::size_t>(k)] =
                x[static_cast<std::size_t>(start + k)] * win[static_cast<std::size_t>(k)];
        const auto spec = dft.forward_real(seg);
        for (int f = 0; f < bins; ++f) {
            const double re = spec[static_cast<std::size_t>(f)].real();
            const double im = spec[static_cast<std::size_t>(f)].imag();
            avg[static_cast<std::size_t>(f)] += re * re + im * im;
        }
    }

    double scale;
    if (cfg.density) {
        double wp = 0.0;
        for (double v : win) wp += v * v;
        scale = 1.0 / (sample_rate_hz * wp);
    } else {
        scale = 1.0 / static_cast<double>(m);
    }
    const double inv_k = 1.0 / static_cast<double>(segments);
    for (auto& v : avg) v *= scale * inv_k;

    // Fold to one-sided: every bin with a distinct mirror gains its mirror's
    // power. DC never has one; the Nyquist bin exists (and is unpaired) only
    // for even segment lengths.
    const bool even = (m % 2 == 0);
    const int last_paired = even ? bins - 2 : bins - 1;
    for (int f = 1; f <= last_paired; ++f) avg[static_cast<std::size_t>(f)] *= 2.0;

    PsdVector out;
    out.power = std::move(avg);
    out.freq_step_hz = sample_rate_hz / static_cast<double>(m);
    out.sample_rate_hz = sample_rate_hz;
    out.segments = segments;
    return out;
}

/// Per-channel Welch spectra of a window.
inline std::vector<PsdVector> welch_psd_window(const TimeWindow& w, const WelchConfig& cfg = {}) {
    w.validate();
    std::vector<PsdVector> out;
    out.reserve(w.data.size());
    for (const auto& ch : w.data) out.push_back(welch_psd(ch, w.sample_rate_hz, cfg));
    return out;
}

/// Concatenated per-channel PSD, the flat feature vector used by the
/// spectral similarity axes and the activity classifier.
inline std::vector<double> welch_features(const TimeWindow& w, const WelchConfig& cfg = {}) {
    std::vector<double> out;
    for (const auto& psd : welch_psd_window(w, cfg))
        out.insert(out.end(), psd.power.begin(), psd.power.end());
    return out;
}

}  // namespace diffsim
