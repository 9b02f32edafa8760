// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "diffsim/rng.hpp"
#include "diffsim/spectral.hpp"

using namespace diffsim;

namespace {

TimeWindow mono(std::vector<double> samples, double rate = 50.0) {
    TimeWindow w;
    w.sample_rate_hz = rate;
    w.data.push_back(std::move(samples));
    return w;
}

}  // namespace

TEST_CASE("hanning window endpoints, symmetry and degenerate size") {
    const auto w = hanning(9);
    REQUIRE(w.size() == 9);
    CHECK(w[0] == 0.0);
    CHECK(w[8] == 0.0);
    CHECK(w[4] == Catch::Approx(1.0));
    for (int i = 0; i < 9; ++i) CHECK(w[static_cast<std::size_t>(i)] ==
                                      Catch::Approx(w[static_cast<std::size_t>(8 - i)]));
    CHECK(hanning(1) == std::vector<double>{1.0});
    CHECK_THROWS(hanning(0));
}

TEST_CASE("dft of an impulse is flat and a bin-centered tone is a spike") {
    Dft dft(16);
    std::vector<double> impulse(16, 0.0);
    impulse[0] = 1.0;
    const auto spec = dft.forward_real(impulse);
    REQUIRE(spec.size() == 9);
    for (const auto& b : spec) {
        CHECK(b.real() == Catch::Approx(1.0).margin(1e-12));
        CHECK(b.imag() == Catch::Approx(0.0).margin(1e-12));
    }

    std::vector<double> tone(16);
    for (int t = 0; t < 16; ++t)
        tone[static_cast<std::size_t>(t)] =
            std::cos(2.0 * std::numbers::pi * 3.0 * t / 16.0);
    const auto ts = dft.forward_real(tone);
    for (int k = 0; k < 9; ++k) {
        const double mag = std::abs(ts[static_cast<std::size_t>(k)]);
        if (k == 3) CHECK(mag == Catch::Approx(8.0).margin(1e-9));
        else CHECK(mag == Catch::Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("dft inverse reconstructs arbitrary input") {
    Rng rng(5);
    for (int n : {8, 13, 16}) {
        Dft dft(n);
        std::vector<double> x(static_cast<std::size_t>(n));
        for (auto& v : x) v = rng.normal();
        const auto back = dft.inverse_real(dft.forward_real(x));
        REQUIRE(back.size() == x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(back[i] == Catch::Approx(x[i]).margin(1e-10));
    }
}

TEST_CASE("stft produces the documented frame count") {
    Rng rng(6);
    std::vector<double> x(64);
    for (auto& v : x) v = rng.normal();

    const auto spec = stft(mono(x), {16, 8});
    CHECK(spec.frames() == (64 - 16) / 8 + 1);
    CHECK(spec.bins() == 9);
    CHECK(spec.original_len == 64);
    CHECK_THROWS_WITH(stft(mono(std::vector<double>(10, 0.0)), {16, 8}),
                      Catch::Matchers::ContainsSubstring("signal too short"));
}

TEST_CASE("istft reconstructs interior samples and zero-fills the edges") {
    Rng rng(7);
    std::vector<double> x(96);
    for (auto& v : x) v = rng.normal();

    for (const StftConfig cfg : {StftConfig{16, 8}, StftConfig{22, 20}}) {
        const auto back = istft(stft(mono(x), cfg));
        REQUIRE(back.data[0].size() == x.size());
        CHECK(back.data[0].front() == 0.0);  // symmetric Hanning zeroes the boundary samples
        CHECK(back.data[0].back() == 0.0);
        for (std::size_t i = 1; i + 1 < x.size(); ++i)
            CHECK(back.data[0][i] == Catch::Approx(x[i]).margin(1e-9));
    }
}

TEST_CASE("istft reports unreconstructable configurations") {
    Rng rng(8);
    std::vector<double> x(64);
    for (auto& v : x) v = rng.normal();

    // Non-overlapping symmetric Hanning frames leave interior zero-energy
    // samples at every frame boundary.
    auto spec = stft(mono(x), {16, 0});
    CHECK_THROWS_WITH(istft(spec), Catch::Matchers::ContainsSubstring("COLA violation"));

    auto good = stft(mono(x), {16, 8});
    good.original_len = 1000;  // beyond frame coverage
    CHECK_THROWS(istft(good));
}

TEST_CASE("welch psd puts a bin-centered tone at the right argmax") {
    const double fs = 50.0;
    const int seg = 64;
    const int k = 8;
    const double f = k * fs / seg;  // exactly at bin k
    std::vector<double> x(256);
    for (std::size_t t = 0; t < x.size(); ++t)
        x[t] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) / fs);

    WelchConfig cfg;
    cfg.segment_len = seg;
    const auto psd = welch_psd(x, fs, cfg);
    REQUIRE(psd.power.size() == static_cast<std::size_t>(seg / 2 + 1));
    CHECK(psd.argmax() == k);
    CHECK(psd.freq(k) == Catch::Approx(f));
    CHECK(psd.segments == (256 - 64) / 32 + 1);
}

TEST_CASE("welch amplitude doubling exactly quadruples every bin") {
    Rng rng(9);
    std::vector<double> x(256), x2(256);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.normal();
        x2[i] = 2.0 * x[i];
    }
    WelchConfig cfg;
    cfg.segment_len = 64;
    const auto p1 = welch_psd(x, 50.0, cfg);
    const auto p2 = welch_psd(x2, 50.0, cfg);
    REQUIRE(p1.power.size() == p2.power.size());
    for (std::size_t i = 0; i < p1.power.size(); ++i)
        CHECK(p2.power[i] == 4.0 * p1.power[i]);  // power-of-two scaling is exact
}

TEST_CASE("welch density estimate satisfies Parseval within 5 percent") {
    Rng rng(10);
    std::vector<double> x(4096);
    for (auto& v : x) v = rng.normal();

    WelchConfig cfg;
    cfg.segment_len = 64;
    cfg.density = true;
    const auto psd = welch_psd(x, 50.0, cfg);
    double integral = 0.0;
    for (double p : psd.power) integral += p * psd.freq_step_hz;
    double mean_power = 0.0;
    for (double v : x) mean_power += v * v;
    mean_power /= static_cast<double>(x.size());
    CHECK(integral == Catch::Approx(mean_power).epsilon(0.05));
}

TEST_CASE("welch clamps the automatic segment length but rejects explicit oversize") {
    std::vector<double> x(40, 1.0);
    WelchConfig autocfg;  // segment_len 0 -> min(64, n)
    const auto psd = welch_psd(x, 50.0, autocfg);
    CHECK(psd.power.size() == static_cast<std::size_t>(40 / 2 + 1));

    WelchConfig big;
    big.segment_len = 64;
    CHECK_THROWS_WITH(welch_psd(x, 50.0, big),
                      Catch::Matchers::ContainsSubstring("exceeds signal length"));
}

TEST_CASE("welch_features concatenates per-channel spectra") {
    TimeWindow w;
    w.sample_rate_hz = 50.0;
    w.data.assign(3, std::vector<double>(64, 0.0));
    for (int c = 0; c < 3; ++c)
        for (int t = 0; t < 64; ++t)
            w.data[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] =
                std::sin(2.0 * std::numbers::pi * (c + 1) * t / 16.0);
    WelchConfig cfg;
    cfg.segment_len = 32;
    const auto f = welch_features(w, cfg);
    CHECK(f.size() == 3u * (32u / 2u + 1u));
}
