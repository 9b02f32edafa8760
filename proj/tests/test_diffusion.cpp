// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "diffsim/diffusion.hpp"
#include "diffsim/rng.hpp"
#include "diffsim/synth.hpp"

using namespace diffsim;

namespace {

std::vector<TimeWindow> tiny_windows(int count, int channels = 2, int len = 32) {
    SynthConfig cfg;
    cfg.channels = channels;
    cfg.samples_per_class = len * count + 64;
    cfg.classes = {{"a", 3.0, {1.0, 0.4}}};
    const auto sig = synth_recording(cfg, 0, 0, 99);
    std::vector<TimeWindow> out;
    for (int i = 0; i < count; ++i) {
        TimeWindow w;
        w.sample_rate_hz = cfg.sample_rate_hz;
        for (const auto& ch : sig)
            w.data.emplace_back(ch.begin() + i * len, ch.begin() + (i + 1) * len);
        out.push_back(std::move(w));
    }
    return out;
}

DiffusionConfig tiny_config() {
    DiffusionConfig cfg;
    cfg.T = 12;
    cfg.hidden = {16};
    cfg.stft = {8, 4};
    return cfg;
}

}  // namespace

TEST_CASE("linear schedule hits its endpoints and broadcasts") {
    const auto s = make_linear_schedule(3, 10, 1e-4, 0.05);
    REQUIRE(s.betas.size() == 3);
    for (const auto& b : s.betas) {
        REQUIRE(b.size() == 10);
        CHECK(b.front() == Catch::Approx(1e-4));
        CHECK(b.back() == Catch::Approx(0.05));
        // Linear: constant increments.
        CHECK(b[1] - b[0] == Catch::Approx(b[2] - b[1]));
    }
    CHECK_THROWS_WITH(make_linear_schedule(1, 10, 0.05, 1e-4),
                      Catch::Matchers::ContainsSubstring("invalid ranges"));
    CHECK_THROWS(make_linear_schedule(1, 10, 0.0, 0.5));
    CHECK_THROWS(make_linear_schedule(2, 10, std::vector<double>{1e-4, 1e-4, 1e-4},
                                      std::vector<double>{0.05, 0.05, 0.05}));
}

TEST_CASE("constant schedule alpha_bar follows the closed form") {
    const double beta = 0.01;
    const auto s = make_linear_schedule(1, 50, beta, beta);
    for (int t = 1; t <= 50; ++t)
        CHECK(s.alpha_bars[0][static_cast<std::size_t>(t - 1)] ==
              Catch::Approx(std::pow(1.0 - beta, t)).margin(1e-12));
    // Strictly decreasing products.
    for (std::size_t t = 1; t < 50; ++t)
        CHECK(s.alpha_bars[0][t] < s.alpha_bars[0][t - 1]);
}

TEST_CASE("forward diffusion is the documented linear combination") {
    const auto s = make_linear_schedule(2, 20, 1e-4, 0.05);
    DataShape shape{2, 4, 3};
    std::vector<double> x0(static_cast<std::size_t>(shape.flat()));
    Rng init(41);
    for (auto& v : x0) v = init.normal();

    for (int t : {1, 10, 20}) {
        const auto [xt, eps] = forward_diffuse(x0, t, s, shape, 77);
        const std::size_t block = 12;
        for (int c = 0; c < 2; ++c) {
            const double ab = s.alpha_bars[static_cast<std::size_t>(c)][static_cast<std::size_t>(t - 1)];
            for (std::size_t i = 0; i < block; ++i) {
                const std::size_t k = static_cast<std::size_t>(c) * block + i;
                CHECK(xt[k] == Catch::Approx(std::sqrt(ab) * x0[k] +
                                             std::sqrt(1.0 - ab) * eps[k]).margin(1e-12));
            }
        }
    }
    CHECK_THROWS(forward_diffuse(x0, 0, s, shape, 77));
    CHECK_THROWS(forward_diffuse(x0, 21, s, shape, 77));
}

TEST_CASE("window tensor round trip preserves interior samples") {
    const auto windows = tiny_windows(3);
    PreparedTraining prep = make_diffusion_model(windows, tiny_config(), 5);

    for (std::size_t i = 0; i < windows.size(); ++i) {
        const auto back = tensor_to_window(prep.model, prep.tensors[i]);
        REQUIRE(back.data.size() == windows[i].data.size());
        for (std::size_t c = 0; c < back.data.size(); ++c) {
            CHECK(back.data[c].front() == 0.0);
            CHECK(back.data[c].back() == 0.0);
            for (std::size_t t = 1; t + 1 < back.data[c].size(); ++t)
                CHECK(back.data[c][t] == Catch::Approx(windows[i].data[c][t]).margin(1e-9));
        }
    }
}

TEST_CASE("time embedding shape and range") {
    const auto e = time_embedding(7, 32);
    REQUIRE(e.size() == 32);
    for (double v : e) CHECK(std::fabs(v) <= 1.0);
    CHECK(e[0] == Catch::Approx(std::sin(7.0)));
    CHECK(e[1] == Catch::Approx(std::cos(7.0)));
    const auto zero = time_embedding(0, 8);
    CHECK(zero[0] == 0.0);
    CHECK(zero[1] == 1.0);
    CHECK_THROWS(time_embedding(1, 7));
}

TEST_CASE("a zero-initialized output layer makes the untrained loss about one") {
    const auto windows = tiny_windows(6);
    PreparedTraining prep = make_diffusion_model(windows, tiny_config(), 6);

    // The denoiser predicts exactly zero everywhere, so the per-element loss
    // is E[eps^2] = 1 up to sampling noise.
    AdamState opt = AdamState::init(prep.model.denoiser);
    AdamConfig cfg;
    cfg.lr = 0.0;  // measure without moving the parameters
    Rng rng(7);
    const double loss = train_epoch(prep.model, prep.tensors, opt, cfg, 6, rng);
    CHECK(loss == Catch::Approx(1.0).margin(0.25));
}

TEST_CASE("training reduces the loss on a tiny problem") {
    const auto windows = tiny_windows(6);
    PreparedTraining prep = make_diffusion_model(windows, tiny_config(), 8);
    AdamState opt = AdamState::init(prep.model.denoiser);
    AdamConfig cfg;

    double first = 0.0, last = 0.0;
    for (int epoch = 1; epoch <= 40; ++epoch) {
        Rng rng(derive_seed(123, {static_cast<std::uint64_t>(epoch)}));
        const double loss = train_epoch(prep.model, prep.tensors, opt, cfg, 3, rng);
        if (epoch == 1) first = loss;
        last = loss;
    }
    CHECK(last < first);
}

TEST_CASE("sampling is deterministic in the seed") {
    const auto windows = tiny_windows(4);
    PreparedTraining prep = make_diffusion_model(windows, tiny_config(), 9);

    const auto b1 = sample_batch(prep.model, 3, 1234);
    const auto b2 = sample_batch(prep.model, 3, 1234);
    const auto b3 = sample_batch(prep.model, 3, 1235);
    REQUIRE(b1.size() == 3);
    for (std::size_t i = 0; i < b1.size(); ++i) CHECK(b1[i].data == b2[i].data);
    bool any_diff = false;
    for (std::size_t i = 0; i < b1.size(); ++i) any_diff |= (b1[i].data != b3[i].data);
    CHECK(any_diff);
}

TEST_CASE("denoise_step counts steps and refuses to run past the end") {
    const auto windows = tiny_windows(3);
    PreparedTraining prep = make_diffusion_model(windows, tiny_config(), 10);

    SamplingRun run = begin_sampling(prep.model, 2, 5);
    int steps = 0;
    while (!run.finished) {
        denoise_step(run, prep.model);
        ++steps;
    }
    CHECK(steps == prep.model.schedule.T);
    CHECK(run.step == prep.model.schedule.T);
    CHECK_THROWS(denoise_step(run, prep.model));
}

TEST_CASE("model checkpoint reload is bit-exact, including resumed sampling") {
    const auto windows = tiny_windows(4);
    PreparedTraining prep = make_diffusion_model(windows, tiny_config(), 11);

    // A couple of training epochs so the parameters are not all zeros.
    AdamState opt = AdamState::init(prep.model.denoiser);
    for (int epoch = 1; epoch <= 3; ++epoch) {
        Rng rng(derive_seed(9, {static_cast<std::uint64_t>(epoch)}));
        train_epoch(prep.model, prep.tensors, opt, {}, 2, rng);
    }

    const auto path = (std::filesystem::temp_directory_path() / "diffsim_model.json").string();
    save_model(path, prep.model);
    const DiffusionModel back = load_model(path);
    std::filesystem::remove(path);

    CHECK(model_to_json(back) == model_to_json(prep.model));
    CHECK(back.schedule.alpha_bars == prep.model.schedule.alpha_bars);

    const auto s1 = sample_batch(prep.model, 2, 77);
    const auto s2 = sample_batch(back, 2, 77);
    for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].data == s2[i].data);
}
