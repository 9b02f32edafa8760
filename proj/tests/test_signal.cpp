// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "diffsim/csv_io.hpp"
#include "diffsim/signal.hpp"
#include "diffsim/synth.hpp"

using namespace diffsim;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<double>> ramp_signal(int channels, int n) {
    std::vector<std::vector<double>> s(static_cast<std::size_t>(channels));
    for (int c = 0; c < channels; ++c)
        for (int t = 0; t < n; ++t)
            s[static_cast<std::size_t>(c)].push_back(100.0 * c + t);
    return s;
}

}  // namespace

TEST_CASE("slide_windows honors width, overlap and trailing remainder") {
    const auto sig = ramp_signal(2, 11);
    const auto windows = slide_windows(sig, {4, 2}, 50.0);
    // stride 2: starts at 0, 2, 4, 6; start 8 would need samples 8..11.
    REQUIRE(windows.size() == 4);
    for (const auto& w : windows) {
        CHECK(w.channels() == 2);
        CHECK(w.timesteps() == 4);
        CHECK(w.sample_rate_hz == 50.0);
    }
    CHECK(windows[1].data[0][0] == 2.0);
    CHECK(windows[1].data[0][3] == 5.0);
    CHECK(windows[1].data[1][0] == 102.0);
}

TEST_CASE("slide_windows rejects bad input") {
    CHECK_THROWS_WITH(slide_windows(ramp_signal(1, 3), {4, 2}, 50.0),
                      Catch::Matchers::ContainsSubstring("signal too short"));
    auto ragged = ramp_signal(2, 8);
    ragged[1].pop_back();
    CHECK_THROWS(slide_windows(ragged, {4, 2}, 50.0));
    CHECK_THROWS(SlidingWindowConfig{4, 4}.validate());   // overlap == width
    CHECK_THROWS(SlidingWindowConfig{0, 0}.validate());
}

TEST_CASE("synthetic dataset is deterministic and participant-varied") {
    SynthConfig cfg;
    cfg.channels = 3;
    cfg.samples_per_class = 400;
    cfg.classes = {{"a", 2.0, {1.0, 0.4}}, {"b", 5.0, {1.0}}};
    const auto ds1 = synth_activity_dataset(cfg, 3, {64, 16}, 7);
    const auto ds2 = synth_activity_dataset(cfg, 3, {64, 16}, 7);

    REQUIRE(ds1.windows.size() == ds2.windows.size());
    REQUIRE(!ds1.windows.empty());
    for (std::size_t i = 0; i < ds1.windows.size(); ++i)
        REQUIRE(ds1.windows[i].window.data == ds2.windows[i].window.data);

    CHECK(ds1.label_names == std::vector<std::string>{"a", "b"});
    CHECK(ds1.participant_ids() == std::vector<int>{0, 1, 2});
    // (400 - 64) / 48 + 1 = 8 windows per (participant, class).
    CHECK(ds1.windows.size() == 3u * 2u * 8u);

    const auto r0 = synth_recording(cfg, 0, 0, 7);
    const auto r1 = synth_recording(cfg, 1, 0, 7);
    CHECK(r0 != r1);  // per-participant traits differ
    const auto other_seed = synth_recording(cfg, 0, 0, 8);
    CHECK(r0 != other_seed);
}

TEST_CASE("train_val_split is stratified and deterministic") {
    SynthConfig cfg;
    cfg.channels = 1;
    cfg.samples_per_class = 400;
    cfg.classes = {{"a", 2.0, {1.0}}, {"b", 5.0, {1.0}}};
    const auto ds = synth_activity_dataset(cfg, 2, {64, 16}, 3);

    const auto split1 = train_val_split(ds, 0.25, 11);
    const auto split2 = train_val_split(ds, 0.25, 11);
    CHECK(split1.train.windows.size() == split2.train.windows.size());
    CHECK(split1.val.windows.size() == split2.val.windows.size());
    // 8 windows per (participant, class) stratum, 25% -> 2 to validation.
    CHECK(split1.val.windows.size() == 2u * 2u * 2u);
    CHECK(split1.train.windows.size() + split1.val.windows.size() == ds.windows.size());
}

TEST_CASE("subsample_per_participant returns exact counts or a named error") {
    SynthConfig cfg;
    cfg.channels = 1;
    cfg.samples_per_class = 400;
    cfg.classes = {{"a", 2.0, {1.0}}, {"b", 5.0, {1.0}}};
    const auto ds = synth_activity_dataset(cfg, 2, {64, 16}, 3);

    const auto sub = subsample_per_participant(ds, 2, 5);
    CHECK(sub.windows.size() == 2u * 2u * 2u);

    try {
        subsample_per_participant(ds, 100, 5);
        FAIL("expected error");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("participant") != std::string::npos);
        CHECK(msg.find('a') != std::string::npos);
    }
}

TEST_CASE("loso splits exclude exactly the test participant") {
    SynthConfig cfg;
    cfg.channels = 1;
    cfg.samples_per_class = 200;
    cfg.classes = {{"a", 2.0, {1.0}}};
    const auto ds = synth_activity_dataset(cfg, 3, {64, 16}, 3);

    const auto splits = loso_splits(ds);
    REQUIRE(splits.size() == 3);
    for (const auto& s : splits) {
        for (int id : s.train_participants) CHECK(id != s.test_participant);
        CHECK(s.train_participants.size() == 2);
    }

    const auto only_two = filter_participants(ds, {0, 2});
    CHECK(only_two.participant_ids() == std::vector<int>{0, 2});
}

TEST_CASE("csv recording round-trips byte-identically") {
    const fs::path dir = fs::temp_directory_path() / "diffsim_csv_test";
    fs::create_directories(dir);

    Recording rec;
    for (int t = 0; t < 50; ++t) {
        rec.t.push_back(t * 0.02);
        rec.labels.push_back(t < 25 ? "walk" : "run");
    }
    rec.channels = ramp_signal(3, 50);
    for (auto& ch : rec.channels)
        for (auto& v : ch) v = v * 0.1234567890123 + 1e-7;

    const fs::path p1 = dir / "first.csv";
    const fs::path p2 = dir / "second.csv";
    write_recording_csv(p1, rec);
    const Recording back = read_recording_csv(p1, 0.02);
    write_recording_csv(p2, back);

    std::ifstream f1(p1), f2(p2);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    CHECK(back.channels == rec.channels);

    fs::remove_all(dir);
}

TEST_CASE("csv reader reports irregular time steps and bad fields") {
    const fs::path dir = fs::temp_directory_path() / "diffsim_csv_bad";
    fs::create_directories(dir);

    const fs::path irregular = dir / "irregular.csv";
    {
        std::ofstream out(irregular);
        out << "t,ch0,label\n0,1.0,walk\n0.02,1.0,walk\n0.07,1.0,walk\n";
    }
    CHECK_THROWS_WITH(read_recording_csv(irregular, 0.02),
                      Catch::Matchers::ContainsSubstring("irregular time step"));

    const fs::path bad = dir / "bad.csv";
    {
        std::ofstream out(bad);
        out << "t,ch0,label\n0,oops,walk\n";
    }
    CHECK_THROWS(read_recording_csv(bad, 0.02));

    fs::remove_all(dir);
}

TEST_CASE("segment_recording never windows across a label change") {
    Recording rec;
    const int n = 30;
    rec.channels = ramp_signal(1, n);
    for (int t = 0; t < n; ++t) {
        rec.t.push_back(t * 0.02);
        rec.labels.push_back(t < 13 ? "walk" : "run");
    }
    // width 8, overlap 4 -> stride 4. Run "walk" has 13 samples -> starts 0, 4;
    // run "run" has 17 samples -> starts 13, 17, 21.
    const auto windows = segment_recording(rec, {"walk", "run"}, {8, 4}, 9, 50.0);
    REQUIRE(windows.size() == 5);
    CHECK(windows[0].label.name == "walk");
    CHECK(windows[2].label.name == "run");
    CHECK(windows[2].window.data[0][0] == 13.0);
    for (const auto& w : windows) CHECK(w.participant.id == 9);

    // Unknown labels are skipped, short runs dropped.
    rec.labels.assign(static_cast<std::size_t>(n), "unknown");
    CHECK(segment_recording(rec, {"walk", "run"}, {8, 4}, 9, 50.0).empty());
}

TEST_CASE("dataset round-trips through participant csv files") {
    SynthConfig cfg;
    cfg.channels = 2;
    cfg.samples_per_class = 300;
    cfg.classes = {{"walk", 2.0, {1.0, 0.3}}, {"run", 6.0, {1.0}}};

    const fs::path dir = fs::temp_directory_path() / "diffsim_dataset_io";
    fs::create_directories(dir);
    std::vector<std::string> names = {"walk", "run"};
    for (int p = 0; p < 2; ++p) {
        std::vector<std::vector<std::vector<double>>> signals;
        for (int ci = 0; ci < 2; ++ci) signals.push_back(synth_recording(cfg, p, ci, 4));
        write_participant_csv(dir / ("participant_" + std::to_string(p) + ".csv"), signals, names,
                              cfg.sample_rate_hz);
    }

    const auto loaded = load_csv_dataset(dir, names, {64, 16}, cfg.sample_rate_hz, 0.02);
    const auto direct = synth_activity_dataset(cfg, 2, {64, 16}, 4);
    REQUIRE(loaded.windows.size() == direct.windows.size());
    for (std::size_t i = 0; i < loaded.windows.size(); ++i) {
        CHECK(loaded.windows[i].label.name == direct.windows[i].label.name);
        CHECK(loaded.windows[i].participant.id == direct.windows[i].participant.id);
        const auto& a = loaded.windows[i].window.data;
        const auto& b = direct.windows[i].window.data;
        REQUIRE(a.size() == b.size());
        for (std::size_t c = 0; c < a.size(); ++c)
            for (std::size_t t = 0; t < a[c].size(); ++t)
                CHECK(a[c][t] == Catch::Approx(b[c][t]).margin(0.0));  // %.17g is lossless
    }
    fs::remove_all(dir);
}
