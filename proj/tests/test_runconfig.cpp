// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "diffsim/runconfig.hpp"

using namespace diffsim;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "diffsim_runconfig_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("presets populate every schema key and nothing else") {
    for (const std::string name : {"desk", "paper"}) {
        const RunConfig cfg = preset_by_name(name);
        std::set<std::string> schema_keys;
        for (const auto& def : config_schema()) schema_keys.insert(def.key);
        std::set<std::string> preset_keys;
        for (const auto& [k, v] : cfg.values()) preset_keys.insert(k);
        CHECK(preset_keys == schema_keys);
    }
    CHECK_THROWS_WITH(preset_by_name("tiny"), Catch::Matchers::ContainsSubstring("unknown preset"));
}

TEST_CASE("set rejects unknown keys and ill-typed values") {
    RunConfig cfg;
    CHECK_THROWS_WITH(cfg.set("sigma_grid", "1"),
                      Catch::Matchers::ContainsSubstring("unknown config key: sigma_grid"));
    CHECK_THROWS(cfg.set("ddpm_t", "two hundred"));
    CHECK_THROWS(cfg.set("ddpm_t", "200x"));
    CHECK_THROWS(cfg.set("beta_end", "fast"));
    CHECK_THROWS(cfg.set("welch_density", "maybe"));
    CHECK_THROWS(cfg.set("seed", "-1"));

    cfg.set("ddpm_t", "200");
    CHECK(cfg.get_int("ddpm_t") == 200);
    cfg.set("welch_density", "true");
    CHECK(cfg.get_bool("welch_density"));
    CHECK_THROWS_WITH(cfg.get_double("beta_end"),
                      Catch::Matchers::ContainsSubstring("config key not set"));
}

TEST_CASE("configs survive a save/load round trip unchanged") {
    const RunConfig cfg = desk_preset();
    const auto path = temp_file("roundtrip.cfg");
    save_config(path, cfg);
    const RunConfig back = load_config(path);
    CHECK(back == cfg);
}

TEST_CASE("config files accept comments and reject duplicates and junk") {
    const auto path = temp_file("manual.cfg");
    {
        std::ofstream out(path);
        out << "# a comment line\n\n  ddpm_t = 50 \nseed=9\n";
    }
    const RunConfig cfg = load_config(path);
    CHECK(cfg.get_int("ddpm_t") == 50);
    CHECK(cfg.get_u64("seed") == 9);

    {
        std::ofstream out(path);
        out << "seed=1\nseed=2\n";
    }
    CHECK_THROWS_WITH(load_config(path), Catch::Matchers::ContainsSubstring("duplicate key"));

    {
        std::ofstream out(path);
        out << "just words\n";
    }
    CHECK_THROWS_WITH(load_config(path), Catch::Matchers::ContainsSubstring("key=value"));
}

TEST_CASE("class list parsing handles well-formed and malformed inputs") {
    const auto classes = parse_classes("walk:1.5:1,0.5;run:3:1");
    REQUIRE(classes.size() == 2);
    CHECK(classes[0].name == "walk");
    CHECK(classes[0].fundamental_hz == Catch::Approx(1.5));
    CHECK(classes[0].harmonics == std::vector<double>{1.0, 0.5});
    CHECK(classes[1].name == "run");
    CHECK(classes[1].harmonics == std::vector<double>{1.0});

    CHECK_THROWS(parse_classes(""));
    CHECK_THROWS(parse_classes("walk"));
    CHECK_THROWS(parse_classes("walk:fast:1"));
    CHECK_THROWS(parse_classes("walk:1.5:one"));
    CHECK_THROWS(parse_classes("walk:1.5:"));

    CHECK(parse_dims("256,256", "hidden_dims") == std::vector<int>{256, 256});
    CHECK_THROWS(parse_dims("256,,256", "hidden_dims"));
    CHECK_THROWS(parse_dims("", "hidden_dims"));
}

TEST_CASE("converters reproduce the desk preset's documented settings") {
    const RunConfig cfg = desk_preset();

    const auto synth = to_synth_config(cfg);
    CHECK(synth.channels == 2);
    CHECK(synth.classes.size() == 2);
    CHECK(synth.classes[0].name == "walking");

    const auto win = to_sliding_config(cfg);
    CHECK(win.width == 32);
    CHECK(win.overlap == 8);

    const auto welch = to_welch_config(cfg);
    CHECK(welch.segment_len == 32);
    CHECK_FALSE(welch.density);

    const auto diff = to_diffusion_config(cfg);
    CHECK(diff.T == 200);
    CHECK(diff.beta_end == std::vector<double>{0.02});
    CHECK(diff.hidden == std::vector<int>{384, 384});
    CHECK(diff.stft.window_size == 16);

    const auto grid = to_calibration_grid(cfg);
    CHECK(grid.num_points == 120);
    CHECK(grid.spacing == CalibrationGrid::Spacing::Log);

    const auto mon = to_training_monitor_config(cfg, MonitorMetric::CosinePsd);
    CHECK(mon.interval_epochs == 10);
    CHECK(mon.max_epochs == 600);
    CHECK(mon.patience_probes == 5);

    const auto paper = paper_preset();
    CHECK(to_diffusion_config(paper).T == 3000);
    CHECK(to_stft_config(paper).window_size == 22);
    CHECK(to_stft_config(paper).overlap == 20);
    CHECK(to_synth_config(paper).classes.size() == 4);
}

TEST_CASE("experiment options derive from the config") {
    const RunConfig cfg = desk_preset();
    const auto opts = to_experiment_options(cfg);
    CHECK(opts.max_epochs == 600);
    CHECK(opts.monitor_interval_epochs == 10);
    CHECK(opts.probe_batch == 8);
    CHECK(opts.synthetic_per_model == 128);
    CHECK(opts.classifier_seeds == 5);
    CHECK(opts.real_per_participant == 4);
    CHECK(opts.seed == 42);
}
