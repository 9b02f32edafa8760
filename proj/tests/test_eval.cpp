// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "diffsim/eval.hpp"
#include "diffsim/synth.hpp"

using namespace diffsim;

namespace {

ConfusionMatrix cm_of(std::vector<std::vector<long long>> counts) {
    ConfusionMatrix cm;
    cm.counts = std::move(counts);
    return cm;
}

Dataset two_class_dataset(int participants, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.channels = 2;
    cfg.samples_per_class = 800;
    cfg.noise_std = 0.3;
    cfg.classes = {{"walk", 3.125, {1.0, 0.4}}, {"run", 9.375, {1.0}}};
    return synth_activity_dataset(cfg, participants, {64, 16}, seed);
}

}  // namespace

TEST_CASE("macro f1 on hand-checked matrices") {
    // Both classes: P = R = 0.5 -> F1 = 0.5 each -> macro 0.5.
    CHECK(macro_f1(cm_of({{5, 5}, {5, 5}})) == Catch::Approx(0.5));
    // Perfect diagonal.
    CHECK(macro_f1(cm_of({{7, 0}, {0, 3}})) == Catch::Approx(1.0));
    // Class 1 never occurs and is never predicted: its F1 counts as 0.
    CHECK(macro_f1(cm_of({{4, 0}, {0, 0}})) == Catch::Approx(0.5));
    // Everything misclassified.
    CHECK(macro_f1(cm_of({{0, 3}, {4, 0}})) == Catch::Approx(0.0));
    CHECK_THROWS(macro_f1(cm_of({{0, 0}, {0, 0}})));

    // Simultaneous row/column permutation leaves the macro average unchanged.
    const auto m = cm_of({{8, 1, 1}, {2, 6, 2}, {0, 3, 7}});
    const auto p = cm_of({{7, 0, 3}, {1, 8, 1}, {2, 2, 6}});  // classes reordered (2,0,1)
    CHECK(macro_f1(m) == Catch::Approx(macro_f1(p)));
}

TEST_CASE("the nine training-set configurations are exactly as documented") {
    const auto specs = table1_specs(128, 2);
    REQUIRE(specs.size() == 9);

    std::set<std::string> names;
    for (const auto& s : specs) names.insert(s.name);
    CHECK(names.size() == 9);
    CHECK(names.count("two_sample") == 1);
    CHECK(names.count("full_set") == 1);
    CHECK(names.count("full_ddpm") == 1);
    CHECK(names.count("ot_c_opt_gak") == 1);
    CHECK(names.count("otd_cosine_time") == 1);

    for (const auto& s : specs) {
        if (s.kind == TrainingSetKind::TwoSample || s.kind == TrainingSetKind::FullSet) {
            CHECK(s.synthetic_per_model == 0);
            CHECK_FALSE(s.metric.has_value());
        } else {
            CHECK(s.synthetic_per_model == 128);
        }
        if (s.name.rfind("ot_", 0) == 0) {
            CHECK(s.monitor_training);
            CHECK_FALSE(s.monitor_denoising);
        }
        if (s.name.rfind("otd_", 0) == 0) {
            CHECK(s.monitor_training);
            CHECK(s.monitor_denoising);
        }
        if (s.kind == TrainingSetKind::FullSet) CHECK(s.real_per_participant == -1);
    }
}

TEST_CASE("build_training_set assembles real and synthetic parts with exact counts") {
    const auto ds = two_class_dataset(2, 3);
    RealSelection real;
    real.full = ds;
    real.two_sample = subsample_per_participant(ds, 2, 17);

    DdpmArtifacts artifacts;
    std::vector<TimeWindow> fake(4, ds.windows.front().window);
    artifacts.synthetic["full_ddpm"] = {fake, fake};

    const auto specs = table1_specs(4, 2);
    const auto& two = specs[0];
    const auto& full = specs[1];
    const auto& ddpm = specs[2];

    CHECK(build_training_set(two, real, artifacts).windows.size() == 2u * 2u * 2u);
    CHECK(build_training_set(full, real, artifacts).windows.size() == ds.windows.size());

    const auto aug = build_training_set(ddpm, real, artifacts);
    CHECK(aug.windows.size() == 8u + 2u * 4u);
    int synthetic_count = 0;
    for (const auto& w : aug.windows)
        if (w.participant.id == -1) ++synthetic_count;
    CHECK(synthetic_count == 8);

    CHECK_THROWS_WITH(build_training_set(specs[3], real, artifacts),
                      Catch::Matchers::ContainsSubstring("ot_c_opt_gak"));

    DdpmArtifacts scarce;
    scarce.synthetic["full_ddpm"] = {fake, {fake.front()}};  // class 1 has only one window
    CHECK_THROWS(build_training_set(ddpm, real, scarce));
}

TEST_CASE("proxy classifier separates spectrally distinct classes") {
    const auto ds = two_class_dataset(3, 5);
    const auto test = filter_participants(ds, {2});
    const auto train_pool = filter_participants(ds, {0, 1});
    const auto split = train_val_split(train_pool, 0.25, 7);

    ClassifierOptions opts;
    opts.welch.segment_len = 32;
    const auto model = train_proxy_classifier(split.train, split.val, 11, opts);
    const double f1 = macro_f1(evaluate_classifier(model, test));
    CHECK(f1 > 0.95);

    // Determinism in the seed.
    const auto again = train_proxy_classifier(split.train, split.val, 11, opts);
    CHECK(net_to_json(model.net) == net_to_json(again.net));
}

TEST_CASE("proxy classifier rejects single-class training data") {
    auto ds = two_class_dataset(2, 6);
    Dataset one;
    one.label_names = ds.label_names;
    one.channels = ds.channels;
    for (const auto& w : ds.windows)
        if (w.label.index == 0) one.windows.push_back(w);
    ClassifierOptions opts;
    opts.welch.segment_len = 32;
    CHECK_THROWS_WITH(train_proxy_classifier(one, {}, 1, opts),
                      Catch::Matchers::ContainsSubstring("single-class"));
}

TEST_CASE("shuffled labels drive the classifier to chance level") {
    auto ds = two_class_dataset(3, 8);
    Rng rng(99);
    for (auto& w : ds.windows) {
        const int k = static_cast<int>(rng.uniform_int(0, 1));
        w.label = {ds.label_names[static_cast<std::size_t>(k)], k};
    }
    const auto test = filter_participants(ds, {2});
    const auto train_pool = filter_participants(ds, {0, 1});
    const auto split = train_val_split(train_pool, 0.25, 7);

    ClassifierOptions opts;
    opts.welch.segment_len = 32;
    const auto model = train_proxy_classifier(split.train, split.val, 12, opts);
    const double f1 = macro_f1(evaluate_classifier(model, test));
    CHECK(f1 > 0.2);
    CHECK(f1 < 0.8);
}

TEST_CASE("reduction arithmetic matches the documented formulas") {
    std::map<std::string, std::vector<double>> usage;
    usage["m"] = {2700.0, 2700.0};
    const auto rep = reduction_report(usage, 4500);
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].mean_epochs == Catch::Approx(2700.0));
    CHECK(rep.rows[0].reduction_percent == Catch::Approx(40.0));
    CHECK(rep.rows[0].saved_epochs == Catch::Approx(3600.0));
    CHECK(rep.note.find("19.05") != std::string::npos);
    CHECK(rep.note.find("19.51") != std::string::npos);
    CHECK_THROWS(reduction_report({}, 100));
}

TEST_CASE("report assembly aggregates per-split results") {
    SplitResult a, b;
    a.test_participant = 0;
    a.set_names = {"two_sample", "full_set"};
    a.f1_per_set = {0.5, 0.7};
    a.epochs_used["cosine_psd"] = {100.0, 200.0};
    a.noise_cosine_psd = 0.4;
    a.sampled_cosine_psd = 0.6;
    b = a;
    b.test_participant = 1;
    b.f1_per_set = {0.6, 0.8};
    b.epochs_used["cosine_psd"] = {300.0};
    b.noise_cosine_psd = 0.2;
    b.sampled_cosine_psd = 0.8;

    const auto rep = assemble_report({a, b}, 600, 200);
    CHECK(rep.participants == std::vector<int>{0, 1});
    CHECK(rep.set_mean_f1("two_sample") == Catch::Approx(0.55));
    CHECK(rep.set_mean_f1("full_set") == Catch::Approx(0.75));
    CHECK(rep.epochs_used.at("cosine_psd") == std::vector<double>{100.0, 200.0, 300.0});
    CHECK(rep.noise_cosine_psd == Catch::Approx(0.3));
    CHECK(rep.sampled_cosine_psd == Catch::Approx(0.7));
    CHECK_THROWS(rep.set_mean_f1("nope"));
}

TEST_CASE("joint monitored training reproduces standalone monitored runs exactly") {
    SynthConfig scfg;
    scfg.channels = 2;
    scfg.samples_per_class = 500;
    scfg.classes = {{"a", 3.0, {1.0, 0.4}}};
    const auto ds = synth_activity_dataset(scfg, 2, {32, 8}, 31);
    std::vector<TimeWindow> train;
    for (const auto& w : ds.windows) train.push_back(w.window);
    train.resize(6);

    DiffusionConfig dcfg;
    dcfg.T = 8;
    dcfg.hidden = {16};
    dcfg.stft = {8, 4};

    std::vector<TrainingMonitorConfig> cfgs;
    for (MonitorMetric m : {MonitorMetric::CosineTime, MonitorMetric::CosinePsd,
                            MonitorMetric::COptGak}) {
        TrainingMonitorConfig cfg;
        cfg.scoring.metric = m;
        cfg.scoring.welch.segment_len = 16;
        cfg.scoring.gak_sigma = 0.5;
        cfg.scoring.gak_range_lo = 0.0;
        cfg.scoring.gak_range_hi = 1.0;
        cfg.interval_epochs = 2;
        cfg.probe_batch = 2;
        cfg.patience_probes = 1;
        cfg.max_epochs = 10;
        cfgs.push_back(cfg);
    }

    TrainOptions topts;
    topts.batch_size = 3;
    topts.train_seed = 5001;
    topts.probe_seed = 6001;

    const auto joint =
        detail::train_all_variants(make_diffusion_model(train, dcfg, 77), train, cfgs, topts);

    for (const auto& cfg : cfgs) {
        const std::string name = monitor_metric_name(cfg.scoring.metric);
        const auto standalone =
            train_with_monitor(make_diffusion_model(train, dcfg, 77).model,
                               make_diffusion_model(train, dcfg, 77).tensors, train, cfg, topts);
        const auto& jt = joint.traces.at(name);
        REQUIRE(jt.records.size() == standalone.trace.records.size());
        for (std::size_t i = 0; i < jt.records.size(); ++i) {
            CHECK(jt.records[i].position == standalone.trace.records[i].position);
            CHECK(jt.records[i].mean == standalone.trace.records[i].mean);
            CHECK(jt.records[i].decision == standalone.trace.records[i].decision);
        }
        CHECK(joint.epochs_used.at(name) == standalone.epochs_used);
        CHECK(net_to_json(joint.monitored.at(name).denoiser) ==
              net_to_json(standalone.model.denoiser));
    }

    // The cap model equals an unmonitored run over the full budget.
    const auto plain = train_unmonitored(make_diffusion_model(train, dcfg, 77).model,
                                         make_diffusion_model(train, dcfg, 77).tensors, 10, topts);
    CHECK(net_to_json(joint.cap_model.denoiser) == net_to_json(plain.final_denoiser));
}

TEST_CASE("run_split produces a full per-split result on a tiny corpus") {
    const auto ds = two_class_dataset(3, 13);

    ExperimentOptions opts;
    opts.welch.segment_len = 32;
    opts.diffusion.T = 8;
    opts.diffusion.hidden = {16};
    opts.diffusion.stft = {16, 8};
    opts.monitor_interval_epochs = 2;
    opts.probe_batch = 2;
    opts.patience_probes = 1;
    opts.max_epochs = 6;
    opts.denoise_interval_steps = 3;
    opts.synthetic_per_model = 4;
    opts.classifier.welch.segment_len = 32;
    opts.classifier.max_epochs = 30;
    opts.classifier_seeds = 2;
    opts.seed = 77;

    const auto res = run_split(ds, 2, opts);
    CHECK(res.test_participant == 2);
    REQUIRE(res.set_names.size() == 9);
    REQUIRE(res.f1_per_set.size() == 9);
    for (double f : res.f1_per_set) {
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
    }
    CHECK(res.calibration.size() == 2);
    CHECK(res.median_sigma.size() == 2);
    REQUIRE(res.epochs_used.size() == 3);
    for (const auto& [metric, v] : res.epochs_used) {
        REQUIRE(v.size() == 2);
        for (double e : v) {
            CHECK(e >= 1.0);
            CHECK(e <= 6.0);
        }
    }
    REQUIRE(res.steps_used.size() == 3);
    for (const auto& [metric, v] : res.steps_used)
        for (double s : v) CHECK(s <= 8.0);

    // Deterministic end to end.
    const auto again = run_split(ds, 2, opts);
    CHECK(again.f1_per_set == res.f1_per_set);
    CHECK(again.epochs_used == res.epochs_used);
}
