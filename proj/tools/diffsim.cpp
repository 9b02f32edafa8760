// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line frontend: synthetic data generation, sigma calibration,
// monitored DDPM training, sampling, and the leave-one-subject-out
// evaluation, all driven by a flat key=value configuration.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diffsim/csv_io.hpp"
#include "diffsim/diffusion.hpp"
#include "diffsim/eval.hpp"
#include "diffsim/gak.hpp"
#include "diffsim/monitor.hpp"
#include "diffsim/runconfig.hpp"
#include "diffsim/signal.hpp"
#include "diffsim/synth.hpp"

namespace fs = std::filesystem;
using namespace diffsim;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string preset = "desk";
    std::vector<std::string> overrides;
};

RunConfig resolve_config(const GlobalArgs& g) {
    RunConfig cfg = preset_by_name(g.preset);
    std::string path = g.config_path;
    if (path.empty())
        if (const char* env = std::getenv("DIFFSIM_CONFIG")) path = env;
    if (!path.empty())
        for (const auto& [k, v] : load_config(path).values()) cfg.set(k, v);
    for (const auto& item : g.overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + item + "'");
        cfg.set(item.substr(0, eq), item.substr(eq + 1));
    }
    return cfg;
}

std::vector<std::string> class_names(const RunConfig& cfg) {
    std::vector<std::string> names;
    for (const auto& c : parse_classes(cfg.get_string("classes"))) names.push_back(c.name);
    return names;
}

/// Loads CSV recordings when a data directory is given, otherwise
/// synthesizes the configured dataset in memory.
Dataset load_or_synth(const RunConfig& cfg, const std::string& data_dir) {
    const SlidingWindowConfig win = to_sliding_config(cfg);
    if (!data_dir.empty()) {
        const double rate = cfg.get_double("sample_rate_hz");
        return load_csv_dataset(data_dir, class_names(cfg), win, rate, 1.0 / rate);
    }
    return synth_activity_dataset(to_synth_config(cfg), static_cast<int>(cfg.get_int("participants")),
                                  win, cfg.get_u64("seed"));
}

int class_index_of(const Dataset& ds, const std::string& activity) {
    for (std::size_t i = 0; i < ds.label_names.size(); ++i)
        if (ds.label_names[i] == activity) return static_cast<int>(i);
    throw std::invalid_argument("unknown activity '" + activity + "'");
}

struct ClassSelection {
    std::vector<TimeWindow> train;
    std::vector<TimeWindow> val;
};

/// Deterministic per-participant pick of training and validation windows
/// for one activity class, across every participant in the dataset.
ClassSelection select_class_windows(const Dataset& ds, int class_index, const RunConfig& cfg) {
    const int per_train = static_cast<int>(cfg.get_int("real_per_participant"));
    const int per_val = static_cast<int>(cfg.get_int("val_per_participant"));
    const std::uint64_t seed = cfg.get_u64("seed");
    ClassSelection sel;
    for (int p : ds.participant_ids()) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.windows.size(); ++i)
            if (ds.windows[i].participant.id == p && ds.windows[i].label.index == class_index)
                idx.push_back(i);
        if (static_cast<int>(idx.size()) < per_train + per_val)
            throw std::runtime_error("participant " + std::to_string(p) + " class " +
                                     ds.label_names[static_cast<std::size_t>(class_index)] +
                                     " has " + std::to_string(idx.size()) + " windows, need " +
                                     std::to_string(per_train + per_val));
        Rng rng(derive_seed(seed, {0x636c6973656cULL, static_cast<std::uint64_t>(p),
                                   static_cast<std::uint64_t>(class_index)}));
        rng.shuffle(idx);
        for (int i = 0; i < per_train; ++i)
            sel.train.push_back(ds.windows[idx[static_cast<std::size_t>(i)]].window);
        for (int i = 0; i < per_val; ++i)
            sel.val.push_back(ds.windows[idx[static_cast<std::size_t>(per_train + i)]].window);
    }
    return sel;
}

GakCalibration calibrate_selection(const ClassSelection& sel, const RunConfig& cfg) {
    const WelchConfig welch = to_welch_config(cfg);
    std::vector<AxisSeries> tr, va;
    for (const auto& w : sel.train) tr.push_back(psd_axes(w, welch));
    for (const auto& w : sel.val) va.push_back(psd_axes(w, welch));
    return calibrate_sigma(tr, va, to_calibration_grid(cfg), to_calibrate_options(cfg));
}

void write_labels(const fs::path& path, const std::vector<std::string>& names) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    for (const auto& n : names) out << n << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_sampled_windows(const fs::path& dir, const std::vector<TimeWindow>& windows,
                           const std::string& label) {
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const auto& w = windows[i];
        Recording rec;
        rec.channels = w.data;
        const double dt = 1.0 / w.sample_rate_hz;
        for (int t = 0; t < w.timesteps(); ++t) {
            rec.t.push_back(static_cast<double>(t) * dt);
            rec.labels.push_back(label);
        }
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%05zu.csv", i);
        write_recording_csv(dir / name, rec);
    }
}

void cmd_synth_data(const GlobalArgs& g, const std::string& out_dir) {
    const RunConfig cfg = resolve_config(g);
    const SynthConfig sc = to_synth_config(cfg);
    const int participants = static_cast<int>(cfg.get_int("participants"));
    const std::uint64_t seed = cfg.get_u64("seed");
    fs::create_directories(out_dir);

    std::vector<std::string> names;
    for (const auto& c : sc.classes) names.push_back(c.name);
    for (int p = 0; p < participants; ++p) {
        std::vector<std::vector<std::vector<double>>> signals;
        for (int ci = 0; ci < static_cast<int>(sc.classes.size()); ++ci)
            signals.push_back(synth_recording(sc, p, ci, seed));
        write_participant_csv(fs::path(out_dir) / ("participant_" + std::to_string(p) + ".csv"),
                              signals, names, sc.sample_rate_hz);
    }
    write_labels(fs::path(out_dir) / "labels.txt", names);
    save_config(fs::path(out_dir) / "config.resolved", cfg);
    std::cout << "wrote " << participants << " participants x " << names.size()
              << " activities to " << out_dir << "\n";
}

void cmd_calibrate(const GlobalArgs& g, const std::string& data_dir, const std::string& activity,
                   const std::string& out_file) {
    const RunConfig cfg = resolve_config(g);
    const Dataset ds = load_or_synth(cfg, data_dir);

    std::vector<int> indices;
    if (activity.empty())
        for (int c = 0; c < static_cast<int>(ds.label_names.size()); ++c) indices.push_back(c);
    else
        indices.push_back(class_index_of(ds, activity));

    nlohmann::json out = nlohmann::json::object();
    for (int c : indices) {
        const ClassSelection sel = select_class_windows(ds, c, cfg);
        const GakCalibration cal = calibrate_selection(sel, cfg);
        const WelchConfig welch = to_welch_config(cfg);
        std::vector<AxisSeries> tr, va;
        for (const auto& w : sel.train) tr.push_back(psd_axes(w, welch));
        for (const auto& w : sel.val) va.push_back(psd_axes(w, welch));
        const MedianSigma med = median_heuristic_sigma(tr, va);

        nlohmann::json jc = calibration_to_json(cal);
        jc["median_sigma"] = med.sigma;
        jc["median_floored"] = med.floored;
        const std::string& name = ds.label_names[static_cast<std::size_t>(c)];
        out[name] = std::move(jc);
        std::cout << name << ": sigma=" << format_double(cal.sigma)
                  << " mean=" << format_double(cal.mean_score)
                  << " std=" << format_double(cal.std_score)
                  << " fallback=" << (cal.fallback ? "true" : "false")
                  << " median_sigma=" << format_double(med.sigma) << "\n";
    }
    write_text(out_file, out.dump(2) + "\n");
}

void cmd_train(const GlobalArgs& g, const std::string& data_dir, const std::string& activity,
               const std::string& out_dir) {
    const RunConfig cfg = resolve_config(g);
    const Dataset ds = load_or_synth(cfg, data_dir);
    const int ci = class_index_of(ds, activity);
    const auto cu = static_cast<std::uint64_t>(ci);
    const std::uint64_t seed = cfg.get_u64("seed");
    const ClassSelection sel = select_class_windows(ds, ci, cfg);

    PreparedTraining prep = make_diffusion_model(sel.train, to_diffusion_config(cfg),
                                                 derive_seed(seed, {0x6d6f64ULL, cu}));
    TrainOptions topts;
    topts.adam.lr = cfg.get_double("adam_lr");
    topts.batch_size = static_cast<int>(cfg.get_int("ddpm_batch"));
    topts.train_seed = derive_seed(seed, {0x747261696eULL, cu});
    topts.probe_seed = derive_seed(seed, {0x70726f6265ULL, cu});

    const std::string metric_name = cfg.get_string("monitor_metric");
    TrainResult result;
    if (metric_name == "none") {
        result = train_unmonitored(std::move(prep.model), prep.tensors,
                                   static_cast<int>(cfg.get_int("max_epochs")), topts);
    } else {
        const MonitorMetric metric = monitor_metric_from_name(metric_name);
        double sigma = 0.0, lo = 0.0, hi = 0.0;
        if (metric == MonitorMetric::COptGak) {
            const GakCalibration cal = calibrate_selection(sel, cfg);
            sigma = cal.sigma;
            lo = cal.range_lo;
            hi = cal.range_hi;
        }
        result = train_with_monitor(std::move(prep.model), prep.tensors, sel.train,
                                    to_training_monitor_config(cfg, metric, sigma, lo, hi), topts);
    }

    fs::create_directories(out_dir);
    save_model((fs::path(out_dir) / "model.json").string(), result.model);
    {
        std::string losses = "epoch,loss\n";
        for (std::size_t e = 0; e < result.losses.size(); ++e)
            losses += std::to_string(e + 1) + "," + format_double(result.losses[e]) + "\n";
        write_text(fs::path(out_dir) / "losses.csv", losses);
    }
    if (metric_name != "none") {
        trace_to_csv(fs::path(out_dir) / "trace.csv", result.trace);
        write_text(fs::path(out_dir) / "trace.json", trace_to_json(result.trace).dump(2) + "\n");
    }
    save_config(fs::path(out_dir) / "config.resolved", cfg);
    std::cout << "trained " << activity << ": epochs_used=" << result.epochs_used
              << " best_epoch=" << result.best_epoch << " final_loss="
              << format_double(result.losses.empty() ? 0.0 : result.losses.back()) << "\n";
}

void cmd_sample(const GlobalArgs& g, const std::string& model_file, const std::string& out_dir,
                int count, bool monitor, const std::string& data_dir,
                const std::string& activity) {
    const RunConfig cfg = resolve_config(g);
    const DiffusionModel model = load_model(model_file);
    const std::uint64_t seed = cfg.get_u64("seed");
    if (count <= 0) count = static_cast<int>(cfg.get_int("synthetic_per_model"));
    fs::create_directories(out_dir);

    std::vector<TimeWindow> windows;
    if (monitor) {
        if (activity.empty())
            throw std::invalid_argument("sample --monitor requires --activity for reference windows");
        const std::string metric_name = cfg.get_string("monitor_metric");
        if (metric_name == "none")
            throw std::invalid_argument("sample --monitor requires monitor_metric != none");
        const MonitorMetric metric = monitor_metric_from_name(metric_name);
        const Dataset ds = load_or_synth(cfg, data_dir);
        const int ci = class_index_of(ds, activity);
        const ClassSelection sel = select_class_windows(ds, ci, cfg);
        double sigma = 0.0, lo = 0.0, hi = 0.0;
        if (metric == MonitorMetric::COptGak) {
            const GakCalibration cal = calibrate_selection(sel, cfg);
            sigma = cal.sigma;
            lo = cal.range_lo;
            hi = cal.range_hi;
        }
        const SampleResult res = sample_with_monitor(
            model, count, sel.train, to_denoise_monitor_config(cfg, metric, sigma, lo, hi),
            derive_seed(seed, {0x64656e6fULL, static_cast<std::uint64_t>(ci)}));
        windows = res.windows;
        trace_to_csv(fs::path(out_dir) / "trace.csv", res.trace);
        write_text(fs::path(out_dir) / "trace.json", trace_to_json(res.trace).dump(2) + "\n");
        std::cout << "denoising stopped after " << res.steps_used << " of " << model.schedule.T
                  << " steps (best snapshot at step " << res.best_step << ")\n";
    } else {
        windows = sample_batch(model, count, derive_seed(seed, {0x73616d70ULL}));
    }
    write_sampled_windows(out_dir, windows, activity.empty() ? "synthetic" : activity);
    save_config(fs::path(out_dir) / "config.resolved", cfg);
    std::cout << "wrote " << windows.size() << " sampled windows to " << out_dir << "\n";
}

void cmd_experiment(const GlobalArgs& g, const std::string& data_dir, const std::string& out_dir,
                    int max_splits) {
    const RunConfig cfg = resolve_config(g);
    const Dataset ds = load_or_synth(cfg, data_dir);
    const ExperimentOptions opts = to_experiment_options(cfg);

    auto splits = loso_splits(ds);
    if (max_splits > 0 && static_cast<int>(splits.size()) > max_splits)
        splits.resize(static_cast<std::size_t>(max_splits));

    std::vector<SplitResult> results;
    std::vector<std::string> failures;
    for (const auto& split : splits) {
        try {
            results.push_back(run_split(ds, split.test_participant, opts));
            std::cout << "split participant=" << split.test_participant << " done\n";
        } catch (const std::exception& e) {
            failures.push_back("participant=" + std::to_string(split.test_participant) + ": " +
                               e.what());
            std::cerr << "split participant=" << split.test_participant << " failed: " << e.what()
                      << "\n";
        }
    }
    if (results.empty())
        throw std::runtime_error("experiment: every split failed; first failure: " +
                                 (failures.empty() ? std::string("none") : failures.front()));

    const EvalReport report = assemble_report(std::move(results), opts.max_epochs, opts.diffusion.T);
    fs::create_directories(out_dir);
    report_to_csv(fs::path(out_dir) / "f1.csv", report);
    write_text(fs::path(out_dir) / "report.json", report_to_json(report).dump(2) + "\n");
    const ReductionReport epochs_red = reduction_report(report.epochs_used, report.max_epochs);
    reduction_to_csv(fs::path(out_dir) / "reduction_epochs.csv", epochs_red);
    if (!report.denoise_steps_used.empty())
        reduction_to_csv(fs::path(out_dir) / "reduction_steps.csv",
                         reduction_report(report.denoise_steps_used, report.max_steps));
    write_labels(fs::path(out_dir) / "labels.txt", ds.label_names);
    save_config(fs::path(out_dir) / "config.resolved", cfg);
    if (!failures.empty()) {
        std::string text;
        for (const auto& f : failures) text += f + "\n";
        write_text(fs::path(out_dir) / "failures.txt", text);
    }

    for (const auto& name : report.set_names)
        std::cout << name << ": mean_f1=" << format_double(report.set_mean_f1(name)) << "\n";
    for (const auto& row : epochs_red.rows)
        std::cout << row.metric << ": mean_epochs=" << format_double(row.mean_epochs)
                  << " reduction=" << format_double(row.reduction_percent)
                  << "% saved=" << format_double(row.saved_epochs) << "\n";
    std::cout << "note: " << epochs_red.note << "\n";
    std::cout << "noise_cosine_psd=" << format_double(report.noise_cosine_psd)
              << " sampled_cosine_psd=" << format_double(report.sampled_cosine_psd) << "\n";
    if (!failures.empty()) std::cout << failures.size() << " split(s) failed; see failures.txt\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sensor time-series DDPM toolkit: synthetic activity data, similarity-based "
                 "training monitors, and leave-one-subject-out evaluation"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path,
                   "key=value config file (default: $DIFFSIM_CONFIG if set)");
    app.add_option("--preset", g.preset, "built-in preset: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    app.add_option("--set", g.overrides, "override one config key (key=value, repeatable)");

    std::string out_dir, data_dir, activity, model_file, out_file;
    int count = 0, max_splits = 0;
    bool monitor = false;

    auto* synth = app.add_subcommand("synth-data", "generate a synthetic activity dataset as CSV");
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->callback([&] { cmd_synth_data(g, out_dir); });

    auto* cal = app.add_subcommand("calibrate", "calibrate the alignment-kernel sigma per class");
    cal->add_option("--data", data_dir, "CSV dataset directory (default: synthesize)");
    cal->add_option("--activity", activity, "single activity (default: all)");
    cal->add_option("--out", out_file, "output JSON file")->required();
    cal->callback([&] { cmd_calibrate(g, data_dir, activity, out_file); });

    auto* train = app.add_subcommand("train", "train one per-class diffusion model");
    train->add_option("--data", data_dir, "CSV dataset directory (default: synthesize)");
    train->add_option("--activity", activity, "activity class to model")->required();
    train->add_option("--out", out_dir, "output directory")->required();
    train->callback([&] { cmd_train(g, data_dir, activity, out_dir); });

    auto* sample = app.add_subcommand("sample", "sample windows from a trained model");
    sample->add_option("--model", model_file, "model checkpoint (model.json)")->required();
    sample->add_option("--out", out_dir, "output directory")->required();
    sample->add_option("--count", count, "number of windows (default: synthetic_per_model)");
    sample->add_flag("--monitor", monitor, "monitor denoising and stop early");
    sample->add_option("--data", data_dir, "reference dataset for --monitor");
    sample->add_option("--activity", activity, "reference activity for --monitor");
    sample->callback([&] { cmd_sample(g, model_file, out_dir, count, monitor, data_dir, activity); });

    auto* exp = app.add_subcommand("experiment", "leave-one-subject-out evaluation");
    exp->add_option("--data", data_dir, "CSV dataset directory (default: synthesize)");
    exp->add_option("--out", out_dir, "output directory")->required();
    exp->add_option("--max-splits", max_splits, "limit the number of splits (0 = all)");
    exp->callback([&] { cmd_experiment(g, data_dir, out_dir, max_splits); });

    // Global --config/--preset/--set may appear after the subcommand name.
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
