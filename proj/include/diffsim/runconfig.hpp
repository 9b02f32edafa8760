// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat key=value run configuration with a fixed schema, two built-in
// presets, and converters to the per-module option structs. Values are
// kept as the exact strings that were parsed, so saving a loaded config
// reproduces it byte for byte (modulo comments and ordering).

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffsim/csv_io.hpp"
#include "diffsim/diffusion.hpp"
#include "diffsim/eval.hpp"
#include "diffsim/gak.hpp"
#include "diffsim/monitor.hpp"
#include "diffsim/signal.hpp"
#include "diffsim/spectral.hpp"
#include "diffsim/synth.hpp"

namespace diffsim {

enum class ConfigType { Int, U64, Double, Bool, String };

struct ConfigKeyDef {
    std::string key;
    ConfigType type = ConfigType::String;
};

/// Every recognized key with its type. Unknown keys are rejected by name.
inline const std::vector<ConfigKeyDef>& config_schema() {
    static const std::vector<ConfigKeyDef> schema = {
        {"seed", ConfigType::U64},
        {"participants", ConfigType::Int},
        {"channels", ConfigType::Int},
        {"sample_rate_hz", ConfigType::Double},
        {"samples_per_class", ConfigType::Int},
        {"classes", ConfigType::String},
        {"freq_jitter", ConfigType::Double},
        {"amp_jitter", ConfigType::Double},
        {"noise_std", ConfigType::Double},
        {"channel_phase_step", ConfigType::Double},
        {"window_width", ConfigType::Int},
        {"window_overlap", ConfigType::Int},
        {"stft_window", ConfigType::Int},
        {"stft_overlap", ConfigType::Int},
        {"welch_segment", ConfigType::Int},
        {"welch_overlap", ConfigType::Int},
        {"welch_density", ConfigType::Bool},
        {"ddpm_t", ConfigType::Int},
        {"beta_start", ConfigType::Double},
        {"beta_end", ConfigType::Double},
        {"hidden_dims", ConfigType::String},
        {"embed_dim", ConfigType::Int},
        {"adam_lr", ConfigType::Double},
        {"ddpm_batch", ConfigType::Int},
        {"monitor_metric", ConfigType::String},
        {"monitor_interval", ConfigType::Int},
        {"probe_batch", ConfigType::Int},
        {"patience", ConfigType::Int},
        {"gak_fraction", ConfigType::Double},
        {"gak_fraction_on_best", ConfigType::Bool},
        {"max_epochs", ConfigType::Int},
        {"denoise_interval", ConfigType::Int},
        {"denoise_drops", ConfigType::Int},
        {"grid_min", ConfigType::Double},
        {"grid_max", ConfigType::Double},
        {"grid_points", ConfigType::Int},
        {"grid_scale", ConfigType::String},
        {"calib_std_lo", ConfigType::Double},
        {"calib_std_hi", ConfigType::Double},
        {"calib_all_pairs", ConfigType::Bool},
        {"gak_literal_sign", ConfigType::Bool},
        {"synthetic_per_model", ConfigType::Int},
        {"real_per_participant", ConfigType::Int},
        {"val_per_participant", ConfigType::Int},
        {"classifier_seeds", ConfigType::Int},
        {"classifier_epochs", ConfigType::Int},
        {"classifier_patience", ConfigType::Int},
        {"classifier_batch", ConfigType::Int},
        {"classifier_lr", ConfigType::Double},
    };
    return schema;
}

class RunConfig {
public:
    /// Sets a value after checking the key exists and the value parses as
    /// the key's declared type.
    void set(const std::string& key, const std::string& value) {
        const ConfigKeyDef* def = nullptr;
        for (const auto& d : config_schema())
            if (d.key == key) {
                def = &d;
                break;
            }
        if (!def) throw std::invalid_argument("unknown config key: " + key);
        check_type(*def, value);
        values_[key] = value;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    const std::map<std::string, std::string>& values() const { return values_; }

    std::string get_string(const std::string& key) const { return raw(key); }

    long long get_int(const std::string& key) const { return parse_int(raw(key), key); }

    std::uint64_t get_u64(const std::string& key) const { return parse_u64(raw(key), key); }

    double get_double(const std::string& key) const { return parse_double(raw(key), key); }

    bool get_bool(const std::string& key) const { return parse_bool(raw(key), key); }

    bool operator==(const RunConfig& other) const { return values_ == other.values_; }

private:
    std::string raw(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw std::invalid_argument("config key not set: " + key);
        return it->second;
    }

    static long long parse_int(const std::string& v, const std::string& key) {
        std::size_t pos = 0;
        long long out = 0;
        try {
            out = std::stoll(v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != v.size() || v.empty())
            throw std::invalid_argument("config key " + key + ": not an integer: " + v);
        return out;
    }

    static std::uint64_t parse_u64(const std::string& v, const std::string& key) {
        std::size_t pos = 0;
        std::uint64_t out = 0;
        try {
            out = std::stoull(v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != v.size() || v.empty() || v.front() == '-')
            throw std::invalid_argument("config key " + key + ": not an unsigned integer: " + v);
        return out;
    }

    static double parse_double(const std::string& v, const std::string& key) {
        std::size_t pos = 0;
        double out = 0.0;
        try {
            out = std::stod(v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != v.size() || v.empty())
            throw std::invalid_argument("config key " + key + ": not a number: " + v);
        return out;
    }

    static bool parse_bool(const std::string& v, const std::string& key) {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw std::invalid_argument("config key " + key + ": not a boolean: " + v);
    }

    static void check_type(const ConfigKeyDef& def, const std::string& value) {
        switch (def.type) {
            case ConfigType::Int: parse_int(value, def.key); break;
            case ConfigType::U64: parse_u64(value, def.key); break;
            case ConfigType::Double: parse_double(value, def.key); break;
            case ConfigType::Bool: parse_bool(value, def.key); break;
            case ConfigType::String: break;
        }
    }

    std::map<std::string, std::string> values_;
};

/// Small-scale preset: finishes a full leave-one-subject-out experiment in
/// minutes on one core while exercising every stage.
inline RunConfig desk_preset() {
    RunConfig c;
    c.set("seed", "42");
    c.set("participants", "4");
    c.set("channels", "2");
    c.set("sample_rate_hz", "50");
    c.set("samples_per_class", "2000");
    c.set("classes", "walking:3.125:1,0.5,0.2;running:6.25:1,0.3");
    c.set("freq_jitter", "0.18");
    c.set("amp_jitter", "0.5");
    c.set("noise_std", "0.25");
    c.set("channel_phase_step", "0.7");
    c.set("window_width", "32");
    c.set("window_overlap", "8");
    c.set("stft_window", "16");
    c.set("stft_overlap", "8");
    c.set("welch_segment", "32");
    c.set("welch_overlap", "-1");
    c.set("welch_density", "false");
    c.set("ddpm_t", "200");
    c.set("beta_start", "0.0001");
    c.set("beta_end", "0.02");
    c.set("hidden_dims", "384,384");
    c.set("embed_dim", "32");
    c.set("adam_lr", "0.001");
    c.set("ddpm_batch", "128");
    c.set("monitor_metric", "c_opt_gak");
    c.set("monitor_interval", "10");
    c.set("probe_batch", "8");
    c.set("patience", "5");
    c.set("gak_fraction", "0.25");
    c.set("gak_fraction_on_best", "true");
    c.set("max_epochs", "600");
    c.set("denoise_interval", "30");
    c.set("denoise_drops", "2");
    c.set("grid_min", "0.005");
    c.set("grid_max", "2.0");
    c.set("grid_points", "120");
    c.set("grid_scale", "log");
    c.set("calib_std_lo", "0.09");
    c.set("calib_std_hi", "0.12");
    c.set("calib_all_pairs", "false");
    c.set("gak_literal_sign", "false");
    c.set("synthetic_per_model", "128");
    c.set("real_per_participant", "4");
    c.set("val_per_participant", "2");
    c.set("classifier_seeds", "5");
    c.set("classifier_epochs", "200");
    c.set("classifier_patience", "10");
    c.set("classifier_batch", "32");
    c.set("classifier_lr", "0.01");
    return c;
}

/// Full-scale preset mirroring the published experiment dimensions. Far too
/// slow for a laptop-class single-core run; provided for completeness.
inline RunConfig paper_preset() {
    RunConfig c = desk_preset();
    c.set("participants", "12");
    c.set("channels", "6");
    c.set("classes",
          "walking:1.5625:1,0.5,0.2;running:3.125:1,0.3;jumping:4.6875:1,0.45,0.1;"
          "cycling:6.25:1,0.25");
    c.set("window_width", "160");
    c.set("window_overlap", "40");
    c.set("stft_window", "22");
    c.set("stft_overlap", "20");
    c.set("welch_segment", "64");
    c.set("ddpm_t", "3000");
    c.set("beta_end", "0.02");
    c.set("hidden_dims", "256,256");
    c.set("monitor_interval", "50");
    c.set("probe_batch", "128");
    c.set("max_epochs", "4500");
    c.set("synthetic_per_model", "3840");
    return c;
}

inline RunConfig preset_by_name(const std::string& name) {
    if (name == "desk") return desk_preset();
    if (name == "paper") return paper_preset();
    throw std::invalid_argument("unknown preset: " + name + " (expected desk or paper)");
}

inline void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_config: cannot open " + path.string());
    for (const auto& [k, v] : cfg.values()) out << k << '=' << v << '\n';
    if (!out) throw std::runtime_error("save_config: write failed for " + path.string());
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path.string());
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("load_config: line " + std::to_string(lineno) +
                                     ": expected key=value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (cfg.has(key))
            throw std::runtime_error("load_config: duplicate key " + key + " at line " +
                                     std::to_string(lineno));
        cfg.set(key, value);
    }
    return cfg;
}

/// Parses "name:fundamental:amp1,amp2;..." into synthetic class shapes.
inline std::vector<SynthClass> parse_classes(const std::string& text) {
    std::vector<SynthClass> out;
    std::stringstream per_class(text);
    std::string clause;
    while (std::getline(per_class, clause, ';')) {
        if (clause.empty()) continue;
        std::stringstream fields(clause);
        std::string name, fund, amps;
        if (!std::getline(fields, name, ':') || !std::getline(fields, fund, ':') ||
            !std::getline(fields, amps))
            throw std::invalid_argument("classes: expected name:fundamental:amps in '" + clause +
                                        "'");
        SynthClass sc;
        sc.name = name;
        sc.harmonics.clear();  // replace the default shape entirely
        try {
            std::size_t pos = 0;
            sc.fundamental_hz = std::stod(fund, &pos);
            if (pos != fund.size()) throw std::invalid_argument(fund);
        } catch (const std::exception&) {
            throw std::invalid_argument("classes: bad fundamental '" + fund + "'");
        }
        std::stringstream amp_list(amps);
        std::string amp;
        while (std::getline(amp_list, amp, ',')) {
            try {
                std::size_t pos = 0;
                sc.harmonics.push_back(std::stod(amp, &pos));
                if (pos != amp.size()) throw std::invalid_argument(amp);
            } catch (const std::exception&) {
                throw std::invalid_argument("classes: bad amplitude '" + amp + "'");
            }
        }
        if (sc.harmonics.empty())
            throw std::invalid_argument("classes: no amplitudes in '" + clause + "'");
        out.push_back(std::move(sc));
    }
    if (out.empty()) throw std::invalid_argument("classes: empty class list");
    return out;
}

inline std::vector<int> parse_dims(const std::string& text, const std::string& key) {
    std::vector<int> out;
    std::stringstream list(text);
    std::string item;
    while (std::getline(list, item, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(static_cast<int>(std::stoll(item, &pos)));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw std::invalid_argument(key + ": bad dimension '" + item + "'");
        }
    }
    if (out.empty()) throw std::invalid_argument(key + ": empty list");
    return out;
}

inline SynthConfig to_synth_config(const RunConfig& c) {
    SynthConfig s;
    s.sample_rate_hz = c.get_double("sample_rate_hz");
    s.channels = static_cast<int>(c.get_int("channels"));
    s.samples_per_class = static_cast<int>(c.get_int("samples_per_class"));
    s.freq_jitter = c.get_double("freq_jitter");
    s.amp_jitter = c.get_double("amp_jitter");
    s.noise_std = c.get_double("noise_std");
    s.channel_phase_step = c.get_double("channel_phase_step");
    s.classes = parse_classes(c.get_string("classes"));
    return s;
}

inline SlidingWindowConfig to_sliding_config(const RunConfig& c) {
    SlidingWindowConfig w;
    w.width = static_cast<int>(c.get_int("window_width"));
    w.overlap = static_cast<int>(c.get_int("window_overlap"));
    return w;
}

inline WelchConfig to_welch_config(const RunConfig& c) {
    WelchConfig w;
    w.segment_len = static_cast<int>(c.get_int("welch_segment"));
    w.overlap = static_cast<int>(c.get_int("welch_overlap"));
    w.density = c.get_bool("welch_density");
    return w;
}

inline StftConfig to_stft_config(const RunConfig& c) {
    StftConfig s;
    s.window_size = static_cast<int>(c.get_int("stft_window"));
    s.overlap = static_cast<int>(c.get_int("stft_overlap"));
    return s;
}

inline DiffusionConfig to_diffusion_config(const RunConfig& c) {
    DiffusionConfig d;
    d.T = static_cast<int>(c.get_int("ddpm_t"));
    d.beta_start = {c.get_double("beta_start")};
    d.beta_end = {c.get_double("beta_end")};
    d.hidden = parse_dims(c.get_string("hidden_dims"), "hidden_dims");
    d.time_embedding_dim = static_cast<int>(c.get_int("embed_dim"));
    d.stft = to_stft_config(c);
    return d;
}

inline CalibrationGrid to_calibration_grid(const RunConfig& c) {
    CalibrationGrid g;
    g.sigma_min = c.get_double("grid_min");
    g.sigma_max = c.get_double("grid_max");
    g.num_points = static_cast<int>(c.get_int("grid_points"));
    const std::string scale = c.get_string("grid_scale");
    if (scale == "log")
        g.spacing = CalibrationGrid::Spacing::Log;
    else if (scale == "linear")
        g.spacing = CalibrationGrid::Spacing::Linear;
    else
        throw std::invalid_argument("grid_scale: expected log or linear, got " + scale);
    return g;
}

inline CalibrateOptions to_calibrate_options(const RunConfig& c) {
    CalibrateOptions o;
    o.std_lo = c.get_double("calib_std_lo");
    o.std_hi = c.get_double("calib_std_hi");
    o.all_pairs = c.get_bool("calib_all_pairs");
    o.literal_sign = c.get_bool("gak_literal_sign");
    return o;
}

inline TrainingMonitorConfig to_training_monitor_config(const RunConfig& c, MonitorMetric metric,
                                                        double gak_sigma = 0.0,
                                                        double gak_range_lo = 0.0,
                                                        double gak_range_hi = 0.0) {
    TrainingMonitorConfig m;
    m.scoring.metric = metric;
    m.scoring.welch = to_welch_config(c);
    m.scoring.gak_sigma = gak_sigma;
    m.scoring.gak_range_lo = gak_range_lo;
    m.scoring.gak_range_hi = gak_range_hi;
    m.interval_epochs = static_cast<int>(c.get_int("monitor_interval"));
    m.probe_batch = static_cast<int>(c.get_int("probe_batch"));
    m.patience_probes = static_cast<int>(c.get_int("patience"));
    m.gak_fraction_required = c.get_double("gak_fraction");
    m.gak_fraction_on_best = c.get_bool("gak_fraction_on_best");
    m.max_epochs = static_cast<int>(c.get_int("max_epochs"));
    return m;
}

inline DenoiseMonitorConfig to_denoise_monitor_config(const RunConfig& c, MonitorMetric metric,
                                                      double gak_sigma = 0.0,
                                                      double gak_range_lo = 0.0,
                                                      double gak_range_hi = 0.0) {
    DenoiseMonitorConfig m;
    m.scoring.metric = metric;
    m.scoring.welch = to_welch_config(c);
    m.scoring.gak_sigma = gak_sigma;
    m.scoring.gak_range_lo = gak_range_lo;
    m.scoring.gak_range_hi = gak_range_hi;
    m.interval_steps = static_cast<int>(c.get_int("denoise_interval"));
    m.consecutive_drops_to_stop = static_cast<int>(c.get_int("denoise_drops"));
    return m;
}

inline ExperimentOptions to_experiment_options(const RunConfig& c) {
    ExperimentOptions o;
    o.real_per_participant = static_cast<int>(c.get_int("real_per_participant"));
    o.val_per_participant = static_cast<int>(c.get_int("val_per_participant"));
    o.welch = to_welch_config(c);
    o.diffusion = to_diffusion_config(c);
    o.adam.lr = c.get_double("adam_lr");
    o.ddpm_batch_size = static_cast<int>(c.get_int("ddpm_batch"));
    o.monitor_interval_epochs = static_cast<int>(c.get_int("monitor_interval"));
    o.probe_batch = static_cast<int>(c.get_int("probe_batch"));
    o.patience_probes = static_cast<int>(c.get_int("patience"));
    o.gak_fraction_required = c.get_double("gak_fraction");
    o.max_epochs = static_cast<int>(c.get_int("max_epochs"));
    o.denoise_interval_steps = static_cast<int>(c.get_int("denoise_interval"));
    o.consecutive_drops = static_cast<int>(c.get_int("denoise_drops"));
    o.calibration_grid = to_calibration_grid(c);
    o.calibrate = to_calibrate_options(c);
    o.synthetic_per_model = static_cast<int>(c.get_int("synthetic_per_model"));
    o.classifier.welch = to_welch_config(c);
    o.classifier.max_epochs = static_cast<int>(c.get_int("classifier_epochs"));
    o.classifier.patience = static_cast<int>(c.get_int("classifier_patience"));
    o.classifier.batch_size = static_cast<int>(c.get_int("classifier_batch"));
    o.classifier.adam.lr = c.get_double("classifier_lr");
    o.classifier_seeds = static_cast<int>(c.get_int("classifier_seeds"));
    o.seed = c.get_u64("seed");
    return o;
}

}  // namespace diffsim
