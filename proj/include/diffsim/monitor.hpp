// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Similarity-monitored training and denoising as explicit state machines:
// periodic probes score freshly sampled sequences against the real training
// set, and stop rules act on the recorded trace. Probes use their own seeds
// and never perturb the run they observe.

#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "diffsim/csv_io.hpp"
#include "diffsim/diffusion.hpp"
#include "diffsim/gak.hpp"
#include "diffsim/rng.hpp"
#include "diffsim/signal.hpp"
#include "diffsim/similarity.hpp"
#include "diffsim/spectral.hpp"

namespace diffsim {

enum class MonitorMetric { CosineTime, CosinePsd, COptGak };

inline const char* monitor_metric_name(MonitorMetric m) {
    switch (m) {
        case MonitorMetric::CosineTime: return "cosine_time";
        case MonitorMetric::CosinePsd: return "cosine_psd";
        case MonitorMetric::COptGak: return "c_opt_gak";
    }
    throw std::invalid_argument("monitor_metric_name: bad metric");
}

inline MonitorMetric monitor_metric_from_name(const std::string& s) {
    if (s == "cosine_time") return MonitorMetric::CosineTime;
    if (s == "cosine_psd") return MonitorMetric::CosinePsd;
    if (s == "c_opt_gak") return MonitorMetric::COptGak;
    throw std::invalid_argument("monitor_metric_from_name: unknown metric " + s);
}

/// How probe sequences are scored against the real training set.
struct ProbeScoring {
    MonitorMetric metric = MonitorMetric::CosinePsd;
    WelchConfig welch;          ///< spectra for CosinePsd and the alignment metric
    double gak_sigma = 1.0;     ///< calibrated sigma for COptGak
    double gak_range_lo = 0.0;  ///< calibration target band
    double gak_range_hi = 1.0;
    bool mean_over_real = false;  ///< aggregate per synthetic by mean instead of max
};

struct TrainingMonitorConfig {
    ProbeScoring scoring;
    int interval_epochs = 50;
    int probe_batch = 128;
    int patience_probes = 2;
    double gak_fraction_required = 0.25;
    int max_epochs = 4500;
    /// "Both criteria" reading for the alignment metric: the in-range
    /// fraction is checked on the best record; false checks any record.
    bool gak_fraction_on_best = true;

    void validate() const {
        if (interval_epochs < 1) throw std::invalid_argument("TrainingMonitorConfig: interval >= 1");
        if (probe_batch < 1) throw std::invalid_argument("TrainingMonitorConfig: probe batch >= 1");
        if (patience_probes < 1) throw std::invalid_argument("TrainingMonitorConfig: patience >= 1");
        if (!(scoring.metric != MonitorMetric::COptGak ||
              (gak_fraction_required > 0.0 && gak_fraction_required <= 1.0)))
            throw std::invalid_argument("TrainingMonitorConfig: fraction in (0, 1]");
        if (max_epochs < 1) throw std::invalid_argument("TrainingMonitorConfig: max epochs >= 1");
    }
};

struct DenoiseMonitorConfig {
    ProbeScoring scoring;
    int interval_steps = 30;
    int consecutive_drops_to_stop = 2;

    void validate() const {
        if (interval_steps < 1) throw std::invalid_argument("DenoiseMonitorConfig: interval >= 1");
        if (consecutive_drops_to_stop < 1)
            throw std::invalid_argument("DenoiseMonitorConfig: drops >= 1");
    }
};

enum class Decision { Continue, Stop, StopAndRollback };

inline const char* decision_name(Decision d) {
    switch (d) {
        case Decision::Continue: return "continue";
        case Decision::Stop: return "stop";
        case Decision::StopAndRollback: return "stop_and_rollback";
    }
    throw std::invalid_argument("decision_name: bad decision");
}

struct MonitorRecord {
    int position = 0;  ///< epoch or denoising step
    std::vector<double> scores;
    double mean = 0.0;
    double std = 0.0;
    std::optional<double> in_range_fraction;  ///< only for the alignment metric
    int excluded = 0;                         ///< degenerate sequences dropped
    Decision decision = Decision::Continue;
};

struct MonitorTrace {
    std::vector<MonitorRecord> records;
    int best_index = -1;
    int best_position = -1;
    double best_mean = 0.0;
    std::optional<int> stopped_at;

    /// Appends and returns true when the record became the new best.
    bool append(MonitorRecord rec) {
        records.push_back(std::move(rec));
        const auto& r = records.back();
        if (best_index < 0 || r.mean > best_mean) {
            best_index = static_cast<int>(records.size()) - 1;
            best_position = r.position;
            best_mean = r.mean;
            return true;
        }
        return false;
    }
};

namespace detail {

struct ProbeFeatures {
    std::vector<std::vector<double>> axes;  ///< per channel: raw samples or PSD
    std::vector<double> gak_self;           ///< per axis log k(s, s)
};

inline ProbeFeatures build_probe_features(const TimeWindow& w, const ProbeScoring& sc) {
    ProbeFeatures f;
    if (sc.metric == MonitorMetric::CosineTime) {
        f.axes = w.data;
        return f;
    }
    for (const auto& ch : w.data)
        f.axes.push_back(welch_psd(ch, w.sample_rate_hz, sc.welch).power);
    if (sc.metric == MonitorMetric::COptGak) {
        GakParams p;
        p.sigma = sc.gak_sigma;
        for (const auto& ax : f.axes) f.gak_self.push_back(gak_log_kernel(ax, ax, p));
    }
    return f;
}

inline double score_features(const ProbeFeatures& a, const ProbeFeatures& b,
                             const ProbeScoring& sc) {
    if (a.axes.size() != b.axes.size())
        throw std::invalid_argument("probe scoring: axis count mismatch");
    double acc = 0.0;
    for (std::size_t ax = 0; ax < a.axes.size(); ++ax) {
        if (sc.metric == MonitorMetric::COptGak) {
            GakParams p;
            p.sigma = sc.gak_sigma;
            const double lxy = gak_log_kernel(a.axes[ax], b.axes[ax], p);
            const double v = std::exp(lxy - 0.5 * (a.gak_self[ax] + b.gak_self[ax]));
            acc += std::clamp(v, 0.0, 1.0);
        } else {
            acc += cosine(a.axes[ax], b.axes[ax]);
        }
    }
    return acc / static_cast<double>(a.axes.size());
}

inline bool has_zero_channel(const TimeWindow& w) {
    for (const auto& ch : w.data) {
        double norm = 0.0;
        for (double v : ch) norm += v * v;
        if (norm == 0.0) return true;
    }
    return false;
}

}  // namespace detail

/// Scores each synthetic window against the real set (max over real items
/// by default), skipping degenerate sequences with a count. Records mean,
/// population std and, for the alignment metric, the fraction of scores
/// inside the calibration band.
inline MonitorRecord score_probe_windows(const std::vector<TimeWindow>& synthetic,
                                         const std::vector<TimeWindow>& real,
                                         const ProbeScoring& sc, int position) {
    if (synthetic.empty()) throw std::invalid_argument("probe: no synthetic sequences");
    if (real.empty()) throw std::invalid_argument("probe: no real sequences");

    std::vector<detail::ProbeFeatures> real_feats;
    real_feats.reserve(real.size());
    for (const auto& w : real) real_feats.push_back(detail::build_probe_features(w, sc));

    MonitorRecord rec;
    rec.position = position;
    for (const auto& w : synthetic) {
        if (detail::has_zero_channel(w)) {
            ++rec.excluded;
            continue;
        }
        try {
            const auto f = detail::build_probe_features(w, sc);
            double agg = 0.0;
            bool first = true;
            for (const auto& rf : real_feats) {
                const double s = detail::score_features(f, rf, sc);
                if (sc.mean_over_real) agg += s;
                else {
                    agg = first ? s : std::max(agg, s);
                    first = false;
                }
            }
            if (sc.mean_over_real) agg /= static_cast<double>(real_feats.size());
            rec.scores.push_back(agg);
        } catch (const std::runtime_error& e) {
            if (std::string(e.what()).find("undefined") != std::string::npos) {
                ++rec.excluded;
                continue;
            }
            throw;
        }
    }
    if (rec.scores.empty()) throw std::runtime_error("probe: all synthetic sequences degenerate");

    const double n = static_cast<double>(rec.scores.size());
    for (double s : rec.scores) rec.mean += s;
    rec.mean /= n;
    for (double s : rec.scores) rec.std += (s - rec.mean) * (s - rec.mean);
    rec.std = std::sqrt(rec.std / n);
    if (sc.metric == MonitorMetric::COptGak) {
        int in = 0;
        for (double s : rec.scores)
            if (s >= sc.gak_range_lo && s <= sc.gak_range_hi) ++in;
        rec.in_range_fraction = static_cast<double>(in) / n;
    }
    return rec;
}

/// Samples a probe batch with the full reverse loop and scores it. The seed
/// is dedicated to this probe, so the surrounding training run is untouched.
inline MonitorRecord probe_training(const DiffusionModel& model,
                                    const std::vector<TimeWindow>& real_train,
                                    const TrainingMonitorConfig& cfg, int epoch,
                                    std::uint64_t seed) {
    cfg.validate();
    if (epoch % cfg.interval_epochs != 0)
        throw std::invalid_argument("probe_training: epoch is not a probe epoch");
    const auto windows = sample_batch(model, cfg.probe_batch, seed);
    return score_probe_windows(windows, real_train, cfg.scoring, epoch);
}

/// Stop rule for monitored training. The cosine metrics stop (with rollback
/// to the best checkpoint) once patience_probes consecutive records fail to
/// improve the best mean. The alignment metric additionally requires the
/// in-range fraction criterion. The epoch cap always stops.
inline Decision training_should_stop(const MonitorTrace& trace, const TrainingMonitorConfig& cfg) {
    cfg.validate();
    if (trace.records.empty())
        throw std::invalid_argument("training_should_stop: empty trace");

    const int last = static_cast<int>(trace.records.size()) - 1;
    const bool patience_hit = (last - trace.best_index) >= cfg.patience_probes;
    bool stop = patience_hit;
    if (stop && cfg.scoring.metric == MonitorMetric::COptGak) {
        bool fraction_ok = false;
        if (cfg.gak_fraction_on_best) {
            const auto& fr = trace.records[static_cast<std::size_t>(trace.best_index)].in_range_fraction;
            fraction_ok = fr && *fr >= cfg.gak_fraction_required;
        } else {
            for (const auto& r : trace.records)
                if (r.in_range_fraction && *r.in_range_fraction >= cfg.gak_fraction_required)
                    fraction_ok = true;
        }
        stop = fraction_ok;
    }
    if (stop) return Decision::StopAndRollback;
    if (trace.records[static_cast<std::size_t>(last)].position >= cfg.max_epochs)
        return Decision::Stop;
    return Decision::Continue;
}

/// Scores the partially denoised batch of an in-progress sampling run.
inline MonitorRecord probe_denoising(const SamplingRun& run, const DiffusionModel& model,
                                     const std::vector<TimeWindow>& real_train,
                                     const DenoiseMonitorConfig& cfg) {
    cfg.validate();
    if (run.step % cfg.interval_steps != 0 && !run.finished)
        throw std::invalid_argument("probe_denoising: step is not a probe step");
    const auto windows = states_to_windows(model, run.states);
    return score_probe_windows(windows, real_train, cfg.scoring, run.step);
}

/// Stop rule for monitored denoising: stop once the last
/// consecutive_drops_to_stop records each fall strictly below their
/// predecessor. The kept artifact is the best-position snapshot.
inline Decision denoising_should_stop(const MonitorTrace& trace, const DenoiseMonitorConfig& cfg) {
    cfg.validate();
    if (trace.records.empty())
        throw std::invalid_argument("denoising_should_stop: empty trace");
    const int n = static_cast<int>(trace.records.size());
    const int k = cfg.consecutive_drops_to_stop;
    if (n < k + 1) return Decision::Continue;
    for (int i = n - k; i < n; ++i)
        if (!(trace.records[static_cast<std::size_t>(i)].mean <
              trace.records[static_cast<std::size_t>(i - 1)].mean))
            return Decision::Continue;
    return Decision::Stop;
}

struct TrainOptions {
    AdamConfig adam;
    int batch_size = 128;
    std::uint64_t train_seed = 1;
    std::uint64_t probe_seed = 2;
};

struct TrainResult {
    DiffusionModel model;     ///< best (rolled-back) checkpoint when monitored
    DenseNet final_denoiser;  ///< last-epoch parameters, for purity checks
    MonitorTrace trace;
    std::vector<double> losses;
    int epochs_used = 0;  ///< epoch at which training stopped
    int best_epoch = 0;
};

/// Trains to the epoch cap without probes.
inline TrainResult train_unmonitored(DiffusionModel model,
                                     const std::vector<std::vector<double>>& tensors,
                                     int max_epochs, const TrainOptions& opts) {
    if (max_epochs < 1) throw std::invalid_argument("train_unmonitored: max epochs >= 1");
    AdamState opt = AdamState::init(model.denoiser);
    TrainResult r;
    for (int epoch = 1; epoch <= max_epochs; ++epoch) {
        Rng rng(derive_seed(opts.train_seed, {static_cast<std::uint64_t>(epoch)}));
        r.losses.push_back(train_epoch(model, tensors, opt, opts.adam, opts.batch_size, rng));
    }
    r.epochs_used = max_epochs;
    r.final_denoiser = model.denoiser;
    r.model = std::move(model);
    return r;
}

/// Monitored training loop. The per-epoch training stream is derived from
/// (train_seed, epoch) and probes draw from (probe_seed, epoch), so a run
/// whose decisions are all Continue is bit-identical to an unmonitored run.
/// On stop the returned model carries the best probe's checkpoint.
inline TrainResult train_with_monitor(DiffusionModel model,
                                      const std::vector<std::vector<double>>& tensors,
                                      const std::vector<TimeWindow>& real_train,
                                      const TrainingMonitorConfig& cfg, const TrainOptions& opts) {
    cfg.validate();
    AdamState opt = AdamState::init(model.denoiser);
    TrainResult r;
    DenseNet best_denoiser;
    bool have_best = false;

    int epoch = 1;
    for (; epoch <= cfg.max_epochs; ++epoch) {
        Rng rng(derive_seed(opts.train_seed, {static_cast<std::uint64_t>(epoch)}));
        r.losses.push_back(train_epoch(model, tensors, opt, opts.adam, opts.batch_size, rng));

        if (epoch % cfg.interval_epochs != 0) continue;
        MonitorRecord rec = probe_training(
            model, real_train, cfg, epoch,
            derive_seed(opts.probe_seed, {static_cast<std::uint64_t>(epoch)}));
        if (r.trace.append(std::move(rec))) {
            best_denoiser = model.denoiser;
            have_best = true;
        }
        const Decision dec = training_should_stop(r.trace, cfg);
        r.trace.records.back().decision = dec;
        if (dec != Decision::Continue) {
            r.trace.stopped_at = epoch;
            break;
        }
    }
    r.epochs_used = std::min(epoch, cfg.max_epochs);
    r.best_epoch = r.trace.best_position;
    r.final_denoiser = model.denoiser;
    if (have_best) model.denoiser = std::move(best_denoiser);
    r.model = std::move(model);
    return r;
}

struct SampleResult {
    std::vector<TimeWindow> windows;  ///< decoded from the best-probe snapshot
    MonitorTrace trace;
    int steps_used = 0;
    int best_step = 0;
};

/// Monitored reverse diffusion: probes at step 0, every interval, and the
/// final step; stops on consecutive score drops; returns the windows of the
/// best-scoring snapshot.
inline SampleResult sample_with_monitor(const DiffusionModel& model, int batch,
                                        const std::vector<TimeWindow>& real_train,
                                        const DenoiseMonitorConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    SamplingRun run = begin_sampling(model, batch, seed);
    SampleResult r;
    std::vector<std::vector<double>> best_states;

    auto probe = [&]() -> Decision {
        MonitorRecord rec = probe_denoising(run, model, real_train, cfg);
        if (r.trace.append(std::move(rec))) best_states = run.states;
        const Decision dec = denoising_should_stop(r.trace, cfg);
        r.trace.records.back().decision = dec;
        return dec;
    };

    probe();  // step 0, pure noise floor
    while (!run.finished) {
        denoise_step(run, model);
        if (run.step % cfg.interval_steps == 0 || run.finished) {
            const Decision dec = probe();
            if (dec == Decision::Stop && !run.finished) {
                r.trace.stopped_at = run.step;
                break;
            }
        }
    }
    r.steps_used = run.step;
    r.best_step = r.trace.best_position;
    r.windows = states_to_windows(model, best_states);
    return r;
}

inline void trace_to_csv(const std::filesystem::path& path, const MonitorTrace& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("trace_to_csv: cannot open " + path.string());
    out << "position,mean,std,in_range_fraction,decision\n";
    for (const auto& r : trace.records) {
        out << r.position << ',' << format_double(r.mean) << ',' << format_double(r.std) << ',';
        if (r.in_range_fraction) out << format_double(*r.in_range_fraction);
        out << ',' << decision_name(r.decision) << '\n';
    }
    if (!out) throw std::runtime_error("trace_to_csv: write failed for " + path.string());
}

inline nlohmann::json trace_to_json(const MonitorTrace& trace) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : trace.records) {
        nlohmann::json jr = {{"position", r.position}, {"scores", r.scores},
                             {"mean", r.mean},         {"std", r.std},
                             {"excluded", r.excluded}, {"decision", decision_name(r.decision)}};
        if (r.in_range_fraction) jr["in_range_fraction"] = *r.in_range_fraction;
        else jr["in_range_fraction"] = nullptr;
        records.push_back(std::move(jr));
    }
    nlohmann::json j = {{"records", std::move(records)},
                        {"best_position", trace.best_position},
                        {"best_mean", trace.best_mean}};
    if (trace.stopped_at) j["stopped_at"] = *trace.stopped_at;
    else j["stopped_at"] = nullptr;
    return j;
}

}  // namespace diffsim
