// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Downstream utility evaluation: the nine classifier training-set
// configurations, a logistic-regression proxy classifier on PSD features,
// macro-F1 scoring, leave-one-subject-out orchestration of calibration,
// monitored DDPM training, sampling and classification, and the
// epoch-reduction arithmetic.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "diffsim/csv_io.hpp"
#include "diffsim/diffusion.hpp"
#include "diffsim/gak.hpp"
#include "diffsim/monitor.hpp"
#include "diffsim/nn.hpp"
#include "diffsim/rng.hpp"
#include "diffsim/signal.hpp"
#include "diffsim/similarity.hpp"
#include "diffsim/spectral.hpp"

namespace diffsim {

enum class TrainingSetKind {
    TwoSample,
    FullSet,
    FullDdpm,
    OtCOptGak,
    OtdCOptGak,
    OtCosinePsd,
    OtdCosinePsd,
    OtCosineTime,
    OtdCosineTime,
};

struct TrainingSetSpec {
    TrainingSetKind kind = TrainingSetKind::TwoSample;
    std::string name;
    int real_per_participant = 2;  ///< -1 = every real window
    int synthetic_per_model = 0;
    bool monitor_training = false;
    bool monitor_denoising = false;
    std::optional<MonitorMetric> metric;
};

/// The nine classifier training-set configurations: real-only baselines,
/// the cap-trained DDPM, and one monitored variant per metric with and
/// without monitored denoising.
inline std::vector<TrainingSetSpec> table1_specs(int synthetic_per_model,
                                                 int real_per_participant = 2) {
    auto spec = [&](TrainingSetKind k, const char* name, int real, int synth, bool mt, bool md,
                    std::optional<MonitorMetric> metric) {
        TrainingSetSpec s;
        s.kind = k;
        s.name = name;
        s.real_per_participant = real;
        s.synthetic_per_model = synth;
        s.monitor_training = mt;
        s.monitor_denoising = md;
        s.metric = metric;
        return s;
    };
    const int r = real_per_participant, n = synthetic_per_model;
    return {
        spec(TrainingSetKind::TwoSample, "two_sample", r, 0, false, false, {}),
        spec(TrainingSetKind::FullSet, "full_set", -1, 0, false, false, {}),
        spec(TrainingSetKind::FullDdpm, "full_ddpm", r, n, false, false, {}),
        spec(TrainingSetKind::OtCOptGak, "ot_c_opt_gak", r, n, true, false, MonitorMetric::COptGak),
        spec(TrainingSetKind::OtdCOptGak, "otd_c_opt_gak", r, n, true, true, MonitorMetric::COptGak),
        spec(TrainingSetKind::OtCosinePsd, "ot_cosine_psd", r, n, true, false, MonitorMetric::CosinePsd),
        spec(TrainingSetKind::OtdCosinePsd, "otd_cosine_psd", r, n, true, true, MonitorMetric::CosinePsd),
        spec(TrainingSetKind::OtCosineTime, "ot_cosine_time", r, n, true, false, MonitorMetric::CosineTime),
        spec(TrainingSetKind::OtdCosineTime, "otd_cosine_time", r, n, true, true, MonitorMetric::CosineTime),
    };
}

struct ConfusionMatrix {
    std::vector<std::vector<long long>> counts;  ///< [truth][predicted]

    int classes() const { return static_cast<int>(counts.size()); }

    long long total() const {
        long long t = 0;
        for (const auto& row : counts)
            for (long long v : row) t += v;
        return t;
    }
};

/// Unweighted mean of per-class F1 = 2PR/(P+R), with the zero-division rule
/// F1 = 0 whenever P + R = 0.
inline double macro_f1(const ConfusionMatrix& cm) {
    if (cm.classes() == 0 || cm.total() == 0) throw std::invalid_argument("macro_f1: empty matrix");
    const int k = cm.classes();
    double acc = 0.0;
    for (int c = 0; c < k; ++c) {
        long long tp = cm.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
        long long row = 0, col = 0;
        for (int j = 0; j < k; ++j) {
            row += cm.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
            col += cm.counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
        }
        const double p = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
        const double r = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
        acc += (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0;
    }
    return acc / static_cast<double>(k);
}

struct ClassifierOptions {
    WelchConfig welch;
    int max_epochs = 200;
    int patience = 10;  ///< epochs without validation-loss improvement
    int batch_size = 32;
    AdamConfig adam{.lr = 1e-2};
};

/// Multinomial logistic regression: one identity layer over standardized
/// concatenated per-channel PSD features.
struct ClassifierModel {
    DenseNet net;
    std::vector<double> feat_mean, feat_std;
    WelchConfig welch;
    std::vector<std::string> label_names;
};

namespace detail {

inline std::vector<double> softmax(const std::vector<double>& logits) {
    double m = logits[0];
    for (double v : logits) m = std::max(m, v);
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        z += p[i];
    }
    for (auto& v : p) v /= z;
    return p;
}

inline std::vector<double> classifier_features(const ClassifierModel& m, const TimeWindow& w) {
    std::vector<double> f = welch_features(w, m.welch);
    if (f.size() != m.feat_mean.size())
        throw std::invalid_argument("classifier: feature dimension mismatch");
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = (f[i] - m.feat_mean[i]) / m.feat_std[i];
    return f;
}

}  // namespace detail

inline ClassifierModel train_proxy_classifier(const Dataset& train, const Dataset& val,
                                              std::uint64_t seed,
                                              const ClassifierOptions& opts = {}) {
    if (train.windows.empty()) throw std::invalid_argument("train_proxy_classifier: empty training set");
    std::set<int> present;
    for (const auto& w : train.windows) present.insert(w.label.index);
    if (present.size() < 2)
        throw std::invalid_argument("train_proxy_classifier: single-class training set");
    const int n_classes = static_cast<int>(train.label_names.size());

    ClassifierModel model;
    model.welch = opts.welch;
    model.label_names = train.label_names;

    std::vector<std::vector<double>> feats;
    feats.reserve(train.windows.size());
    for (const auto& w : train.windows) feats.push_back(welch_features(w.window, opts.welch));
    const std::size_t dim = feats.front().size();
    for (const auto& f : feats)
        if (f.size() != dim)
            throw std::invalid_argument("train_proxy_classifier: inconsistent feature dims");

    model.feat_mean.assign(dim, 0.0);
    model.feat_std.assign(dim, 0.0);
    for (const auto& f : feats)
        for (std::size_t i = 0; i < dim; ++i) model.feat_mean[i] += f[i];
    for (auto& v : model.feat_mean) v /= static_cast<double>(feats.size());
    for (const auto& f : feats)
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = f[i] - model.feat_mean[i];
            model.feat_std[i] += d * d;
        }
    for (auto& v : model.feat_std)
        v = std::max(std::sqrt(v / static_cast<double>(feats.size())), 1e-12);
    for (auto& f : feats)
        for (std::size_t i = 0; i < dim; ++i) f[i] = (f[i] - model.feat_mean[i]) / model.feat_std[i];

    std::vector<std::vector<double>> val_feats;
    for (const auto& w : val.windows) {
        std::vector<double> f = welch_features(w.window, opts.welch);
        for (std::size_t i = 0; i < dim; ++i) f[i] = (f[i] - model.feat_mean[i]) / model.feat_std[i];
        val_feats.push_back(std::move(f));
    }

    model.net = make_dense_net({static_cast<int>(dim), n_classes}, {Activation::Identity},
                               derive_seed(seed, {0x636c66ULL}));
    AdamState opt = AdamState::init(model.net);

    auto mean_ce = [&](const std::vector<std::vector<double>>& fs, const Dataset& ds) {
        double acc = 0.0;
        for (std::size_t i = 0; i < fs.size(); ++i) {
            const auto p = detail::softmax(forward(model.net, fs[i]).output);
            acc += -std::log(std::max(p[static_cast<std::size_t>(ds.windows[i].label.index)], 1e-300));
        }
        return acc / static_cast<double>(fs.size());
    };

    DenseNet best = model.net;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    std::vector<std::size_t> order(feats.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= opts.max_epochs; ++epoch) {
        Rng rng(derive_seed(seed, {0x65706fULL, static_cast<std::uint64_t>(epoch)}));
        rng.shuffle(order);
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(opts.batch_size),
                                                        order.size() - pos);
            NetGrads acc = zero_grads(model.net);
            for (std::size_t b = 0; b < n; ++b) {
                const std::size_t i = order[pos + b];
                const auto fr = forward(model.net, feats[i]);
                auto p = detail::softmax(fr.output);
                p[static_cast<std::size_t>(train.windows[i].label.index)] -= 1.0;
                for (auto& v : p) v /= static_cast<double>(n);
                accumulate_grads(acc, backward(model.net, fr.cache, p).grads);
            }
            adam_step(model.net, opt, acc, opts.adam);
            pos += n;
        }

        const double vloss = val_feats.empty() ? mean_ce(feats, train) : mean_ce(val_feats, val);
        if (vloss < best_val) {
            best_val = vloss;
            best = model.net;
            since_best = 0;
        } else if (++since_best >= opts.patience) {
            break;
        }
    }
    model.net = std::move(best);
    return model;
}

inline int classify(const ClassifierModel& model, const TimeWindow& w) {
    const auto logits = forward(model.net, detail::classifier_features(model, w)).output;
    int best = 0;
    for (int c = 1; c < static_cast<int>(logits.size()); ++c)
        if (logits[static_cast<std::size_t>(c)] > logits[static_cast<std::size_t>(best)]) best = c;
    return best;
}

inline ConfusionMatrix evaluate_classifier(const ClassifierModel& model, const Dataset& test) {
    if (test.label_names != model.label_names)
        throw std::invalid_argument("evaluate_classifier: label set mismatch");
    ConfusionMatrix cm;
    const auto k = model.label_names.size();
    cm.counts.assign(k, std::vector<long long>(k, 0));
    for (const auto& w : test.windows)
        ++cm.counts[static_cast<std::size_t>(w.label.index)]
                   [static_cast<std::size_t>(classify(model, w.window))];
    return cm;
}

/// The real windows available to a split's classifier builds.
struct RealSelection {
    Dataset two_sample;  ///< exactly the DDPM training windows
    Dataset full;        ///< every real window of the train participants
};

/// Synthetic windows per training-set name, indexed [class][window].
struct DdpmArtifacts {
    std::map<std::string, std::vector<std::vector<TimeWindow>>> synthetic;
};

inline Dataset build_training_set(const TrainingSetSpec& spec, const RealSelection& real,
                                  const DdpmArtifacts& artifacts) {
    Dataset out = (spec.real_per_participant < 0) ? real.full : real.two_sample;
    if (spec.synthetic_per_model == 0) return out;

    const auto it = artifacts.synthetic.find(spec.name);
    if (it == artifacts.synthetic.end())
        throw std::runtime_error("build_training_set: missing artifacts for " + spec.name);
    const auto& per_class = it->second;
    if (per_class.size() != out.label_names.size())
        throw std::runtime_error("build_training_set: class count mismatch for " + spec.name);
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        if (static_cast<int>(per_class[c].size()) < spec.synthetic_per_model)
            throw std::runtime_error("build_training_set: expected " +
                                     std::to_string(spec.synthetic_per_model) +
                                     " synthetic windows for " + spec.name + " class " +
                                     out.label_names[c] + ", got " +
                                     std::to_string(per_class[c].size()));
        for (int i = 0; i < spec.synthetic_per_model; ++i) {
            LabeledWindow lw;
            lw.window = per_class[c][static_cast<std::size_t>(i)];
            lw.label = {out.label_names[c], static_cast<int>(c)};
            lw.participant = {-1};  // synthetic windows belong to no participant
            out.windows.push_back(std::move(lw));
        }
    }
    return out;
}

struct ExperimentOptions {
    int real_per_participant = 2;
    int val_per_participant = 2;
    WelchConfig welch;
    DiffusionConfig diffusion;
    AdamConfig adam;
    int ddpm_batch_size = 128;
    int monitor_interval_epochs = 50;
    int probe_batch = 128;
    int patience_probes = 2;
    double gak_fraction_required = 0.25;
    int max_epochs = 4500;
    int denoise_interval_steps = 30;
    int consecutive_drops = 2;
    CalibrationGrid calibration_grid;
    CalibrateOptions calibrate;
    int synthetic_per_model = 128;
    ClassifierOptions classifier;
    int classifier_seeds = 5;
    std::uint64_t seed = 42;
};

inline AxisSeries psd_axes(const TimeWindow& w, const WelchConfig& cfg) {
    AxisSeries out;
    out.reserve(w.data.size());
    for (const auto& ch : w.data) out.push_back(welch_psd(ch, w.sample_rate_hz, cfg).power);
    return out;
}

struct SplitResult {
    int test_participant = 0;
    std::vector<std::string> set_names;
    std::vector<double> f1_per_set;  ///< mean over classifier seeds
    std::map<std::string, std::vector<double>> epochs_used;  ///< metric -> per class
    std::map<std::string, std::vector<double>> steps_used;   ///< metric -> per class
    std::vector<GakCalibration> calibration;                 ///< per class
    std::vector<double> median_sigma;                        ///< per class
    double noise_cosine_psd = 0.0;    ///< pure-noise baseline, mean over classes
    double sampled_cosine_psd = 0.0;  ///< cap-trained final samples, mean over classes
};

namespace detail {

/// Joint monitored training: one cap-length training pass whose probe
/// batches are shared by all three metrics. Because probes never perturb
/// the training stream, each metric's trace, stop epoch and best checkpoint
/// are identical to a standalone monitored run with the same seeds.
struct JointTrainingResult {
    DiffusionModel cap_model;  ///< parameters after the full epoch cap
    std::map<std::string, DiffusionModel> monitored;
    std::map<std::string, int> epochs_used;
    std::map<std::string, MonitorTrace> traces;
};

inline JointTrainingResult train_all_variants(PreparedTraining prep,
                                              const std::vector<TimeWindow>& real_train,
                                              const std::vector<TrainingMonitorConfig>& cfgs,
                                              const TrainOptions& opts) {
    struct Variant {
        TrainingMonitorConfig cfg;
        MonitorTrace trace;
        DenseNet best;
        bool have_best = false;
        bool done = false;
        int stop_epoch = 0;
    };
    std::vector<Variant> variants;
    for (const auto& cfg : cfgs) {
        cfg.validate();
        variants.push_back({cfg, {}, {}, false, false, 0});
    }
    const int cap = cfgs.empty() ? 0 : cfgs.front().max_epochs;
    for (const auto& cfg : cfgs)
        if (cfg.max_epochs != cap || cfg.interval_epochs != cfgs.front().interval_epochs ||
            cfg.probe_batch != cfgs.front().probe_batch)
            throw std::invalid_argument("train_all_variants: shared loop parameters differ");

    DiffusionModel& model = prep.model;
    AdamState opt = AdamState::init(model.denoiser);
    for (int epoch = 1; epoch <= cap; ++epoch) {
        Rng rng(derive_seed(opts.train_seed, {static_cast<std::uint64_t>(epoch)}));
        train_epoch(model, prep.tensors, opt, opts.adam, opts.batch_size, rng);

        if (epoch % cfgs.front().interval_epochs != 0) continue;
        bool any_active = false;
        for (const auto& v : variants) any_active |= !v.done;
        if (!any_active) continue;

        const auto windows =
            sample_batch(model, cfgs.front().probe_batch,
                         derive_seed(opts.probe_seed, {static_cast<std::uint64_t>(epoch)}));
        for (auto& v : variants) {
            if (v.done) continue;
            MonitorRecord rec = score_probe_windows(windows, real_train, v.cfg.scoring, epoch);
            if (v.trace.append(std::move(rec))) {
                v.best = model.denoiser;
                v.have_best = true;
            }
            const Decision dec = training_should_stop(v.trace, v.cfg);
            v.trace.records.back().decision = dec;
            if (dec != Decision::Continue) {
                v.trace.stopped_at = epoch;
                v.done = true;
                v.stop_epoch = epoch;
            }
        }
    }

    JointTrainingResult out;
    for (auto& v : variants) {
        const std::string name = monitor_metric_name(v.cfg.scoring.metric);
        if (!v.done) v.stop_epoch = cap;
        DiffusionModel m = model;  // shared schedule/stats/shape
        if (v.have_best) m.denoiser = v.best;
        out.monitored.emplace(name, std::move(m));
        out.epochs_used.emplace(name, v.stop_epoch);
        out.traces.emplace(name, std::move(v.trace));
    }
    out.cap_model = std::move(model);
    return out;
}

}  // namespace detail

inline SplitResult run_split(const Dataset& ds, int test_participant,
                             const ExperimentOptions& opts) {
    ds.validate();
    const auto all_ids = ds.participant_ids();
    std::vector<int> train_ids;
    for (int id : all_ids)
        if (id != test_participant) train_ids.push_back(id);
    if (train_ids.empty()) throw std::invalid_argument("run_split: no training participants");

    const Dataset train_ds = filter_participants(ds, train_ids);
    const Dataset test_ds = filter_participants(ds, {test_participant});
    const int n_classes = static_cast<int>(ds.label_names.size());
    const auto split_u = static_cast<std::uint64_t>(test_participant);

    SplitResult res;
    res.test_participant = test_participant;

    // Per-class DDPM training and validation windows: a fixed number per
    // train participant, chosen disjointly and deterministically.
    std::vector<std::vector<TimeWindow>> ddpm_train(static_cast<std::size_t>(n_classes));
    std::vector<std::vector<TimeWindow>> ddpm_val(static_cast<std::size_t>(n_classes));
    RealSelection real;
    real.two_sample.label_names = ds.label_names;
    real.two_sample.channels = ds.channels;
    real.full = train_ds;
    Dataset val_ds;
    val_ds.label_names = ds.label_names;
    val_ds.channels = ds.channels;

    for (int c = 0; c < n_classes; ++c) {
        for (int p : train_ids) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < train_ds.windows.size(); ++i)
                if (train_ds.windows[i].participant.id == p &&
                    train_ds.windows[i].label.index == c)
                    idx.push_back(i);
            const int need = opts.real_per_participant + opts.val_per_participant;
            if (static_cast<int>(idx.size()) < need)
                throw std::runtime_error("run_split: participant " + std::to_string(p) +
                                         " class " + ds.label_names[static_cast<std::size_t>(c)] +
                                         " has " + std::to_string(idx.size()) +
                                         " windows, need " + std::to_string(need));
            Rng rng(derive_seed(opts.seed, {0x73656c65637473ULL, split_u,
                                            static_cast<std::uint64_t>(p),
                                            static_cast<std::uint64_t>(c)}));
            rng.shuffle(idx);
            for (int i = 0; i < opts.real_per_participant; ++i) {
                const auto& lw = train_ds.windows[idx[static_cast<std::size_t>(i)]];
                ddpm_train[static_cast<std::size_t>(c)].push_back(lw.window);
                real.two_sample.windows.push_back(lw);
            }
            for (int i = 0; i < opts.val_per_participant; ++i) {
                const auto& lw =
                    train_ds.windows[idx[static_cast<std::size_t>(opts.real_per_participant + i)]];
                ddpm_val[static_cast<std::size_t>(c)].push_back(lw.window);
                val_ds.windows.push_back(lw);
            }
        }
    }

    // Per-class sigma calibration on PSD axes.
    for (int c = 0; c < n_classes; ++c) {
        std::vector<AxisSeries> tr, va;
        for (const auto& w : ddpm_train[static_cast<std::size_t>(c)])
            tr.push_back(psd_axes(w, opts.welch));
        for (const auto& w : ddpm_val[static_cast<std::size_t>(c)])
            va.push_back(psd_axes(w, opts.welch));
        res.calibration.push_back(calibrate_sigma(tr, va, opts.calibration_grid, opts.calibrate));
        res.median_sigma.push_back(median_heuristic_sigma(tr, va).sigma);
    }

    // One joint training pass per class yields the cap checkpoint plus the
    // three monitored variants.
    DdpmArtifacts artifacts;
    const auto specs = table1_specs(opts.synthetic_per_model, opts.real_per_participant);
    for (const auto& s : specs)
        if (s.synthetic_per_model > 0)
            artifacts.synthetic[s.name].resize(static_cast<std::size_t>(n_classes));

    double noise_acc = 0.0, sampled_acc = 0.0;
    for (int c = 0; c < n_classes; ++c) {
        const auto cu = static_cast<std::uint64_t>(c);
        const auto& class_train = ddpm_train[static_cast<std::size_t>(c)];
        PreparedTraining prep = make_diffusion_model(
            class_train, opts.diffusion, derive_seed(opts.seed, {0x6d6f64ULL, split_u, cu}));

        std::vector<TrainingMonitorConfig> cfgs;
        for (MonitorMetric m :
             {MonitorMetric::CosineTime, MonitorMetric::CosinePsd, MonitorMetric::COptGak}) {
            TrainingMonitorConfig cfg;
            cfg.scoring.metric = m;
            cfg.scoring.welch = opts.welch;
            if (m == MonitorMetric::COptGak) {
                const auto& cal = res.calibration[static_cast<std::size_t>(c)];
                cfg.scoring.gak_sigma = cal.sigma;
                cfg.scoring.gak_range_lo = cal.range_lo;
                cfg.scoring.gak_range_hi = cal.range_hi;
            }
            cfg.interval_epochs = opts.monitor_interval_epochs;
            cfg.probe_batch = opts.probe_batch;
            cfg.patience_probes = opts.patience_probes;
            cfg.gak_fraction_required = opts.gak_fraction_required;
            cfg.max_epochs = opts.max_epochs;
            cfgs.push_back(cfg);
        }

        TrainOptions topts;
        topts.adam = opts.adam;
        topts.batch_size = opts.ddpm_batch_size;
        topts.train_seed = derive_seed(opts.seed, {0x747261696eULL, split_u, cu});
        topts.probe_seed = derive_seed(opts.seed, {0x70726f6265ULL, split_u, cu});
        auto joint = detail::train_all_variants(std::move(prep), class_train, cfgs, topts);

        for (const auto& [metric, epochs] : joint.epochs_used)
            res.epochs_used[metric].push_back(static_cast<double>(epochs));

        // Cap-trained model: full sampling, plus the noise baseline used by
        // the qualitative sanity comparison.
        const auto full_windows =
            sample_batch(joint.cap_model, opts.synthetic_per_model,
                         derive_seed(opts.seed, {0x73616d70ULL, split_u, cu, 0}));
        artifacts.synthetic["full_ddpm"][static_cast<std::size_t>(c)] = full_windows;

        ProbeScoring psd_score;
        psd_score.metric = MonitorMetric::CosinePsd;
        psd_score.welch = opts.welch;
        sampled_acc += score_probe_windows(full_windows, class_train, psd_score, 0).mean;
        const auto noise_states =
            begin_sampling(joint.cap_model, opts.synthetic_per_model,
                           derive_seed(opts.seed, {0x6e6f6973ULL, split_u, cu}))
                .states;
        noise_acc +=
            score_probe_windows(states_to_windows(joint.cap_model, noise_states), class_train,
                                psd_score, 0)
                .mean;

        // Monitored-training models: full sampling for OT sets, monitored
        // denoising for OT-D sets.
        int set_index = 1;
        for (MonitorMetric m :
             {MonitorMetric::COptGak, MonitorMetric::CosinePsd, MonitorMetric::CosineTime}) {
            const std::string metric = monitor_metric_name(m);
            const auto& model = joint.monitored.at(metric);
            const auto ot_windows = sample_batch(
                model, opts.synthetic_per_model,
                derive_seed(opts.seed, {0x73616d70ULL, split_u, cu,
                                        static_cast<std::uint64_t>(set_index)}));
            artifacts.synthetic["ot_" + metric][static_cast<std::size_t>(c)] = ot_windows;

            DenoiseMonitorConfig dcfg;
            dcfg.scoring = cfgs[static_cast<std::size_t>(
                               m == MonitorMetric::CosineTime ? 0
                               : m == MonitorMetric::CosinePsd ? 1 : 2)]
                               .scoring;
            dcfg.interval_steps = opts.denoise_interval_steps;
            dcfg.consecutive_drops_to_stop = opts.consecutive_drops;
            const auto sampled = sample_with_monitor(
                model, opts.synthetic_per_model, class_train, dcfg,
                derive_seed(opts.seed, {0x73616d70ULL, split_u, cu,
                                        static_cast<std::uint64_t>(set_index + 100)}));
            artifacts.synthetic["otd_" + metric][static_cast<std::size_t>(c)] = sampled.windows;
            res.steps_used[metric].push_back(static_cast<double>(sampled.steps_used));
            ++set_index;
        }
    }
    res.noise_cosine_psd = noise_acc / static_cast<double>(n_classes);
    res.sampled_cosine_psd = sampled_acc / static_cast<double>(n_classes);

    // Classifier phase: one model per (training set, seed), scored on the
    // held-out participant.
    for (const auto& spec : specs) {
        res.set_names.push_back(spec.name);
        const Dataset clf_train = build_training_set(spec, real, artifacts);
        double f1_acc = 0.0;
        for (int s = 0; s < opts.classifier_seeds; ++s) {
            const auto model = train_proxy_classifier(
                clf_train, val_ds,
                derive_seed(opts.seed, {0x636c6673ULL, split_u,
                                        static_cast<std::uint64_t>(res.set_names.size()),
                                        static_cast<std::uint64_t>(s)}),
                opts.classifier);
            f1_acc += macro_f1(evaluate_classifier(model, test_ds));
        }
        res.f1_per_set.push_back(f1_acc / static_cast<double>(opts.classifier_seeds));
    }
    return res;
}

struct EvalReport {
    std::vector<std::string> set_names;
    std::vector<int> participants;
    std::vector<std::vector<double>> f1;  ///< [set][participant index]
    std::map<std::string, std::vector<double>> epochs_used;
    std::map<std::string, std::vector<double>> denoise_steps_used;
    int max_epochs = 0;
    int max_steps = 0;
    double noise_cosine_psd = 0.0;
    double sampled_cosine_psd = 0.0;
    std::vector<SplitResult> splits;

    double set_mean_f1(const std::string& name) const {
        for (std::size_t i = 0; i < set_names.size(); ++i) {
            if (set_names[i] != name) continue;
            double acc = 0.0;
            for (double v : f1[i]) acc += v;
            return acc / static_cast<double>(f1[i].size());
        }
        throw std::invalid_argument("set_mean_f1: unknown set " + name);
    }
};

inline EvalReport assemble_report(std::vector<SplitResult> splits, int max_epochs,
                                  int max_steps) {
    if (splits.empty()) throw std::invalid_argument("assemble_report: no split results");
    EvalReport report;
    report.max_epochs = max_epochs;
    report.max_steps = max_steps;
    for (auto& sr : splits) {
        if (report.set_names.empty()) {
            report.set_names = sr.set_names;
            report.f1.assign(report.set_names.size(), {});
        }
        report.participants.push_back(sr.test_participant);
        for (std::size_t i = 0; i < sr.f1_per_set.size(); ++i)
            report.f1[i].push_back(sr.f1_per_set[i]);
        for (const auto& [metric, v] : sr.epochs_used)
            report.epochs_used[metric].insert(report.epochs_used[metric].end(), v.begin(), v.end());
        for (const auto& [metric, v] : sr.steps_used)
            report.denoise_steps_used[metric].insert(report.denoise_steps_used[metric].end(),
                                                     v.begin(), v.end());
        report.noise_cosine_psd += sr.noise_cosine_psd;
        report.sampled_cosine_psd += sr.sampled_cosine_psd;
        report.splits.push_back(std::move(sr));
    }
    const double n = static_cast<double>(report.splits.size());
    report.noise_cosine_psd /= n;
    report.sampled_cosine_psd /= n;
    return report;
}

inline EvalReport losocv_experiment(const Dataset& ds, const ExperimentOptions& opts) {
    std::vector<SplitResult> results;
    for (const auto& split : loso_splits(ds)) {
        try {
            results.push_back(run_split(ds, split.test_participant, opts));
        } catch (const std::exception& e) {
            throw std::runtime_error("losocv_experiment: split test_participant=" +
                                     std::to_string(split.test_participant) + ": " + e.what());
        }
    }
    return assemble_report(std::move(results), opts.max_epochs, opts.diffusion.T);
}

struct ReductionRow {
    std::string metric;
    double mean_epochs = 0.0;
    double reduction_percent = 0.0;
    double saved_epochs = 0.0;
};

struct ReductionReport {
    std::vector<ReductionRow> rows;
    int max_epochs = 0;
    std::string note;
};

/// Reduction percentage and total saved budget per metric:
/// reduction = 1 - mean(used)/cap, saved = sum(cap - used).
inline ReductionReport reduction_report(const std::map<std::string, std::vector<double>>& usage,
                                        int max_epochs) {
    if (usage.empty()) throw std::invalid_argument("reduction_report: empty usage table");
    ReductionReport rep;
    rep.max_epochs = max_epochs;
    rep.note = "c_opt_gak reduction is recomputed from per-class means; the commonly cited "
               "19.51% figure is inconsistent with those means, which give 19.05%";
    for (const auto& [metric, used] : usage) {
        if (used.empty()) throw std::invalid_argument("reduction_report: empty usage row");
        ReductionRow row;
        row.metric = metric;
        double saved = 0.0;
        for (double u : used) {
            row.mean_epochs += u;
            saved += static_cast<double>(max_epochs) - u;
        }
        row.mean_epochs /= static_cast<double>(used.size());
        row.reduction_percent = 100.0 * (1.0 - row.mean_epochs / static_cast<double>(max_epochs));
        row.saved_epochs = saved;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

inline void reduction_to_csv(const std::filesystem::path& path, const ReductionReport& rep) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("reduction_to_csv: cannot open " + path.string());
    out << "# note: " << rep.note << '\n';
    out << "metric,mean_epochs,reduction_percent,saved_epochs\n";
    for (const auto& r : rep.rows)
        out << r.metric << ',' << format_double(r.mean_epochs) << ','
            << format_double(r.reduction_percent) << ',' << format_double(r.saved_epochs) << '\n';
    if (!out) throw std::runtime_error("reduction_to_csv: write failed for " + path.string());
}

inline void report_to_csv(const std::filesystem::path& path, const EvalReport& rep) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("report_to_csv: cannot open " + path.string());
    out << "participant";
    for (const auto& name : rep.set_names) out << ',' << name;
    out << '\n';
    for (std::size_t p = 0; p < rep.participants.size(); ++p) {
        out << rep.participants[p];
        for (const auto& col : rep.f1) out << ',' << format_double(col[p]);
        out << '\n';
    }
    out << "mean";
    for (const auto& name : rep.set_names) out << ',' << format_double(rep.set_mean_f1(name));
    out << '\n';
    if (!out) throw std::runtime_error("report_to_csv: write failed for " + path.string());
}

inline nlohmann::json report_to_json(const EvalReport& rep) {
    nlohmann::json sets = nlohmann::json::object();
    for (std::size_t i = 0; i < rep.set_names.size(); ++i)
        sets[rep.set_names[i]] = {{"f1_per_participant", rep.f1[i]},
                                  {"mean_f1", rep.set_mean_f1(rep.set_names[i])}};
    nlohmann::json splits = nlohmann::json::array();
    for (const auto& s : rep.splits) {
        nlohmann::json cal = nlohmann::json::array();
        for (std::size_t c = 0; c < s.calibration.size(); ++c)
            cal.push_back({{"sigma", s.calibration[c].sigma},
                           {"mean", s.calibration[c].mean_score},
                           {"std", s.calibration[c].std_score},
                           {"fallback", s.calibration[c].fallback},
                           {"median_sigma", s.median_sigma[c]}});
        splits.push_back({{"test_participant", s.test_participant},
                          {"calibration", std::move(cal)},
                          {"epochs_used", s.epochs_used},
                          {"steps_used", s.steps_used},
                          {"noise_cosine_psd", s.noise_cosine_psd},
                          {"sampled_cosine_psd", s.sampled_cosine_psd}});
    }
    return {{"participants", rep.participants},
            {"sets", std::move(sets)},
            {"epochs_used", rep.epochs_used},
            {"denoise_steps_used", rep.denoise_steps_used},
            {"max_epochs", rep.max_epochs},
            {"max_steps", rep.max_steps},
            {"noise_cosine_psd", rep.noise_cosine_psd},
            {"sampled_cosine_psd", rep.sampled_cosine_psd},
            {"splits", std::move(splits)}};
}

}  // namespace diffsim
