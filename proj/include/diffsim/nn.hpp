// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal dense network substrate: forward with cached pre-activations,
// exact reverse-mode gradients, adaptive-moment updates, a central
// finite-difference gradient check, and bit-exact JSON checkpoints.

#pragma once

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "diffsim/rng.hpp"

namespace diffsim {

enum class Activation { Relu, Identity };

inline const char* activation_name(Activation a) {
    return a == Activation::Relu ? "relu" : "identity";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "identity") return Activation::Identity;
    throw std::invalid_argument("activation_from_name: unknown activation " + s);
}

struct DenseLayer {
    std::vector<std::vector<double>> w;  ///< [out][in], row-major
    std::vector<double> b;               ///< [out]
    Activation act = Activation::Identity;

    int in_dim() const { return w.empty() ? 0 : static_cast<int>(w[0].size()); }
    int out_dim() const { return static_cast<int>(w.size()); }
};

struct DenseNet {
    std::vector<DenseLayer> layers;

    int input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

    void validate() const {
        if (layers.empty()) throw std::invalid_argument("DenseNet: no layers");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto& layer = layers[l];
            if (layer.w.empty() || layer.w[0].empty())
                throw std::invalid_argument("DenseNet: empty layer");
            for (const auto& row : layer.w) {
                if (row.size() != layer.w[0].size())
                    throw std::invalid_argument("DenseNet: ragged weight rows");
                for (double v : row)
                    if (!std::isfinite(v)) throw std::invalid_argument("DenseNet: non-finite weight");
            }
            if (static_cast<int>(layer.b.size()) != layer.out_dim())
                throw std::invalid_argument("DenseNet: bias length mismatch");
            for (double v : layer.b)
                if (!std::isfinite(v)) throw std::invalid_argument("DenseNet: non-finite bias");
            if (l > 0 && layers[l - 1].out_dim() != layer.in_dim())
                throw std::invalid_argument("DenseNet: layer dimension mismatch");
        }
    }
};

/// Glorot-uniform initialized network: weights in +-sqrt(6/(fan_in+fan_out)),
/// biases zero. dims = {in, hidden..., out}; acts has one entry per layer.
inline DenseNet make_dense_net(const std::vector<int>& dims, const std::vector<Activation>& acts,
                               std::uint64_t seed) {
    if (dims.size() < 2) throw std::invalid_argument("make_dense_net: need at least 2 dims");
    if (acts.size() != dims.size() - 1)
        throw std::invalid_argument("make_dense_net: need one activation per layer");
    Rng rng(seed);
    DenseNet net;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int in = dims[l], out = dims[l + 1];
        if (in <= 0 || out <= 0) throw std::invalid_argument("make_dense_net: non-positive dim");
        DenseLayer layer;
        layer.act = acts[l];
        const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        layer.w.assign(static_cast<std::size_t>(out), std::vector<double>(static_cast<std::size_t>(in)));
        for (auto& row : layer.w)
            for (auto& v : row) v = rng.uniform(-bound, bound);
        layer.b.assign(static_cast<std::size_t>(out), 0.0);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

/// Zeroes the final layer's weights and biases so a fresh net outputs zero.
inline void zero_output_layer(DenseNet& net) {
    if (net.layers.empty()) throw std::invalid_argument("zero_output_layer: no layers");
    for (auto& row : net.layers.back().w) std::fill(row.begin(), row.end(), 0.0);
    std::fill(net.layers.back().b.begin(), net.layers.back().b.end(), 0.0);
}

struct ForwardCache {
    std::vector<std::vector<double>> inputs;    ///< input to each layer
    std::vector<std::vector<double>> preacts;   ///< affine output before activation
    std::vector<std::pair<int, int>> shape_sig; ///< (in, out) per layer, guards staleness
};

struct ForwardResult {
    std::vector<double> output;
    ForwardCache cache;
};

inline ForwardResult forward(const DenseNet& net, const std::vector<double>& input) {
    if (net.layers.empty()) throw std::invalid_argument("forward: no layers");
    if (static_cast<int>(input.size()) != net.input_dim())
        throw std::invalid_argument("forward: input length mismatch");

    ForwardResult r;
    r.cache.inputs.reserve(net.layers.size());
    r.cache.preacts.reserve(net.layers.size());
    std::vector<double> a = input;
    for (const auto& layer : net.layers) {
        r.cache.shape_sig.emplace_back(layer.in_dim(), layer.out_dim());
        r.cache.inputs.push_back(a);
        std::vector<double> z(static_cast<std::size_t>(layer.out_dim()));
        for (int o = 0; o < layer.out_dim(); ++o) {
            double acc = layer.b[static_cast<std::size_t>(o)];
            const auto& row = layer.w[static_cast<std::size_t>(o)];
            for (std::size_t i = 0; i < row.size(); ++i) acc += row[i] * a[i];
            z[static_cast<std::size_t>(o)] = acc;
        }
        r.cache.preacts.push_back(z);
        if (layer.act == Activation::Relu)
            for (auto& v : z) v = std::max(0.0, v);
        a = std::move(z);
    }
    r.output = std::move(a);
    return r;
}

struct NetGrads {
    std::vector<std::vector<std::vector<double>>> dw;  ///< per layer, [out][in]
    std::vector<std::vector<double>> db;               ///< per layer, [out]
};

inline NetGrads zero_grads(const DenseNet& net) {
    NetGrads g;
    for (const auto& layer : net.layers) {
        g.dw.emplace_back(layer.w.size(), std::vector<double>(layer.w[0].size(), 0.0));
        g.db.emplace_back(layer.b.size(), 0.0);
    }
    return g;
}

inline void accumulate_grads(NetGrads& into, const NetGrads& g) {
    for (std::size_t l = 0; l < into.dw.size(); ++l) {
        for (std::size_t o = 0; o < into.dw[l].size(); ++o)
            for (std::size_t i = 0; i < into.dw[l][o].size(); ++i)
                into.dw[l][o][i] += g.dw[l][o][i];
        for (std::size_t o = 0; o < into.db[l].size(); ++o) into.db[l][o] += g.db[l][o];
    }
}

inline void scale_grads(NetGrads& g, double s) {
    for (auto& lw : g.dw)
        for (auto& row : lw)
            for (auto& v : row) v *= s;
    for (auto& lb : g.db)
        for (auto& v : lb) v *= s;
}

struct BackwardResult {
    NetGrads grads;
    std::vector<double> input_grad;
};

/// Exact reverse-mode gradients of forward's composition. The cache must
/// come from a forward call on the same architecture.
inline BackwardResult backward(const DenseNet& net, const ForwardCache& cache,
                               const std::vector<double>& output_grad) {
    if (cache.shape_sig.size() != net.layers.size())
        throw std::invalid_argument("backward: stale cache (layer count changed)");
    for (std::size_t l = 0; l < net.layers.size(); ++l)
        if (cache.shape_sig[l] !=
            std::make_pair(net.layers[l].in_dim(), net.layers[l].out_dim()))
            throw std::invalid_argument("backward: stale cache (layer shape changed)");
    if (static_cast<int>(output_grad.size()) != net.output_dim())
        throw std::invalid_argument("backward: output gradient length mismatch");

    BackwardResult r;
    r.grads = zero_grads(net);
    std::vector<double> da = output_grad;
    for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
        const auto& layer = net.layers[static_cast<std::size_t>(l)];
        const auto& z = cache.preacts[static_cast<std::size_t>(l)];
        const auto& ain = cache.inputs[static_cast<std::size_t>(l)];

        std::vector<double> dz(da.size());
        for (std::size_t o = 0; o < da.size(); ++o)
            dz[o] = (layer.act == Activation::Relu && z[o] <= 0.0) ? 0.0 : da[o];

        auto& dw = r.grads.dw[static_cast<std::size_t>(l)];
        auto& db = r.grads.db[static_cast<std::size_t>(l)];
        for (std::size_t o = 0; o < dz.size(); ++o) {
            db[o] = dz[o];
            for (std::size_t i = 0; i < ain.size(); ++i) dw[o][i] = dz[o] * ain[i];
        }

        std::vector<double> din(ain.size(), 0.0);
        for (std::size_t o = 0; o < dz.size(); ++o) {
            const auto& row = layer.w[o];
            for (std::size_t i = 0; i < din.size(); ++i) din[i] += row[i] * dz[o];
        }
        da = std::move(din);
    }
    r.input_grad = std::move(da);
    return r;
}

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    NetGrads m, v;
    long long step = 0;

    static AdamState init(const DenseNet& net) {
        AdamState s;
        s.m = zero_grads(net);
        s.v = zero_grads(net);
        return s;
    }
};

/// One adaptive-moment update with bias correction. Non-finite gradients
/// mean training has diverged, which is an error, not a state to average
/// over.
inline void adam_step(DenseNet& net, AdamState& state, const NetGrads& grads,
                      const AdamConfig& cfg = {}) {
    if (grads.dw.size() != net.layers.size())
        throw std::invalid_argument("optimizer_step: gradient shape mismatch");
    for (std::size_t l = 0; l < grads.dw.size(); ++l) {
        for (const auto& row : grads.dw[l])
            for (double v : row)
                if (!std::isfinite(v)) throw std::runtime_error("optimizer_step: diverged");
        for (double v : grads.db[l])
            if (!std::isfinite(v)) throw std::runtime_error("optimizer_step: diverged");
    }

    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    auto update = [&](double& p, double& m, double& v, double g) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        p -= cfg.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
    };

    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& layer = net.layers[l];
        for (std::size_t o = 0; o < layer.w.size(); ++o)
            for (std::size_t i = 0; i < layer.w[o].size(); ++i)
                update(layer.w[o][i], state.m.dw[l][o][i], state.v.dw[l][o][i],
                       grads.dw[l][o][i]);
        for (std::size_t o = 0; o < layer.b.size(); ++o)
            update(layer.b[o], state.m.db[l][o], state.v.db[l][o], grads.db[l][o]);
    }
}

/// Max relative error between analytic gradients and central finite
/// differences of the loss 0.5 * ||net(input) - target||^2 over every
/// parameter. Relative error uses |a - b| / max(1e-8, |a| + |b|).
inline double finite_difference_check(DenseNet net, const std::vector<double>& input,
                                      const std::vector<double>& target, double h = 1e-5) {
    net.validate();
    if (static_cast<int>(target.size()) != net.output_dim())
        throw std::invalid_argument("finite_difference_check: target length mismatch");

    auto loss = [&](const DenseNet& n) {
        const auto out = forward(n, input).output;
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out[i] - target[i];
            acc += d * d;
        }
        return 0.5 * acc;
    };

    const auto fr = forward(net, input);
    std::vector<double> og(fr.output.size());
    for (std::size_t i = 0; i < og.size(); ++i) og[i] = fr.output[i] - target[i];
    const auto analytic = backward(net, fr.cache, og).grads;

    double worst = 0.0;
    auto check_param = [&](double& p, double a) {
        const double orig = p;
        p = orig + h;
        const double lp = loss(net);
        p = orig - h;
        const double lm = loss(net);
        p = orig;
        const double fd = (lp - lm) / (2.0 * h);
        const double rel = std::fabs(a - fd) / std::max(1e-8, std::fabs(a) + std::fabs(fd));
        worst = std::max(worst, rel);
    };

    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& layer = net.layers[l];
        for (std::size_t o = 0; o < layer.w.size(); ++o)
            for (std::size_t i = 0; i < layer.w[o].size(); ++i)
                check_param(layer.w[o][i], analytic.dw[l][o][i]);
        for (std::size_t o = 0; o < layer.b.size(); ++o)
            check_param(layer.b[o], analytic.db[l][o]);
    }
    return worst;
}

inline nlohmann::json net_to_json(const DenseNet& net) {
    net.validate();
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        nlohmann::json w = nlohmann::json::array();
        for (const auto& row : layer.w)
            for (double v : row) w.push_back(v);
        layers.push_back({{"in", layer.in_dim()},
                          {"out", layer.out_dim()},
                          {"act", activation_name(layer.act)},
                          {"w", std::move(w)},
                          {"b", layer.b}});
    }
    return {{"format", "densenet-v1"}, {"layers", std::move(layers)}};
}

inline DenseNet net_from_json(const nlohmann::json& j) {
    if (j.at("format").get<std::string>() != "densenet-v1")
        throw std::runtime_error("net_from_json: unsupported checkpoint format");
    DenseNet net;
    for (const auto& lj : j.at("layers")) {
        DenseLayer layer;
        const int in = lj.at("in").get<int>();
        const int out = lj.at("out").get<int>();
        layer.act = activation_from_name(lj.at("act").get<std::string>());
        const auto& w = lj.at("w");
        if (static_cast<int>(w.size()) != in * out)
            throw std::runtime_error("net_from_json: weight count mismatch");
        layer.w.assign(static_cast<std::size_t>(out), std::vector<double>(static_cast<std::size_t>(in)));
        std::size_t k = 0;
        for (int o = 0; o < out; ++o)
            for (int i = 0; i < in; ++i)
                layer.w[static_cast<std::size_t>(o)][static_cast<std::size_t>(i)] =
                    w[k++].get<double>();
        layer.b = lj.at("b").get<std::vector<double>>();
        if (static_cast<int>(layer.b.size()) != out)
            throw std::runtime_error("net_from_json: bias count mismatch");
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

inline void save_net(const std::string& path, const DenseNet& net) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_net: cannot open " + path);
    out << net_to_json(net).dump(2) << '\n';
    if (!out) throw std::runtime_error("save_net: write failed for " + path);
}

inline DenseNet load_net(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_net: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return net_from_json(j);
}

}  // namespace diffsim
