#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "apsafe/data/dataset.hpp"
#include "apsafe/nn/network.hpp"
#include "apsafe/nn/scaler.hpp"
#include "apsafe/util/error.hpp"

namespace apsafe::nn {

struct TrainingConfig {
    std::vector<std::size_t> hidden{8, 8};
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    double validation_fraction = 0.2;

    void validate() const {
        if (hidden.empty()) throw ValidationError("at least one hidden layer is required");
        for (auto h : hidden)
            if (h == 0) throw ValidationError("hidden layer widths must be positive");
        if (epochs == 0 || batch_size == 0) throw ValidationError("epochs and batch_size must be positive");
        if (!(learning_rate > 0.0) || !(epsilon > 0.0)) throw ValidationError("learning_rate and epsilon must be positive");
        if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
            throw ValidationError("Adam betas must lie in (0,1)");
        if (!(validation_fraction > 0.0 && validation_fraction < 0.5))
            throw ValidationError("validation_fraction must lie in (0, 0.5)");
    }
};

struct EpochLoss {
    double train_loss = 0.0;       // MSE, (mg/dL)^2
    double validation_loss = 0.0;  // MSE, (mg/dL)^2

    friend bool operator==(const EpochLoss&, const EpochLoss&) = default;
};

using LossHistory = std::vector<EpochLoss>;

struct TrainResult {
    Network network;
    LossHistory history;
};

/// Per-layer parameter gradients of the mean squared error.
struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    double loss = 0.0;
};

/// MSE over every output of every sample, and its gradient by backprop.
/// `xs` holds network-unit inputs and `ys` targets, one sample per column.
inline Gradients mse_gradients(const std::vector<Layer>& layers, const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys) {
    const auto n_layers = layers.size();
    std::vector<Eigen::MatrixXd> acts(n_layers + 1);
    std::vector<Eigen::MatrixXd> pre(n_layers);
    acts[0] = xs;
    for (std::size_t l = 0; l < n_layers; ++l) {
        pre[l] = (layers[l].weights * acts[l]).colwise() + layers[l].biases;
        acts[l + 1] = layers[l].activation == Activation::ReLU ? Eigen::MatrixXd(pre[l].cwiseMax(0.0)) : pre[l];
    }
    const double count = static_cast<double>(ys.size());
    Eigen::MatrixXd diff = acts[n_layers] - ys;
    Gradients g;
    g.loss = diff.squaredNorm() / count;
    g.weights.resize(n_layers);
    g.biases.resize(n_layers);
    Eigen::MatrixXd delta = (2.0 / count) * diff;
    for (std::size_t l = n_layers; l-- > 0;) {
        if (layers[l].activation == Activation::ReLU)
            delta = delta.cwiseProduct((pre[l].array() > 0.0).cast<double>().matrix());
        g.weights[l] = delta * acts[l].transpose();
        g.biases[l] = delta.rowwise().sum();
        if (l > 0) delta = layers[l].weights.transpose() * delta;
    }
    return g;
}

inline double mse(const std::vector<Layer>& layers, const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys) {
    Eigen::MatrixXd a = xs;
    for (const auto& l : layers) {
        Eigen::MatrixXd z = (l.weights * a).colwise() + l.biases;
        a = l.activation == Activation::ReLU ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return (a - ys).squaredNorm() / static_cast<double>(ys.size());
}

namespace detail {

struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    std::size_t t = 0;

    explicit AdamState(const std::vector<Layer>& layers) {
        for (const auto& l : layers) {
            mw.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
            vw.push_back(mw.back());
            mb.push_back(Eigen::VectorXd::Zero(l.biases.size()));
            vb.push_back(mb.back());
        }
    }

    void step(std::vector<Layer>& layers, const Gradients& g, const TrainingConfig& cfg) {
        ++t;
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
            param.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
        };
        for (std::size_t l = 0; l < layers.size(); ++l) {
            update(layers[l].weights, mw[l], vw[l], g.weights[l]);
            update(layers[l].biases, mb[l], vb[l], g.biases[l]);
        }
    }
};

}  // namespace detail

inline constexpr double kHiddenBiasInit = 0.01;

/// Glorot-uniform weights, hidden biases kHiddenBiasInit, and output biases
/// set to the per-output mean of the training targets.
inline std::vector<Layer> init_layers(const std::vector<std::size_t>& dims, const Eigen::MatrixXd& targets,
                                      std::mt19937_64& rng) {
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const auto fan_in = static_cast<Eigen::Index>(dims[l]);
        const auto fan_out = static_cast<Eigen::Index>(dims[l + 1]);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Layer layer;
        layer.weights.resize(fan_out, fan_in);
        for (Eigen::Index r = 0; r < fan_out; ++r)
            for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = dist(rng);
        layer.biases = Eigen::VectorXd::Constant(fan_out, kHiddenBiasInit);
        const bool last = l + 2 == dims.size();
        layer.activation = last ? Activation::Identity : Activation::ReLU;
        if (last && targets.size() > 0) layer.biases = targets.rowwise().mean();
        layers.push_back(std::move(layer));
    }
    return layers;
}

/// Trains on raw inputs (`inputs`, one sample per row) against targets in
/// mg/dL. The scaler is fitted on `inputs`; a seeded `validation_fraction`
/// of the samples is held out for the validation-loss curve.
inline TrainResult train(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, const TrainingConfig& cfg) {
    cfg.validate();
    if (inputs.rows() == 0) throw ValidationError("cannot train on an empty dataset");
    if (inputs.rows() != targets.rows()) throw DimensionError("inputs and targets have different sample counts");

    auto scaler = MinMaxScaler::fit(inputs);
    const Eigen::MatrixXd xs_all = scaler.apply_rows(inputs).transpose();
    const Eigen::MatrixXd ys_all = targets.transpose();

    std::mt19937_64 rng(cfg.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(inputs.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(order.size())));
    if (n_val == 0 && order.size() > 1) n_val = 1;
    const std::size_t n_train = order.size() - n_val;

    auto gather = [&](std::size_t from, std::size_t to) {
        Eigen::MatrixXd x(xs_all.rows(), static_cast<Eigen::Index>(to - from));
        Eigen::MatrixXd y(ys_all.rows(), static_cast<Eigen::Index>(to - from));
        for (std::size_t i = from; i < to; ++i) {
            x.col(static_cast<Eigen::Index>(i - from)) = xs_all.col(order[i]);
            y.col(static_cast<Eigen::Index>(i - from)) = ys_all.col(order[i]);
        }
        return std::pair{x, y};
    };
    auto [x_train, y_train] = gather(0, n_train);
    auto [x_val, y_val] = gather(n_train, order.size());

    std::vector<std::size_t> dims{static_cast<std::size_t>(inputs.cols())};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(static_cast<std::size_t>(targets.cols()));
    auto layers = init_layers(dims, y_train, rng);
    detail::AdamState adam(layers);

    LossHistory history;
    std::vector<Eigen::Index> perm(n_train);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Eigen::MatrixXd xb, yb;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(perm.begin(), perm.end(), rng);
        double weighted_loss = 0.0;
        for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
            const std::size_t end = std::min(n_train, start + cfg.batch_size);
            const auto b = static_cast<Eigen::Index>(end - start);
            xb.resize(x_train.rows(), b);
            yb.resize(y_train.rows(), b);
            for (Eigen::Index i = 0; i < b; ++i) {
                xb.col(i) = x_train.col(perm[start + static_cast<std::size_t>(i)]);
                yb.col(i) = y_train.col(perm[start + static_cast<std::size_t>(i)]);
            }
            const auto g = mse_gradients(layers, xb, yb);
            if (!std::isfinite(g.loss)) throw DivergenceError(epoch);
            weighted_loss += g.loss * static_cast<double>(b);
            adam.step(layers, g, cfg);
        }
        EpochLoss e;
        e.train_loss = weighted_loss / static_cast<double>(n_train);
        e.validation_loss = n_val > 0 ? mse(layers, x_val, y_val) : e.train_loss;
        if (!std::isfinite(e.train_loss) || !std::isfinite(e.validation_loss)) throw DivergenceError(epoch);
        history.push_back(e);
    }
    return {Network(std::move(layers), std::move(scaler)), std::move(history)};
}

inline TrainResult train(const data::Dataset& dataset, const TrainingConfig& cfg) {
    if (dataset.empty()) throw ValidationError("cannot train on an empty dataset");
    auto [x, y] = dataset.to_matrices();
    return train(x, y, cfg);
}

}  // namespace apsafe::nn
