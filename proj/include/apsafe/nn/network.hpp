#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "apsafe/nn/scaler.hpp"
#include "apsafe/util/error.hpp"

namespace apsafe::nn {

enum class Activation { ReLU, Identity };

struct LayerSpec {
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    Activation activation = Activation::ReLU;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Dense layer. Row `i` of `weights` feeds output neuron `i`.
struct Layer {
    Eigen::MatrixXd weights;
    Eigen::VectorXd biases;
    Activation activation = Activation::ReLU;

    LayerSpec spec() const {
        return {static_cast<std::size_t>(weights.cols()), static_cast<std::size_t>(weights.rows()), activation};
    }

    friend bool operator==(const Layer& a, const Layer& b) {
        return a.activation == b.activation && a.weights.rows() == b.weights.rows() &&
               a.weights.cols() == b.weights.cols() && a.biases.size() == b.biases.size() &&
               a.weights == b.weights && a.biases == b.biases;
    }
};

inline Eigen::VectorXd relu(const Eigen::VectorXd& z) { return z.cwiseMax(0.0); }

/// Feed-forward ReLU regression network with an input scaler.
///
/// Hidden layers use ReLU and the final layer is affine. `forward` takes raw
/// (physical-unit) inputs and applies the scaler; `forward_scaled` takes
/// inputs that are already in network units, which is what the verifier
/// reasons about.
class Network {
public:
    Network() = default;

    Network(std::vector<Layer> layers, MinMaxScaler scaler)
        : layers_(std::move(layers)), scaler_(std::move(scaler)) {
        validate();
    }

    /// All-zero weights and biases with the given layer widths.
    static Network zeros(const std::vector<std::size_t>& dims) {
        if (dims.size() < 2) throw DimensionError("a network needs at least two dims");
        std::vector<Layer> layers;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            Layer layer;
            layer.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dims[l + 1]),
                                                  static_cast<Eigen::Index>(dims[l]));
            layer.biases = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims[l + 1]));
            layer.activation = (l + 2 == dims.size()) ? Activation::Identity : Activation::ReLU;
            layers.push_back(std::move(layer));
        }
        return Network(std::move(layers), MinMaxScaler::identity(dims.front()));
    }

    const std::vector<Layer>& layers() const noexcept { return layers_; }
    const Layer& layer(std::size_t i) const { return layers_.at(i); }
    const MinMaxScaler& scaler() const noexcept { return scaler_; }

    std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().spec().input_dim; }
    std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().spec().output_dim; }

    std::vector<LayerSpec> layer_specs() const {
        std::vector<LayerSpec> out;
        for (const auto& l : layers_) out.push_back(l.spec());
        return out;
    }

    std::vector<std::size_t> dims() const {
        std::vector<std::size_t> out;
        if (layers_.empty()) return out;
        out.push_back(input_dim());
        for (const auto& l : layers_) out.push_back(l.spec().output_dim);
        return out;
    }

    std::size_t hidden_relu_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_)
            if (l.activation == Activation::ReLU) n += static_cast<std::size_t>(l.weights.rows());
        return n;
    }

    Eigen::VectorXd forward(const Eigen::VectorXd& raw_input) const {
        check_input(raw_input.size());
        return forward_scaled(scaler_.apply(raw_input));
    }

    Eigen::VectorXd forward_scaled(const Eigen::VectorXd& x) const {
        check_input(x.size());
        Eigen::VectorXd a = x;
        for (const auto& l : layers_) {
            Eigen::VectorXd z = l.weights * a + l.biases;
            a = l.activation == Activation::ReLU ? relu(z) : z;
        }
        return a;
    }

    /// Batched forward pass; one sample per column, inputs in network units.
    Eigen::MatrixXd forward_scaled_batch(const Eigen::MatrixXd& xs) const {
        if (static_cast<std::size_t>(xs.rows()) != input_dim())
            throw DimensionError("batch has " + std::to_string(xs.rows()) + " rows, network expects " +
                                 std::to_string(input_dim()));
        Eigen::MatrixXd a = xs;
        for (const auto& l : layers_) {
            Eigen::MatrixXd z = (l.weights * a).colwise() + l.biases;
            a = l.activation == Activation::ReLU ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
        }
        return a;
    }

    void validate() const {
        if (layers_.empty()) throw ValidationError("network has no layers");
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& layer = layers_[l];
            const auto tag = "layer " + std::to_string(l);
            if (layer.weights.rows() < 1 || layer.weights.cols() < 1)
                throw DimensionError(tag + " has an empty weight matrix");
            if (layer.biases.size() != layer.weights.rows())
                throw DimensionError(tag + " bias length does not match weight rows");
            if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows())
                throw DimensionError(tag + " input dim does not chain with previous layer");
            if (!layer.weights.allFinite() || !layer.biases.allFinite())
                throw ValidationError(tag + " contains non-finite values");
            const bool last = l + 1 == layers_.size();
            if (last && layer.activation != Activation::Identity)
                throw ValidationError("the output layer must use the identity activation");
        }
        if (scaler_.fitted() && scaler_.size() != input_dim())
            throw DimensionError("scaler size does not match network input dim");
    }

    friend bool operator==(const Network&, const Network&) = default;

private:
    void check_input(Eigen::Index n) const {
        if (static_cast<std::size_t>(n) != input_dim())
            throw DimensionError("input has " + std::to_string(n) + " values, network expects " +
                                 std::to_string(input_dim()));
    }

    std::vector<Layer> layers_;
    MinMaxScaler scaler_;
};

}  // namespace apsafe::nn
