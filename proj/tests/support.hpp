#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "apsafe/nn/network.hpp"

namespace testsupport {

inline apsafe::nn::Network random_net(const std::vector<std::size_t>& dims, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    std::vector<apsafe::nn::Layer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        apsafe::nn::Layer layer;
        layer.weights.resize(static_cast<Eigen::Index>(dims[l + 1]), static_cast<Eigen::Index>(dims[l]));
        for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = n(rng);
        layer.biases.resize(static_cast<Eigen::Index>(dims[l + 1]));
        for (Eigen::Index i = 0; i < layer.biases.size(); ++i) layer.biases[i] = n(rng);
        layer.activation = l + 2 == dims.size() ? apsafe::nn::Activation::Identity : apsafe::nn::Activation::ReLU;
        layers.push_back(std::move(layer));
    }
    return apsafe::nn::Network(std::move(layers), apsafe::nn::MinMaxScaler::identity(dims.front()));
}

inline Eigen::VectorXd uniform_vec(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = u(rng);
    return v;
}

// Plain nested-loop forward pass, written without Eigen arithmetic.
inline std::vector<double> naive_forward(const apsafe::nn::Network& net, const std::vector<double>& x) {
    std::vector<double> a = x;
    for (const auto& l : net.layers()) {
        std::vector<double> z(static_cast<std::size_t>(l.weights.rows()));
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            double s = l.biases(r);
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) s += l.weights(r, c) * a[static_cast<std::size_t>(c)];
            if (l.activation == apsafe::nn::Activation::ReLU && s < 0.0) s = 0.0;
            z[static_cast<std::size_t>(r)] = s;
        }
        a = z;
    }
    return a;
}

}  // namespace testsupport
