#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "apsafe/nn/network.hpp"
#include "apsafe/util/error.hpp"
#include "apsafe/util/hash.hpp"
#include "json.hpp"

namespace apsafe::nn {

inline constexpr int kModelFormatVersion = 1;

/// {version: 1, dims: [...], layers: [{W: [[...]], b: [...], act: "relu"|"id"}],
///  scaler: {min: [...], max: [...]}}
/// Doubles are written in shortest round-trip form, so save/load is bit-exact.
inline nlohmann::json model_to_json(const Network& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : net.layers()) {
        nlohmann::json w = nlohmann::json::array();
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(l.weights.cols()));
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) row[static_cast<std::size_t>(c)] = l.weights(r, c);
            w.push_back(row);
        }
        std::vector<double> b(l.biases.data(), l.biases.data() + l.biases.size());
        layers.push_back({{"W", w}, {"b", b}, {"act", l.activation == Activation::ReLU ? "relu" : "id"}});
    }
    nlohmann::json j;
    j["version"] = kModelFormatVersion;
    j["dims"] = net.dims();
    j["layers"] = layers;
    j["scaler"] = {{"min", net.scaler().mins()}, {"max", net.scaler().maxs()}};
    return j;
}

inline std::string model_to_string(const Network& net) { return model_to_json(net).dump(); }

namespace detail {

inline double finite_number(const nlohmann::json& v, const std::string& where) {
    if (!v.is_number()) throw ParseError(where + ": expected a finite number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(where + ": non-finite value");
    return d;
}

inline std::vector<double> number_array(const nlohmann::json& v, const std::string& where) {
    if (!v.is_array()) throw ParseError(where + ": expected an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(finite_number(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

}  // namespace detail

inline Network model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("model document must be an object");
    if (!j.contains("version")) throw ParseError("model document has no version field");
    if (!j["version"].is_number_integer() || j["version"].get<int>() != kModelFormatVersion)
        throw UnsupportedVersion("unsupported model format version " + j["version"].dump() + " (expected " +
                                 std::to_string(kModelFormatVersion) + ")");
    for (const char* key : {"dims", "layers", "scaler"})
        if (!j.contains(key)) throw ParseError(std::string("model document has no '") + key + "' field");

    std::vector<std::size_t> dims;
    for (const auto& d : j["dims"]) {
        if (!d.is_number_integer() || d.get<long long>() < 1) throw ParseError("dims must be positive integers");
        dims.push_back(d.get<std::size_t>());
    }
    const auto& jl = j["layers"];
    if (!jl.is_array() || jl.size() + 1 != dims.size()) throw DimensionError("layer count does not match dims");

    std::vector<Layer> layers;
    for (std::size_t l = 0; l < jl.size(); ++l) {
        const auto tag = "layers[" + std::to_string(l) + "]";
        const auto& e = jl[l];
        if (!e.contains("W") || !e.contains("b") || !e.contains("act")) throw ParseError(tag + " needs W, b and act");
        const auto rows = static_cast<Eigen::Index>(dims[l + 1]);
        const auto cols = static_cast<Eigen::Index>(dims[l]);
        if (!e["W"].is_array() || static_cast<Eigen::Index>(e["W"].size()) != rows)
            throw DimensionError(tag + ".W row count does not match dims");
        Layer layer;
        layer.weights.resize(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            auto row = detail::number_array(e["W"][static_cast<std::size_t>(r)], tag + ".W[" + std::to_string(r) + "]");
            if (static_cast<Eigen::Index>(row.size()) != cols) throw DimensionError(tag + ".W column count does not match dims");
            for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = row[static_cast<std::size_t>(c)];
        }
        auto b = detail::number_array(e["b"], tag + ".b");
        if (static_cast<Eigen::Index>(b.size()) != rows) throw DimensionError(tag + ".b length does not match dims");
        layer.biases = Eigen::Map<Eigen::VectorXd>(b.data(), rows);
        const auto act = e["act"].get<std::string>();
        if (act == "relu") layer.activation = Activation::ReLU;
        else if (act == "id") layer.activation = Activation::Identity;
        else throw ParseError(tag + ".act must be \"relu\" or \"id\"");
        layers.push_back(std::move(layer));
    }
    const auto& js = j["scaler"];
    if (!js.contains("min") || !js.contains("max")) throw ParseError("scaler needs min and max");
    MinMaxScaler scaler(detail::number_array(js["min"], "scaler.min"), detail::number_array(js["max"], "scaler.max"));
    return Network(std::move(layers), std::move(scaler));
}

inline Network model_from_string(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed model file: ") + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed model file: ") + e.what());
    }
}

inline void save_model(const Network& net, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write model file " + path.string());
    os << model_to_json(net).dump(1) << '\n';
}

inline Network load_model(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read model file " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return model_from_string(ss.str());
}

/// Content hash of the canonical (compact) model document.
inline std::string model_hash(const Network& net) { return util::sha256_hex(model_to_string(net)); }

}  // namespace apsafe::nn
