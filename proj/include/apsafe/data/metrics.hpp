#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "apsafe/data/dataset.hpp"
#include "apsafe/nn/model_io.hpp"
#include "apsafe/nn/network.hpp"
#include "apsafe/util/error.hpp"
#include "json.hpp"

namespace apsafe::data {

/// Sum of squared residuals and the number of residuals it covers, per
/// horizon. Pooled and per-horizon RMSE are both derived from it.
struct ErrorTotals {
    std::vector<double> sse = std::vector<double>(kOutputSteps, 0.0);
    std::size_t windows = 0;

    double pooled_sse() const {
        double s = 0.0;
        for (double v : sse) s += v;
        return s;
    }
};

inline ErrorTotals error_totals(const nn::Network& net, const Dataset& ds, std::size_t chunk = 4096) {
    if (net.output_dim() != kOutputSteps || net.input_dim() != kInputDim)
        throw DimensionError("network is not a 36-input, 6-output predictor");
    ErrorTotals out;
    out.windows = ds.size();
    for (std::size_t start = 0; start < ds.size(); start += chunk) {
        const std::size_t end = std::min(ds.size(), start + chunk);
        Eigen::MatrixXd xs(static_cast<Eigen::Index>(kInputDim), static_cast<Eigen::Index>(end - start));
        Eigen::MatrixXd ys(static_cast<Eigen::Index>(kOutputSteps), static_cast<Eigen::Index>(end - start));
        for (std::size_t i = start; i < end; ++i) {
            const auto c = static_cast<Eigen::Index>(i - start);
            xs.col(c) = net.scaler().apply(ds[i].flat_inputs());
            ys.col(c) = ds[i].target_vector();
        }
        const Eigen::MatrixXd diff = net.forward_scaled_batch(xs) - ys;
        for (std::size_t j = 0; j < kOutputSteps; ++j) out.sse[j] += diff.row(static_cast<Eigen::Index>(j)).squaredNorm();
    }
    return out;
}

/// Root mean squared error pooled over every window and all 6 horizons, mg/dL.
inline double rmse(const nn::Network& net, const Dataset& ds) {
    if (ds.empty()) throw ValidationError("cannot compute RMSE on an empty dataset");
    const auto t = error_totals(net, ds);
    return std::sqrt(t.pooled_sse() / static_cast<double>(t.windows * kOutputSteps));
}

/// RMSE of each horizon separately, nearest first.
inline std::vector<double> rmse_per_horizon(const nn::Network& net, const Dataset& ds) {
    if (ds.empty()) throw ValidationError("cannot compute RMSE on an empty dataset");
    const auto t = error_totals(net, ds);
    std::vector<double> out;
    for (double s : t.sse) out.push_back(std::sqrt(s / static_cast<double>(t.windows)));
    return out;
}

struct RmseEvidence {
    double value = 0.0;
    double threshold = 12.0;
    bool pass = false;
    std::vector<double> per_horizon;
    std::size_t windows = 0;
    std::string dataset_hash;
    std::string model_hash;

    nlohmann::json to_json() const {
        return {{"kind", "rmse"},         {"value", value},
                {"threshold", threshold}, {"pass", pass},
                {"per_horizon", per_horizon}, {"windows", windows},
                {"dataset_hash", dataset_hash}, {"model_hash", model_hash}};
    }

    static RmseEvidence from_json(const nlohmann::json& j) {
        if (!j.is_object() || j.value("kind", "") != "rmse") throw ParseError("not an rmse evidence document");
        RmseEvidence e;
        e.value = j.at("value").get<double>();
        e.threshold = j.at("threshold").get<double>();
        e.pass = j.at("pass").get<bool>();
        e.per_horizon = j.value("per_horizon", std::vector<double>{});
        e.windows = j.value("windows", std::size_t{0});
        e.dataset_hash = j.value("dataset_hash", "");
        e.model_hash = j.value("model_hash", "");
        return e;
    }
};

/// Accuracy requirement: pass iff pooled RMSE is strictly below `threshold`.
inline RmseEvidence check_ml_rq1(const nn::Network& net, const Dataset& test_set, double threshold = 12.0) {
    if (test_set.empty()) throw ValidationError("the test set is empty");
    if (!(threshold > 0.0)) throw ValidationError("the RMSE threshold must be positive");
    const auto t = error_totals(net, test_set);
    RmseEvidence e;
    e.value = std::sqrt(t.pooled_sse() / static_cast<double>(t.windows * kOutputSteps));
    for (double s : t.sse) e.per_horizon.push_back(std::sqrt(s / static_cast<double>(t.windows)));
    e.threshold = threshold;
    e.pass = e.value < threshold;
    e.windows = test_set.size();
    e.dataset_hash = test_set.hash();
    e.model_hash = nn::model_hash(net);
    return e;
}

}  // namespace apsafe::data
