#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "apsafe/util/error.hpp"

namespace apsafe::nn {

/// Per-feature affine map sending the fitted minimum to 0 and maximum to 1.
/// Values outside the fitted range are not clamped.
class MinMaxScaler {
public:
    MinMaxScaler() = default;

    MinMaxScaler(std::vector<double> mins, std::vector<double> maxs)
        : min_(std::move(mins)), max_(std::move(maxs)) {
        if (min_.size() != max_.size())
            throw DimensionError("scaler min/max length mismatch");
        for (std::size_t i = 0; i < min_.size(); ++i) {
            if (!std::isfinite(min_[i]) || !std::isfinite(max_[i]))
                throw ValidationError("scaler feature " + std::to_string(i) + " is not finite");
            if (!(max_[i] > min_[i]))
                throw ValidationError("scaler feature " + std::to_string(i) + " is degenerate (max <= min)");
        }
    }

    /// Fit over the rows of `samples` (one sample per row).
    static MinMaxScaler fit(const Eigen::MatrixXd& samples) {
        if (samples.rows() == 0 || samples.cols() == 0)
            throw ValidationError("cannot fit scaler on empty data");
        std::vector<double> mins(samples.cols()), maxs(samples.cols());
        for (Eigen::Index j = 0; j < samples.cols(); ++j) {
            mins[j] = samples.col(j).minCoeff();
            maxs[j] = samples.col(j).maxCoeff();
        }
        return MinMaxScaler(std::move(mins), std::move(maxs));
    }

    /// The identity map on `n` features (min 0, max 1).
    static MinMaxScaler identity(std::size_t n) {
        return MinMaxScaler(std::vector<double>(n, 0.0), std::vector<double>(n, 1.0));
    }

    bool fitted() const noexcept { return !min_.empty(); }
    std::size_t size() const noexcept { return min_.size(); }
    const std::vector<double>& mins() const noexcept { return min_; }
    const std::vector<double>& maxs() const noexcept { return max_; }
    double range(std::size_t i) const { return max_.at(i) - min_.at(i); }

    double apply(std::size_t i, double v) const { return (v - min_.at(i)) / (max_.at(i) - min_.at(i)); }
    double invert(std::size_t i, double v) const { return min_.at(i) + v * (max_.at(i) - min_.at(i)); }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        check(x.size());
        Eigen::VectorXd out(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = apply(static_cast<std::size_t>(i), x[i]);
        return out;
    }

    Eigen::VectorXd invert(const Eigen::VectorXd& x) const {
        check(x.size());
        Eigen::VectorXd out(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = invert(static_cast<std::size_t>(i), x[i]);
        return out;
    }

    /// Scale every row of a sample matrix.
    Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& samples) const {
        check(samples.cols());
        Eigen::MatrixXd out(samples.rows(), samples.cols());
        for (Eigen::Index j = 0; j < samples.cols(); ++j)
            out.col(j) = (samples.col(j).array() - min_[j]) / (max_[j] - min_[j]);
        return out;
    }

    friend bool operator==(const MinMaxScaler&, const MinMaxScaler&) = default;

private:
    void check(Eigen::Index n) const {
        if (!fitted()) throw ValidationError("scaler is not fitted");
        if (static_cast<std::size_t>(n) != min_.size())
            throw DimensionError("scaler expects " + std::to_string(min_.size()) + " features, got " +
                                 std::to_string(n));
    }

    std::vector<double> min_;
    std::vector<double> max_;
};

}  // namespace apsafe::nn
