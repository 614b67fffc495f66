#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "apsafe/sim/trace.hpp"
#include "apsafe/util/error.hpp"
#include "apsafe/util/hash.hpp"

namespace apsafe::data {

inline constexpr std::size_t kInputSteps = 12;   // one hour of 5-minute samples
inline constexpr std::size_t kOutputSteps = 6;   // 30-minute horizon
inline constexpr std::size_t kChannels = 3;      // BG, insulin, meal
inline constexpr std::size_t kInputDim = kInputSteps * kChannels;
inline constexpr std::size_t kWindowRows = kInputSteps + kOutputSteps;

enum Channel : std::size_t { kBg = 0, kInsulin = 1, kMeal = 2 };

/// Network input position of (channel, timestep). Inputs are laid out
/// channel-major: BG[0..11], insulin[0..11], meal[0..11], timestep 0 oldest.
constexpr std::size_t input_index(Channel c, std::size_t step) { return c * kInputSteps + step; }

/// One supervised sample: 12 past steps of (bg, insulin, meal) ordered oldest
/// to newest, and the next 6 BG values ordered nearest to farthest.
struct Window {
    std::array<std::array<double, kChannels>, kInputSteps> inputs{};
    std::array<double, kOutputSteps> targets{};

    Eigen::VectorXd flat_inputs() const {
        Eigen::VectorXd x(static_cast<Eigen::Index>(kInputDim));
        for (std::size_t t = 0; t < kInputSteps; ++t)
            for (std::size_t c = 0; c < kChannels; ++c)
                x[static_cast<Eigen::Index>(input_index(static_cast<Channel>(c), t))] = inputs[t][c];
        return x;
    }

    Eigen::VectorXd target_vector() const {
        return Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(kOutputSteps));
    }

    friend bool operator==(const Window&, const Window&) = default;
};

struct Provenance {
    std::string patient_id;
    std::size_t first_row = 0;  // trace row of input timestep 0

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

class Dataset {
public:
    void add(Window w, Provenance p) {
        windows_.push_back(std::move(w));
        provenance_.push_back(std::move(p));
    }

    void append(const Dataset& other) {
        windows_.insert(windows_.end(), other.windows_.begin(), other.windows_.end());
        provenance_.insert(provenance_.end(), other.provenance_.begin(), other.provenance_.end());
    }

    std::size_t size() const noexcept { return windows_.size(); }
    bool empty() const noexcept { return windows_.empty(); }
    const std::vector<Window>& windows() const noexcept { return windows_; }
    const std::vector<Provenance>& provenance() const noexcept { return provenance_; }
    const Window& operator[](std::size_t i) const { return windows_.at(i); }

    Dataset subset(const std::vector<std::size_t>& indices) const {
        Dataset out;
        out.windows_.reserve(indices.size());
        out.provenance_.reserve(indices.size());
        for (auto i : indices) out.add(windows_.at(i), provenance_.at(i));
        return out;
    }

    /// Raw inputs (n x 36) and targets (n x 6), one sample per row.
    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> to_matrices() const {
        const auto n = static_cast<Eigen::Index>(size());
        Eigen::MatrixXd x(n, static_cast<Eigen::Index>(kInputDim));
        Eigen::MatrixXd y(n, static_cast<Eigen::Index>(kOutputSteps));
        for (Eigen::Index i = 0; i < n; ++i) {
            x.row(i) = windows_[static_cast<std::size_t>(i)].flat_inputs().transpose();
            y.row(i) = windows_[static_cast<std::size_t>(i)].target_vector().transpose();
        }
        return {std::move(x), std::move(y)};
    }

    /// Content fingerprint over provenance and every value.
    std::string hash() const {
        util::Sha256 h;
        for (std::size_t i = 0; i < size(); ++i) {
            h.update(provenance_[i].patient_id).update("\0", 1);
            h.update(static_cast<double>(provenance_[i].first_row));
            for (const auto& step : windows_[i].inputs)
                for (double v : step) h.update(v);
            for (double v : windows_[i].targets) h.update(v);
        }
        return h.hex();
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<Window> windows_;
    std::vector<Provenance> provenance_;
};

/// Stride-1 windows over one trace; max(0, rows - 17) of them. Windows never
/// cross traces.
inline Dataset make_windows(const sim::SimTrace& trace) {
    Dataset out;
    const auto& rows = trace.rows;
    if (rows.size() < kWindowRows) return out;
    for (std::size_t start = 0; start + kWindowRows <= rows.size(); ++start) {
        Window w;
        for (std::size_t t = 0; t < kInputSteps; ++t) {
            const auto& r = rows[start + t];
            w.inputs[t] = {r.bg, r.insulin, r.meal};
        }
        for (std::size_t j = 0; j < kOutputSteps; ++j) w.targets[j] = rows[start + kInputSteps + j].bg;
        out.add(w, {trace.patient_id, start});
    }
    return out;
}

inline Dataset make_dataset(const std::vector<sim::SimTrace>& traces) {
    Dataset out;
    for (const auto& t : traces) out.append(make_windows(t));
    return out;
}

/// Seeded shuffle, then the first floor(fraction * n) windows train and the
/// remainder test.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction = 0.8, std::uint64_t seed = 0) {
    if (ds.empty()) throw ValidationError("cannot split an empty dataset");
    if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("split fraction must lie in (0,1)");
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(ds.size())));
    std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    return {ds.subset(train), ds.subset(test)};
}

/// Patient-level holdout: (everything else, windows of `patient_id`).
inline std::pair<Dataset, Dataset> split_by_patient(const Dataset& ds, const std::string& patient_id) {
    std::vector<std::size_t> rest, held;
    for (std::size_t i = 0; i < ds.size(); ++i)
        (ds.provenance()[i].patient_id == patient_id ? held : rest).push_back(i);
    if (held.empty()) throw ValidationError("no windows for patient '" + patient_id + "'");
    return {ds.subset(rest), ds.subset(held)};
}

}  // namespace apsafe::data
