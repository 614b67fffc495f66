#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "apsafe/util/error.hpp"

namespace apsafe::sim {

enum class PatientGroup { Adolescent, Adult, Child };

inline std::string_view to_string(PatientGroup g) {
    switch (g) {
        case PatientGroup::Adolescent: return "Adolescent";
        case PatientGroup::Adult: return "Adult";
        case PatientGroup::Child: return "Child";
    }
    return "?";
}

inline PatientGroup parse_group(std::string_view s) {
    if (s == "Adolescent") return PatientGroup::Adolescent;
    if (s == "Adult") return PatientGroup::Adult;
    if (s == "Child") return PatientGroup::Child;
    throw ValidationError("unknown patient group '" + std::string(s) + "'");
}

/// Physiological and therapy parameters of one virtual patient.
///
/// Rates are per minute. The carb factor (BG rise per gram of absorbed
/// carbohydrate) is insulin_sensitivity / carb_ratio.
struct PatientParams {
    std::string id;
    PatientGroup group = PatientGroup::Adult;
    double body_weight = 70.0;             // kg
    double insulin_sensitivity = 45.0;     // (mg/dL) per U
    double glucose_effectiveness = 0.01;   // 1/min
    double carb_bioavailability = 0.9;     // (0,1]
    double gut_absorption_rate = 0.03;     // 1/min
    double insulin_action_rate = 0.025;    // 1/min
    double insulin_clearance_rate = 0.04;  // 1/min
    double basal_rate = 1.0;               // U/hr
    double carb_ratio = 12.0;              // g per U
    double basal_glucose = 120.0;          // mg/dL

    double carb_factor() const { return insulin_sensitivity / carb_ratio; }

    /// Plasma insulin at the basal steady state (U).
    double basal_insulin() const { return basal_rate / 60.0 / insulin_clearance_rate; }

    friend bool operator==(const PatientParams&, const PatientParams&) = default;
};

struct Range {
    double lo;
    double hi;
};

inline Range weight_range(PatientGroup g) {
    switch (g) {
        case PatientGroup::Child: return {20.0, 60.0};
        case PatientGroup::Adolescent: return {35.0, 90.0};
        case PatientGroup::Adult: return {50.0, 118.0};
    }
    return {0.0, 0.0};
}

/// Nominal age span represented by each group (years); used by the data audit.
inline Range age_range(PatientGroup g) {
    switch (g) {
        case PatientGroup::Child: return {7.0, 12.0};
        case PatientGroup::Adolescent: return {13.0, 19.0};
        case PatientGroup::Adult: return {20.0, 64.0};
    }
    return {0.0, 0.0};
}

inline void validate(const PatientParams& p) {
    auto positive = [&](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ValidationError("patient " + p.id + ": " + name + " must be positive and finite");
    };
    positive(p.insulin_sensitivity, "insulin_sensitivity");
    positive(p.glucose_effectiveness, "glucose_effectiveness");
    positive(p.gut_absorption_rate, "gut_absorption_rate");
    positive(p.insulin_action_rate, "insulin_action_rate");
    positive(p.insulin_clearance_rate, "insulin_clearance_rate");
    positive(p.basal_rate, "basal_rate");
    positive(p.carb_ratio, "carb_ratio");
    if (!(p.carb_bioavailability > 0.0 && p.carb_bioavailability <= 1.0))
        throw ValidationError("patient " + p.id + ": carb_bioavailability must lie in (0,1]");
    if (!(p.basal_glucose >= 90.0 && p.basal_glucose <= 140.0))
        throw ValidationError("patient " + p.id + ": basal_glucose must lie in [90,140]");
    const auto w = weight_range(p.group);
    if (!(p.body_weight >= w.lo && p.body_weight <= w.hi))
        throw ValidationError("patient " + p.id + ": body weight outside the " +
                              std::string(to_string(p.group)) + " range");
}

namespace detail {

struct GroupRanges {
    Range insulin_sensitivity, glucose_effectiveness, carb_bioavailability, gut_absorption_rate,
        insulin_action_rate, insulin_clearance_rate, basal_rate, carb_ratio, basal_glucose;
};

inline GroupRanges group_ranges(PatientGroup g) {
    // Shared kinetics; therapy settings differ by group.
    GroupRanges r{};
    r.glucose_effectiveness = {0.005, 0.012};
    r.carb_bioavailability = {0.75, 1.0};
    r.gut_absorption_rate = {0.02, 0.045};
    r.insulin_action_rate = {0.015, 0.03};
    r.insulin_clearance_rate = {0.025, 0.05};
    r.basal_glucose = {100.0, 140.0};
    switch (g) {
        case PatientGroup::Adult:
            r.insulin_sensitivity = {30.0, 60.0};
            r.carb_ratio = {8.0, 15.0};
            r.basal_rate = {0.6, 1.4};
            break;
        case PatientGroup::Adolescent:
            r.insulin_sensitivity = {40.0, 80.0};
            r.carb_ratio = {10.0, 20.0};
            r.basal_rate = {0.5, 1.2};
            break;
        case PatientGroup::Child:
            r.insulin_sensitivity = {60.0, 120.0};
            r.carb_ratio = {15.0, 30.0};
            r.basal_rate = {0.2, 0.6};
            break;
    }
    return r;
}

inline std::string patient_id(PatientGroup g, std::size_t index) {
    std::string prefix = g == PatientGroup::Adult ? "adult" : g == PatientGroup::Adolescent ? "adolescent" : "child";
    auto num = std::to_string(index + 1);
    if (num.size() < 3) num.insert(0, 3 - num.size(), '0');
    return prefix + "_" + num;
}

}  // namespace detail

/// `n_per_group` patients for each of Adolescent, Adult, Child (in that
/// order), parameters drawn uniformly from the group ranges.
inline std::vector<PatientParams> sample_cohort(std::size_t n_per_group, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<PatientParams> out;
    out.reserve(3 * n_per_group);
    for (PatientGroup g : {PatientGroup::Adolescent, PatientGroup::Adult, PatientGroup::Child}) {
        const auto r = detail::group_ranges(g);
        const auto w = weight_range(g);
        auto draw = [&](Range range) { return std::uniform_real_distribution<double>(range.lo, range.hi)(rng); };
        for (std::size_t i = 0; i < n_per_group; ++i) {
            PatientParams p;
            p.id = detail::patient_id(g, i);
            p.group = g;
            p.body_weight = draw(w);
            p.insulin_sensitivity = draw(r.insulin_sensitivity);
            p.glucose_effectiveness = draw(r.glucose_effectiveness);
            p.carb_bioavailability = draw(r.carb_bioavailability);
            p.gut_absorption_rate = draw(r.gut_absorption_rate);
            p.insulin_action_rate = draw(r.insulin_action_rate);
            p.insulin_clearance_rate = draw(r.insulin_clearance_rate);
            p.basal_rate = draw(r.basal_rate);
            p.carb_ratio = draw(r.carb_ratio);
            p.basal_glucose = draw(r.basal_glucose);
            out.push_back(std::move(p));
        }
    }
    return out;
}

}  // namespace apsafe::sim
