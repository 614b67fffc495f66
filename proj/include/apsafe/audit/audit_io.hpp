#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "apsafe/audit/audit.hpp"
#include "apsafe/util/error.hpp"

namespace apsafe::audit {

namespace detail {

inline Range range_from(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 2 || v[0] > v[1]) throw ValidationError("range must be [lo, hi]");
    return {v[0], v[1]};
}

template <class T>
std::optional<T> opt(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

inline nlohmann::json load_json(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw Error("cannot open " + p.string());
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(p.string() + ": " + e.what());
    }
}

}  // namespace detail

inline Population population_from_json(const nlohmann::json& j) {
    Population p;
    p.age_years = detail::range_from(j.at("age_years"));
    p.weight_kg = detail::range_from(j.at("weight_kg"));
    p.sexes = j.value("sexes", std::vector<std::string>{});
    p.ethnicities = j.value("ethnicities", std::vector<std::string>{});
    return p;
}

inline nlohmann::json to_json(const Population& p) {
    return {{"age_years", {p.age_years.lo, p.age_years.hi}},
            {"weight_kg", {p.weight_kg.lo, p.weight_kg.hi}},
            {"sexes", p.sexes},
            {"ethnicities", p.ethnicities}};
}

/// Context JSON. `intended_population` may be omitted when the design spec
/// carries a `population` entry; see audit_inputs_from_json.
inline AuditContext context_from_json(const nlohmann::json& j) {
    try {
        AuditContext c;
        const auto origin = j.at("data_origin").get<std::string>();
        if (origin == "synthetic") c.data_origin = DataOrigin::Synthetic;
        else if (origin == "clinical") c.data_origin = DataOrigin::Clinical;
        else throw ValidationError("data_origin must be synthetic or clinical");
        c.sensor_model = detail::opt<std::string>(j, "sensor_model");
        c.insulin_type = detail::opt<std::string>(j, "insulin_type");
        c.diabetes_type = j.at("diabetes_type").get<std::string>();
        if (j.contains("intended_population")) c.intended_population = population_from_json(j.at("intended_population"));
        c.includes_exercise = j.value("includes_exercise", false);
        c.includes_illness = detail::opt<bool>(j, "includes_illness");
        c.data_sexes = detail::opt<std::vector<std::string>>(j, "data_sexes");
        c.data_ethnicities = detail::opt<std::vector<std::string>>(j, "data_ethnicities");
        c.sensor_positions = detail::opt<std::vector<std::string>>(j, "sensor_positions");
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed audit context: ") + e.what());
    }
}

inline nlohmann::json to_json(const AuditContext& c) {
    nlohmann::json j{{"data_origin", c.data_origin == DataOrigin::Synthetic ? "synthetic" : "clinical"},
                     {"diabetes_type", c.diabetes_type},
                     {"intended_population", to_json(c.intended_population)},
                     {"includes_exercise", c.includes_exercise}};
    if (c.sensor_model) j["sensor_model"] = *c.sensor_model;
    if (c.insulin_type) j["insulin_type"] = *c.insulin_type;
    if (c.includes_illness) j["includes_illness"] = *c.includes_illness;
    if (c.data_sexes) j["data_sexes"] = *c.data_sexes;
    if (c.data_ethnicities) j["data_ethnicities"] = *c.data_ethnicities;
    if (c.sensor_positions) j["sensor_positions"] = *c.sensor_positions;
    return j;
}

inline DesignSpec design_from_json(const nlohmann::json& j) {
    try {
        DesignSpec d;
        d.diabetes_type = j.at("diabetes_type").get<std::string>();
        d.daily_insulin_limit = j.at("daily_insulin_limit_U").get<double>();
        d.imbalance_threshold = j.value("imbalance_threshold", 20.0);
        d.sample_period = j.value("sample_period_min", 5L);
        d.insulin_type = detail::opt<std::string>(j, "insulin_type");
        d.sensor_positions = j.value("sensor_positions", std::vector<std::string>{});
        d.validate();
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("design spec: ") + e.what());
    }
}

inline nlohmann::json to_json(const DesignSpec& d) {
    nlohmann::json j{{"diabetes_type", d.diabetes_type},
                     {"daily_insulin_limit_U", d.daily_insulin_limit},
                     {"imbalance_threshold", d.imbalance_threshold},
                     {"sample_period_min", d.sample_period},
                     {"sensor_positions", d.sensor_positions}};
    if (d.insulin_type) j["insulin_type"] = *d.insulin_type;
    return j;
}

/// Builds context and design; a `population` in the design fills the
/// context's intended population when the context has none.
inline std::pair<AuditContext, DesignSpec> audit_inputs_from_json(const nlohmann::json& cj, const nlohmann::json& dj) {
    auto ctx = context_from_json(cj);
    auto spec = design_from_json(dj);
    if (!cj.contains("intended_population")) {
        if (!dj.contains("population"))
            throw ValidationError("intended population missing from both audit context and design spec");
        ctx.intended_population = population_from_json(dj.at("population"));
    }
    return {ctx, spec};
}

inline std::pair<AuditContext, DesignSpec> load_audit_inputs(const std::filesystem::path& context,
                                                              const std::filesystem::path& design) {
    return audit_inputs_from_json(detail::load_json(context), detail::load_json(design));
}

}  // namespace apsafe::audit
