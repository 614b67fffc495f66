#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "apsafe/sim/patient.hpp"
#include "apsafe/sim/trace.hpp"
#include "apsafe/util/error.hpp"
#include "apsafe/util/format.hpp"
#include "json.hpp"

namespace apsafe::sim {

inline constexpr const char* kTraceHeader = "t_min,bg_mgdl,insulin_U,meal_g";
inline constexpr const char* kTraceMetaHeader = "# patient_id,group,weight_kg,seed";

/// Trace CSV:
///   # patient_id,group,weight_kg,seed
///   # adult_001,Adult,71.2,12345
///   # sample_period_min,5
///   t_min,bg_mgdl,insulin_U,meal_g
///   0,120,0,0
///   ...
/// Numbers are written in shortest round-trip form.
inline void write_trace_csv(std::ostream& os, const SimTrace& trace) {
    using util::format_double;
    os << kTraceMetaHeader << '\n';
    os << "# " << trace.patient_id << ',' << to_string(trace.group) << ',' << format_double(trace.weight_kg) << ','
       << trace.seed << '\n';
    os << "# sample_period_min," << trace.sample_period << '\n';
    os << kTraceHeader << '\n';
    for (const auto& r : trace.rows)
        os << format_double(r.t) << ',' << format_double(r.bg) << ',' << format_double(r.insulin) << ','
           << format_double(r.meal) << '\n';
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(util::trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

inline SimTrace read_trace_csv(std::istream& is) {
    SimTrace trace;
    std::string line;
    std::size_t lineno = 0;
    bool have_meta = false, have_header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            if (line[0] == '#') {
                auto body = util::trim(line.substr(1));
                if (body == std::string(kTraceMetaHeader).substr(2)) continue;
                auto cells = detail::split_csv(body);
                if (cells.size() == 2 && cells[0] == "sample_period_min") {
                    trace.sample_period = std::stol(cells[1]);
                } else if (!have_meta && cells.size() == 4) {
                    trace.patient_id = cells[0];
                    trace.group = parse_group(cells[1]);
                    trace.weight_kg = util::parse_double(cells[2]);
                    trace.seed = std::stoull(cells[3]);
                    have_meta = true;
                }
                continue;
            }
            if (!have_header) {
                if (line != kTraceHeader) throw ParseError("expected header '" + std::string(kTraceHeader) + "'", lineno, 1);
                have_header = true;
                continue;
            }
            auto cells = detail::split_csv(line);
            if (cells.size() != 4) throw ParseError("expected 4 columns", lineno, 1);
            trace.rows.push_back({util::parse_double(cells[0]), util::parse_double(cells[1]),
                                  util::parse_double(cells[2]), util::parse_double(cells[3])});
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(e.what(), lineno, 1);
        }
    }
    if (!have_meta) throw ParseError("missing patient metadata preamble");
    if (!have_header) throw ParseError("missing column header");
    return trace;
}

inline void export_trace(const SimTrace& trace, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    write_trace_csv(os, trace);
}

inline SimTrace import_trace(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path.string());
    try {
        return read_trace_csv(is);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Cohort manifest (cohort.json)

struct CohortEntry {
    PatientParams params;
    std::string file;  // relative to the manifest directory
    std::uint64_t seed = 0;
    bool accepted = true;
    std::string reject_reason;
};

struct CohortManifest {
    long days = 0;
    long sample_period = 5;
    std::uint64_t seed = 0;
    std::vector<CohortEntry> patients;
};

inline nlohmann::json params_to_json(const PatientParams& p) {
    return {{"id", p.id},
            {"group", std::string(to_string(p.group))},
            {"body_weight", p.body_weight},
            {"insulin_sensitivity", p.insulin_sensitivity},
            {"glucose_effectiveness", p.glucose_effectiveness},
            {"carb_bioavailability", p.carb_bioavailability},
            {"gut_absorption_rate", p.gut_absorption_rate},
            {"insulin_action_rate", p.insulin_action_rate},
            {"insulin_clearance_rate", p.insulin_clearance_rate},
            {"basal_rate", p.basal_rate},
            {"carb_ratio", p.carb_ratio},
            {"basal_glucose", p.basal_glucose}};
}

inline PatientParams params_from_json(const nlohmann::json& j) {
    PatientParams p;
    p.id = j.at("id").get<std::string>();
    p.group = parse_group(j.at("group").get<std::string>());
    p.body_weight = j.at("body_weight").get<double>();
    p.insulin_sensitivity = j.at("insulin_sensitivity").get<double>();
    p.glucose_effectiveness = j.at("glucose_effectiveness").get<double>();
    p.carb_bioavailability = j.at("carb_bioavailability").get<double>();
    p.gut_absorption_rate = j.at("gut_absorption_rate").get<double>();
    p.insulin_action_rate = j.at("insulin_action_rate").get<double>();
    p.insulin_clearance_rate = j.at("insulin_clearance_rate").get<double>();
    p.basal_rate = j.at("basal_rate").get<double>();
    p.carb_ratio = j.at("carb_ratio").get<double>();
    p.basal_glucose = j.at("basal_glucose").get<double>();
    return p;
}

inline nlohmann::json to_json(const CohortManifest& m) {
    nlohmann::json patients = nlohmann::json::array();
    for (const auto& e : m.patients)
        patients.push_back({{"file", e.file},
                            {"seed", e.seed},
                            {"accepted", e.accepted},
                            {"reject_reason", e.reject_reason},
                            {"params", params_to_json(e.params)}});
    return {{"version", 1}, {"days", m.days}, {"sample_period_min", m.sample_period}, {"seed", m.seed},
            {"patients", patients}};
}

inline CohortManifest manifest_from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != 1) throw UnsupportedVersion("unsupported cohort manifest version");
    CohortManifest m;
    m.days = j.at("days").get<long>();
    m.sample_period = j.at("sample_period_min").get<long>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("patients")) {
        CohortEntry entry;
        entry.file = e.at("file").get<std::string>();
        entry.seed = e.at("seed").get<std::uint64_t>();
        entry.accepted = e.at("accepted").get<bool>();
        entry.reject_reason = e.value("reject_reason", "");
        entry.params = params_from_json(e.at("params"));
        m.patients.push_back(std::move(entry));
    }
    return m;
}

inline constexpr const char* kManifestName = "cohort.json";

inline void write_manifest(const CohortManifest& m, const std::filesystem::path& dir) {
    std::ofstream os(dir / kManifestName);
    if (!os) throw Error("cannot write " + (dir / kManifestName).string());
    os << to_json(m).dump(2) << '\n';
}

inline CohortManifest read_manifest(const std::filesystem::path& dir) {
    const auto path = dir / kManifestName;
    std::ifstream is(path);
    if (!is) throw Error("cannot read cohort manifest " + path.string());
    try {
        return manifest_from_json(nlohmann::json::parse(is));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

/// Accepted traces listed in a cohort directory, in manifest order.
inline std::vector<SimTrace> load_accepted_traces(const std::filesystem::path& dir) {
    const auto manifest = read_manifest(dir);
    std::vector<SimTrace> out;
    for (const auto& e : manifest.patients)
        if (e.accepted) out.push_back(import_trace(dir / e.file));
    return out;
}

}  // namespace apsafe::sim
