#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "apsafe/sim/patient.hpp"
#include "apsafe/sim/trace.hpp"
#include "apsafe/util/error.hpp"
#include "apsafe/util/format.hpp"

namespace apsafe::audit {

enum class DataOrigin { Synthetic, Clinical };

enum class Status { Met, PartiallyMet, Violated, NotApplicable, Unknown };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::Met: return "Met";
        case Status::PartiallyMet: return "PartiallyMet";
        case Status::Violated: return "Violated";
        case Status::NotApplicable: return "NotApplicable";
        case Status::Unknown: return "Unknown";
    }
    return "?";
}

inline Status status_from_string(const std::string& s) {
    for (auto st : {Status::Met, Status::PartiallyMet, Status::Violated, Status::NotApplicable, Status::Unknown})
        if (s == to_string(st)) return st;
    throw ParseError("unknown requirement status '" + s + "'");
}

inline const std::array<const char*, 14>& requirement_ids() {
    static const std::array<const char*, 14> ids{"DR.R1", "DR.R2", "DR.R3", "DR.R4", "DR.R5", "DR.C1", "DR.C2",
                                                 "DR.C3", "DR.C4", "DR.C5", "DR.A1", "DR.A2", "DR.A3", "DR.B1"};
    return ids;
}

inline const std::map<std::string, std::string>& requirement_texts() {
    static const std::map<std::string, std::string> t{
        {"DR.R1", "Each data sample shall assume sensor positioning which is representative of that used on the patients"},
        {"DR.R2", "The format of each data sample shall be representative of that captured using sensors deployed on the body"},
        {"DR.R3", "The type of each data sample (insulin) shall be representative of that used"},
        {"DR.R4", "Each data sample shall represent the diabetes type for which the system is developed"},
        {"DR.R5", "Each data sample shall represent the sex, age, and ethnicity of the persons for which the system is developed"},
        {"DR.C1", "The data samples shall include examples with a sufficient range of meal carbs, different intraday meal intakes, and exercise"},
        {"DR.C2", "The data samples shall include examples with different sensor positioning"},
        {"DR.C3", "The data samples shall include examples with different ages and weights within the allowed ranges"},
        {"DR.C4", "The data samples shall include patients with frequent hypoglycemic, hyperglycemic, and ketoacidosis problems"},
        {"DR.C5", "The data samples shall include the profile of patients during the day and night and illness"},
        {"DR.A1", "Each data sample shall assume sensor positioning which is representative of that used on the patients"},
        {"DR.A2", "CGM sensor readings and pump infusions must be correctly recorded"},
        {"DR.A3", "The total insulin delivered must be within the limit in each data sample"},
        {"DR.B1", "The datasets shall have a comparable number of samples for features"}};
    return t;
}

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct Population {
    Range age_years{0.0, 0.0};
    Range weight_kg{0.0, 0.0};
    std::vector<std::string> sexes;
    std::vector<std::string> ethnicities;
};

/// How the data was collected, plus who the system is meant for.
struct AuditContext {
    DataOrigin data_origin = DataOrigin::Synthetic;
    std::optional<std::string> sensor_model;
    std::optional<std::string> insulin_type;
    std::string diabetes_type;
    Population intended_population;
    bool includes_exercise = false;
    std::optional<bool> includes_illness;
    // demographic and sensor metadata of the data itself, when recorded
    std::optional<std::vector<std::string>> data_sexes;
    std::optional<std::vector<std::string>> data_ethnicities;
    std::optional<std::vector<std::string>> sensor_positions;

    void validate() const {
        if (data_origin == DataOrigin::Clinical && (!sensor_model || !insulin_type))
            throw ValidationError("clinical data needs sensor_model and insulin_type in the audit context");
        if (diabetes_type.empty()) throw ValidationError("audit context needs diabetes_type");
    }
};

/// What the system was designed for; thresholds live here so auditors can
/// tighten them.
struct DesignSpec {
    std::string diabetes_type;
    double daily_insulin_limit = 0.0;  // U per patient-day
    double imbalance_threshold = 20.0;  // max/min class fraction
    long sample_period = 5;             // minutes
    std::optional<std::string> insulin_type;
    std::vector<std::string> sensor_positions;

    void validate() const {
        if (diabetes_type.empty()) throw ValidationError("design spec needs diabetes_type");
        if (!(daily_insulin_limit > 0.0)) throw ValidationError("design spec needs a positive daily_insulin_limit");
        if (!(imbalance_threshold >= 1.0)) throw ValidationError("imbalance_threshold must be at least 1");
        if (sample_period <= 0) throw ValidationError("sample_period must be positive");
    }
};

struct GlycemicFractions {
    double hypo = 0.0;
    double in_range = 0.0;
    double hyper = 0.0;
};

struct GlycemicCounts {
    std::size_t hypo = 0, in_range = 0, hyper = 0;

    std::size_t total() const { return hypo + in_range + hyper; }
};

inline GlycemicCounts glycemic_counts(const std::vector<double>& bg) {
    GlycemicCounts c;
    for (double v : bg) {
        if (v < 70.0) ++c.hypo;
        else if (v > 180.0) ++c.hyper;
        else ++c.in_range;
    }
    return c;
}

inline GlycemicFractions fractions(const GlycemicCounts& c) {
    if (c.total() == 0) throw ValidationError("no BG samples");
    const double n = static_cast<double>(c.total());
    GlycemicFractions f{static_cast<double>(c.hypo) / n, 0.0, static_cast<double>(c.hyper) / n};
    f.in_range = 1.0 - f.hypo - f.hyper;
    return f;
}

/// Below 70 mg/dL is hypo, above 180 is hyper, everything else in range.
inline GlycemicFractions glycemic_fractions(const std::vector<double>& bg) { return fractions(glycemic_counts(bg)); }

inline std::vector<double> all_bg(const std::vector<sim::SimTrace>& traces) {
    std::vector<double> out;
    for (const auto& t : traces)
        for (const auto& r : t.rows) out.push_back(r.bg);
    return out;
}

inline GlycemicFractions glycemic_fractions(const std::vector<sim::SimTrace>& traces) {
    return glycemic_fractions(all_bg(traces));
}

struct RequirementVerdict {
    std::string id;
    Status status = Status::Unknown;
    std::string rationale;
    nlohmann::json metrics = nlohmann::json::object();
};

struct AuditReport {
    std::vector<RequirementVerdict> requirements;
    GlycemicFractions fractions;

    const RequirementVerdict& at(const std::string& id) const {
        for (const auto& r : requirements)
            if (r.id == id) return r;
        throw ValidationError("report has no requirement " + id);
    }

    nlohmann::json to_json() const {
        nlohmann::json reqs = nlohmann::json::array();
        for (const auto& r : requirements)
            reqs.push_back({{"id", r.id}, {"status", to_string(r.status)}, {"rationale", r.rationale}, {"metrics", r.metrics}});
        return {{"kind", "audit"},
                {"requirements", reqs},
                {"glycemic_fractions", {{"hypo", fractions.hypo}, {"in_range", fractions.in_range}, {"hyper", fractions.hyper}}}};
    }

    static AuditReport from_json(const nlohmann::json& j) {
        try {
            AuditReport r;
            for (const auto& e : j.at("requirements"))
                r.requirements.push_back({e.at("id").get<std::string>(), status_from_string(e.at("status").get<std::string>()),
                                          e.value("rationale", ""), e.value("metrics", nlohmann::json::object())});
            if (j.contains("glycemic_fractions")) {
                const auto& f = j.at("glycemic_fractions");
                r.fractions = {f.at("hypo").get<double>(), f.at("in_range").get<double>(), f.at("hyper").get<double>()};
            }
            return r;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("malformed audit report: ") + e.what());
        }
    }
};

namespace detail {

inline bool covers_ages(const std::set<sim::PatientGroup>& groups, Range want, std::vector<std::string>& missing) {
    // whole years; a year is covered when some present group spans it
    bool ok = true;
    const auto lo = static_cast<long>(std::ceil(want.lo)), hi = static_cast<long>(std::floor(want.hi));
    long gap_start = -1;
    for (long a = lo; a <= hi + 1; ++a) {
        bool hit = false;
        for (auto g : groups) {
            const auto r = sim::age_range(g);
            hit = hit || (a >= r.lo && a <= r.hi);
        }
        if (a <= hi && !hit) {
            ok = false;
            if (gap_start < 0) gap_start = a;
        } else if (gap_start >= 0) {
            missing.push_back(std::to_string(gap_start) + "-" + std::to_string(a - 1));
            gap_start = -1;
        }
    }
    return ok;
}

inline std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
}

inline std::vector<std::string> not_in(const std::vector<std::string>& want, const std::vector<std::string>& have) {
    std::vector<std::string> out;
    for (const auto& w : want)
        if (std::find(have.begin(), have.end(), w) == have.end()) out.push_back(w);
    return out;
}

inline long day_of(double t, long period) { return t < static_cast<double>(period) ? 0 : static_cast<long>(std::floor((t - static_cast<double>(period)) / 1440.0)); }

}  // namespace detail

/// Checks every data requirement against the traces and collection context.
/// Pure: the same inputs always give the same report.
inline AuditReport audit(const std::vector<sim::SimTrace>& traces, const AuditContext& ctx, const DesignSpec& spec) {
    if (traces.empty()) throw ValidationError("audit needs at least one trace");
    ctx.validate();
    spec.validate();
    using nlohmann::json;
    std::map<std::string, RequirementVerdict> out;
    auto set = [&](const std::string& id, Status s, std::string why, json metrics = json::object()) {
        out[id] = {id, s, std::move(why), std::move(metrics)};
    };
    const bool synthetic = ctx.data_origin == DataOrigin::Synthetic;

    // sensor positioning and insulin type
    if (synthetic) {
        const std::string why = "synthetic data: no physical sensor placement or insulin product to compare";
        set("DR.R1", Status::NotApplicable, why);
        set("DR.A1", Status::NotApplicable, why);
        set("DR.R3", Status::NotApplicable, why);
        set("DR.C2", Status::NotApplicable, why);
    } else {
        if (!ctx.sensor_positions || spec.sensor_positions.empty()) {
            set("DR.R1", Status::Unknown, "sensor positions not recorded or not specified by the design");
            set("DR.A1", Status::Unknown, "sensor positions not recorded or not specified by the design");
        } else {
            const auto odd = detail::not_in(*ctx.sensor_positions, spec.sensor_positions);
            const auto s = odd.empty() ? Status::Met : Status::Violated;
            const auto why = odd.empty() ? "all recorded sensor positions are ones used on patients"
                                         : "positions not used on patients: " + detail::join(odd);
            set("DR.R1", s, why, {{"positions", *ctx.sensor_positions}});
            set("DR.A1", s, why, {{"positions", *ctx.sensor_positions}});
        }
        if (!spec.insulin_type) set("DR.R3", Status::Unknown, "design does not name an insulin type");
        else if (*spec.insulin_type == *ctx.insulin_type)
            set("DR.R3", Status::Met, "insulin type matches the design", {{"insulin_type", *ctx.insulin_type}});
        else
            set("DR.R3", Status::Violated, "data uses " + *ctx.insulin_type + ", design uses " + *spec.insulin_type);
        if (!ctx.sensor_positions) set("DR.C2", Status::Unknown, "sensor positions not recorded");
        else {
            const auto missing = detail::not_in(spec.sensor_positions, *ctx.sensor_positions);
            const bool varied = ctx.sensor_positions->size() >= 2 && missing.empty();
            set("DR.C2", varied ? Status::Met : Status::Violated,
                varied ? "several sensor positions, all design positions present"
                       : "sensor positions missing or not varied: " + detail::join(missing),
                {{"positions", *ctx.sensor_positions}});
        }
    }

    // CGM format
    {
        std::size_t bad = 0;
        std::string first;
        for (const auto& t : traces) {
            bool ok = t.sample_period == spec.sample_period;
            for (std::size_t k = 0; ok && k < t.rows.size(); ++k)
                ok = t.rows[k].t == static_cast<double>(static_cast<long>(k) * spec.sample_period);
            if (!ok) {
                ++bad;
                if (first.empty()) first = t.patient_id;
            }
        }
        json m{{"traces", traces.size()}, {"off_format", bad}, {"sample_period_min", spec.sample_period}};
        if (bad == 0)
            set("DR.R2", Status::Met,
                "every trace is a " + std::to_string(spec.sample_period) + "-minute CGM series", m);
        else {
            m["first_off_format"] = first;
            set("DR.R2", Status::Violated, std::to_string(bad) + " trace(s) break the CGM sampling format", m);
        }
    }

    // diabetes type
    if (ctx.diabetes_type == spec.diabetes_type)
        set("DR.R4", Status::Met, "data represents " + spec.diabetes_type, {{"diabetes_type", ctx.diabetes_type}});
    else
        set("DR.R4", Status::Violated, "data represents " + ctx.diabetes_type + ", system targets " + spec.diabetes_type,
            {{"diabetes_type", ctx.diabetes_type}});

    // population coverage
    std::set<sim::PatientGroup> groups;
    std::map<std::string, std::size_t> group_rows, group_patients;
    double wmin = 1e300, wmax = -1e300;
    for (const auto& t : traces) {
        groups.insert(t.group);
        group_rows[std::string(sim::to_string(t.group))] += t.rows.size();
        ++group_patients[std::string(sim::to_string(t.group))];
        wmin = std::min(wmin, t.weight_kg);
        wmax = std::max(wmax, t.weight_kg);
    }
    std::vector<std::string> missing_ages;
    const bool ages_ok = detail::covers_ages(groups, ctx.intended_population.age_years, missing_ages);
    const auto& iw = ctx.intended_population.weight_kg;
    const bool weights_ok = iw.lo >= wmin && iw.hi <= wmax;
    json pop{{"groups", group_patients},
             {"weight_kg_present", {wmin, wmax}},
             {"weight_kg_intended", {iw.lo, iw.hi}},
             {"age_years_intended", {ctx.intended_population.age_years.lo, ctx.intended_population.age_years.hi}},
             {"ages_missing", missing_ages}};
    {
        json m = pop;
        std::vector<std::string> problems, unknown;
        if (!ages_ok) problems.push_back("ages " + detail::join(missing_ages) + " not represented");
        auto demographic = [&](const char* name, const std::optional<std::vector<std::string>>& have,
                               const std::vector<std::string>& want) {
            if (!have) {
                m[name] = "Unknown";
                unknown.push_back(name);
                return;
            }
            const auto miss = detail::not_in(want, *have);
            m[name] = miss.empty() ? json("covered") : json(miss);
            if (!miss.empty()) problems.push_back(std::string(name) + " " + detail::join(miss) + " not represented");
        };
        demographic("sex", ctx.data_sexes, ctx.intended_population.sexes);
        demographic("ethnicity", ctx.data_ethnicities, ctx.intended_population.ethnicities);
        std::string why = problems.empty() ? "intended ages covered" : detail::join(problems);
        if (!unknown.empty()) why += "; " + detail::join(unknown) + " of the data not recorded";
        const auto s = !problems.empty() ? Status::Violated : !unknown.empty() ? Status::Unknown : Status::Met;
        set("DR.R5", s, why, m);
    }
    {
        std::vector<std::string> problems;
        if (!ages_ok) problems.push_back("ages " + detail::join(missing_ages) + " not represented");
        if (!weights_ok)
            problems.push_back("weights outside " + util::format_double(wmin) + "-" + util::format_double(wmax) +
                               " kg not represented");
        set("DR.C3", problems.empty() ? Status::Met : Status::Violated,
            problems.empty() ? "intended ages and weights covered" : detail::join(problems), pop);
    }

    // meals and exercise
    {
        std::set<double> sizes;
        std::set<long> hours;
        std::size_t meals = 0;
        for (const auto& t : traces)
            for (const auto& r : t.rows)
                if (r.meal > 0.0) {
                    ++meals;
                    sizes.insert(std::round(r.meal));
                    hours.insert(static_cast<long>(std::fmod(r.t, 1440.0) / 60.0));
                }
        const bool varied = sizes.size() >= 2 && hours.size() >= 2;
        json m{{"meal_events", meals}, {"distinct_carb_amounts", sizes.size()}, {"meal_hours", hours.size()},
               {"exercise", ctx.includes_exercise}};
        if (!varied) set("DR.C1", Status::Violated, "meal sizes or meal times do not vary", m);
        else if (!ctx.includes_exercise)
            set("DR.C1", Status::PartiallyMet, "meals vary but the data does not include exercise information", m);
        else set("DR.C1", Status::Met, "varied meals and exercise present", m);
    }

    // glycemic extremes
    const auto counts = glycemic_counts(all_bg(traces));
    const auto fr = fractions(counts);
    {
        json m{{"hypo_fraction", fr.hypo}, {"in_range_fraction", fr.in_range}, {"hyper_fraction", fr.hyper},
               {"hypo_samples", counts.hypo}, {"hyper_samples", counts.hyper}};
        const bool ok = counts.hypo > 0 && counts.hyper > 0;
        set("DR.C4", ok ? Status::Met : Status::Violated,
            ok ? "both hypoglycemic and hyperglycemic samples present (ketoacidosis is not modelled)"
               : "hypoglycemic or hyperglycemic samples missing",
            m);
    }

    // illness
    if (!ctx.includes_illness) set("DR.C5", Status::Unknown, "not known whether the data generation considers illness");
    else if (*ctx.includes_illness) set("DR.C5", Status::Met, "day, night and illness profiles present");
    else set("DR.C5", Status::Violated, "the data does not include illness");

    // recording accuracy
    {
        std::string problem;
        for (const auto& t : traces) {
            for (std::size_t k = 0; k < t.rows.size() && problem.empty(); ++k) {
                const auto& r = t.rows[k];
                const auto where = " (" + t.patient_id + ", t=" + util::format_double(r.t) + ")";
                if (!std::isfinite(r.t) || !std::isfinite(r.bg) || !std::isfinite(r.insulin) || !std::isfinite(r.meal))
                    problem = "non-finite value" + where;
                else if (r.insulin < 0.0 || r.meal < 0.0) problem = "negative insulin or meal" + where;
                else if (!(r.bg > 0.0)) problem = "BG not recorded" + where;
                else if (k > 0 && r.t - t.rows[k - 1].t != static_cast<double>(t.sample_period))
                    problem = "missing sensor period" + where;
            }
            if (!problem.empty()) break;
        }
        if (problem.empty()) set("DR.A2", Status::Met, "all readings and infusions finite, non-negative and periodic");
        else set("DR.A2", Status::Violated, problem);
    }

    // daily insulin limit
    {
        double worst = 0.0;
        std::string worst_patient;
        long worst_day = 0;
        std::size_t over = 0;
        for (const auto& t : traces) {
            std::map<long, double> days;
            for (const auto& r : t.rows) days[detail::day_of(r.t, t.sample_period)] += r.insulin;
            for (const auto& [d, total] : days) {
                if (total > spec.daily_insulin_limit) ++over;
                if (total > worst) {
                    worst = total;
                    worst_patient = t.patient_id;
                    worst_day = d;
                }
            }
        }
        json m{{"limit_U", spec.daily_insulin_limit}, {"max_daily_U", worst}, {"max_patient", worst_patient},
               {"max_day", worst_day}, {"days_over_limit", over}};
        if (over == 0) set("DR.A3", Status::Met, "every patient-day stays within the insulin limit", m);
        else
            set("DR.A3", Status::Violated,
                std::to_string(over) + " patient-day(s) exceed the limit; worst " + worst_patient + " day " +
                    std::to_string(worst_day),
                m);
    }

    // balance
    {
        auto ratio = [](const std::vector<std::size_t>& v) {
            std::size_t mx = 0, mn = 0;
            for (auto c : v) {
                if (c == 0) continue;
                mx = std::max(mx, c);
                mn = mn == 0 ? c : std::min(mn, c);
            }
            return mn == 0 ? 1.0 : static_cast<double>(mx) / static_cast<double>(mn);
        };
        std::vector<std::size_t> gv;
        for (const auto& [g, n] : group_rows) gv.push_back(n);
        const double glyc = ratio({counts.hypo, counts.in_range, counts.hyper});
        const double grp = ratio(gv);
        json m{{"glycemic_ratio", glyc}, {"group_ratio", grp}, {"threshold", spec.imbalance_threshold},
               {"group_samples", group_rows}};
        std::vector<std::string> bad;
        if (glyc > spec.imbalance_threshold) bad.push_back("glycemic classes");
        if (grp > spec.imbalance_threshold) bad.push_back("patient groups");
        std::string why = bad.empty() ? "class ratios within the threshold" : "imbalanced: " + detail::join(bad);
        if (grp > 1.0) why += "; patient groups have unequal sample counts";
        set("DR.B1", bad.empty() ? Status::Met : Status::Violated, why, m);
    }

    AuditReport report;
    report.fractions = fr;
    for (const auto* id : requirement_ids()) report.requirements.push_back(out.at(id));
    return report;
}

inline std::string render_text(const AuditReport& r) {
    std::ostringstream os;
    for (const auto& v : r.requirements) {
        os << v.id << "  " << to_string(v.status) << "  " << v.rationale;
        if (!v.metrics.empty()) os << "  " << v.metrics.dump();
        os << "\n";
    }
    return os.str();
}

inline std::string render_report(const AuditReport& r, const std::string& format) {
    if (format == "json") return r.to_json().dump(2) + "\n";
    if (format == "text") return render_text(r);
    throw ValidationError("unknown report format '" + format + "'");
}

}  // namespace apsafe::audit
