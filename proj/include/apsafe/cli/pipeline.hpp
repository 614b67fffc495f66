#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "apsafe/audit/audit.hpp"
#include "apsafe/audit/audit_io.hpp"
#include "apsafe/data/dataset.hpp"
#include "apsafe/data/metrics.hpp"
#include "apsafe/gsn/case.hpp"
#include "apsafe/gsn/case_io.hpp"
#include "apsafe/gsn/evidence.hpp"
#include "apsafe/gsn/template.hpp"
#include "apsafe/nn/model_io.hpp"
#include "apsafe/nn/train.hpp"
#include "apsafe/prop/dsl.hpp"
#include "apsafe/prop/reference_queries.hpp"
#include "apsafe/prop/templates.hpp"
#include "apsafe/sim/cohort.hpp"
#include "apsafe/sim/trace_io.hpp"
#include "apsafe/util/error.hpp"
#include "apsafe/verify/verifier.hpp"

namespace apsafe::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

/// Worker cap from APS_ASSURE_THREADS, else the hardware concurrency.
inline unsigned thread_cap() {
    if (const char* env = std::getenv("APS_ASSURE_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) throw ValidationError("APS_ASSURE_THREADS must be a positive integer");
        return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers; the first
/// exception is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline json read_json(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw Error("cannot open " + p.string());
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw ParseError(p.string() + ": " + e.what());
    }
}

inline void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(p);
    if (!os) throw Error("cannot write " + p.string());
    os << text;
}

inline void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline void require_file(const fs::path& p, const std::string& what) {
    if (!fs::is_regular_file(p)) throw Error(what + " not found: " + p.string());
}

// ---------------------------------------------------------------------------
// simulate

/// `n` patients taken round-robin over the adolescent, adult and child groups.
inline std::vector<sim::PatientParams> cohort_of(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ValidationError("at least one patient is required");
    const std::size_t per_group = (n + 2) / 3;
    const auto all = sim::sample_cohort(per_group, seed);
    std::vector<sim::PatientParams> out;
    for (std::size_t i = 0; out.size() < n; ++i)
        for (std::size_t g = 0; g < 3 && out.size() < n; ++g) out.push_back(all[g * per_group + i]);
    return out;
}

struct SimulateSummary {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::vector<std::size_t> rows;  // per accepted trace
};

inline SimulateSummary simulate(std::size_t patients, long days, std::uint64_t seed, const fs::path& out,
                                double noise_sd = 0.0, unsigned threads = 1) {
    sim::SimConfig cfg;
    cfg.days = days;
    cfg.seed = seed;
    cfg.cgm_noise_sd = noise_sd;
    cfg.validate();
    const auto results = sim::simulate_cohort(cohort_of(patients, seed), cfg, threads);
    fs::create_directories(out);
    sim::CohortManifest manifest;
    manifest.days = days;
    manifest.sample_period = cfg.sample_period;
    manifest.seed = seed;
    SimulateSummary summary;
    for (const auto& r : results) {
        sim::CohortEntry e;
        e.params = r.params;
        e.seed = r.seed;
        e.accepted = r.validation.accepted;
        e.reject_reason = r.validation.reason;
        if (e.accepted) {
            e.file = r.params.id + ".csv";
            sim::export_trace(r.trace, out / e.file);
            ++summary.accepted;
            summary.rows.push_back(r.trace.rows.size());
        } else {
            ++summary.rejected;
        }
        manifest.patients.push_back(std::move(e));
    }
    sim::write_manifest(manifest, out);
    return summary;
}

// ---------------------------------------------------------------------------
// train / evaluate / ablate

struct Split {
    data::Dataset train;
    data::Dataset test;
};

inline constexpr double kTrainFraction = 0.8;

inline Split load_split(const fs::path& cohort_dir, std::uint64_t split_seed) {
    const auto traces = sim::load_accepted_traces(cohort_dir);
    if (traces.empty()) throw ValidationError("no accepted traces in " + cohort_dir.string());
    auto [train, test] = data::split(data::make_dataset(traces), kTrainFraction, split_seed);
    return {std::move(train), std::move(test)};
}

inline std::string loss_csv(const nn::LossHistory& h) {
    std::ostringstream os;
    os << "epoch,train_mse,validation_mse\n" << std::setprecision(17);
    for (std::size_t i = 0; i < h.size(); ++i)
        os << i + 1 << ',' << h[i].train_loss << ',' << h[i].validation_loss << '\n';
    return os.str();
}

/// Worst single-patient RMSE on the test windows, as rmse evidence for the
/// robustness claim over different patients.
inline json per_patient_rmse(const nn::Network& net, const data::Dataset& test, double threshold) {
    std::map<std::string, std::vector<std::size_t>> by_patient;
    for (std::size_t i = 0; i < test.size(); ++i) by_patient[test.provenance()[i].patient_id].push_back(i);
    json patients = json::object();
    double worst = 0.0;
    for (const auto& [id, idx] : by_patient) {
        const double r = data::rmse(net, test.subset(idx));
        patients[id] = r;
        worst = std::max(worst, r);
    }
    return {{"kind", "rmse"},     {"scope", "per_patient_max"}, {"value", worst},
            {"threshold", threshold}, {"pass", worst < threshold}, {"per_patient", patients},
            {"windows", test.size()}, {"model_hash", nn::model_hash(net)}};
}

/// Evidence about the training run: the final validation RMSE is below the
/// threshold and the validation loss has not drifted more than 25% above its
/// best epoch.
inline json learning_evidence(const nn::LossHistory& h, double threshold) {
    if (h.empty()) throw ValidationError("empty loss history");
    double best = h.front().validation_loss;
    for (const auto& e : h) best = std::min(best, e.validation_loss);
    const double last = h.back().validation_loss;
    const double value = std::sqrt(last);
    const bool settled = last <= 1.25 * best;
    return {{"kind", "rmse"},
            {"scope", "validation"},
            {"value", value},
            {"threshold", threshold},
            {"pass", value < threshold && settled},
            {"best_validation_rmse", std::sqrt(best)},
            {"final_train_rmse", std::sqrt(h.back().train_loss)},
            {"epochs", h.size()}};
}

struct AblationRow {
    std::size_t h1 = 0;
    std::size_t h2 = 0;
    double rmse = 0.0;
};

inline std::vector<AblationRow> ablate(const Split& split, const std::vector<std::size_t>& h1s, std::size_t h2,
                                       const nn::TrainingConfig& base, unsigned threads) {
    std::vector<AblationRow> rows(h1s.size());
    parallel_for(h1s.size(), threads, [&](std::size_t i) {
        nn::TrainingConfig cfg = base;
        cfg.hidden = {h1s[i], h2};
        const auto net = nn::train(split.train, cfg).network;
        rows[i] = {h1s[i], h2, data::rmse(net, split.test)};
    });
    return rows;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "h1,h2,rmse\n" << std::setprecision(10);
    for (const auto& r : rows) os << r.h1 << ',' << r.h2 << ',' << r.rmse << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// verification suites

struct SuiteEntry {
    std::string label;
    prop::Property property;
};

namespace detail {

inline prop::Interval interval_from(const json& v, const std::string& key) {
    if (v.is_string() && v.get<std::string>() == "unit_interval") return {0.0, 1.0};
    if (v.is_number()) return {v.get<double>(), v.get<double>()};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw ParseError("box entry '" + key + "' must be a number, [lo, hi] or \"unit_interval\"");
}

inline prop::Chan input_channel(const std::string& name) {
    if (name == "BG_in") return prop::Chan::BG_in;
    if (name == "In_in") return prop::Chan::In_in;
    if (name == "M_in") return prop::Chan::M_in;
    throw ParseError("unknown input channel '" + name + "'");
}

/// Keys are a channel (`BG_in`) or one timestep (`In_in[11]`); whole
/// channels are applied first so single steps override them.
inline prop::BoxSpec box_from(const json& j) {
    prop::BoxSpec box = prop::empty_box();
    if (j.is_null()) return box;
    if (!j.is_object()) throw ParseError("box must be an object");
    static const std::regex key_re(R"(^(BG_in|In_in|M_in)(?:\[(\d+)\])?$)");
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& [key, value] : j.items()) {
            std::smatch m;
            if (!std::regex_match(key, m, key_re)) throw ParseError("bad box key '" + key + "'");
            const bool single = m[2].matched;
            if (single != (pass == 1)) continue;
            const auto chan = input_channel(m[1]);
            const auto iv = interval_from(value, key);
            if (!single) {
                prop::set_channel(box, chan, iv);
            } else {
                const auto idx = static_cast<std::size_t>(std::stoul(m[2]));
                if (idx >= data::kInputSteps) throw ParseError("box key '" + key + "' index out of range");
                prop::set_input(box, {chan, idx}, iv);
            }
        }
    }
    return box;
}

}  // namespace detail

/// Suite document:
///   {"units": "mixed", "reference_queries": true,
///    "properties": [{"id": "ML-RQ1.4", "label": "...", "thresholds": {...}, "box": {...}},
///                   {"dsl": "property ... { ... }"}]}
inline std::vector<SuiteEntry> suite_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("suite must be an object");
    std::vector<SuiteEntry> out;
    try {
        const auto units = prop::parse_unit_mode(j.value("units", std::string("native")));
        if (j.value("reference_queries", false))
            for (const auto& q : prop::reference_queries()) out.push_back({q.label, q.property()});
        for (const auto& e : j.value("properties", json::array())) {
            if (e.contains("dsl")) {
                auto p = prop::parse_dsl(e.at("dsl").get<std::string>());
                out.push_back({e.value("label", p.id), std::move(p)});
                continue;
            }
            const auto id = e.at("id").get<std::string>();
            const auto thresholds = e.value("thresholds", std::map<std::string, double>{});
            auto p = prop::instantiate(id, thresholds, detail::box_from(e.value("box", json())),
                                       e.contains("units") ? prop::parse_unit_mode(e.at("units").get<std::string>()) : units);
            out.push_back({e.value("label", id), std::move(p)});
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed suite: ") + e.what());
    }
    if (out.empty()) throw ValidationError("suite has no properties");
    return out;
}

struct SuiteResult {
    std::string label;
    verify::Verdict verdict;
};

inline std::vector<SuiteResult> run_suite(const nn::Network& net, const std::vector<SuiteEntry>& suite,
                                          const verify::VerifierConfig& cfg, unsigned threads) {
    std::vector<SuiteResult> out(suite.size());
    parallel_for(suite.size(), threads, [&](std::size_t i) {
        out[i] = {suite[i].label, verify::verify(net, suite[i].property, cfg)};
    });
    return out;
}

/// "03_ML-RQ1.8.json": suite position first so listings keep suite order.
inline std::string verdict_file_name(std::size_t index, const std::string& property_id) {
    std::ostringstream name;
    name << std::setw(2) << std::setfill('0') << index + 1 << '_' << property_id << ".json";
    return name.str();
}

inline json suite_report_json(const std::vector<SuiteResult>& results, const nn::Network& net) {
    json rows = json::array();
    for (const auto& r : results) {
        json v = r.verdict.to_json(&net.scaler());
        v["label"] = r.label;
        rows.push_back(std::move(v));
    }
    return {{"kind", "verification_suite"}, {"model_hash", nn::model_hash(net)}, {"rows", rows}};
}

/// One row per query: property, query, verdict, time.
inline std::string suite_report_text(const std::vector<SuiteResult>& results) {
    std::ostringstream os;
    os << std::left << std::setw(10) << "property" << "  " << std::setw(58) << "query" << "  " << std::setw(14)
       << "verdict" << "  time_s\n";
    for (const auto& r : results) {
        std::string outcome = verify::to_string(r.verdict.outcome);
        if (r.verdict.outcome == verify::Outcome::Unknown) outcome += "(" + r.verdict.reason + ")";
        if (r.verdict.vacuous) outcome += "*";
        os << std::setw(10) << r.verdict.property_id << "  " << std::setw(58) << r.label << "  " << std::setw(14)
           << outcome << "  " << std::fixed << std::setprecision(3) << r.verdict.stats.wall_time << '\n';
        os.unsetf(std::ios::floatfield);
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// assurance case helpers

inline gsn::Profile profile_from_json(const json& j) {
    gsn::Profile p;
    const auto mode = j.value("mode", std::string("population"));
    if (mode == "population") p.mode = gsn::Profile::Mode::Population;
    else if (mode == "patient") p.mode = gsn::Profile::Mode::Patient;
    else throw ValidationError("profile mode must be patient or population");
    const json values = j.value("values", json::object());
    if (!values.is_object()) throw ParseError("profile values must be an object");
    for (const auto& [k, v] : values.items())
        p.values[k] = v.is_string() ? v.get<std::string>() : v.dump();
    return p;
}

/// Reads an evidence document and binds it. Verdicts go to the solution for
/// their property unless `solution` names one.
inline gsn::AssuranceCase bind_file(const gsn::AssuranceCase& c, const fs::path& file, std::string solution = "") {
    const json j = read_json(file);
    const auto artifact = gsn::artifact_from_json(j, file.string());
    if (solution.empty()) {
        if (j.value("kind", "") != "verdict") throw ValidationError("--solution is required for " + file.string());
        solution = gsn::solution_for_property(j.at("property_id").get<std::string>());
    }
    return gsn::bind_evidence(c, solution, artifact);
}

/// Root Supported or PartiallySupported is success.
inline bool root_acceptable(const gsn::CaseStatus& s) {
    const auto r = s.root_status();
    return r == gsn::GoalStatus::Supported || r == gsn::GoalStatus::PartiallySupported;
}

// ---------------------------------------------------------------------------
// assure

/// Pipeline configuration. Input paths resolve against the config file, the
/// work directory against the current directory.
struct PipelineConfig {
    fs::path workdir = "assure-out";
    std::uint64_t seed = 1;
    std::size_t patients = 30;
    long days = 40;
    double noise_sd = 0.0;
    nn::TrainingConfig training;
    double threshold = 12.0;
    json suite;
    verify::VerifierConfig verifier;
    json audit_context;
    json audit_design;
    json profile;
    json manual = json::array();

    static PipelineConfig load(const fs::path& path) {
        const json j = read_json(path);
        const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
        auto resolve = [&](const fs::path& p) { return p.is_absolute() ? p : base / p; };
        // An object inline, or a string naming a JSON file next to the config.
        auto doc = [&](const char* key) -> json {
            if (!j.contains(key)) throw ValidationError(std::string("pipeline config needs '") + key + "'");
            const auto& v = j.at(key);
            if (v.is_string()) {
                const auto p = resolve(v.get<std::string>());
                require_file(p, key);
                return read_json(p);
            }
            return v;
        };
        PipelineConfig c;
        try {
            c.workdir = j.value("workdir", std::string("assure-out"));
            c.seed = j.value("seed", c.seed);
            const auto s = j.value("simulate", json::object());
            c.patients = s.value("patients", c.patients);
            c.days = s.value("days", c.days);
            c.noise_sd = s.value("noise_sd", c.noise_sd);
            const auto t = j.value("train", json::object());
            c.training.hidden = t.value("hidden", c.training.hidden);
            c.training.epochs = t.value("epochs", c.training.epochs);
            c.training.batch_size = t.value("batch_size", c.training.batch_size);
            c.training.learning_rate = t.value("learning_rate", c.training.learning_rate);
            c.training.seed = c.seed;
            c.training.validate();
            c.threshold = j.value("threshold", c.threshold);
            c.suite = doc("suite");
            if (j.contains("verifier")) c.verifier = verify::VerifierConfig::from_json(j.at("verifier"));
            c.audit_context = doc("audit_context");
            c.audit_design = doc("audit_design");
            c.profile = doc("profile");
            c.manual = j.value("manual", json::array());
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
        return c;
    }
};

struct AssureResult {
    gsn::AssuranceCase assurance_case;
    gsn::CaseStatus status;
    std::vector<std::string> log;
};

/// simulate -> train -> evaluate -> verify suite -> audit -> bind -> status.
/// Every artifact lands under the work directory.
inline AssureResult assure(const PipelineConfig& cfg, unsigned threads) {
    AssureResult res;
    const fs::path wd = cfg.workdir;
    fs::create_directories(wd);
    auto note = [&](std::string s) { res.log.push_back(std::move(s)); };

    const auto sim = simulate(cfg.patients, cfg.days, cfg.seed, wd / "cohort", cfg.noise_sd, threads);
    note("simulate: " + std::to_string(sim.accepted) + " accepted, " + std::to_string(sim.rejected) + " rejected");

    const Split split = load_split(wd / "cohort", cfg.seed);
    const auto trained = nn::train(split.train, cfg.training);
    const auto& net = trained.network;
    nn::save_model(net, wd / "model.json");
    write_text(wd / "loss.csv", loss_csv(trained.history));

    const auto rmse = data::check_ml_rq1(net, split.test, cfg.threshold);
    write_json(wd / "rmse.json", rmse.to_json());
    write_json(wd / "rmse_per_patient.json", per_patient_rmse(net, split.test, cfg.threshold));
    write_json(wd / "learning.json", learning_evidence(trained.history, cfg.threshold));
    note("evaluate: pooled test RMSE " + util::format_double(rmse.value) + " mg/dL");

    const auto results = run_suite(net, suite_from_json(cfg.suite), cfg.verifier, threads);
    std::vector<fs::path> verdict_files;
    for (std::size_t i = 0; i < results.size(); ++i) {
        verdict_files.push_back(wd / "verdicts" / verdict_file_name(i, results[i].verdict.property_id));
        write_json(verdict_files.back(), results[i].verdict.to_json(&net.scaler()));
    }
    write_json(wd / "verification_suite.json", suite_report_json(results, net));
    write_text(wd / "verification_suite.txt", suite_report_text(results));
    note("verify-suite: " + std::to_string(results.size()) + " queries");

    const auto [ctx, design] = audit::audit_inputs_from_json(cfg.audit_context, cfg.audit_design);
    const auto report = audit::audit(sim::load_accepted_traces(wd / "cohort"), ctx, design);
    write_json(wd / "audit.json", report.to_json());
    write_text(wd / "audit.txt", audit::render_text(report));
    note("audit: written");

    gsn::AssuranceCase c = gsn::instantiate(gsn::builtin_template(), profile_from_json(cfg.profile));
    c = bind_file(c, wd / "rmse.json", "Sn-ML-RQ1");
    c = bind_file(c, wd / "rmse_per_patient.json", "Sn-ML-RQ2");
    c = bind_file(c, wd / "learning.json", "Sn-GL-1");
    for (const auto& f : verdict_files) c = bind_file(c, f);
    c = bind_file(c, wd / "audit.json", "Sn-G5-2");
    for (const auto& m : cfg.manual)
        c = gsn::bind_evidence(c, m.at("solution").get<std::string>(),
                               {gsn::ArtifactKind::Manual, m.value("ref", std::string("manual")),
                                gsn::pass_from_string(m.at("pass").get<std::string>())});
    res.status = gsn::evaluate_status(c);
    gsn::save_case_file(c, wd / "case.txt");
    write_json(wd / "status.json", gsn::status_to_json(c, res.status));
    write_text(wd / "case.dot", gsn::export_dot(c, &res.status));
    res.assurance_case = std::move(c);
    note(std::string("status: root ") + res.status.root + " " + gsn::to_string(res.status.root_status()));
    return res;
}

}  // namespace apsafe::pipeline
