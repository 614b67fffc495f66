#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "apsafe/cli/pipeline.hpp"

namespace fs = std::filesystem;
using namespace apsafe;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kDomain = 1, kUsage = 2 };

void emit(const json& j, const std::string& out) {
    if (out.empty() || out == "-") std::cout << j.dump(2) << '\n';
    else pipeline::write_json(out, j);
}

void emit_text(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") std::cout << text;
    else pipeline::write_text(out, text);
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || v == 0) throw ValidationError("expected a comma-separated list of positive sizes, got '" + s + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ValidationError("empty size list");
    return out;
}

nn::Network load_model_checked(const std::string& path) {
    pipeline::require_file(path, "model file");
    return nn::load_model(path);
}

gsn::AssuranceCase load_case_checked(const std::string& path) {
    pipeline::require_file(path, "case file");
    return gsn::load_case_file(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Safety assurance toolkit for learning-enabled glucose prediction"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");
    std::function<int()> run;

    // simulate
    std::size_t sim_patients = 30;
    long sim_days = 40;
    std::uint64_t sim_seed = 0;
    double sim_noise = 0.0;
    std::string sim_out;
    auto* simulate = app.add_subcommand("simulate", "Simulate a patient cohort into a directory of trace CSVs");
    simulate->add_option("--patients", sim_patients, "Number of patients")->check(CLI::PositiveNumber);
    simulate->add_option("--days", sim_days, "Days per patient")->check(CLI::Range(1L, 3650L));
    simulate->add_option("--seed", sim_seed, "Cohort seed");
    simulate->add_option("--noise", sim_noise, "CGM noise SD in mg/dL")->check(CLI::NonNegativeNumber);
    simulate->add_option("--out", sim_out, "Output directory")->required();
    simulate->callback([&] {
        run = [&] {
            const auto s = pipeline::simulate(sim_patients, sim_days, sim_seed, sim_out, sim_noise, pipeline::thread_cap());
            std::cout << "accepted " << s.accepted << ", rejected " << s.rejected;
            if (!s.rows.empty()) std::cout << ", rows per trace " << s.rows.front();
            std::cout << '\n';
            return kOk;
        };
    });

    // train
    std::string tr_data, tr_hidden = "8,8", tr_out, tr_loss;
    nn::TrainingConfig tr_cfg;
    std::uint64_t tr_split_seed = 0;
    auto* train = app.add_subcommand("train", "Train the BG predictor on a simulated cohort");
    train->add_option("--data", tr_data, "Cohort directory")->required();
    train->add_option("--hidden", tr_hidden, "Hidden layer widths, comma separated");
    train->add_option("--epochs", tr_cfg.epochs, "Training epochs")->check(CLI::PositiveNumber);
    train->add_option("--batch-size", tr_cfg.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
    train->add_option("--lr", tr_cfg.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
    train->add_option("--seed", tr_cfg.seed, "Training seed");
    train->add_option("--split-seed", tr_split_seed, "Seed of the 80/20 train/test split");
    train->add_option("--out", tr_out, "Model file")->required();
    train->add_option("--loss", tr_loss, "Loss-history CSV (default: next to the model)");
    train->callback([&] {
        run = [&] {
            tr_cfg.hidden = parse_sizes(tr_hidden);
            const auto split = pipeline::load_split(tr_data, tr_split_seed);
            const auto r = nn::train(split.train, tr_cfg);
            nn::save_model(r.network, tr_out);
            const fs::path loss = tr_loss.empty() ? fs::path(tr_out).replace_extension(".loss.csv") : fs::path(tr_loss);
            pipeline::write_text(loss, pipeline::loss_csv(r.history));
            std::cout << "trained on " << split.train.size() << " windows, test RMSE "
                      << util::format_double(data::rmse(r.network, split.test)) << " mg/dL\n";
            return kOk;
        };
    });

    // ablate
    std::string ab_data, ab_grid = "8,10,20,64,128,200", ab_out;
    std::size_t ab_h2 = 8;
    nn::TrainingConfig ab_cfg;
    std::uint64_t ab_split_seed = 0;
    auto* ablate = app.add_subcommand("ablate", "Test RMSE over a grid of first-layer widths");
    ablate->add_option("--data", ab_data, "Cohort directory")->required();
    ablate->add_option("--hidden-grid", ab_grid, "First hidden layer widths, comma separated");
    ablate->add_option("--second", ab_h2, "Second hidden layer width")->check(CLI::PositiveNumber);
    ablate->add_option("--epochs", ab_cfg.epochs, "Training epochs per configuration")->check(CLI::PositiveNumber);
    ablate->add_option("--seed", ab_cfg.seed, "Training seed");
    ablate->add_option("--split-seed", ab_split_seed, "Seed of the 80/20 train/test split");
    ablate->add_option("--out", ab_out, "CSV output (default stdout)");
    ablate->callback([&] {
        run = [&] {
            const auto split = pipeline::load_split(ab_data, ab_split_seed);
            const auto rows = pipeline::ablate(split, parse_sizes(ab_grid), ab_h2, ab_cfg, pipeline::thread_cap());
            emit_text(pipeline::ablation_csv(rows), ab_out);
            return kOk;
        };
    });

    // evaluate
    std::string ev_model, ev_data, ev_out;
    double ev_threshold = 12.0;
    std::uint64_t ev_split_seed = 0;
    auto* evaluate = app.add_subcommand("evaluate", "Pooled test RMSE against the accuracy threshold");
    evaluate->add_option("--model", ev_model, "Model file")->required();
    evaluate->add_option("--data", ev_data, "Cohort directory")->required();
    evaluate->add_option("--threshold", ev_threshold, "RMSE threshold in mg/dL")->check(CLI::PositiveNumber);
    evaluate->add_option("--split-seed", ev_split_seed, "Seed of the 80/20 train/test split");
    evaluate->add_option("--out", ev_out, "Evidence JSON (default stdout)");
    evaluate->callback([&] {
        run = [&] {
            const auto net = load_model_checked(ev_model);
            const auto split = pipeline::load_split(ev_data, ev_split_seed);
            emit(data::check_ml_rq1(net, split.test, ev_threshold).to_json(), ev_out);
            return kOk;
        };
    });

    // verify
    std::string vf_model, vf_prop, vf_out, vf_config;
    double vf_timeout = 300.0;
    auto* verify_cmd = app.add_subcommand("verify", "Verify one property file against a model");
    verify_cmd->add_option("--model", vf_model, "Model file")->required();
    verify_cmd->add_option("--property", vf_prop, "Property file in the property language")->required();
    verify_cmd->add_option("--timeout", vf_timeout, "Timeout in seconds")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--config", vf_config, "Verifier config JSON");
    verify_cmd->add_option("--out", vf_out, "Verdict JSON (default stdout)");
    verify_cmd->callback([&] {
        run = [&] {
            const auto net = load_model_checked(vf_model);
            pipeline::require_file(vf_prop, "property file");
            std::ifstream is(vf_prop);
            std::stringstream ss;
            ss << is.rdbuf();
            const auto p = prop::parse_dsl(ss.str());
            auto cfg = vf_config.empty() ? verify::VerifierConfig{}
                                         : verify::VerifierConfig::from_json(pipeline::read_json(vf_config));
            if (verify_cmd->count("--timeout")) cfg.timeout_seconds = vf_timeout;
            emit(verify::verify(net, p, cfg).to_json(&net.scaler()), vf_out);
            return kOk;
        };
    });

    // verify-suite
    std::string vs_model, vs_suite, vs_out, vs_config, vs_text, vs_dir;
    double vs_timeout = 300.0;
    bool vs_reference = false;
    auto* suite = app.add_subcommand("verify-suite", "Verify every query in a suite file");
    suite->add_option("--model", vs_model, "Model file")->required();
    suite->add_option("--suite", vs_suite, "Suite JSON (templates with thresholds and boxes)");
    suite->add_flag("--reference", vs_reference, "Run the built-in reference queries");
    suite->add_option("--timeout", vs_timeout, "Timeout per query in seconds")->check(CLI::PositiveNumber);
    suite->add_option("--config", vs_config, "Verifier config JSON");
    suite->add_option("--out", vs_out, "Report JSON (default stdout)");
    suite->add_option("--text", vs_text, "Also write the tabular report here");
    suite->add_option("--verdicts", vs_dir, "Also write one verdict JSON per query into this directory");
    suite->callback([&] {
        run = [&] {
            if (vs_suite.empty() && !vs_reference) throw CLI::ValidationError("--suite or --reference is required");
            const auto net = load_model_checked(vs_model);
            json doc = json::object();
            if (!vs_suite.empty()) {
                pipeline::require_file(vs_suite, "suite file");
                doc = pipeline::read_json(vs_suite);
            }
            if (vs_reference) doc["reference_queries"] = true;
            auto cfg = vs_config.empty() ? verify::VerifierConfig{}
                                         : verify::VerifierConfig::from_json(pipeline::read_json(vs_config));
            if (suite->count("--timeout")) cfg.timeout_seconds = vs_timeout;
            const auto results = pipeline::run_suite(net, pipeline::suite_from_json(doc), cfg, pipeline::thread_cap());
            if (!vs_dir.empty())
                for (std::size_t i = 0; i < results.size(); ++i)
                    pipeline::write_json(fs::path(vs_dir) / pipeline::verdict_file_name(i, results[i].verdict.property_id),
                                         results[i].verdict.to_json(&net.scaler()));
            emit(pipeline::suite_report_json(results, net), vs_out);
            const auto table = pipeline::suite_report_text(results);
            if (!vs_text.empty()) pipeline::write_text(vs_text, table);
            else if (!vs_out.empty() && vs_out != "-") std::cout << table;
            return kOk;
        };
    });

    // audit
    std::string au_data, au_ctx, au_design, au_out, au_format = "json";
    auto* audit_cmd = app.add_subcommand("audit", "Check the ML data against the data requirements");
    audit_cmd->add_option("--data", au_data, "Cohort directory")->required();
    audit_cmd->add_option("--context", au_ctx, "Audit context JSON")->required();
    audit_cmd->add_option("--design", au_design, "Design spec JSON")->required();
    audit_cmd->add_option("--format", au_format, "json or text")->check(CLI::IsMember({"json", "text"}));
    audit_cmd->add_option("--out", au_out, "Output file (default stdout)");
    audit_cmd->callback([&] {
        run = [&] {
            pipeline::require_file(au_ctx, "audit context");
            pipeline::require_file(au_design, "design spec");
            const auto [ctx, design] = audit::load_audit_inputs(au_ctx, au_design);
            const auto report = audit::audit(sim::load_accepted_traces(au_data), ctx, design);
            emit_text(audit::render_report(report, au_format) + (au_format == "json" ? "\n" : ""), au_out);
            return kOk;
        };
    });

    // case
    auto* case_cmd = app.add_subcommand("case", "Assurance case operations");
    case_cmd->require_subcommand(1);

    std::string ci_out;
    auto* case_init = case_cmd->add_subcommand("init", "Write the built-in APS template");
    case_init->add_option("--out", ci_out, "Case file (default stdout)");
    case_init->callback([&] {
        run = [&] {
            emit_text(gsn::save_case(gsn::builtin_template()), ci_out);
            return kOk;
        };
    });

    std::string cn_case, cn_profile, cn_out;
    auto* case_inst = case_cmd->add_subcommand("instantiate", "Fill the template slots from a profile");
    case_inst->add_option("--case", cn_case, "Case file")->required();
    case_inst->add_option("--profile", cn_profile, "Profile JSON: {mode, values}")->required();
    case_inst->add_option("--out", cn_out, "Case file (default stdout)");
    case_inst->callback([&] {
        run = [&] {
            pipeline::require_file(cn_profile, "profile");
            const auto c = gsn::instantiate(load_case_checked(cn_case), pipeline::profile_from_json(pipeline::read_json(cn_profile)));
            emit_text(gsn::save_case(c), cn_out);
            return kOk;
        };
    });

    std::string cb_case, cb_solution, cb_out, cb_kind, cb_pass, cb_ref;
    std::vector<std::string> cb_artifacts;
    auto* case_bind = case_cmd->add_subcommand("bind", "Bind evidence to solutions");
    case_bind->add_option("--case", cb_case, "Case file")->required();
    case_bind->add_option("--artifact", cb_artifacts, "Evidence JSON (verdict, rmse or audit); repeatable");
    case_bind->add_option("--solution", cb_solution, "Solution id (verdicts default to their property's solution)");
    case_bind->add_option("--manual", cb_pass, "Bind a manual judgement with this pass value")
        ->check(CLI::IsMember({"positive", "negative", "inconclusive"}));
    case_bind->add_option("--ref", cb_ref, "Reference recorded with a manual judgement");
    case_bind->add_option("--out", cb_out, "Case file (default: update in place)");
    case_bind->callback([&] {
        run = [&] {
            auto c = load_case_checked(cb_case);
            if (cb_artifacts.empty() == cb_pass.empty())
                throw CLI::ValidationError("give either --artifact files or --manual");
            if (!cb_pass.empty()) {
                if (cb_solution.empty()) throw CLI::ValidationError("--manual needs --solution");
                c = gsn::bind_evidence(c, cb_solution, {gsn::ArtifactKind::Manual, cb_ref.empty() ? "manual" : cb_ref,
                                                        gsn::pass_from_string(cb_pass)});
            }
            for (const auto& a : cb_artifacts) {
                pipeline::require_file(a, "artifact");
                c = pipeline::bind_file(c, a, cb_solution);
            }
            gsn::save_case_file(c, cb_out.empty() ? cb_case : cb_out);
            return kOk;
        };
    });

    std::string cs_case, cs_out;
    bool cs_json = false;
    auto* case_status = case_cmd->add_subcommand("status", "Evaluate goal statuses; exit 1 unless the root holds at least partially");
    case_status->add_option("--case", cs_case, "Case file")->required();
    case_status->add_flag("--json", cs_json, "JSON report instead of text");
    case_status->add_option("--out", cs_out, "Output file (default stdout)");
    case_status->callback([&] {
        run = [&] {
            const auto c = load_case_checked(cs_case);
            const auto s = gsn::evaluate_status(c);
            if (cs_json) emit(gsn::status_to_json(c, s), cs_out);
            else emit_text(gsn::render_status_text(c, s), cs_out);
            return pipeline::root_acceptable(s) ? kOk : kDomain;
        };
    });

    std::string cr_case, cr_out;
    bool cr_status = false;
    auto* case_render = case_cmd->add_subcommand("render", "Export the case as a Graphviz DOT document");
    case_render->add_option("--case", cr_case, "Case file")->required();
    case_render->add_flag("--status", cr_status, "Colour nodes by status");
    case_render->add_option("--out", cr_out, "DOT file (default stdout)");
    case_render->callback([&] {
        run = [&] {
            const auto c = load_case_checked(cr_case);
            if (cr_status) {
                const auto s = gsn::evaluate_status(c);
                emit_text(gsn::export_dot(c, &s), cr_out);
            } else {
                emit_text(gsn::export_dot(c), cr_out);
            }
            return kOk;
        };
    });

    // assure
    std::string as_config;
    auto* assure = app.add_subcommand("assure", "Run the whole pipeline and evaluate the assurance case");
    assure->add_option("--config", as_config, "Pipeline config JSON")->required();
    assure->callback([&] {
        run = [&] {
            pipeline::require_file(as_config, "pipeline config");
            const auto cfg = pipeline::PipelineConfig::load(as_config);
            const auto r = pipeline::assure(cfg, pipeline::thread_cap());
            for (const auto& line : r.log) std::cout << line << '\n';
            std::cout << gsn::render_status_text(r.assurance_case, r.status);
            std::cout << "artifacts in " << cfg.workdir.string() << '\n';
            return pipeline::root_acceptable(r.status) ? kOk : kDomain;
        };
    });

    try {
        app.parse(argc, argv);
        return run ? run() : kUsage;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDomain;
    } catch (const NotSupported& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDomain;
    } catch (const CapacityError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
}
