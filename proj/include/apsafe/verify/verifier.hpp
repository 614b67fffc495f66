#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "apsafe/nn/model_io.hpp"
#include "apsafe/nn/network.hpp"
#include "apsafe/prop/compile.hpp"
#include "apsafe/prop/dsl.hpp"
#include "apsafe/verify/bounds.hpp"
#include "apsafe/verify/config.hpp"
#include "apsafe/verify/falsify.hpp"
#include "apsafe/verify/query.hpp"

namespace apsafe::verify {

enum class Outcome { Proved, Counterexample, Unknown };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Proved: return "proved";
        case Outcome::Counterexample: return "counterexample";
        case Outcome::Unknown: return "unknown";
    }
    return "?";
}

inline Outcome outcome_from_string(const std::string& s) {
    if (s == "proved") return Outcome::Proved;
    if (s == "counterexample") return Outcome::Counterexample;
    if (s == "unknown") return Outcome::Unknown;
    throw ParseError("unknown verdict outcome '" + s + "'");
}

struct VerifyStats {
    std::size_t subproblems = 0;
    std::size_t max_depth = 0;
    double wall_time = 0.0;
    std::size_t lp_calls = 0;
    std::size_t queries = 0;
};

struct Verdict {
    std::string property_id;
    Outcome outcome = Outcome::Unknown;
    std::optional<Witness> witness;
    std::string reason;    // Unknown only
    bool vacuous = false;  // Proved because no input satisfies box and pre
    VerifyStats stats;
    std::string config_hash;
    std::string model_hash;

    nlohmann::json to_json(const nn::MinMaxScaler* scaler = nullptr) const {
        nlohmann::json j{{"kind", "verdict"}, {"property_id", property_id}, {"outcome", to_string(outcome)}};
        if (witness) {
            auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
            j["witness"] = {{"input", vec(witness->x)}, {"output", vec(witness->y)}, {"query", witness->query}};
            if (scaler) j["witness"]["input_physical"] = vec(scaler->invert(witness->x));
        }
        if (outcome == Outcome::Unknown) j["reason"] = reason;
        if (vacuous) j["vacuous"] = true;
        j["stats"] = {{"subproblems", stats.subproblems},
                      {"max_depth", stats.max_depth},
                      {"wall_time", stats.wall_time},
                      {"lp_calls", stats.lp_calls},
                      {"queries", stats.queries}};
        j["config_hash"] = config_hash;
        j["model_hash"] = model_hash;
        return j;
    }

    static Verdict from_json(const nlohmann::json& j) {
        try {
            Verdict v;
            v.property_id = j.at("property_id").get<std::string>();
            v.outcome = outcome_from_string(j.at("outcome").get<std::string>());
            if (j.contains("witness")) {
                auto vec = [](const nlohmann::json& a) {
                    const auto d = a.get<std::vector<double>>();
                    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size())));
                };
                const auto& w = j.at("witness");
                v.witness = Witness{vec(w.at("input")), vec(w.at("output")), w.value("query", std::size_t{0})};
            }
            v.reason = j.value("reason", "");
            v.vacuous = j.value("vacuous", false);
            if (j.contains("stats")) {
                const auto& s = j.at("stats");
                v.stats.subproblems = s.value("subproblems", std::size_t{0});
                v.stats.max_depth = s.value("max_depth", std::size_t{0});
                v.stats.wall_time = s.value("wall_time", 0.0);
                v.stats.lp_calls = s.value("lp_calls", std::size_t{0});
                v.stats.queries = s.value("queries", std::size_t{0});
            }
            v.config_hash = j.value("config_hash", "");
            v.model_hash = j.value("model_hash", "");
            return v;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("malformed verdict: ") + e.what());
        }
    }
};

namespace detail {

using Clock = std::chrono::steady_clock;

struct Budget {
    const VerifierConfig* cfg;
    Clock::time_point start;
    VerifyStats* stats;

    bool out_of_subproblems() const { return stats->subproblems >= cfg->max_subproblems; }
    bool out_of_time() const {
        return std::chrono::duration<double>(Clock::now() - start).count() > cfg->timeout_seconds;
    }
};

// Relaxation rows for one selection of abs-atom signs. Returns false when
// some atom is already impossible from its bounds alone.
inline std::vector<LinearConstraint> post_rows(const prop::Query& q, const std::vector<ExpressionBounds>& eb,
                                               unsigned signs, double eps) {
    std::vector<LinearConstraint> rows;
    unsigned bit = 0;
    for (std::size_t i = 0; i < q.neg_post.size(); ++i) {
        const auto& a = q.neg_post[i];
        const double wb = a.widened_bound(eps);
        bool upper = prop::is_upper(a.cmp);
        double target = wb;
        if (a.abs) {
            if (wb <= 0.0) continue;  // |e| >= nonpositive always holds
            if (signs & (1u << bit++)) {
                upper = true;
                target = -wb;
            }
        }
        const auto& affs = upper ? eb[i].lower : eb[i].upper;
        for (const auto& f : affs)
            rows.push_back({f.a, upper ? Sense::LE : Sense::GE, target - f.c - a.constant});
    }
    return rows;
}

inline unsigned abs_count(const prop::Query& q, double eps) {
    unsigned k = 0;
    for (const auto& a : q.neg_post)
        if (a.abs && a.widened_bound(eps) > 0.0) ++k;
    return k;
}

// Whether an atom can hold for some value in [lo, hi].
inline bool atom_possible(const prop::LinearAtom& a, double lo, double hi, double eps) {
    const double wb = a.widened_bound(eps);
    lo += a.constant;
    hi += a.constant;
    if (a.abs) return prop::is_upper(a.cmp) ? (lo <= wb && hi >= -wb) : (hi >= wb || lo <= -wb);
    return prop::is_upper(a.cmp) ? lo <= wb : hi >= wb;
}

enum class NodeResult { Discharged, Split, Witness, Stuck };

struct NodeOutcome {
    NodeResult result = NodeResult::Split;
    std::optional<Witness> witness;
    std::string reason;
    Eigen::Index split_dim = -1;
};

class QuerySearch {
public:
    QuerySearch(const nn::Network& net, const prop::Property& p, const prop::Query& q, std::size_t qi,
                const PreparedQuery& prep, const VerifierConfig& cfg, Budget& budget)
        : net_(net), prop_(p), q_(q), qi_(qi), prep_(prep), cfg_(cfg), budget_(budget) {}

    /// Proved (nullopt), a validated witness, or an Unknown reason.
    struct Result {
        std::optional<Witness> witness;
        std::string unknown;
    };

    Result run() {
        struct Item {
            Box box;
            std::size_t depth;
        };
        std::vector<Item> stack{{prep_.box, 0}};
        std::string unknown;
        while (!stack.empty()) {
            if (budget_.out_of_subproblems()) return {std::nullopt, "budget"};
            if (budget_.out_of_time()) return {std::nullopt, "timeout"};
            Item item = std::move(stack.back());
            stack.pop_back();
            auto& st = *budget_.stats;
            ++st.subproblems;
            st.max_depth = std::max(st.max_depth, item.depth);
            NodeOutcome o;
            try {
                o = process(item.box);
            } catch (const LpInstability&) {
                return {std::nullopt, "lp_instability"};
            }
            switch (o.result) {
                case NodeResult::Discharged: break;
                case NodeResult::Witness: return {o.witness, ""};
                case NodeResult::Stuck:
                    if (unknown.empty()) unknown = o.reason;
                    break;
                case NodeResult::Split: {
                    auto [a, b] = item.box.split(o.split_dim);
                    stack.push_back({std::move(b), item.depth + 1});
                    stack.push_back({std::move(a), item.depth + 1});
                    break;
                }
            }
        }
        return {std::nullopt, unknown};
    }

private:
    std::optional<Witness> check_point(const Eigen::VectorXd& x) const {
        const Eigen::VectorXd y = net_.forward_scaled(x);
        if (!q_.satisfied_by(x, y) || !validate_witness(net_, prop_, x)) return std::nullopt;
        return Witness{x, y, qi_};
    }

    NodeOutcome process(const Box& box) {
        const double eps = prop::kStrictEpsilon;
        NodeOutcome out;
        if (auto w = check_point(box.center())) {
            out.result = NodeResult::Witness;
            out.witness = w;
            return out;
        }
        // pre atoms against the box alone
        for (const auto& r : prep_.pre_rows) {
            const Eigen::VectorXd pos = r.a.cwiseMax(0.0), neg = r.a.cwiseMin(0.0);
            const double lo = pos.dot(box.lo) + neg.dot(box.hi), hi = pos.dot(box.hi) + neg.dot(box.lo);
            if ((r.sense == Sense::LE && lo > r.b) || (r.sense == Sense::GE && hi < r.b)) {
                out.result = NodeResult::Discharged;
                return out;
            }
        }
        const BoxBounds bounds(net_, box);
        std::vector<ExpressionBounds> eb;
        for (const auto& a : q_.neg_post) {
            eb.push_back(bounds.expression(a.coef));
            if (!atom_possible(a, eb.back().lo, eb.back().hi, eps)) {
                out.result = NodeResult::Discharged;
                return out;
            }
        }
        const unsigned k = abs_count(q_, eps);
        const bool exact = bounds.all_stable();
        bool any_feasible = false;
        if (k <= 12) {
            for (unsigned signs = 0; signs < (1u << k); ++signs) {
                auto rows = prep_.pre_rows;
                const auto post = post_rows(q_, eb, signs, eps);
                rows.insert(rows.end(), post.begin(), post.end());
                LpProblem lp{box.lo, box.hi, rows, std::nullopt};
                ++budget_.stats->lp_calls;
                const auto res = lp_solve(lp, cfg_.lp_tolerance);
                if (!res.feasible) continue;
                any_feasible = true;
                if (auto w = check_point(res.x)) {
                    out.result = NodeResult::Witness;
                    out.witness = w;
                    return out;
                }
                if (exact) {
                    // the relaxation is the network here: look for a strict interior point
                    const auto deep = deepest_point(box, {}, rows, cfg_.lp_tolerance, budget_.stats->lp_calls);
                    if (deep)
                        if (auto w = check_point(deep->first)) {
                            out.result = NodeResult::Witness;
                            out.witness = w;
                            return out;
                        }
                }
            }
            if (!any_feasible) {
                out.result = NodeResult::Discharged;
                return out;
            }
            if (exact) {
                out.result = NodeResult::Stuck;
                out.reason = "boundary";
                return out;
            }
        }
        out.split_dim = choose_split(box, eb);
        if (out.split_dim < 0) {
            out.result = NodeResult::Stuck;
            out.reason = "precision";
            return out;
        }
        out.result = NodeResult::Split;
        return out;
    }

    Eigen::Index choose_split(const Box& box, const std::vector<ExpressionBounds>& eb) const {
        const Eigen::VectorXd w = box.width();
        Eigen::VectorXd score = w;
        if (cfg_.split_heuristic == SplitHeuristic::BoundsImpact) {
            Eigen::VectorXd sens = Eigen::VectorXd::Zero(w.size());
            for (const auto& e : eb) {
                for (const auto& f : e.lower) sens += f.a.cwiseAbs();
                for (const auto& f : e.upper) sens += f.a.cwiseAbs();
            }
            if (sens.maxCoeff() > 0.0) score = w.cwiseProduct(sens);
        }
        Eigen::Index best = -1;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const double mag = std::max({1.0, std::abs(box.lo[i]), std::abs(box.hi[i])});
            if (w[i] <= 1e-12 * mag) continue;
            if (best < 0 || score[i] > score[best]) best = i;
        }
        return best;
    }

    const nn::Network& net_;
    const prop::Property& prop_;
    const prop::Query& q_;
    std::size_t qi_;
    const PreparedQuery& prep_;
    const VerifierConfig& cfg_;
    Budget& budget_;
};

}  // namespace detail

/// Falsification, then input branch-and-bound on every compiled query.
/// Proved means no input in the box satisfies pre while the outputs satisfy
/// the strict-widened negation of post.
inline Verdict verify(const nn::Network& net, const prop::Property& p, const VerifierConfig& cfg = {}) {
    cfg.validate();
    const auto start = detail::Clock::now();
    Verdict v;
    v.property_id = p.id;
    v.config_hash = cfg.hash();
    v.model_hash = nn::model_hash(net);
    auto finish = [&](Verdict& out) -> Verdict {
        out.stats.wall_time = std::chrono::duration<double>(detail::Clock::now() - start).count();
        return out;
    };
    if (net.input_dim() != prop::kInputs || net.output_dim() != prop::kOutputs)
        throw DimensionError("verifier expects a 36-input, 6-output network");
    const auto queries = prop::compile(p, &net.scaler());
    v.stats.queries = queries.size();

    std::vector<detail::PreparedQuery> prepared;
    bool all_vacuous = !queries.empty();
    try {
        for (const auto& q : queries) {
            auto prep = detail::prepare(q, prop::kStrictEpsilon);
            if (!prep.empty) {
                ++v.stats.lp_calls;
                if (!lp_feasible({prep.box.lo, prep.box.hi, prep.pre_rows, std::nullopt}, cfg.lp_tolerance).feasible)
                    prep.empty = true;
            }
            if (!prep.empty) all_vacuous = false;
            prepared.push_back(std::move(prep));
        }
    } catch (const LpInstability&) {
        v.outcome = Outcome::Unknown;
        v.reason = "lp_instability";
        return finish(v);
    }
    if (all_vacuous) {
        v.outcome = Outcome::Proved;
        v.vacuous = true;
        return finish(v);
    }

    if (auto w = falsify(net, p, cfg)) {
        v.outcome = Outcome::Counterexample;
        v.witness = w;
        return finish(v);
    }

    detail::Budget budget{&cfg, start, &v.stats};
    std::string unknown;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        if (prepared[qi].empty) continue;
        detail::QuerySearch search(net, p, queries[qi], qi, prepared[qi], cfg, budget);
        auto r = search.run();
        if (r.witness) {
            v.outcome = Outcome::Counterexample;
            v.witness = r.witness;
            return finish(v);
        }
        if (r.unknown == "budget" || r.unknown == "timeout") {
            v.outcome = Outcome::Unknown;
            v.reason = r.unknown;
            return finish(v);
        }
        if (!r.unknown.empty() && unknown.empty()) unknown = r.unknown;
    }
    if (!unknown.empty()) {
        v.outcome = Outcome::Unknown;
        v.reason = unknown;
    } else {
        v.outcome = Outcome::Proved;
    }
    return finish(v);
}

}  // namespace apsafe::verify
