#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <string>

#include "apsafe/util/error.hpp"
#include "apsafe/util/hash.hpp"

namespace apsafe::verify {

enum class SplitHeuristic { WidestDim, BoundsImpact };

inline const char* to_string(SplitHeuristic h) { return h == SplitHeuristic::WidestDim ? "widest_dim" : "bounds_impact"; }

inline SplitHeuristic split_heuristic_from_string(const std::string& s) {
    if (s == "widest_dim" || s == "widest") return SplitHeuristic::WidestDim;
    if (s == "bounds_impact" || s == "impact") return SplitHeuristic::BoundsImpact;
    throw ValidationError("unknown split heuristic '" + s + "'");
}

struct VerifierConfig {
    std::size_t max_subproblems = 200000;
    double timeout_seconds = 300.0;
    std::size_t falsify_samples = 10000;
    std::size_t falsify_descent_steps = 200;
    SplitHeuristic split_heuristic = SplitHeuristic::BoundsImpact;
    double lp_tolerance = 1e-7;
    std::uint64_t seed = 0;

    void validate() const {
        if (max_subproblems == 0) throw ValidationError("max_subproblems must be positive");
        if (!(timeout_seconds > 0.0)) throw ValidationError("timeout must be positive");
        if (!(lp_tolerance > 0.0)) throw ValidationError("lp_tolerance must be positive");
    }

    nlohmann::json to_json() const {
        return {{"max_subproblems", max_subproblems},
                {"timeout_seconds", timeout_seconds},
                {"falsify_samples", falsify_samples},
                {"falsify_descent_steps", falsify_descent_steps},
                {"split_heuristic", to_string(split_heuristic)},
                {"lp_tolerance", lp_tolerance},
                {"seed", seed}};
    }

    /// Missing keys keep their defaults.
    static VerifierConfig from_json(const nlohmann::json& j) {
        if (!j.is_object()) throw ParseError("verifier config must be an object");
        VerifierConfig c;
        try {
            c.max_subproblems = j.value("max_subproblems", c.max_subproblems);
            c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
            c.falsify_samples = j.value("falsify_samples", c.falsify_samples);
            c.falsify_descent_steps = j.value("falsify_descent_steps", c.falsify_descent_steps);
            if (j.contains("split_heuristic"))
                c.split_heuristic = split_heuristic_from_string(j.at("split_heuristic").get<std::string>());
            c.lp_tolerance = j.value("lp_tolerance", c.lp_tolerance);
            c.seed = j.value("seed", c.seed);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("malformed verifier config: ") + e.what());
        }
        c.validate();
        return c;
    }

    std::string hash() const { return util::sha256_hex(to_json().dump()); }
};

}  // namespace apsafe::verify
