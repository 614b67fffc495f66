#pragma once

#include <nlohmann/json.hpp>

#include <string>

#include "apsafe/audit/audit.hpp"
#include "apsafe/data/metrics.hpp"
#include "apsafe/gsn/case.hpp"
#include "apsafe/gsn/template.hpp"
#include "apsafe/verify/verifier.hpp"

namespace apsafe::gsn {

inline Pass pass_of(verify::Outcome o) {
    switch (o) {
        case verify::Outcome::Proved: return Pass::Positive;
        case verify::Outcome::Counterexample: return Pass::Negative;
        case verify::Outcome::Unknown: return Pass::Inconclusive;
    }
    return Pass::Inconclusive;
}

/// Any Violated requirement is negative; PartiallyMet or Unknown leaves the
/// audit inconclusive. NotApplicable does not block.
inline Pass pass_of(const audit::AuditReport& r) {
    bool open = false;
    for (const auto& v : r.requirements) {
        if (v.status == audit::Status::Violated) return Pass::Negative;
        if (v.status == audit::Status::PartiallyMet || v.status == audit::Status::Unknown) open = true;
    }
    return open ? Pass::Inconclusive : Pass::Positive;
}

inline Artifact artifact_from(const verify::Verdict& v, std::string ref) {
    return {ArtifactKind::VerificationVerdict, std::move(ref), pass_of(v.outcome)};
}

inline Artifact artifact_from(const data::RmseEvidence& e, std::string ref) {
    return {ArtifactKind::RmseEval, std::move(ref), e.pass ? Pass::Positive : Pass::Negative};
}

inline Artifact artifact_from(const audit::AuditReport& r, std::string ref) {
    return {ArtifactKind::AuditReport, std::move(ref), pass_of(r)};
}

/// Reads any evidence document the pipeline writes (verdict, rmse, audit).
inline Artifact artifact_from_json(const nlohmann::json& j, std::string ref) {
    const std::string kind = j.is_object() ? j.value("kind", "") : "";
    if (kind == "verdict") return artifact_from(verify::Verdict::from_json(j), std::move(ref));
    if (kind == "rmse") return artifact_from(data::RmseEvidence::from_json(j), std::move(ref));
    if (kind == "audit") return artifact_from(audit::AuditReport::from_json(j), std::move(ref));
    throw ParseError("not an evidence document (kind '" + kind + "')");
}

/// Binds a verdict to the solution for its property.
inline AssuranceCase bind_verdict(const AssuranceCase& c, const verify::Verdict& v, std::string ref) {
    return bind_evidence(c, solution_for_property(v.property_id), artifact_from(v, std::move(ref)));
}

}  // namespace apsafe::gsn
