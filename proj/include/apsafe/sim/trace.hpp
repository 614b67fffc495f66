#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "apsafe/sim/patient.hpp"
#include "apsafe/util/format.hpp"

namespace apsafe::sim {

/// One CGM sample. `insulin` and `meal` are totals delivered during the
/// sample period that ends at `t` (row 0 carries zeros).
struct TraceRow {
    double t = 0.0;        // minutes
    double bg = 0.0;       // mg/dL
    double insulin = 0.0;  // U
    double meal = 0.0;     // g

    friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct SimTrace {
    std::string patient_id;
    PatientGroup group = PatientGroup::Adult;
    double weight_kg = 0.0;
    std::uint64_t seed = 0;
    long sample_period = 5;
    std::vector<TraceRow> rows;

    friend bool operator==(const SimTrace&, const SimTrace&) = default;
};

struct TraceValidation {
    bool accepted = true;
    std::string reason;

    explicit operator bool() const { return accepted; }
};

/// Rejects (does not repair) traces with negative or non-finite values.
inline TraceValidation validate_trace(const SimTrace& trace) {
    for (const auto& r : trace.rows) {
        const auto at = " at t=" + util::format_double(r.t);
        if (!std::isfinite(r.t) || !std::isfinite(r.bg) || !std::isfinite(r.insulin) || !std::isfinite(r.meal))
            return {false, "non-finite value" + at};
        if (r.bg < 0.0) return {false, "negative BG" + at};
    }
    return {};
}

}  // namespace apsafe::sim
