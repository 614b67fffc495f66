#pragma once

#include <string>
#include <vector>

#include "apsafe/audit/audit.hpp"
#include "apsafe/sim/trace.hpp"

namespace testsupport {

// Twenty 500-row traces (6 adolescents, 9 adults, 5 children). Of the
// 10,000 BG samples 14 are above 180 mg/dL and 11 below 70; meals vary in
// size and time of day, insulin stays small.
inline std::vector<apsafe::sim::SimTrace> glycemic_fixture() {
    using apsafe::sim::PatientGroup;
    std::vector<apsafe::sim::SimTrace> out;
    int hyper_left = 14, hypo_left = 11;
    for (int p = 0; p < 20; ++p) {
        apsafe::sim::SimTrace t;
        t.group = p < 6 ? PatientGroup::Adolescent : p < 15 ? PatientGroup::Adult : PatientGroup::Child;
        t.patient_id = std::string(apsafe::sim::to_string(t.group)) + "#" + std::to_string(p);
        t.weight_kg = t.group == PatientGroup::Child ? 30.0 + p : t.group == PatientGroup::Adolescent ? 50.0 + p : 60.0 + 4 * p;
        t.seed = static_cast<std::uint64_t>(p);
        for (int k = 0; k < 500; ++k) {
            apsafe::sim::TraceRow r;
            r.t = 5.0 * k;
            r.bg = 100.0 + (k % 50);
            if (k == 250 && hyper_left > 0) {
                r.bg = 200.0;
                --hyper_left;
            } else if (k == 251 && hypo_left > 0) {
                r.bg = 60.0;
                --hypo_left;
            }
            r.insulin = k == 0 ? 0.0 : 0.1;
            if (k > 0 && k % 120 == 0) r.meal = 20.0 + 10.0 * ((k / 120 + p) % 4);
            t.rows.push_back(r);
        }
        out.push_back(std::move(t));
    }
    return out;
}

inline apsafe::audit::AuditContext glycemic_fixture_context() {
    apsafe::audit::AuditContext c;
    c.data_origin = apsafe::audit::DataOrigin::Synthetic;
    c.sensor_model = "Dexcom";
    c.diabetes_type = "T1D";
    // the controller is meant for every diabetic patient
    c.intended_population = {{1.0, 100.0}, {10.0, 200.0}, {"female", "male"}, {}};
    c.includes_exercise = false;
    return c;
}

inline apsafe::audit::DesignSpec glycemic_fixture_design() {
    apsafe::audit::DesignSpec d;
    d.diabetes_type = "T1D";
    d.daily_insulin_limit = 100.0;
    return d;
}

}  // namespace testsupport
