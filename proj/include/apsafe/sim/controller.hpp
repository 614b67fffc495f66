#pragma once

#include <algorithm>

#include "apsafe/sim/meals.hpp"
#include "apsafe/sim/patient.hpp"

namespace apsafe::sim {

/// Open-loop basal-bolus therapy: the basal rate runs continuously and each
/// announced meal triggers a bolus of carbs / carb_ratio in the same step.
struct BasalBolusController {
    ControllerMode mode = ControllerMode::BasalBolus;

    /// Insulin (U) delivered over one integration step of `step_min` minutes.
    double dose(const PatientParams& p, double step_min, double announced_meal_g) const {
        if (mode == ControllerMode::Off) return 0.0;
        double u = p.basal_rate * step_min / 60.0;
        if (mode == ControllerMode::BasalBolus && announced_meal_g > 0.0) u += announced_meal_g / p.carb_ratio;
        return std::max(u, 0.0);
    }
};

}  // namespace apsafe::sim
