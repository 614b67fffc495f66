#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "apsafe/sim/controller.hpp"
#include "apsafe/sim/meals.hpp"
#include "apsafe/sim/patient.hpp"
#include "apsafe/sim/trace.hpp"
#include "apsafe/util/error.hpp"

namespace apsafe::sim {

class SimulationError : public Error {
public:
    SimulationError(const std::string& what, long minute)
        : Error(what + " at t=" + std::to_string(minute) + " min"), minute_(minute) {}
    long minute() const noexcept { return minute_; }

private:
    long minute_;
};

/// Minimal-model state.
///   glucose         G  mg/dL
///   insulin_action  X  mg/dL/min, remote insulin effect relative to basal
///   plasma_insulin  I  U
///   gut_carbs       Q  g
struct PatientState {
    double glucose = 0.0;
    double insulin_action = 0.0;
    double plasma_insulin = 0.0;
    double gut_carbs = 0.0;
};

/// Steady state under basal insulin with no meals: G = Gb, X = 0,
/// I = basal_rate / (60 * clearance), Q = 0.
inline PatientState basal_steady_state(const PatientParams& p) {
    return {p.basal_glucose, 0.0, p.basal_insulin(), 0.0};
}

/// Time derivative of the state given an insulin infusion rate (U/min).
///
///   dQ/dt = -kg Q
///   dI/dt = -n I + u
///   dX/dt = ka (ISF n (I - Ib) - X)
///   dG/dt = -p1 (G - Gb) - X + f (ISF/CR) kg Q
///
/// A 1 U bolus lowers integrated glucose by ISF; g grams of carbohydrate
/// raise it by f * g * ISF / CR.
inline PatientState derivative(const PatientParams& p, const PatientState& s, double insulin_rate) {
    PatientState d;
    const double appearance = p.carb_bioavailability * p.carb_factor() * p.gut_absorption_rate * s.gut_carbs;
    d.gut_carbs = -p.gut_absorption_rate * s.gut_carbs;
    d.plasma_insulin = -p.insulin_clearance_rate * s.plasma_insulin + insulin_rate;
    d.insulin_action = p.insulin_action_rate *
                       (p.insulin_sensitivity * p.insulin_clearance_rate * (s.plasma_insulin - p.basal_insulin()) -
                        s.insulin_action);
    d.glucose = -p.glucose_effectiveness * (s.glucose - p.basal_glucose) - s.insulin_action + appearance;
    return d;
}

/// Fixed-step explicit Euler from the basal steady state. Produces
/// days * 1440 / sample_period + 1 rows. BG is not clamped.
inline SimTrace simulate_patient(const PatientParams& p, const SimConfig& cfg, const std::vector<MealEvent>& meals) {
    validate(p);
    cfg.validate();
    const double h = static_cast<double>(cfg.integration_step);
    for (double rate : {p.glucose_effectiveness, p.gut_absorption_rate, p.insulin_action_rate,
                        p.insulin_clearance_rate})
        if (rate * h >= 1.0) throw ValidationError("integration step too large for patient " + p.id);

    const long total = cfg.total_minutes();
    const long steps_per_sample = cfg.sample_period / cfg.integration_step;
    const BasalBolusController controller{cfg.controller};

    SimTrace trace;
    trace.patient_id = p.id;
    trace.group = p.group;
    trace.weight_kg = p.body_weight;
    trace.seed = cfg.seed;
    trace.sample_period = cfg.sample_period;
    trace.rows.reserve(static_cast<std::size_t>(cfg.rows()));

    std::mt19937_64 noise_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> noise(0.0, 1.0);
    auto reading = [&](double g) { return cfg.cgm_noise_sd > 0.0 ? g + cfg.cgm_noise_sd * noise(noise_rng) : g; };

    PatientState s = basal_steady_state(p);
    trace.rows.push_back({0.0, reading(s.glucose), 0.0, 0.0});

    std::size_t next_meal = 0;
    double period_insulin = 0.0;
    double period_meal = 0.0;
    long step_in_period = 0;
    for (long minute = 0; minute < total; minute += cfg.integration_step) {
        double meal_now = 0.0;
        while (next_meal < meals.size() && meals[next_meal].time < minute + cfg.integration_step) {
            if (meals[next_meal].time >= minute) meal_now += meals[next_meal].carbs;
            ++next_meal;
        }
        const double dose = controller.dose(p, h, meal_now);
        s.gut_carbs += meal_now;
        const PatientState d = derivative(p, s, dose / h);
        s.glucose += h * d.glucose;
        s.insulin_action += h * d.insulin_action;
        s.plasma_insulin += h * d.plasma_insulin;
        s.gut_carbs += h * d.gut_carbs;
        if (!std::isfinite(s.glucose) || !std::isfinite(s.insulin_action) || !std::isfinite(s.plasma_insulin) ||
            !std::isfinite(s.gut_carbs))
            throw SimulationError("non-finite state for patient " + p.id, minute + cfg.integration_step);

        period_insulin += dose;
        period_meal += meal_now;
        if (++step_in_period == steps_per_sample) {
            const double t = static_cast<double>(minute + cfg.integration_step);
            trace.rows.push_back({t, reading(s.glucose), period_insulin, period_meal});
            period_insulin = 0.0;
            period_meal = 0.0;
            step_in_period = 0;
        }
    }
    return trace;
}

}  // namespace apsafe::sim
