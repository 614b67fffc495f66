#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "apsafe/util/error.hpp"

namespace apsafe::sim {

/// Carbohydrate intake at a whole minute since trace start.
struct MealEvent {
    long time = 0;  // minutes
    double carbs = 0.0;  // g

    friend bool operator==(const MealEvent&, const MealEvent&) = default;
};

/// One daily meal opportunity: a clock-time window, a carb range and the
/// probability that the meal happens on a given day.
struct MealWindow {
    long start_min = 0;  // clock minutes, inclusive
    long end_min = 0;    // clock minutes, exclusive
    double carbs_min = 20.0;
    double carbs_max = 80.0;
    double probability = 0.95;
};

enum class ControllerMode { BasalBolus, BasalOnly, Off };

struct SimConfig {
    long days = 40;
    long sample_period = 5;     // minutes
    long integration_step = 1;  // minutes
    std::vector<MealWindow> meal_schedule = default_meal_schedule();
    std::uint64_t seed = 0;
    double cgm_noise_sd = 0.0;  // mg/dL
    ControllerMode controller = ControllerMode::BasalBolus;

    /// Breakfast 7-9 h, lunch 12-14 h, dinner 18-20 h; 20-80 g; p = 0.95.
    static std::vector<MealWindow> default_meal_schedule() {
        return {{7 * 60, 9 * 60, 20.0, 80.0, 0.95},
                {12 * 60, 14 * 60, 20.0, 80.0, 0.95},
                {18 * 60, 20 * 60, 20.0, 80.0, 0.95}};
    }

    long total_minutes() const { return days * 1440; }
    long rows() const { return total_minutes() / sample_period + 1; }

    void validate() const {
        if (days < 1) throw ValidationError("days must be at least 1");
        if (integration_step < 1) throw ValidationError("integration_step must be positive");
        if (sample_period < 1 || sample_period % integration_step != 0)
            throw ValidationError("sample_period must be a positive multiple of integration_step");
        if (1440 % sample_period != 0) throw ValidationError("sample_period must divide a day");
        if (!(cgm_noise_sd >= 0.0)) throw ValidationError("cgm_noise_sd must be non-negative");
        for (const auto& w : meal_schedule) {
            if (w.start_min < 0 || w.end_min > 1440 || w.end_min <= w.start_min)
                throw ValidationError("meal window must satisfy 0 <= start < end <= 1440");
            if (!(w.carbs_min > 0.0) || w.carbs_max < w.carbs_min)
                throw ValidationError("meal carb range must be positive and ordered");
            if (!(w.probability >= 0.0 && w.probability <= 1.0))
                throw ValidationError("meal probability must lie in [0,1]");
        }
    }
};

/// Per day, each window contributes at most one meal with its probability;
/// the time is uniform over the window's minutes and carbs uniform over its
/// range. Meals come out sorted by time.
template <class Rng>
std::vector<MealEvent> generate_meals(const SimConfig& cfg, Rng& rng) {
    cfg.validate();
    std::vector<MealEvent> meals;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (long day = 0; day < cfg.days; ++day) {
        for (const auto& w : cfg.meal_schedule) {
            const bool happens = coin(rng) < w.probability;
            const long minute = std::uniform_int_distribution<long>(w.start_min, w.end_min - 1)(rng);
            const double carbs = std::uniform_real_distribution<double>(w.carbs_min, w.carbs_max)(rng);
            if (happens) meals.push_back({day * 1440 + minute, carbs});
        }
    }
    std::stable_sort(meals.begin(), meals.end(),
                     [](const MealEvent& a, const MealEvent& b) { return a.time < b.time; });
    return meals;
}

}  // namespace apsafe::sim
