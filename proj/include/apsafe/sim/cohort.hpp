#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <random>
#include <thread>
#include <vector>

#include "apsafe/sim/meals.hpp"
#include "apsafe/sim/patient.hpp"
#include "apsafe/sim/simulator.hpp"
#include "apsafe/sim/trace.hpp"

namespace apsafe::sim {

/// Independent per-task seed derived from a base seed and a task index.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

struct SimulatedPatient {
    PatientParams params;
    std::uint64_t seed = 0;
    std::vector<MealEvent> meals;
    SimTrace trace;
    TraceValidation validation;
};

/// Simulates every patient with its own derived seed. Results are identical
/// for any thread count.
inline std::vector<SimulatedPatient> simulate_cohort(const std::vector<PatientParams>& cohort, const SimConfig& base,
                                                     unsigned threads = 1) {
    std::vector<SimulatedPatient> out(cohort.size());
    auto run_one = [&](std::size_t i) {
        SimConfig cfg = base;
        cfg.seed = derive_seed(base.seed, i);
        std::mt19937_64 rng(cfg.seed);
        auto& r = out[i];
        r.params = cohort[i];
        r.seed = cfg.seed;
        r.meals = generate_meals(cfg, rng);
        r.trace = simulate_patient(cohort[i], cfg, r.meals);
        r.validation = validate_trace(r.trace);
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cohort.size())));
    if (threads <= 1) {
        for (std::size_t i = 0; i < cohort.size(); ++i) run_one(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i; (i = next.fetch_add(1)) < cohort.size();) run_one(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace apsafe::sim
