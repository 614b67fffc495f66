#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include "apsafe/nn/network.hpp"
#include "apsafe/prop/compile.hpp"
#include "apsafe/verify/config.hpp"
#include "apsafe/verify/query.hpp"

namespace apsafe::verify {

namespace detail {

// Coordinate ascent on the violation margin. Steps start at a quarter of
// each dimension's width and halve after a sweep that made no progress.
inline Eigen::VectorXd climb(const nn::Network& net, const prop::Query& q, const Box& box, Eigen::VectorXd x,
                             std::size_t sweeps) {
    double best = violation_margin(q, x, net.forward_scaled(x));
    Eigen::VectorXd step = 0.25 * box.width();
    for (std::size_t s = 0; s < sweeps && best <= 0.0; ++s) {
        bool moved = false;
        for (Eigen::Index d = 0; d < x.size(); ++d) {
            if (step[d] <= 0.0) continue;
            for (double dir : {1.0, -1.0}) {
                Eigen::VectorXd c = x;
                c[d] = std::clamp(c[d] + dir * step[d], box.lo[d], box.hi[d]);
                const double m = violation_margin(q, c, net.forward_scaled(c));
                if (m > best) {
                    best = m;
                    x = c;
                    moved = true;
                    break;
                }
            }
        }
        if (!moved) {
            step *= 0.5;
            if (step.maxCoeff() < 1e-12) break;
        }
    }
    return x;
}

}  // namespace detail

/// Cheap counterexample search. Per compiled query: the box center, then
/// uniform draws kept only if they satisfy pre, then coordinate ascent from
/// the best kept draw. Returned witnesses have passed validate_witness.
inline std::optional<Witness> falsify(const nn::Network& net, const prop::Property& p, const VerifierConfig& cfg) {
    const auto queries = prop::compile(p, &net.scaler());
    if (queries.empty()) return std::nullopt;
    std::mt19937_64 rng(cfg.seed);
    const std::size_t per_query = std::max<std::size_t>(1, cfg.falsify_samples / queries.size());
    auto accept = [&](std::size_t qi, const Eigen::VectorXd& x) -> std::optional<Witness> {
        const Eigen::VectorXd y = net.forward_scaled(x);
        if (!queries[qi].satisfied_by(x, y) || !validate_witness(net, p, x)) return std::nullopt;
        return Witness{x, y, qi};
    };
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const auto& q = queries[qi];
        const auto prep = detail::prepare(q, 0.0);
        if (prep.empty) continue;
        const Box& box = prep.box;
        std::optional<Eigen::VectorXd> seed;
        double seed_margin = -std::numeric_limits<double>::infinity();
        auto consider = [&](const Eigen::VectorXd& x) -> std::optional<Witness> {
            for (const auto& a : q.pre)
                if (!a.holds(x)) return std::nullopt;
            if (auto w = accept(qi, x)) return w;
            const double m = detail::violation_margin(q, x, net.forward_scaled(x));
            if (!seed || m > seed_margin) {
                seed = x;
                seed_margin = m;
            }
            return std::nullopt;
        };
        if (auto w = consider(box.center())) return w;
        std::vector<std::uniform_real_distribution<double>> dists;
        for (Eigen::Index d = 0; d < box.dim(); ++d) dists.emplace_back(box.lo[d], box.hi[d]);
        Eigen::VectorXd x(box.dim());
        for (std::size_t s = 1; s < per_query; ++s) {
            for (Eigen::Index d = 0; d < box.dim(); ++d) x[d] = dists[static_cast<std::size_t>(d)](rng);
            if (auto w = consider(x)) return w;
        }
        if (!seed) continue;
        if (auto w = accept(qi, detail::climb(net, q, box, *seed, cfg.falsify_descent_steps))) return w;
    }
    return std::nullopt;
}

}  // namespace apsafe::verify
