#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

#include "apsafe/prop/formula.hpp"
#include "apsafe/util/error.hpp"

namespace apsafe::verify {

/// Axis-aligned input region, network units.
struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    Box() = default;
    Box(Eigen::VectorXd l, Eigen::VectorXd h) : lo(std::move(l)), hi(std::move(h)) {
        if (lo.size() != hi.size()) throw DimensionError("box bounds differ in length");
        for (Eigen::Index i = 0; i < lo.size(); ++i)
            if (!(lo[i] <= hi[i])) throw ValidationError("box has lo > hi in dimension " + std::to_string(i));
    }

    static Box from_intervals(const std::vector<prop::Interval>& iv) {
        Eigen::VectorXd l(static_cast<Eigen::Index>(iv.size())), h(static_cast<Eigen::Index>(iv.size()));
        for (std::size_t i = 0; i < iv.size(); ++i) {
            l[static_cast<Eigen::Index>(i)] = iv[i].lo;
            h[static_cast<Eigen::Index>(i)] = iv[i].hi;
        }
        return Box(l, h);
    }

    static Box point(const Eigen::VectorXd& x) { return Box(x, x); }

    Eigen::Index dim() const { return lo.size(); }
    Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
    Eigen::VectorXd width() const { return hi - lo; }

    bool contains(const Eigen::VectorXd& x, double tol = 0.0) const {
        for (Eigen::Index i = 0; i < lo.size(); ++i)
            if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
        return true;
    }

    bool contains(const Box& other) const {
        return (other.lo.array() >= lo.array()).all() && (other.hi.array() <= hi.array()).all();
    }

    /// Halves dimension `d` at its midpoint.
    std::pair<Box, Box> split(Eigen::Index d) const {
        const double m = 0.5 * (lo[d] + hi[d]);
        Box a = *this, b = *this;
        a.hi[d] = m;
        b.lo[d] = m;
        return {a, b};
    }

    /// Widest dimension; lowest index wins ties.
    Eigen::Index widest() const {
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < lo.size(); ++i)
            if (hi[i] - lo[i] > hi[best] - lo[best]) best = i;
        return best;
    }

    Eigen::VectorXd clamp(const Eigen::VectorXd& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

    friend bool operator==(const Box& a, const Box& b) { return a.lo == b.lo && a.hi == b.hi; }
};

}  // namespace apsafe::verify
