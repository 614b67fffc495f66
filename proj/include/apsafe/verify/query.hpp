#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "apsafe/nn/network.hpp"
#include "apsafe/prop/compile.hpp"
#include "apsafe/verify/box.hpp"
#include "apsafe/verify/lp.hpp"

namespace apsafe::verify {

/// A violating input, network units, with its output.
struct Witness {
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    std::size_t query = 0;
};

/// Witness validity: x in the property's box, pre holds at x, and the
/// property evaluates to false on (x, N(x)).
inline bool validate_witness(const nn::Network& net, const prop::Property& p, const Eigen::VectorXd& x) {
    const auto r = prop::resolve(p, &net.scaler());
    if (!prop::in_box(r.box, x)) return false;
    const Eigen::VectorXd y = net.forward_scaled(x);
    if (!r.property.pre.holds(x, y)) return false;
    return !prop::evaluate_concrete(p, x, y, &net.scaler());
}

namespace detail {

inline Sense sense_of(prop::Cmp c) { return prop::is_upper(c) ? Sense::LE : Sense::GE; }

/// Row for an input-side atom: coef . x (<=|>=) bound - constant.
inline LinearConstraint input_row(const prop::LinearAtom& a, double eps) {
    return {a.coef, sense_of(a.cmp), a.widened_bound(eps) - a.constant};
}

/// A compiled query with its single-variable pre atoms folded into the box.
struct PreparedQuery {
    const prop::Query* query = nullptr;
    Box box;
    bool empty = false;  // folding emptied the box
    std::vector<LinearConstraint> pre_rows;
};

inline PreparedQuery prepare(const prop::Query& q, double eps) {
    PreparedQuery p;
    p.query = &q;
    Eigen::VectorXd lo(static_cast<Eigen::Index>(q.box.size())), hi(lo.size());
    for (std::size_t k = 0; k < q.box.size(); ++k) {
        lo[static_cast<Eigen::Index>(k)] = q.box[k].lo;
        hi[static_cast<Eigen::Index>(k)] = q.box[k].hi;
    }
    for (const auto& a : q.pre) {
        p.pre_rows.push_back(input_row(a, eps));
        Eigen::Index nz = 0, idx = -1;
        for (Eigen::Index i = 0; i < a.coef.size(); ++i)
            if (a.coef[i] != 0.0) ++nz, idx = i;
        if (nz != 1) continue;
        const double v = (a.widened_bound(eps) - a.constant) / a.coef[idx];
        const bool upper = prop::is_upper(a.cmp) == (a.coef[idx] > 0.0);
        if (upper) hi[idx] = std::min(hi[idx], v);
        else lo[idx] = std::max(lo[idx], v);
    }
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        if (lo[i] > hi[i]) p.empty = true;
    if (!p.empty) p.box = Box(lo, hi);
    return p;
}

/// Smallest signed slack over pre atoms (at x) and neg_post atoms (at y);
/// positive means a strict violation of the property.
inline double violation_margin(const prop::Query& q, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& a : q.pre) m = std::min(m, a.margin(x));
    for (const auto& a : q.neg_post) m = std::min(m, a.margin(y));
    return m;
}

/// Point in box satisfying `hard` and `soft`, pushed as deep into the soft
/// rows as possible (slack normalized by each row's largest coefficient).
/// Returns the point and the achieved slack, or nothing if infeasible.
inline std::optional<std::pair<Eigen::VectorXd, double>> deepest_point(const Box& box,
                                                                       const std::vector<LinearConstraint>& hard,
                                                                       const std::vector<LinearConstraint>& soft,
                                                                       double tol, std::size_t& lp_calls) {
    const auto n = box.dim();
    LpProblem lp;
    lp.lo.resize(n + 1);
    lp.hi.resize(n + 1);
    lp.lo.head(n) = box.lo;
    lp.hi.head(n) = box.hi;
    lp.lo[n] = 0.0;
    lp.hi[n] = 1.0;
    auto extend = [&](const LinearConstraint& r, double t) {
        LinearConstraint e{Eigen::VectorXd::Zero(n + 1), r.sense, r.b};
        e.a.head(n) = r.a;
        const double s = std::max(1e-12, r.a.cwiseAbs().maxCoeff());
        e.a[n] = r.sense == Sense::LE ? t * s : r.sense == Sense::GE ? -t * s : 0.0;
        return e;
    };
    for (const auto& r : hard) lp.rows.push_back(extend(r, 0.0));
    for (const auto& r : soft) lp.rows.push_back(extend(r, 1.0));
    lp.maximize = Eigen::VectorXd::Zero(n + 1);
    (*lp.maximize)[n] = 1.0;
    ++lp_calls;
    const auto res = lp_solve(lp, tol);
    if (!res.feasible) return std::nullopt;
    return std::make_pair(Eigen::VectorXd(res.x.head(n)), res.x[n]);
}

}  // namespace detail
}  // namespace apsafe::verify
