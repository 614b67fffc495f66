#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "apsafe/util/error.hpp"

namespace apsafe::verify {

enum class Sense { LE, GE, EQ };

/// a . x (sense) b
struct LinearConstraint {
    Eigen::VectorXd a;
    Sense sense = Sense::LE;
    double b = 0.0;
};

/// Variables live in [lo, hi]; rows are general linear constraints. With an
/// objective the solver maximizes it, otherwise it only decides feasibility.
struct LpProblem {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    std::vector<LinearConstraint> rows;
    std::optional<Eigen::VectorXd> maximize;
};

struct LpResult {
    bool feasible = false;
    Eigen::VectorXd x;
    double objective = 0.0;
};

namespace detail {

// Dense tableau simplex: minimize c.z subject to T z = rhs, z >= 0, with a
// starting basis given. Bland's rule for both entering and leaving choices.
class Tableau {
public:
    Eigen::MatrixXd t;  // rows x (cols + 1), last column is the right-hand side
    std::vector<Eigen::Index> basis;

    Eigen::Index rows() const { return t.rows(); }
    Eigen::Index cols() const { return t.cols() - 1; }

    void pivot(Eigen::Index r, Eigen::Index c) {
        t.row(r) /= t(r, c);
        for (Eigen::Index i = 0; i < t.rows(); ++i)
            if (i != r && t(i, c) != 0.0) t.row(i) -= t(i, c) * t.row(r);
        basis[static_cast<std::size_t>(r)] = c;
    }

    /// Runs to optimality of `cost` restricted to columns < active_cols.
    /// Returns false if the iteration cap is hit.
    bool optimize(const Eigen::VectorXd& cost, Eigen::Index active_cols, double tol, std::size_t max_iter) {
        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            // reduced costs: cost_j - sum_i cost_{basis_i} t(i, j)
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < active_cols; ++j) {
                if (is_basic(j)) continue;
                double rc = cost[j];
                for (Eigen::Index i = 0; i < rows(); ++i) rc -= cost[basis[static_cast<std::size_t>(i)]] * t(i, j);
                if (rc < -tol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return true;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < rows(); ++i)
                if (t(i, enter) > tol) best = std::min(best, t(i, cols()) / t(i, enter));
            Eigen::Index leave = -1;
            for (Eigen::Index i = 0; i < rows(); ++i) {
                if (t(i, enter) <= tol || t(i, cols()) / t(i, enter) > best + 1e-12) continue;
                if (leave < 0 || basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]) leave = i;
            }
            // columns are bounded by the box rows, so an unbounded ray means numerical trouble
            if (leave < 0) throw LpInstability("lp_instability: unbounded direction in a bounded problem");
            pivot(leave, enter);
        }
        return false;
    }

    bool is_basic(Eigen::Index j) const {
        return std::find(basis.begin(), basis.end(), j) != basis.end();
    }
};

}  // namespace detail

/// Two-phase dense simplex with Bland's rule. Pinned variables (lo == hi)
/// are substituted out. Returned points are checked against every constraint
/// within 10 * tol (scaled by the row's largest coefficient); a failed check
/// raises LpInstability rather than returning a doubtful answer.
inline LpResult lp_solve(const LpProblem& prob, double tol = 1e-7) {
    const Eigen::Index n = prob.lo.size();
    if (prob.hi.size() != n) throw DimensionError("lp bounds differ in length");
    for (const auto& r : prob.rows)
        if (r.a.size() != n) throw DimensionError("lp row has the wrong length");
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(prob.lo[i] <= prob.hi[i])) return {};

    // free columns, z = x - lo in [0, w]
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i)
        if (prob.hi[i] > prob.lo[i]) free.push_back(i);
    const auto nf = static_cast<Eigen::Index>(free.size());

    struct Row {
        Eigen::VectorXd a;
        Sense sense;
        double b;
    };
    std::vector<Row> rows;
    for (const auto& r : prob.rows) {
        Row row{Eigen::VectorXd(nf), r.sense, r.b - r.a.dot(prob.lo)};
        for (Eigen::Index k = 0; k < nf; ++k) row.a[k] = r.a[free[static_cast<std::size_t>(k)]];
        const double scale = row.a.cwiseAbs().maxCoeff();
        if (nf == 0 || scale == 0.0) {
            // constant row: decide directly
            const double slack = row.b;
            const bool ok = r.sense == Sense::LE ? slack >= -tol : r.sense == Sense::GE ? slack <= tol : std::abs(slack) <= tol;
            if (!ok) return {};
            continue;
        }
        row.a /= scale;
        row.b /= scale;
        rows.push_back(std::move(row));
    }
    for (Eigen::Index k = 0; k < nf; ++k) {
        Row ub{Eigen::VectorXd::Zero(nf), Sense::LE, prob.hi[free[static_cast<std::size_t>(k)]] - prob.lo[free[static_cast<std::size_t>(k)]]};
        ub.a[k] = 1.0;
        rows.push_back(std::move(ub));
    }

    // make every rhs non-negative
    for (auto& r : rows)
        if (r.b < 0.0) {
            r.a = -r.a;
            r.b = -r.b;
            if (r.sense == Sense::LE) r.sense = Sense::GE;
            else if (r.sense == Sense::GE) r.sense = Sense::LE;
        }

    const auto m = static_cast<Eigen::Index>(rows.size());
    Eigen::Index n_slack = 0, n_art = 0;
    for (const auto& r : rows) {
        if (r.sense != Sense::EQ) ++n_slack;
        if (r.sense != Sense::LE) ++n_art;
    }
    const Eigen::Index total = nf + n_slack + n_art;
    detail::Tableau tab;
    tab.t = Eigen::MatrixXd::Zero(m, total + 1);
    tab.basis.assign(static_cast<std::size_t>(m), -1);
    Eigen::Index s = nf, a = nf + n_slack;
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        tab.t.row(i).head(nf) = r.a.transpose();
        tab.t(i, total) = r.b;
        if (r.sense == Sense::LE) {
            tab.t(i, s) = 1.0;
            tab.basis[static_cast<std::size_t>(i)] = s++;
        } else {
            if (r.sense == Sense::GE) tab.t(i, s++) = -1.0;
            tab.t(i, a) = 1.0;
            tab.basis[static_cast<std::size_t>(i)] = a++;
        }
    }
    const std::size_t max_iter = static_cast<std::size_t>(50 * (m + total) + 1000);
    const double piv_tol = 1e-10;

    if (n_art > 0) {
        Eigen::VectorXd cost = Eigen::VectorXd::Zero(total);
        cost.tail(n_art).setOnes();
        if (!tab.optimize(cost, total, piv_tol, max_iter)) throw LpInstability("lp_instability: phase 1 iteration cap");
        double infeas = 0.0;
        for (Eigen::Index i = 0; i < m; ++i)
            if (tab.basis[static_cast<std::size_t>(i)] >= nf + n_slack) infeas += tab.t(i, total);
        if (infeas > tol) return {};
        // drive remaining artificials out of the basis
        for (Eigen::Index i = 0; i < m; ++i) {
            if (tab.basis[static_cast<std::size_t>(i)] < nf + n_slack) continue;
            for (Eigen::Index j = 0; j < nf + n_slack; ++j)
                if (std::abs(tab.t(i, j)) > 1e-9 && !tab.is_basic(j)) {
                    tab.pivot(i, j);
                    break;
                }
        }
        // rows whose artificial could not leave are redundant; zero them out
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto b = tab.basis[static_cast<std::size_t>(i)];
            if (b < nf + n_slack) continue;
            tab.t.row(i).setZero();
            tab.t(i, b) = 1.0;
        }
    }

    double objective = 0.0;
    if (prob.maximize) {
        Eigen::VectorXd cost = Eigen::VectorXd::Zero(total);
        for (Eigen::Index k = 0; k < nf; ++k) cost[k] = -(*prob.maximize)[free[static_cast<std::size_t>(k)]];
        if (!tab.optimize(cost, nf + n_slack, piv_tol, max_iter)) throw LpInstability("lp_instability: phase 2 iteration cap");
    }

    Eigen::VectorXd x = prob.lo;
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto b = tab.basis[static_cast<std::size_t>(i)];
        if (b < nf) x[free[static_cast<std::size_t>(b)]] += tab.t(i, total);
    }
    x = x.cwiseMax(prob.lo).cwiseMin(prob.hi);
    for (const auto& r : prob.rows) {
        const double scale = std::max(1.0, r.a.cwiseAbs().maxCoeff());
        const double v = r.a.dot(x) - r.b;
        const double allowed = 10.0 * tol * scale;
        const bool ok = r.sense == Sense::LE ? v <= allowed : r.sense == Sense::GE ? v >= -allowed : std::abs(v) <= allowed;
        if (!ok) throw LpInstability("lp_instability: solution violates a constraint by " + std::to_string(std::abs(v)));
    }
    if (prob.maximize) objective = prob.maximize->dot(x);
    return {true, x, objective};
}

inline LpResult lp_feasible(const LpProblem& prob, double tol = 1e-7) {
    LpProblem p = prob;
    p.maximize.reset();
    return lp_solve(p, tol);
}

}  // namespace apsafe::verify
