#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "apsafe/nn/scaler.hpp"
#include "apsafe/prop/formula.hpp"
#include "apsafe/util/error.hpp"
#include "apsafe/util/format.hpp"

namespace apsafe::prop {

inline constexpr double kStrictEpsilon = 1e-6;
inline constexpr std::size_t kDefaultClauseLimit = 4096;

/// A property restated in network units with every threshold substituted,
/// plus one note per unit decision taken on the way.
struct Resolved {
    Property property;
    std::vector<Interval> box;
    std::vector<std::string> notes;
};

namespace detail {

inline std::string var_name(VarRef v) { return std::string(to_string(v.channel)) + "[" + std::to_string(v.index) + "]"; }

inline void substitute_bound(AffineAtom& a, const std::map<std::string, double>& thresholds) {
    if (a.bound_name.empty()) return;
    a.bound = thresholds.at(a.bound_name);
    a.bound_name.clear();
}

// raw = min + range * x, so sum(c * raw) = sum(c * range * x) + sum(c * min).
inline void to_network_units(AffineAtom& a, const nn::MinMaxScaler& sc) {
    for (auto& t : a.terms) {
        const auto k = t.var.flat();
        a.constant += t.coef * sc.mins()[k];
        t.coef *= sc.range(k);
    }
}

inline const nn::MinMaxScaler& need_scaler(const nn::MinMaxScaler* sc, const std::string& what) {
    if (!sc || !sc->fitted()) throw ValidationError(what + " is in physical units but no scaler was supplied");
    if (sc->size() != kInputs) throw DimensionError("scaler does not have " + std::to_string(kInputs) + " features");
    return *sc;
}

}  // namespace detail

/// Map a property into network units. Box entries and input atoms are
/// converted according to the unit mode; output atoms are always mg/dL and
/// never touched.
inline Resolved resolve(const Property& p, const nn::MinMaxScaler* scaler = nullptr) {
    p.validate();
    Resolved r;
    r.property = p;
    r.property.units = UnitMode::Native;
    r.box.assign(kInputs, Interval{0.0, 1.0});
    for (std::size_t k = 0; k < kInputs; ++k) {
        if (!p.box[k]) continue;
        const auto iv = *p.box[k];
        const bool physical = p.units == UnitMode::Physical ||
                              (p.units == UnitMode::Mixed && !(iv.lo >= 0.0 && iv.hi <= 1.0));
        const auto name = detail::var_name(VarRef::from_input(k));
        if (!physical) {
            r.box[k] = iv;
            if (p.units == UnitMode::Mixed)
                r.notes.push_back("box " + name + " = [" + util::format_double(iv.lo) + "," +
                                  util::format_double(iv.hi) + "] read as network units");
            continue;
        }
        const auto& sc = detail::need_scaler(scaler, "box " + name);
        r.box[k] = {sc.apply(k, iv.lo), sc.apply(k, iv.hi)};
        r.notes.push_back("box " + name + " = [" + util::format_double(iv.lo) + "," + util::format_double(iv.hi) +
                          "] read as physical, network [" + util::format_double(r.box[k].lo) + "," +
                          util::format_double(r.box[k].hi) + "]");
    }
    for (std::size_t k = 0; k < kInputs; ++k) r.property.box[k] = r.box[k];

    r.property.pre.for_each_atom_mut([&](AffineAtom& a) {
        detail::substitute_bound(a, p.thresholds);
        const bool physical = p.units == UnitMode::Physical || (p.units == UnitMode::Mixed && std::abs(a.bound) > 1.0);
        if (physical) {
            detail::to_network_units(a, detail::need_scaler(scaler, "a pre atom"));
            r.notes.push_back("pre atom on " + detail::var_name(a.terms.front().var) + " with bound " +
                              util::format_double(a.bound) + " read as physical");
        } else if (p.units == UnitMode::Mixed) {
            r.notes.push_back("pre atom on " + detail::var_name(a.terms.front().var) + " with bound " +
                              util::format_double(a.bound) + " read as network units");
        }
    });
    r.property.post.for_each_atom_mut([&](AffineAtom& a) { detail::substitute_bound(a, p.thresholds); });
    return r;
}

/// Implication semantics on concrete vectors: x in network units, y in
/// mg/dL. The box is a domain restriction and is not part of the check.
inline bool evaluate_concrete(const Property& p, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              const nn::MinMaxScaler* scaler = nullptr) {
    if (x.size() != static_cast<Eigen::Index>(kInputs) || y.size() != static_cast<Eigen::Index>(kOutputs))
        throw DimensionError("evaluate_concrete expects 36 inputs and 6 outputs");
    const auto r = resolve(p, scaler);
    return !r.property.pre.holds(x, y) || r.property.post.holds(x, y);
}

inline bool in_box(const std::vector<Interval>& box, const Eigen::VectorXd& x) {
    for (std::size_t k = 0; k < box.size(); ++k)
        if (!box[k].contains(x[static_cast<Eigen::Index>(k)])) return false;
    return true;
}

/// Dense affine atom over either the 36 inputs or the 6 outputs.
struct LinearAtom {
    Eigen::VectorXd coef;
    double constant = 0.0;
    Cmp cmp = Cmp::LE;
    double bound = 0.0;
    bool abs = false;

    double value(const Eigen::VectorXd& v) const { return coef.dot(v) + constant; }

    bool holds(const Eigen::VectorXd& v) const {
        const double e = value(v);
        return compare(abs ? std::abs(e) : e, cmp, bound);
    }

    /// Signed slack: >= 0 iff the closed form of the atom holds.
    double margin(const Eigen::VectorXd& v) const {
        const double e = abs ? std::abs(value(v)) : value(v);
        return is_upper(cmp) ? bound - e : e - bound;
    }

    /// Bound with strict comparisons widened by eps, for the over-approximated
    /// violation set.
    double widened_bound(double eps) const {
        if (!is_strict(cmp)) return bound;
        return is_upper(cmp) ? bound + eps : bound - eps;
    }
};

/// One conjunctive piece of the violation set:
/// x in box, every pre atom holds at x, every neg_post atom holds at N(x).
struct Query {
    std::vector<Interval> box;
    std::vector<LinearAtom> pre;
    std::vector<LinearAtom> neg_post;
    std::size_t pre_clause = 0;
    std::size_t post_clause = 0;

    bool satisfied_by(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        if (!in_box(box, x)) return false;
        for (const auto& a : pre)
            if (!a.holds(x)) return false;
        for (const auto& a : neg_post)
            if (!a.holds(y)) return false;
        return true;
    }
};

/// Negation pushed to the atoms (comparator flip); abs is kept on the atom.
inline Formula negate(const Formula& f) {
    switch (f.kind) {
        case Formula::Kind::Atom: {
            auto a = f.atom;
            a.cmp = negate(a.cmp);
            return Formula::leaf(std::move(a));
        }
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            std::vector<Formula> c;
            for (const auto& ch : f.children) c.push_back(negate(ch));
            return f.kind == Formula::Kind::And ? Formula::any(std::move(c)) : Formula::all(std::move(c));
        }
    }
    return f;
}

namespace detail {

using Clause = std::vector<LinearAtom>;

inline LinearAtom dense(const AffineAtom& a, bool inputs) {
    LinearAtom l;
    l.coef = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(inputs ? kInputs : kOutputs));
    for (const auto& t : a.terms) l.coef[static_cast<Eigen::Index>(t.var.flat())] += t.coef;
    l.constant = a.constant;
    l.cmp = a.cmp;
    l.bound = a.bound;
    l.abs = a.abs;
    return l;
}

inline void check_limit(std::size_t n, std::size_t limit) {
    if (n > limit)
        throw CapacityError("DNF expansion needs " + std::to_string(n) + " clauses, limit is " + std::to_string(limit));
}

// |e| <= c and |e| < c always become two plain atoms. |e| >= c and |e| > c
// become a two-way disjunction when split_abs_ge is set and stay a single
// abs atom otherwise.
inline std::vector<Clause> dnf(const Formula& f, bool inputs, bool split_abs_ge, std::size_t limit) {
    switch (f.kind) {
        case Formula::Kind::Atom: {
            auto l = dense(f.atom, inputs);
            if (!l.abs) return {{l}};
            auto up = l, down = l;
            up.abs = down.abs = false;
            down.bound = -l.bound;
            if (is_upper(l.cmp)) {
                down.cmp = l.cmp == Cmp::LE ? Cmp::GE : Cmp::GT;
                return {{up, down}};
            }
            if (!split_abs_ge) return {{l}};
            down.cmp = l.cmp == Cmp::GE ? Cmp::LE : Cmp::LT;
            return {{up}, {down}};
        }
        case Formula::Kind::Or: {
            std::vector<Clause> out;
            for (const auto& c : f.children) {
                auto sub = dnf(c, inputs, split_abs_ge, limit);
                check_limit(out.size() + sub.size(), limit);
                out.insert(out.end(), sub.begin(), sub.end());
            }
            return out;
        }
        case Formula::Kind::And: {
            std::vector<Clause> out{{}};
            for (const auto& c : f.children) {
                auto sub = dnf(c, inputs, split_abs_ge, limit);
                check_limit(out.size() * sub.size(), limit);
                std::vector<Clause> next;
                next.reserve(out.size() * sub.size());
                for (const auto& a : out)
                    for (const auto& b : sub) {
                        Clause merged = a;
                        merged.insert(merged.end(), b.begin(), b.end());
                        next.push_back(std::move(merged));
                    }
                out = std::move(next);
            }
            return out;
        }
    }
    return {};
}

}  // namespace detail

/// Violation queries of a resolved property: DNF(pre) x DNF(not post).
inline std::vector<Query> compile(const Resolved& r, std::size_t clause_limit = kDefaultClauseLimit) {
    const auto& p = r.property;
    p.validate();
    auto pre = detail::dnf(p.pre, true, true, clause_limit);
    auto neg = detail::dnf(negate(p.post), false, false, clause_limit);
    detail::check_limit(pre.size() * neg.size(), clause_limit);
    std::vector<Query> out;
    for (std::size_t i = 0; i < pre.size(); ++i)
        for (std::size_t j = 0; j < neg.size(); ++j) out.push_back({r.box, pre[i], neg[j], i, j});
    return out;
}

inline std::vector<Query> compile(const Property& p, const nn::MinMaxScaler* scaler = nullptr,
                                  std::size_t clause_limit = kDefaultClauseLimit) {
    return compile(resolve(p, scaler), clause_limit);
}

}  // namespace apsafe::prop
