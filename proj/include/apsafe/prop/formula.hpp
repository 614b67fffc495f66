#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apsafe/data/dataset.hpp"
#include "apsafe/util/error.hpp"

namespace apsafe::prop {

inline constexpr std::size_t kInputs = data::kInputDim;
inline constexpr std::size_t kOutputs = data::kOutputSteps;

enum class Chan { BG_in, In_in, M_in, BG_out };

inline std::string_view to_string(Chan c) {
    switch (c) {
        case Chan::BG_in: return "BG_in";
        case Chan::In_in: return "In_in";
        case Chan::M_in: return "M_in";
        case Chan::BG_out: return "BG_out";
    }
    return "?";
}

inline std::size_t channel_length(Chan c) { return c == Chan::BG_out ? kOutputs : data::kInputSteps; }

struct VarRef {
    Chan channel = Chan::BG_in;
    std::size_t index = 0;  // 0-based timestep; inputs 0 = oldest, outputs 0 = nearest

    bool is_input() const { return channel != Chan::BG_out; }

    /// Position in the network input vector (inputs) or output vector.
    std::size_t flat() const {
        switch (channel) {
            case Chan::BG_in: return data::input_index(data::kBg, index);
            case Chan::In_in: return data::input_index(data::kInsulin, index);
            case Chan::M_in: return data::input_index(data::kMeal, index);
            case Chan::BG_out: return index;
        }
        return 0;
    }

    static VarRef from_input(std::size_t flat) {
        return {static_cast<Chan>(flat / data::kInputSteps), flat % data::kInputSteps};
    }

    void validate() const {
        if (index >= channel_length(channel))
            throw ValidationError(std::string(to_string(channel)) + " index " + std::to_string(index) + " out of range");
    }

    friend bool operator==(const VarRef&, const VarRef&) = default;
};

inline VarRef bg_in(std::size_t i) { return {Chan::BG_in, i}; }
inline VarRef in_in(std::size_t i) { return {Chan::In_in, i}; }
inline VarRef m_in(std::size_t i) { return {Chan::M_in, i}; }
inline VarRef bg_out(std::size_t j) { return {Chan::BG_out, j}; }

enum class Cmp { LE, GE, LT, GT };

inline std::string_view to_string(Cmp c) {
    switch (c) {
        case Cmp::LE: return "<=";
        case Cmp::GE: return ">=";
        case Cmp::LT: return "<";
        case Cmp::GT: return ">";
    }
    return "?";
}

inline Cmp negate(Cmp c) {
    switch (c) {
        case Cmp::LE: return Cmp::GT;
        case Cmp::GE: return Cmp::LT;
        case Cmp::LT: return Cmp::GE;
        case Cmp::GT: return Cmp::LE;
    }
    return c;
}

inline bool is_upper(Cmp c) { return c == Cmp::LE || c == Cmp::LT; }
inline bool is_strict(Cmp c) { return c == Cmp::LT || c == Cmp::GT; }

inline bool compare(double lhs, Cmp c, double rhs) {
    switch (c) {
        case Cmp::LE: return lhs <= rhs;
        case Cmp::GE: return lhs >= rhs;
        case Cmp::LT: return lhs < rhs;
        case Cmp::GT: return lhs > rhs;
    }
    return false;
}

struct Term {
    double coef = 1.0;
    VarRef var;

    friend bool operator==(const Term&, const Term&) = default;
};

/// (abs ? |e| : e) cmp bound, with e = sum(coef * var) + constant. A named
/// bound refers to a threshold and is filled in by `resolve`.
struct AffineAtom {
    std::vector<Term> terms;
    double constant = 0.0;
    Cmp cmp = Cmp::LE;
    double bound = 0.0;
    std::string bound_name;
    bool abs = false;

    bool over_inputs() const {
        for (const auto& t : terms)
            if (!t.var.is_input()) return false;
        return true;
    }
    bool over_outputs() const {
        for (const auto& t : terms)
            if (t.var.is_input()) return false;
        return true;
    }

    void validate() const {
        if (terms.empty()) throw ValidationError("atom has no terms");
        for (const auto& t : terms) {
            t.var.validate();
            if (!std::isfinite(t.coef)) throw ValidationError("atom coefficient is not finite");
        }
        if (!std::isfinite(constant) || !std::isfinite(bound)) throw ValidationError("atom constant or bound is not finite");
    }

    double expression(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        double e = constant;
        for (const auto& t : terms) e += t.coef * (t.var.is_input() ? x[static_cast<Eigen::Index>(t.var.flat())]
                                                                    : y[static_cast<Eigen::Index>(t.var.flat())]);
        return e;
    }

    bool holds(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        if (!bound_name.empty()) throw ValidationError("threshold '" + bound_name + "' is unresolved");
        const double e = expression(x, y);
        return compare(abs ? std::abs(e) : e, cmp, bound);
    }

    friend bool operator==(const AffineAtom&, const AffineAtom&) = default;
};

/// Negation-free formula tree. An empty And is true, an empty Or is false.
struct Formula {
    enum class Kind { Atom, And, Or };
    Kind kind = Kind::And;
    AffineAtom atom;
    std::vector<Formula> children;

    static Formula leaf(AffineAtom a) {
        Formula f;
        f.kind = Kind::Atom;
        f.atom = std::move(a);
        return f;
    }
    static Formula all(std::vector<Formula> c) {
        Formula f;
        f.kind = Kind::And;
        f.children = std::move(c);
        return f;
    }
    static Formula any(std::vector<Formula> c) {
        Formula f;
        f.kind = Kind::Or;
        f.children = std::move(c);
        return f;
    }
    static Formula truth() { return all({}); }

    bool is_truth() const { return kind == Kind::And && children.empty(); }

    template <class Fn>
    void for_each_atom(Fn&& fn) const {
        if (kind == Kind::Atom) fn(atom);
        for (const auto& c : children) c.for_each_atom(fn);
    }
    template <class Fn>
    void for_each_atom_mut(Fn&& fn) {
        if (kind == Kind::Atom) fn(atom);
        for (auto& c : children) c.for_each_atom_mut(fn);
    }

    bool holds(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        switch (kind) {
            case Kind::Atom: return atom.holds(x, y);
            case Kind::And:
                for (const auto& c : children)
                    if (!c.holds(x, y)) return false;
                return true;
            case Kind::Or:
                for (const auto& c : children)
                    if (c.holds(x, y)) return true;
                return false;
        }
        return false;
    }

    friend bool operator==(const Formula&, const Formula&) = default;
};

/// Single atom builders used by the templates.
inline Formula atom(std::vector<Term> terms, Cmp cmp, double bound, bool abs = false) {
    AffineAtom a;
    a.terms = std::move(terms);
    a.cmp = cmp;
    a.bound = bound;
    a.abs = abs;
    return Formula::leaf(std::move(a));
}

inline Formula atom(std::vector<Term> terms, Cmp cmp, std::string threshold, bool abs = false) {
    AffineAtom a;
    a.terms = std::move(terms);
    a.cmp = cmp;
    a.bound_name = std::move(threshold);
    a.abs = abs;
    return Formula::leaf(std::move(a));
}

/// x(b) - x(a)
inline std::vector<Term> diff(VarRef b, VarRef a) { return {{1.0, b}, {-1.0, a}}; }

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// How input bounds in a property are to be read.
///   Native: network units (after min-max scaling).
///   Physical: mg/dL, U, g; mapped through the model's scaler.
///   Mixed: per box interval and per input atom, values inside [0,1] are
///   taken as network units and anything else as physical.
enum class UnitMode { Native, Physical, Mixed };

inline std::string_view to_string(UnitMode u) {
    switch (u) {
        case UnitMode::Native: return "native";
        case UnitMode::Physical: return "physical";
        case UnitMode::Mixed: return "mixed";
    }
    return "?";
}

inline UnitMode parse_unit_mode(std::string_view s) {
    if (s == "native") return UnitMode::Native;
    if (s == "physical") return UnitMode::Physical;
    if (s == "mixed") return UnitMode::Mixed;
    throw ValidationError("unknown unit mode '" + std::string(s) + "'");
}

/// Per-input box as written; unset entries default to the unit interval in
/// network units (the training range).
using BoxSpec = std::vector<std::optional<Interval>>;

inline BoxSpec empty_box() { return BoxSpec(kInputs); }

struct Property {
    std::string id;
    BoxSpec box = empty_box();
    Formula pre = Formula::truth();
    Formula post;
    std::map<std::string, double> thresholds;
    UnitMode units = UnitMode::Native;

    /// Throws on malformed structure: wrong-sided variables, bad indices,
    /// empty boxes, or thresholds referenced but not given.
    void validate() const {
        if (box.size() != kInputs) throw DimensionError("box must have " + std::to_string(kInputs) + " entries");
        for (std::size_t k = 0; k < box.size(); ++k)
            if (box[k] && !(box[k]->lo <= box[k]->hi))
                throw ValidationError("box entry " + std::to_string(k) + " has lo > hi");
        auto check = [&](const Formula& f, bool inputs, const char* where) {
            f.for_each_atom([&](const AffineAtom& a) {
                a.validate();
                if (inputs ? !a.over_inputs() : !a.over_outputs())
                    throw ValidationError(std::string(where) + " atoms must only mention " +
                                          (inputs ? "input" : "output") + " variables");
                if (!a.bound_name.empty() && !thresholds.count(a.bound_name))
                    throw ValidationError("property " + id + " references missing threshold '" + a.bound_name + "'");
            });
        };
        check(pre, true, "pre");
        check(post, false, "post");
    }

    friend bool operator==(const Property&, const Property&) = default;
};

}  // namespace apsafe::prop
