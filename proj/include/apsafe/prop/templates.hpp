#pragma once

#include <map>
#include <string>
#include <vector>

#include "apsafe/prop/formula.hpp"
#include "apsafe/util/error.hpp"

namespace apsafe::prop {

/// Requirement ids with a formal template. ML-RQ1.3 is listed separately
/// because it has none.
inline const std::vector<std::string>& template_ids() {
    static const std::vector<std::string> ids{"ML-RQ1.1", "ML-RQ1.2", "ML-RQ1.4", "ML-RQ1.5",
                                              "ML-RQ1.6", "ML-RQ1.7", "ML-RQ1.8"};
    return ids;
}

/// Thresholds each template needs.
inline std::vector<std::string> template_thresholds(const std::string& id) {
    if (id == "ML-RQ1.1") return {"Delta"};
    if (id == "ML-RQ1.2") return {"beta1", "rho1"};
    if (id == "ML-RQ1.4") return {"beta2", "alpha"};
    if (id == "ML-RQ1.5") return {"beta3"};
    if (id == "ML-RQ1.6" || id == "ML-RQ1.7") return {"beta4"};
    if (id == "ML-RQ1.8") return {"beta5", "rho2"};
    if (id == "ML-RQ1.3") throw NotSupported("ML-RQ1.3: no available data");
    throw ValidationError("unknown requirement id '" + id + "'");
}

namespace detail {

constexpr std::size_t kTi = data::kInputSteps;
constexpr std::size_t kTo = data::kOutputSteps;

inline Formula template_pre(const std::string& id) {
    std::vector<Formula> c;
    if (id == "ML-RQ1.1") {
        for (std::size_t i = 0; i + 2 <= kTi; ++i) c.push_back(atom(diff(bg_in(i + 1), bg_in(i)), Cmp::LE, "Delta", true));
        return Formula::all(std::move(c));
    }
    if (id == "ML-RQ1.2" || id == "ML-RQ1.5") {
        for (std::size_t i = 0; i < kTi; ++i) c.push_back(atom({{1.0, m_in(i)}}, Cmp::GE, id == "ML-RQ1.2" ? "beta1" : "beta3"));
        return Formula::any(std::move(c));
    }
    if (id == "ML-RQ1.4") return atom({{1.0, in_in(0)}}, Cmp::GE, "beta2");
    if (id == "ML-RQ1.6" || id == "ML-RQ1.7") return atom({{1.0, in_in(0)}}, Cmp::GE, "beta4");
    if (id == "ML-RQ1.8") {
        for (std::size_t i = 0; i < kTi; ++i) c.push_back(atom({{1.0, in_in(i)}}, Cmp::GE, "beta5"));
        return Formula::any(std::move(c));
    }
    throw ValidationError("unknown requirement id '" + id + "'");
}

inline Formula template_post(const std::string& id) {
    std::vector<Formula> c;
    if (id == "ML-RQ1.1") {
        for (std::size_t j = 0; j + 2 <= kTo; ++j)
            c.push_back(atom(diff(bg_out(j + 1), bg_out(j)), Cmp::LE, "Delta", true));
        return Formula::all(std::move(c));
    }
    if (id == "ML-RQ1.2") {
        for (std::size_t j = 0; j < kTo; ++j) c.push_back(atom({{1.0, bg_out(j)}}, Cmp::GE, "rho1"));
        return Formula::any(std::move(c));
    }
    if (id == "ML-RQ1.4") {
        for (std::size_t j = 1; j < kTo; ++j) c.push_back(atom(diff(bg_out(j), bg_out(0)), Cmp::GE, "alpha", true));
        return Formula::any(std::move(c));
    }
    if (id == "ML-RQ1.5") {
        for (std::size_t j = 1; j < kTo; ++j) c.push_back(atom(diff(bg_out(j), bg_out(0)), Cmp::GT, 0.0, true));
        return Formula::any(std::move(c));
    }
    if (id == "ML-RQ1.6" || id == "ML-RQ1.7") {
        // 70 <= BG_out[5] <= 180, and every earlier step outside the glycemic range
        Formula in_range = Formula::all({atom({{1.0, bg_out(kTo - 1)}}, Cmp::GE, 70.0),
                                         atom({{1.0, bg_out(kTo - 1)}}, Cmp::LE, 180.0)});
        for (std::size_t j = 0; j + 2 <= kTo; ++j)
            c.push_back(Formula::any({atom({{1.0, bg_out(j)}}, Cmp::LE, 70.0), atom({{1.0, bg_out(j)}}, Cmp::GE, 180.0)}));
        return Formula::all({std::move(in_range), Formula::all(std::move(c))});
    }
    if (id == "ML-RQ1.8") {
        for (std::size_t j = 0; j < kTo; ++j) c.push_back(atom({{1.0, bg_out(j)}}, Cmp::LE, "rho2"));
        return Formula::any(std::move(c));
    }
    throw ValidationError("unknown requirement id '" + id + "'");
}

}  // namespace detail

/// Builds the requirement's implication over a given input box. Thresholds
/// are kept by name in the atoms and must all be present in `thresholds`.
/// ML-RQ1.6 and ML-RQ1.7 yield the same formula.
inline Property instantiate(const std::string& id, const std::map<std::string, double>& thresholds,
                            const BoxSpec& box = empty_box(), UnitMode units = UnitMode::Native) {
    for (const auto& name : template_thresholds(id))
        if (!thresholds.count(name)) throw ValidationError(id + " needs threshold '" + name + "'");
    Property p;
    p.id = id;
    p.box = box;
    p.pre = detail::template_pre(id);
    p.post = detail::template_post(id);
    p.thresholds = thresholds;
    p.units = units;
    p.validate();
    return p;
}

/// Box helper: every timestep of an input channel set to `iv`.
inline void set_channel(BoxSpec& box, Chan c, Interval iv) {
    for (std::size_t i = 0; i < data::kInputSteps; ++i) box[VarRef{c, i}.flat()] = iv;
}

inline void set_input(BoxSpec& box, VarRef v, Interval iv) { box[v.flat()] = iv; }

}  // namespace apsafe::prop
