#pragma once

#include <cctype>
#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "apsafe/prop/formula.hpp"
#include "apsafe/util/error.hpp"
#include "apsafe/util/format.hpp"

// Property text format:
//
//   property ML-RQ1.2 {
//     box BG_in[*]=[180,183]; In_in[*]=0.006525; M_in[0..10]=0; M_in[11]=20;
//     pre: M_in[11] >= beta1 or M_in[10] >= beta1;
//     post: BG_out[5] > 200;
//     thresholds: beta1=20;
//     units: mixed;
//   }
//
// Box assignments run in order, so later ones override earlier ones; inputs
// never assigned keep the unit interval in network units. `unit_interval`
// may stand for [0,1]. An omitted pre is `true`. Formulas use `and`, `or`,
// parentheses, `true`, `false`, and atoms `expr cmp bound` or
// `|expr| cmp bound`, where expr is a sum of `c*VAR`, `VAR` and constants
// and bound is a number or a threshold name. `#` starts a comment.

namespace apsafe::prop {

namespace detail {

class DslParser {
public:
    explicit DslParser(std::string_view text) : s_(text) {}

    std::vector<Property> parse_all() {
        std::vector<Property> out;
        skip();
        while (!eof()) {
            out.push_back(parse_property());
            skip();
        }
        return out;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    bool eof() const { return pos_ >= s_.size(); }
    char peek(std::size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }

    [[noreturn]] void fail(const std::string& what) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) {
            if (s_[i] == '\n') ++line, col = 1;
            else ++col;
        }
        throw ParseError(what, line, col);
    }

    void skip() {
        while (!eof()) {
            if (std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
            else if (peek() == '#')
                while (!eof() && peek() != '\n') ++pos_;
            else break;
        }
    }

    bool accept(std::string_view tok) {
        skip();
        if (s_.substr(pos_, tok.size()) != tok) return false;
        // keywords must not run into an identifier
        if (std::isalpha(static_cast<unsigned char>(tok.back())) && pos_ + tok.size() < s_.size()) {
            const char next = s_[pos_ + tok.size()];
            if (std::isalnum(static_cast<unsigned char>(next)) || next == '_') return false;
        }
        pos_ += tok.size();
        return true;
    }

    void expect(std::string_view tok) {
        if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
    }

    std::string ident() {
        skip();
        const auto start = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++pos_;
        if (start == pos_) fail("expected a name");
        return std::string(s_.substr(start, pos_ - start));
    }

    std::string property_id() {
        skip();
        const auto start = pos_;
        while (!eof() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != '{') ++pos_;
        if (start == pos_) fail("expected a property id");
        return std::string(s_.substr(start, pos_ - start));
    }

    std::size_t integer() {
        skip();
        const auto start = pos_;
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        if (start == pos_) fail("expected an index");
        return static_cast<std::size_t>(std::stoull(std::string(s_.substr(start, pos_ - start))));
    }

    bool at_number() {
        skip();
        return std::isdigit(static_cast<unsigned char>(peek())) || (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1))));
    }

    double unsigned_number() {
        skip();
        const auto start = pos_;
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        if (peek() == '.' && peek(1) != '.') {
            ++pos_;
            while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        }
        if ((peek() == 'e' || peek() == 'E') &&
            (std::isdigit(static_cast<unsigned char>(peek(1))) ||
             ((peek(1) == '+' || peek(1) == '-') && std::isdigit(static_cast<unsigned char>(peek(2)))))) {
            pos_ += 2;
            while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        }
        if (start == pos_) fail("expected a number");
        try {
            return util::parse_double(s_.substr(start, pos_ - start));
        } catch (const ParseError&) {
            pos_ = start;
            fail("malformed number");
        }
    }

    double signed_number() {
        const bool neg = accept("-");
        const double v = unsigned_number();
        return neg ? -v : v;
    }

    Chan channel() {
        for (auto c : {Chan::BG_in, Chan::In_in, Chan::M_in, Chan::BG_out})
            if (accept(to_string(c))) return c;
        fail("expected BG_in, In_in, M_in or BG_out");
    }

    VarRef var() {
        const auto c = channel();
        expect("[");
        VarRef v{c, integer()};
        expect("]");
        if (v.index >= channel_length(c)) fail(std::string(to_string(c)) + " index out of range");
        return v;
    }

    bool at_var() {
        skip();
        for (auto c : {Chan::BG_in, Chan::In_in, Chan::M_in, Chan::BG_out})
            if (s_.substr(pos_, to_string(c).size()) == to_string(c)) return true;
        return false;
    }

    Property parse_property() {
        expect("property");
        Property p;
        p.id = property_id();
        expect("{");
        bool have_post = false;
        while (!accept("}")) {
            if (eof()) fail("unterminated property block");
            if (accept("pre")) {
                expect(":");
                p.pre = formula();
            } else if (accept("post")) {
                expect(":");
                p.post = formula();
                have_post = true;
            } else if (accept("units")) {
                expect(":");
                const auto u = ident();
                try {
                    p.units = parse_unit_mode(u);
                } catch (const ValidationError& e) {
                    fail(e.what());
                }
            } else if (accept("thresholds")) {
                expect(":");
                do {
                    const auto name = ident();
                    expect("=");
                    p.thresholds[name] = signed_number();
                } while (accept(","));
            } else {
                accept("box");
                box_assign(p.box);
            }
            expect(";");
        }
        if (!have_post) fail("property " + p.id + " has no post condition");
        try {
            p.validate();
        } catch (const Error& e) {
            fail(e.what());
        }
        return p;
    }

    void box_assign(BoxSpec& box) {
        const auto c = channel();
        expect("[");
        std::size_t lo = 0, hi = channel_length(c) - 1;
        if (!accept("*")) {
            lo = hi = integer();
            if (accept("..")) hi = integer();
        }
        expect("]");
        if (lo > hi || hi >= channel_length(c)) fail("bad index range");
        expect("=");
        Interval iv;
        if (accept("unit_interval")) {
            iv = {0.0, 1.0};
        } else if (accept("[")) {
            iv.lo = signed_number();
            expect(",");
            iv.hi = signed_number();
            expect("]");
        } else {
            iv.lo = iv.hi = signed_number();
        }
        if (!(iv.lo <= iv.hi)) fail("interval lower bound exceeds upper bound");
        for (std::size_t i = lo; i <= hi; ++i) box[VarRef{c, i}.flat()] = iv;
    }

    Formula formula() {
        std::vector<Formula> parts{conjunction()};
        while (accept("or")) parts.push_back(conjunction());
        return parts.size() == 1 ? std::move(parts.front()) : Formula::any(std::move(parts));
    }

    Formula conjunction() {
        std::vector<Formula> parts{primary()};
        while (accept("and")) parts.push_back(primary());
        return parts.size() == 1 ? std::move(parts.front()) : Formula::all(std::move(parts));
    }

    Formula primary() {
        if (accept("(")) {
            auto f = formula();
            expect(")");
            return f;
        }
        if (accept("true")) return Formula::truth();
        if (accept("false")) return Formula::any({});
        return Formula::leaf(parse_atom());
    }

    AffineAtom parse_atom() {
        AffineAtom a;
        if (accept("|")) {
            a.abs = true;
            linear(a);
            expect("|");
        } else {
            linear(a);
        }
        if (a.terms.empty()) fail("atom needs at least one variable");
        if (accept("<=")) a.cmp = Cmp::LE;
        else if (accept(">=")) a.cmp = Cmp::GE;
        else if (accept("<")) a.cmp = Cmp::LT;
        else if (accept(">")) a.cmp = Cmp::GT;
        else fail("expected a comparison");
        skip();
        if (std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_') a.bound_name = ident();
        else a.bound = signed_number();
        return a;
    }

    void linear(AffineAtom& a) {
        double sign = accept("-") ? -1.0 : 1.0;
        while (true) {
            if (at_var()) {
                a.terms.push_back({sign, var()});
            } else {
                const double v = unsigned_number();
                if (accept("*")) a.terms.push_back({sign * v, var()});
                else a.constant += sign * v;
            }
            if (accept("+")) sign = 1.0;
            else if (accept("-")) sign = -1.0;
            else break;
        }
    }
};

inline std::string render_var(VarRef v) {
    return std::string(to_string(v.channel)) + "[" + std::to_string(v.index) + "]";
}

inline std::string render_atom(const AffineAtom& a) {
    std::string e;
    for (std::size_t i = 0; i < a.terms.size(); ++i) {
        const auto& t = a.terms[i];
        const auto v = render_var(t.var);
        if (i == 0) {
            if (t.coef == 1.0) e += v;
            else if (t.coef == -1.0) e += "-" + v;
            else e += util::format_double(t.coef) + "*" + v;
        } else if (t.coef >= 0.0) {
            e += " + " + (t.coef == 1.0 ? v : util::format_double(t.coef) + "*" + v);
        } else {
            e += " - " + (t.coef == -1.0 ? v : util::format_double(-t.coef) + "*" + v);
        }
    }
    if (a.constant > 0.0) e += " + " + util::format_double(a.constant);
    else if (a.constant < 0.0) e += " - " + util::format_double(-a.constant);
    if (a.abs) e = "|" + e + "|";
    e += " " + std::string(to_string(a.cmp)) + " ";
    e += a.bound_name.empty() ? util::format_double(a.bound) : a.bound_name;
    return e;
}

inline std::string render_formula(const Formula& f, bool nested = false) {
    if (f.kind == Formula::Kind::Atom) return render_atom(f.atom);
    if (f.children.empty()) return f.kind == Formula::Kind::And ? "true" : "false";
    if (f.children.size() == 1) return render_formula(f.children.front(), nested);
    std::string out;
    const char* sep = f.kind == Formula::Kind::And ? " and " : " or ";
    for (std::size_t i = 0; i < f.children.size(); ++i) {
        if (i) out += sep;
        out += render_formula(f.children[i], true);
    }
    return nested ? "(" + out + ")" : out;
}

inline std::string render_interval(const Interval& iv) {
    if (iv.lo == iv.hi) return util::format_double(iv.lo);
    return "[" + util::format_double(iv.lo) + "," + util::format_double(iv.hi) + "]";
}

}  // namespace detail

/// All properties in a text document.
inline std::vector<Property> parse_dsl_all(std::string_view text) { return detail::DslParser(text).parse_all(); }

/// Exactly one property.
inline Property parse_dsl(std::string_view text) {
    auto all = parse_dsl_all(text);
    if (all.size() != 1) throw ParseError("expected exactly one property, found " + std::to_string(all.size()));
    return all.front();
}

/// Drops single-child groups, which the text form cannot distinguish from
/// their child. Parsed properties are already in this form.
inline Formula normalize(const Formula& f) {
    if (f.kind == Formula::Kind::Atom) return f;
    if (f.children.size() == 1) return normalize(f.children.front());
    Formula out = f;
    for (auto& c : out.children) c = normalize(c);
    return out;
}

inline std::string render_dsl(const Property& p) {
    std::string out = "property " + p.id + " {\n";
    std::vector<std::string> assigns;
    for (auto c : {Chan::BG_in, Chan::In_in, Chan::M_in}) {
        const auto n = channel_length(c);
        std::size_t i = 0;
        while (i < n) {
            const auto& cur = p.box[VarRef{c, i}.flat()];
            std::size_t j = i;
            while (j + 1 < n && p.box[VarRef{c, j + 1}.flat()] == cur) ++j;
            if (cur) {
                std::string sel = (i == 0 && j == n - 1) ? "*" : i == j ? std::to_string(i)
                                                                       : std::to_string(i) + ".." + std::to_string(j);
                assigns.push_back(std::string(to_string(c)) + "[" + sel + "]=" + detail::render_interval(*cur));
            }
            i = j + 1;
        }
    }
    if (!assigns.empty()) {
        out += "  box";
        for (const auto& a : assigns) out += " " + a + ";";
        out += "\n";
    }
    if (!normalize(p.pre).is_truth()) out += "  pre: " + detail::render_formula(p.pre) + ";\n";
    out += "  post: " + detail::render_formula(p.post) + ";\n";
    if (!p.thresholds.empty()) {
        out += "  thresholds:";
        bool first = true;
        for (const auto& [k, v] : p.thresholds) {
            out += (first ? " " : ", ") + k + "=" + util::format_double(v);
            first = false;
        }
        out += ";\n";
    }
    out += "  units: " + std::string(to_string(p.units)) + ";\n}\n";
    return out;
}

}  // namespace apsafe::prop
