#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "apsafe/gsn/case.hpp"
#include "apsafe/util/error.hpp"

namespace apsafe::gsn {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

/// Splits on '|' into at most `n` fields; the last keeps any further bars.
inline std::vector<std::string> fields(const std::string& line, std::size_t n) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (out.size() + 1 < n) {
        const auto bar = line.find('|', pos);
        if (bar == std::string::npos) break;
        out.push_back(trim(line.substr(pos, bar - pos)));
        pos = bar + 1;
    }
    out.push_back(trim(line.substr(pos)));
    return out;
}

inline void check_line(const std::string& text) {
    if (text.find('\n') != std::string::npos) throw ValidationError("case text fields must be single-line");
}

}  // namespace detail

/// Line format:
///   case NAME
///   nodes:     ID | KIND | INSTANTIATION | developed|undeveloped | KINDS or - | STATEMENT
///   links:     FROM -> TO | KIND [| ACP]
///   bindings:  SOLUTION | ARTIFACT KIND | PASS | REF
inline std::string save_case(const AssuranceCase& c) {
    std::ostringstream os;
    os << "case " << c.name << "\n\nnodes:\n";
    for (const auto& n : c.nodes()) {
        detail::check_line(n.statement);
        std::string kinds;
        for (auto k : n.admissible) kinds += (kinds.empty() ? "" : ",") + std::string(to_string(k));
        os << "  " << n.id << " | " << to_string(n.kind) << " | " << to_string(n.instantiation) << " | "
           << (n.developed ? "developed" : "undeveloped") << " | " << (kinds.empty() ? "-" : kinds) << " | "
           << n.statement << "\n";
    }
    os << "\nlinks:\n";
    for (const auto& l : c.links()) {
        os << "  " << l.from << " -> " << l.to << " | " << to_string(l.kind);
        if (!l.acp.empty()) os << " | " << l.acp;
        os << "\n";
    }
    os << "\nbindings:\n";
    for (const auto& b : c.bindings()) {
        detail::check_line(b.artifact.ref);
        os << "  " << b.solution_id << " | " << to_string(b.artifact.kind) << " | " << to_string(b.artifact.pass)
           << " | " << b.artifact.ref << "\n";
    }
    return os.str();
}

inline AssuranceCase load_case(const std::string& text) {
    AssuranceCase c;
    std::istringstream is(text);
    std::string raw;
    std::size_t lineno = 0;
    enum { None, Nodes, Links, Bindings } section = None;
    bool named = false;
    while (std::getline(is, raw)) {
        ++lineno;
        const std::string line = detail::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        try {
            if (line == "nodes:") {
                section = Nodes;
            } else if (line == "links:") {
                section = Links;
            } else if (line == "bindings:") {
                section = Bindings;
            } else if (line.rfind("case ", 0) == 0 && section == None && !named) {
                c.name = detail::trim(line.substr(5));
                named = true;
            } else if (section == Nodes) {
                auto f = detail::fields(line, 6);
                if (f.size() != 6) throw ParseError("node line needs 6 fields");
                Node n;
                n.id = f[0];
                n.kind = node_kind_from_string(f[1]);
                n.instantiation = instantiation_from_string(f[2]);
                if (f[3] != "developed" && f[3] != "undeveloped") throw ParseError("expected developed or undeveloped");
                n.developed = f[3] == "developed";
                if (f[4] != "-") {
                    std::istringstream ks(f[4]);
                    std::string k;
                    while (std::getline(ks, k, ',')) n.admissible.push_back(artifact_kind_from_string(detail::trim(k)));
                }
                n.statement = f[5];
                c.add_node(std::move(n));
            } else if (section == Links) {
                auto f = detail::fields(line, 3);
                if (f.size() < 2) throw ParseError("link line needs FROM -> TO | KIND");
                const auto arrow = f[0].find("->");
                if (arrow == std::string::npos) throw ParseError("link needs '->'");
                Link l{detail::trim(f[0].substr(0, arrow)), detail::trim(f[0].substr(arrow + 2)),
                       link_kind_from_string(f[1]), f.size() == 3 ? f[2] : ""};
                c.add_link_unchecked(std::move(l));
            } else if (section == Bindings) {
                auto f = detail::fields(line, 4);
                if (f.size() != 4) throw ParseError("binding line needs 4 fields");
                c.add_binding({f[0], {artifact_kind_from_string(f[1]), f[3], pass_from_string(f[2])}});
            } else {
                throw ParseError("unexpected line outside any section");
            }
        } catch (const ParseError& e) {
            throw ParseError(e.what(), lineno, 1);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), lineno, 1);
        }
    }
    if (auto v = validate(c); !v.empty()) {
        std::string msg = "invalid case:";
        for (const auto& s : v) msg += "\n  " + s;
        throw ValidationError(msg);
    }
    return c;
}

inline AssuranceCase load_case_file(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw Error("cannot open " + p.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    try {
        return load_case(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(p.string() + ": " + e.what());
    }
}

inline void save_case_file(const AssuranceCase& c, const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw Error("cannot write " + p.string());
    os << save_case(c);
}

namespace detail {

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch;
    }
    return out;
}

/// Breaks long statements so the boxes stay readable.
inline std::string wrap(const std::string& s, std::size_t width = 48) {
    std::string out;
    std::size_t col = 0;
    std::istringstream is(s);
    std::string word;
    while (is >> word) {
        if (col > 0 && col + 1 + word.size() > width) {
            out += "\\n";
            col = 0;
        } else if (col > 0) {
            out += ' ';
            ++col;
        }
        out += word;
        col += word.size();
    }
    return out;
}

inline const char* status_fill(GoalStatus s) {
    switch (s) {
        case GoalStatus::Supported: return "palegreen";
        case GoalStatus::Contradicted: return "lightcoral";
        case GoalStatus::PartiallySupported: return "khaki";
        case GoalStatus::Undeveloped: return "white";
    }
    return "white";
}

}  // namespace detail

/// Graphviz rendering with the usual GSN shapes. Profile-dependent nodes get a
/// "(P)" marker; statuses colour the goals when `status` is given.
inline std::string export_dot(const AssuranceCase& c, const CaseStatus* status = nullptr) {
    std::ostringstream os;
    os << "digraph \"" << detail::dot_escape(c.name) << "\" {\n"
       << "  rankdir=TB;\n  node [fontname=\"Helvetica\", fontsize=10];\n";
    for (const auto& n : c.nodes()) {
        std::string shape, style = "solid";
        std::string label = n.id;
        switch (n.kind) {
            case NodeKind::Goal: shape = "box"; break;
            case NodeKind::Strategy: shape = "parallelogram"; break;
            case NodeKind::Context: shape = "box"; style = "rounded"; break;
            case NodeKind::Assumption: shape = "ellipse"; label += " (A)"; break;
            case NodeKind::Justification: shape = "ellipse"; label += " (J)"; break;
            case NodeKind::Solution: shape = "circle"; break;
        }
        if (n.profile_dependent()) label += " (P)";
        label += "\\n" + detail::wrap(detail::dot_escape(n.statement));
        if (n.kind == NodeKind::Goal && !n.developed) label += "\\n<undeveloped>";
        os << "  \"" << n.id << "\" [shape=" << shape << ", label=\"" << label << "\"";
        if (status && status->status.count(n.id)) {
            style += ",filled";
            os << ", fillcolor=" << detail::status_fill(status->at(n.id));
        }
        os << ", style=\"" << style << "\"];\n";
    }
    for (const auto& l : c.links()) {
        os << "  \"" << l.from << "\" -> \"" << l.to << "\" [";
        os << (l.kind == LinkKind::SupportedBy ? "arrowhead=normal" : "arrowhead=empty");
        if (!l.acp.empty()) os << ", label=\"" << detail::dot_escape(l.acp) << "\", arrowtail=box, dir=both";
        os << "];\n";
    }
    os << "}\n";
    return os.str();
}

inline nlohmann::json status_to_json(const AssuranceCase& c, const CaseStatus& s) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : c.nodes()) {
        auto it = s.status.find(n.id);
        if (it == s.status.end()) continue;
        nodes.push_back({{"id", n.id}, {"kind", to_string(n.kind)}, {"status", to_string(it->second)}});
    }
    nlohmann::json bindings = nlohmann::json::array();
    for (const auto& b : c.bindings())
        bindings.push_back({{"solution", b.solution_id},
                            {"artifact", to_string(b.artifact.kind)},
                            {"pass", to_string(b.artifact.pass)},
                            {"ref", b.artifact.ref}});
    return {{"kind", "case_status"},
            {"case", c.name},
            {"root", s.root},
            {"root_status", to_string(s.root_status())},
            {"nodes", nodes},
            {"bindings", bindings}};
}

inline std::string render_status_text(const AssuranceCase& c, const CaseStatus& s) {
    std::ostringstream os;
    os << "root " << s.root << ": " << to_string(s.root_status()) << "\n";
    for (const auto& n : c.nodes()) {
        if (n.kind != NodeKind::Goal && n.kind != NodeKind::Strategy) continue;
        os << "  " << n.id << "  " << to_string(s.at(n.id)) << "\n";
    }
    return os.str();
}

}  // namespace apsafe::gsn
