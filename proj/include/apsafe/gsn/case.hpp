#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "apsafe/util/error.hpp"

namespace apsafe::gsn {

enum class NodeKind { Goal, Strategy, Context, Assumption, Justification, Solution };
enum class Instantiation { Fixed, PerPatient, PerPopulation };
enum class LinkKind { SupportedBy, InContextOf };
enum class ArtifactKind { RmseEval, VerificationVerdict, AuditReport, Manual };
enum class Pass { Positive, Negative, Inconclusive };
enum class GoalStatus { Supported, Undeveloped, Contradicted, PartiallySupported };

namespace detail {

template <class E, std::size_t N>
const char* name_of(E v, const std::pair<E, const char*> (&table)[N]) {
    for (const auto& [e, s] : table)
        if (e == v) return s;
    return "?";
}

template <class E, std::size_t N>
E parse_name(const std::string& s, const std::pair<E, const char*> (&table)[N], const char* what) {
    for (const auto& [e, n] : table)
        if (s == n) return e;
    throw ParseError(std::string("unknown ") + what + " '" + s + "'");
}

inline constexpr std::pair<NodeKind, const char*> kNodeKinds[] = {
    {NodeKind::Goal, "Goal"},           {NodeKind::Strategy, "Strategy"},
    {NodeKind::Context, "Context"},     {NodeKind::Assumption, "Assumption"},
    {NodeKind::Justification, "Justification"}, {NodeKind::Solution, "Solution"}};
inline constexpr std::pair<Instantiation, const char*> kInstantiations[] = {
    {Instantiation::Fixed, "Fixed"},
    {Instantiation::PerPatient, "PerPatient"},
    {Instantiation::PerPopulation, "PerPopulation"}};
inline constexpr std::pair<LinkKind, const char*> kLinkKinds[] = {
    {LinkKind::SupportedBy, "SupportedBy"}, {LinkKind::InContextOf, "InContextOf"}};
inline constexpr std::pair<ArtifactKind, const char*> kArtifactKinds[] = {
    {ArtifactKind::RmseEval, "rmse_eval"},
    {ArtifactKind::VerificationVerdict, "verification_verdict"},
    {ArtifactKind::AuditReport, "audit_report"},
    {ArtifactKind::Manual, "manual"}};
inline constexpr std::pair<Pass, const char*> kPasses[] = {
    {Pass::Positive, "positive"}, {Pass::Negative, "negative"}, {Pass::Inconclusive, "inconclusive"}};
inline constexpr std::pair<GoalStatus, const char*> kStatuses[] = {
    {GoalStatus::Supported, "Supported"},
    {GoalStatus::Undeveloped, "Undeveloped"},
    {GoalStatus::Contradicted, "Contradicted"},
    {GoalStatus::PartiallySupported, "PartiallySupported"}};

}  // namespace detail

inline const char* to_string(NodeKind k) { return detail::name_of(k, detail::kNodeKinds); }
inline const char* to_string(Instantiation k) { return detail::name_of(k, detail::kInstantiations); }
inline const char* to_string(LinkKind k) { return detail::name_of(k, detail::kLinkKinds); }
inline const char* to_string(ArtifactKind k) { return detail::name_of(k, detail::kArtifactKinds); }
inline const char* to_string(Pass k) { return detail::name_of(k, detail::kPasses); }
inline const char* to_string(GoalStatus k) { return detail::name_of(k, detail::kStatuses); }

inline NodeKind node_kind_from_string(const std::string& s) { return detail::parse_name(s, detail::kNodeKinds, "node kind"); }
inline Instantiation instantiation_from_string(const std::string& s) {
    return detail::parse_name(s, detail::kInstantiations, "instantiation");
}
inline LinkKind link_kind_from_string(const std::string& s) { return detail::parse_name(s, detail::kLinkKinds, "link kind"); }
inline ArtifactKind artifact_kind_from_string(const std::string& s) {
    return detail::parse_name(s, detail::kArtifactKinds, "artifact kind");
}
inline Pass pass_from_string(const std::string& s) { return detail::parse_name(s, detail::kPasses, "pass value"); }
inline GoalStatus goal_status_from_string(const std::string& s) {
    return detail::parse_name(s, detail::kStatuses, "goal status");
}

struct Node {
    std::string id;
    NodeKind kind = NodeKind::Goal;
    std::string statement;
    Instantiation instantiation = Instantiation::Fixed;
    bool developed = true;
    /// Only meaningful on Solutions: which artifact kinds may be bound.
    std::vector<ArtifactKind> admissible;

    bool profile_dependent() const { return instantiation != Instantiation::Fixed; }
    bool operator==(const Node&) const = default;
};

struct Link {
    std::string from;
    std::string to;
    LinkKind kind = LinkKind::SupportedBy;
    /// Assurance claim point label, empty when the link carries none.
    std::string acp;

    bool operator==(const Link&) const = default;
};

struct Artifact {
    ArtifactKind kind = ArtifactKind::Manual;
    std::string ref;
    Pass pass = Pass::Inconclusive;

    bool operator==(const Artifact&) const = default;
};

struct EvidenceBinding {
    std::string solution_id;
    Artifact artifact;

    bool operator==(const EvidenceBinding&) const = default;
};

namespace detail {
inline const std::regex& slot_re() {
    static const std::regex re(R"(\{([A-Za-z_][A-Za-z0-9_]*)\})");
    return re;
}
}  // namespace detail

/// `{name}` slots in a statement, in order of first appearance.
inline std::vector<std::string> placeholders(const std::string& text) {
    std::vector<std::string> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), detail::slot_re()); it != std::sregex_iterator(); ++it) {
        std::string name = (*it)[1];
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    }
    return out;
}

class AssuranceCase {
public:
    std::string name = "case";

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Link>& links() const { return links_; }
    const std::vector<EvidenceBinding>& bindings() const { return bindings_; }

    bool has(const std::string& id) const { return find(id) != nullptr; }

    const Node* find(const std::string& id) const {
        for (const auto& n : nodes_)
            if (n.id == id) return &n;
        return nullptr;
    }

    const Node& at(const std::string& id) const {
        const Node* n = find(id);
        if (!n) throw ValidationError("unknown node '" + id + "'");
        return *n;
    }

    Node& at(const std::string& id) { return const_cast<Node&>(std::as_const(*this).at(id)); }

    void add_node(Node n) {
        if (n.id.empty()) throw ValidationError("node id must not be empty");
        if (has(n.id)) throw ValidationError("duplicate node id '" + n.id + "'");
        nodes_.push_back(std::move(n));
    }

    /// Refuses a link that would close a cycle.
    void add_link(Link l) {
        if (reaches(l.to, l.from)) throw ValidationError("link " + l.from + " -> " + l.to + " would create a cycle");
        links_.push_back(std::move(l));
    }

    /// Appends without the cycle check, for loading and for tests of validate().
    void add_link_unchecked(Link l) { links_.push_back(std::move(l)); }

    void add_binding(EvidenceBinding b) { bindings_.push_back(std::move(b)); }

    std::vector<const Link*> children(const std::string& id, LinkKind kind) const {
        std::vector<const Link*> out;
        for (const auto& l : links_)
            if (l.from == id && l.kind == kind) out.push_back(&l);
        return out;
    }

    std::vector<const EvidenceBinding*> bindings_for(const std::string& solution_id) const {
        std::vector<const EvidenceBinding*> out;
        for (const auto& b : bindings_)
            if (b.solution_id == solution_id) out.push_back(&b);
        return out;
    }

    bool reaches(const std::string& from, const std::string& to) const {
        std::set<std::string> seen;
        std::vector<std::string> stack{from};
        while (!stack.empty()) {
            std::string cur = stack.back();
            stack.pop_back();
            if (cur == to) return true;
            if (!seen.insert(cur).second) continue;
            for (const auto& l : links_)
                if (l.from == cur) stack.push_back(l.to);
        }
        return false;
    }

    bool operator==(const AssuranceCase&) const = default;

private:
    std::vector<Node> nodes_;
    std::vector<Link> links_;
    std::vector<EvidenceBinding> bindings_;
};

/// Structural problems, empty when the case is well formed.
inline std::vector<std::string> validate(const AssuranceCase& c) {
    std::vector<std::string> out;
    std::set<std::string> ids;
    for (const auto& n : c.nodes()) {
        if (!ids.insert(n.id).second) out.push_back("duplicate node id '" + n.id + "'");
        if (n.kind != NodeKind::Solution && !n.admissible.empty())
            out.push_back("node " + n.id + ": only solutions declare admissible evidence");
    }

    bool dangling = false;
    for (const auto& l : c.links()) {
        const Node* from = c.find(l.from);
        const Node* to = c.find(l.to);
        const std::string tag = l.from + " -> " + l.to;
        if (!from || !to) {
            out.push_back("dangling link " + tag + ": unknown node '" + (from ? l.to : l.from) + "'");
            dangling = true;
            continue;
        }
        if (from->kind != NodeKind::Goal && from->kind != NodeKind::Strategy)
            out.push_back("link " + tag + ": a " + std::string(to_string(from->kind)) + " cannot have children");
        const bool support_target = to->kind == NodeKind::Goal || to->kind == NodeKind::Strategy ||
                                    to->kind == NodeKind::Solution;
        if (l.kind == LinkKind::SupportedBy && !support_target)
            out.push_back("link " + tag + ": SupportedBy cannot target a " + std::string(to_string(to->kind)));
        if (l.kind == LinkKind::InContextOf && support_target)
            out.push_back("link " + tag + ": InContextOf cannot target a " + std::string(to_string(to->kind)));
        if (!l.acp.empty() && l.kind != LinkKind::SupportedBy)
            out.push_back("link " + tag + ": claim points sit on SupportedBy links");
        if (from->kind == NodeKind::Goal && !from->developed && l.kind == LinkKind::SupportedBy)
            out.push_back("link " + tag + ": undeveloped goal has support");
    }

    // Kahn's algorithm over the known nodes; anything left over sits on a cycle.
    std::map<std::string, int> indeg;
    for (const auto& n : c.nodes()) indeg[n.id];
    for (const auto& l : c.links())
        if (c.has(l.from) && c.has(l.to)) ++indeg[l.to];
    std::vector<std::string> ready;
    for (const auto& [id, d] : indeg)
        if (d == 0) ready.push_back(id);
    std::size_t done = 0;
    while (!ready.empty()) {
        std::string id = ready.back();
        ready.pop_back();
        ++done;
        for (const auto& l : c.links())
            if (l.from == id && c.has(l.to) && --indeg[l.to] == 0) ready.push_back(l.to);
    }
    if (done != indeg.size()) {
        std::string members;
        for (const auto& [id, d] : indeg)
            if (d > 0) members += (members.empty() ? "" : ", ") + id;
        out.push_back("cycle through " + members);
    }

    std::vector<std::string> roots;
    for (const auto& n : c.nodes()) {
        if (n.kind != NodeKind::Goal) continue;
        bool supported = false;
        for (const auto& l : c.links())
            if (l.to == n.id && l.kind == LinkKind::SupportedBy) supported = true;
        if (!supported) roots.push_back(n.id);
    }
    if (roots.size() != 1) {
        std::string list;
        for (const auto& r : roots) list += (list.empty() ? "" : ", ") + r;
        out.push_back("expected a single root goal, found " + std::to_string(roots.size()) +
                      (list.empty() ? "" : " (" + list + ")"));
    }

    for (const auto& n : c.nodes()) {
        if (n.kind == NodeKind::Strategy) {
            bool has_goal = false;
            for (const auto* l : c.children(n.id, LinkKind::SupportedBy)) {
                const Node* t = c.find(l->to);
                if (t && t->kind == NodeKind::Goal) has_goal = true;
            }
            if (!has_goal) out.push_back("strategy " + n.id + " has no supporting goal");
        }
        if (n.kind != NodeKind::Goal && n.kind != NodeKind::Strategy) {
            bool attached = false;
            for (const auto& l : c.links())
                if (l.to == n.id) attached = true;
            if (!attached && !dangling) out.push_back("node " + n.id + " is not attached to the argument");
        }
    }

    for (const auto& b : c.bindings()) {
        const Node* s = c.find(b.solution_id);
        if (!s || s->kind != NodeKind::Solution) {
            out.push_back("binding to unknown solution '" + b.solution_id + "'");
        } else if (std::find(s->admissible.begin(), s->admissible.end(), b.artifact.kind) == s->admissible.end()) {
            out.push_back("binding to " + s->id + ": artifact kind " + to_string(b.artifact.kind) + " not admissible");
        }
    }
    return out;
}

inline std::string root_goal(const AssuranceCase& c) {
    for (const auto& n : c.nodes()) {
        if (n.kind != NodeKind::Goal) continue;
        bool supported = false;
        for (const auto& l : c.links())
            if (l.to == n.id && l.kind == LinkKind::SupportedBy) supported = true;
        if (!supported) return n.id;
    }
    throw ValidationError("case has no root goal");
}

struct Profile {
    enum class Mode { Patient, Population } mode = Mode::Population;
    std::map<std::string, std::string> values;
};

/// Filled automatically from the profile mode; values cannot override it.
inline constexpr const char* kScopeSlot = "scope";

inline std::string scope_text(Profile::Mode m) {
    return m == Profile::Mode::Patient ? "an individual patient" : "a population of patients";
}

struct UnresolvedSlot {
    std::string node_id;
    std::string slot;
};

inline std::vector<UnresolvedSlot> unresolved_slots(const AssuranceCase& c) {
    std::vector<UnresolvedSlot> out;
    for (const auto& n : c.nodes())
        for (const auto& s : placeholders(n.statement)) out.push_back({n.id, s});
    return out;
}

/// Fills every `{slot}` it has a value for and marks profile-dependent nodes
/// with the chosen mode. Throws listing node and slot for anything left open.
inline AssuranceCase instantiate(const AssuranceCase& c, const Profile& profile) {
    if (profile.values.count(kScopeSlot)) throw ValidationError("'scope' is set by the profile mode");
    AssuranceCase out = c;
    const Instantiation mark =
        profile.mode == Profile::Mode::Patient ? Instantiation::PerPatient : Instantiation::PerPopulation;
    std::vector<UnresolvedSlot> missing;
    for (const auto& n : c.nodes()) {
        Node& m = out.at(n.id);
        if (m.profile_dependent()) m.instantiation = mark;
        std::string text;
        auto last = m.statement.cbegin();
        for (auto it = std::sregex_iterator(m.statement.begin(), m.statement.end(), detail::slot_re());
             it != std::sregex_iterator(); ++it) {
            const std::string slot = (*it)[1];
            text.append(last, (*it)[0].first);
            last = (*it)[0].second;
            if (slot == kScopeSlot) {
                text += scope_text(profile.mode);
            } else if (auto v = profile.values.find(slot); v != profile.values.end()) {
                text += v->second;
            } else {
                text += (*it)[0].str();
                missing.push_back({n.id, slot});
            }
        }
        text.append(last, m.statement.cend());
        m.statement = text;
    }
    if (!missing.empty()) {
        std::string msg = "unresolved placeholders:";
        for (const auto& u : missing) msg += " " + u.node_id + ":{" + u.slot + "}";
        throw ValidationError(msg);
    }
    return out;
}

/// Records evidence against a solution after checking the artifact kind is
/// one the solution admits.
inline AssuranceCase bind_evidence(const AssuranceCase& c, const std::string& solution_id, const Artifact& a) {
    const Node* s = c.find(solution_id);
    if (!s) throw ValidationError("unknown solution '" + solution_id + "'");
    if (s->kind != NodeKind::Solution) throw ValidationError(solution_id + " is a " + to_string(s->kind) + ", not a solution");
    if (std::find(s->admissible.begin(), s->admissible.end(), a.kind) == s->admissible.end()) {
        std::string allowed;
        for (auto k : s->admissible) allowed += (allowed.empty() ? "" : ", ") + std::string(to_string(k));
        throw ValidationError(std::string("artifact kind ") + to_string(a.kind) + " is not admissible for " + solution_id +
                              " (accepts " + allowed + ")");
    }
    AssuranceCase out = c;
    out.add_binding({solution_id, a});
    return out;
}

/// Status of every Goal, Strategy and Solution, keyed by node id.
struct CaseStatus {
    std::string root;
    std::map<std::string, GoalStatus> status;

    GoalStatus at(const std::string& id) const {
        auto it = status.find(id);
        if (it == status.end()) throw ValidationError("no status for '" + id + "'");
        return it->second;
    }
    GoalStatus root_status() const { return at(root); }
};

inline GoalStatus combine(const std::vector<GoalStatus>& parts) {
    if (parts.empty()) return GoalStatus::Undeveloped;
    auto all = [&](GoalStatus s) { return std::all_of(parts.begin(), parts.end(), [&](GoalStatus p) { return p == s; }); };
    if (std::find(parts.begin(), parts.end(), GoalStatus::Contradicted) != parts.end()) return GoalStatus::Contradicted;
    if (all(GoalStatus::Supported)) return GoalStatus::Supported;
    if (all(GoalStatus::Undeveloped)) return GoalStatus::Undeveloped;
    return GoalStatus::PartiallySupported;
}

inline GoalStatus solution_status(const AssuranceCase& c, const std::string& id) {
    std::vector<GoalStatus> parts;
    for (const auto* b : c.bindings_for(id)) {
        switch (b->artifact.pass) {
            case Pass::Positive: parts.push_back(GoalStatus::Supported); break;
            case Pass::Negative: parts.push_back(GoalStatus::Contradicted); break;
            case Pass::Inconclusive: parts.push_back(GoalStatus::PartiallySupported); break;
        }
    }
    return combine(parts);
}

inline CaseStatus evaluate_status(const AssuranceCase& c) {
    if (auto v = validate(c); !v.empty()) throw ValidationError("invalid case: " + v.front());
    CaseStatus st;
    st.root = root_goal(c);
    std::function<GoalStatus(const std::string&)> eval = [&](const std::string& id) -> GoalStatus {
        if (auto it = st.status.find(id); it != st.status.end()) return it->second;
        const Node& n = c.at(id);
        GoalStatus s;
        if (n.kind == NodeKind::Solution) {
            s = solution_status(c, id);
        } else {
            std::vector<GoalStatus> parts;
            for (const auto* l : c.children(id, LinkKind::SupportedBy)) parts.push_back(eval(l->to));
            s = combine(parts);
        }
        st.status[id] = s;
        return s;
    };
    for (const auto& n : c.nodes())
        if (n.kind == NodeKind::Goal || n.kind == NodeKind::Strategy || n.kind == NodeKind::Solution) eval(n.id);
    return st;
}

}  // namespace apsafe::gsn
