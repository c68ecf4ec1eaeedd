#pragma once

// Missingness DAGs and graphical reasoning on them: construction (directly
// or from a small text DSL), d-separation under graph surgery, and the
// graphical necessary conditions for recoverability of a joint or
// conditional distribution.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdag {

enum class NodeKind { Substantive, MissIndicator, Latent };

inline const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Substantive: return "substantive";
        case NodeKind::MissIndicator: return "indicator";
        case NodeKind::Latent: return "latent";
    }
    return "?";
}

class MDag {
public:
    int add_node(const std::string& name, NodeKind kind) {
        if (index_.count(name))
            throw std::invalid_argument("MDag: duplicate node " + name);
        int id = static_cast<int>(names_.size());
        index_[name] = id;
        names_.push_back(name);
        kinds_.push_back(kind);
        parents_.emplace_back();
        children_.emplace_back();
        return id;
    }

    // declare that indicator node marks missingness of a substantive node
    void set_proxy(int indicator, int of) {
        if (kinds_[static_cast<std::size_t>(indicator)] != NodeKind::MissIndicator)
            throw std::invalid_argument("MDag: proxy source must be an indicator");
        if (kinds_[static_cast<std::size_t>(of)] != NodeKind::Substantive)
            throw std::invalid_argument("MDag: proxy target must be substantive");
        proxy_[indicator] = of;
    }

    void add_edge(int from, int to) {
        if (from == to) throw std::invalid_argument("MDag: self-loop");
        if (kinds_[static_cast<std::size_t>(from)] == NodeKind::MissIndicator &&
            kinds_[static_cast<std::size_t>(to)] == NodeKind::Substantive)
            throw std::invalid_argument("MDag: indicator " + names_[static_cast<std::size_t>(from)] +
                                        " may not point into substantive node " +
                                        names_[static_cast<std::size_t>(to)]);
        if (kinds_[static_cast<std::size_t>(to)] == NodeKind::Latent)
            throw std::invalid_argument("MDag: latent node " + names_[static_cast<std::size_t>(to)] +
                                        " may not have parents");
        auto& pc = children_[static_cast<std::size_t>(from)];
        if (std::find(pc.begin(), pc.end(), to) != pc.end()) return;  // idempotent
        pc.push_back(to);
        parents_[static_cast<std::size_t>(to)].push_back(from);
    }

    void add_edge(const std::string& from, const std::string& to) {
        add_edge(id(from), id(to));
    }

    int n() const { return static_cast<int>(names_.size()); }
    const std::string& name(int v) const { return names_[static_cast<std::size_t>(v)]; }
    NodeKind kind(int v) const { return kinds_[static_cast<std::size_t>(v)]; }
    const std::vector<int>& parents(int v) const { return parents_[static_cast<std::size_t>(v)]; }
    const std::vector<int>& children(int v) const { return children_[static_cast<std::size_t>(v)]; }
    const std::map<int, int>& proxy() const { return proxy_; }

    bool has_node(const std::string& name) const { return index_.count(name) > 0; }

    int id(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::invalid_argument("MDag: unknown node " + name);
        return it->second;
    }

    bool has_edge(int from, int to) const {
        const auto& c = children_[static_cast<std::size_t>(from)];
        return std::find(c.begin(), c.end(), to) != c.end();
    }

    bool adjacent(int a, int b) const { return has_edge(a, b) || has_edge(b, a); }

    // Kahn's algorithm; throws if a cycle exists
    std::vector<int> topo_order() const {
        std::vector<int> indeg(names_.size(), 0);
        for (std::size_t v = 0; v < names_.size(); ++v)
            for (int c : children_[v]) ++indeg[static_cast<std::size_t>(c)];
        std::vector<int> queue, order;
        for (int v = 0; v < n(); ++v)
            if (indeg[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
        while (!queue.empty()) {
            int v = queue.back();
            queue.pop_back();
            order.push_back(v);
            for (int c : children_[static_cast<std::size_t>(v)])
                if (--indeg[static_cast<std::size_t>(c)] == 0) queue.push_back(c);
        }
        if (order.size() != names_.size()) throw std::domain_error("MDag: cycle detected");
        return order;
    }

    // structural invariants beyond what add_edge already enforces
    void validate() const {
        topo_order();
        for (int v = 0; v < n(); ++v) {
            if (kind(v) == NodeKind::MissIndicator && !proxy_.count(v))
                throw std::domain_error("MDag: indicator " + name(v) +
                                        " is not attached to any variable");
        }
    }

    // substantive variables that have a missingness indicator
    std::vector<int> incomplete_variables() const {
        std::vector<int> out;
        for (const auto& [ind, var] : proxy_) {
            (void)ind;
            if (std::find(out.begin(), out.end(), var) == out.end()) out.push_back(var);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    std::optional<int> indicator_of(int var) const {
        for (const auto& [ind, v] : proxy_)
            if (v == var) return ind;
        return std::nullopt;
    }

private:
    std::vector<std::string> names_;
    std::vector<NodeKind> kinds_;
    std::map<std::string, int> index_;
    std::vector<std::vector<int>> parents_, children_;
    std::map<int, int> proxy_;  // indicator id -> substantive id it masks
};

// interventional surgery: drop all arrows into / out of the listed nodes
struct GraphSurgery {
    std::set<int> remove_incoming;
    std::set<int> remove_outgoing;
};

namespace detail {

// parent/child lists after applying surgery
struct MutilatedView {
    std::vector<std::vector<int>> parents, children;

    MutilatedView(const MDag& g, const GraphSurgery& s) {
        parents.resize(static_cast<std::size_t>(g.n()));
        children.resize(static_cast<std::size_t>(g.n()));
        for (int v = 0; v < g.n(); ++v) {
            for (int c : g.children(v)) {
                if (s.remove_outgoing.count(v) || s.remove_incoming.count(c)) continue;
                children[static_cast<std::size_t>(v)].push_back(c);
                parents[static_cast<std::size_t>(c)].push_back(v);
            }
        }
    }
};

}  // namespace detail

// d-separation of node sets a and b given cond, in the mutilated graph.
// Bayes-ball reachability: traverse (node, direction) states, where "up"
// means the ball arrived from a child and "down" means from a parent.
inline bool d_separated(const MDag& g, const GraphSurgery& surgery,
                        const std::set<int>& a, const std::set<int>& b,
                        const std::set<int>& cond) {
    for (int v : a)
        if (b.count(v) || cond.count(v))
            throw std::invalid_argument("d_separated: query sets must be disjoint");
    for (int v : b)
        if (cond.count(v)) throw std::invalid_argument("d_separated: query sets must be disjoint");

    detail::MutilatedView m(g, surgery);

    // ancestors of the conditioning set (inclusive), for collider opening
    std::vector<char> anc(static_cast<std::size_t>(g.n()), 0);
    {
        std::vector<int> stack(cond.begin(), cond.end());
        for (int v : stack) anc[static_cast<std::size_t>(v)] = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int p : m.parents[static_cast<std::size_t>(v)]) {
                if (!anc[static_cast<std::size_t>(p)]) {
                    anc[static_cast<std::size_t>(p)] = 1;
                    stack.push_back(p);
                }
            }
        }
    }

    enum Dir { Up = 0, Down = 1 };
    std::vector<char> seen(static_cast<std::size_t>(g.n()) * 2, 0);
    std::vector<std::pair<int, Dir>> stack;
    auto schedule = [&](int v, Dir d) {
        std::size_t key = static_cast<std::size_t>(v) * 2 + static_cast<std::size_t>(d);
        if (!seen[key]) {
            seen[key] = 1;
            stack.emplace_back(v, d);
        }
    };
    for (int v : a) schedule(v, Up);

    while (!stack.empty()) {
        auto [v, d] = stack.back();
        stack.pop_back();
        bool conditioned = cond.count(v) > 0;
        if (!conditioned && b.count(v)) return false;  // active trail reached b
        if (d == Up) {
            if (!conditioned) {
                for (int p : m.parents[static_cast<std::size_t>(v)]) schedule(p, Up);
                for (int c : m.children[static_cast<std::size_t>(v)]) schedule(c, Down);
            }
        } else {
            if (!conditioned)
                for (int c : m.children[static_cast<std::size_t>(v)]) schedule(c, Down);
            if (anc[static_cast<std::size_t>(v)])  // collider (or its ancestor) conditioned
                for (int p : m.parents[static_cast<std::size_t>(v)]) schedule(p, Up);
        }
    }
    return true;
}

inline bool d_separated(const MDag& g, const GraphSurgery& surgery,
                        const std::vector<std::string>& a, const std::vector<std::string>& b,
                        const std::vector<std::string>& cond) {
    auto ids = [&](const std::vector<std::string>& v) {
        std::set<int> out;
        for (const auto& s : v) out.insert(g.id(s));
        return out;
    };
    return d_separated(g, surgery, ids(a), ids(b), ids(cond));
}

// Independent slow reference for d_separated: enumerate every simple path in
// the undirected skeleton and apply the blocking rules directly. Used only
// to cross-check the reachability routine; shares no traversal logic with it.
inline bool d_separated_by_enumeration(const MDag& g, const GraphSurgery& surgery,
                                       const std::set<int>& a, const std::set<int>& b,
                                       const std::set<int>& cond) {
    detail::MutilatedView m(g, surgery);

    // descendant closure of each node (inclusive), for the collider rule
    int n = g.n();
    std::vector<std::vector<char>> desc(static_cast<std::size_t>(n),
                                        std::vector<char>(static_cast<std::size_t>(n), 0));
    for (int v = 0; v < n; ++v) {
        std::vector<int> stack{v};
        desc[static_cast<std::size_t>(v)][static_cast<std::size_t>(v)] = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int c : m.children[static_cast<std::size_t>(u)]) {
                if (!desc[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)]) {
                    desc[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)] = 1;
                    stack.push_back(c);
                }
            }
        }
    }
    auto collider_open = [&](int v) {
        for (int z : cond)
            if (desc[static_cast<std::size_t>(v)][static_cast<std::size_t>(z)]) return true;
        return false;
    };

    std::vector<int> path;
    std::vector<char> on_path(static_cast<std::size_t>(n), 0);
    bool found_active = false;

    // path holds node ids; edge directions are recovered from the graph
    auto path_active = [&]() {
        for (std::size_t i = 1; i + 1 < path.size(); ++i) {
            int prev = path[i - 1], v = path[i], next = path[i + 1];
            bool into_left = false, into_right = false;
            for (int c : m.children[static_cast<std::size_t>(prev)])
                if (c == v) into_left = true;
            for (int c : m.children[static_cast<std::size_t>(next)])
                if (c == v) into_right = true;
            bool is_collider = into_left && into_right;
            if (is_collider) {
                if (!collider_open(v)) return false;
            } else {
                if (cond.count(v)) return false;
            }
        }
        return true;
    };

    std::function<void(int)> dfs = [&](int v) {
        if (found_active) return;
        if (b.count(v) && path.size() >= 2) {
            if (path_active()) found_active = true;
            return;
        }
        for (int u = 0; u < n; ++u) {
            if (on_path[static_cast<std::size_t>(u)]) continue;
            bool adj = false;
            for (int c : m.children[static_cast<std::size_t>(v)])
                if (c == u) adj = true;
            for (int c : m.children[static_cast<std::size_t>(u)])
                if (c == v) adj = true;
            if (!adj) continue;
            path.push_back(u);
            on_path[static_cast<std::size_t>(u)] = 1;
            dfs(u);
            on_path[static_cast<std::size_t>(u)] = 0;
            path.pop_back();
            if (found_active) return;
        }
    };

    for (int s : a) {
        if (found_active) break;
        path.assign(1, s);
        std::fill(on_path.begin(), on_path.end(), 0);
        on_path[static_cast<std::size_t>(s)] = 1;
        dfs(s);
    }
    return !found_active;
}

// ---------------------------------------------------------------------------
// graphical necessary conditions for recoverability

enum class RecoverStatus {
    PassesNecessaryConditions,
    FailsNeighborCondition,
    FailsColliderPathCondition
};

struct RecoverabilityVerdict {
    RecoverStatus status = RecoverStatus::PassesNecessaryConditions;
    std::optional<std::string> witness;  // present iff status is a failure
};

struct RecoverTarget {
    enum Kind { JointDistribution, Conditional } kind = JointDistribution;
    std::set<int> cond;  // conditioned-upon variables, Conditional only

    static RecoverTarget joint() { return RecoverTarget{}; }
    static RecoverTarget conditional(std::set<int> c) {
        RecoverTarget t;
        t.kind = Conditional;
        t.cond = std::move(c);
        return t;
    }
};

// A distribution is non-recoverable when a checked variable is adjacent to
// its own indicator, or connected to it by a path on which every
// intermediate node is a collider. Two consecutive intermediates cannot both
// be colliders on a simple path (the shared edge would need to point both
// ways), so any such path has at most one intermediate: a common child.
// For the joint law that child must be substantive; for a conditional it
// must itself be conditioned upon.
inline RecoverabilityVerdict check_necessary_conditions(const MDag& g, const RecoverTarget& target) {
    std::vector<int> checked;
    if (target.kind == RecoverTarget::JointDistribution) {
        checked = g.incomplete_variables();
    } else {
        for (int v : target.cond)
            if (g.indicator_of(v)) checked.push_back(v);
    }

    for (int v : checked) {
        int mv = *g.indicator_of(v);
        if (g.adjacent(v, mv)) {
            RecoverabilityVerdict out;
            out.status = RecoverStatus::FailsNeighborCondition;
            out.witness = g.has_edge(v, mv) ? g.name(v) + " -> " + g.name(mv)
                                            : g.name(mv) + " -> " + g.name(v);
            return out;
        }
    }
    for (int v : checked) {
        int mv = *g.indicator_of(v);
        for (int w : g.children(v)) {
            if (!g.has_edge(mv, w)) continue;
            bool fires = (target.kind == RecoverTarget::JointDistribution)
                             ? g.kind(w) == NodeKind::Substantive
                             : target.cond.count(w) > 0;
            if (fires) {
                RecoverabilityVerdict out;
                out.status = RecoverStatus::FailsColliderPathCondition;
                out.witness = g.name(v) + " -> " + g.name(w) + " <- " + g.name(mv);
                return out;
            }
        }
    }
    return RecoverabilityVerdict{};
}

// ---------------------------------------------------------------------------
// text DSL
//
//   node A;                  substantive variable
//   node A kind=substantive;
//   latent U;
//   miss M_A of A;           missingness indicator for A
//   A -> B;                  edge
//
// '#' starts a comment. Statements end with ';'. Errors carry line numbers.

inline MDag parse_mdag(const std::string& text) {
    MDag g;
    struct PendingEdge {
        std::string from, to;
        int line;
    };
    std::vector<PendingEdge> edges;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto fail = [](int ln, const std::string& msg) {
        throw std::runtime_error("line " + std::to_string(ln) + ": " + msg);
    };

    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::size_t pos = 0;
        while (pos < line.size()) {
            auto semi = line.find(';', pos);
            if (semi == std::string::npos) {
                std::string rest = line.substr(pos);
                if (rest.find_first_not_of(" \t\r") != std::string::npos)
                    fail(lineno, "statement missing terminating ';'");
                break;
            }
            std::string stmt = line.substr(pos, semi - pos);
            pos = semi + 1;

            std::istringstream ts(stmt);
            std::vector<std::string> tok;
            std::string t;
            while (ts >> t) tok.push_back(t);
            if (tok.empty()) continue;

            try {
                if (tok[0] == "node") {
                    if (tok.size() < 2) fail(lineno, "node statement needs a name");
                    NodeKind kind = NodeKind::Substantive;
                    if (tok.size() == 3) {
                        if (tok[2] == "kind=substantive") kind = NodeKind::Substantive;
                        else if (tok[2] == "kind=latent") kind = NodeKind::Latent;
                        else fail(lineno, "unknown node kind '" + tok[2] + "'");
                    } else if (tok.size() > 3) {
                        fail(lineno, "malformed node statement");
                    }
                    g.add_node(tok[1], kind);
                } else if (tok[0] == "latent") {
                    if (tok.size() != 2) fail(lineno, "latent statement needs exactly a name");
                    g.add_node(tok[1], NodeKind::Latent);
                } else if (tok[0] == "miss") {
                    if (tok.size() != 4 || tok[2] != "of")
                        fail(lineno, "expected: miss <indicator> of <variable>");
                    if (!g.has_node(tok[3]))
                        fail(lineno, "indicator attached to unknown variable " + tok[3]);
                    int ind = g.add_node(tok[1], NodeKind::MissIndicator);
                    g.set_proxy(ind, g.id(tok[3]));
                } else if (tok.size() == 3 && tok[1] == "->") {
                    edges.push_back({tok[0], tok[2], lineno});
                } else {
                    fail(lineno, "unrecognized statement '" + stmt + "'");
                }
            } catch (const std::invalid_argument& e) {
                fail(lineno, e.what());
            }
        }
    }

    for (const auto& e : edges) {
        if (!g.has_node(e.from)) fail(e.line, "edge from unknown node " + e.from);
        if (!g.has_node(e.to)) fail(e.line, "edge to unknown node " + e.to);
        try {
            g.add_edge(e.from, e.to);
        } catch (const std::invalid_argument& ex) {
            fail(e.line, ex.what());
        }
    }
    try {
        g.validate();
    } catch (const std::domain_error& ex) {
        throw std::runtime_error(std::string("graph invalid: ") + ex.what());
    }
    return g;
}

}  // namespace mdag
