#pragma once

// Structural models over an m-DAG: every node (including latents and
// missingness indicators) is binary with an explicit conditional probability
// table. These models serve as exact oracles: the full joint, the
// interventional distribution, and hence the true ACE are all computed by
// direct summation, so identification formulas can be tested against truth
// with no approximation error.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "graph.hpp"
#include "rng.hpp"
#include "table.hpp"

namespace mdag {

struct StructuralModel {
    MDag g;
    // cpt[v][k] = P(v = 1 | parent configuration k), where k packs the
    // parents of v (in graph parent order) as bits, first parent least
    // significant
    std::vector<std::vector<double>> cpt;

    void validate() const {
        g.validate();
        if (cpt.size() != static_cast<std::size_t>(g.n()))
            throw std::domain_error("StructuralModel: one CPT required per node");
        for (int v = 0; v < g.n(); ++v) {
            std::size_t want = std::size_t{1} << g.parents(v).size();
            if (cpt[static_cast<std::size_t>(v)].size() != want)
                throw std::domain_error("StructuralModel: CPT size mismatch for node " + g.name(v));
            for (double p : cpt[static_cast<std::size_t>(v)])
                if (!(p >= 0.0 && p <= 1.0))
                    throw std::domain_error("StructuralModel: CPT entry outside [0,1] for node " +
                                            g.name(v));
        }
    }

    std::size_t parent_config(int v, const std::vector<int>& full) const {
        std::size_t k = 0;
        const auto& pa = g.parents(v);
        for (std::size_t i = 0; i < pa.size(); ++i)
            k |= static_cast<std::size_t>(full[static_cast<std::size_t>(pa[i])]) << i;
        return k;
    }

    double node_prob(int v, int value, const std::vector<int>& full) const {
        double p1 = cpt[static_cast<std::size_t>(v)][parent_config(v, full)];
        return value == 1 ? p1 : 1.0 - p1;
    }
};

// exact joint over all nodes, by multiplying the factorization out
inline JointTable full_joint(const StructuralModel& m) {
    std::vector<std::string> names;
    std::vector<int> cards;
    for (int v = 0; v < m.g.n(); ++v) {
        names.push_back(m.g.name(v));
        cards.push_back(2);
    }
    JointTable t(names, cards);
    for (std::size_t idx = 0; idx < t.size(); ++idx) {
        std::vector<int> full = t.decode(idx);
        double p = 1.0;
        for (int v = 0; v < m.g.n(); ++v) p *= m.node_prob(v, full[static_cast<std::size_t>(v)], full);
        t.raw(idx) = p;
    }
    return t;
}

// P(target = 1 | do(var = value)) by the truncated factorization: drop the
// intervened node's CPT and clamp its value
inline double interventional_prob(const StructuralModel& m, const std::string& var, int value,
                                  const std::string& target) {
    int xv = m.g.id(var);
    int tv = m.g.id(target);
    std::vector<int> cards(static_cast<std::size_t>(m.g.n()), 2);
    double total = 0.0;
    double hit = 0.0;
    for_each_assignment(cards, [&](const std::vector<int>& full) {
        if (full[static_cast<std::size_t>(xv)] != value) return;
        double p = 1.0;
        for (int v = 0; v < m.g.n(); ++v) {
            if (v == xv) continue;
            p *= m.node_prob(v, full[static_cast<std::size_t>(v)], full);
        }
        total += p;
        if (full[static_cast<std::size_t>(tv)] == 1) hit += p;
    });
    // total is 1 by construction up to rounding; divide anyway for safety
    return hit / total;
}

struct InterventionQuery {
    std::string outcome = "Y";
    std::string exposure = "X";
    int value = 1;
};

// P(outcome = 1 | do(exposure = value)) with argument and positivity checks:
// the intervened value must have positive conditional probability on every
// exposure parent configuration that can actually occur
inline double true_potential_outcome(const StructuralModel& m, const InterventionQuery& q) {
    int xv = m.g.id(q.exposure);
    int yv = m.g.id(q.outcome);
    if (xv == yv) throw std::invalid_argument("intervention: outcome equals exposure");
    if (m.g.kind(xv) != NodeKind::Substantive || m.g.kind(yv) != NodeKind::Substantive)
        throw std::invalid_argument("intervention: outcome and exposure must be substantive");
    if (q.value != 0 && q.value != 1)
        throw std::invalid_argument("intervention: exposure value must be 0 or 1");

    const auto& pa = m.g.parents(xv);
    std::vector<double> config_mass(std::size_t{1} << pa.size(), 0.0);
    std::vector<int> cards(static_cast<std::size_t>(m.g.n()), 2);
    for_each_assignment(cards, [&](const std::vector<int>& full) {
        double p = 1.0;
        for (int v = 0; v < m.g.n(); ++v) p *= m.node_prob(v, full[static_cast<std::size_t>(v)], full);
        config_mass[m.parent_config(xv, full)] += p;
    });
    for (std::size_t k = 0; k < config_mass.size(); ++k) {
        double px = q.value == 1 ? m.cpt[static_cast<std::size_t>(xv)][k]
                                 : 1.0 - m.cpt[static_cast<std::size_t>(xv)][k];
        if (config_mass[k] > 0.0 && px <= 0.0)
            throw std::domain_error("positivity violation: P(" + q.exposure + "=" +
                                    std::to_string(q.value) +
                                    " | parent config " + std::to_string(k) +
                                    ") = 0 on a configuration with positive probability");
    }
    return interventional_prob(m, q.exposure, q.value, q.outcome);
}

inline double true_ace(const StructuralModel& m, const std::string& exposure = "X",
                       const std::string& outcome = "Y") {
    return true_potential_outcome(m, {outcome, exposure, 1}) -
           true_potential_outcome(m, {outcome, exposure, 0});
}

// random parameterization with CPT entries bounded away from 0 and 1
inline StructuralModel random_model(const MDag& g, Rng& rng, double lo = 0.05, double hi = 0.95) {
    StructuralModel m;
    m.g = g;
    m.cpt.resize(static_cast<std::size_t>(g.n()));
    for (int v = 0; v < g.n(); ++v) {
        std::size_t nconf = std::size_t{1} << g.parents(v).size();
        m.cpt[static_cast<std::size_t>(v)].resize(nconf);
        for (std::size_t k = 0; k < nconf; ++k)
            m.cpt[static_cast<std::size_t>(v)][k] = rng.uniform(lo, hi);
    }
    return m;
}

// ---------------------------------------------------------------------------
// JSON serialization (self-describing: parent order is stored explicitly)

inline nlohmann::json to_json(const StructuralModel& m) {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (int v = 0; v < m.g.n(); ++v)
        j["nodes"].push_back({{"name", m.g.name(v)}, {"kind", to_string(m.g.kind(v))}});
    // edges are listed in parent order per node so replaying them rebuilds
    // identical parent lists, which the cpt row layout depends on
    j["edges"] = nlohmann::json::array();
    for (int v = 0; v < m.g.n(); ++v)
        for (int p : m.g.parents(v)) j["edges"].push_back({m.g.name(p), m.g.name(v)});
    j["masks"] = nlohmann::json::array();
    for (const auto& [ind, var] : m.g.proxy())
        j["masks"].push_back({m.g.name(ind), m.g.name(var)});
    for (int v = 0; v < m.g.n(); ++v) {
        nlohmann::json pa = nlohmann::json::array();
        for (int p : m.g.parents(v)) pa.push_back(m.g.name(p));
        j["parents"][m.g.name(v)] = pa;
        j["cpt"][m.g.name(v)] = m.cpt[static_cast<std::size_t>(v)];
    }
    return j;
}

inline StructuralModel model_from_json(const nlohmann::json& j) {
    StructuralModel m;
    for (const auto& n : j.at("nodes")) {
        std::string kind = n.at("kind").get<std::string>();
        NodeKind k = kind == "substantive"  ? NodeKind::Substantive
                     : kind == "indicator"  ? NodeKind::MissIndicator
                     : kind == "latent"     ? NodeKind::Latent
                                            : throw std::runtime_error("bad node kind " + kind);
        m.g.add_node(n.at("name").get<std::string>(), k);
    }
    for (const auto& e : j.at("edges"))
        m.g.add_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    for (const auto& e : j.at("masks"))
        m.g.set_proxy(m.g.id(e.at(0).get<std::string>()), m.g.id(e.at(1).get<std::string>()));
    m.cpt.resize(static_cast<std::size_t>(m.g.n()));
    for (int v = 0; v < m.g.n(); ++v) {
        const auto& stored = j.at("parents").at(m.g.name(v));
        const auto& pa = m.g.parents(v);
        if (stored.size() != pa.size())
            throw std::runtime_error("parent list mismatch for node " + m.g.name(v));
        for (std::size_t i = 0; i < pa.size(); ++i)
            if (stored.at(i).get<std::string>() != m.g.name(pa[i]))
                throw std::runtime_error("parent order mismatch for node " + m.g.name(v));
        m.cpt[static_cast<std::size_t>(v)] =
            j.at("cpt").at(m.g.name(v)).get<std::vector<double>>();
    }
    m.validate();
    return m;
}

inline void save_model(const StructuralModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_json(m).dump(2) << "\n";
}

inline StructuralModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
}

}  // namespace mdag
