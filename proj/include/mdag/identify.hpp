#pragma once

// Identification machinery: the observable law induced by a structural
// model (values masked where their indicator is 1, latents marginalized
// out), closed-form potential-outcome expressions evaluated on that law for
// the recoverable graphs, and the two-model witness apparatus certifying
// non-recoverability.
//
// Formula evaluators consume only the observable law. Masked variables are
// coded 0/1/NA, so conditioning on a substantive value structurally forces
// the corresponding indicator to 0: a lookup that conditions on a value
// "where the indicator is 1" is rejected as contradictory before any cell
// is read.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "catalog.hpp"
#include "rng.hpp"
#include "structural.hpp"
#include "table.hpp"

namespace mdag {

class ObservableLaw {
public:
    static constexpr int NA = 2;  // third state of a masked coding variable

    ObservableLaw() = default;

    const JointTable& table() const { return table_; }
    bool maskable(const std::string& name) const {
        return masked_.count(table_.var_index(name)) > 0;
    }

    static ObservableLaw from_model(const StructuralModel& m) {
        JointTable joint = full_joint(m);
        ObservableLaw law;

        std::vector<std::string> names;
        std::vector<int> cards;
        std::vector<int> src;                 // graph node per observable column
        std::vector<int> mask_src;            // indicator node per column, -1 if none
        for (int v = 0; v < m.g.n(); ++v) {
            if (m.g.kind(v) == NodeKind::Latent) continue;
            if (m.g.kind(v) == NodeKind::MissIndicator) {
                names.push_back(m.g.name(v));
                cards.push_back(2);
                src.push_back(v);
                mask_src.push_back(-1);
                continue;
            }
            auto ind = m.g.indicator_of(v);
            names.push_back(m.g.name(v));
            cards.push_back(ind ? 3 : 2);
            src.push_back(v);
            mask_src.push_back(ind ? *ind : -1);
        }
        law.table_ = JointTable(names, cards);
        for (std::size_t i = 0; i < cards.size(); ++i) {
            if (cards[i] != 3) continue;
            law.masked_.insert(static_cast<int>(i));
            // column index of this variable's indicator
            for (std::size_t k = 0; k < src.size(); ++k)
                if (src[k] == mask_src[i])
                    law.indicator_col_[static_cast<int>(i)] = static_cast<int>(k);
        }

        std::vector<int> obs(names.size());
        for (std::size_t idx = 0; idx < joint.size(); ++idx) {
            double p = joint.raw(idx);
            if (p == 0.0) continue;
            std::vector<int> full = joint.decode(idx);
            for (std::size_t i = 0; i < names.size(); ++i) {
                int value = full[static_cast<std::size_t>(src[i])];
                if (mask_src[i] >= 0 && full[static_cast<std::size_t>(mask_src[i])] == 1)
                    value = NA;
                obs[i] = value;
            }
            law.table_.at(obs) += p;
        }
        return law;
    }

    // an event is a conjunction of column=state constraints; for masked
    // columns state NA means "missing" and 0/1 mean "observed with value"
    Event make_event(const std::vector<std::pair<std::string, int>>& constraints) const {
        Event ev;
        for (const auto& [name, value] : constraints)
            ev.emplace_back(table_.var_index(name), value);
        check_event(ev);
        return ev;
    }

    double mass(const Event& ev) const { return table_.mass(ev); }

    double conditional(const Event& target, const Event& given) const {
        double den = table_.mass(given);
        if (den <= 0.0)
            throw std::domain_error("positivity violation: conditioning event {" +
                                    describe(given) + "} has zero probability");
        Event both = given;
        both.insert(both.end(), target.begin(), target.end());
        check_event(both);
        return table_.mass(both) / den;
    }

    std::string describe(const Event& ev) const {
        std::ostringstream out;
        for (std::size_t i = 0; i < ev.size(); ++i) {
            if (i) out << ", ";
            out << table_.names()[static_cast<std::size_t>(ev[i].first)] << "=";
            if (masked_.count(ev[i].first) && ev[i].second == NA) out << "NA";
            else out << ev[i].second;
        }
        return out.str();
    }

private:
    // reject contradictory constraints, in particular a substantive value
    // combined with its own indicator equal to 1
    void check_event(const Event& ev) const {
        for (std::size_t i = 0; i < ev.size(); ++i) {
            const auto& [v, val] = ev[i];
            int maxstate = table_.card(v) - 1;
            if (val < 0 || val > maxstate)
                throw std::invalid_argument("event constrains " +
                                            table_.names()[static_cast<std::size_t>(v)] +
                                            " to out-of-range state " + std::to_string(val));
            for (std::size_t j = i + 1; j < ev.size(); ++j)
                if (ev[j].first == v && ev[j].second != val)
                    throw std::invalid_argument(
                        "contradictory event: " +
                        table_.names()[static_cast<std::size_t>(v)] +
                        " constrained to two different states");
        }
        for (const auto& [v, val] : ev) {
            if (!masked_.count(v) || val == NA) continue;
            // value constraint on a masked column: its indicator, if also
            // constrained, must be 0
            auto it = indicator_col_.find(v);
            if (it == indicator_col_.end()) continue;
            for (const auto& [w, wval] : ev) {
                if (w == it->second && wval == 1)
                    throw std::invalid_argument(
                        "event conditions on a value of " +
                        table_.names()[static_cast<std::size_t>(v)] + " while " +
                        table_.names()[static_cast<std::size_t>(w)] + "=1");
            }
        }
    }

    JointTable table_;
    std::set<int> masked_;
    std::map<int, int> indicator_col_;  // masked column -> its indicator column
};

// which observable plays which part in the closed-form expressions
struct LawRoles {
    std::string x = "X";
    std::string y = "Y";
    std::vector<std::string> z1{"Z1"};
    std::vector<std::string> z2{"Z2"};
    std::vector<std::string> z3{};  // second confounder block, expanded-D only
    std::string m_x = "M_X";
    std::string m_y = "M_Y";
    std::vector<std::string> m_z2{"M_Z2"};
    std::vector<std::string> m_z3{};
};

namespace detail {

using Constraints = std::vector<std::pair<std::string, int>>;

inline void add_values(Constraints& c, const std::vector<std::string>& names,
                       const std::vector<int>& config) {
    for (std::size_t i = 0; i < names.size(); ++i) c.emplace_back(names[i], config[i]);
}

inline void add_zero(Constraints& c, const std::vector<std::string>& names) {
    for (const auto& n : names) c.emplace_back(n, 0);
}

// iterate configurations of a group of binary variables
template <typename F>
void for_group(const std::vector<std::string>& names, F&& fn) {
    std::vector<int> cards(names.size(), 2);
    if (names.empty()) {
        fn(std::vector<int>{});
        return;
    }
    for_each_assignment(cards, [&](const std::vector<int>& cfg) { fn(cfg); });
}

}  // namespace detail

// P(y | x, z1, z2, m=0), the complete-case outcome distribution shared by
// all the closed-form expressions
inline double complete_case_outcome(const ObservableLaw& law, const LawRoles& r, int x, int y,
                                    const std::vector<int>& z1cfg, const std::vector<int>& z2cfg,
                                    const std::vector<int>* z3cfg = nullptr) {
    detail::Constraints given{{r.x, x}, {r.m_x, 0}, {r.m_y, 0}};
    detail::add_values(given, r.z1, z1cfg);
    detail::add_values(given, r.z2, z2cfg);
    detail::add_zero(given, r.m_z2);
    if (z3cfg) {
        detail::add_values(given, r.z3, *z3cfg);
        detail::add_zero(given, r.m_z3);
    }
    return law.conditional(law.make_event({{r.y, y}}), law.make_event(given));
}

// confounders exogenous to missingness: standardize the complete-case
// outcome by P(z1) and P(z2 | z1, m_Z2 = 0)
inline double recoverable_po_a(const ObservableLaw& law, const LawRoles& r, int x, int y = 1) {
    double total = 0.0;
    detail::for_group(r.z1, [&](const std::vector<int>& z1cfg) {
        detail::for_group(r.z2, [&](const std::vector<int>& z2cfg) {
            double t1 = complete_case_outcome(law, r, x, y, z1cfg, z2cfg);
            detail::Constraints z1ev;
            detail::add_values(z1ev, r.z1, z1cfg);
            double t2 = r.z1.empty() ? 1.0 : law.mass(law.make_event(z1ev));
            detail::Constraints z2given = z1ev;
            detail::add_zero(z2given, r.m_z2);
            detail::Constraints z2ev;
            detail::add_values(z2ev, r.z2, z2cfg);
            double t3 = law.conditional(law.make_event(z2ev), law.make_event(z2given));
            total += t1 * t2 * t3;
        });
    });
    return total;
}

// exposure and incomplete confounders cause the others' missingness: the
// joint confounder mass is rebuilt by an inverse-weighting sum over x'
inline double recoverable_po_b(const ObservableLaw& law, const LawRoles& r, int x, int y = 1) {
    double total = 0.0;
    detail::for_group(r.z1, [&](const std::vector<int>& z1cfg) {
        detail::for_group(r.z2, [&](const std::vector<int>& z2cfg) {
            double t1 = complete_case_outcome(law, r, x, y, z1cfg, z2cfg);
            double inner = 0.0;
            for (int xp = 0; xp < 2; ++xp) {
                detail::Constraints joint{{r.m_x, 0}, {r.x, xp}};
                detail::add_zero(joint, r.m_z2);
                detail::add_values(joint, r.z1, z1cfg);
                detail::add_values(joint, r.z2, z2cfg);
                double num = law.mass(law.make_event(joint));

                detail::Constraints g1{{r.x, xp}, {r.m_x, 0}};
                detail::add_values(g1, r.z1, z1cfg);
                detail::Constraints t1ev;
                detail::add_zero(t1ev, r.m_z2);
                double d1 = law.conditional(law.make_event(t1ev), law.make_event(g1));

                detail::Constraints g2;
                detail::add_values(g2, r.z1, z1cfg);
                detail::add_values(g2, r.z2, z2cfg);
                detail::add_zero(g2, r.m_z2);
                double d2 = law.conditional(law.make_event({{r.m_x, 0}}), law.make_event(g2));

                inner += num / (d1 * d2);
            }
            total += t1 * inner;
        });
    });
    return total;
}

namespace detail {

// P(m=0 | x, y, z1, z2) factorized into three recoverable pieces
inline double all_observed_prob(const ObservableLaw& law, const LawRoles& r, int x, int y,
                                const std::vector<int>& z1cfg, const std::vector<int>& z2cfg) {
    Constraints g1{{r.x, x}, {r.m_x, 0}};
    add_values(g1, r.z1, z1cfg);
    add_values(g1, r.z2, z2cfg);
    add_zero(g1, r.m_z2);
    double f1 = law.conditional(law.make_event({{r.m_y, 0}}), law.make_event(g1));

    Constraints g2{{r.y, y}, {r.m_y, 0}};
    add_values(g2, r.z1, z1cfg);
    add_values(g2, r.z2, z2cfg);
    add_zero(g2, r.m_z2);
    double f2 = law.conditional(law.make_event({{r.m_x, 0}}), law.make_event(g2));

    Constraints g3{{r.x, x}, {r.y, y}, {r.m_x, 0}, {r.m_y, 0}};
    add_values(g3, r.z1, z1cfg);
    Constraints t3;
    add_zero(t3, r.m_z2);
    double f3 = law.conditional(law.make_event(t3), law.make_event(g3));

    return f1 * f2 * f3;
}

// complete-case joint mass over (x, y, z1, z2)
inline double complete_case_mass(const ObservableLaw& law, const LawRoles& r, int x, int y,
                                 const std::vector<int>& z1cfg, const std::vector<int>& z2cfg) {
    Constraints ev{{r.x, x}, {r.y, y}, {r.m_x, 0}, {r.m_y, 0}};
    add_values(ev, r.z1, z1cfg);
    add_values(ev, r.z2, z2cfg);
    add_zero(ev, r.m_z2);
    return law.mass(law.make_event(ev));
}

}  // namespace detail

// outcome also causes the others' missingness: inverse weighting now runs
// through the factorized P(m=0 | x, y, z1, z2), and the propensity
// P(x | z1, z2) is rebuilt from complete cases by a double sum
inline double recoverable_po_c(const ObservableLaw& law, const LawRoles& r, int x, int y = 1) {
    double total = 0.0;
    detail::for_group(r.z1, [&](const std::vector<int>& z1cfg) {
        detail::for_group(r.z2, [&](const std::vector<int>& z2cfg) {
            double t1 = complete_case_outcome(law, r, x, y, z1cfg, z2cfg);

            detail::Constraints numev{{r.x, x}, {r.m_x, 0}};
            detail::add_values(numev, r.z1, z1cfg);
            detail::add_values(numev, r.z2, z2cfg);
            detail::add_zero(numev, r.m_z2);
            double num = law.mass(law.make_event(numev));

            detail::Constraints d1g{{r.x, x}, {r.y, y}, {r.m_x, 0}, {r.m_y, 0}};
            detail::add_values(d1g, r.z1, z1cfg);
            detail::Constraints d1t;
            detail::add_zero(d1t, r.m_z2);
            double d1 = law.conditional(law.make_event(d1t), law.make_event(d1g));

            detail::Constraints d2g{{r.y, y}, {r.m_y, 0}};
            detail::add_values(d2g, r.z1, z1cfg);
            detail::add_values(d2g, r.z2, z2cfg);
            detail::add_zero(d2g, r.m_z2);
            double d2 = law.conditional(law.make_event({{r.m_x, 0}}), law.make_event(d2g));

            // 1 / P(x | z1, z2), built from the weighted complete-case sums
            double num_sum = 0.0, den_sum = 0.0;
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    double g = detail::complete_case_mass(law, r, a, b, z1cfg, z2cfg) /
                               detail::all_observed_prob(law, r, a, b, z1cfg, z2cfg);
                    num_sum += g;
                    if (a == x) den_sum += g;
                }
            }
            total += t1 * num / (d1 * d2) * (num_sum / den_sum);
        });
    });
    return total;
}

// The same expression as printed in the paper's summary table, which fixes
// x inside the double-sum numerator instead of summing it. Kept as a
// negative control: it does NOT equal the potential outcome (the derivation
// in the appendix carries x' through both factors).
inline double recoverable_po_c_printed(const ObservableLaw& law, const LawRoles& r, int x,
                                       int y = 1) {
    double total = 0.0;
    detail::for_group(r.z1, [&](const std::vector<int>& z1cfg) {
        detail::for_group(r.z2, [&](const std::vector<int>& z2cfg) {
            double t1 = complete_case_outcome(law, r, x, y, z1cfg, z2cfg);

            detail::Constraints numev{{r.x, x}, {r.m_x, 0}};
            detail::add_values(numev, r.z1, z1cfg);
            detail::add_values(numev, r.z2, z2cfg);
            detail::add_zero(numev, r.m_z2);
            double num = law.mass(law.make_event(numev));

            detail::Constraints d1g{{r.x, x}, {r.y, y}, {r.m_x, 0}, {r.m_y, 0}};
            detail::add_values(d1g, r.z1, z1cfg);
            detail::Constraints d1t;
            detail::add_zero(d1t, r.m_z2);
            double d1 = law.conditional(law.make_event(d1t), law.make_event(d1g));

            detail::Constraints d2g{{r.y, y}, {r.m_y, 0}};
            detail::add_values(d2g, r.z1, z1cfg);
            detail::add_values(d2g, r.z2, z2cfg);
            detail::add_zero(d2g, r.m_z2);
            double d2 = law.conditional(law.make_event({{r.m_x, 0}}), law.make_event(d2g));

            double num_sum = 0.0, den_sum = 0.0;
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    // literal rendering: mass at the outer x, weight at a
                    double g = detail::complete_case_mass(law, r, x, b, z1cfg, z2cfg) /
                               detail::all_observed_prob(law, r, a, b, z1cfg, z2cfg);
                    num_sum += g;
                }
            }
            for (int b = 0; b < 2; ++b) {
                den_sum += detail::complete_case_mass(law, r, x, b, z1cfg, z2cfg) /
                           detail::all_observed_prob(law, r, x, b, z1cfg, z2cfg);
            }
            total += t1 * num / (d1 * d2) * (num_sum / den_sum);
        });
    });
    return total;
}

// expanded-D graph: the second confounder block Z3 carries the missingness
// of Z2 and vice versa, which lets the confounder joint be rebuilt
inline double recoverable_po_dpp(const ObservableLaw& law, const LawRoles& r, int x, int y = 1) {
    if (r.z3.empty() || r.m_z3.empty())
        throw std::invalid_argument("expanded-D expression requires the Z3 roles");
    double total = 0.0;
    detail::for_group(r.z1, [&](const std::vector<int>& z1cfg) {
        detail::for_group(r.z2, [&](const std::vector<int>& z2cfg) {
            detail::for_group(r.z3, [&](const std::vector<int>& z3cfg) {
                double t1 = complete_case_outcome(law, r, x, y, z1cfg, z2cfg, &z3cfg);

                detail::Constraints t2g;
                detail::add_values(t2g, r.z1, z1cfg);
                detail::add_values(t2g, r.z3, z3cfg);
                detail::add_zero(t2g, r.m_z2);
                detail::add_zero(t2g, r.m_z3);
                detail::Constraints t2t;
                detail::add_values(t2t, r.z2, z2cfg);
                double t2 = law.conditional(law.make_event(t2t), law.make_event(t2g));

                detail::Constraints t3ev;
                detail::add_zero(t3ev, r.m_z3);
                detail::add_values(t3ev, r.z1, z1cfg);
                detail::add_values(t3ev, r.z3, z3cfg);
                double t3 = law.mass(law.make_event(t3ev));

                detail::Constraints t4g;
                detail::add_values(t4g, r.z1, z1cfg);
                detail::add_values(t4g, r.z2, z2cfg);
                detail::add_zero(t4g, r.m_z2);
                detail::Constraints t4t;
                detail::add_zero(t4t, r.m_z3);
                double t4 = law.conditional(law.make_event(t4t), law.make_event(t4g));

                total += t1 * t2 * t3 / t4;
            });
        });
    });
    return total;
}

inline double recoverable_ace_a(const ObservableLaw& law, const LawRoles& r = LawRoles{}) {
    return recoverable_po_a(law, r, 1) - recoverable_po_a(law, r, 0);
}
inline double recoverable_ace_b(const ObservableLaw& law, const LawRoles& r = LawRoles{}) {
    return recoverable_po_b(law, r, 1) - recoverable_po_b(law, r, 0);
}
inline double recoverable_ace_c(const ObservableLaw& law, const LawRoles& r = LawRoles{}) {
    return recoverable_po_c(law, r, 1) - recoverable_po_c(law, r, 0);
}
inline double recoverable_ace_dpp(const ObservableLaw& law, const LawRoles& r) {
    return recoverable_po_dpp(law, r, 1) - recoverable_po_dpp(law, r, 0);
}

// ---------------------------------------------------------------------------
// non-recoverability witnesses

struct WitnessReport {
    double max_law_gap = 0.0;
    double ace1 = 0.0;
    double ace2 = 0.0;
    bool is_witness = false;
};

namespace detail {

inline bool same_skeleton(const MDag& a, const MDag& b) {
    if (a.n() != b.n()) return false;
    for (int v = 0; v < a.n(); ++v) {
        if (a.name(v) != b.name(v) || a.kind(v) != b.kind(v)) return false;
        if (a.children(v) != b.children(v)) return false;
    }
    return a.proxy() == b.proxy();
}

}  // namespace detail

// two models over the same graph certify non-recoverability when their
// observable laws coincide but their true causal effects differ
inline WitnessReport verify_witness_pair(const StructuralModel& m1, const StructuralModel& m2,
                                         const InterventionQuery& q, double tol = 1e-9) {
    if (!detail::same_skeleton(m1.g, m2.g))
        throw std::invalid_argument("witness pair must share the same graph skeleton");
    ObservableLaw l1 = ObservableLaw::from_model(m1);
    ObservableLaw l2 = ObservableLaw::from_model(m2);
    WitnessReport rep;
    for (std::size_t i = 0; i < l1.table().size(); ++i)
        rep.max_law_gap = std::max(rep.max_law_gap, std::abs(l1.table().raw(i) - l2.table().raw(i)));
    rep.ace1 = true_potential_outcome(m1, {q.outcome, q.exposure, 1}) -
               true_potential_outcome(m1, {q.outcome, q.exposure, 0});
    rep.ace2 = true_potential_outcome(m2, {q.outcome, q.exposure, 1}) -
               true_potential_outcome(m2, {q.outcome, q.exposure, 0});
    rep.is_witness = rep.max_law_gap <= tol && std::abs(rep.ace1 - rep.ace2) > 10.0 * tol;
    return rep;
}

struct WitnessSearchOptions {
    int max_attempts = 10000;
    double step = 0.05;     // initial displacement along a law-preserving direction
    double tol = 1e-9;      // observable-law agreement required of a witness
    int repair_iters = 50;  // Gauss-Newton steps pulling the law gap back to zero
};

struct WitnessSearchResult {
    bool found = false;
    StructuralModel model2;
    WitnessReport report;
    int attempts = 0;
};

namespace detail {

// free CPT coordinates of a model; entries exactly 0 or 1 are treated as
// structural determinism and never perturbed
struct ParamMap {
    std::vector<std::pair<int, std::size_t>> coords;  // (node, cpt row)

    explicit ParamMap(const StructuralModel& m) {
        for (int v = 0; v < m.g.n(); ++v)
            for (std::size_t k = 0; k < m.cpt[static_cast<std::size_t>(v)].size(); ++k) {
                double p = m.cpt[static_cast<std::size_t>(v)][k];
                if (p > 0.0 && p < 1.0) coords.emplace_back(v, k);
            }
    }

    Eigen::VectorXd get(const StructuralModel& m) const {
        Eigen::VectorXd th(coords.size());
        for (std::size_t i = 0; i < coords.size(); ++i)
            th[static_cast<Eigen::Index>(i)] =
                m.cpt[static_cast<std::size_t>(coords[i].first)][coords[i].second];
        return th;
    }

    void set(StructuralModel& m, const Eigen::VectorXd& th) const {
        for (std::size_t i = 0; i < coords.size(); ++i) {
            double p = th[static_cast<Eigen::Index>(i)];
            p = std::min(0.99, std::max(0.01, p));
            m.cpt[static_cast<std::size_t>(coords[i].first)][coords[i].second] = p;
        }
    }
};

inline Eigen::VectorXd law_vector(const StructuralModel& m) {
    ObservableLaw law = ObservableLaw::from_model(m);
    Eigen::VectorXd v(law.table().size());
    for (std::size_t i = 0; i < law.table().size(); ++i)
        v[static_cast<Eigen::Index>(i)] = law.table().raw(i);
    return v;
}

inline Eigen::MatrixXd law_jacobian(StructuralModel m, const ParamMap& pm,
                                    const Eigen::VectorXd& th) {
    const double h = 1e-6;
    Eigen::VectorXd base = th;
    pm.set(m, base);
    Eigen::VectorXd f0 = law_vector(m);
    Eigen::MatrixXd J(f0.size(), th.size());
    for (Eigen::Index j = 0; j < th.size(); ++j) {
        Eigen::VectorXd tp = base;
        tp[j] += h;
        pm.set(m, tp);
        J.col(j) = (law_vector(m) - f0) / h;
        pm.set(m, base);
    }
    return J;
}

}  // namespace detail

// Randomized search for a second model with the same observable law but a
// different causal effect. A random direction is projected onto the null
// space of the law map's Jacobian at the seed, the model is displaced, and
// Gauss-Newton repair drives the law gap back below tolerance. On graphs
// where the effect is a function of the law the search comes up empty,
// which is reported, not proven.
inline WitnessSearchResult witness_search(const StructuralModel& seed, const InterventionQuery& q,
                                          Rng& rng, const WitnessSearchOptions& opt = {}) {
    detail::ParamMap pm(seed);
    Eigen::VectorXd th0 = pm.get(seed);
    Eigen::VectorXd law0 = detail::law_vector(seed);

    Eigen::MatrixXd J = detail::law_jacobian(seed, pm, th0);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeFullV);
    double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
    // columns of V beyond the numerical rank span law-preserving directions
    std::vector<Eigen::Index> null_cols;
    for (Eigen::Index i = 0; i < svd.matrixV().cols(); ++i) {
        double s = i < svd.singularValues().size() ? svd.singularValues()[i] : 0.0;
        if (s <= smax * 1e-7) null_cols.push_back(i);
    }

    WitnessSearchResult res;
    for (int attempt = 1; attempt <= opt.max_attempts; ++attempt) {
        res.attempts = attempt;
        if (null_cols.empty()) continue;  // law map locally injective at seed

        Eigen::VectorXd d = Eigen::VectorXd::Zero(th0.size());
        for (Eigen::Index c : null_cols) {
            double w = rng.normal();
            d += w * svd.matrixV().col(c);
        }
        double nd = d.norm();
        if (nd < 1e-10) continue;
        Eigen::VectorXd th = th0 + opt.step * d / nd;

        StructuralModel cand = seed;
        pm.set(cand, th);
        // pull the candidate back onto the level set of the seed's law
        for (int it = 0; it < opt.repair_iters; ++it) {
            Eigen::VectorXd r = detail::law_vector(cand) - law0;
            if (r.cwiseAbs().maxCoeff() <= opt.tol * 0.1) break;
            Eigen::MatrixXd Jr = detail::law_jacobian(cand, pm, pm.get(cand));
            Eigen::VectorXd delta = Jr.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(r);
            pm.set(cand, pm.get(cand) - delta);
        }

        WitnessReport rep = verify_witness_pair(seed, cand, q, opt.tol);
        if (rep.is_witness) {
            res.found = true;
            res.model2 = cand;
            res.report = rep;
            return res;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// the shipped witness pair on the reduced self-masking confounder graph
//
// The confounder block has four levels z = Z2a + 2*Z2b. Both models share
// the outcome and exposure mechanics f(x,y|z) and the observed-stratum
// masses P(z, block observed); they differ in how the missing mass is
// spread over z. The shift direction (0, +d/2, +d/2, -d) is annihilated by
// f because f(.|3) is the midpoint of f(.|1) and f(.|2), so every
// observable cell agrees while the causal effects differ by 0.0864.

inline std::pair<StructuralModel, StructuralModel> dprime_witness_pair() {
    MDag g = build_dprime_witness_graph();

    auto base = [&]() {
        StructuralModel m;
        m.g = g;
        m.cpt.resize(static_cast<std::size_t>(g.n()));
        // exposure within confounder level: P(x=1|z) for z = 0..3
        m.cpt[static_cast<std::size_t>(g.id("X"))] = {0.95, 0.95, 0.05, 0.5};
        // outcome: rows are z + 4*x
        m.cpt[static_cast<std::size_t>(g.id("Y"))] = {0.5, 0.5, 0.1, 0.12,
                                                      0.9, 0.9, 0.5, 0.88};
        // the block goes missing jointly: second indicator copies the first
        m.cpt[static_cast<std::size_t>(g.id("M_Z2b"))] = {0.0, 1.0};
        return m;
    };

    // model 1: level masses (0.04, 0.23, 0.23, 0.50), missing share
    // (0.3, 0.3, 0.3, 0.5)
    StructuralModel m1 = base();
    m1.cpt[static_cast<std::size_t>(g.id("Z2a"))] = {0.73};
    m1.cpt[static_cast<std::size_t>(g.id("Z2b"))] = {0.23 / 0.27, 0.5 / 0.73};
    m1.cpt[static_cast<std::size_t>(g.id("M_Z2a"))] = {0.3, 0.3, 0.3, 0.5};

    // model 2: missing mass shifted along the annihilated direction with
    // d = 0.24; observed-stratum masses are unchanged
    StructuralModel m2 = base();
    m2.cpt[static_cast<std::size_t>(g.id("Z2a"))] = {0.61};
    m2.cpt[static_cast<std::size_t>(g.id("Z2b"))] = {0.35 / 0.39, 0.26 / 0.61};
    m2.cpt[static_cast<std::size_t>(g.id("M_Z2a"))] = {0.3, 0.54, 0.54, 0.01 / 0.26};

    m1.validate();
    m2.validate();
    return {m1, m2};
}

}  // namespace mdag
