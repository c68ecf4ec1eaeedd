#pragma once

// The canonical missingness-DAG catalog. Ten lettered graphs A..J share a
// fixed substantive core (confounders Z1, Z2, exposure X, outcome Y, latent
// U into the confounders and exposure) and differ only in which substantive
// variables feed the three missingness indicators. The letters are encoded
// by four arrow classes, which downstream simulation code also uses to
// decide which variables may enter each missingness model:
//
//   xz2_to_others : X and the incomplete confounders cause missingness of
//                   the other incomplete variables (X -> M_Y, X -> M_Z2,
//                   Z2 -> M_X, Z2 -> M_Y)
//   y_to_others   : Y causes missingness of the other incomplete variables
//                   (Y -> M_X, Y -> M_Z2)
//   xz2_self      : X and Z2 cause their own missingness (X -> M_X,
//                   Z2 -> M_Z2)
//   y_self        : Y causes its own missingness (Y -> M_Y)
//
// Z1 points at every indicator in every letter. The optional latent W is a
// shared cause of all indicators.

#include <array>
#include <stdexcept>
#include <string>

#include "graph.hpp"

namespace mdag {

enum class Letter { A, B, C, D, E, F, G, H, I, J };

inline char letter_char(Letter l) { return static_cast<char>('A' + static_cast<int>(l)); }

inline Letter parse_letter(const std::string& s) {
    if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'J')
        return static_cast<Letter>(s[0] - 'A');
    throw std::invalid_argument("unknown canonical letter '" + s + "' (expected A..J)");
}

inline const std::array<Letter, 10>& all_letters() {
    static const std::array<Letter, 10> ls = {
        Letter::A, Letter::B, Letter::C, Letter::D, Letter::E,
        Letter::F, Letter::G, Letter::H, Letter::I, Letter::J};
    return ls;
}

struct ArrowPattern {
    bool xz2_to_others = false;
    bool y_to_others = false;
    bool xz2_self = false;
    bool y_self = false;
};

inline ArrowPattern canonical_pattern(Letter l) {
    switch (l) {
        case Letter::A: return {false, false, false, false};
        case Letter::B: return {true, false, false, false};
        case Letter::C: return {true, true, false, false};
        case Letter::D: return {false, false, true, false};
        case Letter::E: return {true, false, true, false};
        case Letter::F: return {true, true, true, false};
        case Letter::G: return {true, false, false, true};
        case Letter::H: return {true, true, false, true};
        case Letter::I: return {false, true, true, false};
        case Letter::J: return {true, true, true, true};
    }
    throw std::invalid_argument("unknown letter");
}

inline MDag build_canonical(Letter l, bool with_W, bool with_U) {
    ArrowPattern p = canonical_pattern(l);
    MDag g;
    int z1 = g.add_node("Z1", NodeKind::Substantive);
    int z2 = g.add_node("Z2", NodeKind::Substantive);
    int x = g.add_node("X", NodeKind::Substantive);
    int y = g.add_node("Y", NodeKind::Substantive);
    int mx = g.add_node("M_X", NodeKind::MissIndicator);
    int my = g.add_node("M_Y", NodeKind::MissIndicator);
    int mz2 = g.add_node("M_Z2", NodeKind::MissIndicator);
    g.set_proxy(mx, x);
    g.set_proxy(my, y);
    g.set_proxy(mz2, z2);

    if (with_U) {
        int u = g.add_node("U", NodeKind::Latent);
        g.add_edge(u, z1);
        g.add_edge(u, z2);
        g.add_edge(u, x);
    }
    g.add_edge(z1, x);
    g.add_edge(z2, x);
    g.add_edge(z1, y);
    g.add_edge(z2, y);
    g.add_edge(x, y);

    // complete confounders predict every indicator
    g.add_edge(z1, mx);
    g.add_edge(z1, my);
    g.add_edge(z1, mz2);

    if (p.xz2_to_others) {
        g.add_edge(x, my);
        g.add_edge(x, mz2);
        g.add_edge(z2, mx);
        g.add_edge(z2, my);
    }
    if (p.y_to_others) {
        g.add_edge(y, mx);
        g.add_edge(y, mz2);
    }
    if (p.xz2_self) {
        g.add_edge(x, mx);
        g.add_edge(z2, mz2);
    }
    if (p.y_self) {
        g.add_edge(y, my);
    }
    if (with_W) {
        int w = g.add_node("W", NodeKind::Latent);
        g.add_edge(w, mx);
        g.add_edge(w, my);
        g.add_edge(w, mz2);
    }
    g.validate();
    return g;
}

// reduced self-masking confounder graph: the ACE is provably not
// recoverable here, which carries over to the full letter D by edge
// monotonicity
inline MDag build_dprime() {
    MDag g;
    int z2 = g.add_node("Z2", NodeKind::Substantive);
    int x = g.add_node("X", NodeKind::Substantive);
    int y = g.add_node("Y", NodeKind::Substantive);
    int mz2 = g.add_node("M_Z2", NodeKind::MissIndicator);
    g.set_proxy(mz2, z2);
    g.add_edge(z2, x);
    g.add_edge(z2, y);
    g.add_edge(x, y);
    g.add_edge(z2, mz2);
    g.validate();
    return g;
}

// variant of the reduced graph with a two-component confounder block whose
// members go missing together; this is the carrier for the shipped
// indistinguishable model pair (a single binary confounder pins down the
// mixture weights, so no exact pair exists there)
inline MDag build_dprime_witness_graph() {
    MDag g;
    int z2a = g.add_node("Z2a", NodeKind::Substantive);
    int z2b = g.add_node("Z2b", NodeKind::Substantive);
    int x = g.add_node("X", NodeKind::Substantive);
    int y = g.add_node("Y", NodeKind::Substantive);
    int ma = g.add_node("M_Z2a", NodeKind::MissIndicator);
    int mb = g.add_node("M_Z2b", NodeKind::MissIndicator);
    g.set_proxy(ma, z2a);
    g.set_proxy(mb, z2b);
    // the two block halves are dependent, so their joint law can carry a
    // full four-level distribution rather than a product of margins
    g.add_edge(z2a, z2b);
    g.add_edge(z2a, x);
    g.add_edge(z2b, x);
    g.add_edge(z2a, y);
    g.add_edge(z2b, y);
    g.add_edge(x, y);
    g.add_edge(z2a, ma);
    g.add_edge(z2b, ma);
    g.add_edge(ma, mb);  // the block is missing jointly: M_Z2b copies M_Z2a
    g.validate();
    return g;
}

// expanded letter-D graph with the incomplete confounder block split into
// Z2 and Z3, each causing the missingness of the other (not its own); this
// restores recoverability of the ACE even though X still causes M_X
inline MDag build_dpp(bool with_U = true) {
    MDag g;
    int z1 = g.add_node("Z1", NodeKind::Substantive);
    int z2 = g.add_node("Z2", NodeKind::Substantive);
    int z3 = g.add_node("Z3", NodeKind::Substantive);
    int x = g.add_node("X", NodeKind::Substantive);
    int y = g.add_node("Y", NodeKind::Substantive);
    int mx = g.add_node("M_X", NodeKind::MissIndicator);
    int my = g.add_node("M_Y", NodeKind::MissIndicator);
    int mz2 = g.add_node("M_Z2", NodeKind::MissIndicator);
    int mz3 = g.add_node("M_Z3", NodeKind::MissIndicator);
    g.set_proxy(mx, x);
    g.set_proxy(my, y);
    g.set_proxy(mz2, z2);
    g.set_proxy(mz3, z3);

    if (with_U) {
        int u = g.add_node("U", NodeKind::Latent);
        g.add_edge(u, z1);
        g.add_edge(u, z2);
        g.add_edge(u, z3);
        g.add_edge(u, x);
    }
    for (int z : {z1, z2, z3}) {
        g.add_edge(z, x);
        g.add_edge(z, y);
    }
    g.add_edge(x, y);

    g.add_edge(z1, mx);
    g.add_edge(x, mx);
    g.add_edge(z1, my);
    g.add_edge(z1, mz2);
    g.add_edge(z3, mz2);
    g.add_edge(z1, mz3);
    g.add_edge(z2, mz3);
    g.validate();
    return g;
}

enum class CatalogClass { Recoverable, NonRecoverable, ConjecturedNonRecoverable };

inline const char* to_string(CatalogClass c) {
    switch (c) {
        case CatalogClass::Recoverable: return "Recoverable";
        case CatalogClass::NonRecoverable: return "NonRecoverable";
        case CatalogClass::ConjecturedNonRecoverable: return "ConjecturedNonRecoverable";
    }
    return "?";
}

inline CatalogClass classify_canonical(Letter l) {
    switch (l) {
        case Letter::A:
        case Letter::B:
        case Letter::C: return CatalogClass::Recoverable;
        case Letter::G:
        case Letter::H: return CatalogClass::ConjecturedNonRecoverable;
        default: return CatalogClass::NonRecoverable;
    }
}

}  // namespace mdag
