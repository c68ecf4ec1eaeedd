#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "mdag/catalog.hpp"
#include "mdag/rng.hpp"
#include "mdag/structural.hpp"

using namespace mdag;

namespace {

// Z -> X, Z -> Y, X -> Y with hand-set tables
StructuralModel confounded() {
    MDag g;
    g.add_node("Z", NodeKind::Substantive);
    g.add_node("X", NodeKind::Substantive);
    g.add_node("Y", NodeKind::Substantive);
    g.add_edge("Z", "X");
    g.add_edge("Z", "Y");
    g.add_edge("X", "Y");
    StructuralModel m;
    m.g = g;
    m.cpt = {
        {0.3},                  // P(Z=1)
        {0.2, 0.7},             // P(X=1 | Z)
        {0.1, 0.5, 0.4, 0.9},   // P(Y=1 | Z + 2X)
    };
    m.validate();
    return m;
}

}  // namespace

TEST_CASE("full joint multiplies out the factorization") {
    StructuralModel m = confounded();
    JointTable t = full_joint(m);
    t.validate();
    // P(Z=1, X=0, Y=1) = 0.3 * (1-0.7) * 0.5
    REQUIRE(t.at({1, 0, 1}) == Catch::Approx(0.3 * 0.3 * 0.5));
    REQUIRE(t.at({0, 1, 0}) == Catch::Approx(0.7 * 0.2 * (1 - 0.4)));
}

TEST_CASE("interventional distribution matches the standardization arithmetic") {
    StructuralModel m = confounded();
    // P(Y=1 | do(X=x)) = sum_z P(z) P(y=1 | z, x)
    double do1 = 0.7 * 0.4 + 0.3 * 0.9;
    double do0 = 0.7 * 0.1 + 0.3 * 0.5;
    REQUIRE(true_potential_outcome(m, {"Y", "X", 1}) == Catch::Approx(do1).margin(1e-14));
    REQUIRE(true_potential_outcome(m, {"Y", "X", 0}) == Catch::Approx(do0).margin(1e-14));
    REQUIRE(true_ace(m) == Catch::Approx(do1 - do0).margin(1e-14));
    // intervening cannot break normalization
    REQUIRE(interventional_prob(m, "X", 1, "Y") + (1 - interventional_prob(m, "X", 1, "Y")) ==
            Catch::Approx(1.0));
}

TEST_CASE("no causal path means no effect") {
    MDag g;
    g.add_node("X", NodeKind::Substantive);
    g.add_node("Y", NodeKind::Substantive);
    StructuralModel m;
    m.g = g;
    m.cpt = {{0.4}, {0.65}};
    REQUIRE(true_potential_outcome(m, {"Y", "X", 1}) == Catch::Approx(0.65));
    REQUIRE(true_potential_outcome(m, {"Y", "X", 0}) == Catch::Approx(0.65));
}

TEST_CASE("intervention argument checks") {
    StructuralModel m = confounded();
    REQUIRE_THROWS_AS(true_potential_outcome(m, {"X", "X", 1}), std::invalid_argument);
    REQUIRE_THROWS_AS(true_potential_outcome(m, {"Y", "X", 2}), std::invalid_argument);

    // exposure value with zero probability on a reachable parent configuration
    StructuralModel z = confounded();
    z.cpt[1] = {0.0, 0.7};
    REQUIRE_THROWS_AS(true_potential_outcome(z, {"Y", "X", 1}), std::domain_error);
    // but the other arm is fine
    REQUIRE_NOTHROW(true_potential_outcome(z, {"Y", "X", 0}));
}

TEST_CASE("random models are valid and bounded") {
    Rng rng(5);
    MDag g = build_canonical(Letter::C, false, true);
    StructuralModel m = random_model(g, rng, 0.05, 0.95);
    m.validate();
    for (const auto& row : m.cpt)
        for (double p : row) {
            REQUIRE(p >= 0.05);
            REQUIRE(p <= 0.95);
        }
}

TEST_CASE("json round trip preserves the model exactly") {
    Rng rng(11);
    StructuralModel m = random_model(build_canonical(Letter::F, true, true), rng);
    nlohmann::json j = to_json(m);
    StructuralModel back = model_from_json(j);
    REQUIRE(back.g.n() == m.g.n());
    for (int v = 0; v < m.g.n(); ++v) {
        REQUIRE(back.g.name(v) == m.g.name(v));
        REQUIRE(back.g.kind(v) == m.g.kind(v));
        REQUIRE(back.g.parents(v) == m.g.parents(v));
        REQUIRE(back.cpt[static_cast<std::size_t>(v)] == m.cpt[static_cast<std::size_t>(v)]);
    }
    REQUIRE(back.g.proxy() == m.g.proxy());

    std::string path = "roundtrip_model.json";
    save_model(m, path);
    StructuralModel loaded = load_model(path);
    REQUIRE(loaded.cpt == m.cpt);
    std::remove(path.c_str());
}

TEST_CASE("validation catches malformed models") {
    StructuralModel m = confounded();
    m.cpt[2] = {0.1, 0.5};  // wrong row count
    REQUIRE_THROWS_AS(m.validate(), std::domain_error);
    StructuralModel w = confounded();
    w.cpt[0] = {1.5};
    REQUIRE_THROWS_AS(w.validate(), std::domain_error);
}
