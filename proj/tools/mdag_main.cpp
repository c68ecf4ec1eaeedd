// command line front end: check graphs, evaluate identification formulas
// against the exact oracle, run simulation grids, estimate from CSV data,
// calibrate generator coefficients, and explain imputation plans

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mdag/catalog.hpp"
#include "mdag/harness.hpp"
#include "mdag/identify.hpp"
#include "mdag/structural.hpp"

namespace {

using namespace mdag;

constexpr double identify_tolerance = 1e-8;

std::string slurp_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string canonical_method(const std::string& raw) {
    for (const auto& name : method_names())
        if (lower(name) == lower(raw)) return name;
    if (lower(raw) == "g-comp" || lower(raw) == "gcomp") return "g-comp";
    throw std::invalid_argument("unknown method " + raw +
                                " (expected CCA, MI-Sim, MI-EO, MI-EI, MI-EC, MI-Com, MI-SMC)");
}

const char* status_name(RecoverStatus s) {
    switch (s) {
        case RecoverStatus::PassesNecessaryConditions: return "PassesNecessaryConditions";
        case RecoverStatus::FailsNeighborCondition: return "FailsNeighborCondition";
        case RecoverStatus::FailsColliderPathCondition: return "FailsColliderPathCondition";
    }
    return "?";
}

const char* witness_kind(RecoverStatus s) {
    return s == RecoverStatus::FailsNeighborCondition ? "neighbor" : "collider path";
}

// ---------------------------------------------------------------------------
// check: catalog classification for canonical letters, necessary conditions
// for user graphs

int run_check(const std::string& canonical, const std::string& dsl_path, bool as_json) {
    if (canonical.empty() == dsl_path.empty())
        throw std::invalid_argument("check needs exactly one of --canonical or --dsl");
    nlohmann::json j;
    std::string line;
    if (!canonical.empty()) {
        Letter l = parse_letter(canonical);
        MDag g = build_canonical(l, true, true);
        CatalogClass cls = classify_canonical(l);
        RecoverabilityVerdict v = check_necessary_conditions(g, RecoverTarget::joint());
        line = to_string(cls);
        if (cls == CatalogClass::NonRecoverable && v.witness)
            line += std::string(" (") + witness_kind(v.status) + ": " + *v.witness + ")";
        j["letter"] = std::string(1, letter_char(l));
        j["classification"] = to_string(cls);
        j["joint_conditions"] = status_name(v.status);
        if (v.witness) j["witness"] = *v.witness;
    } else {
        MDag g;
        try {
            g = parse_mdag(slurp_file(dsl_path));
            g.validate();
        } catch (const std::exception& e) {
            // a bad user file is a usage error, whatever the library threw
            throw std::invalid_argument(std::string("dsl: ") + e.what());
        }
        RecoverabilityVerdict v = check_necessary_conditions(g, RecoverTarget::joint());
        line = status_name(v.status);
        if (v.witness) line += std::string(" (") + witness_kind(v.status) + ": " + *v.witness + ")";
        j["status"] = status_name(v.status);
        if (v.witness) j["witness"] = *v.witness;
    }
    if (as_json)
        std::cout << j.dump(2) << "\n";
    else
        std::cout << line << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// identify: closed-form value vs exact interventional oracle

void check_compatible(const MDag& model_graph, const std::string& letter_token) {
    MDag pattern = letter_token == "dpp"
                       ? build_dpp(model_graph.has_node("U"))
                       : build_canonical(parse_letter(letter_token),
                                         model_graph.has_node("W"), model_graph.has_node("U"));
    for (int v = 0; v < model_graph.n(); ++v) {
        if (!pattern.has_node(model_graph.name(v)))
            throw std::invalid_argument("model is incompatible with " + letter_token +
                                        ": unexpected node " + model_graph.name(v));
        for (int c : model_graph.children(v))
            if (!pattern.has_edge(pattern.id(model_graph.name(v)),
                                  pattern.id(model_graph.name(c))))
                throw std::invalid_argument("model is incompatible with " + letter_token +
                                            ": edge " + model_graph.name(v) + " -> " +
                                            model_graph.name(c) +
                                            " is outside the pattern");
    }
}

int run_identify(const std::string& model_path, const std::string& letter,
                 std::string formula, bool as_json) {
    StructuralModel m = load_model(model_path);
    check_compatible(m.g, letter);
    if (formula.empty()) formula = letter;
    LawRoles roles;
    if (formula == "dpp") {
        roles.z3 = {"Z3"};
        roles.m_z3 = {"M_Z3"};
    }
    ObservableLaw law = ObservableLaw::from_model(m);
    double value;
    if (formula == "A")
        value = recoverable_ace_a(law, roles);
    else if (formula == "B")
        value = recoverable_ace_b(law, roles);
    else if (formula == "C")
        value = recoverable_ace_c(law, roles);
    else if (formula == "dpp")
        value = recoverable_ace_dpp(law, roles);
    else
        throw std::invalid_argument("no identification formula for " + formula +
                                    " (have A, B, C, dpp)");
    double oracle = true_ace(m);
    double gap = std::abs(value - oracle);
    bool ok = gap <= identify_tolerance;
    if (as_json) {
        nlohmann::json j;
        j["formula"] = formula;
        j["value"] = value;
        j["oracle"] = oracle;
        j["gap"] = gap;
        j["match"] = ok;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "formula: " << formula << "\n"
                  << "value:   " << value << "\n"
                  << "oracle:  " << oracle << "\n"
                  << "gap:     " << gap << (ok ? "  (match)" : "  (MISMATCH)") << "\n";
    }
    return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// estimate: one method on one CSV

int run_estimate(const std::string& data_path, const std::string& method_raw,
                 const std::string& model_text, const std::string& family,
                 const std::string& exposure, int boot, int m, int iter,
                 std::uint64_t seed, bool as_json) {
    Dataset d = read_csv_file(data_path);
    Family fam;
    if (family == "linear")
        fam = Family::LinearGaussian;
    else if (family == "logistic")
        fam = Family::BinomialLogit;
    else
        throw std::invalid_argument("unknown family " + family + " (linear or logistic)");
    ModelSpec spec = parse_model_spec(model_text, fam);
    std::string method = canonical_method(method_raw);
    EstimateOptions opt;
    opt.m = m;
    opt.cycles = iter;
    opt.bootstrap = boot;
    opt.exposure = exposure;
    Rng rng(seed);
    AceEstimate est = method == "g-comp"
                          ? cca_ace(d, spec, exposure, boot, rng)
                          : estimate_ace(d, method, spec, opt, rng);
    if (method == "g-comp") est.method = "g-comp";
    if (as_json) {
        nlohmann::json j;
        j["method"] = est.method;
        j["point"] = est.point;
        j["se"] = est.se;
        j["lo"] = est.lo;
        j["hi"] = est.hi;
        j["boot_failures"] = est.boot_failures;
        j["boot_samples"] = est.boot_samples;
        j["mi_warnings"] = est.mi_warnings;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "method: " << est.method << "\n"
                  << "point:  " << est.point << "\n"
                  << "se:     " << est.se << "\n"
                  << "ci:     [" << est.lo << ", " << est.hi << "]\n";
        if (est.mi_warnings > 0)
            std::cout << "imputation warnings: " << est.mi_warnings << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// simulate: run a grid config end to end

int run_simulate(const std::string& grid_path, const std::string& out_dir,
                 std::uint64_t seed, bool seed_given, int jobs, bool as_json) {
    GridConfig grid = grid_from_file(grid_path);
    if (seed_given)
        for (auto& cell : grid.cells) cell.seed = seed;
    GridResult res = run_grid(grid, out_dir, jobs);
    int degraded = 0;
    for (const auto& cell : res.cells)
        for (const auto& row : cell.metrics)
            if (row.degraded) ++degraded;
    if (as_json) {
        nlohmann::json j;
        j["cells"] = res.cells.size();
        j["resumed"] = res.resumed;
        j["degraded_rows"] = degraded;
        j["output"] = out_dir;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "cells:    " << res.cells.size() << " (" << res.resumed.size()
                  << " resumed)\n"
                  << "degraded: " << degraded << " method rows\n"
                  << "output:   " << out_dir << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// calibrate: solve for the exposure coefficient hitting the target effect

int run_calibrate(const std::string& scenario, double prevalence, double target,
                  std::size_t mc_n, std::uint64_t seed, bool as_json) {
    DgpSpec spec;
    spec.scenario = parse_outcome_scenario(scenario);
    spec.prevalence = prevalence;
    Beta6Options opt;
    opt.target = target;
    opt.mc_n = mc_n;
    opt.seed = seed;
    Beta6Calibration cal = calibrate_beta6(spec, opt);
    if (as_json) {
        nlohmann::json j;
        j["scenario"] = scenario;
        j["prevalence"] = prevalence;
        j["beta6"] = cal.beta6;
        j["achieved_ace"] = cal.achieved_ace;
        j["evaluations"] = cal.evaluations;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "beta6:        " << cal.beta6 << "\n"
                  << "achieved_ace: " << cal.achieved_ace << "\n"
                  << "evaluations:  " << cal.evaluations << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// plan: show the imputation models a method would use

int run_plan(const std::string& method_raw, const std::string& scenario, int m, int iter,
             bool explain, bool as_json) {
    std::string method = canonical_method(method_raw);
    if (method == "CCA" || method == "g-comp")
        throw std::invalid_argument(method + " performs no imputation, so it has no plan");
    ImputationPlan plan =
        build_plan(method, outcome_model_spec(parse_outcome_scenario(scenario)), m, iter);
    std::string text = describe(plan);
    if (as_json) {
        nlohmann::json j;
        j["variant"] = plan.variant;
        j["m"] = plan.m;
        j["cycles"] = plan.cycles;
        if (plan.smc) {
            j["substantive"] = plan.substantive.formula();
            nlohmann::json models = nlohmann::json::array();
            for (const auto& cm : plan.covariate_models) models.push_back(cm.formula());
            j["covariate_models"] = models;
        } else {
            nlohmann::json models = nlohmann::json::array();
            for (const auto& mm : plan.models) models.push_back(mm.formula());
            j["models"] = models;
        }
        std::cout << j.dump(2) << "\n";
    } else if (explain) {
        std::cout << text;
    } else {
        std::cout << text.substr(0, text.find('\n')) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"recoverability checks, identification formulas, and the missing-data "
                 "simulation study",
                 "mdag"};
    app.require_subcommand(1);

    std::function<int()> action;
    bool as_json = false;
    std::uint64_t seed = 1;

    auto* check = app.add_subcommand("check", "classify an m-DAG's recoverability");
    std::string canonical, dsl_path;
    check->add_option("--canonical", canonical, "canonical letter A-J");
    check->add_option("--dsl", dsl_path, "graph DSL file")->check(CLI::ExistingFile);
    check->add_flag("--json", as_json, "machine-readable output");
    check->add_option("--seed", seed, "unused; accepted for interface uniformity");
    check->callback([&]() { action = [&]() { return run_check(canonical, dsl_path, as_json); }; });

    auto* identify = app.add_subcommand(
        "identify", "evaluate a closed-form formula against the exact oracle");
    std::string model_path, letter, formula;
    identify->add_option("--model", model_path, "structural model JSON")
        ->required()
        ->check(CLI::ExistingFile);
    identify->add_option("--letter", letter, "canonical letter or dpp")->required();
    identify->add_option("--formula", formula, "formula row to apply (defaults to the letter)");
    identify->add_flag("--json", as_json, "machine-readable output");
    identify->add_option("--seed", seed, "unused; accepted for interface uniformity");
    identify->callback(
        [&]() { action = [&]() { return run_identify(model_path, letter, formula, as_json); }; });

    auto* estimate = app.add_subcommand("estimate", "estimate the ACE from a CSV file");
    std::string data_path, method, model_text, family = "linear", exposure = "X";
    int boot = 240, m = 5, iter = 5;
    estimate->add_option("--data", data_path, "CSV with NA for missing cells")
        ->required()
        ->check(CLI::ExistingFile);
    estimate->add_option("--method", method, "CCA, MI-Sim, MI-EO, MI-EI, MI-EC, MI-Com, MI-SMC")
        ->required();
    estimate->add_option("--outcome-model", model_text, "analysis model, e.g. \"Y ~ X + C1\"")
        ->required();
    estimate->add_option("--family", family, "outcome family: linear or logistic");
    estimate->add_option("--exposure", exposure, "exposure column");
    estimate->add_option("--boot", boot, "bootstrap resamples per SE");
    estimate->add_option("--m", m, "number of imputations");
    estimate->add_option("--iter", iter, "chained-equation cycles");
    estimate->add_option("--seed", seed, "master seed");
    estimate->add_flag("--json", as_json, "machine-readable output");
    estimate->callback([&]() {
        action = [&]() {
            return run_estimate(data_path, method, model_text, family, exposure, boot, m,
                                iter, seed, as_json);
        };
    });

    auto* simulate = app.add_subcommand("simulate", "run a simulation grid from a config");
    std::string grid_path, out_dir = "simout";
    int jobs = 1;
    simulate->add_option("--grid", grid_path, "grid config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("--out", out_dir, "output directory");
    auto* seed_opt = simulate->add_option("--seed", seed, "override every cell's seed");
    simulate->add_option("--jobs", jobs, "parallel cell workers");
    simulate->add_flag("--json", as_json, "machine-readable output");
    simulate->callback([&]() {
        action = [&]() {
            return run_simulate(grid_path, out_dir, seed, seed_opt->count() > 0, jobs, as_json);
        };
    });

    auto* calibrate =
        app.add_subcommand("calibrate", "solve the exposure coefficient for the target effect");
    std::string scenario = "I";
    double prevalence = 0.5, target = 0.3;
    std::size_t mc_n = 1000000;
    std::uint64_t cal_seed = 0xca11b6;
    calibrate->add_option("--scenario", scenario, "outcome scenario I-VI")->required();
    calibrate->add_option("--prevalence", prevalence, "exposure prevalence 0.1 or 0.5");
    calibrate->add_option("--target", target, "target causal effect");
    calibrate->add_option("--mc-n", mc_n, "Monte Carlo rows per evaluation");
    calibrate->add_option("--seed", cal_seed, "calibration seed");
    calibrate->add_flag("--json", as_json, "machine-readable output");
    calibrate->callback([&]() {
        action = [&]() {
            return run_calibrate(scenario, prevalence, target, mc_n, cal_seed, as_json);
        };
    });

    auto* plan = app.add_subcommand("plan", "show the imputation models a method would fit");
    std::string plan_method, plan_scenario = "I";
    bool explain = false;
    plan->add_option("--method", plan_method, "MI variant")->required();
    plan->add_option("--outcome", plan_scenario, "outcome scenario I-VI");
    plan->add_option("--m", m, "number of imputations");
    plan->add_option("--iter", iter, "chained-equation cycles");
    plan->add_flag("--explain", explain, "print every model, not just the summary line");
    plan->add_option("--seed", seed, "unused; accepted for interface uniformity");
    plan->add_flag("--json", as_json, "machine-readable output");
    plan->callback([&]() {
        action = [&]() {
            return run_plan(plan_method, plan_scenario, m, iter, explain, as_json);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        return action();
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
