// End-to-end acceptance checks for the shipped defaults, one line per
// criterion. Exit status is the number of failed criteria.
//
// Environment switches:
//   MDAG_ACCEPT_FULL=1  bootstrap B=240 and enforce the SE/coverage checks
//                       (default is B=50 with those checks skipped)
//   MDAG_ACCEPT_XL=1    also run the nsim=2000 full-scale cell (slow)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mdag/harness.hpp"
#include "mdag/identify.hpp"

using namespace mdag;

namespace {

// pinned tolerances
constexpr double kIdGapMax = 1e-10;       // formula vs interventional oracle
constexpr double kLawGapMax = 1e-9;       // witness pair observable-law gap
constexpr double kAceGapMin = 0.05;       // witness pair causal-effect gap
constexpr double kAceTol = 0.005;         // large-sample ACE vs 0.3
constexpr double kBeta6Tol = 1e-12;       // shipped main-effect coefficient
constexpr double kRateTol = 0.005;        // per-variable missingness rate
constexpr double kCcLo = 0.50, kCcHi = 0.60;
constexpr double kRbLow = 10.0;           // "approximately unbiased" band, percent
constexpr double kRbCcaBiased = 40.0;     // complete-case bias floor in the C cell
constexpr double kRbMiCap = 20.0;         // MI cap in the C cell
constexpr double kRbAllBiased = 25.0;     // bias floor in the G and J cells
constexpr double kRbSimFloor = 15.0;      // misspecified-imputation floor, E cell
constexpr double kRbSmcCap = 10.0;        // compatible-imputation cap, E cell
constexpr double kCovPoints = 3.0;        // coverage band floor, percentage points
constexpr double kIrlsTol = 1e-6;
constexpr double kPoolTol = 1e-12;
constexpr double kTvTol = 0.02;
constexpr double kMcseLo = 0.002, kMcseHi = 0.004;
constexpr std::uint64_t kSeed = 20260815;
constexpr int kNsim = 200;

bool env_on(const char* name) {
    const char* v = std::getenv(name);
    return v != nullptr && std::string(v) != "0" && std::string(v) != "";
}

struct Outcome {
    bool pass = true;
    bool skipped = false;
    std::string detail;
};

void report(int id, const Outcome& o, double seconds) {
    const char* tag = o.skipped ? "SKIP" : (o.pass ? "PASS" : "FAIL");
    std::printf("criterion %2d: %s  %s (%.1fs)\n", id, tag, o.detail.c_str(), seconds);
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. closed-form identification equals the brute-force interventional oracle

Outcome identification_oracle() {
    LawRoles dpp;
    dpp.z3 = {"Z3"};
    dpp.m_z3 = {"M_Z3"};
    struct Case {
        const char* tag;
        MDag g;
        std::function<double(const ObservableLaw&)> formula;
    };
    std::vector<Case> cases;
    cases.push_back({"A", build_canonical(Letter::A, false, true),
                     [](const ObservableLaw& l) { return recoverable_ace_a(l); }});
    cases.push_back({"B", build_canonical(Letter::B, false, true),
                     [](const ObservableLaw& l) { return recoverable_ace_b(l); }});
    cases.push_back({"C", build_canonical(Letter::C, false, true),
                     [](const ObservableLaw& l) { return recoverable_ace_c(l); }});
    cases.push_back({"expanded-D", build_dpp(true),
                     [dpp](const ObservableLaw& l) { return recoverable_ace_dpp(l, dpp); }});
    double worst = 0.0;
    for (std::size_t k = 0; k < cases.size(); ++k) {
        Rng rng(derive_seed(kSeed, k, "accept/identify"));
        for (int rep = 0; rep < 100; ++rep) {
            StructuralModel m = random_model(cases[k].g, rng, 0.05, 0.95);
            ObservableLaw law = ObservableLaw::from_model(m);
            double gap = std::abs(cases[k].formula(law) - true_ace(m));
            worst = std::max(worst, gap);
        }
    }
    Outcome o;
    o.pass = worst <= kIdGapMax;
    o.detail = "4 patterns x 100 random laws, max |formula - oracle| = " + fmt("%.2e", worst);
    return o;
}

// ---------------------------------------------------------------------------
// 2. catalog verdicts and the graphical necessary conditions

Outcome verdict_table() {
    Outcome o;
    std::string bad;
    for (Letter l : all_letters()) {
        char lc = letter_char(l);
        CatalogClass expect =
            lc <= 'C' ? CatalogClass::Recoverable
                      : (lc == 'G' || lc == 'H' ? CatalogClass::ConjecturedNonRecoverable
                                                : CatalogClass::NonRecoverable);
        if (classify_canonical(l) != expect) bad += std::string(1, lc) + ":class ";
        RecoverabilityVerdict v =
            check_necessary_conditions(build_canonical(l, true, true), RecoverTarget::joint());
        bool should_fail = lc >= 'D';
        if (should_fail) {
            if (v.status != RecoverStatus::FailsNeighborCondition || !v.witness.has_value())
                bad += std::string(1, lc) + ":cond ";
        } else if (v.status != RecoverStatus::PassesNecessaryConditions) {
            bad += std::string(1, lc) + ":cond ";
        }
    }
    o.pass = bad.empty();
    o.detail = o.pass ? "all ten letters classified, neighbor condition fires exactly on D-J"
                      : "mismatches: " + bad;
    return o;
}

// ---------------------------------------------------------------------------
// 3. the shipped non-identifiability witness pair

Outcome witness_pair() {
    auto [m1, m2] = dprime_witness_pair();
    WitnessReport rep = verify_witness_pair(m1, m2, InterventionQuery{}, kLawGapMax);
    Outcome o;
    double ace_gap = std::abs(rep.ace1 - rep.ace2);
    o.pass = rep.is_witness && rep.max_law_gap <= kLawGapMax && ace_gap >= kAceGapMin;
    o.detail = "law gap " + fmt("%.2e", rep.max_law_gap) + ", effect gap " + fmt("%.4f", ace_gap);
    return o;
}

// ---------------------------------------------------------------------------
// 4. large-sample effect calibration across all outcome x prevalence settings

Outcome ace_calibration() {
    Outcome o;
    double worst = 0.0;
    std::string worst_at;
    std::uint64_t k = 0;
    for (OutcomeScenario s : all_outcome_scenarios()) {
        for (double prev : {0.10, 0.50}) {
            DgpSpec spec;
            spec.scenario = s;
            spec.prevalence = prev;
            spec.n = 1000000;
            Rng rng(derive_seed(kSeed, k++, "accept/ace"));
            Dataset d = generate_complete(spec, rng);
            double ace = g_compute_ace(d, outcome_model_spec(s), "X");
            double gap = std::abs(ace - 0.3);
            if (gap > worst) {
                worst = gap;
                worst_at = to_string(s) + std::string("/") +
                           (prev == 0.10 ? "10%" : "50%");
            }
        }
    }
    DgpSpec base;
    base.scenario = OutcomeScenario::I;
    double b6 = calibrate_beta6(base).beta6;
    bool b6_ok = std::abs(b6 - 0.3) <= kBeta6Tol;
    o.pass = worst <= kAceTol && b6_ok;
    o.detail = "12 settings at n=1e6, worst |ACE - 0.3| = " + fmt("%.4f", worst) + " (" +
               worst_at + "), main-effect coefficient gap " + fmt("%.1e", std::abs(b6 - 0.3));
    return o;
}

// ---------------------------------------------------------------------------
// 5. missingness calibration table: rates pinned, joint complete-case in band

Outcome missingness_targets() {
    Outcome o;
    double rate_worst = 0.0, cc_min = 1.0, cc_max = 0.0;
    std::string bad;
    DgpSpec dgp;
    dgp.scenario = OutcomeScenario::I;
    dgp.prevalence = 0.5;
    dgp.n = 700;
    for (Letter l : all_letters()) {
        for (MissScenario ms : all_miss_scenarios()) {
            MissSpec spec = build_miss_spec(l, ms);
            MissCalibration cal = calibrate_miss_intercepts(spec, dgp, 100000);
            for (const auto& [var, target] : spec.targets)
                rate_worst = std::max(rate_worst, std::abs(cal.achieved.at(var) - target));
            cc_min = std::min(cc_min, cal.complete_case);
            cc_max = std::max(cc_max, cal.complete_case);
            if (cal.complete_case < kCcLo || cal.complete_case > kCcHi)
                bad += std::string(1, letter_char(l)) + "-" + to_string(ms) + " ";
        }
    }
    o.pass = rate_worst <= kRateTol && bad.empty();
    o.detail = "50 pairs: worst rate gap " + fmt("%.4f", rate_worst) + ", complete-case range [" +
               fmt("%.3f", cc_min) + ", " + fmt("%.3f", cc_max) + "]" +
               (bad.empty() ? "" : ", out of band: " + bad);
    return o;
}

// ---------------------------------------------------------------------------
// 6..10: the simulation study cells

const std::vector<std::string>& seven_methods() {
    static const std::vector<std::string> v{"CCA",   "MI-Sim", "MI-EO", "MI-EI",
                                            "MI-EC", "MI-Com", "MI-SMC"};
    return v;
}

CellResult study_cell(Letter l, OutcomeScenario out, const std::vector<std::string>& methods,
                      int nsim, int bootstrap) {
    ScenarioConfig cfg;
    cfg.letter = l;
    cfg.outcome = out;
    cfg.miss = MissScenario::i;
    cfg.prevalence = 0.5;
    cfg.nsim = nsim;
    cfg.methods = methods;
    cfg.seed = kSeed;
    cfg.bootstrap = bootstrap;
    return run_cell(cfg);
}

const MetricsRow& row_of(const CellResult& cell, const std::string& method) {
    for (const auto& r : cell.metrics)
        if (r.method == method) return r;
    throw std::logic_error("no metrics row for " + method);
}

std::string rb_summary(const CellResult& cell) {
    double worst = 0.0;
    for (const auto& r : cell.metrics) worst = std::max(worst, std::abs(r.relbias_pct));
    return fmt("%.1f%%", worst);
}

Outcome recoverable_bias_pattern(const CellResult& a, const CellResult& c, const CellResult& d) {
    Outcome o;
    std::string bad;
    for (const auto& r : a.metrics)
        if (!(std::abs(r.relbias_pct) < kRbLow)) bad += "A/" + r.method + " ";
    double cca_c = std::abs(row_of(c, "CCA").relbias_pct);
    if (!(cca_c > kRbCcaBiased)) bad += "C/CCA ";
    for (const auto& r : c.metrics)
        if (r.method != "CCA" && !(std::abs(r.relbias_pct) < kRbMiCap)) bad += "C/" + r.method + " ";
    for (const auto& r : d.metrics)
        if (!(std::abs(r.relbias_pct) < kRbLow)) bad += "D/" + r.method + " ";
    o.pass = bad.empty();
    o.detail = "A max|RB| " + rb_summary(a) + ", C complete-case " + fmt("%.1f%%", cca_c) +
               " vs imputation max " +
               fmt("%.1f%%", [&] {
                   double w = 0.0;
                   for (const auto& r : c.metrics)
                       if (r.method != "CCA") w = std::max(w, std::abs(r.relbias_pct));
                   return w;
               }()) +
               ", D max|RB| " + rb_summary(d) + (bad.empty() ? "" : "; violations: " + bad);
    return o;
}

Outcome nonrecoverable_bias_pattern(const CellResult& g, const CellResult& j) {
    Outcome o;
    std::string bad;
    double g_min = 1e9, j_min = 1e9;
    for (const auto& r : g.metrics) g_min = std::min(g_min, std::abs(r.relbias_pct));
    for (const auto& r : j.metrics) j_min = std::min(j_min, std::abs(r.relbias_pct));
    if (!(g_min > kRbAllBiased)) bad += "G ";
    if (!(j_min > kRbAllBiased)) bad += "J ";
    o.pass = bad.empty();
    o.detail = "min|RB| G " + fmt("%.1f%%", g_min) + ", J " + fmt("%.1f%%", j_min) +
               (bad.empty() ? "" : "; below floor: " + bad);
    return o;
}

Outcome interaction_stress(const CellResult& e) {
    Outcome o;
    double sim = std::abs(row_of(e, "MI-Sim").relbias_pct);
    double smc = std::abs(row_of(e, "MI-SMC").relbias_pct);
    o.pass = smc < kRbSmcCap && sim > kRbSimFloor;
    o.detail = "compatible imputation " + fmt("%.1f%%", smc) + " vs simple " + fmt("%.1f%%", sim);
    return o;
}

Outcome coverage_sanity(const std::vector<const CellResult*>& cells, bool full_mode) {
    Outcome o;
    if (!full_mode) {
        o.skipped = true;
        o.detail = "needs the full bootstrap (set MDAG_ACCEPT_FULL=1)";
        return o;
    }
    std::string bad;
    double worst = 0.0;
    for (const CellResult* cell : cells) {
        for (const auto& r : cell->metrics) {
            if (!(std::abs(r.relbias_pct) < kRbLow)) continue;
            double band = std::max(kCovPoints, 3.0 * r.mcse_coverage);
            double gap = std::abs(r.coverage_pct - 95.0);
            worst = std::max(worst, gap - band);
            if (gap > band)
                bad += std::string(1, letter_char(cell->cfg.letter)) + "/" + r.method + "=" +
                       fmt("%.1f", r.coverage_pct) + " ";
        }
    }
    o.pass = bad.empty();
    o.detail = bad.empty() ? "all low-bias methods inside 95% +- max(3*MCSE, 3pts)"
                           : "outside band: " + bad;
    return o;
}

Outcome mcse_formula(const std::vector<const CellResult*>& cells, bool xl_mode, int bootstrap) {
    Outcome o;
    std::string bad;
    for (const CellResult* cell : cells) {
        for (const auto& r : cell->metrics) {
            if (r.nsim_eff != kNsim) continue;  // identity is defined at full success count
            double expect = r.emp_se / std::sqrt(static_cast<double>(kNsim));
            if (std::abs(r.mcse_bias - expect) > 1e-15 * std::max(1.0, std::abs(expect)))
                bad += std::string(1, letter_char(cell->cfg.letter)) + "/" + r.method + " ";
        }
    }
    std::string xl_note;
    if (xl_mode) {
        CellResult big = study_cell(Letter::A, OutcomeScenario::I, seven_methods(), 2000,
                                    bootstrap);
        double m = row_of(big, "CCA").mcse_bias;
        for (const auto& r : big.metrics) {
            if (r.mcse_bias < kMcseLo || r.mcse_bias > kMcseHi)
                bad += std::string("xl/") + r.method + "=" + fmt("%.4f", r.mcse_bias) + " ";
        }
        xl_note = ", full-scale cell MCSE(bias) ~ " + fmt("%.4f", m);
    } else {
        xl_note = ", full-scale cell skipped (set MDAG_ACCEPT_XL=1)";
    }
    o.pass = bad.empty();
    o.detail = (bad.empty() ? "reported MCSE(bias) = empSE/sqrt(200) exactly"
                            : "mismatches: " + bad) +
               xl_note;
    return o;
}

// ---------------------------------------------------------------------------
// 11. statistical kernels vs independent references

double logistic_nll(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& beta) {
    Eigen::VectorXd lp = X * beta;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < lp.size(); ++i) {
        double v = lp(i);
        nll += std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))) - y(i) * v;
    }
    return nll;
}

Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                            Eigen::VectorXd start, double scale) {
    const int p = static_cast<int>(start.size());
    std::vector<Eigen::VectorXd> pts(p + 1, start);
    for (int k = 0; k < p; ++k) pts[static_cast<std::size_t>(k) + 1](k) += scale;
    std::vector<double> fv(static_cast<std::size_t>(p) + 1);
    for (int k = 0; k <= p; ++k) fv[static_cast<std::size_t>(k)] = f(pts[static_cast<std::size_t>(k)]);
    for (int iter = 0; iter < 40000; ++iter) {
        std::vector<int> ord(static_cast<std::size_t>(p) + 1);
        std::iota(ord.begin(), ord.end(), 0);
        std::sort(ord.begin(), ord.end(),
                  [&](int a, int b) { return fv[static_cast<std::size_t>(a)] < fv[static_cast<std::size_t>(b)]; });
        const Eigen::VectorXd& best = pts[static_cast<std::size_t>(ord[0])];
        int wi = ord[static_cast<std::size_t>(p)];
        if (fv[static_cast<std::size_t>(wi)] - fv[static_cast<std::size_t>(ord[0])] < 1e-14) break;
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(p);
        for (int k = 0; k < p; ++k) centroid += pts[static_cast<std::size_t>(ord[k])];
        centroid /= p;
        Eigen::VectorXd worst = pts[static_cast<std::size_t>(wi)];
        Eigen::VectorXd refl = centroid + (centroid - worst);
        double fr = f(refl);
        if (fr < fv[static_cast<std::size_t>(ord[0])]) {
            Eigen::VectorXd exp2 = centroid + 2.0 * (centroid - worst);
            double fe = f(exp2);
            if (fe < fr) { pts[static_cast<std::size_t>(wi)] = exp2; fv[static_cast<std::size_t>(wi)] = fe; }
            else { pts[static_cast<std::size_t>(wi)] = refl; fv[static_cast<std::size_t>(wi)] = fr; }
        } else if (fr < fv[static_cast<std::size_t>(wi)]) {
            pts[static_cast<std::size_t>(wi)] = refl;
            fv[static_cast<std::size_t>(wi)] = fr;
        } else {
            Eigen::VectorXd con = centroid + 0.5 * (worst - centroid);
            double fc = f(con);
            if (fc < fv[static_cast<std::size_t>(wi)]) { pts[static_cast<std::size_t>(wi)] = con; fv[static_cast<std::size_t>(wi)] = fc; }
            else {
                for (int k = 1; k <= p; ++k) {
                    int i = ord[static_cast<std::size_t>(k)];
                    pts[static_cast<std::size_t>(i)] = best + 0.5 * (pts[static_cast<std::size_t>(i)] - best);
                    fv[static_cast<std::size_t>(i)] = f(pts[static_cast<std::size_t>(i)]);
                }
            }
        }
    }
    return pts[static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin())];
}

Outcome kernel_oracles() {
    Outcome o;
    std::string bad;

    // logistic IRLS against a derivative-free optimizer
    double irls_worst = 0.0;
    Rng rng(derive_seed(kSeed, 0, "accept/irls"));
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 400, p = 4;
        Eigen::MatrixXd X(n, p);
        Eigen::VectorXd beta_true(p);
        for (int k = 0; k < p; ++k) beta_true(k) = rng.uniform(-0.8, 0.8);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = rng.normal();
            X(i, 2) = rng.bernoulli(0.4) ? 1.0 : 0.0;
            X(i, 3) = rng.uniform(-1.0, 1.0);
            double lp = X.row(i) * beta_true;
            y(i) = rng.bernoulli(1.0 / (1.0 + std::exp(-lp))) ? 1.0 : 0.0;
        }
        FitResult f = fit_logistic(X, y);
        auto nll = [&](const Eigen::VectorXd& b) { return logistic_nll(X, y, b); };
        Eigen::VectorXd ref = Eigen::VectorXd::Zero(p);
        for (double scale : {0.5, 0.05, 0.005, 0.0005}) ref = nelder_mead(nll, ref, scale);
        irls_worst = std::max(irls_worst, (f.coef - ref).cwiseAbs().maxCoeff());
    }
    if (irls_worst > kIrlsTol) bad += "irls=" + fmt("%.1e", irls_worst) + " ";

    // pooling rules against hand arithmetic
    PooledEstimate pe = pool_rubin({0.2, 0.4}, {0.1, 0.1});
    double pool_worst = std::abs(pe.pooled - 0.3);
    pool_worst = std::max(pool_worst, std::abs(pe.within - 0.01));
    pool_worst = std::max(pool_worst, std::abs(pe.between - 0.02));
    pool_worst = std::max(pool_worst, std::abs(pe.total - 0.04));
    if (pool_worst > kPoolTol) bad += "pooling=" + fmt("%.1e", pool_worst) + " ";

    // rejection imputation against the exact two-point posterior
    {
        std::size_t n = 5000;
        const double pi = 0.4, a = 0.5, b = 1.2, sigma = 0.8;
        Rng gen(derive_seed(kSeed, 1, "accept/smc"));
        Dataset d;
        std::vector<double> z(n), yv(n);
        for (std::size_t i = 0; i < n; ++i) {
            z[i] = gen.bernoulli(pi) ? 1.0 : 0.0;
            yv[i] = a + b * z[i] + sigma * gen.normal();
        }
        d.add_column("Z", std::move(z));
        d.add_column("Y", std::move(yv));
        std::vector<std::size_t> missing_rows;
        for (std::size_t i = 0; i < n; ++i) {
            double p = 1.0 / (1.0 + std::exp(-(-0.9 + 0.5 * (d.at(i, 1) - a - b * pi))));
            if (gen.bernoulli(p)) {
                d.set_missing(i, "Z");
                missing_rows.push_back(i);
            }
        }
        ImputationPlan plan;
        plan.variant = "toy";
        plan.m = 10;
        plan.cycles = 5;
        ModelSpec substantive = parse_model_spec("Y ~ Z", Family::LinearGaussian);
        std::vector<ModelSpec> cov{parse_model_spec("Z ~ 1", Family::BinomialLogit)};
        Rng irng(derive_seed(kSeed, 2, "accept/smc"));
        ImputedSet set = impute_smcfcs(d, substantive, cov, plan, irng);
        auto posterior = [&](double y1) {
            double d1 = std::exp(-(y1 - a - b) * (y1 - a - b) / (2 * sigma * sigma)) * pi;
            double d0 = std::exp(-(y1 - a) * (y1 - a) / (2 * sigma * sigma)) * (1.0 - pi);
            return d1 / (d1 + d0);
        };
        std::vector<std::size_t> order = missing_rows;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t r1, std::size_t r2) { return d.at(r1, 1) < d.at(r2, 1); });
        const int bins = 10;
        double total_gap = 0.0;
        for (int bin = 0; bin < bins; ++bin) {
            std::size_t lo = order.size() * static_cast<std::size_t>(bin) / bins;
            std::size_t hi = order.size() * (static_cast<std::size_t>(bin) + 1) / bins;
            double emp = 0.0, oracle = 0.0;
            std::size_t count = 0;
            for (std::size_t k = lo; k < hi; ++k) {
                std::size_t r = order[k];
                oracle += posterior(d.at(r, 1));
                for (const auto& comp : set.completed) emp += comp.at(r, 0);
                ++count;
            }
            emp /= static_cast<double>(count * set.completed.size());
            oracle /= static_cast<double>(count);
            total_gap += std::abs(emp - oracle);
        }
        if (total_gap / bins > kTvTol) bad += "rejection=" + fmt("%.3f", total_gap / bins) + " ";
    }

    // separation test against exhaustive path enumeration
    {
        Rng grng(derive_seed(kSeed, 3, "accept/dsep"));
        int disagree = 0;
        for (int rep = 0; rep < 100; ++rep) {
            int n = 4 + static_cast<int>(grng.index(5));
            MDag g;
            for (int i = 0; i < n; ++i)
                g.add_node("N" + std::to_string(i), NodeKind::Substantive);
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    if (grng.uniform() < 0.3) g.add_edge(i, j);
            for (int q = 0; q < 20; ++q) {
                int a = static_cast<int>(grng.index(static_cast<std::size_t>(n)));
                int b2 = static_cast<int>(grng.index(static_cast<std::size_t>(n)));
                if (a == b2) continue;
                std::set<int> cond;
                for (int v = 0; v < n; ++v)
                    if (v != a && v != b2 && grng.uniform() < 0.3) cond.insert(v);
                GraphSurgery s;
                if (d_separated(g, s, {a}, {b2}, cond) !=
                    d_separated_by_enumeration(g, s, {a}, {b2}, cond))
                    ++disagree;
            }
        }
        if (disagree != 0) bad += "dsep=" + std::to_string(disagree) + " ";
    }

    o.pass = bad.empty();
    o.detail = bad.empty()
                   ? "fit vs derivative-free optimizer " + fmt("%.1e", irls_worst) +
                         ", pooling exact, rejection posterior in tolerance, separation 0 disagreements"
                   : "failures: " + bad;
    return o;
}

// ---------------------------------------------------------------------------
// 12. byte-identical reruns, serial and parallel

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome reproducibility() {
    Outcome o;
    nlohmann::json j;
    j["seed"] = 4242;
    j["nsim"] = 4;
    j["n"] = 300;
    j["B"] = 12;
    j["m"] = 2;
    j["T"] = 2;
    j["methods"] = {"g-comp", "CCA", "MI-Sim"};
    j["cells"] = nlohmann::json::array();
    j["cells"].push_back({{"letter", "B"}, {"outcome", "I"}, {"miss", "i"}});
    j["cells"].push_back({{"letter", "D"}, {"outcome", "I"}, {"miss", "ii"}});
    GridConfig grid = grid_from_json(j);
    namespace fs = std::filesystem;
    fs::path base = fs::temp_directory_path() / "mdag_accept_repro";
    fs::remove_all(base);
    std::vector<std::string> runs;
    for (int k = 0; k < 3; ++k) {
        fs::path dir = base / ("run" + std::to_string(k));
        run_grid(grid, dir.string(), k == 2 ? 2 : 1);
        runs.push_back(slurp(dir / "metrics.csv") + "\x1e" + slurp(dir / "estimates.csv"));
    }
    o.pass = runs[0] == runs[1] && runs[0] == runs[2] && !runs[0].empty();
    o.detail = o.pass ? "same seed twice identical, parallel identical to serial"
                      : "outputs differ across reruns";
    fs::remove_all(base);
    return o;
}

}  // namespace

int main() {
    const bool full_mode = env_on("MDAG_ACCEPT_FULL");
    const bool xl_mode = env_on("MDAG_ACCEPT_XL");
    const int bootstrap = full_mode ? 240 : 50;
    std::printf("acceptance run: nsim=%d, bootstrap B=%d (%s mode)\n", kNsim, bootstrap,
                full_mode ? "full" : "fast");
    std::fflush(stdout);

    int failures = 0;
    auto timed = [&](int id, const std::function<Outcome()>& f) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report(id, o, secs);
        if (!o.pass && !o.skipped) ++failures;
        return o;
    };

    timed(1, identification_oracle);
    timed(2, verdict_table);
    timed(3, witness_pair);
    timed(4, ace_calibration);
    timed(5, missingness_targets);

    // the study cells are shared by criteria 6-10
    CellResult cell_a, cell_c, cell_d, cell_g, cell_j, cell_e;
    timed(6, [&] {
        cell_a = study_cell(Letter::A, OutcomeScenario::I, seven_methods(), kNsim, bootstrap);
        cell_c = study_cell(Letter::C, OutcomeScenario::I, seven_methods(), kNsim, bootstrap);
        cell_d = study_cell(Letter::D, OutcomeScenario::I, seven_methods(), kNsim, bootstrap);
        return recoverable_bias_pattern(cell_a, cell_c, cell_d);
    });
    timed(7, [&] {
        cell_g = study_cell(Letter::G, OutcomeScenario::I, seven_methods(), kNsim, bootstrap);
        cell_j = study_cell(Letter::J, OutcomeScenario::I, seven_methods(), kNsim, bootstrap);
        return nonrecoverable_bias_pattern(cell_g, cell_j);
    });
    timed(8, [&] {
        cell_e = study_cell(Letter::E, OutcomeScenario::VI, {"MI-Sim", "MI-SMC"}, kNsim,
                            bootstrap);
        return interaction_stress(cell_e);
    });
    std::vector<const CellResult*> six_cells{&cell_a, &cell_c, &cell_d};
    timed(9, [&] { return coverage_sanity(six_cells, full_mode); });
    std::vector<const CellResult*> all_cells{&cell_a, &cell_c, &cell_d,
                                             &cell_g, &cell_j, &cell_e};
    timed(10, [&] { return mcse_formula(all_cells, xl_mode, bootstrap); });
    timed(11, kernel_oracles);
    timed(12, reproducibility);

    std::printf("%s (%d criterion failure%s)\n", failures == 0 ? "ACCEPTED" : "REJECTED",
                failures, failures == 1 ? "" : "s");
    return failures;
}
