#pragma once

// complete-data generation for the simulation study, missingness imposition
// driven by the canonical graph catalog, and the two calibration routines
// (exposure coefficient for the target effect, missingness intercepts for
// the target proportions)

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "mdag/catalog.hpp"
#include "mdag/dataset.hpp"
#include "mdag/estimators.hpp"
#include "mdag/rng.hpp"

namespace mdag {

// ---------------------------------------------------------------------------
// outcome scenarios: ratios of the exposure-confounder interaction
// coefficients to the exposure main effect

enum class OutcomeScenario { I = 1, II, III, IV, V, VI };

inline std::pair<double, double> interaction_ratios(OutcomeScenario s) {
    switch (s) {
        case OutcomeScenario::I: return {0.0, 0.0};
        case OutcomeScenario::II: return {0.5, 0.0};
        case OutcomeScenario::III: return {0.0, -0.5};
        case OutcomeScenario::IV: return {0.5, -0.5};
        case OutcomeScenario::V: return {3.0, 0.0};
        case OutcomeScenario::VI: return {0.0, -3.0};
    }
    throw std::invalid_argument("unknown outcome scenario");
}

inline std::string to_string(OutcomeScenario s) {
    static const char* names[] = {"I", "II", "III", "IV", "V", "VI"};
    return names[static_cast<int>(s) - 1];
}

inline OutcomeScenario parse_outcome_scenario(const std::string& s) {
    static const char* names[] = {"I", "II", "III", "IV", "V", "VI"};
    for (int i = 0; i < 6; ++i)
        if (s == names[i]) return static_cast<OutcomeScenario>(i + 1);
    throw std::invalid_argument("unknown outcome scenario '" + s + "' (expect I..VI)");
}

inline std::vector<OutcomeScenario> all_outcome_scenarios() {
    return {OutcomeScenario::I,  OutcomeScenario::II, OutcomeScenario::III,
            OutcomeScenario::IV, OutcomeScenario::V,  OutcomeScenario::VI};
}

// ---------------------------------------------------------------------------
// coefficients for the sequential data generation; shipped values were tuned
// so the confounder marginals approximate the case-study table (the original
// study's exact values are not public) and are mirrored in
// data/default_params.json

struct LogisticCoefs {
    double intercept = 0.0;
    std::vector<std::pair<std::string, double>> slopes;
};

struct OutcomeCoefs {
    double b0 = -0.4;
    double b1 = 0.15, b2 = 0.20, b3 = 0.35, b4 = 0.40, b5 = 0.25;
    double b14 = 0.10, b24 = 0.10, b34 = 0.15, b45 = 0.20, b35 = 0.10;
    double sigma = 0.95;
};

struct DgpCoefs {
    double c1_prev = 0.25;
    // intercepts calibrated by bisection on two-million-row draws so the
    // marginals hit 0.137, 0.076, 0.50, 0.229 (fresh-draw check within 7e-4)
    LogisticCoefs c2{-2.050865, {{"A", 0.3}, {"C1", 0.6}}};
    LogisticCoefs c3{-2.807395, {{"A", 0.3}, {"C1", 0.4}, {"C2", 0.8}}};
    LogisticCoefs c4{-0.244921, {{"A", 0.3}, {"C1", 0.4}, {"C2", 0.6}, {"C3", 1.0}}};
    LogisticCoefs c5{-1.934086,
                     {{"A", 0.3}, {"C1", 0.3}, {"C2", 0.5}, {"C3", 0.8}, {"C4", 0.8}}};
    // exposure model; the intercept is swapped by prevalence setting
    std::vector<std::pair<std::string, double>> x_slopes{{"A", 0.4},  {"C1", 0.3}, {"C2", 0.8},
                                                         {"C3", 1.2}, {"C4", 0.6}, {"C5", 1.2}};
    double x_intercept_10 = -3.484862;
    double x_intercept_50 = -0.797497;
    OutcomeCoefs y;
    // exposure main effect per outcome scenario, calibrated so the true ACE
    // is 0.3 in every scenario (development-time calibration, frozen here)
    std::map<std::string, double> beta6{{"I", 0.3},      {"II", 0.28902}, {"III", 0.4},
                                        {"IV", 0.38071}, {"V", 0.24430},  {"VI", -0.6}};
};

struct DgpSpec {
    DgpCoefs coefs;
    OutcomeScenario scenario = OutcomeScenario::I;
    double prevalence = 0.5;  // 0.10 or 0.50
    std::size_t n = 700;

    double beta6() const {
        auto it = coefs.beta6.find(to_string(scenario));
        if (it == coefs.beta6.end() || std::isnan(it->second))
            throw std::domain_error("dgp: beta6 not calibrated for scenario " +
                                    to_string(scenario));
        return it->second;
    }
    double beta7() const { return interaction_ratios(scenario).first * beta6(); }
    double beta8() const { return interaction_ratios(scenario).second * beta6(); }
    double x_intercept() const {
        if (prevalence == 0.10) return coefs.x_intercept_10;
        if (prevalence == 0.50) return coefs.x_intercept_50;
        throw std::invalid_argument("dgp: prevalence must be 0.10 or 0.50");
    }
};

// paper sample sizes chosen for comparable power across outcome scenarios
inline std::size_t default_n(OutcomeScenario s, double prevalence) {
    if (prevalence == 0.50) return 700;
    if (prevalence == 0.10) {
        static const std::size_t n10[] = {1400, 2200, 2000, 2700, 2200, 2000};
        return n10[static_cast<int>(s) - 1];
    }
    throw std::invalid_argument("dgp: prevalence must be 0.10 or 0.50");
}

// the analysis model for g-computation equals the generation model, with the
// exposure-confounder interactions present only in scenarios that have them
inline ModelSpec outcome_model_spec(OutcomeScenario s) {
    ModelSpec spec = parse_model_spec(
        "Y ~ C1+C2+C3+C4+C5+X+C1:C4+C2:C4+C3:C4+C4:C5+C3:C5", Family::LinearGaussian);
    auto [r7, r8] = interaction_ratios(s);
    if (r7 != 0.0) spec.add_term({{"X", "C3"}});
    if (r8 != 0.0) spec.add_term({{"X", "C4"}});
    return spec;
}

// ---------------------------------------------------------------------------
// sequential generation: A, C1, then C2..C5 and X each logistic on what came
// before, then Y from the linear outcome model plus Gaussian noise

inline Dataset generate_complete(const DgpSpec& spec, Rng& rng) {
    const std::size_t n = spec.n;
    Dataset d(n);
    std::vector<double> a(n), c1(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = rng.normal();
    for (std::size_t i = 0; i < n; ++i) c1[i] = rng.bernoulli(spec.coefs.c1_prev) ? 1.0 : 0.0;
    d.add_column("A", std::move(a));
    d.add_column("C1", std::move(c1));

    auto gen_logistic = [&](const std::string& name, const LogisticCoefs& m) {
        std::vector<double> v(n);
        std::vector<const std::vector<double>*> cols;
        cols.reserve(m.slopes.size());
        for (const auto& [pname, _] : m.slopes) cols.push_back(&d.col(pname));
        for (std::size_t i = 0; i < n; ++i) {
            double lp = m.intercept;
            for (std::size_t k = 0; k < m.slopes.size(); ++k)
                lp += m.slopes[k].second * (*cols[k])[i];
            v[i] = rng.bernoulli(detail::expit(lp)) ? 1.0 : 0.0;
        }
        d.add_column(name, std::move(v));
    };
    gen_logistic("C2", spec.coefs.c2);
    gen_logistic("C3", spec.coefs.c3);
    gen_logistic("C4", spec.coefs.c4);
    gen_logistic("C5", spec.coefs.c5);
    gen_logistic("X", LogisticCoefs{spec.x_intercept(), spec.coefs.x_slopes});

    const OutcomeCoefs& b = spec.coefs.y;
    double b6 = spec.beta6(), b7 = spec.beta7(), b8 = spec.beta8();
    std::vector<double> y(n);
    const auto &C1 = d.col("C1"), &C2 = d.col("C2"), &C3 = d.col("C3"), &C4 = d.col("C4"),
               &C5 = d.col("C5"), &X = d.col("X");
    for (std::size_t i = 0; i < n; ++i) {
        double lp = b.b0 + b.b1 * C1[i] + b.b2 * C2[i] + b.b3 * C3[i] + b.b4 * C4[i] +
                    b.b5 * C5[i] + b6 * X[i] + b7 * C3[i] * X[i] + b8 * C4[i] * X[i] +
                    b.b14 * C1[i] * C4[i] + b.b24 * C2[i] * C4[i] + b.b34 * C3[i] * C4[i] +
                    b.b45 * C4[i] * C5[i] + b.b35 * C3[i] * C5[i];
        y[i] = lp + b.sigma * rng.normal();
    }
    d.add_column("Y", std::move(y));
    return d;
}

// ---------------------------------------------------------------------------
// calibration of the exposure main effect: with a fixed seed the generated
// data is identical across candidate values, so the Monte Carlo g-computation
// estimate is exactly linear in beta6 and one secant step lands on the root;
// the grid scan guarantees a bracket exists before refining

struct Beta6Calibration {
    double beta6 = std::numeric_limits<double>::quiet_NaN();
    double achieved_ace = std::numeric_limits<double>::quiet_NaN();
    int evaluations = 0;
};

struct Beta6Options {
    double target = 0.3;
    std::size_t mc_n = 1000000;
    double grid_lo = -1.5;
    double grid_hi = 1.5;
    int grid_points = 7;
    double tol = 0.002;
    std::uint64_t seed = 0xca11b6;
};

inline Beta6Calibration calibrate_beta6(DgpSpec spec, const Beta6Options& opt = Beta6Options{}) {
    Beta6Calibration out;
    auto [r7, r8] = interaction_ratios(spec.scenario);
    if (r7 == 0.0 && r8 == 0.0) {
        // no interactions: the ACE equals the exposure coefficient
        out.beta6 = opt.target;
        out.achieved_ace = opt.target;
        return out;
    }
    spec.n = opt.mc_n;
    ModelSpec outcome = outcome_model_spec(spec.scenario);
    std::uint64_t seed = derive_seed(opt.seed, 0,
                                     "calibrate_beta6/" + to_string(spec.scenario) + "/" +
                                         std::to_string(spec.prevalence));
    auto ace_at = [&](double b6) {
        spec.coefs.beta6[to_string(spec.scenario)] = b6;
        Rng rng(seed);
        Dataset d = generate_complete(spec, rng);
        ++out.evaluations;
        return g_compute_ace(d, outcome, "X");
    };
    double prev_b = opt.grid_lo;
    double prev_f = ace_at(prev_b) - opt.target;
    double lo = 0, hi = 0, flo = 0, fhi = 0;
    bool bracketed = false;
    for (int k = 1; k < opt.grid_points; ++k) {
        double b = opt.grid_lo + (opt.grid_hi - opt.grid_lo) * k / (opt.grid_points - 1);
        double f = ace_at(b) - opt.target;
        if (prev_f == 0.0 || prev_f * f < 0.0) {
            lo = prev_b;
            flo = prev_f;
            hi = b;
            fhi = f;
            bracketed = true;
            break;
        }
        prev_b = b;
        prev_f = f;
    }
    if (!bracketed)
        throw std::domain_error("calibrate_beta6: no sign change of (ACE - target) on the grid [" +
                                std::to_string(opt.grid_lo) + ", " + std::to_string(opt.grid_hi) +
                                "]");
    // secant step; exact under common random numbers, with a bisection
    // fallback in case the surface is not numerically linear
    for (int it = 0; it < 60; ++it) {
        double b = lo - flo * (hi - lo) / (fhi - flo);
        double f = ace_at(b) - opt.target;
        if (std::abs(f) <= opt.tol) {
            out.beta6 = b;
            out.achieved_ace = f + opt.target;
            return out;
        }
        if (flo * f < 0.0) {
            hi = b;
            fhi = f;
        } else {
            lo = b;
            flo = f;
        }
    }
    throw std::domain_error("calibrate_beta6: did not reach tolerance");
}

// ---------------------------------------------------------------------------
// exposure intercept calibration: bisection on the mean of expit over a
// fixed large confounder draw, exact in the intercept

inline double calibrate_x_intercept(const DgpSpec& dgp, double prevalence,
                                    std::size_t mc_n = 1000000, std::uint64_t seed = 0xca11b6) {
    DgpSpec big = dgp;
    big.n = mc_n;
    Rng rng(derive_seed(seed, 2, "calibrate_x/" + std::to_string(prevalence)));
    Dataset d = generate_complete(big, rng);
    std::vector<double> s(mc_n, 0.0);
    for (const auto& [name, slope] : dgp.coefs.x_slopes) {
        const auto& col = d.col(name);
        for (std::size_t i = 0; i < mc_n; ++i) s[i] += slope * col[i];
    }
    auto prev_mean = [&](double b) {
        double acc = 0.0;
        for (double si : s) acc += detail::expit(b + si);
        return acc / static_cast<double>(mc_n);
    };
    double lo = -30.0, hi = 30.0;
    for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (lo + hi);
        (prev_mean(mid) < prevalence ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// missingness specification, driven by the catalog's arrow classes with the
// two incomplete confounders standing in for the Z2 block

enum class MissScenario { i = 1, ii, iii, iv, v };

inline std::string to_string(MissScenario s) {
    static const char* names[] = {"i", "ii", "iii", "iv", "v"};
    return names[static_cast<int>(s) - 1];
}

inline MissScenario parse_miss_scenario(const std::string& s) {
    static const char* names[] = {"i", "ii", "iii", "iv", "v"};
    for (int i = 0; i < 5; ++i)
        if (s == names[i]) return static_cast<MissScenario>(i + 1);
    throw std::invalid_argument("unknown missingness scenario '" + s + "' (expect i..v)");
}

inline std::vector<MissScenario> all_miss_scenarios() {
    return {MissScenario::i, MissScenario::ii, MissScenario::iii, MissScenario::iv,
            MissScenario::v};
}

// slope magnitudes by parent type, with per-(indicator, parent) overrides;
// overrides apply only where the letter permits the parent; w left at NaN
// selects the per-letter loadings from default_w_loadings, a finite value
// forces that uniform loading on all four indicators (use parent name "W"
// in the override map for per-indicator control)
struct MissSlopes {
    double z1 = 0.5;
    double z2 = 0.5;
    double x = 1.0;
    double y = 1.45;
    double self = 0.7;    // X, C4, C5 masking their own indicators
    double y_self = 1.8;  // Y masking its own indicator, the outcome-MNAR dial
    double w = std::numeric_limits<double>::quiet_NaN();
    double interaction = 0.30;
    std::map<std::string, std::map<std::string, double>> override;

    double lookup(const std::string& indicator, const std::string& parent,
                  double type_default) const {
        auto it = override.find(indicator);
        if (it != override.end()) {
            auto jt = it->second.find(parent);
            if (jt != it->second.end()) return jt->second;
        }
        return type_default;
    }
};

struct IndicatorModel {
    std::string target;  // the variable this indicator masks
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double w = 0.0;  // loading on the shared auxiliary normal W
    std::vector<std::pair<std::string, double>> slopes;
    std::vector<std::tuple<std::string, std::string, double>> products;
};

struct MissSpec {
    Letter letter = Letter::A;
    MissScenario scenario = MissScenario::i;
    std::vector<IndicatorModel> indicators;  // order C4, C5, X, Y
    std::map<std::string, double> targets{{"C4", 0.15}, {"C5", 0.15}, {"X", 0.20}, {"Y", 0.20}};
};

// W is an independent standard normal common cause of the four indicators
// that never appears in the analysis data, so its loadings shift how strongly
// missingness clusters across variables (and hence the joint complete-case
// rate) without moving the bias of any estimator; sparse arrow patterns rely
// on a stronger common signal to reach the complete-case band while dense
// patterns get opposite signs, whose negative dependence offsets the
// clustering their many shared observed parents already induce
inline std::array<double, 4> default_w_loadings(Letter letter) {
    switch (letter) {
        case Letter::A: return {1.0, 1.0, 1.0, 1.0};
        case Letter::B: return {0.7, 0.7, 0.7, 0.7};
        case Letter::C: return {0.5, 0.5, 0.5, 0.5};
        case Letter::D: return {0.8, 0.8, 0.8, 0.8};
        case Letter::E: return {0.5, 0.5, 0.5, 0.5};
        case Letter::F: return {0.5, -0.5, 0.5, -0.5};
        case Letter::G: return {0.65, 0.65, 0.65, 0.65};
        case Letter::H: return {1.4, -1.4, 1.4, -1.4};
        case Letter::I: return {0.5, 0.5, 0.5, 0.5};
        case Letter::J: return {1.9, -1.9, 1.9, -1.9};
    }
    throw std::logic_error("default_w_loadings: unknown letter");
}

// parents each indicator may depend on under the letter's arrow pattern
inline std::map<std::string, std::vector<std::string>> permitted_parents(Letter letter) {
    ArrowPattern p = canonical_pattern(letter);
    std::map<std::string, std::vector<std::string>> out;
    std::vector<std::string> z1{"C1", "C2", "C3"};
    auto base = [&](std::vector<std::string> extra) {
        std::vector<std::string> v = z1;
        v.insert(v.end(), extra.begin(), extra.end());
        return v;
    };
    {
        std::vector<std::string> e;
        if (p.xz2_to_others) e.push_back("X");
        if (p.xz2_self) {
            e.push_back("C4");
            e.push_back("C5");
        }
        if (p.y_to_others) e.push_back("Y");
        out["C4"] = base(e);
        out["C5"] = base(e);
    }
    {
        std::vector<std::string> e;
        if (p.xz2_self) e.push_back("X");
        if (p.xz2_to_others) {
            e.push_back("C4");
            e.push_back("C5");
        }
        if (p.y_to_others) e.push_back("Y");
        out["X"] = base(e);
    }
    {
        std::vector<std::string> e;
        if (p.xz2_to_others) {
            e.push_back("X");
            e.push_back("C4");
            e.push_back("C5");
        }
        if (p.y_self) e.push_back("Y");
        out["Y"] = base(e);
    }
    return out;
}

inline MissSpec build_miss_spec(Letter letter, MissScenario scenario,
                                const MissSlopes& slopes = MissSlopes{}) {
    MissSpec spec;
    spec.letter = letter;
    spec.scenario = scenario;
    std::array<double, 4> wload = default_w_loadings(letter);
    std::size_t wk = 0;
    auto permitted = permitted_parents(letter);
    // the scenario's exposure interaction partner
    std::string partner;
    switch (scenario) {
        case MissScenario::i: break;
        case MissScenario::ii: partner = "C3"; break;
        case MissScenario::iii: partner = "C4"; break;
        case MissScenario::iv: partner = "C5"; break;
        case MissScenario::v: partner = "Y"; break;
    }
    for (const std::string& var : {"C4", "C5", "X", "Y"}) {
        IndicatorModel m;
        m.target = var;
        std::string ind = var + ".M";
        m.w = slopes.lookup(ind, "W", std::isnan(slopes.w) ? wload[wk] : slopes.w);
        ++wk;
        for (const std::string& par : permitted[var]) {
            double type_default;
            if (par == var) type_default = var == "Y" ? slopes.y_self : slopes.self;
            else if (par == "Y") type_default = slopes.y;
            else if (par == "X") type_default = slopes.x;
            else if (par == "C4" || par == "C5") type_default = slopes.z2;
            else type_default = slopes.z1;
            m.slopes.emplace_back(par, slopes.lookup(ind, par, type_default));
        }
        if (!partner.empty()) {
            bool x_ok = std::find(permitted[var].begin(), permitted[var].end(), "X") !=
                        permitted[var].end();
            bool p_ok = partner == "C3" ||
                        std::find(permitted[var].begin(), permitted[var].end(), partner) !=
                            permitted[var].end();
            if (x_ok && p_ok)
                m.products.emplace_back("X", partner,
                                        slopes.lookup(ind, "X:" + partner, slopes.interaction));
        }
        spec.indicators.push_back(std::move(m));
    }
    return spec;
}

inline void validate_miss_spec(const MissSpec& spec) {
    auto permitted = permitted_parents(spec.letter);
    for (const auto& m : spec.indicators) {
        const auto& ok = permitted.at(m.target);
        auto check = [&](const std::string& par) {
            if (std::find(ok.begin(), ok.end(), par) == ok.end())
                throw std::invalid_argument("missingness spec: parent " + par +
                                            " is not permitted for indicator of " + m.target +
                                            " under letter " +
                                            std::string(1, letter_char(spec.letter)));
        };
        for (const auto& [par, _] : m.slopes) check(par);
        for (const auto& [p1, p2, _] : m.products) {
            check(p1);
            check(p2);
        }
    }
}

// ---------------------------------------------------------------------------
// intercept calibration: on a fixed large draw the marginal missingness
// proportion is the mean of expit(intercept + slope part), monotone in the
// intercept, so bisection is exact; the complete-case proportion is the mean
// over rows of the product of the four observation probabilities

struct MissCalibration {
    std::map<std::string, double> intercepts;
    std::map<std::string, double> achieved;
    double complete_case = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::vector<double> indicator_slope_part(const Dataset& d, const IndicatorModel& m,
                                                const std::vector<double>& w) {
    std::vector<double> s(d.nrow(), 0.0);
    for (const auto& [par, slope] : m.slopes) {
        const auto& col = d.col(par);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += slope * col[i];
    }
    for (const auto& [p1, p2, slope] : m.products) {
        const auto &a = d.col(p1), &b = d.col(p2);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += slope * a[i] * b[i];
    }
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += m.w * w[i];
    return s;
}

}  // namespace detail

inline MissCalibration calibrate_miss_intercepts(MissSpec& spec, const DgpSpec& dgp,
                                                 std::size_t mc_n = 100000,
                                                 std::uint64_t seed = 0xca11b6) {
    DgpSpec big = dgp;
    big.n = mc_n;
    Rng rng(derive_seed(seed, 1,
                        "calibrate_miss/" + std::string(1, letter_char(spec.letter)) + "/" +
                            to_string(spec.scenario) + "/" + to_string(dgp.scenario) + "/" +
                            std::to_string(dgp.prevalence)));
    Dataset d = generate_complete(big, rng);
    std::vector<double> w(mc_n);
    for (auto& v : w) v = rng.normal();

    MissCalibration out;
    std::vector<std::vector<double>> obs_prob;
    for (auto& m : spec.indicators) {
        std::vector<double> s = detail::indicator_slope_part(d, m, w);
        double target = spec.targets.at(m.target);
        auto miss_mean = [&](double b) {
            double acc = 0.0;
            for (double si : s) acc += detail::expit(b + si);
            return acc / static_cast<double>(s.size());
        };
        double lo = -30.0, hi = 30.0;
        if (miss_mean(lo) > target || miss_mean(hi) < target)
            throw std::domain_error("calibrate_miss_intercepts: target " + std::to_string(target) +
                                    " for " + m.target + " is outside the bracket");
        for (int it = 0; it < 100; ++it) {
            double mid = 0.5 * (lo + hi);
            (miss_mean(mid) < target ? lo : hi) = mid;
        }
        m.intercept = 0.5 * (lo + hi);
        out.intercepts[m.target] = m.intercept;
        out.achieved[m.target] = miss_mean(m.intercept);
        std::vector<double> q(s.size());
        for (std::size_t i = 0; i < s.size(); ++i)
            q[i] = 1.0 - detail::expit(m.intercept + s[i]);
        obs_prob.push_back(std::move(q));
    }
    double cc = 0.0;
    for (std::size_t i = 0; i < mc_n; ++i) {
        double p = 1.0;
        for (const auto& q : obs_prob) p *= q[i];
        cc += p;
    }
    out.complete_case = cc / static_cast<double>(mc_n);
    return out;
}

// ---------------------------------------------------------------------------
// imposition: indicators are drawn from the complete data (self-masking uses
// the true value), then cells are blanked and 0/1 indicator columns appended

inline Dataset impose_missingness(const Dataset& data, const MissSpec& spec, Rng& rng) {
    validate_miss_spec(spec);
    for (const std::string& v : {"A", "C1", "C2", "C3", "C4", "C5", "X", "Y"}) {
        if (!data.has(v)) throw std::invalid_argument("impose_missingness: no column " + v);
        if (data.n_missing(v) > 0)
            throw std::invalid_argument("impose_missingness: input column " + v +
                                        " already has missing cells");
    }
    for (const auto& m : spec.indicators)
        if (std::isnan(m.intercept))
            throw std::invalid_argument("impose_missingness: intercept for " + m.target +
                                        " is not calibrated");
    Dataset out = data;
    std::vector<double> w(data.nrow());
    for (auto& v : w) v = rng.normal();
    std::vector<std::vector<double>> drawn;
    for (const auto& m : spec.indicators) {
        std::vector<double> s = detail::indicator_slope_part(data, m, w);
        std::vector<double> ind(data.nrow());
        for (std::size_t i = 0; i < ind.size(); ++i)
            ind[i] = rng.bernoulli(detail::expit(m.intercept + s[i])) ? 1.0 : 0.0;
        drawn.push_back(std::move(ind));
    }
    for (std::size_t k = 0; k < spec.indicators.size(); ++k) {
        const std::string& var = spec.indicators[k].target;
        out.add_column(var + ".M", drawn[k]);
        for (std::size_t i = 0; i < data.nrow(); ++i)
            if (drawn[k][i] == 1.0) out.set_missing(i, var);
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON round trip for the parameter file

inline nlohmann::json to_json(const LogisticCoefs& m) {
    nlohmann::json j;
    j["intercept"] = m.intercept;
    for (const auto& [name, v] : m.slopes) j["slopes"][name] = v;
    return j;
}

inline LogisticCoefs logistic_from_json(const nlohmann::json& j,
                                        const std::vector<std::string>& order) {
    LogisticCoefs m;
    m.intercept = j.at("intercept").get<double>();
    for (const auto& name : order)
        if (j.at("slopes").contains(name))
            m.slopes.emplace_back(name, j.at("slopes").at(name).get<double>());
    return m;
}

inline nlohmann::json to_json(const DgpCoefs& c) {
    nlohmann::json j;
    j["c1_prev"] = c.c1_prev;
    j["c2"] = to_json(c.c2);
    j["c3"] = to_json(c.c3);
    j["c4"] = to_json(c.c4);
    j["c5"] = to_json(c.c5);
    for (const auto& [name, v] : c.x_slopes) j["x"]["slopes"][name] = v;
    j["x"]["intercept_10"] = c.x_intercept_10;
    j["x"]["intercept_50"] = c.x_intercept_50;
    j["y"] = {{"b0", c.y.b0},   {"b1", c.y.b1},   {"b2", c.y.b2},   {"b3", c.y.b3},
              {"b4", c.y.b4},   {"b5", c.y.b5},   {"b14", c.y.b14}, {"b24", c.y.b24},
              {"b34", c.y.b34}, {"b45", c.y.b45}, {"b35", c.y.b35}, {"sigma", c.y.sigma}};
    j["beta6"] = c.beta6;
    return j;
}

inline DgpCoefs dgp_coefs_from_json(const nlohmann::json& j) {
    DgpCoefs c;
    const std::vector<std::string> order{"A", "C1", "C2", "C3", "C4", "C5"};
    c.c1_prev = j.at("c1_prev").get<double>();
    c.c2 = logistic_from_json(j.at("c2"), order);
    c.c3 = logistic_from_json(j.at("c3"), order);
    c.c4 = logistic_from_json(j.at("c4"), order);
    c.c5 = logistic_from_json(j.at("c5"), order);
    c.x_slopes.clear();
    for (const auto& name : order)
        if (j.at("x").at("slopes").contains(name))
            c.x_slopes.emplace_back(name, j.at("x").at("slopes").at(name).get<double>());
    c.x_intercept_10 = j.at("x").at("intercept_10").get<double>();
    c.x_intercept_50 = j.at("x").at("intercept_50").get<double>();
    const auto& y = j.at("y");
    c.y = OutcomeCoefs{y.at("b0"),  y.at("b1"),  y.at("b2"),  y.at("b3"),
                       y.at("b4"),  y.at("b5"),  y.at("b14"), y.at("b24"),
                       y.at("b34"), y.at("b45"), y.at("b35"), y.at("sigma")};
    c.beta6 = j.at("beta6").get<std::map<std::string, double>>();
    return c;
}

inline nlohmann::json to_json(const MissSlopes& s) {
    nlohmann::json j;
    j["z1"] = s.z1;
    j["z2"] = s.z2;
    j["x"] = s.x;
    j["y"] = s.y;
    j["self"] = s.self;
    j["y_self"] = s.y_self;
    // w is omitted when the per-letter loadings are in effect
    if (!std::isnan(s.w)) j["w"] = s.w;
    j["interaction"] = s.interaction;
    j["override"] = s.override;
    return j;
}

inline MissSlopes miss_slopes_from_json(const nlohmann::json& j) {
    MissSlopes s;
    s.z1 = j.at("z1").get<double>();
    s.z2 = j.at("z2").get<double>();
    s.x = j.at("x").get<double>();
    s.y = j.at("y").get<double>();
    s.self = j.at("self").get<double>();
    s.y_self = j.at("y_self").get<double>();
    s.w = j.contains("w") && !j.at("w").is_null() ? j.at("w").get<double>()
                                                  : std::numeric_limits<double>::quiet_NaN();
    s.interaction = j.at("interaction").get<double>();
    if (j.contains("override"))
        s.override = j.at("override").get<std::map<std::string, std::map<std::string, double>>>();
    return s;
}

}  // namespace mdag
