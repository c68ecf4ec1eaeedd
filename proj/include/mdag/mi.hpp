#pragma once

// multiple imputation: chained-equations engine with Bayesian univariate
// draws, the six study variants as plan builders, substantive-model-
// compatible imputation via rejection sampling, and Rubin pooling of
// bootstrap-SE'd g-computation estimates

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdag/dataset.hpp"
#include "mdag/estimators.hpp"
#include "mdag/rng.hpp"

namespace mdag {

// ---------------------------------------------------------------------------
// plans

struct ImputationPlan {
    std::string variant;
    int m = 5;
    int cycles = 5;
    int max_reject = 1000;
    std::vector<ModelSpec> models;  // univariate models in visit order
    bool smc = false;
    ModelSpec substantive;                    // smc only
    std::vector<ModelSpec> covariate_models;  // smc only
};

inline const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names{"CCA",   "MI-Sim", "MI-EO", "MI-EI",
                                                "MI-EC", "MI-Com", "MI-SMC"};
    return names;
}

inline const std::vector<std::string>& mi_variant_names() {
    static const std::vector<std::string> names{"MI-Sim", "MI-EO", "MI-EI",
                                                "MI-EC",  "MI-Com", "MI-SMC"};
    return names;
}

namespace detail {

// the study's analysis variables: incomplete ones in visit order, then the
// invariably complete predictors (including the auxiliary A)
inline const std::vector<std::string>& incomplete_vars() {
    static const std::vector<std::string> v{"C4", "C5", "X", "Y"};
    return v;
}

inline Family family_of(const std::string& var) {
    return var == "Y" ? Family::LinearGaussian : Family::BinomialLogit;
}

inline ModelSpec mains_model(const std::string& target) {
    ModelSpec spec;
    spec.response = target;
    spec.family = family_of(target);
    for (const std::string& v : {"A", "C1", "C2", "C3", "C4", "C5", "X", "Y"})
        if (v != target) spec.add_term(Term{{v}});
    return spec;
}

}  // namespace detail

// builds the univariate models of one MI variant from the analysis model;
// every model uses all other analysis variables plus the auxiliary A as main
// effects, never any term involving its own response, and the variants add
// their interaction terms on top
inline ImputationPlan build_plan(const std::string& method, const ModelSpec& outcome_spec,
                                 int m = 5, int cycles = 5) {
    if (std::find(mi_variant_names().begin(), mi_variant_names().end(), method) ==
        mi_variant_names().end())
        throw std::invalid_argument("unknown MI variant '" + method + "'");
    ImputationPlan plan;
    plan.variant = method;
    plan.m = m;
    plan.cycles = cycles;

    std::map<std::string, ModelSpec> models;
    for (const auto& v : detail::incomplete_vars()) models[v] = detail::mains_model(v);
    auto add = [&](const std::string& target, const Term& t) {
        if (!t.involves(target)) models[target].add_term(t);
    };

    if (method == "MI-EO") {
        add("C4", Term{{"X", "Y"}});
        add("C5", Term{{"X", "Y"}});
    } else if (method == "MI-EI") {
        add("C4", Term{{"X", "C5"}});
        add("C5", Term{{"X", "C4"}});
        add("Y", Term{{"X", "C4"}});
        add("Y", Term{{"X", "C5"}});
    } else if (method == "MI-EC") {
        for (const std::string& t : {"C4", "C5", "Y"})
            for (const std::string& c : {"C1", "C2", "C3", "C4", "C5"})
                add(t, Term{{"X", c}});
    } else if (method == "MI-Com") {
        // every product of the analysis model enters the models it can, and
        // each variable also gets the outcome crossed with everything it
        // shares a product with
        for (const auto& v : detail::incomplete_vars()) {
            std::set<std::string> partners;
            for (const auto& t : outcome_spec.terms) {
                if (t.factors.size() < 2) continue;
                if (t.involves(v)) {
                    for (const auto& f : t.factors)
                        if (f != v) partners.insert(f);
                } else {
                    add(v, t);
                }
            }
            for (const auto& z : partners)
                if (z != "Y") add(v, Term{{"Y", z}});
        }
    }

    // scenario-specific exposure interactions from the analysis model are
    // carried into the imputation models (a no-op for MI-Sim by design and
    // for MI-EC and MI-Com by deduplication)
    if (method != "MI-Sim") {
        for (const auto& t : outcome_spec.terms)
            if (t.factors.size() >= 2 && t.involves("X"))
                for (const auto& v : detail::incomplete_vars()) add(v, t);
    }

    if (method == "MI-SMC") {
        plan.smc = true;
        plan.substantive = outcome_spec;
        plan.substantive.add_term(Term{{"A"}});
        for (const std::string& v : {"C4", "C5", "X"}) {
            ModelSpec cov;
            cov.response = v;
            cov.family = Family::BinomialLogit;
            for (const std::string& p : {"A", "C1", "C2", "C3", "C4", "C5", "X"})
                if (p != v) cov.add_term(Term{{p}});
            plan.covariate_models.push_back(std::move(cov));
        }
    }

    for (const auto& v : detail::incomplete_vars()) plan.models.push_back(models[v]);
    return plan;
}

// human-readable plan dump, the audit trail for how "relevant" interaction
// terms were resolved
inline std::string describe(const ImputationPlan& plan) {
    std::string s = "variant: " + plan.variant + " (m=" + std::to_string(plan.m) +
                    ", cycles=" + std::to_string(plan.cycles) + ")\n";
    if (plan.smc) {
        s += "substantive: " + plan.substantive.formula() + "\n";
        for (const auto& mspec : plan.covariate_models)
            s += "covariate:   " + mspec.formula() + "\n";
        s += "outcome imputed from the substantive posterior predictive\n";
    } else {
        for (const auto& mspec : plan.models)
            s += "impute " + mspec.response + ": " + mspec.formula() +
                 (mspec.family == Family::LinearGaussian ? "  [linear]" : "  [logistic]") + "\n";
    }
    return s;
}

// ---------------------------------------------------------------------------
// Bayesian parameter draws

namespace detail {

inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal();
}

inline Eigen::VectorXd mvn_draw(const Eigen::VectorXd& mean, const Eigen::MatrixXd& sqrt_cov,
                                Rng& rng) {
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return mean + sqrt_cov * z;
}

struct ParamDraw {
    Eigen::VectorXd beta;
    double sigma2 = std::numeric_limits<double>::quiet_NaN();  // linear only
};

// linear: residual variance from its scaled inverse-chi-square posterior,
// coefficients from the conditional normal; logistic: asymptotic normal at
// the MLE
inline ParamDraw draw_params(const FitResult& f, Family family, std::size_t n_fit, Rng& rng) {
    ParamDraw d;
    if (family == Family::LinearGaussian) {
        int df = static_cast<int>(n_fit) - static_cast<int>(f.coef.size());
        if (f.sigma2 <= 0.0 || df <= 0) {
            d.beta = f.coef;
            d.sigma2 = std::max(f.sigma2, 0.0);
            return d;
        }
        d.sigma2 = df * f.sigma2 / rng.chi_square(df);
        d.beta = mvn_draw(f.coef, psd_sqrt(f.cov * (d.sigma2 / f.sigma2)), rng);
    } else {
        d.beta = mvn_draw(f.coef, psd_sqrt(f.cov), rng);
    }
    return d;
}

// fit with the ridge fallback for logistic separation; failures become
// imputation errors naming the variable and cycle
inline FitResult fit_for_imputation(const Dataset& w, const ModelSpec& spec,
                                    const std::vector<std::size_t>& rows, int cycle,
                                    int& warnings) {
    try {
        Eigen::MatrixXd X;
        Eigen::VectorXd y;
        build_design(w, spec, rows, X, y);
        FitResult f = spec.family == Family::LinearGaussian ? fit_linear(X, y)
                                                            : fit_logistic(X, y);
        if (!f.converged && spec.family == Family::BinomialLogit) {
            ++warnings;
            f = fit_logistic(X, y, 1e-4);
        }
        if (!f.converged)
            throw std::domain_error(f.separation ? "separation persisted under ridge"
                                                 : "no convergence");
        return f;
    } catch (const std::exception& e) {
        throw std::runtime_error("imputation: model for " + spec.response + " failed at cycle " +
                                 std::to_string(cycle) + ": " + e.what());
    }
}

struct MissingLayout {
    std::vector<std::size_t> rows_obs;
    std::vector<std::size_t> rows_mis;
};

inline MissingLayout layout_for(const Dataset& d, const std::string& var) {
    MissingLayout L;
    for (std::size_t r = 0; r < d.nrow(); ++r)
        (d.is_missing(r, var) ? L.rows_mis : L.rows_obs).push_back(r);
    return L;
}

// starting values: random draws from the observed marginal
inline void init_from_marginals(Dataset& w, const Dataset& d, const std::string& var,
                                const MissingLayout& L, Rng& rng) {
    if (L.rows_mis.empty()) return;
    if (L.rows_obs.empty())
        throw std::runtime_error("imputation: column " + var + " has no observed values");
    for (std::size_t r : L.rows_mis)
        w.set_value(r, var, d.at(L.rows_obs[rng.index(L.rows_obs.size())], d.col_index(var)));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// chained equations

struct ImputedSet {
    std::vector<Dataset> completed;
    // per chain, per variable, the mean of the imputed cells after each cycle
    std::vector<std::map<std::string, std::vector<double>>> trace;
    int warnings = 0;
};

namespace detail {

inline void check_plan_covers(const Dataset& d, const std::vector<std::string>& covered) {
    for (const auto& name : d.names())
        if (d.n_missing(name) > 0 &&
            std::find(covered.begin(), covered.end(), name) == covered.end())
            throw std::invalid_argument("imputation plan does not cover incomplete column " +
                                        name);
}

}  // namespace detail

inline ImputedSet impute_fcs(const Dataset& d, const ImputationPlan& plan, Rng& rng) {
    std::vector<std::string> covered;
    for (const auto& m : plan.models) covered.push_back(m.response);
    detail::check_plan_covers(d, covered);
    std::vector<detail::MissingLayout> layouts;
    for (const auto& m : plan.models) layouts.push_back(detail::layout_for(d, m.response));

    ImputedSet out;
    for (int j = 0; j < plan.m; ++j) {
        Rng chain = rng.substream("fcs-chain", static_cast<std::uint64_t>(j));
        Dataset w = d;
        for (std::size_t k = 0; k < plan.models.size(); ++k)
            detail::init_from_marginals(w, d, plan.models[k].response, layouts[k], chain);
        std::map<std::string, std::vector<double>> tr;
        for (int cycle = 1; cycle <= plan.cycles; ++cycle) {
            for (std::size_t k = 0; k < plan.models.size(); ++k) {
                const ModelSpec& mspec = plan.models[k];
                const auto& L = layouts[k];
                if (L.rows_mis.empty()) continue;
                FitResult f =
                    detail::fit_for_imputation(w, mspec, L.rows_obs, cycle, out.warnings);
                detail::ParamDraw par =
                    detail::draw_params(f, mspec.family, L.rows_obs.size(), chain);
                Eigen::MatrixXd Xm;
                Eigen::VectorXd ym;
                build_design(w, mspec, L.rows_mis, Xm, ym);
                Eigen::VectorXd lp = Xm * par.beta;
                double acc = 0.0;
                double sd = mspec.family == Family::LinearGaussian ? std::sqrt(par.sigma2) : 0.0;
                for (std::size_t i = 0; i < L.rows_mis.size(); ++i) {
                    double v = mspec.family == Family::LinearGaussian
                                   ? lp(static_cast<Eigen::Index>(i)) + sd * chain.normal()
                                   : (chain.bernoulli(detail::expit(
                                          lp(static_cast<Eigen::Index>(i))))
                                          ? 1.0
                                          : 0.0);
                    w.set_value(L.rows_mis[i], mspec.response, v);
                    acc += v;
                }
                tr[mspec.response].push_back(acc / static_cast<double>(L.rows_mis.size()));
            }
        }
        out.completed.push_back(std::move(w));
        out.trace.push_back(std::move(tr));
    }
    return out;
}

// ---------------------------------------------------------------------------
// substantive-model-compatible chained equations: covariate proposals are
// accepted with probability equal to the outcome density at the proposal
// relative to its maximum, and the outcome itself is drawn from the
// substantive posterior predictive

inline ImputedSet impute_smcfcs(const Dataset& d, const ModelSpec& substantive,
                                const std::vector<ModelSpec>& covariate_models,
                                const ImputationPlan& plan, Rng& rng) {
    if (substantive.family != Family::LinearGaussian)
        throw std::invalid_argument("smcfcs: substantive model must be linear");
    for (const auto& cm : covariate_models)
        if (cm.family != Family::BinomialLogit)
            throw std::invalid_argument("smcfcs: covariate models must be logistic (binary)");
    const std::string yvar = substantive.response;
    std::vector<std::string> covered{yvar};
    for (const auto& cm : covariate_models) covered.push_back(cm.response);
    detail::check_plan_covers(d, covered);

    std::vector<detail::MissingLayout> layouts;
    for (const auto& cm : covariate_models) layouts.push_back(detail::layout_for(d, cm.response));
    detail::MissingLayout ly = detail::layout_for(d, yvar);
    const std::size_t ycol = d.col_index(yvar);
    // both models are refit to the full completed data each cycle, so the
    // imputed values feed back into the fits; fitting the covariate model on
    // its observed rows only would freeze in the selection bias of the
    // missingness mechanism
    const std::vector<std::size_t> all_r = all_rows(d);

    ImputedSet out;
    for (int j = 0; j < plan.m; ++j) {
        Rng chain = rng.substream("smc-chain", static_cast<std::uint64_t>(j));
        Dataset w = d;
        for (std::size_t k = 0; k < covariate_models.size(); ++k)
            detail::init_from_marginals(w, d, covariate_models[k].response, layouts[k], chain);
        detail::init_from_marginals(w, d, yvar, ly, chain);
        std::map<std::string, std::vector<double>> tr;

        for (int cycle = 1; cycle <= plan.cycles; ++cycle) {
            for (std::size_t k = 0; k < covariate_models.size(); ++k) {
                const ModelSpec& cm = covariate_models[k];
                const auto& L = layouts[k];
                if (L.rows_mis.empty()) continue;
                FitResult fc = detail::fit_for_imputation(w, cm, all_r, cycle, out.warnings);
                detail::ParamDraw pc =
                    detail::draw_params(fc, Family::BinomialLogit, all_r.size(), chain);
                FitResult fs =
                    detail::fit_for_imputation(w, substantive, all_r, cycle, out.warnings);
                detail::ParamDraw ps =
                    detail::draw_params(fs, Family::LinearGaussian, all_r.size(), chain);

                // proposal probability for the binary covariate at each row
                Eigen::MatrixXd Xc;
                Eigen::VectorXd yc;
                build_design(w, cm, L.rows_mis, Xc, yc);
                Eigen::VectorXd lpc = Xc * pc.beta;

                // the outcome linear predictor under either candidate value,
                // from the current values of everything else
                auto lp_sub = [&](std::size_t r, double zval) {
                    double lp = ps.beta(0);
                    for (std::size_t t = 0; t < substantive.terms.size(); ++t) {
                        double prod = 1.0;
                        for (const auto& fct : substantive.terms[t].factors)
                            prod *= fct == cm.response ? zval : w.at(r, w.col_index(fct));
                        lp += ps.beta(static_cast<Eigen::Index>(t + 1)) * prod;
                    }
                    return lp;
                };
                double acc_mean = 0.0;
                for (std::size_t i = 0; i < L.rows_mis.size(); ++i) {
                    std::size_t r = L.rows_mis[i];
                    double yr = w.at(r, ycol);
                    double p1 = detail::expit(lpc(static_cast<Eigen::Index>(i)));
                    double lp0 = lp_sub(r, 0.0), lp1 = lp_sub(r, 1.0);
                    double chosen = 0.0, best = -1.0, best_val = 0.0;
                    bool accepted = false;
                    for (int attempt = 0; attempt < plan.max_reject; ++attempt) {
                        double z = chain.bernoulli(p1) ? 1.0 : 0.0;
                        double resid = yr - (z == 1.0 ? lp1 : lp0);
                        double a = std::exp(-resid * resid / (2.0 * ps.sigma2));
                        if (a > best) {
                            best = a;
                            best_val = z;
                        }
                        if (chain.uniform() < a) {
                            chosen = z;
                            accepted = true;
                            break;
                        }
                    }
                    if (!accepted) {
                        chosen = best_val;
                        ++out.warnings;
                    }
                    w.set_value(r, cm.response, chosen);
                    acc_mean += chosen;
                }
                tr[cm.response].push_back(acc_mean / static_cast<double>(L.rows_mis.size()));
            }
            if (!ly.rows_mis.empty()) {
                FitResult fs =
                    detail::fit_for_imputation(w, substantive, all_r, cycle, out.warnings);
                detail::ParamDraw ps =
                    detail::draw_params(fs, Family::LinearGaussian, all_r.size(), chain);
                Eigen::MatrixXd Xm;
                Eigen::VectorXd ym;
                build_design(w, substantive, ly.rows_mis, Xm, ym);
                Eigen::VectorXd lp = Xm * ps.beta;
                double sd = std::sqrt(ps.sigma2);
                double acc = 0.0;
                for (std::size_t i = 0; i < ly.rows_mis.size(); ++i) {
                    double v = lp(static_cast<Eigen::Index>(i)) + sd * chain.normal();
                    w.set_value(ly.rows_mis[i], yvar, v);
                    acc += v;
                }
                tr[yvar].push_back(acc / static_cast<double>(ly.rows_mis.size()));
            }
        }
        out.completed.push_back(std::move(w));
        out.trace.push_back(std::move(tr));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rubin's rules over per-imputation points and bootstrap standard errors

struct PooledEstimate {
    double pooled = std::numeric_limits<double>::quiet_NaN();
    double within = std::numeric_limits<double>::quiet_NaN();
    double between = std::numeric_limits<double>::quiet_NaN();
    double total = std::numeric_limits<double>::quiet_NaN();
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> points, ses;
};

inline PooledEstimate pool_rubin(const std::vector<double>& points,
                                 const std::vector<double>& ses) {
    const std::size_t m = points.size();
    if (m < 2) throw std::invalid_argument("pool_rubin: need at least 2 imputations");
    if (ses.size() != m)
        throw std::invalid_argument("pool_rubin: points and SEs must have equal length");
    PooledEstimate out;
    out.points = points;
    out.ses = ses;
    double sum = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sum += points[i];
        wsum += ses[i] * ses[i];
    }
    out.pooled = sum / static_cast<double>(m);
    out.within = wsum / static_cast<double>(m);
    double bsum = 0.0;
    for (double p : points) bsum += (p - out.pooled) * (p - out.pooled);
    out.between = bsum / static_cast<double>(m - 1);
    out.total = out.within + (1.0 + 1.0 / static_cast<double>(m)) * out.between;
    double se = std::sqrt(out.total);
    out.lo = out.pooled - 1.96 * se;
    out.hi = out.pooled + 1.96 * se;
    return out;
}

// ---------------------------------------------------------------------------
// variant dispatch: impute, estimate per completed dataset with bootstrap
// SEs, pool

struct EstimateOptions {
    int m = 5;
    int cycles = 5;
    int bootstrap = 240;
    int max_reject = 1000;
    std::string exposure = "X";
};

inline AceEstimate run_mi_method(const Dataset& d, const std::string& variant,
                                 const ModelSpec& outcome_spec, const EstimateOptions& opt,
                                 Rng& rng) {
    ImputationPlan plan = build_plan(variant, outcome_spec, opt.m, opt.cycles);
    plan.max_reject = opt.max_reject;
    ImputedSet set = plan.smc
                         ? impute_smcfcs(d, plan.substantive, plan.covariate_models, plan, rng)
                         : impute_fcs(d, plan, rng);
    std::vector<double> points, ses;
    AceEstimate est;
    for (std::size_t j = 0; j < set.completed.size(); ++j) {
        const Dataset& comp = set.completed[j];
        points.push_back(g_compute_ace(comp, outcome_spec, opt.exposure));
        Rng boot = rng.substream("mi-boot", j);
        BootstrapResult br = bootstrap_se(
            comp,
            [&](const Dataset& b) { return g_compute_ace(b, outcome_spec, opt.exposure); },
            opt.bootstrap, boot);
        ses.push_back(br.se);
        est.boot_failures += br.failures;
        est.boot_samples += br.samples;
    }
    PooledEstimate pooled = pool_rubin(points, ses);
    est.point = pooled.pooled;
    est.se = std::sqrt(pooled.total);
    est.lo = pooled.lo;
    est.hi = pooled.hi;
    est.method = variant;
    est.mi_warnings = set.warnings;
    return est;
}

// single entry point for every estimation method in the study
inline AceEstimate estimate_ace(const Dataset& d, const std::string& method,
                                const ModelSpec& outcome_spec, const EstimateOptions& opt,
                                Rng& rng) {
    if (method == "CCA") return cca_ace(d, outcome_spec, opt.exposure, opt.bootstrap, rng);
    return run_mi_method(d, method, outcome_spec, opt, rng);
}

}  // namespace mdag
