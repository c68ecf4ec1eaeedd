#pragma once

// regression fitting (OLS and logistic IRLS), g-computation for the ACE,
// complete-case analysis, and bootstrap standard errors

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mdag/dataset.hpp"
#include "mdag/rng.hpp"

namespace mdag {

struct FitResult {
    Eigen::VectorXd coef;
    Eigen::MatrixXd cov;
    double sigma2 = std::numeric_limits<double>::quiet_NaN();  // linear only
    bool converged = false;
    int iterations = 0;
    bool separation = false;
};

struct AceEstimate {
    double point = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
    std::string method;
    int boot_failures = 0;
    int boot_samples = 0;
    int mi_warnings = 0;
};

namespace detail {

inline void check_rank(const Eigen::MatrixXd& X) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols())
        throw std::domain_error("fit: design matrix is rank deficient (rank " +
                                std::to_string(qr.rank()) + " of " + std::to_string(X.cols()) + ")");
}

inline double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace detail

// ordinary least squares; covariance is sigma2 (X'X)^-1
inline FitResult fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() < X.cols() + 1)
        throw std::domain_error("fit: need at least p+1 rows, got " + std::to_string(X.rows()));
    detail::check_rank(X);
    Eigen::MatrixXd xtx = X.transpose() * X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    FitResult res;
    res.coef = ldlt.solve(X.transpose() * y);
    Eigen::VectorXd resid = y - X * res.coef;
    double dof = static_cast<double>(X.rows() - X.cols());
    res.sigma2 = resid.squaredNorm() / dof;
    res.cov = res.sigma2 * ldlt.solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
    res.converged = true;
    res.iterations = 1;
    return res;
}

// logistic regression by iteratively reweighted least squares; diverging
// coefficients are treated as separation and flagged instead of thrown, so
// bootstrap callers can redraw
inline FitResult fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double ridge = 0.0) {
    if (X.rows() < X.cols() + 1)
        throw std::domain_error("fit: need at least p+1 rows, got " + std::to_string(X.rows()));
    detail::check_rank(X);
    const int max_iter = 50;
    FitResult res;
    res.coef = Eigen::VectorXd::Zero(X.cols());
    double dev_old = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd info;
    for (int it = 1; it <= max_iter; ++it) {
        res.iterations = it;
        Eigen::VectorXd eta = X * res.coef;
        Eigen::VectorXd mu(eta.size()), w(eta.size());
        double dev = 0.0;
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            mu(i) = detail::expit(eta(i));
            w(i) = std::max(mu(i) * (1.0 - mu(i)), 1e-12);
            // binomial deviance contribution, guarded against log(0)
            double p = std::min(std::max(mu(i), 1e-12), 1.0 - 1e-12);
            dev -= 2.0 * (y(i) * std::log(p) + (1.0 - y(i)) * std::log(1.0 - p));
        }
        Eigen::VectorXd score = X.transpose() * (y - mu);
        info = X.transpose() * w.asDiagonal() * X;
        if (ridge > 0.0) {
            info.diagonal().array() += ridge;
            score -= ridge * res.coef;
        }
        if (res.coef.cwiseAbs().maxCoeff() > 20.0) {
            res.separation = true;
            res.converged = false;
            return res;
        }
        if (score.cwiseAbs().maxCoeff() < 1e-8 ||
            std::abs(dev - dev_old) < 1e-10 * (std::abs(dev) + 1e-10)) {
            res.converged = true;
            res.cov = info.ldlt().solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
            return res;
        }
        dev_old = dev;
        res.coef += info.ldlt().solve(score);
    }
    // hit the cap: report the state honestly
    res.converged = false;
    res.separation = res.coef.cwiseAbs().maxCoeff() > 20.0;
    res.cov = info.ldlt().solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
    return res;
}

inline FitResult fit(const Dataset& d, const ModelSpec& spec,
                     const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    build_design(d, spec, rows, X, y);
    return spec.family == Family::LinearGaussian ? fit_linear(X, y) : fit_logistic(X, y);
}

inline FitResult fit(const Dataset& d, const ModelSpec& spec) { return fit(d, spec, all_rows(d)); }

// ---------------------------------------------------------------------------
// g-computation: fit the outcome model, then contrast mean predictions with
// everyone exposed versus everyone unexposed; interaction columns are
// re-derived from the forced exposure value

namespace detail {

// design matrix with the exposure column forced to a constant
inline void build_forced_design(const Dataset& d, const ModelSpec& spec,
                                const std::vector<std::size_t>& rows, const std::string& exposure,
                                double forced, Eigen::MatrixXd& X) {
    std::size_t xc = d.col_index(exposure);
    X.resize(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(spec.terms.size() + 1));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t r = rows[i];
        X(static_cast<Eigen::Index>(i), 0) = 1.0;
        for (std::size_t j = 0; j < spec.terms.size(); ++j) {
            double prod = 1.0;
            for (const auto& f : spec.terms[j].factors) {
                std::size_t c = d.col_index(f);
                if (c == xc) {
                    prod *= forced;
                } else {
                    if (d.is_missing(r, c))
                        throw std::invalid_argument("g-computation: missing cell in column " + f);
                    prod *= d.at(r, c);
                }
            }
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = prod;
        }
    }
}

}  // namespace detail

inline double g_compute_ace(const Dataset& d, const ModelSpec& outcome_spec,
                            const std::string& exposure, const std::vector<std::size_t>& rows) {
    bool found = false;
    for (const auto& t : outcome_spec.terms)
        if (t.involves(exposure)) found = true;
    if (!found)
        throw std::invalid_argument("g-computation: outcome model does not include exposure " +
                                    exposure);
    FitResult f = fit(d, outcome_spec, rows);
    if (!f.converged) throw std::domain_error("g-computation: outcome model fit failed");
    Eigen::MatrixXd X1, X0;
    detail::build_forced_design(d, outcome_spec, rows, exposure, 1.0, X1);
    detail::build_forced_design(d, outcome_spec, rows, exposure, 0.0, X0);
    Eigen::VectorXd lp1 = X1 * f.coef, lp0 = X0 * f.coef;
    double s = 0.0;
    if (outcome_spec.family == Family::LinearGaussian) {
        s = (lp1 - lp0).mean();
    } else {
        for (Eigen::Index i = 0; i < lp1.size(); ++i)
            s += detail::expit(lp1(i)) - detail::expit(lp0(i));
        s /= static_cast<double>(lp1.size());
    }
    return s;
}

inline double g_compute_ace(const Dataset& d, const ModelSpec& outcome_spec,
                            const std::string& exposure) {
    return g_compute_ace(d, outcome_spec, exposure, all_rows(d));
}

// ---------------------------------------------------------------------------
// bootstrap standard error: resample rows with replacement; estimator
// failures are redrawn, up to 10*B attempts in total

struct BootstrapResult {
    double se = std::numeric_limits<double>::quiet_NaN();
    int failures = 0;
    int samples = 0;
};

inline BootstrapResult bootstrap_se(const Dataset& d,
                                    const std::function<double(const Dataset&)>& estimator, int B,
                                    Rng& rng) {
    if (B < 2) throw std::invalid_argument("bootstrap: B must be at least 2");
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(B));
    int failures = 0;
    const int max_attempts = 10 * B;
    int attempts = 0;
    std::vector<std::size_t> rows(d.nrow());
    while (static_cast<int>(vals.size()) < B && attempts < max_attempts) {
        ++attempts;
        for (auto& r : rows) r = static_cast<std::size_t>(rng.index(d.nrow()));
        try {
            vals.push_back(estimator(d.subset(rows)));
        } catch (const std::exception&) {
            ++failures;
        }
    }
    // more failures than successes over all attempts means the estimator is
    // effectively broken on this data; exhausting the attempt budget without
    // reaching B implies this too
    if (2 * failures > attempts)
        throw std::domain_error("bootstrap: degenerate, " + std::to_string(failures) + " of " +
                                std::to_string(attempts) + " resamples failed");
    if (vals.size() < 2) throw std::domain_error("bootstrap: too few successful resamples");
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    BootstrapResult res;
    res.se = std::sqrt(ss / static_cast<double>(vals.size() - 1));
    res.failures = failures;
    res.samples = static_cast<int>(vals.size());
    return res;
}

// ---------------------------------------------------------------------------
// complete-case analysis: drop any row missing a model column, g-compute,
// and attach a bootstrap SE of the whole procedure

inline AceEstimate cca_ace(const Dataset& d, const ModelSpec& outcome_spec,
                           const std::string& exposure, int B, Rng& rng) {
    auto run = [&](const Dataset& data) {
        std::vector<std::size_t> rows = data.complete_rows(outcome_spec.columns());
        if (rows.size() < outcome_spec.terms.size() + 2)
            throw std::domain_error("cca: too few complete rows (" + std::to_string(rows.size()) +
                                    ")");
        return g_compute_ace(data, outcome_spec, exposure, rows);
    };
    AceEstimate est;
    est.method = "CCA";
    est.point = run(d);
    BootstrapResult b = bootstrap_se(d, run, B, rng);
    est.se = b.se;
    est.boot_failures = b.failures;
    est.boot_samples = b.samples;
    est.lo = est.point - 1.96 * est.se;
    est.hi = est.point + 1.96 * est.se;
    return est;
}

}  // namespace mdag
