/*
 * This file is part of lmmes, a library for effect size estimation in
 * linear mixed models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#pragma once

#include "lmmes/design.hpp"
#include "lmmes/distributions.hpp"
#include "lmmes/errors.hpp"
#include "lmmes/gls.hpp"
#include "lmmes/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace lmmes {

namespace detail {

// (R1 bh)'(R1 M R1')^-1 (R1 bh) for a symmetric PD middle matrix M.
inline double block_quadform(const Eigen::VectorXd& beta_hat, const Eigen::MatrixXd& m,
                             const Eigen::MatrixXd& r1) {
    if (r1.rows() < 1) throw InvalidArgument("block selector has no rows");
    if (r1.cols() != beta_hat.size())
        throw DimensionMismatch("block selector has " + std::to_string(r1.cols()) +
                                " columns but beta has length " + std::to_string(beta_hat.size()));
    const Eigen::VectorXd rb = r1 * beta_hat;
    Eigen::MatrixXd rmr = r1 * m * r1.transpose();
    rmr = 0.5 * (rmr + rmr.transpose()).eval();
    Eigen::LLT<Eigen::MatrixXd> llt(rmr);
    if (llt.info() != Eigen::Success)
        throw HypothesisSingular("selected coefficient covariance block is singular");
    double quad = rb.dot(llt.solve(rb));
    return quad < 0.0 ? 0.0 : quad;
}

} // namespace detail

/// Exact effect size under known V:
/// f^2 = (R1 bh)'(R1 B R1')^-1 (R1 bh) / (y - X bh)'V^-1(y - X bh),
/// i.e. the block-1 F statistic with the nu/r factor removed.
inline double f2_exact(const GlsFit& fit, const Eigen::MatrixXd& block1_selector) {
    const double quad = detail::block_quadform(fit.beta_hat, fit.b_matrix, block1_selector);
    if (quad == 0.0) return 0.0;
    if (fit.residual_quadform <= 0.0)
        throw NumericalFailure("zero residual quadratic form; effect size is undefined");
    return quad / fit.residual_quadform;
}

/// Operational effect size from an estimated coefficient covariance:
/// f^2 = (1/nu) (R1 bh)'(R1 Covhat R1')^-1 (R1 bh). The 1/nu factor
/// compensates for the sigma2_hat inside Covhat = sigma2_hat * Bhat.
inline double f2_operational(const Eigen::VectorXd& beta_hat, const Eigen::MatrixXd& covhat,
                             Eigen::Index nu, const Eigen::MatrixXd& block1_selector) {
    if (nu <= 0) throw InsufficientDf("f2_operational: nu <= 0");
    if (covhat.rows() != beta_hat.size() || covhat.cols() != beta_hat.size())
        throw DimensionMismatch("f2_operational: covariance shape does not match beta");
    const double quad = detail::block_quadform(beta_hat, covhat, block1_selector);
    return quad / static_cast<double>(nu);
}

/// Edwards' R^2 for mixed models: (r/nu) F / (1 + (r/nu) F).
inline double r2_edwards(double f, double r, double nu) {
    if (!(r >= 1.0) || !(nu >= 1.0)) throw InvalidArgument("r2_edwards: requires r >= 1 and nu >= 1");
    if (!(f >= 0.0)) throw InvalidArgument("r2_edwards: F must be >= 0");
    const double s = (r / nu) * f;
    return s / (1.0 + s);
}

/// f^2 from coefficients of determination: (R2_ab - R2_a) / (1 - R2_ab).
/// May be negative when the reduced-model R2 exceeds the full-model one;
/// the value is returned as-is.
inline double f2_via_r2(double r2_ab, double r2_a) {
    if (!(r2_ab >= 0.0) || r2_ab >= 1.0) throw InvalidR2("f2_via_r2: R2_ab must lie in [0, 1)");
    if (!(r2_a >= 0.0) || r2_a >= 1.0) throw InvalidR2("f2_via_r2: R2_a must lie in [0, 1)");
    return (r2_ab - r2_a) / (1.0 - r2_ab);
}

/// Two-group standardized mean difference with its Welch companion test.
struct TwoGroupEffect {
    double d = 0.0;       // (mean1 - mean0) / pooled sd, group 1 = higher group value
    double welch_t = 0.0; // Welch two-sample t statistic
    double welch_df = 0.0;
    double welch_p = 1.0; // two-sided
    double mean0 = 0.0;
    double mean1 = 0.0;
    Eigen::Index n0 = 0;
    Eigen::Index n1 = 0;
};

/// Cohen's d with the pooled (n0 + n1 - 2)-denominator standard deviation.
/// `group` must take exactly two distinct values; the larger one is group 1.
inline TwoGroupEffect cohens_d(const Eigen::VectorXd& y, const Eigen::VectorXd& group) {
    if (group.size() != y.size()) throw DimensionMismatch("cohens_d: group length does not match y");
    const double lo = group.minCoeff();
    const double hi = group.maxCoeff();
    if (lo == hi) throw InvalidArgument("cohens_d: grouping column takes a single value");
    for (Eigen::Index i = 0; i < group.size(); ++i)
        if (group[i] != lo && group[i] != hi)
            throw InvalidArgument("cohens_d: grouping column must be binary");

    TwoGroupEffect out;
    double sum0 = 0.0, sum1 = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (group[i] == lo) {
            sum0 += y[i];
            ++out.n0;
        } else {
            sum1 += y[i];
            ++out.n1;
        }
    }
    if (out.n0 < 2 || out.n1 < 2)
        throw InsufficientGroupData("cohens_d: each group needs at least two observations");
    out.mean0 = sum0 / static_cast<double>(out.n0);
    out.mean1 = sum1 / static_cast<double>(out.n1);
    double ss0 = 0.0, ss1 = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (group[i] == lo) ss0 += (y[i] - out.mean0) * (y[i] - out.mean0);
        else ss1 += (y[i] - out.mean1) * (y[i] - out.mean1);
    }
    const double var0 = ss0 / static_cast<double>(out.n0 - 1);
    const double var1 = ss1 / static_cast<double>(out.n1 - 1);
    const double pooled_var = (ss0 + ss1) / static_cast<double>(out.n0 + out.n1 - 2);
    const double diff = out.mean1 - out.mean0;
    out.d = pooled_var > 0.0 ? diff / std::sqrt(pooled_var)
                             : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());

    const double se0 = var0 / static_cast<double>(out.n0);
    const double se1 = var1 / static_cast<double>(out.n1);
    const double se2 = se0 + se1;
    if (se2 > 0.0) {
        out.welch_t = diff / std::sqrt(se2);
        out.welch_df = se2 * se2 /
                       (se0 * se0 / static_cast<double>(out.n0 - 1) + se1 * se1 / static_cast<double>(out.n1 - 1));
        out.welch_p = 2.0 * t_sf(std::fabs(out.welch_t), out.welch_df);
    } else {
        out.welch_t = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        out.welch_df = static_cast<double>(out.n0 + out.n1 - 2);
        out.welch_p = diff == 0.0 ? 1.0 : 0.0;
    }
    return out;
}

/// Generalization d* = sqrt(f^2 (n - 2 - w) gamma) of Cohen's d for a binary
/// regressor adjusted for w covariates; sigma^2 gamma is the variance of the
/// block-1 coefficient, so gamma is its diagonal element of B.
inline double d_star(double f2, Eigen::Index n, Eigen::Index w, double gamma) {
    if (!(f2 >= 0.0)) throw InvalidArgument("d_star: f2 must be >= 0");
    if (n - 2 - w <= 0) throw InvalidArgument("d_star: requires n - 2 - w > 0");
    if (!(gamma > 0.0)) throw InvalidArgument("d_star: gamma must be > 0");
    return std::sqrt(f2 * static_cast<double>(n - 2 - w) * gamma);
}

/// Exact f^2 as a function of the variance ratio k for a single grouping
/// factor: V(k) = I + k Z Z', then gls_fit and f2_exact per grid point.
/// Grid points are evaluated independently (possibly in parallel) and
/// returned in grid order.
inline std::vector<std::pair<double, double>> f2_curve(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                                       const Eigen::MatrixXd& z,
                                                       const Eigen::MatrixXd& block1_selector,
                                                       const std::vector<double>& k_grid) {
    if (k_grid.empty()) throw InvalidArgument("f2_curve: empty k grid");
    for (double k : k_grid)
        if (!std::isfinite(k) || k < 0.0) throw InvalidArgument("f2_curve: grid values must be finite and >= 0");
    std::vector<std::pair<double, double>> out(k_grid.size());
    parallel_for(static_cast<std::int64_t>(k_grid.size()), [&](std::int64_t i) {
        const double k = k_grid[static_cast<std::size_t>(i)];
        Eigen::MatrixXd v = Eigen::MatrixXd::Identity(y.size(), y.size());
        if (k != 0.0) v.noalias() += k * (z * z.transpose());
        const GlsFit fit = gls_fit(y, x, v);
        out[static_cast<std::size_t>(i)] = {k, f2_exact(fit, block1_selector)};
    });
    return out;
}

/// Cohen's thresholds 0.02 / 0.15 / 0.35 on half-open intervals.
inline const char* f2_magnitude_label(double f2) {
    if (f2 < 0.02) return "less-than-small";
    if (f2 < 0.15) return "small";
    if (f2 < 0.35) return "medium";
    return "large";
}

/// Cohen's thresholds 0.2 / 0.5 / 0.8 on |d|, half-open intervals.
inline const char* d_magnitude_label(double d) {
    const double a = std::fabs(d);
    if (a < 0.2) return "less-than-small";
    if (a < 0.5) return "small";
    if (a < 0.8) return "medium";
    return "large";
}

} // namespace lmmes
