/*
 * This file is part of lmmes, a library for effect size estimation in
 * linear mixed models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#pragma once

#include "lmmes/distributions.hpp"
#include "lmmes/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace lmmes {

/// Generalized least squares fit of {y, X beta, sigma^2 V}.
///
/// beta_hat is the BLUE (X'V^-1X)^-1 X'V^-1 y, b_matrix the unscaled
/// coefficient covariance B = (X'V^-1X)^-1 so that Cov(beta_hat) = sigma^2 B,
/// residual_quadform the quadratic form (y - X beta_hat)' V^-1 (y - X beta_hat),
/// and sigma2_hat = residual_quadform / nu with nu = n - p.
struct GlsFit {
    Eigen::VectorXd beta_hat;
    double sigma2_hat = 0.0;
    Eigen::MatrixXd b_matrix;
    double residual_quadform = 0.0;
    Eigen::Index nu = 0;
    Eigen::Index n = 0;
    Eigen::Index p = 0;
};

/// Linear hypothesis H0: R beta = r with R of full row rank.
struct LinearHypothesis {
    Eigen::MatrixXd r_matrix;
    Eigen::VectorXd r_vector;
};

struct FTestResult {
    double f = 0.0;
    Eigen::Index df1 = 0;
    Eigen::Index df2 = 0;
    double p_value = 1.0;
};

/// GLS estimation under a known covariance structure.
///
/// Numerical path: Cholesky factorization V = L L', whitening of y and X by
/// triangular solves, then a column-pivoted QR of the whitened design. V is
/// never inverted explicitly; a Cholesky failure is the SPD check.
inline GlsFit gls_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::MatrixXd& v) {
    const Eigen::Index n = y.size();
    const Eigen::Index p = x.cols();
    if (x.rows() != n) throw DimensionMismatch("gls_fit: X has " + std::to_string(x.rows()) +
                                               " rows but y has " + std::to_string(n));
    if (v.rows() != n || v.cols() != n)
        throw DimensionMismatch("gls_fit: V must be " + std::to_string(n) + "x" + std::to_string(n));
    if (p < 1) throw InvalidArgument("gls_fit: design has no columns");
    if (n - p <= 0) throw InsufficientDf("gls_fit: nu = n - p = " + std::to_string(n - p) + " <= 0");

    Eigen::LLT<Eigen::MatrixXd> llt(v);
    if (llt.info() != Eigen::Success)
        throw CovarianceNotPD("covariance matrix is not positive definite");

    const Eigen::MatrixXd xw = llt.matrixL().solve(x);
    const Eigen::VectorXd yw = llt.matrixL().solve(y);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
    if (qr.rank() < p) {
        std::vector<std::string> dependent;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index j = qr.rank(); j < p; ++j)
            dependent.push_back("column " + std::to_string(perm[j]));
        throw RankDeficientDesign(std::move(dependent));
    }

    GlsFit fit;
    fit.n = n;
    fit.p = p;
    fit.nu = n - p;
    fit.beta_hat = qr.solve(yw);
    fit.residual_quadform = (yw - xw * fit.beta_hat).squaredNorm();
    fit.sigma2_hat = fit.residual_quadform / static_cast<double>(fit.nu);

    // B = (Xw'Xw)^-1 = P R^-1 R^-T P' from Xw P = Q R.
    Eigen::MatrixXd rfac = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    Eigen::MatrixXd rinv = rfac.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    Eigen::MatrixXd core = rinv * rinv.transpose();
    fit.b_matrix = qr.colsPermutation() * core * qr.colsPermutation().transpose();
    fit.b_matrix = 0.5 * (fit.b_matrix + fit.b_matrix.transpose()).eval();
    return fit;
}

/// F statistic for H0: R beta = r under a GLS fit,
/// F = (R bh - r)'(R B R')^-1(R bh - r) / (r sigma2_hat), with the upper-tail
/// p-value of the F(r, nu) distribution.
inline FTestResult f_statistic(const GlsFit& fit, const LinearHypothesis& hyp) {
    const Eigen::Index r = hyp.r_matrix.rows();
    if (r < 1) throw InvalidArgument("f_statistic: hypothesis has no rows");
    if (hyp.r_matrix.cols() != fit.p)
        throw DimensionMismatch("f_statistic: R has " + std::to_string(hyp.r_matrix.cols()) +
                                " columns but the fit has p = " + std::to_string(fit.p));
    if (hyp.r_vector.size() != r) throw DimensionMismatch("f_statistic: r vector length mismatch");
    if (r > fit.p) throw InvalidArgument("f_statistic: hypothesis rank exceeds p");
    if (fit.nu <= 0) throw InsufficientDf("f_statistic: nu <= 0");

    const Eigen::VectorXd diff = hyp.r_matrix * fit.beta_hat - hyp.r_vector;
    Eigen::MatrixXd rbr = hyp.r_matrix * fit.b_matrix * hyp.r_matrix.transpose();
    rbr = 0.5 * (rbr + rbr.transpose()).eval();
    Eigen::LLT<Eigen::MatrixXd> llt(rbr);
    if (llt.info() != Eigen::Success)
        throw HypothesisSingular("R B R' is singular; is the hypothesis matrix of full row rank?");

    double quad = diff.dot(llt.solve(diff));
    if (quad < 0.0) quad = 0.0; // guard against rounding on exact-null hypotheses

    FTestResult out;
    out.df1 = r;
    out.df2 = fit.nu;
    if (quad == 0.0) {
        out.f = 0.0;
        out.p_value = 1.0;
        return out;
    }
    if (fit.sigma2_hat <= 0.0) {
        out.f = std::numeric_limits<double>::infinity();
        out.p_value = 0.0;
        return out;
    }
    out.f = quad / (static_cast<double>(r) * fit.sigma2_hat);
    out.p_value = f_sf(out.f, static_cast<double>(r), static_cast<double>(fit.nu));
    return out;
}

} // namespace lmmes
