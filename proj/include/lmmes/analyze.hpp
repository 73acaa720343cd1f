/*
 * This file is part of lmmes, a library for effect size estimation in
 * linear mixed models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#pragma once

#include "lmmes/dataset.hpp"
#include "lmmes/design.hpp"
#include "lmmes/effectsize.hpp"
#include "lmmes/errors.hpp"
#include "lmmes/gls.hpp"
#include "lmmes/varcomp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lmmes {

struct AnalysisOptions {
    /// When set, skips ratio estimation and treats V as known with these ratios.
    std::optional<Eigen::VectorXd> k_override;
    EstimateOptions estimation;
};

/// Everything the analysis pipeline produces for one model.
struct EffectSizeReport {
    // model shape
    std::string response_name;
    std::vector<std::string> block1_columns;
    std::vector<std::string> block2_columns;
    std::vector<std::string> random_factors;
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    Eigen::Index p1 = 0;
    Eigen::Index p2 = 0;
    Eigen::Index nu = 0;

    // variance components
    bool k_estimated = false; // false when a known/overridden V was used
    Eigen::VectorXd k;        // one ratio per random factor (may be empty)
    double sigma2_hat = 0.0;
    Eigen::VectorXd sigma_u2_hat; // k * sigma2_hat
    std::optional<double> criterion_value;
    std::optional<int> iterations;
    bool converged = true;

    // fixed effects
    Eigen::VectorXd beta_hat;
    std::vector<std::string> coefficient_names;

    // effect sizes
    std::optional<double> f2_exact; // set when V was known (k supplied or no random factors)
    double f2_operational = 0.0;
    double r2_ab = 0.0;
    double r2_a = 0.0;
    double f2_via_r2 = 0.0;
    std::string f2_label;

    // block-1 F test
    double f_stat = 0.0;
    Eigen::Index f_df1 = 0;
    Eigen::Index f_df2 = 0;
    double p_value = 1.0;

    // two-group quantities, present only for a single binary block-1 column
    std::optional<TwoGroupEffect> two_group;
    std::optional<double> d_star_value;
    std::string d_label;

    std::vector<std::string> warnings;
};

namespace detail {

inline bool is_binary_column(const Eigen::VectorXd& col) {
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    if (lo == hi) return false;
    for (Eigen::Index i = 0; i < col.size(); ++i)
        if (col[i] != lo && col[i] != hi) return false;
    return true;
}

struct ModelFit {
    GlsFit fit;
    Eigen::VectorXd k;
    bool estimated = false;
    std::optional<VarCompEstimate> estimate;
};

inline ModelFit fit_model(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                          const std::vector<Eigen::MatrixXd>& z_blocks, const AnalysisOptions& options) {
    ModelFit out;
    if (z_blocks.empty()) {
        out.k = Eigen::VectorXd();
    } else if (options.k_override) {
        if (options.k_override->size() != static_cast<Eigen::Index>(z_blocks.size()))
            throw InvalidArgument("k override must supply one ratio per random factor");
        out.k = *options.k_override;
    } else {
        out.estimate = estimate_ratios(y, x, z_blocks, options.estimation);
        out.k = out.estimate->ratios;
        out.estimated = true;
    }
    const Eigen::MatrixXd v = z_blocks.empty()
                                  ? Eigen::MatrixXd(Eigen::MatrixXd::Identity(y.size(), y.size()))
                                  : build_v(CovarianceStructure(out.k, z_blocks), y.size());
    out.fit = gls_fit(y, x, v);
    return out;
}

} // namespace detail

/// Runs the full pipeline: encode, estimate variance ratios (unless
/// overridden), GLS fit, block-1 effect sizes, the Edwards R^2 route with a
/// refitted reduced model, and the two-group measures when block 1 is a
/// single binary column.
inline EffectSizeReport analyze(const DatasetFrame& frame, const ModelSpec& spec,
                                const AnalysisOptions& options = {}) {
    const EncodedDesign enc = encode_design(frame, spec);
    if (enc.p1 < 1)
        throw InvalidModelSpec("block 1 is empty after encoding; nothing to measure an effect for");
    const Eigen::VectorXd& y = frame.response();

    EffectSizeReport rep;
    rep.response_name = frame.response_name();
    rep.block1_columns = spec.fixed_block1;
    rep.block2_columns = spec.fixed_block2;
    rep.random_factors = spec.random_groups;
    rep.n = enc.n();
    rep.p = enc.p();
    rep.p1 = enc.p1;
    rep.p2 = enc.p2;

    const detail::ModelFit full = detail::fit_model(y, enc.x, enc.z_blocks, options);
    const GlsFit& fit = full.fit;
    rep.nu = fit.nu;
    rep.k_estimated = full.estimated;
    rep.k = full.k;
    rep.sigma2_hat = fit.sigma2_hat;
    rep.sigma_u2_hat = full.k * fit.sigma2_hat;
    if (full.estimate) {
        rep.criterion_value = full.estimate->criterion_value;
        rep.iterations = full.estimate->iterations;
        rep.converged = full.estimate->converged;
    }
    rep.beta_hat = fit.beta_hat;
    rep.coefficient_names = enc.column_names;

    const Eigen::MatrixXd r1 = enc.block1_selector();
    rep.f2_operational = f2_operational(fit.beta_hat, fit.sigma2_hat * fit.b_matrix, fit.nu, r1);
    if (!full.estimated) rep.f2_exact = f2_exact(fit, r1);
    rep.f2_label = f2_magnitude_label(rep.f2_operational);

    const LinearHypothesis block1_hyp{r1, Eigen::VectorXd::Zero(enc.p1)};
    const FTestResult block1_test = f_statistic(fit, block1_hyp);
    rep.f_stat = block1_test.f;
    rep.f_df1 = block1_test.df1;
    rep.f_df2 = block1_test.df2;
    rep.p_value = block1_test.p_value;

    // Edwards R^2 for the full model: all non-intercept coefficients.
    const Eigen::MatrixXd r_full = enc.nonintercept_selector();
    const FTestResult full_test = f_statistic(fit, {r_full, Eigen::VectorXd::Zero(enc.p() - 1)});
    rep.r2_ab = r2_edwards(full_test.f, static_cast<double>(enc.p() - 1), static_cast<double>(fit.nu));

    // Reduced model without block 1. Estimated ratios are refitted on the
    // reduced design; an overridden or absent k is shared by both models.
    if (enc.p2 > 0) {
        Eigen::MatrixXd x_reduced(enc.n(), 1 + enc.p2);
        x_reduced.col(0) = enc.x.col(0);
        for (Eigen::Index j = 0; j < enc.p2; ++j) x_reduced.col(1 + j) = enc.x.col(1 + enc.p1 + j);
        const detail::ModelFit reduced = detail::fit_model(y, x_reduced, enc.z_blocks, options);
        Eigen::MatrixXd r_red = Eigen::MatrixXd::Zero(enc.p2, 1 + enc.p2);
        for (Eigen::Index j = 0; j < enc.p2; ++j) r_red(j, 1 + j) = 1.0;
        const FTestResult red_test = f_statistic(reduced.fit, {r_red, Eigen::VectorXd::Zero(enc.p2)});
        rep.r2_a = r2_edwards(red_test.f, static_cast<double>(enc.p2), static_cast<double>(reduced.fit.nu));
    } else {
        rep.r2_a = 0.0; // intercept-only reduced model explains nothing
    }
    rep.f2_via_r2 = f2_via_r2(rep.r2_ab, rep.r2_a);
    if (rep.f2_via_r2 < 0.0)
        rep.warnings.push_back("f2_via_r2 is negative: the refitted reduced model attains a larger "
                               "R2 than the full model");

    // d and d* only apply to a single binary block-1 column.
    if (enc.p1 == 1 && detail::is_binary_column(enc.x.col(1))) {
        rep.two_group = cohens_d(y, enc.x.col(1));
        rep.d_label = d_magnitude_label(rep.two_group->d);
        const double gamma = fit.b_matrix(1, 1);
        rep.d_star_value = d_star(rep.f2_operational, rep.n, rep.p2, gamma);
    } else {
        rep.warnings.push_back("d and d* omitted: block 1 is not a single binary column");
    }
    return rep;
}

/// Curve configuration and output for the k sweep of f^2.
struct CurveResult {
    std::vector<std::pair<double, double>> points; // (k, f2) in grid order
    std::optional<std::pair<double, double>> estimated_point; // (k_hat, f2(k_hat))
};

/// Evaluates f^2(k) over a grid for a model with exactly one random factor.
/// When no k override is given, the REML estimate k_hat is appended as an
/// annotated extra point.
inline CurveResult curve(const DatasetFrame& frame, const ModelSpec& spec, const std::vector<double>& k_grid,
                         const AnalysisOptions& options = {}) {
    const EncodedDesign enc = encode_design(frame, spec);
    if (enc.p1 < 1) throw InvalidModelSpec("block 1 is empty after encoding");
    if (enc.z_blocks.size() != 1)
        throw InvalidModelSpec("the f2 curve requires exactly one random factor");
    if (k_grid.empty()) throw InvalidArgument("empty k grid");
    const Eigen::VectorXd& y = frame.response();
    const Eigen::MatrixXd r1 = enc.block1_selector();

    CurveResult out;
    out.points = f2_curve(y, enc.x, enc.z_blocks.front(), r1, k_grid);
    if (!options.k_override) {
        const VarCompEstimate est = estimate_ratios(y, enc.x, enc.z_blocks, options.estimation);
        const auto pts = f2_curve(y, enc.x, enc.z_blocks.front(), r1, {est.ratios[0]});
        out.estimated_point = pts.front();
    }
    return out;
}

} // namespace lmmes
