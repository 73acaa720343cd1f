/*
 * This file is part of lmmes, a library for effect size estimation in
 * linear mixed models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#pragma once

#include "lmmes/errors.hpp"
#include "lmmes/optim.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace lmmes {

/// REML estimate of the variance ratios k_i = sigma_i^2 / sigma^2.
struct VarCompEstimate {
    Eigen::VectorXd ratios;
    double sigma2_hat = 0.0;
    Eigen::VectorXd component_variances; // sigma_i^2 = k_i * sigma2_hat
    double criterion_value = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Optimizer hit its iteration cap; carries the best iterate found.
class ConvergenceFailure : public NumericalError {
public:
    ConvergenceFailure(const std::string& msg, VarCompEstimate best)
        : NumericalError(msg), best_(std::move(best)) {}
    const VarCompEstimate& best_iterate() const noexcept { return best_; }

private:
    VarCompEstimate best_;
};

enum class OptimMethod { Auto, Scalar, Simplex };

struct EstimateOptions {
    OptimMethod method = OptimMethod::Auto;
    int scalar_max_iter = 200;
    int simplex_max_iter = 500;
    double scalar_xtol = 1e-8; // absolute, on the log(1 + k) scale
    double criterion_tol = 1e-10;
    double boundary_zero_tol = 1e-10;
    double k_max = 1e6;
};

namespace detail {

/// Evaluates the profiled REML criterion
///   log det V + log det(X'V^-1 X) + nu * log((y - X bh)'V^-1(y - X bh))
/// as a function of the variance ratios. With a single grouping factor the
/// indicator columns of Z are orthogonal, so V = I + k Z Z' is whitened in
/// O(n p) per evaluation via group sums; otherwise V is materialized densely
/// and factorized per evaluation.
class ProfileEvaluator {
public:
    struct Snapshot {
        Eigen::VectorXd beta;
        double residual_quadform = 0.0;
        double sigma2 = 0.0;
        double logdet_v = 0.0;
        double logdet_xtvx = 0.0;
    };

    ProfileEvaluator(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                     const std::vector<Eigen::MatrixXd>& z_blocks)
        : y_(y), x_(x), z_blocks_(z_blocks) {
        const Eigen::Index n = y.size();
        if (x.rows() != n) throw DimensionMismatch("profile evaluator: X row count does not match y");
        if (z_blocks.empty()) throw InvalidArgument("profile evaluator: at least one grouping factor required");
        for (const auto& z : z_blocks)
            if (z.rows() != n) throw DimensionMismatch("profile evaluator: Z row count does not match y");
        nu_ = n - x.cols();
        if (nu_ <= 0) throw InsufficientDf("profile evaluator: nu = n - p <= 0");
        {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
            if (qr.rank() < x.cols()) throw RankDeficientDesign({});
        }
        single_ = (z_blocks.size() == 1);
        if (single_) {
            const auto& z = z_blocks.front();
            const Eigen::Index q = z.cols();
            group_of_.resize(static_cast<std::size_t>(n));
            group_sizes_ = Eigen::VectorXd::Zero(q);
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::Index g = 0;
                z.row(i).maxCoeff(&g);
                group_of_[static_cast<std::size_t>(i)] = g;
                group_sizes_[g] += 1.0;
            }
            group_x_sums_ = z.transpose() * x;   // q x p
            group_y_sums_ = z.transpose() * y;   // q
        }
    }

    Eigen::Index nu() const noexcept { return nu_; }

    double criterion(const Eigen::VectorXd& k) const {
        const Snapshot s = at(k);
        return s.logdet_v + s.logdet_xtvx + static_cast<double>(nu_) * std::log(s.residual_quadform);
    }

    Snapshot at(const Eigen::VectorXd& k) const {
        if (k.size() != static_cast<Eigen::Index>(z_blocks_.size()))
            throw DimensionMismatch("ratio vector length does not match the number of grouping factors");
        for (Eigen::Index i = 0; i < k.size(); ++i)
            if (!std::isfinite(k[i]) || k[i] < 0.0)
                throw InvalidArgument("variance ratios must be finite and >= 0");
        return single_ ? at_single(k[0]) : at_dense(k);
    }

private:
    Snapshot at_single(double k) const {
        const Eigen::Index n = y_.size();
        const Eigen::Index q = group_sizes_.size();
        Eigen::VectorXd scale(q); // ((1 + k n_j)^{-1/2} - 1) / n_j
        double logdet_v = 0.0;
        for (Eigen::Index j = 0; j < q; ++j) {
            const double w = 1.0 + k * group_sizes_[j];
            logdet_v += std::log(w);
            scale[j] = (1.0 / std::sqrt(w) - 1.0) / group_sizes_[j];
        }
        Eigen::MatrixXd xw = x_;
        Eigen::VectorXd yw = y_;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index g = group_of_[static_cast<std::size_t>(i)];
            xw.row(i) += scale[g] * group_x_sums_.row(g);
            yw[i] += scale[g] * group_y_sums_[g];
        }
        return finish(xw, yw, logdet_v);
    }

    Snapshot at_dense(const Eigen::VectorXd& k) const {
        const Eigen::Index n = y_.size();
        Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
        for (std::size_t i = 0; i < z_blocks_.size(); ++i) {
            if (k[static_cast<Eigen::Index>(i)] == 0.0) continue;
            v.noalias() += k[static_cast<Eigen::Index>(i)] * (z_blocks_[i] * z_blocks_[i].transpose());
        }
        Eigen::LLT<Eigen::MatrixXd> llt(v);
        if (llt.info() != Eigen::Success)
            throw NumericalFailure("covariance factorization failed during variance-ratio profiling");
        double logdet_v = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) logdet_v += 2.0 * std::log(llt.matrixL()(i, i));
        const Eigen::MatrixXd xw = llt.matrixL().solve(x_);
        const Eigen::VectorXd yw = llt.matrixL().solve(y_);
        return finish(xw, yw, logdet_v);
    }

    Snapshot finish(const Eigen::MatrixXd& xw, const Eigen::VectorXd& yw, double logdet_v) const {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
        Snapshot s;
        s.logdet_v = logdet_v;
        s.beta = qr.solve(yw);
        s.residual_quadform = (yw - xw * s.beta).squaredNorm();
        s.sigma2 = s.residual_quadform / static_cast<double>(nu_);
        double logdet_xtvx = 0.0;
        for (Eigen::Index j = 0; j < xw.cols(); ++j)
            logdet_xtvx += 2.0 * std::log(std::fabs(qr.matrixR()(j, j)));
        s.logdet_xtvx = logdet_xtvx;
        if (!std::isfinite(s.logdet_v) || !std::isfinite(s.logdet_xtvx) ||
            !std::isfinite(s.residual_quadform) || s.residual_quadform <= 0.0)
            throw NumericalFailure("non-finite intermediate in the REML profile criterion");
        return s;
    }

    Eigen::VectorXd y_;
    Eigen::MatrixXd x_;
    std::vector<Eigen::MatrixXd> z_blocks_;
    Eigen::Index nu_ = 0;
    bool single_ = false;
    std::vector<Eigen::Index> group_of_;
    Eigen::VectorXd group_sizes_;
    Eigen::MatrixXd group_x_sums_;
    Eigen::VectorXd group_y_sums_;
};

} // namespace detail

/// Profiled REML criterion, -2 * restricted log-likelihood up to an additive
/// constant, at the given variance ratios.
inline double profile_criterion(const Eigen::VectorXd& k, const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& x, const std::vector<Eigen::MatrixXd>& z_blocks) {
    return detail::ProfileEvaluator(y, x, z_blocks).criterion(k);
}

/// Minimizes the REML profile criterion over k in [0, inf)^{m-1}.
///
/// A single ratio is minimized by Brent's method on the log(1 + k) scale; the
/// boundary k = 0 is the lower edge of the bracket, so no constrained
/// machinery is needed. Several ratios use Nelder-Mead restarted from every
/// combination of {0.1, 1, 10} per coordinate, with negative coordinates
/// pushed back by a quadratic penalty. Ratios below `boundary_zero_tol` are
/// reported as exactly 0.
inline VarCompEstimate estimate_ratios(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                       const std::vector<Eigen::MatrixXd>& z_blocks,
                                       const EstimateOptions& options = {}) {
    const Eigen::Index m1 = static_cast<Eigen::Index>(z_blocks.size());
    if (m1 < 1) throw InvalidArgument("estimate_ratios: at least one grouping factor required");
    const double y_center_ss = (y.array() - y.mean()).matrix().squaredNorm();
    if (y_center_ss <= 0.0) throw DegenerateResponse("response has zero variance");

    const detail::ProfileEvaluator evaluator(y, x, z_blocks);

    OptimMethod method = options.method;
    if (method == OptimMethod::Auto) method = (m1 == 1) ? OptimMethod::Scalar : OptimMethod::Simplex;
    if (method == OptimMethod::Scalar && m1 != 1)
        throw InvalidArgument("estimate_ratios: scalar optimizer requires exactly one grouping factor");

    // optimization variable t_i = log(1 + k_i)
    auto k_of_t = [](const Eigen::VectorXd& t) {
        Eigen::VectorXd k(t.size());
        for (Eigen::Index i = 0; i < t.size(); ++i) k[i] = std::expm1(std::max(t[i], 0.0));
        return k;
    };

    Eigen::VectorXd t_best;
    double f_best = 0.0;
    bool converged = false;
    int iterations = 0;

    if (method == OptimMethod::Scalar) {
        auto g = [&](double t) {
            Eigen::VectorXd kv(1);
            kv[0] = std::expm1(std::max(t, 0.0));
            return evaluator.criterion(kv);
        };
        const auto res = detail::brent_minimize(g, 0.0, std::log1p(options.k_max), options.scalar_xtol,
                                                options.criterion_tol, options.scalar_max_iter);
        t_best = Eigen::VectorXd::Constant(1, res.x);
        f_best = res.fx;
        converged = res.converged;
        iterations = res.iterations;
    } else {
        const double starts[] = {0.1, 1.0, 10.0};
        std::vector<Eigen::VectorXd> start_points;
        Eigen::VectorXd cur = Eigen::VectorXd::Zero(m1);
        std::function<void(Eigen::Index)> expand = [&](Eigen::Index dim) {
            if (dim == m1) {
                start_points.push_back(cur);
                return;
            }
            for (double s : starts) {
                cur[dim] = std::log1p(s);
                expand(dim + 1);
            }
        };
        expand(0);

        const double penalty_scale = 1e8;
        auto g = [&](const Eigen::VectorXd& t) {
            double penalty = 0.0;
            for (Eigen::Index i = 0; i < t.size(); ++i)
                if (t[i] < 0.0) penalty += penalty_scale * t[i] * t[i];
            return evaluator.criterion(k_of_t(t)) + penalty;
        };

        bool have = false;
        for (const auto& t0 : start_points) {
            const auto res = detail::nelder_mead(g, t0, 0.25, options.criterion_tol, 1e-8,
                                                 options.simplex_max_iter);
            iterations += res.iterations;
            const Eigen::VectorXd k_res = k_of_t(res.x);
            auto lex_less = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
                for (Eigen::Index i = 0; i < a.size(); ++i) {
                    if (a[i] < b[i]) return true;
                    if (a[i] > b[i]) return false;
                }
                return false;
            };
            const bool better = !have || res.fx < f_best ||
                                (res.fx == f_best && lex_less(k_res, k_of_t(t_best)));
            if (better) {
                t_best = res.x;
                f_best = res.fx;
                converged = res.converged;
                have = true;
            }
        }
    }

    // Boundary polish: compare against candidates with small ratios snapped
    // to zero; the optimizer cannot land exactly on the bracket edge.
    Eigen::VectorXd k_hat = k_of_t(t_best);
    double crit_hat = evaluator.criterion(k_hat);
    std::vector<Eigen::VectorXd> candidates;
    {
        Eigen::VectorXd snapped = k_hat;
        bool any = false;
        for (Eigen::Index i = 0; i < snapped.size(); ++i)
            if (snapped[i] > 0.0 && snapped[i] < 1e-6) {
                snapped[i] = 0.0;
                any = true;
            }
        if (any) candidates.push_back(snapped);
        if (!k_hat.isZero()) candidates.push_back(Eigen::VectorXd::Zero(m1));
    }
    for (const auto& cand : candidates) {
        const double c = evaluator.criterion(cand);
        if (c <= crit_hat) {
            k_hat = cand;
            crit_hat = c;
        }
    }
    for (Eigen::Index i = 0; i < k_hat.size(); ++i)
        if (k_hat[i] < options.boundary_zero_tol) k_hat[i] = 0.0;

    const auto snapshot = evaluator.at(k_hat);
    VarCompEstimate est;
    est.ratios = k_hat;
    est.sigma2_hat = snapshot.sigma2;
    est.component_variances = k_hat * snapshot.sigma2;
    est.criterion_value = crit_hat;
    est.converged = converged;
    est.iterations = iterations;
    if (!converged)
        throw ConvergenceFailure("variance-ratio optimization hit the iteration cap", est);
    return est;
}

} // namespace lmmes
