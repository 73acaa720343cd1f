/*
 * This file is part of lmmes, a library for effect size estimation in
 * linear mixed models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace lmmes::detail {

struct ScalarMinResult {
    double x = 0.0;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Brent's method on [a, b]: golden section with parabolic interpolation.
/// Stops when the bracket around the minimizer shrinks below `xtol`, or when
/// successive best function values change by less than `ftol`.
inline ScalarMinResult brent_minimize(const std::function<double(double)>& f, double a, double b,
                                      double xtol, double ftol, int max_iter) {
    constexpr double golden = 0.3819660112501051; // (3 - sqrt(5)) / 2
    const double eps = std::sqrt(std::numeric_limits<double>::epsilon());

    double x = a + golden * (b - a);
    double w = x, v = x;
    double fx = f(x);
    double fw = fx, fv = fx;
    double d = 0.0, e = 0.0;

    ScalarMinResult res;
    for (int iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter + 1;
        const double mid = 0.5 * (a + b);
        const double tol1 = xtol + eps * std::fabs(x);
        const double tol2 = 2.0 * tol1;
        if (std::fabs(x - mid) <= tol2 - 0.5 * (b - a)) {
            res.converged = true;
            break;
        }

        bool use_golden = true;
        if (std::fabs(e) > tol1) {
            // parabolic fit through (v, w, x)
            double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double pnum = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) pnum = -pnum;
            else q = -q;
            const double e_prev = e;
            e = d;
            if (std::fabs(pnum) < std::fabs(0.5 * q * e_prev) && pnum > q * (a - x) && pnum < q * (b - x)) {
                d = pnum / q;
                const double u_try = x + d;
                if (u_try - a < tol2 || b - u_try < tol2) d = (x < mid) ? tol1 : -tol1;
                use_golden = false;
            }
        }
        if (use_golden) {
            e = (x < mid) ? (b - x) : (a - x);
            d = golden * e;
        }

        const double u = x + ((std::fabs(d) >= tol1) ? d : (d > 0.0 ? tol1 : -tol1));
        const double fu = f(u);
        if (fu <= fx) {
            if (std::fabs(fu - fx) < ftol && iter > 4) {
                if (u < x) b = x; else a = x;
                v = w; fv = fw; w = x; fw = fx; x = u; fx = fu;
                res.converged = true;
                break;
            }
            if (u < x) b = x; else a = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    res.x = x;
    res.fx = fx;
    return res;
}

struct SimplexMinResult {
    Eigen::VectorXd x;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Nelder-Mead with standard coefficients. Converged when the function
/// spread over the simplex is below `ftol` and its diameter below `xtol`.
inline SimplexMinResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0, double step, double ftol, double xtol,
                                    int max_iter) {
    const Eigen::Index dim = x0.size();
    const int npts = static_cast<int>(dim) + 1;
    std::vector<Eigen::VectorXd> pts(npts, x0);
    for (Eigen::Index i = 0; i < dim; ++i) pts[static_cast<std::size_t>(i) + 1][i] += step;
    std::vector<double> fv(npts);
    for (int i = 0; i < npts; ++i) fv[static_cast<std::size_t>(i)] = f(pts[static_cast<std::size_t>(i)]);

    auto order = [&]() {
        std::vector<int> idx(npts);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int u, int w) { return fv[u] < fv[w]; });
        std::vector<Eigen::VectorXd> p2(npts);
        std::vector<double> f2(npts);
        for (int i = 0; i < npts; ++i) {
            p2[i] = pts[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
            f2[i] = fv[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
        }
        pts.swap(p2);
        fv.swap(f2);
    };

    SimplexMinResult res;
    for (int iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter + 1;
        order();

        double diameter = 0.0;
        for (int i = 1; i < npts; ++i)
            diameter = std::max(diameter, (pts[static_cast<std::size_t>(i)] - pts[0]).lpNorm<Eigen::Infinity>());
        if (std::fabs(fv[static_cast<std::size_t>(npts - 1)] - fv[0]) < ftol && diameter < xtol) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (int i = 0; i < npts - 1; ++i) centroid += pts[static_cast<std::size_t>(i)];
        centroid /= static_cast<double>(npts - 1);

        const Eigen::VectorXd worst = pts[static_cast<std::size_t>(npts - 1)];
        const double f_worst = fv[static_cast<std::size_t>(npts - 1)];
        const double f_best = fv[0];
        const double f_second_worst = fv[static_cast<std::size_t>(npts - 2)];

        const Eigen::VectorXd refl = centroid + (centroid - worst);
        const double f_refl = f(refl);
        if (f_refl < f_best) {
            const Eigen::VectorXd expd = centroid + 2.0 * (centroid - worst);
            const double f_expd = f(expd);
            if (f_expd < f_refl) {
                pts[static_cast<std::size_t>(npts - 1)] = expd;
                fv[static_cast<std::size_t>(npts - 1)] = f_expd;
            } else {
                pts[static_cast<std::size_t>(npts - 1)] = refl;
                fv[static_cast<std::size_t>(npts - 1)] = f_refl;
            }
            continue;
        }
        if (f_refl < f_second_worst) {
            pts[static_cast<std::size_t>(npts - 1)] = refl;
            fv[static_cast<std::size_t>(npts - 1)] = f_refl;
            continue;
        }
        const Eigen::VectorXd contr = (f_refl < f_worst) ? (centroid + 0.5 * (refl - centroid)).eval()
                                                         : (centroid + 0.5 * (worst - centroid)).eval();
        const double f_contr = f(contr);
        if (f_contr < std::min(f_refl, f_worst)) {
            pts[static_cast<std::size_t>(npts - 1)] = contr;
            fv[static_cast<std::size_t>(npts - 1)] = f_contr;
            continue;
        }
        // shrink toward the best vertex
        for (int i = 1; i < npts; ++i) {
            pts[static_cast<std::size_t>(i)] = pts[0] + 0.5 * (pts[static_cast<std::size_t>(i)] - pts[0]);
            fv[static_cast<std::size_t>(i)] = f(pts[static_cast<std::size_t>(i)]);
        }
    }
    order();
    res.x = pts[0];
    res.fx = fv[0];
    return res;
}

} // namespace lmmes::detail
