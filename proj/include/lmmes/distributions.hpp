/*
 * This file is part of lmmes, a library for effect size estimation in
 * linear mixed models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#pragma once

#include "lmmes/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace lmmes {

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

// Continued fraction for the regularized incomplete beta function,
// evaluated with the modified Lentz algorithm.
inline double ibeta_continued_fraction(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 3e-16;
    constexpr int max_iter = 500;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw NumericalFailure("incomplete beta continued fraction did not converge (a=" +
                           std::to_string(a) + ", b=" + std::to_string(b) + ", x=" + std::to_string(x) + ")");
}

} // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double reg_inc_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("reg_inc_beta: shape parameters must be positive");
    if (std::isnan(x)) throw InvalidArgument("reg_inc_beta: x is NaN");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0))
        return std::exp(log_front) * detail::ibeta_continued_fraction(x, a, b) / a;
    return 1.0 - std::exp(log_front) * detail::ibeta_continued_fraction(1.0 - x, b, a) / b;
}

/// Upper tail P(F_{d1,d2} > f). Evaluated directly on the complement scale
/// so small p-values do not lose precision to cancellation.
inline double f_sf(double f, double d1, double d2) {
    if (!(d1 > 0.0) || !(d2 > 0.0)) throw InvalidArgument("f_sf: degrees of freedom must be positive");
    if (std::isnan(f)) throw InvalidArgument("f_sf: statistic is NaN");
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    const double x = d2 / (d2 + d1 * f);
    return reg_inc_beta(x, 0.5 * d2, 0.5 * d1);
}

/// Lower tail P(F_{d1,d2} <= f).
inline double f_cdf(double f, double d1, double d2) {
    if (!(d1 > 0.0) || !(d2 > 0.0)) throw InvalidArgument("f_cdf: degrees of freedom must be positive");
    if (std::isnan(f)) throw InvalidArgument("f_cdf: statistic is NaN");
    if (f <= 0.0) return 0.0;
    if (std::isinf(f)) return 1.0;
    const double x = d1 * f / (d1 * f + d2);
    return reg_inc_beta(x, 0.5 * d1, 0.5 * d2);
}

/// Upper tail P(T_df > t) of the Student t distribution.
inline double t_sf(double t, double df) {
    if (!(df > 0.0)) throw InvalidArgument("t_sf: degrees of freedom must be positive");
    if (std::isnan(t)) throw InvalidArgument("t_sf: statistic is NaN");
    if (std::isinf(t)) return t > 0.0 ? 0.0 : 1.0;
    const double half_tail = 0.5 * reg_inc_beta(df / (df + t * t), 0.5 * df, 0.5);
    return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

} // namespace lmmes
