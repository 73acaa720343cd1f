/*
 * This file is part of lmmes, a library for effect size estimation in
 * linear mixed models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#pragma once

#include "lmmes/dataset.hpp"
#include "lmmes/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace lmmes {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// mt19937_64 stream with implementation-independent uniform and normal
/// draws (bit-shift uniforms, Box-Muller normals), so the generated data
/// depends only on the seed, not on the standard library's distributions.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on (0, 1].
    double uniform() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

    /// Uniform integer on [0, bound).
    std::uint64_t uniform_int(std::uint64_t bound) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t rem = (max % bound + 1) % bound; // 2^64 mod bound
        std::uint64_t x;
        do {
            x = engine_();
        } while (rem != 0 && x > max - rem);
        return x % bound;
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace detail

/// Parameters for the synthetic random-intercept data sets. The response is
///   y = beta0 + beta1 X1 + beta2 X2 + u_{Z(i)} + e,
/// with level effects u ~ N(0, sigma_u2) and noise e ~ N(0, sigma2). Levels
/// with larger u receive a lower X1 prevalence (strength `group_link`), and
/// X2 correlates positively with X1 (strength `x2_x1_corr`).
struct GenConfig {
    Eigen::Index n = 0;
    double p_group1 = 0.5; // marginal P(X1 = 1)
    double beta0 = 0.0;    // no hidden defaults: always set the betas explicitly
    double beta1 = 0.0;
    double beta2 = 0.0;
    double sigma2 = 1.0;
    double sigma_u2 = 0.0;
    Eigen::Index n_levels = 1;
    double x2_mean = 0.0;
    double x2_sd = 1.0;
    double x2_x1_corr = 0.4;
    double group_link = 0.5;
    std::uint64_t seed = 0;
};

namespace detail {

inline void validate(const GenConfig& cfg) {
    if (cfg.n_levels < 1 || cfg.n < cfg.n_levels)
        throw InvalidArgument("generate: need n >= n_levels >= 1 (n = " + std::to_string(cfg.n) +
                              ", n_levels = " + std::to_string(cfg.n_levels) + ")");
    if (!(cfg.p_group1 >= 0.0 && cfg.p_group1 <= 1.0))
        throw InvalidArgument("generate: p_group1 must lie in [0, 1]");
    if (!(cfg.sigma2 >= 0.0) || !(cfg.sigma_u2 >= 0.0))
        throw InvalidArgument("generate: variances must be >= 0");
    if (!(cfg.x2_sd >= 0.0)) throw InvalidArgument("generate: x2_sd must be >= 0");
    if (!(std::fabs(cfg.x2_x1_corr) <= 1.0))
        throw InvalidArgument("generate: x2_x1_corr must lie in [-1, 1]");
    for (double v : {cfg.beta0, cfg.beta1, cfg.beta2, cfg.x2_mean, cfg.group_link})
        if (!std::isfinite(v)) throw InvalidArgument("generate: parameters must be finite");
}

inline std::string level_label(Eigen::Index index, Eigen::Index n_levels) {
    std::string digits = std::to_string(index + 1);
    const std::size_t width = std::to_string(n_levels).size();
    while (digits.size() < width) digits.insert(digits.begin(), '0');
    return "g" + digits;
}

} // namespace detail

/// Deterministic generator: one independent RNG stream per column, derived
/// from the seed, so adding a column leaves the others untouched.
inline DatasetFrame generate(const GenConfig& cfg) {
    detail::validate(cfg);
    const Eigen::Index n = cfg.n;
    const Eigen::Index q = cfg.n_levels;

    std::uint64_t chain = cfg.seed;
    detail::RandomStream level_stream(detail::splitmix64(chain));
    detail::RandomStream u_stream(detail::splitmix64(chain));
    detail::RandomStream x1_stream(detail::splitmix64(chain));
    detail::RandomStream x2_stream(detail::splitmix64(chain));
    detail::RandomStream noise_stream(detail::splitmix64(chain));

    // Level assignment: every level appears at least once, the remainder is
    // uniform, then a Fisher-Yates shuffle restores exchangeability.
    std::vector<Eigen::Index> level(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < q; ++i) level[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index i = q; i < n; ++i)
        level[static_cast<std::size_t>(i)] =
            static_cast<Eigen::Index>(level_stream.uniform_int(static_cast<std::uint64_t>(q)));
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(level_stream.uniform_int(static_cast<std::uint64_t>(i + 1)));
        std::swap(level[static_cast<std::size_t>(i)], level[static_cast<std::size_t>(j)]);
    }

    const double sigma_u = std::sqrt(cfg.sigma_u2);
    Eigen::VectorXd u(q);
    for (Eigen::Index j = 0; j < q; ++j) u[j] = sigma_u * u_stream.normal();

    // Per-level X1 prevalence: levels with larger u get lower odds of X1 = 1.
    Eigen::VectorXd prob1 = Eigen::VectorXd::Constant(q, cfg.p_group1);
    if (sigma_u > 0.0 && cfg.p_group1 > 0.0 && cfg.p_group1 < 1.0 && cfg.group_link != 0.0) {
        const double logit = std::log(cfg.p_group1 / (1.0 - cfg.p_group1));
        for (Eigen::Index j = 0; j < q; ++j) {
            const double eta = logit - cfg.group_link * (u[j] / sigma_u);
            prob1[j] = 1.0 / (1.0 + std::exp(-eta));
        }
    }

    Eigen::VectorXd x1(n);
    for (Eigen::Index i = 0; i < n; ++i)
        x1[i] = (x1_stream.uniform() <= prob1[level[static_cast<std::size_t>(i)]]) ? 1.0 : 0.0;

    const double p = cfg.p_group1;
    const double x1_sd = (p > 0.0 && p < 1.0) ? std::sqrt(p * (1.0 - p)) : 0.0;
    const double rho = cfg.x2_x1_corr;
    const double resid_scale = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    Eigen::VectorXd x2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double linked = (x1_sd > 0.0) ? rho * (x1[i] - p) / x1_sd : 0.0;
        x2[i] = cfg.x2_mean + cfg.x2_sd * (linked + resid_scale * x2_stream.normal());
    }

    const double sigma = std::sqrt(cfg.sigma2);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i)
        y[i] = cfg.beta0 + cfg.beta1 * x1[i] + cfg.beta2 * x2[i] + u[level[static_cast<std::size_t>(i)]] +
               sigma * noise_stream.normal();

    CategoricalColumn z;
    z.levels.reserve(static_cast<std::size_t>(q));
    for (Eigen::Index j = 0; j < q; ++j) z.levels.push_back(detail::level_label(j, q));
    z.codes.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        z.codes.push_back(static_cast<std::int32_t>(level[static_cast<std::size_t>(i)]));

    std::vector<std::pair<std::string, Column>> columns;
    columns.emplace_back("Y", NumericColumn{std::move(y)});
    columns.emplace_back("X1", NumericColumn{std::move(x1)});
    columns.emplace_back("X2", NumericColumn{std::move(x2)});
    columns.emplace_back("Z", std::move(z));
    return DatasetFrame(std::move(columns), "Y");
}

} // namespace lmmes
