#include "lmmes/effectsize.hpp"

#include "lmmes/gls.hpp"
#include "testutil.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>

using testutil::rel_err;

namespace {

struct FourPoint {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;
    Eigen::MatrixXd r1;
};

FourPoint four_point() {
    FourPoint d;
    d.y.resize(4);
    d.y << 0, 1, 1, 2;
    d.x.resize(4, 2);
    d.x << 1, 0, 1, 0, 1, 1, 1, 1;
    d.r1.resize(1, 2);
    d.r1 << 0, 1;
    return d;
}

} // namespace

TEST_CASE("f2_exact on the four-point example", "[effectsize]") {
    const auto d = four_point();
    const auto fit = lmmes::gls_fit(d.y, d.x, Eigen::MatrixXd::Identity(4, 4));
    // numerator beta1^2 / B11 = 1, denominator RSS = 1
    REQUIRE(rel_err(lmmes::f2_exact(fit, d.r1), 1.0) < 1e-12);
}

TEST_CASE("f2_exact vanishes when the block-1 coefficient is zero", "[effectsize]") {
    Eigen::VectorXd y(4);
    y << 0, 1, 0, 1; // orthogonal to x1 = (0,0,1,1) after centering
    const auto d = four_point();
    const auto fit = lmmes::gls_fit(y, d.x, Eigen::MatrixXd::Identity(4, 4));
    REQUIRE(lmmes::f2_exact(fit, d.r1) <= 1e-20);
}

TEST_CASE("f2_exact equals F r / nu", "[effectsize][property]") {
    testutil::Rng rng(601);
    for (int trial = 0; trial < 25; ++trial) {
        const Eigen::Index n = 15 + static_cast<Eigen::Index>(rng.uniform_int(40));
        const Eigen::Index p = 2 + static_cast<Eigen::Index>(rng.uniform_int(4));
        const Eigen::Index p1 = 1 + static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(p - 1)));
        const Eigen::MatrixXd x = testutil::random_design(rng, n, p);
        const Eigen::Index q = 2 + static_cast<Eigen::Index>(rng.uniform_int(4));
        const Eigen::MatrixXd z = testutil::random_grouping(rng, n, q);
        const Eigen::MatrixXd v =
            Eigen::MatrixXd::Identity(n, n) + (2.0 * rng.uniform()) * z * z.transpose();
        const Eigen::VectorXd y = testutil::sample_gaussian(rng, x, testutil::random_vector(rng, p), v, 1.0);
        const auto fit = lmmes::gls_fit(y, x, v);

        Eigen::MatrixXd r1 = Eigen::MatrixXd::Zero(p1, p);
        for (Eigen::Index i = 0; i < p1; ++i) r1(i, 1 + i) = 1.0;
        const auto test = lmmes::f_statistic(fit, {r1, Eigen::VectorXd::Zero(p1)});
        const double expected = test.f * static_cast<double>(p1) / static_cast<double>(fit.nu);
        REQUIRE(rel_err(lmmes::f2_exact(fit, r1), expected) <= 1e-12);
    }
}

TEST_CASE("f2_exact with V = I matches the classical OLS route", "[effectsize][oracle]") {
    // 50-point instance: with D = 0 the measure must coincide with the
    // fixed-effects f^2 computed through R-squared differences.
    testutil::Rng rng(602);
    const Eigen::Index n = 50;
    const Eigen::MatrixXd x = testutil::random_design(rng, n, 4);
    const Eigen::VectorXd y = testutil::sample_gaussian(
        rng, x, testutil::random_vector(rng, 4), Eigen::MatrixXd::Identity(n, n), 1.0);
    const auto fit = lmmes::gls_fit(y, x, Eigen::MatrixXd::Identity(n, n));
    Eigen::MatrixXd r1 = Eigen::MatrixXd::Zero(1, 4);
    r1(0, 1) = 1.0;
    const double oracle = testutil::ols_f2_oracle(y, x, {1});
    REQUIRE(rel_err(lmmes::f2_exact(fit, r1), oracle) <= 1e-10);
}

TEST_CASE("f2_operational reduces to f2_exact for covhat = sigma2 B", "[effectsize]") {
    const auto d = four_point();
    const auto fit = lmmes::gls_fit(d.y, d.x, Eigen::MatrixXd::Identity(4, 4));
    const double op = lmmes::f2_operational(fit.beta_hat, fit.sigma2_hat * fit.b_matrix, fit.nu, d.r1);
    REQUIRE(rel_err(op, lmmes::f2_exact(fit, d.r1)) <= 1e-12);
}

TEST_CASE("f2_operational is inversely homogeneous in the covariance", "[effectsize]") {
    const auto d = four_point();
    const auto fit = lmmes::gls_fit(d.y, d.x, Eigen::MatrixXd::Identity(4, 4));
    const double c = 4.2;
    const double base = lmmes::f2_operational(fit.beta_hat, fit.sigma2_hat * fit.b_matrix, fit.nu, d.r1);
    const double scaled =
        lmmes::f2_operational(fit.beta_hat, c * fit.sigma2_hat * fit.b_matrix, fit.nu, d.r1);
    REQUIRE(rel_err(scaled, base / c) <= 1e-12);
}

TEST_CASE("r2_edwards arithmetic and monotonicity", "[effectsize]") {
    REQUIRE(lmmes::r2_edwards(1.0, 1.0, 1.0) == 0.5);
    REQUIRE(lmmes::r2_edwards(0.0, 2.0, 10.0) == 0.0);
    double prev = -1.0;
    for (double f = 0.0; f <= 50.0; f += 0.5) {
        const double r2 = lmmes::r2_edwards(f, 3.0, 40.0);
        REQUIRE(r2 >= 0.0);
        REQUIRE(r2 < 1.0);
        REQUIRE(r2 > prev);
        prev = r2;
    }
    REQUIRE_THROWS_AS(lmmes::r2_edwards(1.0, 0.5, 10.0), lmmes::InvalidArgument);
    REQUIRE_THROWS_AS(lmmes::r2_edwards(-1.0, 1.0, 10.0), lmmes::InvalidArgument);
}

TEST_CASE("f2_via_r2 reproduces the published arithmetic", "[effectsize]") {
    const double got = lmmes::f2_via_r2(0.1539263, 0.07418754);
    // exact quotient of the displayed operands
    REQUIRE(rel_err(got, 0.09424564313959882) <= 1e-12);
    // agreement with the displayed result to 7 significant figures
    // (relative error below 0.5 * 10^(1-7))
    REQUIRE(std::fabs(got - 0.09424569) <= 5e-7 * 0.09424569);
}

TEST_CASE("f2_via_r2 edge cases", "[effectsize]") {
    REQUIRE(lmmes::f2_via_r2(0.3, 0.3) == 0.0);
    REQUIRE(lmmes::f2_via_r2(0.5, 0.25) == 0.5);
    REQUIRE(lmmes::f2_via_r2(0.1, 0.2) < 0.0); // reported as-is, not clamped
    REQUIRE_THROWS_AS(lmmes::f2_via_r2(1.0, 0.5), lmmes::InvalidR2);
    REQUIRE_THROWS_AS(lmmes::f2_via_r2(0.5, 1.2), lmmes::InvalidR2);
    REQUIRE_THROWS_AS(lmmes::f2_via_r2(-0.1, 0.0), lmmes::InvalidR2);
}

TEST_CASE("cohens_d hand examples", "[effectsize]") {
    Eigen::VectorXd y(4), g(4);
    y << 0, 1, 1, 2;
    g << 0, 0, 1, 1;
    const auto eff = lmmes::cohens_d(y, g);
    REQUIRE(rel_err(eff.d, std::sqrt(2.0)) < 1e-12);
    REQUIRE(rel_err(eff.welch_t, std::sqrt(2.0)) < 1e-12);
    REQUIRE(rel_err(eff.welch_df, 2.0) < 1e-12);
    REQUIRE(std::fabs(eff.welch_p - 0.2928932188134525) < 1e-10);
    REQUIRE(eff.n0 == 2);
    REQUIRE(eff.n1 == 2);

    Eigen::VectorXd same(4);
    same << 1, 2, 1, 2;
    REQUIRE(lmmes::cohens_d(same, g).d == 0.0);
}

TEST_CASE("cohens_d input validation", "[effectsize]") {
    Eigen::VectorXd y(3), g(3);
    y << 1, 2, 3;
    g << 0, 1, 1;
    REQUIRE_THROWS_AS(lmmes::cohens_d(y, g), lmmes::InsufficientGroupData);
    Eigen::VectorXd g3(3);
    g3 << 0, 1, 2;
    REQUIRE_THROWS_AS(lmmes::cohens_d(y, g3), lmmes::InvalidArgument);
    REQUIRE_THROWS_AS(lmmes::cohens_d(y, Eigen::VectorXd::Zero(3)), lmmes::InvalidArgument);
}

TEST_CASE("d_star reproduces the published value", "[effectsize]") {
    const double got = lmmes::d_star(0.0017767, 1000, 1, 0.0065821);
    REQUIRE(std::fabs(got - 0.108) <= 5e-4); // 3 decimal places
    REQUIRE(lmmes::d_star(0.0, 1000, 1, 0.0065821) == 0.0);
}

TEST_CASE("d_star with no covariates equals pooled Cohen's d", "[effectsize]") {
    Eigen::VectorXd y(4), g(4);
    y << 0, 1, 1, 2;
    g << 0, 0, 1, 1;
    Eigen::MatrixXd x(4, 2);
    x << 1, 0, 1, 0, 1, 1, 1, 1;
    const auto fit = lmmes::gls_fit(y, x, Eigen::MatrixXd::Identity(4, 4));
    Eigen::MatrixXd r1(1, 2);
    r1 << 0, 1;
    const double f2 = lmmes::f2_exact(fit, r1);
    const double gamma = fit.b_matrix(1, 1); // equals 1/n0 + 1/n1 here
    REQUIRE(rel_err(gamma, 1.0) < 1e-12);
    const double ds = lmmes::d_star(f2, 4, 0, gamma);
    REQUIRE(rel_err(ds, lmmes::cohens_d(y, g).d) <= 1e-12);
}

TEST_CASE("d_star argument validation", "[effectsize]") {
    REQUIRE_THROWS_AS(lmmes::d_star(-0.1, 100, 1, 0.5), lmmes::InvalidArgument);
    REQUIRE_THROWS_AS(lmmes::d_star(0.1, 3, 1, 0.5), lmmes::InvalidArgument);
    REQUIRE_THROWS_AS(lmmes::d_star(0.1, 100, 1, 0.0), lmmes::InvalidArgument);
}

TEST_CASE("f2_curve matches element-wise recomputation", "[effectsize]") {
    testutil::Rng rng(603);
    const Eigen::Index n = 40;
    const Eigen::MatrixXd x = testutil::random_design(rng, n, 3);
    const Eigen::MatrixXd z = testutil::random_grouping(rng, n, 5);
    const Eigen::VectorXd y = testutil::sample_gaussian(
        rng, x, testutil::random_vector(rng, 3),
        Eigen::MatrixXd::Identity(n, n) + 0.8 * z * z.transpose(), 1.0);
    Eigen::MatrixXd r1 = Eigen::MatrixXd::Zero(1, 3);
    r1(0, 1) = 1.0;

    const std::vector<double> grid{0.0, 0.5, 1.0};
    const auto pts = lmmes::f2_curve(y, x, z, r1, grid);
    REQUIRE(pts.size() == 3);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        REQUIRE(pts[i].first == grid[i]);
        Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
        if (grid[i] != 0.0) v += grid[i] * z * z.transpose();
        const auto fit = lmmes::gls_fit(y, x, v);
        REQUIRE(pts[i].second == lmmes::f2_exact(fit, r1));
    }
    // k = 0 entry is the fixed-effects-only value
    const auto fit0 = lmmes::gls_fit(y, x, Eigen::MatrixXd::Identity(n, n));
    REQUIRE(pts[0].second == lmmes::f2_exact(fit0, r1));

    REQUIRE_THROWS_AS(lmmes::f2_curve(y, x, z, r1, {}), lmmes::InvalidArgument);
    REQUIRE_THROWS_AS(lmmes::f2_curve(y, x, z, r1, {-0.5}), lmmes::InvalidArgument);
}

TEST_CASE("f2_curve is independent of the thread cap", "[effectsize]") {
    testutil::Rng rng(604);
    const Eigen::Index n = 30;
    const Eigen::MatrixXd x = testutil::random_design(rng, n, 3);
    const Eigen::MatrixXd z = testutil::random_grouping(rng, n, 4);
    const Eigen::VectorXd y = testutil::sample_gaussian(
        rng, x, testutil::random_vector(rng, 3), Eigen::MatrixXd::Identity(n, n), 1.0);
    Eigen::MatrixXd r1 = Eigen::MatrixXd::Zero(1, 3);
    r1(0, 1) = 1.0;
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(0.1 * i);

    setenv("LMM_ES_THREADS", "1", 1);
    const auto serial = lmmes::f2_curve(y, x, z, r1, grid);
    setenv("LMM_ES_THREADS", "4", 1);
    const auto parallel = lmmes::f2_curve(y, x, z, r1, grid);
    unsetenv("LMM_ES_THREADS");
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        REQUIRE(serial[i].first == parallel[i].first);
        REQUIRE(serial[i].second == parallel[i].second);
    }
}

TEST_CASE("magnitude labels use half-open threshold intervals", "[effectsize]") {
    REQUIRE(std::string(lmmes::f2_magnitude_label(0.0199)) == "less-than-small");
    REQUIRE(std::string(lmmes::f2_magnitude_label(0.02)) == "small");
    REQUIRE(std::string(lmmes::f2_magnitude_label(0.1499)) == "small");
    REQUIRE(std::string(lmmes::f2_magnitude_label(0.15)) == "medium");
    REQUIRE(std::string(lmmes::f2_magnitude_label(0.35)) == "large");
    REQUIRE(std::string(lmmes::d_magnitude_label(0.19)) == "less-than-small");
    REQUIRE(std::string(lmmes::d_magnitude_label(-0.2)) == "small");
    REQUIRE(std::string(lmmes::d_magnitude_label(0.5)) == "medium");
    REQUIRE(std::string(lmmes::d_magnitude_label(-0.9)) == "large");
}
