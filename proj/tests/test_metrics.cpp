#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sdehnn/metrics.hpp"
#include "sdehnn/normal.hpp"

using namespace sdehnn;

namespace {

// Bisection inverse of the normal CDF, independent of the closed-form
// implementation under test.
double inverse_cdf_bisect(double p) {
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (normal_cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Brute-force metric reimplementations.
double cwce_brute(const std::vector<double>& levels, const std::vector<double>& cov) {
    double out = 0.0;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        out += levels[k] * std::fabs(cov[k] - levels[k]);
    }
    return out;
}

double ecpe_brute(const std::vector<double>& levels, const std::vector<double>& cov) {
    double out = 0.0;
    for (std::size_t k = 0; k < levels.size(); ++k) out += std::fabs(cov[k] - levels[k]);
    return out / static_cast<double>(levels.size());
}

double rmse_brute(const std::vector<double>& y, const std::vector<double>& yh) {
    double out = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) out += (y[i] - yh[i]) * (y[i] - yh[i]);
    return std::sqrt(out / static_cast<double>(y.size()));
}

double r2_brute(const std::vector<double>& y, const std::vector<double>& yh) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sse += (y[i] - yh[i]) * (y[i] - yh[i]);
        sst += (y[i] - mean) * (y[i] - mean);
    }
    return 1.0 - sse / sst;
}

}  // namespace

TEST_CASE("inverse normal cdf against bisection oracle") {
    for (double p : {1e-6, 1e-3, 0.025, 0.2, 0.5, 0.7, 0.975, 0.999, 1.0 - 1e-6}) {
        CHECK(inverse_normal_cdf(p) == doctest::Approx(inverse_cdf_bisect(p)).epsilon(1e-9));
    }
    CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0));
    CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK_THROWS_AS(inverse_normal_cdf(0.0), ConfigError);
    CHECK_THROWS_AS(inverse_normal_cdf(1.0), ConfigError);
}

TEST_CASE("normal cdf and inverse are mutual inverses") {
    for (double x : {-3.0, -1.0, 0.0, 0.5, 2.5}) {
        CHECK(inverse_normal_cdf(normal_cdf(x)) == doctest::Approx(x).epsilon(1e-9));
    }
}

TEST_CASE("standard grid") {
    const ConfidenceGrid grid = ConfidenceGrid::standard();
    REQUIRE(grid.levels.size() == 19);
    CHECK(grid.levels.front() == doctest::Approx(0.05));
    CHECK(grid.levels.back() == doctest::Approx(0.95));
    ConfidenceGrid bad{{0.5, 0.3}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("metrics match brute-force oracles on random inputs") {
    std::mt19937 gen(77);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> norm;
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = 2 + static_cast<int>(gen() % 18);
        ConfidenceGrid grid;
        for (int i = 0; i < k; ++i) {
            grid.levels.push_back((i + 1) / static_cast<double>(k + 1));
        }
        std::vector<double> cov(k);
        for (double& c : cov) c = unif(gen);
        CHECK(cwce(grid, cov) == doctest::Approx(cwce_brute(grid.levels, cov)).epsilon(1e-12));
        CHECK(ecpe(grid, cov) == doctest::Approx(ecpe_brute(grid.levels, cov)).epsilon(1e-12));

        const int n = 3 + static_cast<int>(gen() % 30);
        std::vector<double> y(n), yh(n);
        for (int i = 0; i < n; ++i) {
            y[i] = norm(gen);
            yh[i] = norm(gen);
        }
        CHECK(rmse(y, yh) == doctest::Approx(rmse_brute(y, yh)).epsilon(1e-12));
        CHECK(r2(y, yh) == doctest::Approx(r2_brute(y, yh)).epsilon(1e-12));
        const double c = cwce(grid, cov);
        const double sse = rmse(y, yh) * rmse(y, yh) * n;
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= n;
        double sst = 0.0;
        for (double v : y) sst += (v - mean) * (v - mean);
        CHECK(r_cwce(y, yh, c) == doctest::Approx(sse / sst * c).epsilon(1e-10));

        std::vector<std::pair<double, double>> intervals(n);
        double widths = 0.0;
        for (auto& [lo, hi] : intervals) {
            lo = norm(gen);
            hi = lo + unif(gen);
            widths += hi - lo;
        }
        CHECK(epiw(intervals) == doctest::Approx(widths / n).epsilon(1e-12));
    }
}

TEST_CASE("hand example: cwce") {
    // Coverages off by -0.1, +0.2, 0: 0.2*0.1 + 0.5*0.2 + 0.8*0 = 0.12.
    ConfidenceGrid grid{{0.2, 0.5, 0.8}};
    std::vector<double> cov{0.1, 0.7, 0.8};
    CHECK(cwce(grid, cov) == doctest::Approx(0.12));

    // Single level 0.7 with coverage 0.5: 0.7 * 0.2 = 0.14.
    ConfidenceGrid one{{0.7}};
    CHECK(cwce(one, {0.5}) == doctest::Approx(0.14));
}

TEST_CASE("hand example: rmse sqrt(2)") {
    // Residuals {2, 0}: sqrt((4 + 0) / 2) = sqrt(2).
    CHECK(rmse({2.0, 0.0}, {0.0, 0.0}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("empirical coverage") {
    std::vector<std::pair<double, double>> intervals{{0.0, 1.0}, {0.0, 1.0}, {2.0, 3.0}};
    std::vector<double> y{0.5, 1.5, 2.0};  // inside, outside, on the edge
    CHECK(empirical_coverage_two_sided(intervals, y) == doctest::Approx(2.0 / 3.0));

    std::vector<double> q{1.0, 1.0, 1.0};
    std::vector<double> obs{0.5, 1.0, 2.0};
    CHECK(empirical_coverage_one_sided(q, obs) == doctest::Approx(2.0 / 3.0));

    std::vector<std::pair<double, double>> crossed{{1.0, 0.0}};
    CHECK_THROWS_AS(empirical_coverage_two_sided(crossed, {0.5}), ConfigError);
}

TEST_CASE("r_cwce rejects constant targets") {
    CHECK_THROWS_AS(r_cwce({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}, 0.1), ConfigError);
}

TEST_CASE("calibration curve for a perfectly calibrated gaussian oracle") {
    // y ~ N(mu_i, sigma_i^2) with the predictor reporting the true (mu, sigma):
    // empirical coverage must track the nominal level at MC accuracy.
    std::mt19937 gen(123);
    std::normal_distribution<double> norm;
    const int n = 20000;
    std::vector<GaussianPrediction> preds(n);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
        const double mu = 3.0 * norm(gen);
        const double sigma = 0.5 + std::fabs(norm(gen));
        preds[i] = {mu, sigma * sigma};
        y[i] = mu + sigma * norm(gen);
    }
    const ConfidenceGrid grid = ConfidenceGrid::standard();
    for (CoverageSide side : {CoverageSide::TwoSidedCentral, CoverageSide::OneSided}) {
        CalibrationCurve curve = build_calibration_curve(preds, y, grid, side);
        for (std::size_t k = 0; k < grid.levels.size(); ++k) {
            // 3 binomial standard errors plus a small slack.
            const double p = side == CoverageSide::OneSided
                                 ? grid.levels[k]
                                 : grid.levels[k];
            const double se = std::sqrt(p * (1 - p) / n);
            CHECK(std::fabs(curve.coverage[k] - grid.levels[k]) < 3.0 * se + 1e-3);
        }
    }
}

TEST_CASE("compute_metrics aggregates consistently") {
    std::vector<GaussianPrediction> preds{{0.0, 1.0}, {1.0, 4.0}, {2.0, 0.25}};
    std::vector<double> y{0.1, 0.8, 2.5};
    const ConfidenceGrid grid = ConfidenceGrid::standard();
    MetricsReport rep = compute_metrics(preds, y, grid, CoverageSide::TwoSidedCentral);
    CHECK(rep.n == 3);
    std::vector<double> means{0.0, 1.0, 2.0};
    CHECK(rep.rmse == doctest::Approx(rmse(y, means)));
    CHECK(rep.r2 == doctest::Approx(r2(y, means)));
    CalibrationCurve curve =
        build_calibration_curve(preds, y, grid, CoverageSide::TwoSidedCentral);
    CHECK(rep.cwce == doctest::Approx(cwce(grid, curve.coverage)));
    CHECK(rep.ecpe == doctest::Approx(ecpe(grid, curve.coverage)));
    CHECK(rep.r_cwce == doctest::Approx(r_cwce(y, means, rep.cwce)));
    // EPIW at 95%: mean of 2 * 1.959964 * sigma.
    const double z = inverse_normal_cdf(0.975);
    const double expected = 2.0 * z * (1.0 + 2.0 + 0.5) / 3.0;
    CHECK(rep.epiw == doctest::Approx(expected).epsilon(1e-9));
}
