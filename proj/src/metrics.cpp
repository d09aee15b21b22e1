#include "sdehnn/metrics.hpp"

#include <cmath>
#include <string>

#include "sdehnn/normal.hpp"

namespace sdehnn {

ConfidenceGrid ConfidenceGrid::standard() {
    ConfidenceGrid g;
    for (int k = 1; k <= 19; ++k) g.levels.push_back(k * 0.05);
    return g;
}

void ConfidenceGrid::validate() const {
    if (levels.empty()) throw ConfigError("confidence grid: empty");
    double prev = 0.0;
    for (double p : levels) {
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("confidence grid: level outside (0,1)");
        if (p <= prev) throw ConfigError("confidence grid: levels must be strictly increasing");
        prev = p;
    }
}

double empirical_coverage_one_sided(const std::vector<double>& quantiles,
                                    const std::vector<double>& y) {
    if (y.empty()) throw ConfigError("empirical coverage: empty input");
    if (quantiles.size() != y.size()) {
        throw DimensionError("empirical coverage: quantile/sample count mismatch");
    }
    long covered = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] <= quantiles[i]) ++covered;
    }
    return static_cast<double>(covered) / static_cast<double>(y.size());
}

double empirical_coverage_two_sided(const std::vector<std::pair<double, double>>& intervals,
                                    const std::vector<double>& y) {
    if (y.empty()) throw ConfigError("empirical coverage: empty input");
    if (intervals.size() != y.size()) {
        throw DimensionError("empirical coverage: interval/sample count mismatch");
    }
    long covered = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto& [lo, hi] = intervals[i];
        if (lo > hi) {
            throw ConfigError("empirical coverage: crossed interval at index " +
                              std::to_string(i));
        }
        if (y[i] >= lo && y[i] <= hi) ++covered;
    }
    return static_cast<double>(covered) / static_cast<double>(y.size());
}

double cwce(const ConfidenceGrid& grid, const std::vector<double>& coverages) {
    grid.validate();
    if (coverages.size() != grid.levels.size()) {
        throw DimensionError("cwce: grid/coverage length mismatch");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < coverages.size(); ++k) {
        total += grid.levels[k] * std::abs(coverages[k] - grid.levels[k]);
    }
    return total;
}

namespace {
double sse(const std::vector<double>& y, const std::vector<double>& y_hat) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - y_hat[i];
        s += d * d;
    }
    return s;
}

double sst(const std::vector<double>& y) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double s = 0.0;
    for (double v : y) s += (v - mean) * (v - mean);
    return s;
}
}  // namespace

double r_cwce(const std::vector<double>& y, const std::vector<double>& y_hat, double cwce_value) {
    if (y.size() != y_hat.size() || y.empty()) {
        throw DimensionError("r_cwce: input length mismatch or empty");
    }
    const double denom = sst(y);
    if (denom <= 0.0) throw ConfigError("r_cwce: constant targets, zero variance");
    return sse(y, y_hat) / denom * cwce_value;
}

double ecpe(const ConfidenceGrid& grid, const std::vector<double>& coverages) {
    grid.validate();
    if (coverages.size() != grid.levels.size()) {
        throw DimensionError("ecpe: grid/coverage length mismatch");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < coverages.size(); ++k) {
        total += std::abs(coverages[k] - grid.levels[k]);
    }
    return total / static_cast<double>(coverages.size());
}

double epiw(const std::vector<std::pair<double, double>>& intervals) {
    if (intervals.empty()) throw ConfigError("epiw: empty input");
    double total = 0.0;
    for (const auto& [lo, hi] : intervals) {
        if (lo > hi) throw ConfigError("epiw: crossed interval");
        total += hi - lo;
    }
    return total / static_cast<double>(intervals.size());
}

double rmse(const std::vector<double>& y, const std::vector<double>& y_hat) {
    if (y.size() != y_hat.size() || y.empty()) {
        throw DimensionError("rmse: input length mismatch or empty");
    }
    return std::sqrt(sse(y, y_hat) / static_cast<double>(y.size()));
}

double r2(const std::vector<double>& y, const std::vector<double>& y_hat) {
    if (y.size() != y_hat.size() || y.empty()) {
        throw DimensionError("r2: input length mismatch or empty");
    }
    const double denom = sst(y);
    if (denom <= 0.0) throw ConfigError("r2: constant targets, zero variance");
    return 1.0 - sse(y, y_hat) / denom;
}

CalibrationCurve build_calibration_curve(const std::vector<GaussianPrediction>& predictions,
                                         const std::vector<double>& y, const ConfidenceGrid& grid,
                                         CoverageSide side) {
    grid.validate();
    if (predictions.size() != y.size() || y.empty()) {
        throw DimensionError("calibration curve: prediction/sample count mismatch or empty");
    }
    CalibrationCurve curve;
    curve.grid = grid;
    curve.side = side;
    for (double p : grid.levels) {
        if (side == CoverageSide::OneSided) {
            std::vector<double> q(predictions.size());
            for (std::size_t i = 0; i < predictions.size(); ++i) {
                q[i] = predictions[i].mean +
                       inverse_normal_cdf(p) * std::sqrt(predictions[i].variance);
            }
            curve.coverage.push_back(empirical_coverage_one_sided(q, y));
        } else {
            std::vector<std::pair<double, double>> intervals(predictions.size());
            const double z = inverse_normal_cdf((1.0 + p) / 2.0);
            for (std::size_t i = 0; i < predictions.size(); ++i) {
                const double half = z * std::sqrt(predictions[i].variance);
                intervals[i] = {predictions[i].mean - half, predictions[i].mean + half};
            }
            curve.coverage.push_back(empirical_coverage_two_sided(intervals, y));
        }
    }
    return curve;
}

MetricsReport compute_metrics(const std::vector<GaussianPrediction>& predictions,
                              const std::vector<double>& y, const ConfidenceGrid& grid,
                              CoverageSide side, double epiw_confidence) {
    CalibrationCurve curve = build_calibration_curve(predictions, y, grid, side);
    std::vector<double> means(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i) means[i] = predictions[i].mean;

    MetricsReport report;
    report.n = static_cast<long>(y.size());
    report.side = side;
    report.rmse = rmse(y, means);
    report.r2 = r2(y, means);
    report.cwce = cwce(grid, curve.coverage);
    report.r_cwce = r_cwce(y, means, report.cwce);
    report.ecpe = ecpe(grid, curve.coverage);
    report.epiw_confidence = epiw_confidence;
    std::vector<std::pair<double, double>> intervals(predictions.size());
    const double z = inverse_normal_cdf((1.0 + epiw_confidence) / 2.0);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double half = z * std::sqrt(predictions[i].variance);
        intervals[i] = {predictions[i].mean - half, predictions[i].mean + half};
    }
    report.epiw = epiw(intervals);
    return report;
}

}  // namespace sdehnn
