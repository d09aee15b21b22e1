#pragma once

#include <utility>
#include <vector>

#include "sdehnn/errors.hpp"

namespace sdehnn {

struct ConfidenceGrid {
    std::vector<double> levels;  // strictly increasing, each in (0,1)

    // 19 levels: 0.05, 0.10, ..., 0.95.
    static ConfidenceGrid standard();
    void validate() const;
};

enum class CoverageSide { OneSided, TwoSidedCentral };

struct CalibrationCurve {
    ConfidenceGrid grid;
    std::vector<double> coverage;  // E(p_k), aligned with grid.levels
    CoverageSide side = CoverageSide::TwoSidedCentral;
};

struct MetricsReport {
    double rmse = 0.0;
    double r2 = 0.0;
    double cwce = 0.0;
    double r_cwce = 0.0;
    double ecpe = 0.0;
    double epiw = 0.0;
    double epiw_confidence = 0.95;
    long n = 0;
    CoverageSide side = CoverageSide::TwoSidedCentral;
};

// Fraction of y_i at or below their per-sample quantile.
double empirical_coverage_one_sided(const std::vector<double>& quantiles,
                                    const std::vector<double>& y);

// Fraction of y_i inside their closed intervals.
double empirical_coverage_two_sided(const std::vector<std::pair<double, double>>& intervals,
                                    const std::vector<double>& y);

// sum_k p_k * |E(p_k) - p_k|
double cwce(const ConfidenceGrid& grid, const std::vector<double>& coverages);

// (SSE / SST) * cwce_value
double r_cwce(const std::vector<double>& y, const std::vector<double>& y_hat, double cwce_value);

// mean_k |E(p_k) - p_k|
double ecpe(const ConfidenceGrid& grid, const std::vector<double>& coverages);

// Mean interval width.
double epiw(const std::vector<std::pair<double, double>>& intervals);

double rmse(const std::vector<double>& y, const std::vector<double>& y_hat);
double r2(const std::vector<double>& y, const std::vector<double>& y_hat);

// Per-sample Gaussian predictive parameters in the same units as y.
struct GaussianPrediction {
    double mean = 0.0;
    double variance = 0.0;
};

CalibrationCurve build_calibration_curve(const std::vector<GaussianPrediction>& predictions,
                                         const std::vector<double>& y, const ConfidenceGrid& grid,
                                         CoverageSide side);

MetricsReport compute_metrics(const std::vector<GaussianPrediction>& predictions,
                              const std::vector<double>& y, const ConfidenceGrid& grid,
                              CoverageSide side, double epiw_confidence = 0.95);

}  // namespace sdehnn
