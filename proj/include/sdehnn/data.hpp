#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdehnn/rng.hpp"
#include "sdehnn/tensor.hpp"

namespace sdehnn {

struct TimeSeries {
    Tensor values;  // L x D
    std::vector<std::string> columns;
    int target_column = -1;
};

struct SyntheticSample {
    double x = 0.0;
    double y = 0.0;
    double clean_y = 0.0;
    double true_noise_variance = 0.0;
};

// x ~ U[-30, 40]; y = 0.4x sin(x) + 0.7x cos(x/2), heteroscedastic Gaussian
// noise with variance 0.0225 x^2 added for x in [10, 20] only.
std::vector<SyntheticSample> gen_synthetic(int n, std::uint64_t seed);

enum class NanPolicy { Reject, ForwardFill };

TimeSeries load_csv(const std::string& path, const std::string& target_column,
                    NanPolicy nan_policy = NanPolicy::Reject);

struct Scaler {
    std::vector<double> min;
    std::vector<double> max;
    std::vector<bool> constant;  // flagged columns pass through unscaled

    double apply(double value, int column) const;
    double invert(double value, int column) const;
    double invert_variance(double variance, int column) const;
    double range(int column) const;
};

// Fit on the training rows only: rows [0, fit_rows) of the series.
Scaler fit_scaler(const Tensor& values, int fit_rows);
Tensor apply_scaler(const Scaler& scaler, const Tensor& values);

struct WindowedDataset {
    std::vector<Tensor> inputs;     // each window x D
    std::vector<double> targets;    // scaled target at horizon
    std::vector<int> target_rows;   // row index in the source series
    int window = 0;
    int dims = 0;

    std::size_t size() const { return inputs.size(); }
};

// input i = rows [i, i+w); target i = target column at row i+w+h-1.
WindowedDataset window(const Tensor& scaled_values, int w, int h, int target_column);

struct SplitSpec {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
};

struct SplitIndices {
    std::size_t train_begin = 0, train_end = 0;
    std::size_t val_end = 0;
    std::size_t test_end = 0;
};

// Contiguous chronological slices: floor(0.6N), floor(0.2N), remainder.
SplitIndices split(std::size_t n, const SplitSpec& spec);

void write_synthetic_csv(const std::vector<SyntheticSample>& samples, const std::string& path);

}  // namespace sdehnn
