#include "sdehnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sdehnn {

std::vector<SyntheticSample> gen_synthetic(int n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("gen_synthetic: n must be >= 1");
    RngStream xs(mix_seed(seed, 0xdadau));
    BrownianSource noise{seed};
    std::vector<SyntheticSample> out(n);
    for (int i = 0; i < n; ++i) {
        SyntheticSample& s = out[i];
        s.x = -30.0 + 70.0 * xs.next_uniform();
        s.clean_y = 0.4 * s.x * std::sin(s.x) + 0.7 * s.x * std::cos(s.x / 2.0);
        s.y = s.clean_y;
        if (s.x >= 10.0 && s.x <= 20.0) {
            s.true_noise_variance = 0.0225 * s.x * s.x;
            RngStream eps = noise.stream(StreamTag::DataNoise, static_cast<std::uint64_t>(i), 0);
            s.y += std::sqrt(s.true_noise_variance) * eps.next_normal();
        }
    }
    return out;
}

TimeSeries load_csv(const std::string& path, const std::string& target_column,
                    NanPolicy nan_policy) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    TimeSeries series;
    {
        std::stringstream header(line);
        std::string cell;
        while (std::getline(header, cell, ',')) series.columns.push_back(cell);
    }
    const int dims = static_cast<int>(series.columns.size());
    if (dims == 0) throw ParseError(path + ": no columns in header");
    for (int j = 0; j < dims; ++j) {
        if (series.columns[j] == target_column) series.target_column = j;
    }
    if (series.target_column < 0) {
        std::string available;
        for (const auto& c : series.columns) available += (available.empty() ? "" : ", ") + c;
        throw ConfigError("target column '" + target_column + "' not found; available: " +
                          available);
    }

    std::vector<double> rows;
    std::vector<double> last_valid(dims, std::nan(""));
    int row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col >= dims) {
                throw ParseError(path + ": row " + std::to_string(row + 1) +
                                 " has more cells than the header");
            }
            double value;
            bool missing = cell.empty();
            if (!missing) {
                std::size_t pos = 0;
                try {
                    value = std::stod(cell, &pos);
                } catch (const std::exception&) {
                    pos = 0;
                }
                if (pos != cell.size()) {
                    throw ParseError(path + ": non-numeric cell at row " + std::to_string(row + 1) +
                                     ", column '" + series.columns[col] + "'");
                }
                missing = std::isnan(value);
            }
            if (missing) {
                if (nan_policy == NanPolicy::Reject || std::isnan(last_valid[col])) {
                    throw ParseError(path + ": missing value at row " + std::to_string(row + 1) +
                                     ", column '" + series.columns[col] + "'");
                }
                value = last_valid[col];
            }
            if (!std::isfinite(value)) {
                throw ParseError(path + ": non-finite value at row " + std::to_string(row + 1) +
                                 ", column '" + series.columns[col] + "'");
            }
            last_valid[col] = value;
            rows.push_back(value);
            ++col;
        }
        if (col != dims) {
            throw ParseError(path + ": row " + std::to_string(row + 1) + " has " +
                             std::to_string(col) + " cells, expected " + std::to_string(dims));
        }
        ++row;
    }
    if (row == 0) throw ParseError(path + ": no data rows");
    series.values = Tensor(row, dims, std::move(rows));
    return series;
}

double Scaler::range(int column) const { return max[column] - min[column]; }

double Scaler::apply(double value, int column) const {
    if (constant[column]) return value;
    return (value - min[column]) / range(column);
}

double Scaler::invert(double value, int column) const {
    if (constant[column]) return value;
    return value * range(column) + min[column];
}

double Scaler::invert_variance(double variance, int column) const {
    if (constant[column]) return variance;
    return variance * range(column) * range(column);
}

Scaler fit_scaler(const Tensor& values, int fit_rows) {
    if (fit_rows < 1 || fit_rows > values.rows) {
        throw ConfigError("fit_scaler: fit rows out of range");
    }
    Scaler s;
    s.min.assign(values.cols, std::numeric_limits<double>::infinity());
    s.max.assign(values.cols, -std::numeric_limits<double>::infinity());
    for (int i = 0; i < fit_rows; ++i) {
        for (int j = 0; j < values.cols; ++j) {
            s.min[j] = std::min(s.min[j], values.at(i, j));
            s.max[j] = std::max(s.max[j], values.at(i, j));
        }
    }
    s.constant.resize(values.cols);
    for (int j = 0; j < values.cols; ++j) s.constant[j] = !(s.max[j] > s.min[j]);
    return s;
}

Tensor apply_scaler(const Scaler& scaler, const Tensor& values) {
    if (static_cast<int>(scaler.min.size()) != values.cols) {
        throw DimensionError("apply_scaler: column count mismatch");
    }
    Tensor out(values.rows, values.cols);
    for (int i = 0; i < values.rows; ++i) {
        for (int j = 0; j < values.cols; ++j) out.at(i, j) = scaler.apply(values.at(i, j), j);
    }
    return out;
}

WindowedDataset window(const Tensor& scaled_values, int w, int h, int target_column) {
    if (w < 1 || h < 1) throw ConfigError("window: w and h must be >= 1");
    if (target_column < 0 || target_column >= scaled_values.cols) {
        throw ConfigError("window: target column out of range");
    }
    if (scaled_values.rows < w + h) {
        throw ConfigError("window: series length " + std::to_string(scaled_values.rows) +
                          " is shorter than window + horizon");
    }
    WindowedDataset ds;
    ds.window = w;
    ds.dims = scaled_values.cols;
    const int n = scaled_values.rows - w - h + 1;
    for (int i = 0; i < n; ++i) {
        Tensor input(w, scaled_values.cols);
        for (int r = 0; r < w; ++r) {
            for (int j = 0; j < scaled_values.cols; ++j) {
                input.at(r, j) = scaled_values.at(i + r, j);
            }
        }
        ds.inputs.push_back(std::move(input));
        const int target_row = i + w + h - 1;
        ds.targets.push_back(scaled_values.at(target_row, target_column));
        ds.target_rows.push_back(target_row);
    }
    return ds;
}

SplitIndices split(std::size_t n, const SplitSpec& spec) {
    if (std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9) {
        throw ConfigError("split: fractions must sum to 1");
    }
    if (n < 5) throw ConfigError("split: need at least 5 samples");
    SplitIndices idx;
    idx.train_end = static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(n)));
    idx.val_end = idx.train_end +
                  static_cast<std::size_t>(std::floor(spec.val * static_cast<double>(n)));
    idx.test_end = n;
    if (idx.train_end == 0 || idx.val_end == idx.train_end || idx.test_end == idx.val_end) {
        throw ConfigError("split: a split slice is empty at n=" + std::to_string(n));
    }
    return idx;
}

void write_synthetic_csv(const std::vector<SyntheticSample>& samples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "x,y,clean_y,true_noise_variance\n";
    out.precision(17);
    for (const auto& s : samples) {
        out << s.x << "," << s.y << "," << s.clean_y << "," << s.true_noise_variance << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace sdehnn
