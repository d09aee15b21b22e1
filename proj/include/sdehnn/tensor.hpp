#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sdehnn/errors.hpp"

namespace sdehnn {

// Dense 2-D matrix of doubles, row-major. `node` is the id of the tape node
// that produced this value, or -1 when the value is not being recorded.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;
    int node = -1;

    Tensor() = default;
    Tensor(int r, int c, double fill = 0.0)
        : rows(r), cols(c), v(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}
    Tensor(int r, int c, std::vector<double> values) : rows(r), cols(c), v(std::move(values)) {
        if (v.size() != static_cast<std::size_t>(r) * static_cast<std::size_t>(c)) {
            throw DimensionError("tensor: value count does not match shape");
        }
    }

    int size() const { return rows * cols; }
    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    bool finite() const {
        for (double x : v) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    }
    void require_finite(const std::string& context) const {
        if (!finite()) throw NumericError("non-finite value in " + context);
    }

    static Tensor identity(int n) {
        Tensor t(n, n);
        for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
        return t;
    }
    static Tensor column(std::vector<double> values) {
        const int n = static_cast<int>(values.size());
        return Tensor(n, 1, std::move(values));
    }
};

inline std::string shape_str(const Tensor& t) {
    return "(" + std::to_string(t.rows) + "x" + std::to_string(t.cols) + ")";
}

}  // namespace sdehnn
