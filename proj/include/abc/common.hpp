#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace abc {

enum class ErrorCode {
    invalid_argument = 1,
    io = 2,
    format = 3,
    numeric = 4,
};

struct Error : std::runtime_error {
    ErrorCode code;
    Error(ErrorCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& msg) {
    throw Error(c, msg);
}

// Row-major dense matrix of doubles. Rows are samples, columns are features.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

using FeatureBatch = Matrix;
using RealVector = std::vector<double>;

// out = a * b^T is not needed; the net uses explicit loops, see net.cpp.

bool all_finite(const Matrix& m);
bool all_finite(const std::vector<double>& v);

}  // namespace abc
