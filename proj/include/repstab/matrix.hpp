#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace repstab {

// Dense row-major matrix of doubles. This is the interchange type for
// every representational space in the library; kernels operate on raw
// row spans so they can be parallelized over rows without aliasing.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& values() const { return data_; }

    bool all_finite() const;
    Matrix transposed() const;

    friend bool operator==(const Matrix& a, const Matrix& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Pairwise (tree) summation primitives. The recursion structure depends
// only on the length, so results are identical no matter which thread
// runs them; used by every accumulation on the hot paths.
double pairwise_sum(std::span<const double> x);
double pairwise_dot(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> x);
// Population variance (divides by n).
double population_variance(std::span<const double> x);

} // namespace repstab
