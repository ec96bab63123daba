#include "repstab/matrix.hpp"

#include <cmath>
#include <utility>

#include "repstab/errors.hpp"

namespace repstab {

namespace {

constexpr std::size_t kPairwiseBase = 64;

double sum_block(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double dot_block(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_rec(const double* x, std::size_t n) {
    if (n <= kPairwiseBase) return sum_block(x, n);
    const std::size_t h = n / 2;
    return sum_rec(x, h) + sum_rec(x + h, n - h);
}

double dot_rec(const double* a, const double* b, std::size_t n) {
    if (n <= kPairwiseBase) return dot_block(a, b, n);
    const std::size_t h = n / 2;
    return dot_rec(a, b, h) + dot_rec(a + h, b + h, n - h);
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw ShapeError("Matrix: data size does not match rows*cols");
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double pairwise_sum(std::span<const double> x) { return sum_rec(x.data(), x.size()); }

double pairwise_dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("pairwise_dot: length mismatch");
    return dot_rec(a.data(), b.data(), a.size());
}

double mean(std::span<const double> x) {
    if (x.empty()) throw ShapeError("mean: empty input");
    return pairwise_sum(x) / static_cast<double>(x.size());
}

double population_variance(std::span<const double> x) {
    const double m = mean(x);
    std::vector<double> sq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - m;
        sq[i] = d * d;
    }
    return pairwise_sum(sq) / static_cast<double>(x.size());
}

} // namespace repstab
