#pragma once

#include <span>
#include <vector>

#include "repstab/matrix.hpp"

// Serial brute-force implementations of the similarity kernels, kept as
// the reference the optimized OpenMP paths are tested and benchmarked
// against. Textbook loops, naive left-to-right accumulation, no shared
// code with the optimized kernels beyond the Matrix container.
namespace repstab::ref {

double dot(std::span<const double> a, std::span<const double> b);

// Full N x N cosine matrix, every entry computed independently.
Matrix cosine_similarity_matrix(const Matrix& rows);

std::vector<double> upper_triangle(const Matrix& sim);

// Direct covariance-formula Pearson.
double pearson(std::span<const double> x, std::span<const double> y);

// Composed from the naive pieces above.
double rsa(const Matrix& a_rows, const Matrix& b_rows);

// M x M grid of pairwise rsa values, all M^2 cells computed (no mirroring).
Matrix rsa_grid(const std::vector<Matrix>& spaces);

// Ridge solution by explicit normal equations: W = (Xc'Xc + lambda I)^-1 Xc'Yc
// via Gauss-Jordan elimination, intercept = mean(Y) - mean(X)'W.
struct RidgeSolution {
    Matrix weights;                 // D x V
    std::vector<double> intercept;  // V
};
RidgeSolution ridge_normal_equations(const Matrix& x, const Matrix& y, double lambda);

// Power of a real signal from an explicit DFT, summed over all bins
// (Parseval route, deliberately not a time-domain sum of squares).
double dft_power(std::span<const double> x);

} // namespace repstab::ref
