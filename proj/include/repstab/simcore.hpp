#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "repstab/matrix.hpp"
#include "repstab/repstore.hpp"

namespace repstab {

// N x N matrix of intra-space cosine similarities. Symmetric, unit
// diagonal, entries in [-1, 1] up to rounding.
struct SimilarityMatrix {
    Matrix values;
    std::vector<std::string> stimulus_ids;
    nlohmann::json source_meta = nlohmann::json::object();

    std::size_t n_stimuli() const { return values.rows(); }
    void validate() const;
};

struct RsaScore {
    double value = 0.0;
    std::size_t n_stimuli = 0;
    std::uint64_t pair_count = 0; // N(N-1)/2

    nlohmann::json to_json() const;
};

// Entry (i,j) = dot(r_i, r_j) / (|r_i| |r_j|), parallel over rows with a
// fixed per-pair summation order, so results do not depend on the worker
// count. Zero-norm rows are rejected with the offending stimulus ids.
SimilarityMatrix cosine_similarity_matrix(const RepresentationSet& reps);

// Strict upper triangle in row-major order (0,1),(0,2),...,(N-2,N-1).
std::vector<double> upper_triangle(const SimilarityMatrix& sim);

// Sample Pearson correlation; lengths must match and be >= 3, both inputs
// non-constant. Exact 1 is returned when the summary statistics coincide
// bitwise (identical inputs), so self-comparisons score exactly 1.
double pearson(std::span<const double> x, std::span<const double> y);

// RSA score: Pearson correlation of the two flattened similarity
// triangles. Stimulus ids must match element-wise.
RsaScore rsa(const SimilarityMatrix& a, const SimilarityMatrix& b);
RsaScore rsa(const RepresentationSet& a, const RepresentationSet& b);
RsaScore rsa(const RepresentationSet& a, const SimilarityMatrix& b);
RsaScore rsa(const SimilarityMatrix& a, const RepresentationSet& b);

// Keeps rows/columns with true mask entries, order preserved; the mask
// name is recorded in source_meta. At least 3 entries must survive.
SimilarityMatrix subset(const SimilarityMatrix& sim, const std::vector<bool>& mask,
                        const std::string& mask_name = "mask");

void save_similarity_matrix(const std::string& path, const SimilarityMatrix& sim,
                            FileFormat format = FileFormat::bxm1);
SimilarityMatrix load_similarity_matrix(const std::string& path);

} // namespace repstab
