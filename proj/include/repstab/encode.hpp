#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "repstab/matrix.hpp"

namespace repstab {

// Linear map from representation features to voxel activations, fitted
// with an unpenalized intercept: minimizes |Y - XW - 1 b'|^2 + lambda |W|^2.
struct EncodingModel {
    Matrix weights;                // D x V
    std::vector<double> intercept; // V
    double ridge_lambda = 0.0;
    nlohmann::json fit_meta = nlohmann::json::object();

    std::size_t dim() const { return weights.rows(); }
    std::size_t n_targets() const { return weights.cols(); }
};

struct EncodingScore {
    std::vector<double> per_voxel_ev;
    double mean_ev = 0.0;
    std::map<std::string, double> per_region_ev;

    nlohmann::json to_json() const;
};

// lambda > 0 solves the normal equations through a Cholesky factorization
// shared across voxels; lambda = 0 uses an orthogonal decomposition and
// falls back to the minimum-norm solution on rank-deficient inputs
// (flagged as fit_meta["min_norm"]).
EncodingModel ridge_fit(const Matrix& x, const Matrix& y, double lambda);

Matrix predict(const EncodingModel& model, const Matrix& x);

// Per-voxel explained variance 1 - Var(y_true - y_pred)/Var(y_true);
// region labels, when given, fill the per-region means.
EncodingScore explained_variance(const Matrix& y_true, const Matrix& y_pred,
                                 const std::vector<std::string>& region_of_voxel = {});

// Max-norm of X'Y - (X'X + lambda I)W on the centered data, relative to
// |X'Y|; small values certify the normal equations are satisfied.
double gradient_residual(const EncodingModel& model, const Matrix& x, const Matrix& y);

struct FoldResult {
    std::size_t held_out_block = 0;
    double lambda = 0.0;
    EncodingScore score;
};

struct BlockCvResult {
    std::vector<FoldResult> folds;
    double mean_ev = 0.0; // mean of fold mean_ev values

    nlohmann::json to_json() const;
};

// Leave-one-block-out cross validation. With lambda unset, each fold
// picks lambda from a log grid 1e-3..1e3 by inner leave-one-block-out
// explained variance over its training blocks (needs >= 3 blocks).
BlockCvResult block_cv(const std::vector<Matrix>& x_blocks, const std::vector<Matrix>& y_blocks,
                       std::optional<double> lambda,
                       const std::vector<std::string>& region_of_voxel = {});

std::string score_to_csv(const EncodingScore& score,
                         const std::vector<std::string>& region_of_voxel = {});

} // namespace repstab
