#include "repstab/encode.hpp"

#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "repstab/errors.hpp"
#include "repstab/textio.hpp"

namespace repstab {

namespace {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenRowMajor>;

ConstMap map_of(const Matrix& m) {
    return ConstMap(m.data(), static_cast<Eigen::Index>(m.rows()),
                    static_cast<Eigen::Index>(m.cols()));
}

void require_finite(const Matrix& m, const char* what) {
    if (!m.all_finite()) throw ValidationError(std::string(what) + ": non-finite values");
}

// Deterministic X'Y on centered data, parallel over output entries with a
// fixed per-entry summation order.
Matrix centered_gram(const Matrix& xt_centered, const Matrix& yt_centered) {
    const std::size_t d = xt_centered.rows();
    const std::size_t v = yt_centered.rows();
    Matrix out(d, v);
#pragma omp parallel for schedule(static)
    for (long long aa = 0; aa < static_cast<long long>(d); ++aa) {
        const auto a = static_cast<std::size_t>(aa);
        for (std::size_t b = 0; b < v; ++b)
            out(a, b) = pairwise_dot(xt_centered.row(a), yt_centered.row(b));
    }
    return out;
}

Matrix centered_transpose(const Matrix& m, std::vector<double>& col_means) {
    col_means.assign(m.cols(), 0.0);
    Matrix t(m.cols(), m.rows());
    for (std::size_t j = 0; j < m.cols(); ++j) {
        std::vector<double> col(m.rows());
        for (std::size_t i = 0; i < m.rows(); ++i) col[i] = m(i, j);
        const double mu = mean(col);
        col_means[j] = mu;
        for (std::size_t i = 0; i < m.rows(); ++i) t(j, i) = col[i] - mu;
    }
    return t;
}

} // namespace

nlohmann::json EncodingScore::to_json() const {
    return {{"mean_ev", mean_ev},
            {"per_voxel_ev", per_voxel_ev},
            {"per_region_ev", per_region_ev}};
}

EncodingModel ridge_fit(const Matrix& x, const Matrix& y, double lambda) {
    if (x.rows() != y.rows())
        throw ShapeError("ridge_fit: X has " + std::to_string(x.rows()) + " rows, Y has " +
                         std::to_string(y.rows()));
    if (x.rows() < 2) throw ValidationError("ridge_fit: need at least 2 samples");
    if (x.cols() < 1 || y.cols() < 1) throw ShapeError("ridge_fit: empty feature or target set");
    if (lambda < 0.0) throw ConfigError("ridge_fit: lambda must be >= 0");
    require_finite(x, "ridge_fit X");
    require_finite(y, "ridge_fit Y");

    const std::size_t d = x.cols();
    const std::size_t v = y.cols();

    std::vector<double> x_means, y_means;
    const Matrix xt = centered_transpose(x, x_means); // D x N
    const Matrix yt = centered_transpose(y, y_means); // V x N

    EncodingModel model;
    model.ridge_lambda = lambda;
    model.weights = Matrix(d, v);
    model.fit_meta = {{"lambda", lambda}, {"n_samples", x.rows()}, {"min_norm", false}};

    if (lambda > 0.0) {
        Matrix gram(d, d);
#pragma omp parallel for schedule(static)
        for (long long aa = 0; aa < static_cast<long long>(d); ++aa) {
            const auto a = static_cast<std::size_t>(aa);
            for (std::size_t b = a; b < d; ++b) {
                const double g = pairwise_dot(xt.row(a), xt.row(b));
                gram(a, b) = g;
                gram(b, a) = g;
            }
            gram(a, a) += lambda;
        }
        const Matrix rhs = centered_gram(xt, yt); // D x V
        Eigen::MatrixXd g = map_of(gram);
        const Eigen::LLT<Eigen::MatrixXd> llt(g);
        if (llt.info() != Eigen::Success)
            throw ValidationError("ridge_fit: normal equations not positive definite");
#pragma omp parallel for schedule(static)
        for (long long vv = 0; vv < static_cast<long long>(v); ++vv) {
            const auto j = static_cast<std::size_t>(vv);
            Eigen::VectorXd b(d);
            for (std::size_t a = 0; a < d; ++a) b(static_cast<Eigen::Index>(a)) = rhs(a, j);
            const Eigen::VectorXd w = llt.solve(b);
            for (std::size_t a = 0; a < d; ++a)
                model.weights(a, j) = w(static_cast<Eigen::Index>(a));
        }
    } else {
        // Least squares through a complete orthogonal decomposition; on
        // rank-deficient X this is the minimum-norm solution.
        Eigen::MatrixXd xc(x.rows(), d);
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t a = 0; a < d; ++a)
                xc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = xt(a, i);
        Eigen::MatrixXd yc(y.rows(), v);
        for (std::size_t i = 0; i < y.rows(); ++i)
            for (std::size_t b = 0; b < v; ++b)
                yc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = yt(b, i);
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(xc);
        const Eigen::MatrixXd w = cod.solve(yc);
        if (cod.rank() < static_cast<Eigen::Index>(d)) model.fit_meta["min_norm"] = true;
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t j = 0; j < v; ++j)
                model.weights(a, j) = w(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j));
    }

    model.intercept.assign(v, 0.0);
    for (std::size_t j = 0; j < v; ++j) {
        double b = y_means[j];
        for (std::size_t a = 0; a < d; ++a) b -= x_means[a] * model.weights(a, j);
        model.intercept[j] = b;
    }
    if (!model.weights.all_finite())
        throw ValidationError("ridge_fit: solution has non-finite weights");
    return model;
}

Matrix predict(const EncodingModel& model, const Matrix& x) {
    if (x.cols() != model.dim())
        throw ShapeError("predict: X has " + std::to_string(x.cols()) + " features, model expects " +
                         std::to_string(model.dim()));
    require_finite(x, "predict X");
    const std::size_t n = x.rows();
    const std::size_t v = model.n_targets();
    Matrix out(n, v);
    const Matrix wt = model.weights.transposed(); // V x D, rows contiguous
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        for (std::size_t j = 0; j < v; ++j)
            out(i, j) = pairwise_dot(x.row(i), wt.row(j)) + model.intercept[j];
    }
    return out;
}

EncodingScore explained_variance(const Matrix& y_true, const Matrix& y_pred,
                                 const std::vector<std::string>& region_of_voxel) {
    if (y_true.rows() != y_pred.rows() || y_true.cols() != y_pred.cols())
        throw ShapeError("explained_variance: shape mismatch");
    if (y_true.rows() < 2) throw ValidationError("explained_variance: need at least 2 rows");
    if (!region_of_voxel.empty() && region_of_voxel.size() != y_true.cols())
        throw ShapeError("explained_variance: region label count does not match voxels");

    const std::size_t n = y_true.rows();
    const std::size_t v = y_true.cols();
    EncodingScore score;
    score.per_voxel_ev.assign(v, 0.0);
    std::vector<std::size_t> degenerate;
    for (std::size_t j = 0; j < v; ++j) {
        std::vector<double> truth(n), err(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = y_true(i, j);
            err[i] = y_true(i, j) - y_pred(i, j);
        }
        const double var_true = population_variance(truth);
        if (var_true == 0.0) {
            degenerate.push_back(j);
            continue;
        }
        score.per_voxel_ev[j] = 1.0 - population_variance(err) / var_true;
    }
    if (!degenerate.empty()) {
        std::string ids;
        for (std::size_t j : degenerate) {
            if (!ids.empty()) ids += ", ";
            ids += std::to_string(j);
        }
        throw ValidationError("explained_variance: zero-variance target columns [" + ids + "]");
    }
    score.mean_ev = mean(score.per_voxel_ev);
    if (!region_of_voxel.empty()) {
        std::map<std::string, std::vector<double>> grouped;
        for (std::size_t j = 0; j < v; ++j)
            grouped[region_of_voxel[j]].push_back(score.per_voxel_ev[j]);
        for (const auto& [region, vals] : grouped) score.per_region_ev[region] = mean(vals);
    }
    return score;
}

double gradient_residual(const EncodingModel& model, const Matrix& x, const Matrix& y) {
    std::vector<double> x_means, y_means;
    const Matrix xt = centered_transpose(x, x_means);
    const Matrix yt = centered_transpose(y, y_means);
    const Matrix xty = centered_gram(xt, yt); // D x V

    const std::size_t d = x.cols();
    const std::size_t v = y.cols();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t j = 0; j < v; ++j) den += xty(a, j) * xty(a, j);

    // (X'X + lambda I) W, assembled column block by column block.
    Matrix gram(d, d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            const double g = pairwise_dot(xt.row(a), xt.row(b));
            gram(a, b) = g;
            gram(b, a) = g;
        }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t j = 0; j < v; ++j) {
            double s = model.ridge_lambda * model.weights(a, j);
            for (std::size_t b = 0; b < d; ++b) s += gram(a, b) * model.weights(b, j);
            const double r = xty(a, j) - s;
            num += r * r;
        }
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num) / std::sqrt(den);
}

namespace {

Matrix vstack(const std::vector<Matrix>& blocks, std::size_t skip) {
    std::size_t rows = 0;
    const std::size_t cols = blocks.front().cols();
    for (std::size_t b = 0; b < blocks.size(); ++b)
        if (b != skip) rows += blocks[b].rows();
    Matrix out(rows, cols);
    std::size_t r = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (b == skip) continue;
        for (std::size_t i = 0; i < blocks[b].rows(); ++i, ++r)
            std::copy(blocks[b].row(i).begin(), blocks[b].row(i).end(), out.row(r).begin());
    }
    return out;
}

constexpr std::size_t kNoSkip = static_cast<std::size_t>(-1);

double held_out_ev(const Matrix& x_train, const Matrix& y_train, const Matrix& x_test,
                   const Matrix& y_test, double lambda) {
    const EncodingModel model = ridge_fit(x_train, y_train, lambda);
    return explained_variance(y_test, predict(model, x_test)).mean_ev;
}

} // namespace

nlohmann::json BlockCvResult::to_json() const {
    nlohmann::json fold_list = nlohmann::json::array();
    for (const auto& f : folds)
        fold_list.push_back({{"held_out_block", f.held_out_block},
                             {"lambda", f.lambda},
                             {"mean_ev", f.score.mean_ev},
                             {"per_region_ev", f.score.per_region_ev}});
    return {{"mean_ev", mean_ev}, {"folds", fold_list}};
}

BlockCvResult block_cv(const std::vector<Matrix>& x_blocks, const std::vector<Matrix>& y_blocks,
                       std::optional<double> lambda,
                       const std::vector<std::string>& region_of_voxel) {
    if (x_blocks.size() != y_blocks.size())
        throw ConfigError("block_cv: X and Y block counts differ");
    if (x_blocks.size() < 2) throw ConfigError("block_cv: need at least 2 blocks");
    for (std::size_t b = 0; b < x_blocks.size(); ++b) {
        if (x_blocks[b].rows() != y_blocks[b].rows())
            throw ShapeError("block_cv: block " + std::to_string(b) + " row mismatch");
        if (x_blocks[b].cols() != x_blocks[0].cols() || y_blocks[b].cols() != y_blocks[0].cols())
            throw ShapeError("block_cv: block " + std::to_string(b) + " column mismatch");
    }
    if (!lambda && x_blocks.size() < 3)
        throw ConfigError("block_cv: lambda selection needs at least 3 blocks (2 training "
                          "blocks for the inner folds)");

    static const std::vector<double> kLambdaGrid = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};

    BlockCvResult result;
    std::vector<double> fold_means;
    for (std::size_t fold = 0; fold < x_blocks.size(); ++fold) {
        std::vector<Matrix> x_train, y_train;
        for (std::size_t b = 0; b < x_blocks.size(); ++b) {
            if (b == fold) continue;
            x_train.push_back(x_blocks[b]);
            y_train.push_back(y_blocks[b]);
        }

        double fold_lambda;
        if (lambda) {
            fold_lambda = *lambda;
        } else {
            // Inner leave-one-block-out over the training blocks.
            double best_ev = -std::numeric_limits<double>::infinity();
            fold_lambda = kLambdaGrid.front();
            for (const double cand : kLambdaGrid) {
                std::vector<double> inner;
                for (std::size_t inner_fold = 0; inner_fold < x_train.size(); ++inner_fold) {
                    inner.push_back(held_out_ev(vstack(x_train, inner_fold),
                                                vstack(y_train, inner_fold), x_train[inner_fold],
                                                y_train[inner_fold], cand));
                }
                const double ev = mean(inner);
                if (ev > best_ev) {
                    best_ev = ev;
                    fold_lambda = cand;
                }
            }
        }

        const EncodingModel model =
            ridge_fit(vstack(x_train, kNoSkip), vstack(y_train, kNoSkip), fold_lambda);
        FoldResult fr;
        fr.held_out_block = fold;
        fr.lambda = fold_lambda;
        fr.score =
            explained_variance(y_blocks[fold], predict(model, x_blocks[fold]), region_of_voxel);
        fold_means.push_back(fr.score.mean_ev);
        result.folds.push_back(std::move(fr));
    }
    result.mean_ev = mean(fold_means);
    return result;
}

std::string score_to_csv(const EncodingScore& score,
                         const std::vector<std::string>& region_of_voxel) {
    std::string out = "voxel_index,region_label,ev\n";
    for (std::size_t j = 0; j < score.per_voxel_ev.size(); ++j) {
        out += std::to_string(j);
        out += ',';
        out += region_of_voxel.empty() ? "" : region_of_voxel[j];
        out += ',';
        out += format_double(score.per_voxel_ev[j]);
        out += '\n';
    }
    return out;
}

} // namespace repstab
