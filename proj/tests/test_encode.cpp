#include <doctest.h>

#include <cmath>

#include "repstab/encode.hpp"
#include "repstab/errors.hpp"
#include "repstab/reference.hpp"
#include "repstab/synth.hpp"
#include "testutil.hpp"

using namespace repstab;

namespace {

double frobenius(const Matrix& m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) acc += m(i, j) * m(i, j);
    return std::sqrt(acc);
}

// Noiseless targets Y = X W0 + b0.
struct LinearFixture {
    Matrix x, y, w0;
    std::vector<double> b0;
};

LinearFixture linear_fixture(std::uint64_t seed, std::size_t n, std::size_t d, std::size_t v) {
    Rng rng(seed);
    LinearFixture f;
    f.x = random_matrix(rng, n, d);
    f.w0 = random_matrix(rng, d, v);
    f.b0.resize(v);
    for (auto& b : f.b0) b = rng.gaussian();
    f.y = matrix_product(f.x, f.w0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < v; ++j) f.y(i, j) += f.b0[j];
    return f;
}

} // namespace

TEST_CASE("ridge_fit: exact linear data is reproduced at lambda 0") {
    const LinearFixture f = linear_fixture(1, 30, 5, 3);
    const EncodingModel model = ridge_fit(f.x, f.y, 0.0);
    const Matrix pred = predict(model, f.x);
    CHECK(testutil::max_abs_diff(pred, f.y) <= 1e-8);
    CHECK(model.fit_meta["min_norm"] == false);
}

TEST_CASE("ridge_fit: two-point line has weight 2 and intercept 0") {
    const Matrix x(2, 1, {0, 1});
    const Matrix y(2, 1, {0, 2});
    const EncodingModel model = ridge_fit(x, y, 0.0);
    CHECK(model.weights(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(model.intercept[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ridge_fit matches the explicit normal-equations oracle") {
    Rng rng(2);
    const Matrix x = random_matrix(rng, 60, 8);
    const Matrix y = random_matrix(rng, 60, 5);
    const EncodingModel model = ridge_fit(x, y, 0.1);
    const ref::RidgeSolution oracle = ref::ridge_normal_equations(x, y, 0.1);
    CHECK(testutil::max_abs_diff(model.weights, oracle.weights) <= 1e-8);
    for (std::size_t j = 0; j < 5; ++j)
        CHECK(model.intercept[j] == doctest::Approx(oracle.intercept[j]).epsilon(1e-8));
}

TEST_CASE("ridge_fit input validation") {
    Rng rng(3);
    const Matrix x = random_matrix(rng, 6, 2);
    const Matrix y = random_matrix(rng, 5, 2);
    CHECK_THROWS_AS(ridge_fit(x, y, 1.0), ShapeError);
    CHECK_THROWS_AS(ridge_fit(Matrix(1, 2, 1.0), Matrix(1, 1, 1.0), 1.0), ValidationError);
    CHECK_THROWS_AS(ridge_fit(x, random_matrix(rng, 6, 1), -0.5), ConfigError);
    Matrix bad = random_matrix(rng, 6, 1);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ridge_fit(x, bad, 1.0), ValidationError);
}

TEST_CASE("ridge_fit: rank-deficient X at lambda 0 takes the minimum-norm route") {
    Rng rng(4);
    Matrix x(20, 4);
    for (std::size_t i = 0; i < 20; ++i) {
        x(i, 0) = rng.gaussian();
        x(i, 1) = rng.gaussian();
        x(i, 2) = x(i, 0) + x(i, 1); // dependent column
        x(i, 3) = 2.0 * x(i, 0);
    }
    const Matrix y = random_matrix(rng, 20, 2);
    const EncodingModel model = ridge_fit(x, y, 0.0);
    CHECK(model.fit_meta["min_norm"] == true);
    CHECK(model.weights.all_finite());
    CHECK(gradient_residual(model, x, y) <= 1e-6);
}

TEST_CASE("predict: zero input rows equal the intercept") {
    const LinearFixture f = linear_fixture(5, 25, 4, 3);
    const EncodingModel model = ridge_fit(f.x, f.y, 0.0);
    const Matrix pred = predict(model, Matrix(2, 4, 0.0));
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(pred(i, j) == doctest::Approx(model.intercept[j]).epsilon(1e-12));
}

TEST_CASE("predict matches a direct matrix-product oracle") {
    Rng rng(6);
    EncodingModel model;
    model.weights = random_matrix(rng, 5, 4);
    model.intercept = {0.5, -1.0, 2.0, 0.0};
    const Matrix x = random_matrix(rng, 7, 5);
    const Matrix pred = predict(model, x);
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            double acc = model.intercept[j];
            for (std::size_t a = 0; a < 5; ++a) acc += x(i, a) * model.weights(a, j);
            CHECK(pred(i, j) == doctest::Approx(acc).epsilon(1e-12));
        }
    CHECK_THROWS_AS(predict(model, random_matrix(rng, 3, 4)), ShapeError);
}

TEST_CASE("explained_variance: perfect prediction scores 1 everywhere") {
    Rng rng(7);
    const Matrix y = random_matrix(rng, 10, 3);
    const EncodingScore score = explained_variance(y, y);
    for (double ev : score.per_voxel_ev) CHECK(ev == 1.0);
    CHECK(score.mean_ev == 1.0);
}

TEST_CASE("explained_variance: predicting the column mean scores 0") {
    Rng rng(8);
    const Matrix y = random_matrix(rng, 12, 2);
    Matrix pred(12, 2);
    for (std::size_t j = 0; j < 2; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < 12; ++i) m += y(i, j);
        m /= 12.0;
        for (std::size_t i = 0; i < 12; ++i) pred(i, j) = m;
    }
    const EncodingScore score = explained_variance(y, pred);
    for (double ev : score.per_voxel_ev) CHECK(std::fabs(ev) <= 1e-12);
}

TEST_CASE("explained_variance matches the variance-formula oracle") {
    Rng rng(9);
    const Matrix y = random_matrix(rng, 15, 4);
    const Matrix pred = random_matrix(rng, 15, 4);
    const EncodingScore score = explained_variance(y, pred);
    for (std::size_t j = 0; j < 4; ++j) {
        std::vector<double> truth(15), err(15);
        for (std::size_t i = 0; i < 15; ++i) {
            truth[i] = y(i, j);
            err[i] = y(i, j) - pred(i, j);
        }
        auto var = [](const std::vector<double>& v) {
            double m = 0.0;
            for (double x : v) m += x;
            m /= static_cast<double>(v.size());
            double ss = 0.0;
            for (double x : v) ss += (x - m) * (x - m);
            return ss / static_cast<double>(v.size());
        };
        CHECK(score.per_voxel_ev[j] ==
              doctest::Approx(1.0 - var(err) / var(truth)).epsilon(1e-12));
    }
    double m = 0.0;
    for (double ev : score.per_voxel_ev) m += ev;
    CHECK(score.mean_ev == doctest::Approx(m / 4.0).epsilon(1e-12));
}

TEST_CASE("explained_variance: constant target column is a zero-variance error") {
    Matrix y(5, 2, 1.0);
    for (std::size_t i = 0; i < 5; ++i) y(i, 0) = static_cast<double>(i);
    CHECK_THROWS_AS(explained_variance(y, y), ValidationError);
}

TEST_CASE("explained_variance is invariant under a shared column shift") {
    Rng rng(10);
    const Matrix y = random_matrix(rng, 20, 3);
    const Matrix pred = random_matrix(rng, 20, 3);
    Matrix y2 = y, pred2 = pred;
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            y2(i, j) += 5.0;
            pred2(i, j) += 5.0;
        }
    const EncodingScore a = explained_variance(y, pred);
    const EncodingScore b = explained_variance(y2, pred2);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(a.per_voxel_ev[j] == doctest::Approx(b.per_voxel_ev[j]).epsilon(1e-12));
}

TEST_CASE("explained_variance groups per-region means") {
    Rng rng(11);
    const Matrix y = random_matrix(rng, 10, 4);
    const Matrix pred = random_matrix(rng, 10, 4);
    const EncodingScore score = explained_variance(y, pred, {"a", "b", "a", "b"});
    REQUIRE(score.per_region_ev.count("a") == 1);
    CHECK(score.per_region_ev.at("a") ==
          doctest::Approx((score.per_voxel_ev[0] + score.per_voxel_ev[2]) / 2.0).epsilon(1e-12));
}

TEST_CASE("gradient residual is small for every fit") {
    Rng rng(12);
    const Matrix x = random_matrix(rng, 40, 6);
    const Matrix y = random_matrix(rng, 40, 3);
    for (const double lambda : {0.0, 0.01, 1.0, 100.0}) {
        const EncodingModel model = ridge_fit(x, y, lambda);
        CHECK(gradient_residual(model, x, y) <= 1e-6);
    }
}

TEST_CASE("ridge shrinkage is monotone in lambda") {
    Rng rng(13);
    const Matrix x = random_matrix(rng, 50, 6);
    const Matrix y = random_matrix(rng, 50, 4);
    double previous = std::numeric_limits<double>::infinity();
    for (const double lambda : {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}) {
        const double norm = frobenius(ridge_fit(x, y, lambda).weights);
        CHECK(norm <= previous);
        previous = norm;
    }
}

TEST_CASE("training EV at lambda 0 dominates any positive lambda") {
    Rng rng(14);
    const Matrix x = random_matrix(rng, 30, 5);
    Matrix y = matrix_product(x, random_matrix(rng, 5, 2));
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 2; ++j) y(i, j) += 0.3 * rng.gaussian();
    const double ev0 =
        explained_variance(y, predict(ridge_fit(x, y, 0.0), x)).mean_ev;
    for (const double lambda : {0.1, 1.0, 10.0}) {
        const double ev =
            explained_variance(y, predict(ridge_fit(x, y, lambda), x)).mean_ev;
        CHECK(ev0 >= ev - 1e-12);
    }
}

TEST_CASE("block_cv: noiseless linear data generalizes on every fold") {
    const LinearFixture f = linear_fixture(15, 80, 4, 3);
    std::vector<Matrix> xb, yb;
    for (int b = 0; b < 4; ++b) {
        Matrix x(20, 4), y(20, 3);
        for (std::size_t i = 0; i < 20; ++i)
            for (std::size_t j = 0; j < 4; ++j) x(i, j) = f.x(20 * b + i, j);
        for (std::size_t i = 0; i < 20; ++i)
            for (std::size_t j = 0; j < 3; ++j) y(i, j) = f.y(20 * b + i, j);
        xb.push_back(std::move(x));
        yb.push_back(std::move(y));
    }
    const BlockCvResult result = block_cv(xb, yb, 0.0);
    REQUIRE(result.folds.size() == 4);
    for (const auto& fold : result.folds) CHECK(fold.score.mean_ev >= 0.999);
    CHECK(result.mean_ev >= 0.999);
}

TEST_CASE("block_cv: pure-noise targets stay near chance held out") {
    for (const std::uint64_t seed : {21u, 22u, 23u}) {
        Rng rng(seed);
        std::vector<Matrix> xb, yb;
        for (int b = 0; b < 4; ++b) {
            xb.push_back(random_matrix(rng, 60, 8));
            yb.push_back(random_matrix(rng, 60, 5));
        }
        const BlockCvResult result = block_cv(xb, yb, 1.0);
        CHECK(result.mean_ev <= 0.05);
    }
}

TEST_CASE("block_cv: two-block case equals a manual fit-then-score oracle") {
    Rng rng(16);
    std::vector<Matrix> xb{random_matrix(rng, 25, 3), random_matrix(rng, 25, 3)};
    std::vector<Matrix> yb{random_matrix(rng, 25, 2), random_matrix(rng, 25, 2)};
    const BlockCvResult result = block_cv(xb, yb, 0.5);
    for (std::size_t fold = 0; fold < 2; ++fold) {
        const std::size_t train = 1 - fold;
        const EncodingModel model = ridge_fit(xb[train], yb[train], 0.5);
        const EncodingScore expected =
            explained_variance(yb[fold], predict(model, xb[fold]));
        CHECK(result.folds[fold].score.mean_ev ==
              doctest::Approx(expected.mean_ev).epsilon(1e-12));
    }
}

TEST_CASE("block_cv configuration errors") {
    Rng rng(17);
    std::vector<Matrix> one{random_matrix(rng, 10, 2)};
    std::vector<Matrix> oney{random_matrix(rng, 10, 1)};
    CHECK_THROWS_AS(block_cv(one, oney, 1.0), ConfigError);
    std::vector<Matrix> two{random_matrix(rng, 10, 2), random_matrix(rng, 10, 2)};
    std::vector<Matrix> twoy{random_matrix(rng, 10, 1), random_matrix(rng, 10, 1)};
    CHECK_THROWS_AS(block_cv(two, twoy, std::nullopt), ConfigError); // auto needs >= 3 blocks
}

TEST_CASE("block_cv: lambda selection picks a grid value per fold") {
    Rng rng(18);
    std::vector<Matrix> xb, yb;
    const Matrix w0 = random_matrix(rng, 4, 2);
    for (int b = 0; b < 3; ++b) {
        Matrix x = random_matrix(rng, 30, 4);
        Matrix y = matrix_product(x, w0);
        for (std::size_t i = 0; i < 30; ++i)
            for (std::size_t j = 0; j < 2; ++j) y(i, j) += 0.1 * rng.gaussian();
        xb.push_back(std::move(x));
        yb.push_back(std::move(y));
    }
    const BlockCvResult result = block_cv(xb, yb, std::nullopt);
    const std::vector<double> grid{1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
    for (const auto& fold : result.folds) {
        CHECK(std::find(grid.begin(), grid.end(), fold.lambda) != grid.end());
        CHECK(fold.score.mean_ev >= 0.9); // strong linear signal survives held out
    }
}
