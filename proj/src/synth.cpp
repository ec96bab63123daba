#include "repstab/synth.hpp"

#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "repstab/errors.hpp"

namespace repstab {

double Rng::uniform() {
    // 53-bit mantissa from the top bits; in [0, 1).
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller, written out to stay identical across stdlib versions.
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
}

std::uint64_t Rng::integer(std::uint64_t bound) {
    if (bound == 0) throw ConfigError("Rng::integer: bound must be > 0");
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
}

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
    return m;
}

Matrix random_orthogonal(Rng& rng, std::size_t dim) {
    Eigen::MatrixXd g(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.gaussian();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (std::size_t j = 0; j < dim; ++j)
        if (r(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) < 0.0)
            q.col(static_cast<Eigen::Index>(j)) *= -1.0;
    Matrix out(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            out(i, j) = q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

Matrix matrix_product(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ShapeError("matrix_product: inner dimensions disagree");
    Matrix out(a.rows(), b.cols());
    const Matrix bt = b.transposed();
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < static_cast<long long>(a.rows()); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        for (std::size_t j = 0; j < b.cols(); ++j)
            out(i, j) = pairwise_dot(a.row(i), bt.row(j));
    }
    return out;
}

SynthReps synth_reps(const SynthRepsOptions& opts) {
    if (opts.n < 1 || opts.d < 1) throw ConfigError("synth_reps: n and d must be >= 1");
    if (opts.context_series < 0) throw ConfigError("synth_reps: context_series must be >= 0");
    if (opts.perturb < 0.0) throw ConfigError("synth_reps: perturb must be >= 0");

    Rng rng(opts.seed);
    const Matrix base = random_matrix(rng, opts.n, opts.d);
    const std::vector<std::string> ids = make_default_ids(opts.n);

    auto make_set = [&](Matrix values, int context) {
        RepresentationSet set;
        set.values = std::move(values);
        set.meta.model_name = opts.model_name;
        set.meta.context_length = context;
        set.meta.stimulus_ids = ids;
        set.validate();
        return set;
    };

    SynthReps out;
    if (opts.context_series > 0) {
        const Matrix direction = random_matrix(rng, opts.n, opts.d);
        for (int c = 0; c < opts.context_series; ++c) {
            Matrix values = base;
            const double scale = static_cast<double>(c) * opts.perturb;
            for (std::size_t i = 0; i < values.rows(); ++i) {
                auto row = values.row(i);
                const auto dir = direction.row(i);
                for (std::size_t j = 0; j < values.cols(); ++j) row[j] += scale * dir[j];
            }
            out.series.push_back(make_set(std::move(values), c));
        }
    } else {
        out.series.push_back(make_set(base, 0));
    }

    if (opts.rotate) {
        const Matrix q = random_orthogonal(rng, opts.d);
        RepresentationSet rotated = make_set(matrix_product(base, q), 0);
        rotated.meta.model_name = opts.model_name + "-rotated";
        out.rotated = std::move(rotated);
    }
    return out;
}

std::vector<ScanSeries> synth_brain(const RepresentationSet& reps,
                                    const SynthBrainOptions& opts) {
    reps.validate();
    if (opts.n_regions < 1 || opts.voxels_per_region < 1 || opts.n_subjects < 1)
        throw ConfigError("synth_brain: regions, voxels and subjects must be >= 1");
    if (opts.lag_scans < 0) throw ConfigError("synth_brain: lag_scans must be >= 0");
    if (opts.sigma < 0.0) throw ConfigError("synth_brain: sigma must be >= 0");
    if (opts.identity_map && static_cast<std::size_t>(opts.voxels_per_region) != reps.dim())
        throw ConfigError("synth_brain: identity map needs voxels_per_region == dim");
    for (int r : opts.signal_regions)
        if (r < 0 || r >= opts.n_regions)
            throw ConfigError("synth_brain: signal region " + std::to_string(r) +
                              " out of range");

    const std::size_t t_len = reps.n_stimuli();
    if (static_cast<std::size_t>(opts.lag_scans) >= t_len)
        throw ConfigError("synth_brain: lag_scans must be smaller than the number of rows");
    const std::size_t d = reps.dim();
    const auto vpr = static_cast<std::size_t>(opts.voxels_per_region);
    const auto n_regions = static_cast<std::size_t>(opts.n_regions);

    std::vector<bool> is_signal(n_regions, opts.signal_regions.empty());
    for (int r : opts.signal_regions) is_signal[static_cast<std::size_t>(r)] = true;

    Rng rng(opts.seed);

    // Shared stimulus-locked component: one lagged linear map per signal
    // region, identical for every subject.
    const double map_scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<Matrix> signal(n_regions); // T x vpr where is_signal
    for (std::size_t r = 0; r < n_regions; ++r) {
        if (!is_signal[r]) continue;
        Matrix map(d, vpr);
        if (opts.identity_map) {
            for (std::size_t a = 0; a < d; ++a) map(a, a) = 1.0;
        } else {
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < vpr; ++b) map(a, b) = rng.gaussian() * map_scale;
        }
        Matrix mapped(t_len, vpr);
        for (std::size_t t = 0; t < t_len; ++t) {
            // Leading scans repeat the first mapped row so no row is zero.
            const std::size_t src =
                t >= static_cast<std::size_t>(opts.lag_scans)
                    ? t - static_cast<std::size_t>(opts.lag_scans)
                    : 0;
            for (std::size_t b = 0; b < vpr; ++b) {
                double s = 0.0;
                for (std::size_t a = 0; a < d; ++a) s += reps.values(src, a) * map(a, b);
                mapped(t, b) = s;
            }
        }
        signal[r] = std::move(mapped);
    }

    std::vector<ScanSeries> subjects;
    for (int sub = 0; sub < opts.n_subjects; ++sub) {
        ScanSeries series;
        series.subject_id = "sub" + std::to_string(sub);
        series.block_id = reps.meta.block_id.value_or(0);
        series.scan_period_s = opts.scan_period_s;
        series.values = Matrix(t_len, n_regions * vpr);
        series.region_of_voxel.reserve(n_regions * vpr);
        for (std::size_t r = 0; r < n_regions; ++r)
            for (std::size_t b = 0; b < vpr; ++b)
                series.region_of_voxel.push_back("region" + std::to_string(r));

        for (std::size_t r = 0; r < n_regions; ++r) {
            for (std::size_t t = 0; t < t_len; ++t)
                for (std::size_t b = 0; b < vpr; ++b) {
                    double v = is_signal[r] ? signal[r](t, b) : rng.gaussian();
                    if (opts.sigma > 0.0) v += opts.sigma * rng.gaussian();
                    series.values(t, r * vpr + b) = v;
                }
        }
        series.validate();
        subjects.push_back(std::move(series));
    }
    return subjects;
}

} // namespace repstab
