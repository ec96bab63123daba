#include "repstab/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "repstab/errors.hpp"

namespace repstab {

namespace {

void require_matching_ids(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.size() != b.size())
        throw AlignmentError("rsa: stimulus counts differ (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i])
            throw AlignmentError("rsa: stimulus id mismatch at position " + std::to_string(i) +
                                 " ('" + a[i] + "' vs '" + b[i] + "')");
}

bool bitwise_equal(std::span<const double> x, std::span<const double> y) {
    return x.size() == y.size() &&
           std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0;
}

} // namespace

void SimilarityMatrix::validate() const {
    if (values.rows() != values.cols())
        throw ShapeError("SimilarityMatrix: must be square");
    if (stimulus_ids.size() != values.rows())
        throw ValidationError("SimilarityMatrix: stimulus_ids length must equal N");
    if (!values.all_finite())
        throw ValidationError("SimilarityMatrix: NaN or Inf entries");
    for (std::size_t i = 0; i < values.rows(); ++i) {
        if (std::fabs(values(i, i) - 1.0) > 1e-12)
            throw ValidationError("SimilarityMatrix: diagonal entry " + std::to_string(i) +
                                  " is not 1");
        for (std::size_t j = 0; j < values.cols(); ++j) {
            if (std::fabs(values(i, j)) > 1.0 + 1e-12)
                throw ValidationError("SimilarityMatrix: entry outside [-1, 1]");
            if (std::fabs(values(i, j) - values(j, i)) > 1e-12)
                throw ValidationError("SimilarityMatrix: not symmetric");
        }
    }
}

nlohmann::json RsaScore::to_json() const {
    return {{"value", value}, {"n_stimuli", n_stimuli}, {"pair_count", pair_count}};
}

SimilarityMatrix cosine_similarity_matrix(const RepresentationSet& reps) {
    reps.validate();
    const std::size_t n = reps.n_stimuli();

    std::vector<double> norms(n);
    std::string degenerate;
    for (std::size_t i = 0; i < n; ++i) {
        norms[i] = std::sqrt(pairwise_dot(reps.values.row(i), reps.values.row(i)));
        if (norms[i] == 0.0) {
            if (!degenerate.empty()) degenerate += ", ";
            degenerate += reps.meta.stimulus_ids[i];
        }
    }
    if (!degenerate.empty())
        throw ValidationError("cosine_similarity_matrix: zero-norm rows for stimuli [" +
                              degenerate + "]");

    SimilarityMatrix sim;
    sim.values = Matrix(n, n);
    sim.stimulus_ids = reps.meta.stimulus_ids;
    sim.source_meta = rep_meta_to_json(reps.meta);
    sim.source_meta.erase("stimulus_ids");
    sim.source_meta["kind"] = "reps";

    Matrix& out = sim.values;
    const Matrix& x = reps.values;
#pragma omp parallel for schedule(dynamic, 8)
    for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        out(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = pairwise_dot(x.row(i), x.row(j)) / (norms[i] * norms[j]);
            out(i, j) = s;
            out(j, i) = s;
        }
    }
    return sim;
}

std::vector<double> upper_triangle(const SimilarityMatrix& sim) {
    const std::size_t n = sim.n_stimuli();
    if (n < 3)
        throw ValidationError("upper_triangle: need at least 3 stimuli, got " + std::to_string(n));
    std::vector<double> out;
    out.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) out.push_back(sim.values(i, j));
    return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ShapeError("pearson: length mismatch (" + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()) + ")");
    if (x.size() < 3)
        throw ValidationError("pearson: need at least 3 values, got " + std::to_string(x.size()));

    const std::size_t n = x.size();
    const double mx = mean(x);
    const double my = mean(y);
    std::vector<double> xy(n), xx(n), yy(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        xy[i] = dx * dy;
        xx[i] = dx * dx;
        yy[i] = dy * dy;
    }
    const double sxy = pairwise_sum(xy);
    const double sxx = pairwise_sum(xx);
    const double syy = pairwise_sum(yy);
    if (sxx == 0.0 || syy == 0.0)
        throw ValidationError("pearson: constant input (zero variance)");
    // Perfectly (anti)correlated summary statistics yield exact +-1; this
    // keeps self-comparisons at 1.0 without any sqrt rounding.
    if (sxx == syy) {
        if (sxy == sxx) return 1.0;
        if (sxy == -sxx) return -1.0;
    }
    // Rounding can push |r| a few ulps past 1; Pearson is bounded by 1.
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

RsaScore rsa(const SimilarityMatrix& a, const SimilarityMatrix& b) {
    require_matching_ids(a.stimulus_ids, b.stimulus_ids);
    const std::vector<double> ta = upper_triangle(a);
    const std::vector<double> tb = upper_triangle(b);
    RsaScore score;
    score.n_stimuli = a.n_stimuli();
    score.pair_count = static_cast<std::uint64_t>(ta.size());
    score.value = bitwise_equal(ta, tb) ? 1.0 : pearson(ta, tb);
    return score;
}

RsaScore rsa(const RepresentationSet& a, const RepresentationSet& b) {
    return rsa(cosine_similarity_matrix(a), cosine_similarity_matrix(b));
}

RsaScore rsa(const RepresentationSet& a, const SimilarityMatrix& b) {
    return rsa(cosine_similarity_matrix(a), b);
}

RsaScore rsa(const SimilarityMatrix& a, const RepresentationSet& b) {
    return rsa(a, cosine_similarity_matrix(b));
}

SimilarityMatrix subset(const SimilarityMatrix& sim, const std::vector<bool>& mask,
                        const std::string& mask_name) {
    sim.validate();
    if (mask.size() != sim.n_stimuli())
        throw ShapeError("subset: mask length " + std::to_string(mask.size()) +
                         " does not match N=" + std::to_string(sim.n_stimuli()));
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) keep.push_back(i);
    if (keep.size() < 3)
        throw ValidationError("subset: fewer than 3 stimuli retained (" +
                              std::to_string(keep.size()) + ")");

    SimilarityMatrix out;
    out.values = Matrix(keep.size(), keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.stimulus_ids.push_back(sim.stimulus_ids[keep[i]]);
        for (std::size_t j = 0; j < keep.size(); ++j)
            out.values(i, j) = sim.values(keep[i], keep[j]);
    }
    out.source_meta = sim.source_meta;
    out.source_meta["subset_mask"] = mask_name;
    return out;
}

void save_similarity_matrix(const std::string& path, const SimilarityMatrix& sim,
                            FileFormat format) {
    sim.validate();
    nlohmann::json meta = {{"kind", "simmat"},
                           {"stimulus_ids", sim.stimulus_ids},
                           {"source", sim.source_meta}};
    if (format == FileFormat::bxm1)
        save_bxm1(path, sim.values, meta);
    else
        save_matrix_csv(path, sim.values, meta);
}

SimilarityMatrix load_similarity_matrix(const std::string& path) {
    Bxm1 raw = is_bxm1_file(path) ? load_bxm1(path) : load_matrix_csv(path);
    if (!raw.meta.contains("kind") || raw.meta["kind"] != "simmat")
        throw FormatError(path + ": expected a similarity matrix file (meta.kind = simmat)");
    SimilarityMatrix sim;
    sim.values = std::move(raw.values);
    if (raw.meta.contains("stimulus_ids"))
        sim.stimulus_ids = raw.meta["stimulus_ids"].get<std::vector<std::string>>();
    else
        sim.stimulus_ids = make_default_ids(sim.values.rows());
    if (raw.meta.contains("source")) sim.source_meta = raw.meta["source"];
    sim.validate();
    return sim;
}

} // namespace repstab
