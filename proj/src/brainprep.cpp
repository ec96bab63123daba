#include "repstab/brainprep.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "repstab/errors.hpp"
#include "repstab/simcore.hpp"
#include "repstab/textio.hpp"

namespace repstab {

namespace {

// Column view helpers: series values are row-major T x V, all filters are
// independent per voxel column and parallelized over columns.

std::vector<double> copy_column(const Matrix& m, std::size_t j) {
    std::vector<double> col(m.rows());
    for (std::size_t t = 0; t < m.rows(); ++t) col[t] = m(t, j);
    return col;
}

void store_column(Matrix& m, std::size_t j, const std::vector<double>& col) {
    for (std::size_t t = 0; t < m.rows(); ++t) m(t, j) = col[t];
}

double nyquist_hz(const ScanSeries& series) { return 1.0 / (2.0 * series.scan_period_s); }

} // namespace

std::size_t VoxelMask::count() const {
    return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
}

ScanSeries center(const ScanSeries& series) {
    series.validate();
    ScanSeries out = series;
    const std::size_t v = series.n_voxels();
#pragma omp parallel for schedule(static)
    for (long long jj = 0; jj < static_cast<long long>(v); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        std::vector<double> col = copy_column(series.values, j);
        const double m = mean(col);
        for (double& x : col) x -= m;
        store_column(out.values, j, col);
    }
    return out;
}

ScanSeries detrend_linear(const ScanSeries& series) {
    series.validate();
    const std::size_t t_len = series.n_scans();
    if (t_len < 3) throw ValidationError("detrend_linear: need at least 3 scans");

    // OLS over scan index t = 0..T-1; the index moments are closed-form.
    const double n = static_cast<double>(t_len);
    const double t_mean = (n - 1.0) / 2.0;
    double t_var = 0.0;
    for (std::size_t t = 0; t < t_len; ++t)
        t_var += (static_cast<double>(t) - t_mean) * (static_cast<double>(t) - t_mean);

    ScanSeries out = series;
    const std::size_t v = series.n_voxels();
#pragma omp parallel for schedule(static)
    for (long long jj = 0; jj < static_cast<long long>(v); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        std::vector<double> col = copy_column(series.values, j);
        const double x_mean = mean(col);
        std::vector<double> cross(t_len);
        for (std::size_t t = 0; t < t_len; ++t)
            cross[t] = (static_cast<double>(t) - t_mean) * (col[t] - x_mean);
        const double slope = pairwise_sum(cross) / t_var;
        const double intercept = x_mean - slope * t_mean;
        for (std::size_t t = 0; t < t_len; ++t)
            col[t] -= intercept + slope * static_cast<double>(t);
        store_column(out.values, j, col);
    }
    return out;
}

ScanSeries highpass_dct(const ScanSeries& series, double cutoff_hz) {
    series.validate();
    if (cutoff_hz < 0.0) throw ConfigError("highpass_dct: negative cutoff");
    if (cutoff_hz == 0.0) return series;
    if (cutoff_hz >= nyquist_hz(series))
        throw ConfigError("highpass_dct: cutoff " + format_double(cutoff_hz) +
                          " Hz is at or above the Nyquist frequency " +
                          format_double(nyquist_hz(series)) + " Hz");
    const std::size_t t_len = series.n_scans();
    if (t_len < 4) throw ValidationError("highpass_dct: need at least 4 scans");

    // Drift components strictly below the cutoff: k < 2*T*P*cutoff.
    const double k_limit = 2.0 * static_cast<double>(t_len) * series.scan_period_s * cutoff_hz;
    std::size_t n_drop = 0;
    while (static_cast<double>(n_drop) < k_limit && n_drop < t_len) ++n_drop;

    // Precompute the DCT-II drift basis and its squared norms.
    Matrix basis(n_drop, t_len);
    std::vector<double> norm_sq(n_drop);
    for (std::size_t k = 0; k < n_drop; ++k) {
        for (std::size_t t = 0; t < t_len; ++t)
            basis(k, t) = std::cos(M_PI * static_cast<double>(k) *
                                   (2.0 * static_cast<double>(t) + 1.0) /
                                   (2.0 * static_cast<double>(t_len)));
        norm_sq[k] = pairwise_dot(basis.row(k), basis.row(k));
    }

    ScanSeries out = series;
    const std::size_t v = series.n_voxels();
#pragma omp parallel for schedule(static)
    for (long long jj = 0; jj < static_cast<long long>(v); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        std::vector<double> col = copy_column(series.values, j);
        for (std::size_t k = 0; k < n_drop; ++k) {
            const double coeff = pairwise_dot(std::span<const double>(col), basis.row(k)) /
                                 norm_sq[k];
            const auto b = basis.row(k);
            for (std::size_t t = 0; t < t_len; ++t) col[t] -= coeff * b[t];
        }
        store_column(out.values, j, col);
    }
    return out;
}

ScanSeries standardize(const ScanSeries& series) {
    series.validate();
    const std::size_t v = series.n_voxels();
    std::vector<std::size_t> degenerate;
    ScanSeries out = series;
#pragma omp parallel for schedule(static)
    for (long long jj = 0; jj < static_cast<long long>(v); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        std::vector<double> col = copy_column(series.values, j);
        const double m = mean(col);
        for (double& x : col) x -= m;
        const double sd = std::sqrt(pairwise_dot(std::span<const double>(col),
                                                 std::span<const double>(col)) /
                                    static_cast<double>(col.size()));
        if (sd == 0.0) {
#pragma omp critical
            degenerate.push_back(j);
            continue;
        }
        for (double& x : col) x /= sd;
        store_column(out.values, j, col);
    }
    if (!degenerate.empty()) {
        std::sort(degenerate.begin(), degenerate.end());
        std::string ids;
        for (std::size_t j : degenerate) {
            if (!ids.empty()) ids += ", ";
            ids += std::to_string(j);
        }
        throw ValidationError("standardize: zero-variance voxels [" + ids + "]");
    }
    return out;
}

std::pair<ScanSeries, VoxelMask> drop_constant_voxels(const ScanSeries& series) {
    series.validate();
    const std::size_t v = series.n_voxels();
    VoxelMask mask;
    mask.keep.assign(v, false);
    mask.provenance = "drop_constant_voxels";
    std::size_t survivors = 0;
    for (std::size_t j = 0; j < v; ++j) {
        double lo = series.values(0, j);
        double hi = lo;
        for (std::size_t t = 1; t < series.n_scans(); ++t) {
            lo = std::min(lo, series.values(t, j));
            hi = std::max(hi, series.values(t, j));
        }
        if (hi - lo != 0.0) {
            mask.keep[j] = true;
            ++survivors;
        }
    }
    if (survivors == 0)
        throw ValidationError("drop_constant_voxels: every voxel is constant");
    return {apply_voxel_mask(series, mask), mask};
}

ScanSeries preprocess(const ScanSeries& series, const PreprocessConfig& config) {
    if (config.highpass_cutoff_hz > 0.0 && config.highpass_cutoff_hz >= nyquist_hz(series))
        throw ConfigError("preprocess: highpass cutoff at or above Nyquist");
    ScanSeries out = series;
    if (config.center) out = center(out);
    if (config.detrend) out = detrend_linear(out);
    if (config.highpass_cutoff_hz > 0.0) out = highpass_dct(out, config.highpass_cutoff_hz);
    if (config.standardize) out = standardize(out);
    return out;
}

RegionRanking rank_regions_cross_subject(const std::vector<ScanSeries>& subjects) {
    if (subjects.size() < 2)
        throw ValidationError("rank_regions_cross_subject: need at least 2 subjects");
    for (const auto& s : subjects) {
        s.validate();
        if (s.n_scans() != subjects.front().n_scans())
            throw AlignmentError("rank_regions_cross_subject: scan counts differ across subjects");
    }

    // Regions present in every subject are ranked. A region that lost all
    // its voxels in some subject (constant-voxel removal does this) is
    // skipped with a warning; atlases with no overlap at all are an error.
    std::vector<std::string> universe;
    for (const auto& s : subjects)
        for (const auto& region : s.atlas())
            if (std::find(universe.begin(), universe.end(), region) == universe.end())
                universe.push_back(region);
    std::vector<std::string> shared;
    for (const auto& region : universe) {
        const bool everywhere = std::all_of(subjects.begin(), subjects.end(),
                                            [&](const ScanSeries& s) {
                                                const auto a = s.atlas();
                                                return std::find(a.begin(), a.end(), region) !=
                                                       a.end();
                                            });
        if (everywhere) shared.push_back(region);
    }
    if (shared.empty())
        throw AlignmentError("rank_regions_cross_subject: subjects share no atlas regions");

    RegionRanking ranking;
    for (const auto& region : universe)
        if (std::find(shared.begin(), shared.end(), region) == shared.end())
            ranking.skipped.push_back(region);
    for (const auto& region : shared) {
        // Each subject's region slice becomes one representational space
        // over the shared scans.
        std::vector<SimilarityMatrix> sims;
        for (const auto& s : subjects) {
            ScanSeries slice = slice_region(s, region);
            RepresentationSet reps;
            reps.values = slice.values;
            reps.meta.model_name = "brain";
            reps.meta.stimulus_ids = make_default_ids(slice.n_scans());
            sims.push_back(cosine_similarity_matrix(reps));
        }
        std::vector<double> pair_scores;
        for (std::size_t i = 0; i < sims.size(); ++i)
            for (std::size_t j = i + 1; j < sims.size(); ++j)
                pair_scores.push_back(rsa(sims[i], sims[j]).value);
        ranking.entries.push_back({region, mean(pair_scores)});
    }
    std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                     [](const RegionScore& a, const RegionScore& b) {
                         return a.mean_cross_subject_rsa > b.mean_cross_subject_rsa;
                     });
    return ranking;
}

VoxelMask select_top_k(const RegionRanking& ranking,
                       const std::vector<std::string>& region_of_voxel, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > ranking.entries.size())
        throw ConfigError("select_top_k: k=" + std::to_string(k) + " out of range [1, " +
                          std::to_string(ranking.entries.size()) + "]");
    std::vector<std::string> top;
    for (int i = 0; i < k; ++i) top.push_back(ranking.entries[static_cast<std::size_t>(i)].region);

    VoxelMask mask;
    mask.keep.assign(region_of_voxel.size(), false);
    mask.provenance = "top-" + std::to_string(k) + " regions";
    for (std::size_t j = 0; j < region_of_voxel.size(); ++j)
        mask.keep[j] = std::find(top.begin(), top.end(), region_of_voxel[j]) != top.end();
    if (mask.count() == 0)
        throw ValidationError("select_top_k: selected regions cover no voxels");
    return mask;
}

ScanSeries slice_region(const ScanSeries& series, const std::string& region_label) {
    const auto atlas = series.atlas();
    if (std::find(atlas.begin(), atlas.end(), region_label) == atlas.end())
        throw ValidationError("slice_region: unknown region '" + region_label + "'");
    VoxelMask mask;
    mask.keep.assign(series.n_voxels(), false);
    mask.provenance = "region " + region_label;
    for (std::size_t j = 0; j < series.n_voxels(); ++j)
        mask.keep[j] = series.region_of_voxel[j] == region_label;
    return apply_voxel_mask(series, mask);
}

ScanSeries apply_voxel_mask(const ScanSeries& series, const VoxelMask& mask) {
    if (mask.keep.size() != series.n_voxels())
        throw ShapeError("apply_voxel_mask: mask length does not match voxel count");
    const std::size_t kept = mask.count();
    if (kept == 0) throw ValidationError("apply_voxel_mask: empty mask");
    ScanSeries out;
    out.subject_id = series.subject_id;
    out.block_id = series.block_id;
    out.scan_period_s = series.scan_period_s;
    out.values = Matrix(series.n_scans(), kept);
    out.region_of_voxel.reserve(kept);
    std::size_t col = 0;
    for (std::size_t j = 0; j < series.n_voxels(); ++j) {
        if (!mask.keep[j]) continue;
        out.region_of_voxel.push_back(series.region_of_voxel[j]);
        for (std::size_t t = 0; t < series.n_scans(); ++t) out.values(t, col) = series.values(t, j);
        ++col;
    }
    return out;
}

std::string ranking_to_csv(const RegionRanking& ranking) {
    std::string out = "region_label,score\n";
    for (const auto& e : ranking.entries) {
        out += e.region;
        out += ',';
        out += format_double(e.mean_cross_subject_rsa);
        out += '\n';
    }
    return out;
}

std::string mask_to_csv(const VoxelMask& mask) {
    std::string out = "index,keep\n";
    for (std::size_t j = 0; j < mask.keep.size(); ++j) {
        out += std::to_string(j);
        out += ',';
        out += mask.keep[j] ? '1' : '0';
        out += '\n';
    }
    return out;
}

VoxelMask mask_from_csv(const std::string& text) {
    VoxelMask mask;
    mask.provenance = "csv";
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.find("index") != std::string_view::npos) continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 2) throw FormatError("mask CSV: expected index,keep");
        const long long idx = parse_int(fields[0]);
        if (idx != static_cast<long long>(mask.keep.size()))
            throw FormatError("mask CSV: non-sequential index " + std::to_string(idx));
        mask.keep.push_back(parse_int(fields[1]) != 0);
    }
    return mask;
}

} // namespace repstab
