#pragma once

#include <string>
#include <utility>
#include <vector>

#include "repstab/repstore.hpp"

namespace repstab {

struct PreprocessConfig {
    bool center = true;
    bool detrend = true;
    double highpass_cutoff_hz = 0.005; // 0 disables
    bool standardize = true;
};

struct RegionScore {
    std::string region;
    double mean_cross_subject_rsa = 0.0;
};

// Regions sorted descending by mean cross-subject RSA.
struct RegionRanking {
    std::vector<RegionScore> entries;
    int k = 16;
    std::vector<std::string> skipped; // regions absent from some subject
};

struct VoxelMask {
    std::vector<bool> keep;
    std::string provenance;

    std::size_t count() const;
};

// Per-voxel mean removal.
ScanSeries center(const ScanSeries& series);

// Subtracts the least-squares line over scan index from every voxel.
ScanSeries detrend_linear(const ScanSeries& series);

// Least-squares removal of the DCT-II drift basis below cutoff_hz.
// Component k over T samples of period P sits at k/(2*T*P) Hz; DC is
// always below any positive cutoff. Linear and idempotent.
ScanSeries highpass_dct(const ScanSeries& series, double cutoff_hz);

// Columns to zero mean, unit population standard deviation. Constant
// columns are an error; run drop_constant_voxels first.
ScanSeries standardize(const ScanSeries& series);

// Removes voxels whose column range is exactly zero.
std::pair<ScanSeries, VoxelMask> drop_constant_voxels(const ScanSeries& series);

// center -> detrend -> highpass -> standardize, as configured.
ScanSeries preprocess(const ScanSeries& series, const PreprocessConfig& config);

// Scores each region by the mean RSA over all unordered subject pairs of
// the region-restricted scan similarity structure. Regions missing from
// some subject (emptied by constant-voxel removal) are skipped and
// recorded; disjoint atlases are an alignment error.
RegionRanking rank_regions_cross_subject(const std::vector<ScanSeries>& subjects);

// Keeps the voxels of the top-k ranked regions.
VoxelMask select_top_k(const RegionRanking& ranking, const std::vector<std::string>& region_of_voxel,
                       int k);

ScanSeries slice_region(const ScanSeries& series, const std::string& region_label);

ScanSeries apply_voxel_mask(const ScanSeries& series, const VoxelMask& mask);

std::string ranking_to_csv(const RegionRanking& ranking);
std::string mask_to_csv(const VoxelMask& mask);
VoxelMask mask_from_csv(const std::string& text);

} // namespace repstab
