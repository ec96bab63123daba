#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "repstab/matrix.hpp"
#include "repstab/repstore.hpp"

namespace repstab {

// Deterministic random source. mt19937_64 is fully specified by the
// standard; the uniform and gaussian transforms are written out here so
// streams are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(); // [0, 1)
    double gaussian();
    std::uint64_t integer(std::uint64_t bound); // [0, bound)

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols);

// Orthogonal factor of a seeded random square matrix (QR with the sign
// of the R diagonal fixed, so the result is unique).
Matrix random_orthogonal(Rng& rng, std::size_t dim);

Matrix matrix_product(const Matrix& a, const Matrix& b);

struct SynthRepsOptions {
    std::size_t n = 32;
    std::size_t d = 16;
    std::uint64_t seed = 0;
    int context_series = 0; // emit this many sets c = 0..m-1 when > 0
    double perturb = 0.0;   // set c = base + c * perturb * E
    bool rotate = false;    // also emit base * Q for random orthogonal Q
    std::string model_name = "synth";
};

struct SynthReps {
    std::vector<RepresentationSet> series; // base only, or the context series
    std::optional<RepresentationSet> rotated;
};

SynthReps synth_reps(const SynthRepsOptions& opts);

struct SynthBrainOptions {
    int lag_scans = 0;
    double sigma = 0.0;
    int n_regions = 4;
    int voxels_per_region = 16;
    int n_subjects = 2;
    // Regions carrying the shared stimulus-locked component; empty means
    // all of them. Other regions are independent noise per subject.
    std::vector<int> signal_regions;
    bool identity_map = false; // requires voxels_per_region == reps dim
    double scan_period_s = 2.0;
    std::uint64_t seed = 0;
};

// One synthetic subject per entry: a per-region linear map of the
// representation rows shifted by lag_scans, plus iid noise of scale
// sigma. Signal regions share the mapped component across subjects.
std::vector<ScanSeries> synth_brain(const RepresentationSet& reps,
                                    const SynthBrainOptions& opts);

} // namespace repstab
