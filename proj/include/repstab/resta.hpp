#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "repstab/repstore.hpp"
#include "repstab/simcore.hpp"

namespace repstab {

struct CurvePoint {
    int context_length = 0;
    double value = 0.0;

    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

// RSA between representations of the same (model, layer) at increasing
// context lengths; the core stability output.
struct StabilityCurve {
    std::vector<CurvePoint> points;
    int gap = 1;
    nlohmann::json subject_meta = nlohmann::json::object();

    void validate() const;
};

struct RsaGrid {
    std::vector<std::string> labels;
    Matrix values; // M x M, symmetric, unit diagonal

    void validate() const;
};

// Point at c_i holds rsa(series[i], series[i+gap]). All sets must share
// stimulus ids and (model, layer) metadata; context lengths must be
// strictly increasing.
StabilityCurve stability_curve(const std::vector<RepresentationSet>& series, int gap = 1);

// Adjacent differences: point i holds value(c_{i+1}) - value(c_i).
StabilityCurve delta_curve(const StabilityCurve& curve);

// Point at c_i holds rsa(lower[i], upper[i]); both series must be indexed
// by the same context lengths.
StabilityCurve layer_similarity_curve(const std::vector<RepresentationSet>& lower,
                                      const std::vector<RepresentationSet>& upper);

// Pairwise RSA between all spaces; each unordered pair computed once and
// mirrored, diagonal set to 1.
RsaGrid rsa_grid(const std::vector<RepresentationSet>& spaces);
RsaGrid rsa_grid(const std::vector<SimilarityMatrix>& spaces,
                 const std::vector<std::string>& labels = {});

// Pointwise mean and population standard deviation across blocks.
std::pair<StabilityCurve, StabilityCurve> block_average(
    const std::vector<StabilityCurve>& curves);

std::string space_label(const RepMeta& meta);

std::string curve_to_csv(const StabilityCurve& curve);
std::string curves_to_csv(const StabilityCurve& mean, const StabilityCurve& stddev);
nlohmann::json curve_to_json(const StabilityCurve& curve);
std::string grid_to_csv(const RsaGrid& grid);
nlohmann::json grid_to_json(const RsaGrid& grid);

} // namespace repstab
