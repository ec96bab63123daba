#include "repstab/resta.hpp"

#include <cmath>

#include "repstab/errors.hpp"
#include "repstab/textio.hpp"

namespace repstab {

namespace {

constexpr double kValueSlack = 1e-9;

// Converts a context series to similarity matrices once, checking the
// series is consistent (shared ids, shared model/layer, increasing c).
std::vector<SimilarityMatrix> series_simmats(const std::vector<RepresentationSet>& series,
                                             bool check_model_layer) {
    if (series.size() < 2)
        throw ValidationError("stability series needs at least 2 representation sets");
    const auto& first = series.front().meta;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& m = series[i].meta;
        if (m.stimulus_ids != first.stimulus_ids)
            throw AlignmentError("series inconsistency: stimulus ids of set " + std::to_string(i) +
                                 " differ from the first set");
        if (check_model_layer && (m.model_name != first.model_name || m.layer != first.layer))
            throw ValidationError("series inconsistency: set " + std::to_string(i) + " is " +
                                  space_label(m) + ", expected model '" + first.model_name +
                                  "' layer " + std::to_string(first.layer));
        if (i > 0 && m.context_length <= series[i - 1].meta.context_length)
            throw ValidationError("series inconsistency: context lengths must be strictly "
                                  "increasing");
    }
    std::vector<SimilarityMatrix> sims;
    sims.reserve(series.size());
    for (const auto& s : series) sims.push_back(cosine_similarity_matrix(s));
    return sims;
}

} // namespace

void StabilityCurve::validate() const {
    if (gap < 1) throw ValidationError("StabilityCurve: gap must be >= 1");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i > 0 && points[i].context_length <= points[i - 1].context_length)
            throw ValidationError("StabilityCurve: context lengths must be strictly increasing");
        if (!std::isfinite(points[i].value) || std::fabs(points[i].value) > 1.0 + kValueSlack)
            throw ValidationError("StabilityCurve: value outside [-1, 1]");
    }
}

void RsaGrid::validate() const {
    if (values.rows() != values.cols() || values.rows() != labels.size())
        throw ShapeError("RsaGrid: labels and matrix dimensions disagree");
    for (std::size_t i = 0; i < values.rows(); ++i) {
        if (std::fabs(values(i, i) - 1.0) > 1e-10)
            throw ValidationError("RsaGrid: diagonal must be 1");
        for (std::size_t j = 0; j < i; ++j)
            if (values(i, j) != values(j, i))
                throw ValidationError("RsaGrid: not symmetric");
    }
}

std::string space_label(const RepMeta& meta) {
    std::string base = meta.model_name.empty() ? "space" : meta.model_name;
    return base + "_L" + std::to_string(meta.layer) + "_c" + std::to_string(meta.context_length);
}

StabilityCurve stability_curve(const std::vector<RepresentationSet>& series, int gap) {
    if (gap < 1) throw ConfigError("stability_curve: gap must be >= 1");
    const std::vector<SimilarityMatrix> sims = series_simmats(series, true);
    if (static_cast<std::size_t>(gap) >= series.size())
        throw ConfigError("stability_curve: gap " + std::to_string(gap) +
                          " leaves no comparable pairs for " + std::to_string(series.size()) +
                          " sets");
    StabilityCurve curve;
    curve.gap = gap;
    curve.subject_meta = rep_meta_to_json(series.front().meta);
    curve.subject_meta.erase("stimulus_ids");
    curve.subject_meta.erase("context_length");
    for (std::size_t i = 0; i + static_cast<std::size_t>(gap) < sims.size(); ++i) {
        const RsaScore score = rsa(sims[i], sims[i + static_cast<std::size_t>(gap)]);
        curve.points.push_back({series[i].meta.context_length, score.value});
    }
    curve.validate();
    return curve;
}

StabilityCurve delta_curve(const StabilityCurve& curve) {
    if (curve.points.size() < 2)
        throw ValidationError("delta_curve: need at least 2 points, got " +
                              std::to_string(curve.points.size()));
    StabilityCurve out;
    out.gap = curve.gap;
    out.subject_meta = curve.subject_meta;
    out.subject_meta["delta"] = true;
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i)
        out.points.push_back(
            {curve.points[i].context_length, curve.points[i + 1].value - curve.points[i].value});
    return out;
}

StabilityCurve layer_similarity_curve(const std::vector<RepresentationSet>& lower,
                                      const std::vector<RepresentationSet>& upper) {
    if (lower.empty() || lower.size() != upper.size())
        throw AlignmentError("layer_similarity_curve: series lengths differ");
    for (std::size_t i = 0; i < lower.size(); ++i)
        if (lower[i].meta.context_length != upper[i].meta.context_length)
            throw AlignmentError("layer_similarity_curve: context length mismatch at index " +
                                 std::to_string(i));
    StabilityCurve curve;
    curve.gap = 1;
    curve.subject_meta = {{"lower", space_label(lower.front().meta)},
                          {"upper", space_label(upper.front().meta)}};
    for (std::size_t i = 0; i < lower.size(); ++i) {
        const RsaScore score = rsa(lower[i], upper[i]);
        curve.points.push_back({lower[i].meta.context_length, score.value});
    }
    curve.validate();
    return curve;
}

RsaGrid rsa_grid(const std::vector<RepresentationSet>& spaces) {
    std::vector<SimilarityMatrix> sims;
    std::vector<std::string> labels;
    sims.reserve(spaces.size());
    for (const auto& s : spaces) {
        sims.push_back(cosine_similarity_matrix(s));
        labels.push_back(space_label(s.meta));
    }
    return rsa_grid(sims, labels);
}

RsaGrid rsa_grid(const std::vector<SimilarityMatrix>& spaces,
                 const std::vector<std::string>& labels) {
    const std::size_t m = spaces.size();
    if (m < 2) throw ValidationError("rsa_grid: need at least 2 spaces");
    if (!labels.empty() && labels.size() != m)
        throw ShapeError("rsa_grid: label count does not match space count");
    for (std::size_t i = 1; i < m; ++i)
        if (spaces[i].stimulus_ids != spaces[0].stimulus_ids)
            throw AlignmentError("rsa_grid: stimulus id mismatch for space " + std::to_string(i));

    RsaGrid grid;
    grid.values = Matrix(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        grid.labels.push_back(labels.empty() ? "space" + std::to_string(i) : labels[i]);
        grid.values(i, i) = 1.0;
        for (std::size_t j = i + 1; j < m; ++j) {
            const double v = rsa(spaces[i], spaces[j]).value;
            grid.values(i, j) = v;
            grid.values(j, i) = v;
        }
    }
    grid.validate();
    return grid;
}

std::pair<StabilityCurve, StabilityCurve> block_average(
    const std::vector<StabilityCurve>& curves) {
    if (curves.empty()) throw ValidationError("block_average: no curves");
    const auto& first = curves.front();
    for (const auto& c : curves) {
        if (c.gap != first.gap) throw AlignmentError("block_average: gap mismatch");
        if (c.points.size() != first.points.size())
            throw AlignmentError("block_average: point count mismatch");
        for (std::size_t i = 0; i < c.points.size(); ++i)
            if (c.points[i].context_length != first.points[i].context_length)
                throw AlignmentError("block_average: context length mismatch at point " +
                                     std::to_string(i));
    }
    StabilityCurve mean_curve, std_curve;
    mean_curve.gap = std_curve.gap = first.gap;
    mean_curve.subject_meta = {{"aggregate", "mean"}, {"n_blocks", curves.size()}};
    std_curve.subject_meta = {{"aggregate", "std"}, {"n_blocks", curves.size()}};
    const double n = static_cast<double>(curves.size());
    for (std::size_t i = 0; i < first.points.size(); ++i) {
        std::vector<double> vals;
        vals.reserve(curves.size());
        for (const auto& c : curves) vals.push_back(c.points[i].value);
        const double m = mean(vals);
        mean_curve.points.push_back({first.points[i].context_length, m});
        double ss = 0.0;
        for (double v : vals) ss += (v - m) * (v - m);
        std_curve.points.push_back({first.points[i].context_length, std::sqrt(ss / n)});
    }
    return {std::move(mean_curve), std::move(std_curve)};
}

std::string curve_to_csv(const StabilityCurve& curve) {
    std::string out = "context_length,value\n";
    for (const auto& p : curve.points) {
        out += std::to_string(p.context_length);
        out += ',';
        out += format_double(p.value);
        out += '\n';
    }
    return out;
}

std::string curves_to_csv(const StabilityCurve& mean, const StabilityCurve& stddev) {
    if (mean.points.size() != stddev.points.size())
        throw ShapeError("curves_to_csv: point count mismatch");
    std::string out = "context_length,mean,std\n";
    for (std::size_t i = 0; i < mean.points.size(); ++i) {
        out += std::to_string(mean.points[i].context_length);
        out += ',';
        out += format_double(mean.points[i].value);
        out += ',';
        out += format_double(stddev.points[i].value);
        out += '\n';
    }
    return out;
}

nlohmann::json curve_to_json(const StabilityCurve& curve) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : curve.points)
        points.push_back({{"context_length", p.context_length}, {"value", p.value}});
    return {{"gap", curve.gap}, {"meta", curve.subject_meta}, {"points", points}};
}

std::string grid_to_csv(const RsaGrid& grid) {
    std::string out = "label_a,label_b,value\n";
    for (std::size_t i = 0; i < grid.values.rows(); ++i)
        for (std::size_t j = 0; j < grid.values.cols(); ++j) {
            out += grid.labels[i];
            out += ',';
            out += grid.labels[j];
            out += ',';
            out += format_double(grid.values(i, j));
            out += '\n';
        }
    return out;
}

nlohmann::json grid_to_json(const RsaGrid& grid) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < grid.values.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < grid.values.cols(); ++j) row.push_back(grid.values(i, j));
        rows.push_back(row);
    }
    return {{"labels", grid.labels}, {"values", rows}};
}

} // namespace repstab
