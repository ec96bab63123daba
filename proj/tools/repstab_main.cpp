// repstab: representational similarity / stability analysis pipeline.
//
// Subcommands: simmat, rsa, resta, crossrsa, preprocess, select-regions,
// align, compose-bow, encode, synth-reps, synth-brain. Every command
// writes a RunManifest next to its outputs; outputs are pure functions of
// (inputs, flags, seed) regardless of --threads.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "repstab/align.hpp"
#include "repstab/brainprep.hpp"
#include "repstab/encode.hpp"
#include "repstab/errors.hpp"
#include "repstab/manifest.hpp"
#include "repstab/parallel.hpp"
#include "repstab/repstore.hpp"
#include "repstab/resta.hpp"
#include "repstab/simcore.hpp"
#include "repstab/synth.hpp"
#include "repstab/textio.hpp"

namespace {

using namespace repstab;

struct GlobalOpts {
    std::string output;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string format = "bxm1";
};

FileFormat parse_matrix_format(const std::string& format) {
    if (format == "bxm1") return FileFormat::bxm1;
    if (format == "csv") return FileFormat::csv;
    throw ConfigError("unsupported --format '" + format + "' for matrix output");
}

RunManifest start_manifest(const std::string& command, const std::vector<std::string>& argv,
                           const GlobalOpts& g) {
    RunManifest m;
    m.command = command;
    m.argv = argv;
    m.seed = g.seed;
    m.config = {{"output", g.output}, {"seed", g.seed}, {"format", g.format}};
    return m;
}

void finish_manifest(RunManifest& m, const std::string& anchor_output) {
    m.save(anchor_output + ".manifest.json");
}

std::vector<bool> combined_masks(const std::vector<std::string>& mask_paths, std::size_t n) {
    std::vector<bool> combined(n, true);
    for (const auto& path : mask_paths) {
        const std::vector<bool> mask = bool_mask_from_csv(read_text_file(path));
        if (mask.size() != n)
            throw ShapeError("mask " + path + " has " + std::to_string(mask.size()) +
                             " entries, expected " + std::to_string(n));
        for (std::size_t i = 0; i < n; ++i) combined[i] = combined[i] && mask[i];
    }
    return combined;
}

// Accepts a plain list file (one path per line, # comments).
std::vector<std::string> read_path_list(const std::string& path) {
    std::vector<std::string> out;
    const std::string text = read_text_file(path);
    for (const auto line_view : split(text, '\n')) {
        std::string line(line_view);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        out.push_back(line);
    }
    return out;
}

Matrix load_any_matrix(const std::string& path, std::vector<std::string>* regions) {
    Bxm1 raw = is_bxm1_file(path) ? load_bxm1(path) : load_matrix_csv(path);
    if (regions && raw.meta.contains("regions"))
        *regions = raw.meta["regions"].get<std::vector<std::string>>();
    return std::move(raw.values);
}

// ---------------------------------------------------------------------------
// Command handlers
// ---------------------------------------------------------------------------

void run_simmat(const GlobalOpts& g, const std::vector<std::string>& argv,
                const std::string& input) {
    if (g.output.empty()) throw ConfigError("simmat: --output is required");
    RunManifest m = start_manifest("simmat", argv, g);
    m.add_input(input);
    const RepresentationSet reps = load_representations(input);
    const SimilarityMatrix sim = cosine_similarity_matrix(reps);
    save_similarity_matrix(g.output, sim, parse_matrix_format(g.format));
    m.add_output(g.output);
    finish_manifest(m, g.output);
}

void run_rsa(const GlobalOpts& g, const std::vector<std::string>& argv, const std::string& a_path,
             const std::string& b_path, const std::vector<std::string>& mask_paths) {
    RunManifest m = start_manifest("rsa", argv, g);
    m.add_input(a_path);
    m.add_input(b_path);
    for (const auto& p : mask_paths) m.add_input(p);

    auto load_side = [](const std::string& path) {
        if (is_bxm1_file(path)) {
            const Bxm1 raw = load_bxm1(path);
            if (raw.meta.contains("kind") && raw.meta["kind"] == "simmat")
                return load_similarity_matrix(path);
        }
        return cosine_similarity_matrix(load_representations(path));
    };
    SimilarityMatrix sa = load_side(a_path);
    SimilarityMatrix sb = load_side(b_path);
    if (!mask_paths.empty()) {
        const std::vector<bool> mask = combined_masks(mask_paths, sa.n_stimuli());
        sa = subset(sa, mask, "cli-masks");
        sb = subset(sb, mask, "cli-masks");
    }
    const RsaScore score = rsa(sa, sb);
    const std::string json = score.to_json().dump() + "\n";
    std::cout << json;
    if (!g.output.empty()) {
        write_text_file(g.output, json);
        m.add_output(g.output);
        finish_manifest(m, g.output);
    }
}

void run_resta(const GlobalOpts& g, const std::vector<std::string>& argv,
               std::vector<std::string> inputs, const std::vector<std::string>& series_files,
               int gap, bool delta) {
    if (g.output.empty()) throw ConfigError("resta: --output is required");
    RunManifest m = start_manifest("resta", argv, g);
    m.config["gap"] = gap;
    m.config["delta"] = delta;

    std::vector<std::vector<std::string>> series_paths;
    if (!series_files.empty()) {
        if (!inputs.empty())
            throw ConfigError("resta: give either positional inputs or --series, not both");
        for (const auto& f : series_files) {
            m.add_input(f);
            series_paths.push_back(read_path_list(f));
        }
    } else {
        if (inputs.size() < 2)
            throw ConfigError("resta: need at least 2 representation files in context order");
        series_paths.push_back(std::move(inputs));
    }

    std::vector<StabilityCurve> curves;
    for (const auto& paths : series_paths) {
        std::vector<RepresentationSet> series;
        for (const auto& p : paths) {
            m.add_input(p);
            series.push_back(load_representations(p));
        }
        StabilityCurve curve = stability_curve(series, gap);
        if (delta) curve = delta_curve(curve);
        curves.push_back(std::move(curve));
    }

    std::string text;
    if (curves.size() == 1) {
        text = g.format == "json" ? curve_to_json(curves.front()).dump(2) + "\n"
                                  : curve_to_csv(curves.front());
    } else {
        const auto [mean_curve, std_curve] = block_average(curves);
        if (g.format == "json") {
            nlohmann::json j = {{"mean", curve_to_json(mean_curve)},
                                {"std", curve_to_json(std_curve)}};
            text = j.dump(2) + "\n";
        } else {
            text = curves_to_csv(mean_curve, std_curve);
        }
    }
    write_text_file(g.output, text);
    m.add_output(g.output);
    finish_manifest(m, g.output);
}

void run_crossrsa(const GlobalOpts& g, const std::vector<std::string>& argv,
                  const std::vector<std::string>& inputs) {
    if (g.output.empty()) throw ConfigError("crossrsa: --output is required");
    RunManifest m = start_manifest("crossrsa", argv, g);
    std::vector<RepresentationSet> spaces;
    for (const auto& p : inputs) {
        m.add_input(p);
        spaces.push_back(load_representations(p));
    }
    const RsaGrid grid = rsa_grid(spaces);
    write_text_file(g.output,
                    g.format == "json" ? grid_to_json(grid).dump(2) + "\n" : grid_to_csv(grid));
    m.add_output(g.output);
    finish_manifest(m, g.output);
}

void run_preprocess(const GlobalOpts& g, const std::vector<std::string>& argv,
                    const std::string& input, const std::string& config_path,
                    PreprocessConfig config, bool drop_constant) {
    if (g.output.empty()) throw ConfigError("preprocess: --output is required");
    RunManifest m = start_manifest("preprocess", argv, g);
    m.add_input(input);
    if (!config_path.empty()) {
        m.add_input(config_path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text_file(config_path));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(config_path + ": bad config JSON: " + e.what());
        }
        if (j.contains("center")) config.center = j["center"].get<bool>();
        if (j.contains("detrend")) config.detrend = j["detrend"].get<bool>();
        if (j.contains("highpass_cutoff_hz"))
            config.highpass_cutoff_hz = j["highpass_cutoff_hz"].get<double>();
        if (j.contains("standardize")) config.standardize = j["standardize"].get<bool>();
        if (j.contains("drop_constant")) drop_constant = j["drop_constant"].get<bool>();
    }
    m.config["center"] = config.center;
    m.config["detrend"] = config.detrend;
    m.config["highpass_cutoff_hz"] = config.highpass_cutoff_hz;
    m.config["standardize"] = config.standardize;
    m.config["drop_constant"] = drop_constant;

    ScanSeries series = load_scan_series(input);
    if (drop_constant) {
        auto [cleaned, mask] = drop_constant_voxels(series);
        series = std::move(cleaned);
        write_text_file(g.output + ".mask.csv", mask_to_csv(mask));
    }
    series = preprocess(series, config);
    save_scan_series(g.output, series);
    m.add_output(g.output);
    if (drop_constant) m.add_output(g.output + ".mask.csv");
    finish_manifest(m, g.output);
}

void run_select_regions(const GlobalOpts& g, const std::vector<std::string>& argv,
                        const std::vector<std::string>& inputs, int k, bool raw) {
    if (g.output.empty()) throw ConfigError("select-regions: --output prefix is required");
    RunManifest m = start_manifest("select-regions", argv, g);
    m.config["k"] = k;
    m.config["raw"] = raw;

    std::vector<ScanSeries> originals;
    std::vector<ScanSeries> ranked_input;
    for (const auto& p : inputs) {
        m.add_input(p);
        ScanSeries s = load_scan_series(p);
        if (!raw) {
            auto [cleaned, mask] = drop_constant_voxels(s);
            ranked_input.push_back(preprocess(cleaned, PreprocessConfig{}));
        } else {
            ranked_input.push_back(s);
        }
        originals.push_back(std::move(s));
    }
    const RegionRanking ranking = rank_regions_cross_subject(ranked_input);
    for (const auto& region : ranking.skipped)
        std::cerr << "warning: region '" << region << "' skipped (no voxels in some subject)\n";

    const std::string ranking_path = g.output + ".ranking.csv";
    write_text_file(ranking_path, ranking_to_csv(ranking));
    m.add_output(ranking_path);
    for (std::size_t i = 0; i < originals.size(); ++i) {
        const VoxelMask mask = select_top_k(ranking, originals[i].region_of_voxel, k);
        const std::string mask_path = g.output + ".mask" + std::to_string(i) + ".csv";
        write_text_file(mask_path, mask_to_csv(mask));
        m.add_output(mask_path);
    }
    finish_manifest(m, ranking_path);
}

void run_align(const GlobalOpts& g, const std::vector<std::string>& argv,
               const std::string& corpus_path, const std::string& lexicon_path,
               AlignmentSpec spec, int n_scans, std::optional<int> block_id) {
    if (g.output.empty()) throw ConfigError("align: --output prefix is required");
    RunManifest m = start_manifest("align", argv, g);
    m.add_input(corpus_path);
    StimulusCorpus corpus = load_corpus(corpus_path);
    if (!lexicon_path.empty()) {
        m.add_input(lexicon_path);
        corpus.character_lexicon = load_lexicon(lexicon_path);
    }
    m.config["scan_period_s"] = spec.scan_period_s;
    m.config["words_per_scan"] = spec.words_per_scan;
    m.config["word_duration_s"] = spec.word_duration_s;
    m.config["delay_s"] = spec.delay_s;
    m.config["n_scans"] = n_scans;
    if (block_id) m.config["block"] = *block_id;

    if (n_scans <= 0) {
        std::size_t n_words = corpus.n_words();
        if (block_id) {
            const auto range = corpus.block_range(*block_id);
            n_words = range.second - range.first;
        }
        n_scans = static_cast<int>((n_words + static_cast<std::size_t>(spec.words_per_scan) - 1) /
                                   static_cast<std::size_t>(spec.words_per_scan));
    }

    const std::vector<ScanWindow> base = build_scan_windows(corpus, spec, n_scans, block_id);
    const std::vector<ScanWindow> delayed = apply_delay(base, spec);

    const std::string windows_path = g.output + ".windows.csv";
    write_text_file(windows_path, windows_to_csv(delayed));
    m.add_output(windows_path);

    const std::string sent_path = g.output + ".sentence_end.csv";
    write_text_file(sent_path, scan_mask_to_csv(delayed, sentence_end_mask(corpus, delayed)));
    m.add_output(sent_path);

    if (!corpus.character_lexicon.empty()) {
        const std::string lex_path = g.output + ".lexicon_mentions.csv";
        write_text_file(lex_path, scan_mask_to_csv(delayed, lexicon_mention_mask(corpus, delayed)));
        m.add_output(lex_path);
    }
    finish_manifest(m, windows_path);
}

void run_compose_bow(const GlobalOpts& g, const std::vector<std::string>& argv,
                     const std::string& corpus_path, const std::string& table_path,
                     const std::string& unit, int words_per_scan, bool no_normalize,
                     const std::string& model_name) {
    if (g.output.empty()) throw ConfigError("compose-bow: --output is required");
    RunManifest m = start_manifest("compose-bow", argv, g);
    m.add_input(corpus_path);
    m.add_input(table_path);
    ComposeOptions opts;
    if (unit == "sentence")
        opts.unit = UnitKind::sentence;
    else if (unit == "scan-window")
        opts.unit = UnitKind::scan_window;
    else
        throw ConfigError("compose-bow: --unit must be sentence or scan-window");
    opts.words_per_scan = words_per_scan;
    opts.normalize_tokens = !no_normalize;
    opts.model_name = model_name;
    m.config["unit"] = unit;
    m.config["words_per_scan"] = words_per_scan;
    m.config["normalize"] = opts.normalize_tokens;

    ComposeStats stats;
    const RepresentationSet reps =
        compose_bag_of_words(load_corpus(corpus_path), load_embedding_table(table_path), opts,
                             &stats);
    if (stats.all_oov_units > 0)
        std::cerr << "warning: " << stats.all_oov_units
                  << " unit(s) had no in-vocabulary tokens and were emitted as zero vectors\n";
    save_representations(g.output, reps, parse_matrix_format(g.format));
    m.config["oov_tokens"] = stats.oov_tokens;
    m.config["all_oov_units"] = stats.all_oov_units;
    m.add_output(g.output);
    finish_manifest(m, g.output);
}

void run_encode(const GlobalOpts& g, const std::vector<std::string>& argv,
                const std::string& x_path, const std::string& y_path, int n_blocks,
                std::vector<std::string> x_files, std::vector<std::string> y_files,
                const std::string& lambda_str, double delay_s) {
    if (g.output.empty()) throw ConfigError("encode: --output prefix is required");
    RunManifest m = start_manifest("encode", argv, g);

    std::optional<double> lambda;
    if (lambda_str != "auto") lambda = parse_double(lambda_str);
    if (lambda && *lambda < 0.0) throw ConfigError("encode: lambda must be >= 0 or 'auto'");
    m.config["lambda"] = lambda_str;
    m.config["delay_s"] = delay_s;
    m.config["blocks"] = n_blocks;

    std::vector<Matrix> x_blocks, y_blocks;
    std::vector<std::string> regions;
    if (!x_files.empty() || !y_files.empty()) {
        if (!x_path.empty() || !y_path.empty())
            throw ConfigError("encode: give either positional X Y or --x-block/--y-block lists, not both");
        if (x_files.size() != y_files.size() || x_files.size() < 2)
            throw ConfigError("encode: need matching --x-block/--y-block lists with at least 2 blocks");
        for (std::size_t i = 0; i < x_files.size(); ++i) {
            m.add_input(x_files[i]);
            m.add_input(y_files[i]);
            x_blocks.push_back(load_any_matrix(x_files[i], nullptr));
            y_blocks.push_back(load_any_matrix(y_files[i], i == 0 ? &regions : nullptr));
        }
    } else {
        if (x_path.empty() || y_path.empty())
            throw ConfigError("encode: X and Y inputs are required");
        if (n_blocks < 2) throw ConfigError("encode: --blocks must be >= 2");
        m.add_input(x_path);
        m.add_input(y_path);
        const Matrix x = load_any_matrix(x_path, nullptr);
        const Matrix y = load_any_matrix(y_path, &regions);
        if (x.rows() != y.rows()) throw ShapeError("encode: X and Y row counts differ");
        const std::size_t rows_per_block = x.rows() / static_cast<std::size_t>(n_blocks);
        if (rows_per_block < 2)
            throw ConfigError("encode: blocks would have fewer than 2 rows each");
        for (int b = 0; b < n_blocks; ++b) {
            const std::size_t begin = static_cast<std::size_t>(b) * rows_per_block;
            const std::size_t end =
                b + 1 == n_blocks ? x.rows() : begin + rows_per_block;
            Matrix xb(end - begin, x.cols());
            Matrix yb(end - begin, y.cols());
            for (std::size_t i = begin; i < end; ++i) {
                std::copy(x.row(i).begin(), x.row(i).end(), xb.row(i - begin).begin());
                std::copy(y.row(i).begin(), y.row(i).end(), yb.row(i - begin).begin());
            }
            x_blocks.push_back(std::move(xb));
            y_blocks.push_back(std::move(yb));
        }
    }
    if (!regions.empty() && regions.size() != y_blocks.front().cols()) regions.clear();

    const BlockCvResult result = block_cv(x_blocks, y_blocks, lambda, regions);

    // Per-voxel scores averaged over folds.
    const std::size_t v = y_blocks.front().cols();
    EncodingScore avg;
    avg.per_voxel_ev.assign(v, 0.0);
    for (const auto& fold : result.folds)
        for (std::size_t j = 0; j < v; ++j) avg.per_voxel_ev[j] += fold.score.per_voxel_ev[j];
    for (std::size_t j = 0; j < v; ++j)
        avg.per_voxel_ev[j] /= static_cast<double>(result.folds.size());
    avg.mean_ev = mean(avg.per_voxel_ev);

    const std::string voxels_path = g.output + ".voxels.csv";
    write_text_file(voxels_path, score_to_csv(avg, regions));
    m.add_output(voxels_path);

    if (!regions.empty()) {
        std::map<std::string, std::vector<double>> grouped;
        for (std::size_t j = 0; j < v; ++j) grouped[regions[j]].push_back(avg.per_voxel_ev[j]);
        std::string csv = "region_label,mean_ev\n";
        for (const auto& [region, vals] : grouped)
            csv += region + "," + format_double(mean(vals)) + "\n";
        const std::string regions_path = g.output + ".regions.csv";
        write_text_file(regions_path, csv);
        m.add_output(regions_path);
    }

    nlohmann::json folds_json = result.to_json();
    folds_json["delay_s"] = delay_s;
    const std::string folds_path = g.output + ".folds.json";
    write_text_file(folds_path, folds_json.dump(2) + "\n");
    m.add_output(folds_path);
    finish_manifest(m, voxels_path);
}

void run_synth_reps(const GlobalOpts& g, const std::vector<std::string>& argv,
                    SynthRepsOptions opts, const FileFormat format) {
    if (g.output.empty()) throw ConfigError("synth-reps: --output prefix is required");
    opts.seed = g.seed;
    RunManifest m = start_manifest("synth-reps", argv, g);
    m.config["n"] = opts.n;
    m.config["d"] = opts.d;
    m.config["context_series"] = opts.context_series;
    m.config["perturb"] = opts.perturb;
    m.config["rotate"] = opts.rotate;

    const SynthReps out = synth_reps(opts);
    const std::string ext = format == FileFormat::bxm1 ? ".bxm1" : ".csv";
    std::string anchor;
    if (opts.context_series > 0) {
        for (std::size_t c = 0; c < out.series.size(); ++c) {
            const std::string path = g.output + "_c" + std::to_string(c) + ext;
            save_representations(path, out.series[c], format);
            if (anchor.empty()) anchor = path;
            m.add_output(path);
        }
    } else {
        anchor = g.output + ext;
        save_representations(anchor, out.series.front(), format);
        m.add_output(anchor);
    }
    if (out.rotated) {
        const std::string path = g.output + "_rotated" + ext;
        save_representations(path, *out.rotated, format);
        m.add_output(path);
    }
    finish_manifest(m, g.output);
}

void run_synth_brain(const GlobalOpts& g, const std::vector<std::string>& argv,
                     const std::string& reps_path, SynthBrainOptions opts,
                     const std::string& signal_regions_str) {
    if (g.output.empty()) throw ConfigError("synth-brain: --output prefix is required");
    opts.seed = g.seed;
    if (!signal_regions_str.empty()) {
        for (const auto part : split(signal_regions_str, ','))
            opts.signal_regions.push_back(static_cast<int>(parse_int(part)));
    }
    RunManifest m = start_manifest("synth-brain", argv, g);
    m.add_input(reps_path);
    m.config["lag_scans"] = opts.lag_scans;
    m.config["noise"] = opts.sigma;
    m.config["regions"] = opts.n_regions;
    m.config["voxels_per_region"] = opts.voxels_per_region;
    m.config["subjects"] = opts.n_subjects;
    m.config["signal_regions"] = opts.signal_regions;
    m.config["identity_map"] = opts.identity_map;

    const RepresentationSet reps = load_representations(reps_path);
    const std::vector<ScanSeries> subjects = synth_brain(reps, opts);
    std::string anchor;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        const std::string path = g.output + "_sub" + std::to_string(i) + ".bxm1";
        save_scan_series(path, subjects[i]);
        if (anchor.empty()) anchor = path;
        m.add_output(path);
    }
    finish_manifest(m, g.output);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Representational similarity and stability analysis pipeline"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--output,-o", g.output, "Output file or prefix");
    app.add_option("--seed", g.seed, "Seed for synthetic data generators");
    app.add_option("--threads", g.threads,
                   "Worker cap (env REPSTAB_THREADS as fallback); results do not depend on it");
    app.add_option("--format", g.format, "Output format: csv, json or bxm1")
        ->check(CLI::IsMember({"csv", "json", "bxm1"}));

    const std::vector<std::string> raw_argv(argv + 1, argv + argc);

    // simmat
    std::string sm_input;
    auto* simmat = app.add_subcommand("simmat", "Cosine similarity matrix of a representation set");
    simmat->fallthrough();
    simmat->add_option("input", sm_input, "Representation file (BXM1 or CSV)")->required();

    // rsa
    std::string rsa_a, rsa_b;
    std::vector<std::string> rsa_masks;
    auto* rsa_cmd = app.add_subcommand("rsa", "RSA score between two spaces (JSON to stdout)");
    rsa_cmd->fallthrough();
    rsa_cmd->add_option("a", rsa_a, "First space (representations or simmat)")->required();
    rsa_cmd->add_option("b", rsa_b, "Second space (representations or simmat)")->required();
    rsa_cmd->add_option("--masks", rsa_masks, "Scan mask CSVs applied to both sides (ANDed)");

    // resta
    std::vector<std::string> resta_inputs, resta_series;
    int resta_gap = 1;
    bool resta_delta = false;
    auto* resta_cmd = app.add_subcommand("resta", "Stability curve over a context-length series");
    resta_cmd->fallthrough();
    resta_cmd->add_option("inputs", resta_inputs, "Representation files in context order");
    resta_cmd->add_option("--series", resta_series,
                          "List file(s) with one representation path per line; several lists "
                          "are averaged as blocks");
    resta_cmd->add_option("--gap", resta_gap, "Comparison stride between context lengths");
    resta_cmd->add_flag("--delta", resta_delta, "Emit adjacent differences of the curve");

    // crossrsa
    std::vector<std::string> cross_inputs;
    auto* cross_cmd = app.add_subcommand("crossrsa", "Pairwise RSA grid across spaces");
    cross_cmd->fallthrough();
    cross_cmd->add_option("inputs", cross_inputs, "Representation files")->expected(-2);

    // preprocess
    std::string pp_input, pp_config;
    PreprocessConfig pp;
    bool pp_no_center = false, pp_no_detrend = false, pp_no_standardize = false;
    bool pp_no_drop_constant = false;
    auto* pp_cmd = app.add_subcommand("preprocess", "Clean a scan series");
    pp_cmd->fallthrough();
    pp_cmd->add_option("input", pp_input, "Scan series (BXM1)")->required();
    pp_cmd->add_option("--config", pp_config, "JSON file overriding the flags");
    pp_cmd->add_flag("--no-center", pp_no_center, "Skip per-voxel mean removal");
    pp_cmd->add_flag("--no-detrend", pp_no_detrend, "Skip linear detrending");
    pp_cmd->add_option("--highpass", pp.highpass_cutoff_hz,
                       "High-pass cutoff in Hz (0 disables)")
        ->capture_default_str();
    pp_cmd->add_flag("--no-standardize", pp_no_standardize, "Skip unit-variance scaling");
    pp_cmd->add_flag("--no-drop-constant", pp_no_drop_constant, "Keep constant voxels");

    // select-regions
    std::vector<std::string> sel_inputs;
    int sel_k = 16;
    bool sel_raw = false;
    auto* sel_cmd = app.add_subcommand("select-regions",
                                       "Rank regions by cross-subject similarity, emit top-k masks");
    sel_cmd->fallthrough();
    sel_cmd->add_option("subjects", sel_inputs, "Scan series files, one per subject")
        ->expected(-2);
    sel_cmd->add_option("--k", sel_k, "Number of regions to keep")->capture_default_str();
    sel_cmd->add_flag("--raw", sel_raw, "Rank on raw series instead of preprocessed");

    // align
    std::string al_corpus, al_lexicon;
    AlignmentSpec al_spec;
    int al_n_scans = 0;
    int al_block = -1;
    auto* al_cmd = app.add_subcommand("align", "Scan windows and story-segment masks");
    al_cmd->fallthrough();
    al_cmd->add_option("corpus", al_corpus, "Corpus file (token<TAB>sentence<TAB>block)")
        ->required();
    al_cmd->add_option("--lexicon", al_lexicon, "Character lexicon, one token per line");
    al_cmd->add_option("--scan-period", al_spec.scan_period_s, "Scan period in seconds")
        ->capture_default_str();
    al_cmd->add_option("--words-per-scan", al_spec.words_per_scan, "Words shown per scan")
        ->capture_default_str();
    al_cmd->add_option("--word-duration", al_spec.word_duration_s, "Word display time in seconds")
        ->capture_default_str();
    al_cmd->add_option("--delay", al_spec.delay_s,
                       "Hemodynamic delay in seconds (multiple of the scan period)")
        ->capture_default_str();
    al_cmd->add_option("--n-scans", al_n_scans, "Scan count (0 = cover all words)");
    al_cmd->add_option("--block", al_block, "Restrict to one block id");

    // compose-bow
    std::string bow_corpus, bow_table, bow_unit = "sentence", bow_model = "bow";
    int bow_wps = 4;
    bool bow_no_normalize = false;
    auto* bow_cmd = app.add_subcommand("compose-bow", "Bag-of-words representations from a corpus");
    bow_cmd->fallthrough();
    bow_cmd->add_option("corpus", bow_corpus, "Corpus file")->required();
    bow_cmd->add_option("table", bow_table, "Embedding table file")->required();
    bow_cmd->add_option("--unit", bow_unit, "sentence or scan-window")->capture_default_str();
    bow_cmd->add_option("--words-per-scan", bow_wps, "Window width for scan-window units")
        ->capture_default_str();
    bow_cmd->add_flag("--no-normalize", bow_no_normalize,
                      "Skip lowercasing/punctuation stripping before lookup");
    bow_cmd->add_option("--model-name", bow_model, "model_name recorded in the output meta")
        ->capture_default_str();

    // encode
    std::string en_x, en_y, en_lambda = "auto";
    std::vector<std::string> en_xs, en_ys;
    int en_blocks = 0;
    double en_delay = 0.0;
    auto* en_cmd = app.add_subcommand("encode",
                                      "Ridge encoding model with leave-one-block-out validation");
    en_cmd->fallthrough();
    en_cmd->add_option("x", en_x, "Feature matrix (all blocks stacked)");
    en_cmd->add_option("y", en_y, "Target matrix (all blocks stacked)");
    en_cmd->add_option("--blocks", en_blocks, "Split stacked inputs into this many blocks");
    en_cmd->add_option("--x-block", en_xs, "Per-block feature files");
    en_cmd->add_option("--y-block", en_ys, "Per-block target files");
    en_cmd->add_option("--lambda", en_lambda, "Ridge penalty, or 'auto' for inner-fold selection")
        ->capture_default_str();
    en_cmd->add_option("--delay", en_delay, "Delay (s) the inputs were shifted by; recorded only");

    // synth-reps
    SynthRepsOptions sr;
    auto* sr_cmd = app.add_subcommand("synth-reps", "Deterministic random representation files");
    sr_cmd->fallthrough();
    sr_cmd->add_option("--n", sr.n, "Stimulus count")->capture_default_str();
    sr_cmd->add_option("--d", sr.d, "Feature dimension")->capture_default_str();
    sr_cmd->add_option("--context-series", sr.context_series,
                       "Emit this many sets, set c = base + c*eps*E");
    sr_cmd->add_option("--perturb", sr.perturb, "Perturbation scale eps for the series");
    sr_cmd->add_flag("--rotate", sr.rotate, "Also emit an orthogonally rotated copy");
    sr_cmd->add_option("--model-name", sr.model_name, "model_name recorded in the output meta")
        ->capture_default_str();

    // synth-brain
    std::string sb_reps, sb_signal;
    SynthBrainOptions sb;
    auto* sb_cmd = app.add_subcommand("synth-brain", "Synthetic subjects from a representation file");
    sb_cmd->fallthrough();
    sb_cmd->add_option("reps", sb_reps, "Representation file driving the signal")->required();
    sb_cmd->add_option("--lag-scans", sb.lag_scans, "Shift of the signal in scans")
        ->capture_default_str();
    sb_cmd->add_option("--noise", sb.sigma, "IID noise scale sigma")->capture_default_str();
    sb_cmd->add_option("--regions", sb.n_regions, "Region count")->capture_default_str();
    sb_cmd->add_option("--voxels-per-region", sb.voxels_per_region, "Voxels per region")
        ->capture_default_str();
    sb_cmd->add_option("--subjects", sb.n_subjects, "Subject count")->capture_default_str();
    sb_cmd->add_option("--signal-regions", sb_signal,
                       "Comma-separated region indices carrying the shared signal (default all)");
    sb_cmd->add_flag("--identity-map", sb.identity_map,
                     "Map representations to voxels with the identity (voxels-per-region == d)");
    sb_cmd->add_option("--scan-period", sb.scan_period_s, "Scan period of the generated series")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (g.threads == 0) {
        if (const char* env = std::getenv("REPSTAB_THREADS")) {
            try {
                g.threads = static_cast<int>(parse_int(env));
            } catch (const FormatError&) {
                std::cerr << "error: REPSTAB_THREADS is not an integer\n";
                return 2;
            }
        }
    }
    set_max_threads(g.threads);

    try {
        if (simmat->parsed()) run_simmat(g, raw_argv, sm_input);
        if (rsa_cmd->parsed()) run_rsa(g, raw_argv, rsa_a, rsa_b, rsa_masks);
        if (resta_cmd->parsed())
            run_resta(g, raw_argv, resta_inputs, resta_series, resta_gap, resta_delta);
        if (cross_cmd->parsed()) run_crossrsa(g, raw_argv, cross_inputs);
        if (pp_cmd->parsed()) {
            pp.center = !pp_no_center;
            pp.detrend = !pp_no_detrend;
            pp.standardize = !pp_no_standardize;
            run_preprocess(g, raw_argv, pp_input, pp_config, pp, !pp_no_drop_constant);
        }
        if (sel_cmd->parsed()) run_select_regions(g, raw_argv, sel_inputs, sel_k, sel_raw);
        if (al_cmd->parsed())
            run_align(g, raw_argv, al_corpus, al_lexicon, al_spec, al_n_scans,
                      al_block >= 0 ? std::optional<int>(al_block) : std::nullopt);
        if (bow_cmd->parsed())
            run_compose_bow(g, raw_argv, bow_corpus, bow_table, bow_unit, bow_wps,
                            bow_no_normalize, bow_model);
        if (en_cmd->parsed())
            run_encode(g, raw_argv, en_x, en_y, en_blocks, en_xs, en_ys, en_lambda, en_delay);
        if (sr_cmd->parsed()) run_synth_reps(g, raw_argv, sr, parse_matrix_format(g.format));
        if (sb_cmd->parsed()) run_synth_brain(g, raw_argv, sb_reps, sb, sb_signal);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
