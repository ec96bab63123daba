#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "repstab/matrix.hpp"

namespace repstab {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct RepMeta {
    std::string model_name;
    int layer = 0;
    int context_length = 0;
    std::optional<int> block_id;
    std::vector<std::string> stimulus_ids;

    friend bool operator==(const RepMeta&, const RepMeta&) = default;
};

// One vector per stimulus from a model layer, a bag-of-words composition,
// or a brain recording adapted through align::select_scans.
struct RepresentationSet {
    Matrix values; // N x D
    RepMeta meta;

    std::size_t n_stimuli() const { return values.rows(); }
    std::size_t dim() const { return values.cols(); }

    // Enforces N>=1, D>=1, finite values, unique ids of length N.
    void validate() const;

    friend bool operator==(const RepresentationSet&, const RepresentationSet&) = default;
};

class EmbeddingTable {
public:
    EmbeddingTable() = default;

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }

    // nullptr when the token is out of vocabulary.
    const std::vector<double>* find(const std::string& token) const;
    void insert(const std::string& token, std::vector<double> vec);

private:
    std::size_t dim_ = 0;
    std::unordered_map<std::string, std::vector<double>> vectors_;
};

struct CorpusWord {
    std::string token;
    int sentence_index = 0;
    int block_id = 0;

    friend bool operator==(const CorpusWord&, const CorpusWord&) = default;
};

// Ordered word stream of the stimulus text, annotated with sentence and
// block membership, plus the lexicon used for mention masks.
struct StimulusCorpus {
    std::vector<CorpusWord> words;
    std::set<std::string> character_lexicon;

    std::size_t n_words() const { return words.size(); }
    std::vector<int> block_ids() const; // distinct blocks, in order
    // [first, last) word positions of a block; blocks are contiguous runs.
    std::pair<std::size_t, std::size_t> block_range(int block_id) const;

    void validate() const;
};

struct ScanSeries {
    Matrix values; // T x V
    std::vector<std::string> region_of_voxel;
    std::string subject_id;
    int block_id = 0;
    double scan_period_s = 2.0;

    std::size_t n_scans() const { return values.rows(); }
    std::size_t n_voxels() const { return values.cols(); }
    std::vector<std::string> atlas() const; // distinct labels, first-appearance order

    void validate() const;

    friend bool operator==(const ScanSeries&, const ScanSeries&) = default;
};

// ---------------------------------------------------------------------------
// BXM1 container (bit-exact binary matrix format)
//
//   "BXM1\n"
//   one JSON line: {"rows": R, "cols": C, "dtype": "f64"|"f32", "meta": {...}}\n
//   R*C values, row-major, little-endian
//
// Writers always emit f64; f32 payloads are widened on read.
// ---------------------------------------------------------------------------

struct Bxm1 {
    Matrix values;
    nlohmann::json meta;
};

void save_bxm1(const std::string& path, const Matrix& values, const nlohmann::json& meta);
Bxm1 load_bxm1(const std::string& path);
bool is_bxm1_file(const std::string& path);

// CSV alternative: optional first line "# meta: <JSON>", then one row per
// line of comma-separated decimals (shortest round-trip form on write).
void save_matrix_csv(const std::string& path, const Matrix& values, const nlohmann::json& meta);
Bxm1 load_matrix_csv(const std::string& path);

enum class FileFormat { bxm1, csv };

// ---------------------------------------------------------------------------
// Loaders / savers for the domain types
// ---------------------------------------------------------------------------

void save_representations(const std::string& path, const RepresentationSet& reps,
                          FileFormat format = FileFormat::bxm1);
// Sniffs BXM1 magic vs. headered CSV.
RepresentationSet load_representations(const std::string& path);

void save_scan_series(const std::string& path, const ScanSeries& series);
ScanSeries load_scan_series(const std::string& path);

nlohmann::json rep_meta_to_json(const RepMeta& meta);
RepMeta rep_meta_from_json(const nlohmann::json& j, std::size_t n_rows);
nlohmann::json scan_meta_to_json(const ScanSeries& series);

// One token per line followed by D whitespace-separated decimals.
EmbeddingTable load_embedding_table(const std::string& path);

// One word per line: token<TAB>sentence_index<TAB>block_id.
StimulusCorpus load_corpus(const std::string& path);
void save_corpus(const std::string& path, const StimulusCorpus& corpus);
// One token per line; entries are normalized like embedding lookups.
std::set<std::string> load_lexicon(const std::string& path);

std::vector<std::string> make_default_ids(std::size_t n);

// ---------------------------------------------------------------------------
// Bag-of-words composition
// ---------------------------------------------------------------------------

enum class UnitKind { sentence, scan_window };

struct ComposeOptions {
    UnitKind unit = UnitKind::sentence;
    int words_per_scan = 4;        // only used for scan_window units
    bool normalize_tokens = true;  // lowercase + strip punctuation before lookup
    std::string model_name = "bow";
};

struct ComposeStats {
    std::size_t oov_tokens = 0;
    std::size_t all_oov_units = 0; // warning count: units emitted as zero vectors
};

// Each output row is the arithmetic mean of the embedding vectors of the
// unit's in-vocabulary tokens, accumulated in sorted-token order so the
// result is exactly permutation invariant.
RepresentationSet compose_bag_of_words(const StimulusCorpus& corpus, const EmbeddingTable& table,
                                       const ComposeOptions& opts = {},
                                       ComposeStats* stats = nullptr);

} // namespace repstab
