#include "repstab/repstore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "repstab/errors.hpp"
#include "repstab/textio.hpp"

namespace repstab {

namespace {

constexpr char kMagic[] = "BXM1\n";
constexpr std::size_t kMagicLen = 5;

std::uint64_t to_le64(std::uint64_t x) {
    if constexpr (std::endian::native == std::endian::little) {
        return x;
    } else {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r = (r << 8) | ((x >> (8 * i)) & 0xffu);
        return r;
    }
}

std::uint32_t to_le32(std::uint32_t x) {
    if constexpr (std::endian::native == std::endian::little) {
        return x;
    } else {
        std::uint32_t r = 0;
        for (int i = 0; i < 4; ++i) r = (r << 8) | ((x >> (8 * i)) & 0xffu);
        return r;
    }
}

void require_finite(const Matrix& m, const std::string& what) {
    if (!m.all_finite())
        throw ValidationError(what + ": NaN or Inf values are not allowed");
}

} // namespace

// ---------------------------------------------------------------------------
// Domain type validation
// ---------------------------------------------------------------------------

void RepresentationSet::validate() const {
    if (values.rows() < 1 || values.cols() < 1)
        throw ValidationError("RepresentationSet: need at least one stimulus and one feature");
    require_finite(values, "RepresentationSet");
    if (meta.stimulus_ids.size() != values.rows())
        throw ValidationError("RepresentationSet: stimulus_ids length must equal row count");
    std::unordered_set<std::string> seen;
    for (const auto& id : meta.stimulus_ids)
        if (!seen.insert(id).second)
            throw ValidationError("RepresentationSet: duplicate stimulus id '" + id + "'");
    if (meta.context_length < 0)
        throw ValidationError("RepresentationSet: context_length must be >= 0");
}

std::vector<int> StimulusCorpus::block_ids() const {
    std::vector<int> out;
    for (const auto& w : words)
        if (out.empty() || out.back() != w.block_id) out.push_back(w.block_id);
    return out;
}

std::pair<std::size_t, std::size_t> StimulusCorpus::block_range(int block_id) const {
    std::size_t first = words.size();
    std::size_t last = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (words[i].block_id == block_id) {
            first = std::min(first, i);
            last = i + 1;
        }
    }
    if (first >= last)
        throw ValidationError("StimulusCorpus: no such block " + std::to_string(block_id));
    return {first, last};
}

void StimulusCorpus::validate() const {
    std::set<int> closed;
    int current_block = 0;
    int current_sentence = -1;
    bool have_block = false;
    for (const auto& w : words) {
        if (w.token.empty()) throw ValidationError("StimulusCorpus: empty token");
        if (w.sentence_index < 0)
            throw ValidationError("StimulusCorpus: negative sentence index");
        if (!have_block || w.block_id != current_block) {
            if (closed.count(w.block_id))
                throw ValidationError("StimulusCorpus: block " + std::to_string(w.block_id) +
                                      " is not a contiguous run");
            if (have_block) closed.insert(current_block);
            current_block = w.block_id;
            current_sentence = -1;
            have_block = true;
        }
        if (w.sentence_index < current_sentence)
            throw ValidationError("StimulusCorpus: sentence_index decreases within block " +
                                  std::to_string(w.block_id));
        current_sentence = w.sentence_index;
    }
}

std::vector<std::string> ScanSeries::atlas() const {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& r : region_of_voxel)
        if (seen.insert(r).second) out.push_back(r);
    return out;
}

void ScanSeries::validate() const {
    if (values.rows() < 2) throw ValidationError("ScanSeries: need at least 2 scans");
    if (values.cols() < 1) throw ValidationError("ScanSeries: need at least 1 voxel");
    require_finite(values, "ScanSeries");
    if (region_of_voxel.size() != values.cols())
        throw ValidationError("ScanSeries: region label array length must equal voxel count");
    if (!(scan_period_s > 0.0)) throw ValidationError("ScanSeries: scan_period_s must be > 0");
}

// ---------------------------------------------------------------------------
// BXM1 container
// ---------------------------------------------------------------------------

void save_bxm1(const std::string& path, const Matrix& values, const nlohmann::json& meta) {
    require_finite(values, "save_bxm1");
    nlohmann::json header = {{"rows", values.rows()},
                             {"cols", values.cols()},
                             {"dtype", "f64"},
                             {"meta", meta.is_null() ? nlohmann::json::object() : meta}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out.write(kMagic, kMagicLen);
    const std::string header_line = header.dump();
    out.write(header_line.data(), static_cast<std::streamsize>(header_line.size()));
    out.put('\n');
    std::vector<std::uint64_t> buf(values.rows() * values.cols());
    const double* src = values.data();
    for (std::size_t i = 0; i < buf.size(); ++i)
        buf[i] = to_le64(std::bit_cast<std::uint64_t>(src[i]));
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(std::uint64_t)));
    if (!out) throw IoError("write failed: " + path);
}

Bxm1 load_bxm1(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);

    char magic[kMagicLen];
    if (!in.read(magic, kMagicLen) || std::memcmp(magic, kMagic, kMagicLen) != 0)
        throw FormatError(path + ": missing BXM1 magic");

    std::string header_line;
    if (!std::getline(in, header_line))
        throw FormatError(path + ": missing BXM1 header line");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_line);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": bad BXM1 header JSON: " + e.what());
    }
    if (!header.is_object() || !header.contains("rows") || !header.contains("cols") ||
        !header.contains("dtype") || !header.contains("meta"))
        throw FormatError(path + ": BXM1 header must carry rows, cols, dtype, meta");
    if (!header["rows"].is_number_integer() || !header["cols"].is_number_integer())
        throw FormatError(path + ": BXM1 rows/cols must be integers");
    const long long rows = header["rows"].get<long long>();
    const long long cols = header["cols"].get<long long>();
    if (rows < 0 || cols < 0) throw FormatError(path + ": negative BXM1 dimensions");
    const std::string dtype = header["dtype"].get<std::string>();
    if (dtype != "f64" && dtype != "f32")
        throw FormatError(path + ": unsupported dtype '" + dtype + "'");

    const std::size_t n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    const std::size_t value_size = dtype == "f64" ? 8 : 4;
    std::vector<char> payload(n * value_size);
    in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (static_cast<std::size_t>(in.gcount()) != payload.size())
        throw FormatError(path + ": truncated payload, expected " + std::to_string(rows) +
                          " rows of " + std::to_string(cols) + " values");
    char extra;
    if (in.read(&extra, 1))
        throw FormatError(path + ": trailing bytes after payload");

    std::vector<double> data(n);
    if (dtype == "f64") {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t raw;
            std::memcpy(&raw, payload.data() + i * 8, 8);
            data[i] = std::bit_cast<double>(to_le64(raw));
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t raw;
            std::memcpy(&raw, payload.data() + i * 4, 4);
            data[i] = static_cast<double>(std::bit_cast<float>(to_le32(raw)));
        }
    }
    Matrix values(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(data));
    require_finite(values, path);
    return {std::move(values), header["meta"]};
}

bool is_bxm1_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    char magic[kMagicLen];
    return in.read(magic, kMagicLen) && std::memcmp(magic, kMagic, kMagicLen) == 0;
}

void save_matrix_csv(const std::string& path, const Matrix& values, const nlohmann::json& meta) {
    require_finite(values, "save_matrix_csv");
    std::string out;
    if (!meta.is_null() && !(meta.is_object() && meta.empty()))
        out += "# meta: " + meta.dump() + "\n";
    for (std::size_t i = 0; i < values.rows(); ++i) {
        for (std::size_t j = 0; j < values.cols(); ++j) {
            if (j) out += ',';
            out += format_double(values(i, j));
        }
        out += '\n';
    }
    write_text_file(path, out);
}

Bxm1 load_matrix_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    nlohmann::json meta = nlohmann::json::object();
    std::vector<double> data;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::size_t pos = 0;
    bool first_line = true;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (first_line && line.starts_with("# meta:")) {
            try {
                meta = nlohmann::json::parse(line.substr(7));
            } catch (const nlohmann::json::exception& e) {
                throw FormatError(path + ": bad CSV meta line: " + e.what());
            }
            first_line = false;
            continue;
        }
        first_line = false;
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (cols == 0) cols = fields.size();
        if (fields.size() != cols)
            throw FormatError(path + ": ragged CSV row " + std::to_string(rows + 1) + " (" +
                              std::to_string(fields.size()) + " vs " + std::to_string(cols) +
                              " columns)");
        for (const auto f : fields) data.push_back(parse_double(f));
        ++rows;
    }
    Matrix values(rows, cols == 0 ? 0 : cols, std::move(data));
    require_finite(values, path);
    return {std::move(values), std::move(meta)};
}

// ---------------------------------------------------------------------------
// Typed loaders / savers
// ---------------------------------------------------------------------------

nlohmann::json rep_meta_to_json(const RepMeta& meta) {
    nlohmann::json j = {{"kind", "reps"},
                        {"model_name", meta.model_name},
                        {"layer", meta.layer},
                        {"context_length", meta.context_length},
                        {"stimulus_ids", meta.stimulus_ids}};
    if (meta.block_id)
        j["block_id"] = *meta.block_id;
    else
        j["block_id"] = nullptr;
    return j;
}

RepMeta rep_meta_from_json(const nlohmann::json& j, std::size_t n_rows) {
    RepMeta meta;
    if (j.contains("kind") && j["kind"].is_string() && j["kind"] != "reps")
        throw FormatError("expected a representation file, found kind '" +
                          j["kind"].get<std::string>() + "'");
    if (j.contains("model_name")) meta.model_name = j["model_name"].get<std::string>();
    if (j.contains("layer")) meta.layer = j["layer"].get<int>();
    if (j.contains("context_length")) meta.context_length = j["context_length"].get<int>();
    if (j.contains("block_id") && !j["block_id"].is_null())
        meta.block_id = j["block_id"].get<int>();
    if (j.contains("stimulus_ids"))
        meta.stimulus_ids = j["stimulus_ids"].get<std::vector<std::string>>();
    else
        meta.stimulus_ids = make_default_ids(n_rows);
    return meta;
}

void save_representations(const std::string& path, const RepresentationSet& reps,
                          FileFormat format) {
    reps.validate();
    if (format == FileFormat::bxm1)
        save_bxm1(path, reps.values, rep_meta_to_json(reps.meta));
    else
        save_matrix_csv(path, reps.values, rep_meta_to_json(reps.meta));
}

RepresentationSet load_representations(const std::string& path) {
    Bxm1 raw = is_bxm1_file(path) ? load_bxm1(path) : load_matrix_csv(path);
    RepresentationSet reps;
    reps.meta = rep_meta_from_json(raw.meta, raw.values.rows());
    reps.values = std::move(raw.values);
    reps.validate();
    return reps;
}

nlohmann::json scan_meta_to_json(const ScanSeries& series) {
    return {{"kind", "scans"},
            {"subject_id", series.subject_id},
            {"block_id", series.block_id},
            {"scan_period_s", series.scan_period_s},
            {"regions", series.region_of_voxel}};
}

void save_scan_series(const std::string& path, const ScanSeries& series) {
    series.validate();
    save_bxm1(path, series.values, scan_meta_to_json(series));
}

ScanSeries load_scan_series(const std::string& path) {
    Bxm1 raw = load_bxm1(path);
    const nlohmann::json& j = raw.meta;
    if (j.contains("kind") && j["kind"].is_string() && j["kind"] != "scans")
        throw FormatError(path + ": expected a scan series file, found kind '" +
                          j["kind"].get<std::string>() + "'");
    if (!j.contains("subject_id") || !j.contains("block_id") || !j.contains("scan_period_s") ||
        !j.contains("regions"))
        throw FormatError(path + ": scan series header needs subject_id, block_id, "
                                 "scan_period_s and regions");
    ScanSeries series;
    series.values = std::move(raw.values);
    series.subject_id = j["subject_id"].get<std::string>();
    series.block_id = j["block_id"].get<int>();
    series.scan_period_s = j["scan_period_s"].get<double>();
    series.region_of_voxel = j["regions"].get<std::vector<std::string>>();
    series.validate();
    return series;
}

const std::vector<double>* EmbeddingTable::find(const std::string& token) const {
    auto it = vectors_.find(token);
    return it == vectors_.end() ? nullptr : &it->second;
}

void EmbeddingTable::insert(const std::string& token, std::vector<double> vec) {
    if (token.empty()) throw ValidationError("EmbeddingTable: empty token");
    if (vectors_.empty())
        dim_ = vec.size();
    else if (vec.size() != dim_)
        throw FormatError("EmbeddingTable: vector for '" + token + "' has dimension " +
                          std::to_string(vec.size()) + ", expected " + std::to_string(dim_));
    if (dim_ == 0) throw FormatError("EmbeddingTable: zero-dimensional vector for '" + token + "'");
    if (!vectors_.emplace(token, std::move(vec)).second)
        throw ValidationError("EmbeddingTable: duplicate token '" + token + "'");
}

EmbeddingTable load_embedding_table(const std::string& path) {
    const std::string text = read_text_file(path);
    EmbeddingTable table;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto fields = split_whitespace(line);
        if (fields.empty()) continue;
        if (fields.size() < 2)
            throw FormatError(path + ": line with token '" + std::string(fields[0]) +
                              "' has no vector values");
        std::vector<double> vec;
        vec.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) vec.push_back(parse_double(fields[i]));
        for (double v : vec)
            if (!std::isfinite(v))
                throw ValidationError(path + ": non-finite embedding value for '" +
                                      std::string(fields[0]) + "'");
        table.insert(std::string(fields[0]), std::move(vec));
    }
    if (table.size() == 0) throw FormatError(path + ": empty embedding table");
    return table;
}

StimulusCorpus load_corpus(const std::string& path) {
    const std::string text = read_text_file(path);
    StimulusCorpus corpus;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split(line, '\t');
        if (fields.size() != 3)
            throw FormatError(path + ":" + std::to_string(line_no) +
                              ": expected token<TAB>sentence_index<TAB>block_id");
        CorpusWord w;
        w.token = std::string(fields[0]);
        w.sentence_index = static_cast<int>(parse_int(fields[1]));
        w.block_id = static_cast<int>(parse_int(fields[2]));
        corpus.words.push_back(std::move(w));
    }
    corpus.validate();
    return corpus;
}

void save_corpus(const std::string& path, const StimulusCorpus& corpus) {
    std::string out;
    for (const auto& w : corpus.words) {
        out += w.token;
        out += '\t';
        out += std::to_string(w.sentence_index);
        out += '\t';
        out += std::to_string(w.block_id);
        out += '\n';
    }
    write_text_file(path, out);
}

std::set<std::string> load_lexicon(const std::string& path) {
    const std::string text = read_text_file(path);
    std::set<std::string> lexicon;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        const std::string norm = normalize_token(line);
        if (!norm.empty()) lexicon.insert(norm);
    }
    return lexicon;
}

std::vector<std::string> make_default_ids(std::size_t n) {
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = "s" + std::to_string(i);
    return ids;
}

// ---------------------------------------------------------------------------
// Bag of words
// ---------------------------------------------------------------------------

namespace {

struct Unit {
    std::string id;
    std::vector<std::size_t> word_positions;
};

std::vector<Unit> sentence_units(const StimulusCorpus& corpus) {
    std::vector<Unit> units;
    for (std::size_t i = 0; i < corpus.words.size(); ++i) {
        const auto& w = corpus.words[i];
        const bool new_unit = units.empty() || corpus.words[i - 1].block_id != w.block_id ||
                              corpus.words[i - 1].sentence_index != w.sentence_index;
        if (new_unit) {
            units.push_back({"b" + std::to_string(w.block_id) + "_s" +
                                 std::to_string(w.sentence_index),
                             {}});
        }
        units.back().word_positions.push_back(i);
    }
    return units;
}

std::vector<Unit> window_units(const StimulusCorpus& corpus, int words_per_scan) {
    if (words_per_scan < 1) throw ConfigError("compose_bag_of_words: words_per_scan must be >= 1");
    std::vector<Unit> units;
    for (int block : corpus.block_ids()) {
        const auto [first, last] = corpus.block_range(block);
        const std::size_t wps = static_cast<std::size_t>(words_per_scan);
        std::size_t scan = 0;
        for (std::size_t start = first; start < last; start += wps, ++scan) {
            Unit u;
            u.id = "b" + std::to_string(block) + "_w" + std::to_string(scan);
            for (std::size_t p = start; p < std::min(start + wps, last); ++p)
                u.word_positions.push_back(p);
            units.push_back(std::move(u));
        }
    }
    return units;
}

} // namespace

RepresentationSet compose_bag_of_words(const StimulusCorpus& corpus, const EmbeddingTable& table,
                                       const ComposeOptions& opts, ComposeStats* stats) {
    corpus.validate();
    if (table.size() == 0 || table.dim() == 0)
        throw ValidationError("compose_bag_of_words: empty embedding table");
    const std::vector<Unit> units = opts.unit == UnitKind::sentence
                                        ? sentence_units(corpus)
                                        : window_units(corpus, opts.words_per_scan);
    if (units.empty()) throw ValidationError("compose_bag_of_words: corpus has no units");

    const std::size_t d = table.dim();
    RepresentationSet reps;
    reps.values = Matrix(units.size(), d);
    reps.meta.model_name = opts.model_name;
    ComposeStats local;

    for (std::size_t u = 0; u < units.size(); ++u) {
        // Sorted token order makes the mean exactly permutation invariant.
        std::vector<std::pair<std::string, const std::vector<double>*>> hits;
        for (std::size_t p : units[u].word_positions) {
            std::string key = opts.normalize_tokens ? normalize_token(corpus.words[p].token)
                                                    : corpus.words[p].token;
            const std::vector<double>* vec = key.empty() ? nullptr : table.find(key);
            if (vec)
                hits.emplace_back(std::move(key), vec);
            else
                ++local.oov_tokens;
        }
        std::sort(hits.begin(), hits.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        auto row = reps.values.row(u);
        if (hits.empty()) {
            ++local.all_oov_units;
        } else {
            for (const auto& [token, vec] : hits)
                for (std::size_t j = 0; j < d; ++j) row[j] += (*vec)[j];
            const double inv = 1.0 / static_cast<double>(hits.size());
            for (std::size_t j = 0; j < d; ++j) row[j] *= inv;
        }
        reps.meta.stimulus_ids.push_back(units[u].id);
    }
    if (stats) *stats = local;
    reps.validate();
    return reps;
}

} // namespace repstab
