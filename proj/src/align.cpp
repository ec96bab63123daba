#include "repstab/align.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "repstab/errors.hpp"
#include "repstab/textio.hpp"

namespace repstab {

void AlignmentSpec::validate() const {
    if (scan_period_s <= 0.0 || word_duration_s <= 0.0 || words_per_scan < 1)
        throw ConfigError("AlignmentSpec: timings must be positive");
    if (std::fabs(static_cast<double>(words_per_scan) * word_duration_s - scan_period_s) > 1e-9)
        throw ConfigError("AlignmentSpec: words_per_scan * word_duration_s must equal "
                          "scan_period_s");
}

int AlignmentSpec::delay_scans() const {
    const double ratio = delay_s / scan_period_s;
    const double rounded = std::round(ratio);
    if (std::fabs(ratio - rounded) > 1e-9)
        throw ConfigError("AlignmentSpec: delay " + format_double(delay_s) +
                          " s is not a multiple of the scan period " +
                          format_double(scan_period_s) + " s");
    return static_cast<int>(rounded);
}

std::vector<std::string> context_window(const StimulusCorpus& corpus,
                                        std::size_t target_word_index, int c,
                                        ContextConvention convention) {
    if (c < 0) throw ConfigError("context_window: context length must be >= 0");
    if (target_word_index >= corpus.words.size())
        throw ValidationError("context_window: word index " + std::to_string(target_word_index) +
                              " out of range (corpus has " + std::to_string(corpus.words.size()) +
                              " words)");
    const CorpusWord& target = corpus.words[target_word_index];
    if (c == 0) return {target.token};

    int n_prev = 0;
    if (c >= 2)
        n_prev = convention == ContextConvention::including_current ? c - 1 : c;
    const int first_sentence = target.sentence_index - n_prev;

    // Context never crosses block boundaries; blocks were separate trials.
    std::vector<std::string> out;
    for (std::size_t p = 0; p <= target_word_index; ++p) {
        const CorpusWord& w = corpus.words[p];
        if (w.block_id != target.block_id) continue;
        if (w.sentence_index < first_sentence) continue;
        out.push_back(w.token);
    }
    return out;
}

std::vector<ScanWindow> build_scan_windows(const StimulusCorpus& corpus,
                                           const AlignmentSpec& spec, int n_scans,
                                           std::optional<int> block_id) {
    spec.validate();
    if (n_scans < 1) throw ConfigError("build_scan_windows: need at least 1 scan");
    std::size_t first = 0;
    std::size_t last = corpus.words.size();
    if (block_id) {
        const auto range = corpus.block_range(*block_id);
        first = range.first;
        last = range.second;
    }
    const auto wps = static_cast<std::size_t>(spec.words_per_scan);
    std::vector<ScanWindow> windows;
    windows.reserve(static_cast<std::size_t>(n_scans));
    for (int s = 0; s < n_scans; ++s) {
        ScanWindow w;
        w.scan_index = s;
        const std::size_t begin = first + static_cast<std::size_t>(s) * wps;
        for (std::size_t p = begin; p < std::min(begin + wps, last); ++p)
            w.word_indices.push_back(p);
        windows.push_back(std::move(w));
    }
    return windows;
}

std::vector<ScanWindow> apply_delay(const std::vector<ScanWindow>& windows,
                                    const AlignmentSpec& spec) {
    spec.validate();
    const int shift = spec.delay_scans();
    std::unordered_map<int, const ScanWindow*> by_index;
    for (const auto& w : windows) by_index.emplace(w.scan_index, &w);

    std::vector<ScanWindow> out;
    for (const auto& w : windows) {
        const auto it = by_index.find(w.scan_index - shift);
        if (it == by_index.end()) continue; // shifted window outside the corpus
        ScanWindow shifted;
        shifted.scan_index = w.scan_index;
        shifted.word_indices = it->second->word_indices;
        out.push_back(std::move(shifted));
    }
    return out;
}

ScanRepresentations scan_representations(const RepresentationSet& word_reps,
                                         const std::vector<ScanWindow>& windows,
                                         AggregationMode mode) {
    word_reps.validate();
    const std::size_t d = word_reps.dim();

    std::vector<const ScanWindow*> live;
    for (const auto& w : windows) {
        for (std::size_t p : w.word_indices)
            if (p >= word_reps.n_stimuli())
                throw ShapeError("scan_representations: window of scan " +
                                 std::to_string(w.scan_index) + " references word " +
                                 std::to_string(p) + " beyond the representation rows");
        if (!w.word_indices.empty()) live.push_back(&w);
    }
    if (live.empty())
        throw ValidationError("scan_representations: every window is empty");

    ScanRepresentations out;
    out.reps.values = Matrix(live.size(), d);
    out.reps.meta = word_reps.meta;
    out.reps.meta.stimulus_ids.clear();
    for (std::size_t r = 0; r < live.size(); ++r) {
        const ScanWindow& w = *live[r];
        auto row = out.reps.values.row(r);
        if (mode == AggregationMode::mean) {
            for (std::size_t p : w.word_indices) {
                const auto src = word_reps.values.row(p);
                for (std::size_t j = 0; j < d; ++j) row[j] += src[j];
            }
            const double inv = 1.0 / static_cast<double>(w.word_indices.size());
            for (std::size_t j = 0; j < d; ++j) row[j] *= inv;
        } else {
            const auto src = word_reps.values.row(w.word_indices.back());
            std::copy(src.begin(), src.end(), row.begin());
        }
        out.reps.meta.stimulus_ids.push_back("scan" + std::to_string(w.scan_index));
        out.scan_indices.push_back(w.scan_index);
    }
    out.reps.validate();
    return out;
}

namespace {

std::vector<bool> sentence_final_positions(const StimulusCorpus& corpus) {
    std::vector<bool> final_pos(corpus.words.size(), false);
    for (std::size_t p = 0; p < corpus.words.size(); ++p) {
        const bool last_word = p + 1 == corpus.words.size() ||
                               corpus.words[p + 1].block_id != corpus.words[p].block_id ||
                               corpus.words[p + 1].sentence_index != corpus.words[p].sentence_index;
        final_pos[p] = last_word;
    }
    return final_pos;
}

} // namespace

std::vector<bool> sentence_end_mask(const StimulusCorpus& corpus,
                                    const std::vector<ScanWindow>& windows) {
    const std::vector<bool> final_pos = sentence_final_positions(corpus);
    std::vector<bool> mask(windows.size(), false);
    for (std::size_t i = 0; i < windows.size(); ++i)
        for (std::size_t p : windows[i].word_indices) {
            if (p >= final_pos.size())
                throw ShapeError("sentence_end_mask: word index out of corpus range");
            if (final_pos[p]) {
                mask[i] = true;
                break;
            }
        }
    return mask;
}

std::vector<bool> lexicon_mention_mask(const StimulusCorpus& corpus,
                                       const std::vector<ScanWindow>& windows) {
    if (corpus.character_lexicon.empty())
        throw ConfigError("lexicon_mention_mask: corpus has no character lexicon");
    std::vector<bool> mask(windows.size(), false);
    for (std::size_t i = 0; i < windows.size(); ++i)
        for (std::size_t p : windows[i].word_indices) {
            if (p >= corpus.words.size())
                throw ShapeError("lexicon_mention_mask: word index out of corpus range");
            if (corpus.character_lexicon.count(normalize_token(corpus.words[p].token))) {
                mask[i] = true;
                break;
            }
        }
    return mask;
}

RepresentationSet select_scans(const ScanSeries& series, const std::vector<int>& scan_indices) {
    series.validate();
    if (scan_indices.empty()) throw ValidationError("select_scans: no scans selected");
    RepresentationSet reps;
    reps.values = Matrix(scan_indices.size(), series.n_voxels());
    reps.meta.model_name = "brain:" + series.subject_id;
    reps.meta.block_id = series.block_id;
    for (std::size_t r = 0; r < scan_indices.size(); ++r) {
        const int s = scan_indices[r];
        if (s < 0 || static_cast<std::size_t>(s) >= series.n_scans())
            throw ShapeError("select_scans: scan index " + std::to_string(s) + " out of range");
        const auto src = series.values.row(static_cast<std::size_t>(s));
        std::copy(src.begin(), src.end(), reps.values.row(r).begin());
        reps.meta.stimulus_ids.push_back("scan" + std::to_string(s));
    }
    reps.validate();
    return reps;
}

std::string windows_to_csv(const std::vector<ScanWindow>& windows) {
    std::string out = "scan_index,word_indices\n";
    for (const auto& w : windows) {
        out += std::to_string(w.scan_index);
        out += ',';
        for (std::size_t i = 0; i < w.word_indices.size(); ++i) {
            if (i) out += ' ';
            out += std::to_string(w.word_indices[i]);
        }
        out += '\n';
    }
    return out;
}

std::string scan_mask_to_csv(const std::vector<ScanWindow>& windows,
                             const std::vector<bool>& mask) {
    if (windows.size() != mask.size())
        throw ShapeError("scan_mask_to_csv: mask length does not match window count");
    std::string out = "scan_index,value\n";
    for (std::size_t i = 0; i < windows.size(); ++i) {
        out += std::to_string(windows[i].scan_index);
        out += ',';
        out += mask[i] ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::vector<bool> bool_mask_from_csv(const std::string& text) {
    std::vector<bool> mask;
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (first) {
            first = false;
            bool numeric = true;
            try {
                parse_int(fields.back());
            } catch (const FormatError&) {
                numeric = false;
            }
            if (!numeric) continue; // header row
        }
        mask.push_back(parse_int(fields.back()) != 0);
    }
    return mask;
}

} // namespace repstab
