#pragma once

#include <optional>
#include <string>
#include <vector>

#include "repstab/repstore.hpp"

namespace repstab {

// Timing of the word-by-word presentation: words_per_scan words of
// word_duration_s seconds fill one scan of scan_period_s seconds.
// delay_s shifts which word group a scan is aligned to (multiples of the
// scan period; negative values look ahead).
struct AlignmentSpec {
    double scan_period_s = 2.0;
    int words_per_scan = 4;
    double word_duration_s = 0.5;
    double delay_s = 0.0;

    void validate() const;
    // delay_s expressed in whole scans; throws unless it is a multiple.
    int delay_scans() const;
};

struct ScanWindow {
    int scan_index = 0;
    std::vector<std::size_t> word_indices; // contiguous corpus positions

    friend bool operator==(const ScanWindow&, const ScanWindow&) = default;
};

// How the context length c counts sentences. `including_current` treats
// c as the total number of sentences shown including the one being read
// (c=3 means two previous sentences plus the current prefix);
// `plus_previous` treats c>=2 as the count of previous full sentences
// prepended to the current prefix.
enum class ContextConvention { including_current, plus_previous };

// Token sequence presented for a target word at context length c:
// c=0 the target word alone, c=1 the current sentence up to and
// including the target, larger c prepends previous full sentences from
// the same block.
std::vector<std::string> context_window(const StimulusCorpus& corpus,
                                        std::size_t target_word_index, int c,
                                        ContextConvention convention =
                                            ContextConvention::including_current);

// Scan s covers word positions [s*words_per_scan, (s+1)*words_per_scan)
// of the block (whole corpus when block_id is not given), clipped to the
// available words; trailing windows may be partial or empty.
std::vector<ScanWindow> build_scan_windows(const StimulusCorpus& corpus,
                                           const AlignmentSpec& spec, int n_scans,
                                           std::optional<int> block_id = std::nullopt);

// Associates scan s with the window of scan s - delay_s/scan_period_s;
// scans whose shifted window does not exist are dropped.
std::vector<ScanWindow> apply_delay(const std::vector<ScanWindow>& windows,
                                    const AlignmentSpec& spec);

enum class AggregationMode { mean, last };

struct ScanRepresentations {
    RepresentationSet reps;
    std::vector<int> scan_indices; // scans that survived (non-empty windows)
};

// Collapses each window's word vectors into one per-scan vector; empty
// windows are dropped along with their scans. Row r of word_reps is the
// representation of corpus word position r.
ScanRepresentations scan_representations(const RepresentationSet& word_reps,
                                         const std::vector<ScanWindow>& windows,
                                         AggregationMode mode = AggregationMode::mean);

// True where the window contains the last word of a sentence.
std::vector<bool> sentence_end_mask(const StimulusCorpus& corpus,
                                    const std::vector<ScanWindow>& windows);

// True where any window token is in the corpus lexicon (tokens are
// normalized the same way as embedding lookups).
std::vector<bool> lexicon_mention_mask(const StimulusCorpus& corpus,
                                       const std::vector<ScanWindow>& windows);

// Rows of the scan series at the given scans, as a representation set
// with ids matching scan_representations output ("scan<k>").
RepresentationSet select_scans(const ScanSeries& series, const std::vector<int>& scan_indices);

std::string windows_to_csv(const std::vector<ScanWindow>& windows);
std::string scan_mask_to_csv(const std::vector<ScanWindow>& windows,
                             const std::vector<bool>& mask);
// Reads the last column of a two-column CSV as booleans, row order.
std::vector<bool> bool_mask_from_csv(const std::string& text);

} // namespace repstab
