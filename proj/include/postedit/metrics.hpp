#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace postedit::metrics {

using Tokens = std::vector<std::string>;

// ---------------------------------------------------------------------------
// TER / HTER

struct TerConfig {
  bool shifts_enabled = true;
  std::size_t max_shift_size = 10;
  std::size_t max_shift_distance = 50;
  bool case_sensitive = false;
};

// Edit counts describe how the hypothesis is turned into the reference:
// a deletion removes a hypothesis token, an insertion adds a reference token.
struct TerResult {
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t substitutions = 0;
  std::size_t shifts = 0;
  std::size_t ref_length = 0;
  double score = 0.0;

  std::size_t total_edits() const { return insertions + deletions + substitutions + shifts; }
  bool operator==(const TerResult&) const = default;
};

// Word-level Levenshtein distance with unit costs.
std::size_t levenshtein(const Tokens& hyp, const Tokens& ref, bool case_sensitive = true);

// Translation edit rate with greedy block shifts. At every step the shift that
// leaves the smallest edit distance is applied (ties: smallest source index,
// then block size, then destination) as long as it lowers distance + 1 below
// the current distance. Throws EmptyReference for an empty reference.
TerResult ter(const Tokens& hyp, const Tokens& ref, const TerConfig& config = {});

// Same search, but an empty reference is allowed: every hypothesis token is
// then a deletion and score is 0 (no edits) or +infinity.
TerResult ter_unchecked(const Tokens& hyp, const Tokens& ref, const TerConfig& config = {});

struct HterBreakdown {
  std::vector<TerResult> segments;
  std::size_t total_edits = 0;
  std::size_t reference_tokens = 0;

  // Ratio of sums, in percent.
  double percent() const;
};

// Post-edited text acts as the reference. Aggregation is sum of edits over sum
// of reference tokens, never a mean of per-segment rates.
HterBreakdown hter_breakdown(const std::vector<Tokens>& mt_segments, const std::vector<Tokens>& postedited_segments,
                             const TerConfig& config = {});
double hter_document(const std::vector<Tokens>& mt_segments, const std::vector<Tokens>& postedited_segments,
                     const TerConfig& config = {});

// ---------------------------------------------------------------------------
// BLEU

struct BleuConfig {
  std::size_t max_n = 4;
  // Add-one smoothing on orders n >= 2.
  bool smoothing = false;
};

struct BleuStats {
  std::vector<std::size_t> matches;  // clipped n-gram matches per order (index 0 = unigrams)
  std::vector<std::size_t> totals;   // hypothesis n-grams per order
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

BleuStats bleu_stats(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                     const BleuConfig& config = {});
// Orders for which the hypothesis side has no n-grams at all are left out of
// the geometric mean.
double bleu_from_stats(const BleuStats& stats, const BleuConfig& config = {});
double bleu_corpus(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                   const BleuConfig& config = {});

// ---------------------------------------------------------------------------
// chrF

struct ChrfConfig {
  std::size_t char_n = 6;
  double beta = 2.0;
  bool ignore_whitespace = true;
};

double chrf_corpus(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
                   const ChrfConfig& config = {});

// ---------------------------------------------------------------------------
// Externally computed segment scores (COMET and friends).

struct QualityScores {
  std::optional<double> bleu;   // percent
  std::optional<double> chrf;   // percent
  std::optional<double> comet;  // fraction

  // Throws OutOfRangeScore if any present value leaves its range.
  void validate() const;
};

struct ExternalScores {
  std::map<std::string, double> by_segment;

  double mean() const;
  double mean_over(const std::vector<std::string>& segment_ids) const;
};

// CSV with header `segment_id,score` or a JSON array of {segment_id, score}.
// Scores must lie in [0, 1]; every expected id must be present.
ExternalScores parse_external_scores(std::string_view content, const std::vector<std::string>& expected_segments);
ExternalScores ingest_external_scores(const std::string& path, const std::vector<std::string>& expected_segments);

void to_json(nlohmann::json& j, const TerResult& r);
void from_json(const nlohmann::json& j, TerResult& r);

}  // namespace postedit::metrics
