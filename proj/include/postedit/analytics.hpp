#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "postedit/annotation.hpp"
#include "postedit/corpus.hpp"
#include "postedit/experiment.hpp"
#include "postedit/metrics.hpp"
#include "postedit/session.hpp"

namespace postedit::analytics {

using experiment::Condition;
using session::SegmentSession;

// Row label used in report tables: "HT" for from-scratch work, else the model id.
std::string table_label(const Condition& c);

// Half-up rounding for presentation. Internal values stay at full precision.
double round_half_up(double value, int decimals);
std::string format_fixed(double value, int decimals);

// ---------------------------------------------------------------------------
// Editing time

enum class TimeGrouping { Condition, Translator, TranslatorCondition };

struct TimeKey {
  std::string translator;  // empty unless grouped by translator
  std::string condition;   // condition label, empty unless grouped by condition

  auto operator<=>(const TimeKey&) const = default;
};

struct EditingTimes {
  std::map<TimeKey, std::int64_t> active_ms;

  static double minutes(std::int64_t ms) { return static_cast<double>(ms) / 60000.0; }
  double minutes(const TimeKey& key) const;  // 0 for unknown groups
};

// Throws UnfinalizedSession naming every unfinished segment. Groups listed in
// `expected` appear with 0 even when they hold no session.
EditingTimes editing_time_report(std::span<const SegmentSession> sessions, TimeGrouping grouping,
                                 std::int64_t idle_threshold_ms = session::kDefaultIdleThresholdMs,
                                 const std::vector<TimeKey>& expected = {});

// ---------------------------------------------------------------------------
// HTER

struct HterOptions {
  corpus::TokenizerScheme tokenizer = corpus::TokenizerScheme::WhitespacePunctuation;
  metrics::TerConfig ter;
};

struct HterTable {
  std::vector<std::string> translators;
  std::vector<Condition> conditions;
  // (condition label, translator) -> breakdown over that translator's segments.
  std::map<std::pair<std::string, std::string>, metrics::HterBreakdown> cells;
  // condition label -> ratio of sums over every translator's segments.
  std::map<std::string, metrics::HterBreakdown> document;

  std::optional<double> cell_percent(const Condition& c, const std::string& translator) const;
  std::optional<double> document_percent(const Condition& c) const;
  // Column sums of the printed values (cells at one decimal, Doc as integers).
  double translator_total(const std::string& translator) const;
  double document_total() const;
};

// PostEdit: hypothesis = initial MT, reference = final text. FromScratch:
// hypothesis = final text, reference = references[segment_id]; throws
// MissingReference when absent. Sessions must be finalized.
HterTable hter_report(std::span<const SegmentSession> sessions, const std::vector<std::string>& translators,
                      const std::vector<Condition>& conditions,
                      const std::map<std::string, std::string>& references, const HterOptions& options = {});

// ---------------------------------------------------------------------------
// Quality, efficiency, creativity

// BLEU and chrF of final texts against references, plus COMET as the mean of
// the supplied segment scores when present.
metrics::QualityScores quality_scores(const std::vector<std::string>& finals,
                                      const std::vector<std::string>& references, std::optional<double> comet_mean,
                                      corpus::TokenizerScheme tokenizer = corpus::TokenizerScheme::WhitespacePunctuation);

// mean(bleu, chrf, comet x 100) over the present metrics, divided by minutes.
// Throws ZeroTime when minutes <= 0 and InvalidArgument when no metric is set.
double quality_time_ratio(const metrics::QualityScores& scores, double minutes);

double creativity_score(double cs_ratio, double comet);

// (cs/ucp - (error_points - kudos)/st_words) x 100. Throws ZeroDenominator.
double creativity_score_legacy(double cs_count, double ucp_count, double error_points, double kudos,
                               double st_word_count);

// ---------------------------------------------------------------------------
// Per-condition summary

struct ConditionReport {
  Condition condition;
  double total_editing_minutes = 0.0;
  std::optional<double> hter_percent;  // document-level
  std::optional<double> bleu;
  std::optional<double> chrf;
  std::optional<double> comet;
  std::optional<double> quality_time_ratio;
  std::optional<double> cs_ratio;
  std::optional<double> creativity_percent;

  bool operator==(const ConditionReport&) const = default;
};

struct ReportInputs {
  std::vector<std::string> translators;
  std::vector<Condition> conditions;
  std::vector<SegmentSession> sessions;
  std::map<std::string, std::string> references;               // source segment id -> reference translation
  std::map<std::string, metrics::ExternalScores> comet;         // condition label -> segment scores
  std::vector<annotation::AnnotationSpan> annotations;          // adjudicated spans
  corpus::TokenizerScheme tokenizer = corpus::TokenizerScheme::WhitespacePunctuation;
  std::int64_t idle_threshold_ms = session::kDefaultIdleThresholdMs;
};

// One report per condition that has sessions. Metrics whose inputs are missing
// (no reference, no scores, no UCPs) stay unset.
std::vector<ConditionReport> build_condition_report(const ReportInputs& inputs);

void to_json(nlohmann::json& j, const ConditionReport& r);
void from_json(const nlohmann::json& j, ConditionReport& r);

// ---------------------------------------------------------------------------
// Table rendering

enum class TableFormat { Json, Csv, Text };
TableFormat parse_table_format(std::string_view name);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string render(const Table& table, TableFormat format);

Table times_table(const EditingTimes& times, const std::vector<Condition>& conditions);
Table hter_table(const HterTable& hter);
Table quality_table(const std::vector<ConditionReport>& reports);
Table creativity_table(const std::vector<ConditionReport>& reports);

}  // namespace postedit::analytics
