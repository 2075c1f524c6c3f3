#include "postedit/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "postedit/error.hpp"

namespace postedit::analytics {

std::string table_label(const Condition& c) { return c.is_post_edit() ? c.model_id : "HT"; }

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // The nudge keeps decimal ties such as 20.15 from rounding down because of
  // their binary representation.
  const double scaled = value * scale;
  return std::floor(scaled + 0.5 + 1e-9 * std::max(1.0, std::fabs(scaled))) / scale;
}

std::string format_fixed(double value, int decimals) {
  if (!std::isfinite(value)) return value > 0 ? "inf" : (value < 0 ? "-inf" : "nan");
  double r = round_half_up(value, decimals);
  if (r == 0.0) r = 0.0;  // no "-0.00"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, r);
  return buf;
}

namespace {

void require_finalized(std::span<const SegmentSession> sessions) {
  std::string missing;
  for (const auto& s : sessions) {
    if (s.finalized()) continue;
    if (!missing.empty()) missing += ", ";
    missing += s.translator_id + "/" + s.segment_id;
  }
  if (!missing.empty()) throw Error(ErrorCode::UnfinalizedSession, "sessions not finalized: " + missing);
}

}  // namespace

double EditingTimes::minutes(const TimeKey& key) const {
  auto it = active_ms.find(key);
  return it == active_ms.end() ? 0.0 : minutes(it->second);
}

EditingTimes editing_time_report(std::span<const SegmentSession> sessions, TimeGrouping grouping,
                                 std::int64_t idle_threshold_ms, const std::vector<TimeKey>& expected) {
  require_finalized(sessions);
  EditingTimes out;
  for (const auto& key : expected) out.active_ms[key];
  for (const auto& s : sessions) {
    TimeKey key;
    if (grouping != TimeGrouping::Condition) key.translator = s.translator_id;
    if (grouping != TimeGrouping::Translator) key.condition = s.condition.label();
    out.active_ms[key] += s.active_ms(idle_threshold_ms);
  }
  return out;
}

std::optional<double> HterTable::cell_percent(const Condition& c, const std::string& translator) const {
  auto it = cells.find({c.label(), translator});
  if (it == cells.end()) return std::nullopt;
  return it->second.percent();
}

std::optional<double> HterTable::document_percent(const Condition& c) const {
  auto it = document.find(c.label());
  if (it == document.end()) return std::nullopt;
  return it->second.percent();
}

double HterTable::translator_total(const std::string& translator) const {
  double total = 0.0;
  for (const auto& c : conditions) total += round_half_up(cell_percent(c, translator).value_or(0.0), 1);
  return total;
}

double HterTable::document_total() const {
  double total = 0.0;
  for (const auto& c : conditions) total += round_half_up(document_percent(c).value_or(0.0), 0);
  return total;
}

HterTable hter_report(std::span<const SegmentSession> sessions, const std::vector<std::string>& translators,
                      const std::vector<Condition>& conditions, const std::map<std::string, std::string>& references,
                      const HterOptions& options) {
  require_finalized(sessions);
  HterTable table{translators, conditions, {}, {}};

  struct Pairs {
    std::vector<metrics::Tokens> hyp;
    std::vector<metrics::Tokens> ref;
  };
  std::map<std::pair<std::string, std::string>, Pairs> grouped;
  for (const auto& s : sessions) {
    auto& pairs = grouped[{s.condition.label(), s.translator_id}];
    if (s.condition.is_post_edit()) {
      pairs.hyp.push_back(corpus::tokenize(s.initial_text, options.tokenizer));
      pairs.ref.push_back(corpus::tokenize(s.final_text(), options.tokenizer));
    } else {
      auto ref = references.find(s.segment_id);
      if (ref == references.end()) {
        throw Error(ErrorCode::MissingReference,
                    "no reference translation for segment '" + s.segment_id + "' (from-scratch HTER)");
      }
      pairs.hyp.push_back(corpus::tokenize(s.final_text(), options.tokenizer));
      pairs.ref.push_back(corpus::tokenize(ref->second, options.tokenizer));
    }
  }

  for (auto& [key, pairs] : grouped) {
    metrics::HterBreakdown cell = metrics::hter_breakdown(pairs.hyp, pairs.ref, options.ter);
    auto& doc = table.document[key.first];
    doc.segments.insert(doc.segments.end(), cell.segments.begin(), cell.segments.end());
    doc.total_edits += cell.total_edits;
    doc.reference_tokens += cell.reference_tokens;
    table.cells.emplace(key, std::move(cell));
  }
  return table;
}

metrics::QualityScores quality_scores(const std::vector<std::string>& finals, const std::vector<std::string>& references,
                                      std::optional<double> comet_mean, corpus::TokenizerScheme tokenizer) {
  if (finals.size() != references.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(finals.size()) + " outputs vs " +
                                               std::to_string(references.size()) + " references");
  }
  metrics::QualityScores q;
  if (!finals.empty()) {
    std::vector<metrics::Tokens> hyp;
    std::vector<metrics::Tokens> ref;
    for (std::size_t i = 0; i < finals.size(); ++i) {
      hyp.push_back(corpus::tokenize(finals[i], tokenizer));
      ref.push_back(corpus::tokenize(references[i], tokenizer));
    }
    q.bleu = metrics::bleu_corpus(hyp, ref);
    q.chrf = metrics::chrf_corpus(finals, references);
  }
  q.comet = comet_mean;
  q.validate();
  return q;
}

double quality_time_ratio(const metrics::QualityScores& scores, double minutes) {
  if (!(minutes > 0.0)) throw Error(ErrorCode::ZeroTime, "editing time must be positive");
  double sum = 0.0;
  int count = 0;
  if (scores.bleu) sum += *scores.bleu, ++count;
  if (scores.chrf) sum += *scores.chrf, ++count;
  if (scores.comet) sum += *scores.comet * 100.0, ++count;
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "no quality metric available");
  return sum / count / minutes;
}

double creativity_score(double cs_ratio, double comet) { return cs_ratio * comet * 100.0; }

double creativity_score_legacy(double cs_count, double ucp_count, double error_points, double kudos,
                               double st_word_count) {
  if (ucp_count == 0.0) throw Error(ErrorCode::ZeroDenominator, "UCP count is zero");
  if (st_word_count == 0.0) throw Error(ErrorCode::ZeroDenominator, "source word count is zero");
  return (cs_count / ucp_count - (error_points - kudos) / st_word_count) * 100.0;
}

std::vector<ConditionReport> build_condition_report(const ReportInputs& in) {
  std::vector<ConditionReport> out;
  if (in.sessions.empty()) return out;

  const EditingTimes times = editing_time_report(in.sessions, TimeGrouping::Condition, in.idle_threshold_ms);

  // HTER needs a reference only for from-scratch sessions; skip that row
  // rather than fail the whole report when none is registered.
  std::vector<SegmentSession> hter_sessions;
  for (const auto& s : in.sessions) {
    if (s.condition.is_post_edit() || in.references.contains(s.segment_id)) hter_sessions.push_back(s);
  }
  const HterTable hter = hter_report(hter_sessions, in.translators, in.conditions, in.references, {in.tokenizer, {}});

  std::size_t ucps = 0;
  for (const auto& span : in.annotations) {
    if (span.layer == annotation::Layer::UCP) ++ucps;
  }

  for (const auto& c : in.conditions) {
    std::vector<const SegmentSession*> mine;
    for (const auto& s : in.sessions) {
      if (s.condition == c) mine.push_back(&s);
    }
    if (mine.empty()) continue;
    std::sort(mine.begin(), mine.end(), [](const SegmentSession* a, const SegmentSession* b) {
      return std::tie(a->segment_id, a->translator_id) < std::tie(b->segment_id, b->translator_id);
    });

    ConditionReport r;
    r.condition = c;
    r.total_editing_minutes = times.minutes(TimeKey{"", c.label()});
    r.hter_percent = hter.document_percent(c);

    std::optional<double> comet;
    if (auto it = in.comet.find(c.label()); it != in.comet.end()) {
      std::vector<std::string> ids;
      for (const auto* s : mine) ids.push_back(s->segment_id);
      comet = it->second.mean_over(ids);
    }

    std::vector<std::string> finals;
    std::vector<std::string> refs;
    bool all_refs = true;
    for (const auto* s : mine) {
      auto ref = in.references.find(s->segment_id);
      if (ref == in.references.end()) {
        all_refs = false;
        break;
      }
      finals.push_back(s->final_text());
      refs.push_back(ref->second);
    }
    if (!all_refs) {
      finals.clear();
      refs.clear();
    }
    const metrics::QualityScores q = quality_scores(finals, refs, comet, in.tokenizer);
    r.bleu = q.bleu;
    r.chrf = q.chrf;
    r.comet = q.comet;
    if ((q.bleu || q.chrf || q.comet) && r.total_editing_minutes > 0.0) {
      r.quality_time_ratio = quality_time_ratio(q, r.total_editing_minutes);
    }

    if (ucps > 0) {
      r.cs_ratio = annotation::cs_ratio(in.annotations, {c.label(), std::nullopt});
      if (r.comet) r.creativity_percent = creativity_score(*r.cs_ratio, *r.comet);
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const ConditionReport& r) {
  j = nlohmann::json{{"condition", r.condition},
                     {"total_editing_minutes", r.total_editing_minutes},
                     {"hter_percent", opt(r.hter_percent)},
                     {"bleu", opt(r.bleu)},
                     {"chrf", opt(r.chrf)},
                     {"comet", opt(r.comet)},
                     {"quality_time_ratio", opt(r.quality_time_ratio)},
                     {"cs_ratio", opt(r.cs_ratio)},
                     {"creativity_percent", opt(r.creativity_percent)}};
}

void from_json(const nlohmann::json& j, ConditionReport& r) {
  j.at("condition").get_to(r.condition);
  j.at("total_editing_minutes").get_to(r.total_editing_minutes);
  r.hter_percent = opt_from(j, "hter_percent");
  r.bleu = opt_from(j, "bleu");
  r.chrf = opt_from(j, "chrf");
  r.comet = opt_from(j, "comet");
  r.quality_time_ratio = opt_from(j, "quality_time_ratio");
  r.cs_ratio = opt_from(j, "cs_ratio");
  r.creativity_percent = opt_from(j, "creativity_percent");
}

TableFormat parse_table_format(std::string_view name) {
  if (name == "json") return TableFormat::Json;
  if (name == "csv") return TableFormat::Csv;
  if (name == "text" || name == "txt") return TableFormat::Text;
  throw Error(ErrorCode::InvalidArgument, "unknown format '" + std::string(name) + "' (json, csv, text)");
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

nlohmann::json cell_json(const std::string& s) {
  if (s.empty()) return nullptr;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end && *end == '\0' && std::isfinite(v)) return v;
  return s;
}

}  // namespace

std::string render(const Table& table, TableFormat format) {
  switch (format) {
    case TableFormat::Json: {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& row : table.rows) {
        nlohmann::json obj = nlohmann::json::object();
        for (std::size_t i = 0; i < table.header.size() && i < row.size(); ++i) {
          obj[table.header[i]] = i == 0 ? nlohmann::json(row[i]) : cell_json(row[i]);
        }
        rows.push_back(std::move(obj));
      }
      return rows.dump(2) + "\n";
    }
    case TableFormat::Csv: {
      std::string out;
      auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_field(cells[i]);
        out += "\n";
      };
      line(table.header);
      for (const auto& row : table.rows) line(row);
      return out;
    }
    case TableFormat::Text: {
      std::vector<std::size_t> width(table.header.size(), 0);
      auto measure = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size() && i < width.size(); ++i) width[i] = std::max(width[i], cells[i].size());
      };
      measure(table.header);
      for (const auto& row : table.rows) measure(row);
      std::string out;
      auto line = [&](const std::vector<std::string>& cells) {
        std::string l;
        for (std::size_t i = 0; i < cells.size() && i < width.size(); ++i) {
          const std::string pad(width[i] - cells[i].size(), ' ');
          if (i > 0) l += "  ";
          l += i == 0 ? cells[i] + pad : pad + cells[i];
        }
        while (!l.empty() && l.back() == ' ') l.pop_back();
        out += l + "\n";
      };
      line(table.header);
      std::size_t total = 0;
      for (std::size_t w : width) total += w;
      out += std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') + "\n";
      for (const auto& row : table.rows) line(row);
      return out;
    }
  }
  return {};
}

Table times_table(const EditingTimes& times, const std::vector<Condition>& conditions) {
  Table t{{"Source", "Total"}, {}};
  for (const auto& c : conditions) {
    t.rows.push_back({table_label(c), format_fixed(times.minutes(TimeKey{"", c.label()}), 2)});
  }
  return t;
}

Table hter_table(const HterTable& hter) {
  Table t;
  t.header.push_back("Source");
  for (const auto& tr : hter.translators) t.header.push_back(tr);
  t.header.push_back("Doc");
  for (const auto& c : hter.conditions) {
    std::vector<std::string> row{table_label(c)};
    for (const auto& tr : hter.translators) {
      auto v = hter.cell_percent(c, tr);
      row.push_back(v ? format_fixed(*v, 1) : "");
    }
    auto doc = hter.document_percent(c);
    row.push_back(doc ? format_fixed(*doc, 0) : "");
    t.rows.push_back(std::move(row));
  }
  std::vector<std::string> total{"Total"};
  for (const auto& tr : hter.translators) total.push_back(format_fixed(hter.translator_total(tr), 1));
  total.push_back(format_fixed(hter.document_total(), 2));
  t.rows.push_back(std::move(total));
  return t;
}

namespace {

std::string maybe(const std::optional<double>& v, int decimals, double scale = 1.0) {
  return v ? format_fixed(*v * scale, decimals) : "";
}

}  // namespace

Table quality_table(const std::vector<ConditionReport>& reports) {
  Table t{{"Source", "Ratio", "BLEU", "chrF", "COMET"}, {}};
  for (const auto& r : reports) {
    t.rows.push_back({table_label(r.condition), maybe(r.quality_time_ratio, 3), maybe(r.bleu, 1), maybe(r.chrf, 1),
                      maybe(r.comet, 1, 100.0)});
  }
  return t;
}

Table creativity_table(const std::vector<ConditionReport>& reports) {
  Table t{{"System", "CS Ratio", "COMET", "Creativity"}, {}};
  for (const auto& r : reports) {
    t.rows.push_back({table_label(r.condition), maybe(r.cs_ratio, 2), maybe(r.comet, 2), maybe(r.creativity_percent, 1)});
  }
  return t;
}

}  // namespace postedit::analytics
