#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "postedit/error.hpp"
#include "postedit/metrics.hpp"

namespace postedit::metrics {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

double parse_score(std::string_view text, const std::string& segment_id) {
  text = unquote(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::MalformedInput, "score for segment '" + segment_id + "' is not a number");
  }
  return value;
}

void insert_score(std::map<std::string, double>& out, const std::string& id, double score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(ErrorCode::OutOfRangeScore, "segment '" + id + "' has score " + std::to_string(score));
  }
  if (!out.emplace(id, score).second) throw Error(ErrorCode::DuplicateId, "segment '" + id + "' scored twice");
}

}  // namespace

void QualityScores::validate() const {
  auto check = [](const std::optional<double>& v, double hi, const char* name) {
    if (v && !(*v >= 0.0 && *v <= hi)) {
      throw Error(ErrorCode::OutOfRangeScore, std::string(name) + " = " + std::to_string(*v));
    }
  };
  check(bleu, 100.0, "bleu");
  check(chrf, 100.0, "chrf");
  check(comet, 1.0, "comet");
}

double ExternalScores::mean() const {
  if (by_segment.empty()) throw Error(ErrorCode::MissingSegment, "no segment scores");
  const double sum = std::accumulate(by_segment.begin(), by_segment.end(), 0.0,
                                     [](double acc, const auto& kv) { return acc + kv.second; });
  return sum / static_cast<double>(by_segment.size());
}

double ExternalScores::mean_over(const std::vector<std::string>& segment_ids) const {
  if (segment_ids.empty()) throw Error(ErrorCode::MissingSegment, "empty segment selection");
  double sum = 0.0;
  for (const auto& id : segment_ids) {
    auto it = by_segment.find(id);
    if (it == by_segment.end()) throw Error(ErrorCode::MissingSegment, "no score for segment '" + id + "'");
    sum += it->second;
  }
  return sum / static_cast<double>(segment_ids.size());
}

ExternalScores parse_external_scores(std::string_view content, const std::vector<std::string>& expected_segments) {
  ExternalScores scores;
  const std::string_view body = trim(content);
  const auto first = body.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && body[first] == '[') {
    nlohmann::json rows;
    try {
      rows = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::MalformedInput, std::string("score JSON: ") + e.what());
    }
    for (const auto& row : rows) {
      if (!row.is_object() || !row.contains("segment_id") || !row.contains("score")) {
        throw Error(ErrorCode::MalformedInput, "score rows need segment_id and score");
      }
      const auto id = row.at("segment_id").get<std::string>();
      const auto& value = row.at("score");
      if (!value.is_number()) throw Error(ErrorCode::MalformedInput, "score for '" + id + "' is not a number");
      insert_score(scores.by_segment, id, value.get<double>());
    }
  } else {
    std::istringstream in{std::string(content)};
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
      const std::string_view row = trim(line);
      if (row.empty()) continue;
      const auto comma = row.find(',');
      if (!header_seen) {
        if (comma == std::string_view::npos || unquote(row.substr(0, comma)) != "segment_id" ||
            unquote(row.substr(comma + 1)) != "score") {
          throw Error(ErrorCode::MalformedInput, "CSV header must be 'segment_id,score'");
        }
        header_seen = true;
        continue;
      }
      if (comma == std::string_view::npos) throw Error(ErrorCode::MalformedInput, "CSV row without comma: " + line);
      const std::string id(unquote(row.substr(0, comma)));
      insert_score(scores.by_segment, id, parse_score(row.substr(comma + 1), id));
    }
    if (!header_seen) throw Error(ErrorCode::MalformedInput, "empty score file");
  }

  for (const auto& id : expected_segments) {
    if (!scores.by_segment.contains(id)) throw Error(ErrorCode::MissingSegment, "no score for segment '" + id + "'");
  }
  if (!expected_segments.empty()) {
    const std::set<std::string> keep(expected_segments.begin(), expected_segments.end());
    std::erase_if(scores.by_segment, [&](const auto& kv) { return !keep.contains(kv.first); });
  }
  return scores;
}

ExternalScores ingest_external_scores(const std::string& path, const std::vector<std::string>& expected_segments) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open score file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_external_scores(buffer.str(), expected_segments);
}

}  // namespace postedit::metrics
