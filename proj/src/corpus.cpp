#include "postedit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "postedit/error.hpp"
#include "postedit/unicode.hpp"

namespace postedit::corpus {

TokenizerScheme parse_tokenizer_scheme(std::string_view name) {
  if (name == "whitespace") return TokenizerScheme::Whitespace;
  if (name == "whitespace+punctuation" || name == "punct") return TokenizerScheme::WhitespacePunctuation;
  throw Error(ErrorCode::InvalidArgument, "unknown tokenizer scheme '" + std::string(name) + "'");
}

std::string_view to_string(TokenizerScheme scheme) {
  return scheme == TokenizerScheme::Whitespace ? "whitespace" : "whitespace+punctuation";
}

std::vector<Token> tokenize_with_offsets(std::string_view text, TokenizerScheme scheme) {
  const std::u32string cps = unicode::to_u32(text);
  std::vector<Token> tokens;
  std::size_t start = 0;
  bool in_token = false;
  auto flush = [&](std::size_t end) {
    if (in_token && end > start) {
      tokens.push_back({unicode::to_utf8(std::u32string_view(cps).substr(start, end - start)), start, end});
    }
    in_token = false;
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i];
    if (unicode::is_space(c)) {
      flush(i);
    } else if (scheme == TokenizerScheme::WhitespacePunctuation && unicode::is_punct(c)) {
      flush(i);
      tokens.push_back({unicode::to_utf8(std::u32string(1, c)), i, i + 1});
    } else if (!in_token) {
      in_token = true;
      start = i;
    }
  }
  flush(cps.size());
  return tokens;
}

std::vector<std::string> tokenize(std::string_view text, TokenizerScheme scheme) {
  std::vector<std::string> out;
  for (auto& token : tokenize_with_offsets(text, scheme)) out.push_back(std::move(token.text));
  return out;
}

std::size_t SourceDocument::word_count() const {
  return std::accumulate(segments.begin(), segments.end(), std::size_t{0},
                         [](std::size_t acc, const Segment& s) { return acc + s.word_count; });
}

namespace {

bool is_closing(char32_t c) {
  static constexpr std::u32string_view kClosers = U"\"'”’»)]}";
  return kClosers.find(c) != std::u32string_view::npos;
}

std::vector<std::u32string> split_paragraphs(const std::u32string& text) {
  std::vector<std::u32string> paragraphs;
  std::u32string current;
  std::u32string line;
  auto end_line = [&] {
    const bool blank = std::all_of(line.begin(), line.end(), unicode::is_space);
    if (blank) {
      if (!current.empty()) paragraphs.push_back(std::move(current));
      current.clear();
    } else {
      if (!current.empty()) current.push_back(U' ');
      current += line;
    }
    line.clear();
  };
  for (char32_t c : text) {
    if (c == U'\n') {
      end_line();
    } else {
      line.push_back(c);
    }
  }
  end_line();
  if (!current.empty()) paragraphs.push_back(std::move(current));
  return paragraphs;
}

bool ends_with_abbreviation(const std::u32string& para, std::size_t sentence_start, std::size_t end,
                            const std::vector<std::u32string>& abbreviations) {
  std::size_t word_start = end;
  while (word_start > sentence_start && !unicode::is_space(para[word_start - 1])) --word_start;
  const std::u32string_view word(para.data() + word_start, end - word_start);
  return std::any_of(abbreviations.begin(), abbreviations.end(),
                     [&](const std::u32string& a) { return word == a; });
}

Segment make_segment(std::size_t index, std::string text, TokenizerScheme scheme) {
  Segment s;
  s.index = index;
  s.id = "s" + std::to_string(index);
  s.word_count = tokenize(text, scheme).size();
  s.text = std::move(text);
  return s;
}

}  // namespace

SourceDocument segment_document(std::string_view raw, const SegmentationRules& rules, std::string id,
                                std::string title, std::string language) {
  const std::string normalized = unicode::nfc(raw);
  if (unicode::normalize_whitespace(normalized).empty()) {
    throw Error(ErrorCode::EmptyDocument, "document '" + id + "' contains only whitespace");
  }
  std::vector<std::u32string> abbreviations;
  for (const auto& a : rules.abbreviations) abbreviations.push_back(unicode::to_u32(a));

  SourceDocument doc{std::move(id), std::move(title), std::move(language), {}};
  auto emit = [&](std::u32string_view piece) {
    std::string text = unicode::normalize_whitespace(unicode::to_utf8(piece));
    if (!text.empty()) doc.segments.push_back(make_segment(doc.segments.size(), std::move(text), rules.tokenizer));
  };

  for (const std::u32string& para : split_paragraphs(unicode::to_u32(normalized))) {
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < para.size()) {
      if (rules.terminators.find(para[i]) == std::u32string::npos) {
        ++i;
        continue;
      }
      std::size_t end = i + 1;
      while (end < para.size() && (rules.terminators.find(para[end]) != std::u32string::npos || is_closing(para[end]))) {
        ++end;
      }
      const bool boundary = end == para.size() || unicode::is_space(para[end]);
      if (boundary && !ends_with_abbreviation(para, start, end, abbreviations)) {
        emit(std::u32string_view(para).substr(start, end - start));
        start = end;
      }
      i = end;
    }
    if (start < para.size()) emit(std::u32string_view(para).substr(start));
  }
  return doc;
}

SourceDocument document_from_segments(const std::vector<std::string>& segments, TokenizerScheme tokenizer,
                                      std::string id, std::string title, std::string language) {
  SourceDocument doc{std::move(id), std::move(title), std::move(language), {}};
  for (const auto& raw : segments) {
    std::string text = unicode::normalize_whitespace(unicode::nfc(raw));
    if (text.empty()) {
      throw Error(ErrorCode::EmptyDocument,
                  "segment " + std::to_string(doc.segments.size()) + " is empty after normalization");
    }
    doc.segments.push_back(make_segment(doc.segments.size(), std::move(text), tokenizer));
  }
  if (doc.segments.empty()) throw Error(ErrorCode::EmptyDocument, "document has no segments");
  return doc;
}

SourceDocument ingest_json(const nlohmann::json& object, const SegmentationRules& rules) {
  if (!object.is_object()) throw Error(ErrorCode::MalformedInput, "document import must be a JSON object");
  const std::string id = object.value("id", std::string("doc"));
  const std::string title = object.value("title", std::string());
  const std::string language = object.value("language", std::string());
  if (object.contains("segments")) {
    return document_from_segments(object.at("segments").get<std::vector<std::string>>(), rules.tokenizer, id,
                                  title, language);
  }
  if (object.contains("text")) {
    return segment_document(object.at("text").get<std::string>(), rules, id, title, language);
  }
  throw Error(ErrorCode::MalformedInput, "document import needs a 'text' or 'segments' field");
}

namespace {

// Can the document be cut into n contiguous chunks with every sum in [lo, hi]?
// Fills `cuts` (n + 1 boundaries) when it can.
bool partition_within(const std::vector<std::size_t>& prefix, std::size_t n, std::size_t lo, std::size_t hi,
                      std::vector<std::size_t>* cuts) {
  const std::size_t s = prefix.size() - 1;
  std::vector<std::vector<char>> reach(n + 1, std::vector<char>(s + 1, 0));
  reach[0][0] = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    // count[j] = number of reachable boundaries among 0..j-1 at level k - 1
    std::vector<std::size_t> count(s + 2, 0);
    for (std::size_t j = 0; j <= s; ++j) count[j + 1] = count[j] + static_cast<std::size_t>(reach[k - 1][j]);
    for (std::size_t i = 1; i <= s; ++i) {
      if (prefix[i] < lo) continue;
      // j must satisfy prefix[i] - hi <= prefix[j] <= prefix[i] - lo
      const std::size_t min_val = prefix[i] > hi ? prefix[i] - hi : 0;
      const std::size_t max_val = prefix[i] - lo;
      const auto first = std::lower_bound(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(i), min_val);
      const auto last = std::upper_bound(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(i), max_val);
      const auto a = static_cast<std::size_t>(first - prefix.begin());
      const auto b = static_cast<std::size_t>(last - prefix.begin());
      if (b > a && count[b] - count[a] > 0) reach[k][i] = 1;
    }
  }
  if (!reach[n][s]) return false;
  if (cuts != nullptr) {
    cuts->assign(n + 1, 0);
    (*cuts)[n] = s;
    std::size_t i = s;
    for (std::size_t k = n; k > 0; --k) {
      std::size_t j = 0;
      while (!(reach[k - 1][j] && prefix[i] - prefix[j] >= lo && prefix[i] - prefix[j] <= hi)) ++j;
      (*cuts)[k - 1] = j;
      i = j;
    }
  }
  return true;
}

}  // namespace

std::vector<Chunk> chunk_document(const SourceDocument& doc, std::size_t n_chunks, double tolerance) {
  const std::size_t s = doc.segments.size();
  if (n_chunks == 0) throw Error(ErrorCode::InvalidArgument, "n_chunks must be positive");
  if (n_chunks > s) {
    throw Error(ErrorCode::InvalidArgument, "cannot cut " + std::to_string(s) + " segments into " +
                                                std::to_string(n_chunks) + " chunks");
  }
  if (tolerance < 0.0) throw Error(ErrorCode::InvalidArgument, "tolerance must be non-negative");

  std::vector<std::size_t> prefix(s + 1, 0);
  for (std::size_t i = 0; i < s; ++i) prefix[i + 1] = prefix[i] + doc.segments[i].word_count;
  const double mean = static_cast<double>(prefix[s]) / static_cast<double>(n_chunks);
  const auto max_spread = static_cast<std::size_t>(std::floor(tolerance * mean + 1e-9));

  // Smallest lower bound lo for which [lo, lo + spread] admits a partition.
  auto best_lo = [&](std::size_t spread) -> std::optional<std::size_t> {
    const double lo_min = std::max(0.0, std::ceil(mean - static_cast<double>(spread) - 1e-9));
    const auto lo_max = static_cast<std::size_t>(std::floor(mean + 1e-9));
    for (auto lo = static_cast<std::size_t>(lo_min); lo <= lo_max; ++lo) {
      if (partition_within(prefix, n_chunks, lo, lo + spread, nullptr)) return lo;
    }
    return std::nullopt;
  };

  if (!best_lo(max_spread)) {
    throw Error(ErrorCode::InfeasibleBalance,
                "no contiguous partition into " + std::to_string(n_chunks) +
                    " chunks keeps word counts within tolerance " + std::to_string(tolerance));
  }
  std::size_t lo_spread = 0;
  std::size_t hi_spread = max_spread;
  while (lo_spread < hi_spread) {
    const std::size_t mid = lo_spread + (hi_spread - lo_spread) / 2;
    if (best_lo(mid)) {
      hi_spread = mid;
    } else {
      lo_spread = mid + 1;
    }
  }
  const std::size_t lo = *best_lo(hi_spread);
  std::vector<std::size_t> cuts;
  partition_within(prefix, n_chunks, lo, lo + hi_spread, &cuts);

  std::vector<Chunk> chunks;
  for (std::size_t k = 0; k < n_chunks; ++k) {
    chunks.push_back({"c" + std::to_string(k), cuts[k], cuts[k + 1], prefix[cuts[k + 1]] - prefix[cuts[k]]});
  }
  return chunks;
}

void to_json(nlohmann::json& j, const Segment& s) {
  j = nlohmann::json{{"id", s.id}, {"index", s.index}, {"text", s.text}, {"word_count", s.word_count}};
}

void from_json(const nlohmann::json& j, Segment& s) {
  j.at("id").get_to(s.id);
  j.at("index").get_to(s.index);
  j.at("text").get_to(s.text);
  j.at("word_count").get_to(s.word_count);
}

void to_json(nlohmann::json& j, const SourceDocument& d) {
  j = nlohmann::json{{"id", d.id}, {"title", d.title}, {"language", d.language}, {"segments", d.segments}};
}

void from_json(const nlohmann::json& j, SourceDocument& d) {
  j.at("id").get_to(d.id);
  j.at("title").get_to(d.title);
  j.at("language").get_to(d.language);
  j.at("segments").get_to(d.segments);
}

void to_json(nlohmann::json& j, const Chunk& c) {
  j = nlohmann::json{{"id", c.id}, {"begin", c.begin}, {"end", c.end}, {"word_count", c.word_count}};
}

void from_json(const nlohmann::json& j, Chunk& c) {
  j.at("id").get_to(c.id);
  j.at("begin").get_to(c.begin);
  j.at("end").get_to(c.end);
  j.at("word_count").get_to(c.word_count);
}

}  // namespace postedit::corpus
