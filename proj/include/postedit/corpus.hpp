#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace postedit::corpus {

enum class TokenizerScheme {
  Whitespace,             // split on unicode whitespace only
  WhitespacePunctuation,  // additionally detach every punctuation code point
};

TokenizerScheme parse_tokenizer_scheme(std::string_view name);
std::string_view to_string(TokenizerScheme scheme);

// A token together with its half-open code-point range in the input.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<std::string> tokenize(std::string_view text,
                                  TokenizerScheme scheme = TokenizerScheme::WhitespacePunctuation);
std::vector<Token> tokenize_with_offsets(std::string_view text,
                                         TokenizerScheme scheme = TokenizerScheme::WhitespacePunctuation);

struct Segment {
  std::string id;
  std::size_t index = 0;
  std::string text;
  std::size_t word_count = 0;

  bool operator==(const Segment&) const = default;
};

struct SourceDocument {
  std::string id;
  std::string title;
  std::string language;
  std::vector<Segment> segments;

  std::size_t word_count() const;
  bool operator==(const SourceDocument&) const = default;
};

struct SegmentationRules {
  // Terminators end a sentence when followed by whitespace or end of paragraph.
  std::u32string terminators = U".?!…";
  // Tokens such as "Mr." that never end a sentence. Compared case-sensitively.
  std::vector<std::string> abbreviations;
  TokenizerScheme tokenizer = TokenizerScheme::WhitespacePunctuation;
};

// Sentence-level segmentation. Paragraphs are separated by blank lines and are
// never merged into one segment. Input is NFC-normalized first.
SourceDocument segment_document(std::string_view raw, const SegmentationRules& rules = {},
                                std::string id = "doc", std::string title = {},
                                std::string language = {});

// Build a document from pre-segmented text (one entry per segment).
SourceDocument document_from_segments(const std::vector<std::string>& segments,
                                      TokenizerScheme tokenizer = TokenizerScheme::WhitespacePunctuation,
                                      std::string id = "doc", std::string title = {},
                                      std::string language = {});

// Accepts {title, language, text} or {title, language, segments: [...]}; an
// optional "id" field overrides the document id.
SourceDocument ingest_json(const nlohmann::json& object, const SegmentationRules& rules = {});

struct Chunk {
  std::string id;
  std::size_t begin = 0;  // first segment index
  std::size_t end = 0;    // one past the last segment index
  std::size_t word_count = 0;

  bool contains(std::size_t segment_index) const { return segment_index >= begin && segment_index < end; }
  bool operator==(const Chunk&) const = default;
};

inline constexpr double kDefaultBalanceTolerance = 0.15;

// Contiguous partition into n_chunks parts whose word counts differ pairwise by
// at most tolerance * (total / n_chunks). Among feasible partitions the one
// with the smallest spread is returned; ties go to the smallest minimum chunk
// and then to the earliest cut points.
std::vector<Chunk> chunk_document(const SourceDocument& doc, std::size_t n_chunks,
                                  double tolerance = kDefaultBalanceTolerance);

void to_json(nlohmann::json& j, const Segment& s);
void from_json(const nlohmann::json& j, Segment& s);
void to_json(nlohmann::json& j, const SourceDocument& d);
void from_json(const nlohmann::json& j, SourceDocument& d);
void to_json(nlohmann::json& j, const Chunk& c);
void from_json(const nlohmann::json& j, Chunk& c);

}  // namespace postedit::corpus
