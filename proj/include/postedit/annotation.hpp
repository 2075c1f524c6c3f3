#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace postedit::annotation {

enum class Layer { UCP, CreativeShift };

std::string_view to_string(Layer layer);
Layer parse_layer(std::string_view name);

// UCP spans sit on source segments and use the plain segment id. Creative
// shifts sit on one translation variant of a segment; their segment_id is
// target_segment_id(variant, segment).
struct AnnotationSpan {
  Layer layer = Layer::UCP;
  std::string segment_id;
  std::size_t begin = 0;  // code points, half-open
  std::size_t end = 0;
  std::optional<std::string> shift_type;
  std::string annotator_id;

  bool operator==(const AnnotationSpan&) const = default;
};

std::string target_segment_id(std::string_view variant, std::string_view segment_id);
// Splits "<variant>/<segment>"; variant is empty for plain source ids.
std::pair<std::string, std::string> split_segment_id(std::string_view id);

// Annotator id under which the adjudicated layer is stored.
inline constexpr std::string_view kResolvedAnnotator = "resolved";

struct Taxonomy {
  std::vector<std::string> types;

  // Creative shift categories used in earlier creativity studies.
  static Taxonomy defaults() { return {{"abstraction", "concretisation", "modification"}}; }
  bool contains(std::string_view type) const;
  bool operator==(const Taxonomy&) const = default;
};

class AnnotationStore {
 public:
  struct Stored {
    std::uint64_t id = 0;
    AnnotationSpan span;
    bool overlap_flagged = false;
  };

  struct AddResult {
    std::uint64_t id = 0;
    bool overlap_flagged = false;
  };

  // segment_lengths maps every annotatable segment id (source ids and
  // variant-qualified target ids) to its length in code points.
  AnnotationStore(std::map<std::string, std::size_t> segment_lengths, Taxonomy taxonomy = Taxonomy::defaults());

  // Throws OutOfBounds for empty or out-of-range spans, UnknownType for a
  // creative shift without a known type, InvalidArgument for a typed UCP.
  // Overlap with a span of the same annotator on the same layer is accepted
  // and reported through overlap_flagged.
  AddResult add(AnnotationSpan span);
  // Re-inserts a previously accepted span without range checks (replay of a
  // persisted layer whose target text has changed since).
  AddResult restore(AnnotationSpan span);

  void set_segment_length(const std::string& segment_id, std::size_t length);

  std::vector<Stored> all() const;
  std::vector<AnnotationSpan> spans(std::optional<std::string> annotator = std::nullopt,
                                    std::optional<Layer> layer = std::nullopt) const;
  std::vector<AnnotationSpan> resolved(std::optional<Layer> layer = std::nullopt) const {
    return spans(std::string(kResolvedAnnotator), layer);
  }
  const Taxonomy& taxonomy() const { return taxonomy_; }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::size_t> segment_lengths_;
  Taxonomy taxonomy_;
  std::map<std::uint64_t, Stored> spans_;
  std::uint64_t next_id_ = 1;
};

struct KappaResult {
  double kappa = 0.0;
  double observed = 0.0;  // p_o
  double expected = 0.0;  // p_e, from each annotator's own marginals
  std::size_t items = 0;
};

// Cohen's kappa over two aligned label sequences. Throws LengthMismatch,
// InvalidArgument on empty input and DegenerateMarginals when p_e == 1.
KappaResult cohen_kappa(std::span<const std::string> a, std::span<const std::string> b);

struct TokenizedSegment {
  std::string segment_id;
  std::vector<std::pair<std::size_t, std::size_t>> tokens;  // code-point ranges
};

// Labels every token in/out per annotator (in = overlaps any of the
// annotator's spans on that segment) and computes kappa over all tokens.
KappaResult span_agreement_kappa(std::span<const AnnotationSpan> a, std::span<const AnnotationSpan> b,
                                 std::span<const TokenizedSegment> segments);

struct MatchingConfig {
  double iou_threshold = 0.5;
};

struct TypeAgreement {
  KappaResult kappa;
  std::size_t matched_pairs = 0;
  std::size_t unmatched_a = 0;
  std::size_t unmatched_b = 0;
};

double interval_iou(std::size_t a_begin, std::size_t a_end, std::size_t b_begin, std::size_t b_end);

// Pairs creative-shift spans on the same segment greedily by descending IoU
// (ties: lower index in a, then in b) and computes kappa over the types of
// the matched pairs. Throws NoMatchedPairs when nothing reaches the threshold.
TypeAgreement type_agreement_kappa(std::span<const AnnotationSpan> a, std::span<const AnnotationSpan> b,
                                   const MatchingConfig& matching = {});

struct AgreementReport {
  double span_kappa = 0.0;
  double type_kappa = 0.0;
  std::size_t matched_pairs = 0;
  double observed_agreement = 0.0;  // span level
  double expected_agreement = 0.0;  // span level
};

AgreementReport agreement_report(std::span<const AnnotationSpan> a, std::span<const AnnotationSpan> b,
                                 std::span<const TokenizedSegment> segments, const MatchingConfig& matching = {});

// Which spans count towards a creativity ratio. An unset field means "all".
struct CsScope {
  std::optional<std::string> variant;
  std::optional<std::set<std::string>> source_segments;
};

struct CsCounts {
  std::size_t shifts = 0;
  std::size_t ucps = 0;
};

CsCounts cs_counts(std::span<const AnnotationSpan> spans, const CsScope& scope = {});
// shifts / UCPs within scope; throws NoUCPs when the scope holds no UCP.
double cs_ratio(std::span<const AnnotationSpan> spans, const CsScope& scope = {});

void to_json(nlohmann::json& j, const AnnotationSpan& s);
void from_json(const nlohmann::json& j, AnnotationSpan& s);
void to_json(nlohmann::json& j, const KappaResult& k);
void to_json(nlohmann::json& j, const AgreementReport& r);

Taxonomy taxonomy_from_json(const nlohmann::json& j);

}  // namespace postedit::annotation
