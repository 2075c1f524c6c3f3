#include "postedit/annotation.hpp"

#include <algorithm>
#include <tuple>

#include "postedit/error.hpp"

namespace postedit::annotation {

std::string_view to_string(Layer layer) { return layer == Layer::UCP ? "UCP" : "CreativeShift"; }

Layer parse_layer(std::string_view name) {
  if (name == "UCP") return Layer::UCP;
  if (name == "CreativeShift") return Layer::CreativeShift;
  throw Error(ErrorCode::MalformedInput, "unknown annotation layer '" + std::string(name) + "'");
}

std::string target_segment_id(std::string_view variant, std::string_view segment_id) {
  return std::string(variant) + "/" + std::string(segment_id);
}

std::pair<std::string, std::string> split_segment_id(std::string_view id) {
  const auto slash = id.rfind('/');
  if (slash == std::string_view::npos) return {std::string(), std::string(id)};
  return {std::string(id.substr(0, slash)), std::string(id.substr(slash + 1))};
}

bool Taxonomy::contains(std::string_view type) const {
  return std::find(types.begin(), types.end(), type) != types.end();
}

AnnotationStore::AnnotationStore(std::map<std::string, std::size_t> segment_lengths, Taxonomy taxonomy)
    : segment_lengths_(std::move(segment_lengths)), taxonomy_(std::move(taxonomy)) {}

namespace {

bool overlaps(const AnnotationSpan& a, const AnnotationSpan& b) {
  return a.segment_id == b.segment_id && a.begin < b.end && b.begin < a.end;
}

}  // namespace

AnnotationStore::AddResult AnnotationStore::add(AnnotationSpan span) {
  std::unique_lock<std::mutex> lengths_lock(mutex_);
  const auto len = segment_lengths_.find(span.segment_id);
  if (len == segment_lengths_.end()) {
    throw Error(ErrorCode::OutOfBounds, "unknown segment '" + span.segment_id + "'");
  }
  if (span.begin >= span.end || span.end > len->second) {
    throw Error(ErrorCode::OutOfBounds, "range [" + std::to_string(span.begin) + ", " + std::to_string(span.end) +
                                            ") on segment '" + span.segment_id + "' of length " +
                                            std::to_string(len->second));
  }
  lengths_lock.unlock();
  if (span.layer == Layer::UCP && span.shift_type) {
    throw Error(ErrorCode::InvalidArgument, "UCP spans carry no shift type");
  }
  if (span.layer == Layer::CreativeShift && (!span.shift_type || !taxonomy_.contains(*span.shift_type))) {
    throw Error(ErrorCode::UnknownType,
                "creative shift type '" + span.shift_type.value_or("") + "' is not in the taxonomy");
  }
  if (span.annotator_id.empty()) throw Error(ErrorCode::InvalidArgument, "annotator id is required");
  return restore(std::move(span));
}

void AnnotationStore::set_segment_length(const std::string& segment_id, std::size_t length) {
  std::lock_guard<std::mutex> lock(mutex_);
  segment_lengths_[segment_id] = length;
}

AnnotationStore::AddResult AnnotationStore::restore(AnnotationSpan span) {
  std::lock_guard<std::mutex> lock(mutex_);
  bool flagged = false;
  for (const auto& [id, stored] : spans_) {
    if (stored.span.annotator_id == span.annotator_id && stored.span.layer == span.layer && overlaps(stored.span, span)) {
      flagged = true;
      break;
    }
  }
  const std::uint64_t id = next_id_++;
  spans_.emplace(id, Stored{id, std::move(span), flagged});
  return {id, flagged};
}

std::vector<AnnotationStore::Stored> AnnotationStore::all() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<Stored> out;
  for (const auto& [id, stored] : spans_) out.push_back(stored);
  return out;
}

std::vector<AnnotationSpan> AnnotationStore::spans(std::optional<std::string> annotator,
                                                   std::optional<Layer> layer) const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<AnnotationSpan> out;
  for (const auto& [id, stored] : spans_) {
    if (annotator && stored.span.annotator_id != *annotator) continue;
    if (layer && stored.span.layer != *layer) continue;
    out.push_back(stored.span);
  }
  return out;
}

KappaResult cohen_kappa(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " labels");
  }
  if (a.empty()) throw Error(ErrorCode::InvalidArgument, "kappa needs at least one item");
  std::map<std::string, std::size_t> count_a;
  std::map<std::string, std::size_t> count_b;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++count_a[a[i]];
    ++count_b[b[i]];
    if (a[i] == b[i]) ++agree;
  }
  const double n = static_cast<double>(a.size());
  KappaResult r;
  r.items = a.size();
  r.observed = static_cast<double>(agree) / n;
  for (const auto& [label, ca] : count_a) {
    auto it = count_b.find(label);
    if (it != count_b.end()) r.expected += (static_cast<double>(ca) / n) * (static_cast<double>(it->second) / n);
  }
  if (r.expected >= 1.0) {
    throw Error(ErrorCode::DegenerateMarginals, "both annotators use a single identical label; kappa undefined");
  }
  r.kappa = (r.observed - r.expected) / (1.0 - r.expected);
  return r;
}

KappaResult span_agreement_kappa(std::span<const AnnotationSpan> a, std::span<const AnnotationSpan> b,
                                 std::span<const TokenizedSegment> segments) {
  std::set<std::string> known;
  for (const auto& s : segments) known.insert(s.segment_id);
  for (const auto* side : {&a, &b}) {
    for (const auto& span : *side) {
      if (!known.contains(span.segment_id)) {
        throw Error(ErrorCode::InvalidArgument, "span on segment '" + span.segment_id + "' outside the tokenization");
      }
    }
  }

  auto label = [](std::span<const AnnotationSpan> spans, const std::string& segment, std::size_t begin,
                  std::size_t end) -> std::string {
    for (const auto& s : spans) {
      if (s.segment_id == segment && s.begin < end && begin < s.end) return "in";
    }
    return "out";
  };
  std::vector<std::string> labels_a;
  std::vector<std::string> labels_b;
  for (const auto& seg : segments) {
    for (const auto& [begin, end] : seg.tokens) {
      labels_a.push_back(label(a, seg.segment_id, begin, end));
      labels_b.push_back(label(b, seg.segment_id, begin, end));
    }
  }
  return cohen_kappa(labels_a, labels_b);
}

double interval_iou(std::size_t a_begin, std::size_t a_end, std::size_t b_begin, std::size_t b_end) {
  const std::size_t inter_begin = std::max(a_begin, b_begin);
  const std::size_t inter_end = std::min(a_end, b_end);
  const std::size_t inter = inter_end > inter_begin ? inter_end - inter_begin : 0;
  const std::size_t uni = (a_end - a_begin) + (b_end - b_begin) - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

TypeAgreement type_agreement_kappa(std::span<const AnnotationSpan> a, std::span<const AnnotationSpan> b,
                                   const MatchingConfig& matching) {
  std::vector<std::size_t> ia;
  std::vector<std::size_t> ib;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].layer == Layer::CreativeShift) ia.push_back(i);
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b[j].layer == Layer::CreativeShift) ib.push_back(j);
  }

  struct Candidate {
    double iou;
    std::size_t i;
    std::size_t j;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i : ia) {
    for (std::size_t j : ib) {
      if (a[i].segment_id != b[j].segment_id) continue;
      const double iou = interval_iou(a[i].begin, a[i].end, b[j].begin, b[j].end);
      if (iou > 0.0 && iou >= matching.iou_threshold) candidates.push_back({iou, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    return std::tie(y.iou, x.i, x.j) < std::tie(x.iou, y.i, y.j);
  });

  std::set<std::size_t> used_a;
  std::set<std::size_t> used_b;
  std::vector<std::string> labels_a;
  std::vector<std::string> labels_b;
  for (const auto& c : candidates) {
    if (used_a.contains(c.i) || used_b.contains(c.j)) continue;
    used_a.insert(c.i);
    used_b.insert(c.j);
    labels_a.push_back(a[c.i].shift_type.value_or(""));
    labels_b.push_back(b[c.j].shift_type.value_or(""));
  }
  if (labels_a.empty()) throw Error(ErrorCode::NoMatchedPairs, "no creative-shift spans matched across annotators");

  TypeAgreement out;
  out.matched_pairs = labels_a.size();
  out.unmatched_a = ia.size() - used_a.size();
  out.unmatched_b = ib.size() - used_b.size();
  // All matched pairs agreeing on a single type is perfect agreement rather
  // than a degenerate case worth failing on.
  const bool single_shared_label = std::all_of(labels_a.begin(), labels_a.end(), [&](const std::string& l) {
    return l == labels_a.front();
  }) && labels_a == labels_b;
  if (single_shared_label) {
    out.kappa = {1.0, 1.0, 1.0, labels_a.size()};
  } else {
    out.kappa = cohen_kappa(labels_a, labels_b);
  }
  return out;
}

AgreementReport agreement_report(std::span<const AnnotationSpan> a, std::span<const AnnotationSpan> b,
                                 std::span<const TokenizedSegment> segments, const MatchingConfig& matching) {
  const KappaResult spans = span_agreement_kappa(a, b, segments);
  const TypeAgreement types = type_agreement_kappa(a, b, matching);
  return {spans.kappa, types.kappa.kappa, types.matched_pairs, spans.observed, spans.expected};
}

CsCounts cs_counts(std::span<const AnnotationSpan> spans, const CsScope& scope) {
  CsCounts counts;
  for (const auto& s : spans) {
    const auto [variant, segment] = split_segment_id(s.segment_id);
    if (scope.source_segments && !scope.source_segments->contains(segment)) continue;
    if (s.layer == Layer::UCP) {
      ++counts.ucps;
    } else if (!scope.variant || *scope.variant == variant) {
      ++counts.shifts;
    }
  }
  return counts;
}

double cs_ratio(std::span<const AnnotationSpan> spans, const CsScope& scope) {
  const CsCounts counts = cs_counts(spans, scope);
  if (counts.ucps == 0) throw Error(ErrorCode::NoUCPs, "no units of creative potential in scope");
  return static_cast<double>(counts.shifts) / static_cast<double>(counts.ucps);
}

void to_json(nlohmann::json& j, const AnnotationSpan& s) {
  j = nlohmann::json{{"layer", to_string(s.layer)},
                     {"segment_id", s.segment_id},
                     {"char_range", {s.begin, s.end}},
                     {"shift_type", s.shift_type ? nlohmann::json(*s.shift_type) : nlohmann::json(nullptr)},
                     {"annotator_id", s.annotator_id}};
}

void from_json(const nlohmann::json& j, AnnotationSpan& s) {
  try {
    s.layer = parse_layer(j.at("layer").get<std::string>());
    j.at("segment_id").get_to(s.segment_id);
    const auto& range = j.at("char_range");
    if (!range.is_array() || range.size() != 2) throw Error(ErrorCode::MalformedInput, "char_range must be [begin, end]");
    range.at(0).get_to(s.begin);
    range.at(1).get_to(s.end);
    s.shift_type.reset();
    if (j.contains("shift_type") && !j.at("shift_type").is_null()) s.shift_type = j.at("shift_type").get<std::string>();
    j.at("annotator_id").get_to(s.annotator_id);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("bad annotation span: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const KappaResult& k) {
  j = nlohmann::json{{"kappa", k.kappa}, {"observed", k.observed}, {"expected", k.expected}, {"items", k.items}};
}

void to_json(nlohmann::json& j, const AgreementReport& r) {
  j = nlohmann::json{{"span_kappa", r.span_kappa},
                     {"type_kappa", r.type_kappa},
                     {"matched_pairs", r.matched_pairs},
                     {"observed_agreement", r.observed_agreement},
                     {"expected_agreement", r.expected_agreement}};
}

Taxonomy taxonomy_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::MalformedInput, "taxonomy must be a JSON list of labels");
  Taxonomy t;
  for (const auto& label : j) t.types.push_back(label.get<std::string>());
  return t;
}

}  // namespace postedit::annotation
