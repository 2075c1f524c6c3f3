#include <algorithm>
#include <limits>
#include <unordered_map>

#include "postedit/error.hpp"
#include "postedit/metrics.hpp"
#include "postedit/unicode.hpp"

namespace postedit::metrics {

namespace {

using Ids = std::vector<int>;

struct Encoded {
  Ids hyp;
  Ids ref;
};

Encoded encode(const Tokens& hyp, const Tokens& ref, bool case_sensitive) {
  std::unordered_map<std::string, int> vocab;
  auto id_of = [&](const std::string& token) {
    const std::string key = case_sensitive ? token : unicode::fold_case(token);
    return vocab.try_emplace(key, static_cast<int>(vocab.size())).first->second;
  };
  Encoded e;
  e.hyp.reserve(hyp.size());
  e.ref.reserve(ref.size());
  for (const auto& t : ref) e.ref.push_back(id_of(t));
  for (const auto& t : hyp) e.hyp.push_back(id_of(t));
  return e;
}

std::size_t edit_distance(const Ids& hyp, const Ids& ref) {
  std::vector<std::size_t> prev(ref.size() + 1);
  std::vector<std::size_t> cur(ref.size() + 1);
  for (std::size_t j = 0; j <= ref.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const std::size_t diag = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({diag, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

// Full alignment; fills the edit counters of `out` from one optimal path.
// Backtrace prefers match/substitution, then deletion, then insertion.
void align(const Ids& hyp, const Ids& ref, TerResult& out) {
  const std::size_t n = hyp.size();
  const std::size_t m = ref.size();
  std::vector<std::size_t> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      at(i, j) = std::min({at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1), at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1)) {
      if (hyp[i - 1] != ref[j - 1]) ++out.substitutions;
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++out.deletions;
      --i;
    } else {
      ++out.insertions;
      --j;
    }
  }
}

// Lower bound on the edit distance that no reordering of hyp can beat: tokens
// without a counterpart in ref must be substituted or removed either way.
std::size_t bag_lower_bound(const Ids& hyp, const Ids& ref) {
  std::unordered_map<int, long> balance;
  for (int t : ref) ++balance[t];
  std::size_t common = 0;
  for (int t : hyp) {
    auto it = balance.find(t);
    if (it != balance.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  return std::max(hyp.size(), ref.size()) - common;
}

Ids move_block(const Ids& in, std::size_t start, std::size_t len, std::size_t dest) {
  Ids out;
  out.reserve(in.size());
  Ids rest;
  rest.reserve(in.size() - len);
  rest.insert(rest.end(), in.begin(), in.begin() + static_cast<std::ptrdiff_t>(start));
  rest.insert(rest.end(), in.begin() + static_cast<std::ptrdiff_t>(start + len), in.end());
  out.insert(out.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(dest));
  out.insert(out.end(), in.begin() + static_cast<std::ptrdiff_t>(start),
             in.begin() + static_cast<std::ptrdiff_t>(start + len));
  out.insert(out.end(), rest.begin() + static_cast<std::ptrdiff_t>(dest), rest.end());
  return out;
}

struct Shift {
  std::size_t start = 0;
  std::size_t len = 0;
  std::size_t dest = 0;
  std::size_t distance = std::numeric_limits<std::size_t>::max();
};

Shift best_shift(const Ids& cur, const Ids& ref, const TerConfig& config, std::size_t floor) {
  Shift best;
  const std::size_t n = cur.size();
  std::vector<std::size_t> matches;
  for (std::size_t start = 0; start < n; ++start) {
    // Reference positions where cur[start, start + len) occurs.
    matches.clear();
    for (std::size_t r = 0; r < ref.size(); ++r) matches.push_back(r);
    for (std::size_t len = 1; len <= config.max_shift_size && start + len <= n; ++len) {
      const int token = cur[start + len - 1];
      std::erase_if(matches, [&](std::size_t r) { return r + len > ref.size() || ref[r + len - 1] != token; });
      if (matches.empty()) break;
      for (std::size_t dest = 0; dest + len <= n; ++dest) {
        if (dest == start) continue;
        const std::size_t dist = dest > start ? dest - start : start - dest;
        if (dist > config.max_shift_distance) continue;
        const std::size_t d = edit_distance(move_block(cur, start, len, dest), ref);
        if (d < best.distance) {
          best = {start, len, dest, d};
          if (d == floor) return best;
        }
      }
    }
  }
  return best;
}

TerResult compute(const Tokens& hyp_tokens, const Tokens& ref_tokens, const TerConfig& config) {
  const Encoded e = encode(hyp_tokens, ref_tokens, config.case_sensitive);
  Ids cur = e.hyp;
  TerResult result;
  result.ref_length = e.ref.size();

  if (config.shifts_enabled) {
    std::size_t distance = edit_distance(cur, e.ref);
    const std::size_t floor = bag_lower_bound(cur, e.ref);
    // A shift costs one edit, so it only pays off when it saves at least two.
    while (distance > floor + 1) {
      const Shift s = best_shift(cur, e.ref, config, floor);
      if (s.distance + 1 >= distance) break;
      cur = move_block(cur, s.start, s.len, s.dest);
      distance = s.distance;
      ++result.shifts;
    }
  }
  align(cur, e.ref, result);
  const std::size_t edits = result.total_edits();
  if (result.ref_length > 0) {
    result.score = static_cast<double>(edits) / static_cast<double>(result.ref_length);
  } else {
    result.score = edits == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return result;
}

}  // namespace

std::size_t levenshtein(const Tokens& hyp, const Tokens& ref, bool case_sensitive) {
  const Encoded e = encode(hyp, ref, case_sensitive);
  return edit_distance(e.hyp, e.ref);
}

TerResult ter(const Tokens& hyp, const Tokens& ref, const TerConfig& config) {
  if (ref.empty()) throw Error(ErrorCode::EmptyReference, "TER needs a non-empty reference");
  return compute(hyp, ref, config);
}

TerResult ter_unchecked(const Tokens& hyp, const Tokens& ref, const TerConfig& config) {
  return compute(hyp, ref, config);
}

double HterBreakdown::percent() const {
  if (reference_tokens == 0) throw Error(ErrorCode::EmptyReference, "post-edited segments contain no tokens");
  return 100.0 * static_cast<double>(total_edits) / static_cast<double>(reference_tokens);
}

HterBreakdown hter_breakdown(const std::vector<Tokens>& mt_segments, const std::vector<Tokens>& postedited_segments,
                             const TerConfig& config) {
  if (mt_segments.size() != postedited_segments.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(mt_segments.size()) + " MT segments vs " +
                                               std::to_string(postedited_segments.size()) + " post-edited");
  }
  HterBreakdown out;
  out.segments.reserve(mt_segments.size());
  for (std::size_t i = 0; i < mt_segments.size(); ++i) {
    TerResult r = ter_unchecked(mt_segments[i], postedited_segments[i], config);
    out.total_edits += r.total_edits();
    out.reference_tokens += r.ref_length;
    out.segments.push_back(r);
  }
  return out;
}

double hter_document(const std::vector<Tokens>& mt_segments, const std::vector<Tokens>& postedited_segments,
                     const TerConfig& config) {
  return hter_breakdown(mt_segments, postedited_segments, config).percent();
}

void to_json(nlohmann::json& j, const TerResult& r) {
  j = nlohmann::json{{"insertions", r.insertions}, {"deletions", r.deletions},   {"substitutions", r.substitutions},
                     {"shifts", r.shifts},         {"ref_length", r.ref_length}, {"score", r.score}};
}

void from_json(const nlohmann::json& j, TerResult& r) {
  j.at("insertions").get_to(r.insertions);
  j.at("deletions").get_to(r.deletions);
  j.at("substitutions").get_to(r.substitutions);
  j.at("shifts").get_to(r.shifts);
  j.at("ref_length").get_to(r.ref_length);
  j.at("score").get_to(r.score);
}

}  // namespace postedit::metrics
