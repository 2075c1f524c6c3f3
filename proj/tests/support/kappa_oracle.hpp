#pragma once

// Agreement statistics computed straight from a contingency table, plus a
// random annotation generator. Independent of the library's kappa code.

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "postedit/annotation.hpp"

namespace postedit::testing {

// kappa = (N * sum n_ii - sum r_k c_k) / (N^2 - sum r_k c_k); nullopt when the
// denominator vanishes.
inline std::optional<double> contingency_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> labels(a.begin(), a.end());
  labels.insert(b.begin(), b.end());
  const std::vector<std::string> order(labels.begin(), labels.end());
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < order.size(); ++i) idx[order[i]] = i;
  std::vector<std::vector<long long>> table(order.size(), std::vector<long long>(order.size(), 0));
  for (std::size_t i = 0; i < a.size(); ++i) ++table[idx[a[i]]][idx[b[i]]];
  const long long n = static_cast<long long>(a.size());
  long long diag = 0, chance = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    diag += table[k][k];
    long long row = 0, col = 0;
    for (std::size_t m = 0; m < order.size(); ++m) {
      row += table[k][m];
      col += table[m][k];
    }
    chance += row * col;
  }
  const long long denom = n * n - chance;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(n * diag - chance) / static_cast<double>(denom);
}

inline std::vector<std::string> in_out_labels(const std::vector<annotation::AnnotationSpan>& spans,
                                              const std::vector<annotation::TokenizedSegment>& segments) {
  std::vector<std::string> out;
  for (const auto& seg : segments) {
    for (const auto& [tb, te] : seg.tokens) {
      bool hit = false;
      for (const auto& s : spans) {
        if (s.segment_id != seg.segment_id) continue;
        for (std::size_t p = tb; p < te && !hit; ++p) hit = p >= s.begin && p < s.end;
      }
      out.push_back(hit ? "in" : "out");
    }
  }
  return out;
}

inline double positions_iou(const annotation::AnnotationSpan& x, const annotation::AnnotationSpan& y) {
  std::size_t both = 0, either = 0;
  const std::size_t lo = std::min(x.begin, y.begin), hi = std::max(x.end, y.end);
  for (std::size_t p = lo; p < hi; ++p) {
    const bool in_x = p >= x.begin && p < x.end, in_y = p >= y.begin && p < y.end;
    both += in_x && in_y;
    either += in_x || in_y;
  }
  return either == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(either);
}

struct OracleMatch {
  std::vector<std::string> types_a, types_b;
};

// Repeatedly takes the best remaining pair: highest IoU, then lowest index in
// a, then in b.
inline OracleMatch oracle_type_matching(const std::vector<annotation::AnnotationSpan>& a,
                                        const std::vector<annotation::AnnotationSpan>& b, double threshold) {
  OracleMatch m;
  std::vector<bool> used_a(a.size()), used_b(b.size());
  while (true) {
    double best = -1;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (used_a[i] || a[i].layer != annotation::Layer::CreativeShift) continue;
      for (std::size_t j = 0; j < b.size(); ++j) {
        if (used_b[j] || b[j].layer != annotation::Layer::CreativeShift || a[i].segment_id != b[j].segment_id) continue;
        const double iou = positions_iou(a[i], b[j]);
        if (iou <= 0.0 || iou < threshold) continue;
        if (iou > best) {
          best = iou;
          bi = i;
          bj = j;
        }
      }
    }
    if (best < 0) break;
    used_a[bi] = used_b[bj] = true;
    m.types_a.push_back(a[bi].shift_type.value_or(""));
    m.types_b.push_back(b[bj].shift_type.value_or(""));
  }
  return m;
}

struct RandomAnnotationPair {
  std::vector<annotation::TokenizedSegment> segments;
  std::vector<annotation::AnnotationSpan> a, b;
};

inline RandomAnnotationPair random_annotation_pair(std::mt19937_64& rng) {
  static const std::vector<std::string> kTypes = {"abstraction", "concretisation", "modification"};
  RandomAnnotationPair out;
  const std::size_t n_segments = 1 + rng() % 4;
  for (std::size_t s = 0; s < n_segments; ++s) {
    annotation::TokenizedSegment seg{"s" + std::to_string(s), {}};
    std::size_t pos = 0;
    for (std::size_t t = 0, n = 3 + rng() % 10; t < n; ++t) {
      const std::size_t len = 1 + rng() % 6;
      seg.tokens.emplace_back(pos, pos + len);
      pos += len + 1;
    }
    out.segments.push_back(std::move(seg));
  }
  auto make_spans = [&](const std::string& who, std::vector<annotation::AnnotationSpan>& spans) {
    for (const auto& seg : out.segments) {
      const std::size_t len = seg.tokens.back().second;
      for (std::size_t k = 0, n = rng() % 4; k < n; ++k) {
        const std::size_t begin = rng() % len;
        const std::size_t end = begin + 1 + rng() % std::min<std::size_t>(12, len - begin);
        const bool shift = rng() % 3 != 0;
        spans.push_back({shift ? annotation::Layer::CreativeShift : annotation::Layer::UCP, seg.segment_id, begin,
                         std::min(end, len), shift ? std::optional(kTypes[rng() % kTypes.size()]) : std::nullopt,
                         who});
      }
    }
  };
  make_spans("A", out.a);
  make_spans("B", out.b);
  // Seed B with perturbed copies of A's shifts so matches actually occur.
  for (const auto& s : out.a) {
    if (s.layer != annotation::Layer::CreativeShift || rng() % 2) continue;
    auto copy = s;
    copy.annotator_id = "B";
    if (rng() % 2 && copy.end - copy.begin > 1) ++copy.begin;
    if (rng() % 3 == 0) copy.shift_type = kTypes[rng() % kTypes.size()];
    out.b.push_back(copy);
  }
  return out;
}

}  // namespace postedit::testing
