#pragma once

// Exhaustive reference for TER with block shifts, used only by tests.
//
// Explores every sequence of block moves (block equal to a contiguous piece of
// the reference, bounded size and distance) breadth first and returns the
// minimum of moves + plain edit distance. Written independently of the
// production search: different edit-distance routine, different move
// generation, no shared helpers.

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <vector>

namespace postedit::testing {

// Memoized recursive edit distance (insert/delete/substitute, unit costs).
inline std::size_t oracle_edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  auto rec = [&](auto&& self, std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = self(self, i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    best = std::min(best, self(self, i + 1, j) + 1);
    best = std::min(best, self(self, i, j + 1) + 1);
    memo[key] = best;
    return best;
  };
  return rec(rec, 0, 0);
}

inline bool oracle_is_ref_piece(const std::vector<int>& ref, const std::vector<int>& piece) {
  return std::search(ref.begin(), ref.end(), piece.begin(), piece.end()) != ref.end();
}

// Every sequence reachable from `seq` with one admissible block move.
inline std::vector<std::vector<int>> oracle_moves(const std::vector<int>& seq, const std::vector<int>& ref,
                                                  std::size_t max_size, std::size_t max_distance) {
  std::vector<std::vector<int>> out;
  const std::size_t n = seq.size();
  for (std::size_t len = 1; len <= std::min(max_size, n); ++len) {
    for (std::size_t start = 0; start + len <= n; ++start) {
      const std::vector<int> piece(seq.begin() + static_cast<std::ptrdiff_t>(start),
                                   seq.begin() + static_cast<std::ptrdiff_t>(start + len));
      if (!oracle_is_ref_piece(ref, piece)) continue;
      // Moving right by k == rotating [start, start+len+k) left by len.
      for (std::size_t k = 1; k <= max_distance && start + len + k <= n; ++k) {
        std::vector<int> moved = seq;
        std::rotate(moved.begin() + static_cast<std::ptrdiff_t>(start),
                    moved.begin() + static_cast<std::ptrdiff_t>(start + len),
                    moved.begin() + static_cast<std::ptrdiff_t>(start + len + k));
        out.push_back(std::move(moved));
      }
      // Moving left by k == rotating [start-k, start+len) right by len.
      for (std::size_t k = 1; k <= max_distance && k <= start; ++k) {
        std::vector<int> moved = seq;
        std::rotate(moved.begin() + static_cast<std::ptrdiff_t>(start - k),
                    moved.begin() + static_cast<std::ptrdiff_t>(start),
                    moved.begin() + static_cast<std::ptrdiff_t>(start + len));
        out.push_back(std::move(moved));
      }
    }
  }
  return out;
}

// Distance no rearrangement can go below: tokens that have no partner in the
// other sequence's multiset must be edited regardless of order.
inline std::size_t oracle_multiset_floor(std::vector<int> a, std::vector<int> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<int> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return std::max(a.size(), b.size()) - both.size();
}

// Minimum over all move sequences of (#moves + edit distance).
inline std::size_t exhaustive_ter_edits(const std::vector<int>& hyp, const std::vector<int>& ref,
                                        std::size_t max_size = 10, std::size_t max_distance = 50) {
  std::size_t best = oracle_edit_distance(hyp, ref);
  const std::size_t floor = oracle_multiset_floor(hyp, ref);
  std::set<std::vector<int>> seen{hyp};
  std::vector<std::vector<int>> frontier{hyp};
  for (std::size_t depth = 1; !frontier.empty() && depth + floor < best; ++depth) {
    std::vector<std::vector<int>> next;
    for (const auto& state : frontier) {
      for (auto& moved : oracle_moves(state, ref, max_size, max_distance)) {
        if (!seen.insert(moved).second) continue;
        best = std::min(best, depth + oracle_edit_distance(moved, ref));
        next.push_back(std::move(moved));
      }
    }
    frontier = std::move(next);
  }
  return best;
}

}  // namespace postedit::testing
