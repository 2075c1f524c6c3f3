// Builds the synthetic demonstration project and writes it as an archive.
//
// All text is made of generated pseudo-words. MT output differs from the
// post-edited text only by contiguous runs of words that never occur in the
// post-edited text, so every segment's HTER is exactly runs/length and the
// per-cell and per-condition figures are set by the chosen token counts.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>

#include "postedit/analytics.hpp"
#include "postedit/corpus.hpp"
#include "postedit/error.hpp"
#include "postedit/experiment.hpp"
#include "postedit/project.hpp"
#include "postedit/session.hpp"

namespace {

using namespace postedit;
using experiment::Condition;
using session::EditEvent;
using session::EventKind;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  // Uniform in [lo, hi].
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x = 0;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }
  bool chance(int percent) { return range(0, 99) < percent; }

 private:
  std::mt19937_64 engine_;
};

// Plain words never contain 'q'; replacement words always start with "q".
std::string plain_word(std::size_t i) {
  static const char* onsets[] = {"b", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "ch", "st", "tr"};
  static const char* vowels[] = {"a", "e", "i", "o", "u", "ai", "ea"};
  static const char* codas[] = {"", "n", "r", "s", "l", "nd", "t"};
  std::string w;
  std::size_t x = i;
  const std::size_t syllables = 1 + x % 3;
  x /= 3;
  for (std::size_t s = 0; s < syllables; ++s) {
    w += onsets[x % 15];
    x /= 15;
    w += vowels[x % 7];
    x /= 7;
  }
  w += codas[x % 7];
  return w;
}

std::string fresh_word(Rng& rng) { return "q" + plain_word(static_cast<std::size_t>(rng.range(0, 5000))); }

std::string join(const std::vector<std::string>& words, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += words[i];
  }
  return out;
}

std::string join(const std::vector<std::string>& words) { return join(words, 0, words.size()); }

// Splits `total` over parts proportional to `weights` (largest remainder).
std::vector<std::int64_t> apportion(std::int64_t total, const std::vector<double>& weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::int64_t> out(weights.size());
  std::vector<std::pair<double, std::size_t>> rest;
  std::int64_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * weights[i] / sum;
    out[i] = static_cast<std::int64_t>(std::floor(exact));
    used += out[i];
    rest.push_back({exact - static_cast<double>(out[i]), i});
  }
  std::sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t r = 0; used < total; ++r, ++used) ++out[rest[r % rest.size()].second];
  return out;
}

// Published cell values (percent, one decimal) by translator, and the
// document-level value (integer) per condition.
struct HterRow {
  const char* label;
  std::array<double, 4> cells;
  double doc;
};

constexpr HterRow kHterRows[] = {
    {"GPT-3.5", {44.4, 41.9, 62.2, 31.8}, 52},
    {"GPT-4", {50.4, 66.5, 52.2, 29.9}, 54},
    {"Mistral-60k", {66.1, 66.0, 71.5, 54.5}, 71},
    {"Translation", {81.5, 71.2, 61.0, 56.2}, 66},
};

// Total active editing time per condition, milliseconds.
const std::map<std::string, std::int64_t> kActiveMs = {
    {"GPT-4", 3'859'800}, {"Mistral-60k", 5'227'200}, {"Translation", 6'940'800}, {"GPT-3.5", 7'184'400}};

// Mean segment COMET per condition and resolved creative shifts per condition
// (100 UCPs in the source).
const std::map<std::string, double> kComet = {
    {"Translation", 0.85}, {"GPT-3.5", 0.8375}, {"Mistral-60k", 0.83}, {"GPT-4", 0.828}};
const std::map<std::string, int> kShifts = {{"Translation", 30}, {"GPT-3.5", 24}, {"Mistral-60k", 30}, {"GPT-4", 32}};
constexpr int kUcps = 100;

struct CellPlan {
  std::int64_t tokens = 0;  // reference-side tokens
  std::int64_t edits = 0;
};

// Smallest token counts for which every cell prints as published and the
// ratio of sums prints as the published document value.
std::array<CellPlan, 4> plan_row(const HterRow& row) {
  std::vector<std::int64_t> grid;
  for (std::int64_t w = 800; w <= 3000; w += 100) grid.push_back(w);
  for (std::int64_t w = 3500; w <= 30000; w += 500) grid.push_back(w);

  auto edits_for = [](double h, std::int64_t w) -> std::optional<std::int64_t> {
    const auto k = static_cast<std::int64_t>(std::llround(h * static_cast<double>(w) / 100.0));
    const double pct = 100.0 * static_cast<double>(k) / static_cast<double>(w);
    if (std::fabs(pct - h) >= 0.045 || analytics::round_half_up(pct, 1) != h) return std::nullopt;
    return k;
  };
  std::array<std::vector<CellPlan>, 4> options;
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::int64_t w : grid) {
      if (auto k = edits_for(row.cells[c], w)) options[c].push_back({w, *k});
    }
  }

  std::array<CellPlan, 4> best{};
  std::int64_t best_total = std::numeric_limits<std::int64_t>::max();
  for (const auto& a : options[0]) {
    for (const auto& b : options[1]) {
      for (const auto& c : options[2]) {
        for (const auto& d : options[3]) {
          const std::int64_t w = a.tokens + b.tokens + c.tokens + d.tokens;
          if (w >= best_total) continue;
          const double doc = 100.0 * static_cast<double>(a.edits + b.edits + c.edits + d.edits) / static_cast<double>(w);
          if (std::fabs(doc - row.doc) >= 0.45) continue;
          best_total = w;
          best = {a, b, c, d};
        }
      }
    }
  }
  if (best_total == std::numeric_limits<std::int64_t>::max()) {
    throw Error(ErrorCode::InfeasibleBalance, std::string("no token plan for ") + row.label);
  }
  return best;
}

// Distributes `total` counted milliseconds over `slots` gaps, each at most the
// idle threshold.
std::vector<std::int64_t> spread_gaps(std::int64_t total, std::size_t slots, Rng& rng) {
  std::vector<double> w(slots);
  for (auto& x : w) x = static_cast<double>(rng.range(20, 100));
  std::vector<std::int64_t> out = apportion(total, w);
  const std::int64_t cap = session::kDefaultIdleThresholdMs - 1;
  std::int64_t excess = 0;
  for (auto& v : out) {
    if (v > cap) excess += v - cap, v = cap;
  }
  for (auto& v : out) {
    const std::int64_t move = std::min(excess, cap - v);
    v += move;
    excess -= move;
  }
  if (excess > 0) throw Error(ErrorCode::InvalidArgument, "session time does not fit its gaps");
  return out;
}

struct Built {
  std::vector<EditEvent> events;
  std::int64_t end_ms = 0;
};

// Turns a list of edit steps into a full session with the requested active time.
Built timeline(const std::vector<EditEvent>& edits, std::int64_t start_ms, std::int64_t active_ms, Rng& rng) {
  std::vector<EditEvent> ev;
  ev.push_back(EditEvent::marker(0, 0, EventKind::ReadingOpened));
  ev.push_back(EditEvent::marker(0, 0, EventKind::EditingStarted));
  const bool blur = rng.chance(12) && !edits.empty();
  const std::size_t blur_at = blur ? static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(edits.size()) - 1)) : 0;
  for (std::size_t i = 0; i < edits.size(); ++i) {
    if (blur && i == blur_at) {
      ev.push_back(EditEvent::marker(0, 0, EventKind::FocusLost));
      ev.push_back(EditEvent::marker(0, 0, EventKind::FocusGained));
    }
    ev.push_back(edits[i]);
  }
  ev.push_back(EditEvent::marker(0, 0, EventKind::DraftSaved));
  ev.push_back(EditEvent::marker(0, 0, EventKind::Finalized));

  // Gaps after events that leave the session in the editing phase count.
  std::vector<std::size_t> counted;
  for (std::size_t i = 0; i + 1 < ev.size(); ++i) {
    const EventKind k = ev[i].kind;
    if (k != EventKind::ReadingOpened && k != EventKind::FocusLost) counted.push_back(i);
  }
  const bool idle = active_ms > session::kDefaultIdleThresholdMs + 2000 && rng.chance(40);
  std::vector<std::int64_t> gaps;
  std::size_t idle_slot = counted.size();
  if (idle) {
    idle_slot = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(counted.size()) - 1));
    std::vector<std::int64_t> rest =
        spread_gaps(active_ms - session::kDefaultIdleThresholdMs, counted.size() - 1, rng);
    for (std::size_t s = 0; s < counted.size(); ++s) {
      gaps.push_back(s == idle_slot ? session::kDefaultIdleThresholdMs : rest[s < idle_slot ? s : s - 1]);
    }
  } else {
    gaps = spread_gaps(active_ms, counted.size(), rng);
  }

  std::int64_t t = start_ms;
  std::size_t next_counted = 0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    ev[i].seq = i + 1;
    ev[i].timestamp_ms = t;
    if (i + 1 == ev.size()) break;
    if (next_counted < counted.size() && counted[next_counted] == i) {
      std::int64_t gap = gaps[next_counted];
      // An idle stretch lasts longer than it is credited.
      if (next_counted == idle_slot) gap += rng.range(5'000, 240'000);
      t += gap;
      ++next_counted;
    } else if (ev[i].kind == EventKind::ReadingOpened) {
      t += rng.range(2'000, 9'000);
    } else {
      t += rng.range(4'000, 90'000);  // away from the window
    }
  }
  return {std::move(ev), t};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string out_path = argc > 1 ? argv[1] : "data/demo/demo_archive.json";
  try {
    Rng rng(20240304);

    // Source document: 400 segments of 8-30 words.
    std::vector<std::string> source_segments;
    for (int s = 0; s < 400; ++s) {
      const auto n = rng.range(8, 30);
      std::vector<std::string> words;
      for (std::int64_t i = 0; i < n; ++i) words.push_back(plain_word(static_cast<std::size_t>(rng.range(0, 3000))));
      words.front()[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(words.front()[0])));
      source_segments.push_back(join(words) + ".");
    }

    service::Project project;
    project.id = "demo";
    project.state = service::ProjectState::Active;
    project.document = corpus::document_from_segments(source_segments, corpus::TokenizerScheme::WhitespacePunctuation,
                                                      "demo-doc", "Synthetic demonstration text", "en");
    project.models = {"GPT-3.5", "Mistral-60k", "GPT-4"};
    project.translators = {"T1", "T2", "T3", "T4"};
    // Klein-group assignment square over models X, Y, Z
    // standing for GPT-3.5, Mistral-60k and GPT-4.
    const Condition ht = Condition::from_scratch();
    const Condition x = Condition::post_edit("GPT-3.5");
    const Condition y = Condition::post_edit("Mistral-60k");
    const Condition z = Condition::post_edit("GPT-4");
    project.rotation = {project.translators, project.models, {{ht, x, y, z}, {x, ht, z, y}, {y, z, ht, x}, {z, y, x, ht}}};
    project.chunks = corpus::chunk_document(project.document, 4);
    const std::size_t n_segments = project.document.segments.size();

    // Token plans per (condition, translator).
    std::map<std::string, std::array<CellPlan, 4>> plans;
    for (const auto& row : kHterRows) plans[row.label] = plan_row(row);

    auto weights_of_chunk = [&](const corpus::Chunk& chunk) {
      std::vector<double> w;
      for (std::size_t i = chunk.begin; i < chunk.end; ++i) w.push_back(static_cast<double>(project.document.segments[i].word_count));
      return w;
    };

    // Reference translation: from-scratch cells fix its length per chunk.
    std::vector<std::vector<std::string>> reference(n_segments);
    std::vector<std::int64_t> ht_edits(n_segments, 0);
    for (std::size_t t = 0; t < 4; ++t) {
      const std::size_t pos = *project.rotation.position_of(t, ht);
      const corpus::Chunk& chunk = project.chunks[pos];
      const auto lengths = apportion(plans["Translation"][t].tokens, weights_of_chunk(chunk));
      const auto edits = apportion(plans["Translation"][t].edits, std::vector<double>(lengths.begin(), lengths.end()));
      for (std::size_t i = chunk.begin; i < chunk.end; ++i) {
        for (std::int64_t k = 0; k < lengths[i - chunk.begin]; ++k) {
          reference[i].push_back(plain_word(static_cast<std::size_t>(rng.range(0, 3000))));
        }
        ht_edits[i] = edits[i - chunk.begin];
      }
    }
    project.reference.emplace();
    for (const auto& r : reference) project.reference->push_back(join(r));

    service::ProjectData data;
    std::map<std::string, std::vector<std::string>> final_text;  // condition label -> per segment
    std::map<std::string, std::vector<std::string>> mt;
    for (const auto& m : project.models) mt[m].resize(n_segments);

    std::map<std::string, std::vector<std::vector<EditEvent>>> edit_steps;  // per translator, per segment
    for (const auto& tr : project.translators) edit_steps[tr].resize(n_segments);

    for (std::size_t t = 0; t < 4; ++t) {
      const std::string& tr = project.translators[t];
      for (std::size_t pos = 0; pos < 4; ++pos) {
        const Condition& cond = project.rotation.at(t, pos);
        const corpus::Chunk& chunk = project.chunks[pos];
        const CellPlan plan = plans[cond.label()][t];
        std::vector<std::int64_t> lengths;
        std::vector<std::int64_t> edits;
        if (cond.is_post_edit()) {
          lengths = apportion(plan.tokens, weights_of_chunk(chunk));
          edits = apportion(plan.edits, std::vector<double>(lengths.begin(), lengths.end()));
        }
        for (std::size_t i = chunk.begin; i < chunk.end; ++i) {
          std::vector<std::string> target;
          std::vector<std::string> initial;
          std::int64_t k = 0;
          if (cond.is_post_edit()) {
            // Post-edited text: the reference reworded in places, resized.
            const auto len = static_cast<std::size_t>(lengths[i - chunk.begin]);
            for (std::size_t w = 0; w < len; ++w) {
              if (w < reference[i].size() && !rng.chance(35)) {
                target.push_back(reference[i][w]);
              } else {
                target.push_back(plain_word(static_cast<std::size_t>(rng.range(0, 3000))));
              }
            }
            k = edits[i - chunk.begin];
          } else {
            target = reference[i];
            k = ht_edits[i];
          }
          // One contiguous run of k words differs between the compared texts.
          const auto start = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(target.size()) - k));
          std::vector<std::string> changed = target;
          for (std::int64_t r = 0; r < k; ++r) changed[start + static_cast<std::size_t>(r)] = fresh_word(rng);

          std::vector<EditEvent> steps;
          if (cond.is_post_edit()) {
            initial = changed;  // MT output; the translator restores `target`
            const std::size_t offset = start == 0 ? 0 : join(initial, 0, start).size() + 1;
            if (k > 0) {
              steps.push_back(EditEvent::erase(0, 0, offset, join(initial, start, start + static_cast<std::size_t>(k)).size()));
              steps.push_back(EditEvent::insert(0, 0, offset, join(target, start, start + static_cast<std::size_t>(k))));
            }
            mt[cond.model_id][i] = join(initial);
            final_text[cond.label()].resize(n_segments);
            final_text[cond.label()][i] = join(target);
          } else {
            // Typed from scratch: the produced text is `changed`.
            std::string buffer;
            const std::size_t pieces = std::min<std::size_t>(changed.size(), static_cast<std::size_t>(rng.range(1, 4)));
            const auto cut = apportion(static_cast<std::int64_t>(changed.size()), std::vector<double>(pieces, 1.0));
            std::size_t from = 0;
            for (std::size_t p = 0; p < pieces; ++p) {
              const std::size_t to = from + static_cast<std::size_t>(cut[p]);
              const std::string piece = (buffer.empty() ? "" : " ") + join(changed, from, to);
              steps.push_back(EditEvent::insert(0, 0, buffer.size(), piece));
              buffer += piece;
              if (p == 0 && rng.chance(30)) {
                const std::string typo = " " + fresh_word(rng);
                steps.push_back(EditEvent::insert(0, 0, buffer.size(), typo));
                steps.push_back(EditEvent::erase(0, 0, buffer.size(), typo.size()));
              }
              from = to;
            }
            final_text[cond.label()].resize(n_segments);
            final_text[cond.label()][i] = buffer;
          }
          edit_steps[tr][i] = std::move(steps);
        }
      }
    }
    project.mt = mt;
    data.project = project;

    // Active time per session, apportioned from the condition totals.
    std::map<std::string, std::vector<std::pair<std::string, std::size_t>>> by_condition;
    for (const auto& tr : project.translators) {
      for (std::size_t i = 0; i < n_segments; ++i) by_condition[project.condition_for(tr, i)->label()].push_back({tr, i});
    }
    std::map<std::string, std::int64_t> active;
    for (const auto& [label, members] : by_condition) {
      std::vector<double> w;
      for (const auto& [tr, i] : members) {
        w.push_back(static_cast<double>(project.document.segments[i].word_count) * static_cast<double>(rng.range(60, 140)));
      }
      const auto ms = apportion(kActiveMs.at(label), w);
      for (std::size_t m = 0; m < members.size(); ++m) active[service::session_key(members[m].first, members[m].second)] = ms[m];
    }

    for (std::size_t t = 0; t < 4; ++t) {
      const std::string& tr = project.translators[t];
      std::int64_t clock = 1'709'542'800'000 + static_cast<std::int64_t>(t) * 86'400'000;  // 2024-03-04 09:00 UTC
      for (std::size_t i = 0; i < n_segments; ++i) {
        const Condition cond = *project.condition_for(tr, i);
        const std::string key = service::session_key(tr, i);
        Built built = timeline(edit_steps[tr][i], clock, active[key], rng);
        clock = built.end_ms + rng.range(1'000, 5'000);
        session::SegmentSession s{project.document.segments[i].id, tr, cond, project.initial_text(cond, i),
                                  std::move(built.events)};
        if (s.final_text() != final_text[cond.label()][i] || s.active_ms() != active[key]) {
          throw Error(ErrorCode::ValidationFailed, "generated session " + key + " is inconsistent");
        }
        data.sessions.emplace(key, std::move(s));
      }
    }

    // Segment COMET scores around the condition mean, paired so the mean is exact.
    for (const auto& [label, mean] : kComet) {
      auto& scores = data.scores[label].by_segment;
      for (std::size_t i = 0; i + 1 < n_segments; i += 2) {
        const double d = static_cast<double>(rng.range(0, 900)) / 10000.0;
        scores[project.document.segments[i].id] = mean + d;
        scores[project.document.segments[i + 1].id] = mean - d;
      }
      if (n_segments % 2 == 1) scores[project.document.segments.back().id] = mean;
    }

    // Adjudicated annotation layer.
    auto pick = [&](std::size_t count) {
      std::vector<std::size_t> idx(n_segments);
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t i = n_segments; i > 1; --i) std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(i) - 1))]);
      idx.resize(count);
      std::sort(idx.begin(), idx.end());
      return idx;
    };
    auto word_span = [&](const std::string& text) {
      const auto tokens = corpus::tokenize_with_offsets(text, corpus::TokenizerScheme::Whitespace);
      const auto a = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(tokens.size()) - 1));
      const auto b = std::min(tokens.size() - 1, a + static_cast<std::size_t>(rng.range(0, 3)));
      return std::pair{tokens[a].begin, tokens[b].end};
    };
    for (std::size_t i : pick(kUcps)) {
      const auto [b, e] = word_span(project.document.segments[i].text);
      data.annotations.push_back({annotation::Layer::UCP, project.document.segments[i].id, b, e, std::nullopt,
                                  std::string(annotation::kResolvedAnnotator)});
    }
    const auto taxonomy = annotation::Taxonomy::defaults().types;
    for (const auto& c : project.conditions()) {
      std::size_t n = 0;
      for (std::size_t i : pick(static_cast<std::size_t>(kShifts.at(c.label())))) {
        const auto [b, e] = word_span(final_text[c.label()][i]);
        data.annotations.push_back({annotation::Layer::CreativeShift,
                                    annotation::target_segment_id(c.label(), project.document.segments[i].id), b, e,
                                    taxonomy[n++ % taxonomy.size()], std::string(annotation::kResolvedAnnotator)});
      }
    }

    const std::string archive = service::export_archive(data);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + out_path + "'");
    out << archive;
    out.close();

    const auto reports = service::compute_reports(data);
    for (const char* name : {"times", "hter", "quality", "creativity"}) {
      std::cout << analytics::render(service::report_table(reports, name), analytics::TableFormat::Text) << "\n";
    }
    std::cerr << "wrote " << out_path << " (" << archive.size() << " bytes)\n";
  } catch (const std::exception& e) {
    std::cerr << "make_demo: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
