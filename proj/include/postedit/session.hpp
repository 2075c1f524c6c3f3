#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "postedit/experiment.hpp"

namespace postedit::session {

enum class EventKind {
  ReadingOpened,
  EditingStarted,
  Insert,
  Delete,
  FocusLost,
  FocusGained,
  DraftSaved,
  Finalized,
};

std::string_view to_string(EventKind kind);
EventKind parse_event_kind(std::string_view name);

// Positions and lengths count unicode code points, not bytes.
struct EditEvent {
  std::uint64_t seq = 0;
  std::int64_t timestamp_ms = 0;
  EventKind kind = EventKind::DraftSaved;
  std::size_t position = 0;  // Insert / Delete
  std::string text;          // Insert: inserted text
  std::size_t length = 0;    // Delete: removed code points

  static EditEvent marker(std::uint64_t seq, std::int64_t ts, EventKind kind) { return {seq, ts, kind, 0, {}, 0}; }
  static EditEvent insert(std::uint64_t seq, std::int64_t ts, std::size_t pos, std::string text) {
    return {seq, ts, EventKind::Insert, pos, std::move(text), 0};
  }
  static EditEvent erase(std::uint64_t seq, std::int64_t ts, std::size_t pos, std::size_t len) {
    return {seq, ts, EventKind::Delete, pos, {}, len};
  }

  bool operator==(const EditEvent&) const = default;
};

struct BufferState {
  std::u32string text;
  std::optional<std::uint64_t> last_seq;

  static BufferState from_utf8(std::string_view text);
  std::string utf8() const;
};

// Throws OutOfBounds or NonMonotonicSeq; the message names the event's seq.
BufferState apply_event(BufferState buffer, const EditEvent& event);
void apply_event_in_place(BufferState& buffer, const EditEvent& event);

std::string replay(std::string_view initial_text, std::span<const EditEvent> events);

// Structural checks: strictly increasing seq, non-decreasing non-negative
// timestamps, Insert/Delete only inside an editing phase. Throws MalformedStream.
void validate_stream(std::span<const EditEvent> events);

inline constexpr std::int64_t kDefaultIdleThresholdMs = 30'000;

// Sum of inter-event gaps spent in the editing phase with focus. A gap longer
// than the threshold counts as exactly the threshold; reading, blurred and
// finalized stretches count zero.
std::int64_t compute_active_time(std::span<const EditEvent> events,
                                 std::int64_t idle_threshold_ms = kDefaultIdleThresholdMs);

struct EditCounts {
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t inserted_chars = 0;
  std::size_t deleted_chars = 0;

  bool operator==(const EditCounts&) const = default;
};

EditCounts edit_counts(std::span<const EditEvent> events);

struct SegmentSession {
  std::string segment_id;
  std::string translator_id;
  experiment::Condition condition;
  std::string initial_text;  // MT output for post-editing, empty when translating from scratch
  std::vector<EditEvent> events;

  std::string final_text() const { return replay(initial_text, events); }
  std::int64_t active_ms(std::int64_t idle_threshold_ms = kDefaultIdleThresholdMs) const {
    return compute_active_time(events, idle_threshold_ms);
  }
  bool finalized() const { return !events.empty() && events.back().kind == EventKind::Finalized; }
  std::uint64_t last_seq() const { return events.empty() ? 0 : events.back().seq; }

  bool operator==(const SegmentSession&) const = default;
};

void to_json(nlohmann::json& j, const EditEvent& e);
void from_json(const nlohmann::json& j, EditEvent& e);

// Header line {segment_id, translator_id, condition, initial_text, final_text}
// followed by one event per line.
std::string to_jsonl(const SegmentSession& session);
// Validates the stream and, when the header carries final_text, checks that
// replay reproduces it (ValidationFailed otherwise).
SegmentSession from_jsonl(std::string_view content);

}  // namespace postedit::session
