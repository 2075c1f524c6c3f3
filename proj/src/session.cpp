#include "postedit/session.hpp"

#include <algorithm>
#include <sstream>

#include "postedit/error.hpp"
#include "postedit/unicode.hpp"

namespace postedit::session {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::ReadingOpened: return "ReadingOpened";
    case EventKind::EditingStarted: return "EditingStarted";
    case EventKind::Insert: return "Insert";
    case EventKind::Delete: return "Delete";
    case EventKind::FocusLost: return "FocusLost";
    case EventKind::FocusGained: return "FocusGained";
    case EventKind::DraftSaved: return "DraftSaved";
    case EventKind::Finalized: return "Finalized";
  }
  return "?";
}

EventKind parse_event_kind(std::string_view name) {
  static constexpr EventKind kAll[] = {EventKind::ReadingOpened, EventKind::EditingStarted, EventKind::Insert,
                                       EventKind::Delete,        EventKind::FocusLost,      EventKind::FocusGained,
                                       EventKind::DraftSaved,    EventKind::Finalized};
  for (EventKind k : kAll) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::MalformedStream, "unknown event kind '" + std::string(name) + "'");
}

BufferState BufferState::from_utf8(std::string_view text) { return {unicode::to_u32(text), std::nullopt}; }

std::string BufferState::utf8() const { return unicode::to_utf8(text); }

void apply_event_in_place(BufferState& buffer, const EditEvent& event) {
  if (buffer.last_seq && event.seq <= *buffer.last_seq) {
    throw Error(ErrorCode::NonMonotonicSeq,
                "seq " + std::to_string(event.seq) + " after " + std::to_string(*buffer.last_seq));
  }
  if (event.kind == EventKind::Insert) {
    if (event.position > buffer.text.size()) {
      throw Error(ErrorCode::OutOfBounds, "seq " + std::to_string(event.seq) + ": insert at " +
                                              std::to_string(event.position) + " in buffer of length " +
                                              std::to_string(buffer.text.size()));
    }
    buffer.text.insert(event.position, unicode::to_u32(event.text));
  } else if (event.kind == EventKind::Delete) {
    if (event.position > buffer.text.size() || event.length > buffer.text.size() - event.position) {
      throw Error(ErrorCode::OutOfBounds, "seq " + std::to_string(event.seq) + ": delete " +
                                              std::to_string(event.length) + " at " + std::to_string(event.position) +
                                              " in buffer of length " + std::to_string(buffer.text.size()));
    }
    buffer.text.erase(event.position, event.length);
  }
  buffer.last_seq = event.seq;
}

BufferState apply_event(BufferState buffer, const EditEvent& event) {
  apply_event_in_place(buffer, event);
  return buffer;
}

std::string replay(std::string_view initial_text, std::span<const EditEvent> events) {
  BufferState buffer = BufferState::from_utf8(initial_text);
  for (const auto& e : events) apply_event_in_place(buffer, e);
  return buffer.utf8();
}

namespace {

enum class Phase { Reading, Editing, Blurred, Closed };

Phase next_phase(Phase phase, EventKind kind) {
  switch (kind) {
    case EventKind::ReadingOpened: return Phase::Reading;
    case EventKind::EditingStarted: return Phase::Editing;
    case EventKind::FocusLost: return phase == Phase::Editing ? Phase::Blurred : phase;
    case EventKind::FocusGained: return phase == Phase::Blurred ? Phase::Editing : phase;
    case EventKind::Finalized: return Phase::Closed;
    default: return phase;
  }
}

}  // namespace

void validate_stream(std::span<const EditEvent> events) {
  Phase phase = Phase::Reading;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const EditEvent& e = events[i];
    if (e.timestamp_ms < 0) {
      throw Error(ErrorCode::MalformedStream, "seq " + std::to_string(e.seq) + " has a negative timestamp");
    }
    if (i > 0) {
      if (e.seq <= events[i - 1].seq) {
        throw Error(ErrorCode::MalformedStream,
                    "seq " + std::to_string(e.seq) + " follows " + std::to_string(events[i - 1].seq));
      }
      if (e.timestamp_ms < events[i - 1].timestamp_ms) {
        throw Error(ErrorCode::MalformedStream, "seq " + std::to_string(e.seq) + " goes back in time");
      }
    }
    if ((e.kind == EventKind::Insert || e.kind == EventKind::Delete) &&
        phase != Phase::Editing && phase != Phase::Blurred) {
      throw Error(ErrorCode::MalformedStream,
                  "seq " + std::to_string(e.seq) + ": " + std::string(to_string(e.kind)) + " outside editing phase");
    }
    phase = next_phase(phase, e.kind);
  }
}

std::int64_t compute_active_time(std::span<const EditEvent> events, std::int64_t idle_threshold_ms) {
  if (idle_threshold_ms < 0) throw Error(ErrorCode::InvalidArgument, "idle threshold must be non-negative");
  validate_stream(events);
  std::int64_t total = 0;
  Phase phase = Phase::Reading;
  for (std::size_t i = 0; i < events.size(); ++i) {
    phase = next_phase(phase, events[i].kind);
    if (phase == Phase::Editing && i + 1 < events.size()) {
      total += std::min(events[i + 1].timestamp_ms - events[i].timestamp_ms, idle_threshold_ms);
    }
  }
  return total;
}

EditCounts edit_counts(std::span<const EditEvent> events) {
  EditCounts counts;
  for (const auto& e : events) {
    if (e.kind == EventKind::Insert) {
      ++counts.insertions;
      counts.inserted_chars += unicode::length(e.text);
    } else if (e.kind == EventKind::Delete) {
      ++counts.deletions;
      counts.deleted_chars += e.length;
    }
  }
  return counts;
}

void to_json(nlohmann::json& j, const EditEvent& e) {
  j = nlohmann::json{{"seq", e.seq}, {"timestamp", e.timestamp_ms}, {"kind", to_string(e.kind)}};
  if (e.kind == EventKind::Insert) {
    j["position"] = e.position;
    j["content"] = e.text;
  } else if (e.kind == EventKind::Delete) {
    j["position"] = e.position;
    j["content"] = e.length;
  }
}

void from_json(const nlohmann::json& j, EditEvent& e) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedStream, "event must be a JSON object");
  try {
    e = {};
    j.at("seq").get_to(e.seq);
    j.at("timestamp").get_to(e.timestamp_ms);
    e.kind = parse_event_kind(j.at("kind").get<std::string>());
    if (e.kind == EventKind::Insert) {
      j.at("position").get_to(e.position);
      j.at("content").get_to(e.text);
    } else if (e.kind == EventKind::Delete) {
      j.at("position").get_to(e.position);
      j.at("content").get_to(e.length);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::MalformedStream, std::string("bad event: ") + ex.what());
  }
}

std::string to_jsonl(const SegmentSession& session) {
  nlohmann::json header{{"segment_id", session.segment_id},
                        {"translator_id", session.translator_id},
                        {"condition", session.condition},
                        {"initial_text", session.initial_text},
                        {"final_text", session.final_text()}};
  std::string out = header.dump() + "\n";
  for (const auto& e : session.events) out += nlohmann::json(e).dump() + "\n";
  return out;
}

SegmentSession from_jsonl(std::string_view content) {
  std::istringstream in{std::string(content)};
  std::string line;
  SegmentSession session;
  std::optional<std::string> expected_final;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::MalformedStream, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!header_seen) {
      try {
        j.at("segment_id").get_to(session.segment_id);
        j.at("translator_id").get_to(session.translator_id);
        j.at("condition").get_to(session.condition);
        j.at("initial_text").get_to(session.initial_text);
        if (j.contains("final_text")) expected_final = j.at("final_text").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedStream, std::string("bad session header: ") + e.what());
      }
      header_seen = true;
      continue;
    }
    session.events.push_back(j.get<EditEvent>());
  }
  if (!header_seen) throw Error(ErrorCode::MalformedStream, "session log has no header");
  validate_stream(session.events);
  const std::string final_text = session.final_text();
  if (expected_final && *expected_final != final_text) {
    throw Error(ErrorCode::ValidationFailed,
                "replay of segment '" + session.segment_id + "' does not reproduce the recorded final text");
  }
  return session;
}

}  // namespace postedit::session
