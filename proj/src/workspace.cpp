#include "postedit/workspace.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>

#include "postedit/error.hpp"
#include "postedit/unicode.hpp"

namespace fs = std::filesystem;

namespace postedit::service {

using annotation::AnnotationSpan;
using annotation::AnnotationStore;
using session::EditEvent;
using session::SegmentSession;

namespace {

[[noreturn]] void io_fail(const std::string& what, const fs::path& path) {
  throw Error(ErrorCode::IoError, what + " '" + path.string() + "': " + std::strerror(errno));
}

void write_all(int fd, const std::string& data, const fs::path& path) {
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail("write", path);
    }
    done += static_cast<std::size_t>(n);
  }
}

void sync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

// tmp + fsync + rename, so readers see the old or the new file and nothing else.
void write_atomic(const fs::path& path, const std::string& content, bool durable) {
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_fail("open", tmp);
  write_all(fd, content, tmp);
  if (durable && ::fsync(fd) != 0) io_fail("fsync", tmp);
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) io_fail("rename", tmp);
  if (durable) sync_dir(path.parent_path());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail("open", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string random_token() {
  static std::mutex mutex;
  static std::random_device device;
  std::lock_guard<std::mutex> lock(mutex);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (int i = 0; i < 4; ++i) {
    std::uint32_t v = device();
    for (int k = 0; k < 8; ++k, v >>= 4) out += hex[v & 0xf];
  }
  return out;
}

// Message of `e` without its "Code: " prefix, for re-raising under another code.
std::string bare_message(const Error& e) {
  std::string msg = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  if (msg.starts_with(prefix)) msg = msg.substr(prefix.size());
  return msg;
}

// Cuts a trailing partial line left by an interrupted append.
void trim_torn_tail(const fs::path& path) {
  if (!fs::exists(path)) return;
  const std::string content = read_file(path);
  const std::size_t nl = content.rfind('\n');
  const std::size_t keep = nl == std::string::npos ? 0 : nl + 1;
  if (keep < content.size()) fs::resize_file(path, keep);
}

}  // namespace

// ---------------------------------------------------------------------------

SessionLog::SessionLog(fs::path path, bool durable) : path_(std::move(path)), durable_(durable) {
  fs::create_directories(path_.parent_path());
  const bool existed = fs::exists(path_);
  fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) io_fail("open", path_);
  if (!existed && durable_) sync_dir(path_.parent_path());
}

SessionLog::~SessionLog() {
  if (fd_ >= 0) ::close(fd_);
}

void SessionLog::append(std::span<const EditEvent> batch) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : batch) events.push_back(e);
  // One write call per batch; the recovery rule drops a torn tail, so a batch
  // is either wholly present or absent.
  write_all(fd_, nlohmann::json{{"events", std::move(events)}}.dump() + "\n", path_);
  if (durable_ && ::fdatasync(fd_) != 0) io_fail("fdatasync", path_);
}

std::vector<std::vector<EditEvent>> SessionLog::recover(const fs::path& path) {
  std::vector<std::vector<EditEvent>> batches;
  if (!fs::exists(path)) return batches;
  const std::string content = read_file(path);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::size_t good_end = 0;
  while (pos < content.size()) {
    const std::size_t nl = content.find('\n', pos);
    ++line_no;
    const bool last = nl == std::string::npos || nl + 1 == content.size();
    if (nl == std::string::npos) break;  // torn: no terminating newline
    const std::string_view line(content.data() + pos, nl - pos);
    try {
      const auto j = nlohmann::json::parse(line);
      batches.push_back(j.at("events").get<std::vector<EditEvent>>());
    } catch (const std::exception& e) {
      if (last) break;
      throw Error(ErrorCode::MalformedStream,
                  path.string() + " line " + std::to_string(line_no) + " is damaged: " + e.what());
    }
    pos = nl + 1;
    good_end = pos;
  }
  if (good_end < content.size()) fs::resize_file(path, good_end);
  return batches;
}

// ---------------------------------------------------------------------------

struct Workspace::SessionEntry {
  std::mutex mutex;
  SegmentSession session;
  session::BufferState buffer;
  std::unique_ptr<SessionLog> log;
  std::optional<Lease> lease;
  std::size_t batches_since_snapshot = 0;
};

struct Workspace::ProjectEntry {
  fs::path dir;
  std::mutex mutex;  // project, tokens, scores and the session map itself
  Project project;
  std::map<std::string, std::string> tokens;
  std::map<std::string, std::unique_ptr<SessionEntry>> sessions;
  std::unique_ptr<AnnotationStore> annotations;
  std::mutex annotation_file_mutex;
  std::map<std::string, metrics::ExternalScores> scores;
};

namespace {

fs::path log_path(const fs::path& dir, const std::string& translator, std::size_t index) {
  return dir / "sessions" / translator / (std::to_string(index) + ".log");
}

fs::path snap_path(const fs::path& dir, const std::string& translator, std::size_t index) {
  return dir / "sessions" / translator / (std::to_string(index) + ".snap");
}

nlohmann::json scores_json(const std::map<std::string, metrics::ExternalScores>& scores) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [label, s] : scores) j[label] = s.by_segment;
  return j;
}

std::unique_ptr<AnnotationStore> make_annotation_store(const Project& p) {
  std::map<std::string, std::size_t> lengths;
  for (const auto& s : p.document.segments) lengths[s.id] = unicode::length(s.text);
  return std::make_unique<AnnotationStore>(std::move(lengths), p.config.taxonomy);
}

}  // namespace

Workspace::Workspace(fs::path root, WorkspaceOptions options) : root_(std::move(root)), options_(std::move(options)) {
  fs::create_directories(root_);
  for (const auto& dir : fs::directory_iterator(root_)) {
    if (dir.is_directory() && fs::exists(dir.path() / "project.json")) load_project(dir.path());
  }
}

Workspace::~Workspace() = default;

std::int64_t Workspace::now() const {
  if (options_.clock) return options_.clock();
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void Workspace::load_project(const fs::path& dir) {
  auto p = std::make_shared<ProjectEntry>();
  p->dir = dir;
  p->project = project_from_json(nlohmann::json::parse(read_file(dir / "project.json")));
  if (fs::exists(dir / "tokens.json")) p->tokens = nlohmann::json::parse(read_file(dir / "tokens.json"));
  if (fs::exists(dir / "scores.json")) {
    const auto stored = nlohmann::json::parse(read_file(dir / "scores.json"));
    for (const auto& [label, by_segment] : stored.items()) {
      p->scores[label].by_segment = by_segment.get<std::map<std::string, double>>();
    }
  }

  const Project& project = p->project;
  for (const auto& translator : project.translators) {
    for (std::size_t index = 0; index < project.document.segments.size(); ++index) {
      const fs::path path = log_path(dir, translator, index);
      if (!fs::exists(path)) continue;
      auto entry = std::make_unique<SessionEntry>();
      const Condition condition = *project.condition_for(translator, index);
      entry->session = {project.document.segments[index].id, translator, condition,
                        project.initial_text(condition, index), {}};
      entry->buffer = session::BufferState::from_utf8(entry->session.initial_text);

      std::optional<nlohmann::json> snap;
      if (fs::exists(snap_path(dir, translator, index))) {
        snap = nlohmann::json::parse(read_file(snap_path(dir, translator, index)));
      }
      for (auto& batch : SessionLog::recover(path)) {
        for (auto& e : batch) {
          try {
            session::apply_event_in_place(entry->buffer, e);
          } catch (const Error& err) {
            throw Error(ErrorCode::ValidationFailed, path.string() + ": " + err.what());
          }
          entry->session.events.push_back(std::move(e));
          if (snap && snap->at("last_seq").get<std::uint64_t>() == entry->session.last_seq() &&
              snap->at("text").get<std::string>() != entry->buffer.utf8()) {
            throw Error(ErrorCode::ValidationFailed, path.string() + ": replay disagrees with snapshot at seq " +
                                                         std::to_string(entry->session.last_seq()));
          }
        }
      }
      if (snap && snap->at("last_seq").get<std::uint64_t>() > entry->session.last_seq()) {
        throw Error(ErrorCode::ValidationFailed, path.string() + ": log ends before its snapshot");
      }
      session::validate_stream(entry->session.events);
      p->sessions.emplace(session_key(translator, index), std::move(entry));
    }
  }

  p->annotations = make_annotation_store(project);
  if (fs::exists(dir / "annotations.jsonl")) {
    std::istringstream in(read_file(dir / "annotations.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        p->annotations->restore(nlohmann::json::parse(line).get<AnnotationSpan>());
      } catch (const std::exception&) {
        if (in.peek() == EOF) break;  // torn tail
        throw;
      }
    }
  }

  std::unique_lock lock(mutex_);
  projects_[project.id] = std::move(p);
}

std::shared_ptr<Workspace::ProjectEntry> Workspace::entry(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = projects_.find(id);
  if (it == projects_.end()) throw Error(ErrorCode::NotFound, "no project '" + id + "'");
  return it->second;
}

void Workspace::write_project(const ProjectEntry& p) const {
  write_atomic(p.dir / "project.json", project_to_json(p.project).dump(1) + "\n", options_.durable);
}

Workspace::Created Workspace::install(Project project, ProjectData* contents) {
  std::unique_lock lock(mutex_);
  if (projects_.contains(project.id)) throw Error(ErrorCode::DuplicateId, "project '" + project.id + "' exists");
  const fs::path dir = root_ / project.id;
  if (fs::exists(dir)) throw Error(ErrorCode::DuplicateId, "directory for project '" + project.id + "' exists");

  const fs::path staging = root_ / ("." + project.id + ".staging");
  fs::remove_all(staging);
  fs::create_directories(staging);
  Created created{project.id, {}};
  for (const auto& t : project.translators) created.tokens[t] = random_token();
  write_atomic(staging / "project.json", project_to_json(project).dump(1) + "\n", options_.durable);
  write_atomic(staging / "tokens.json", nlohmann::json(created.tokens).dump() + "\n", options_.durable);

  if (contents) {
    for (const auto& [key, s] : contents->sessions) {
      const auto slash = key.rfind('/');
      std::size_t index = 0;
      try {
        index = std::stoul(key.substr(slash + 1));
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedInput, "bad session key '" + key + "'");
      }
      if (index >= project.document.segments.size() || s.segment_id != project.document.segments[index].id) {
        throw Error(ErrorCode::MalformedInput, "session '" + key + "' does not match the document");
      }
      const auto condition = project.condition_for(s.translator_id, index);
      if (!condition || *condition != s.condition || s.initial_text != project.initial_text(*condition, index)) {
        throw Error(ErrorCode::MalformedInput, "session '" + key + "' does not match the rotation or MT");
      }
      if (s.events.empty()) continue;
      SessionLog log(log_path(staging, s.translator_id, index), options_.durable);
      log.append(s.events);
    }
    std::string lines;
    for (const auto& span : contents->annotations) lines += nlohmann::json(span).dump() + "\n";
    if (!lines.empty()) write_atomic(staging / "annotations.jsonl", lines, options_.durable);
    if (!contents->scores.empty()) {
      write_atomic(staging / "scores.json", scores_json(contents->scores).dump() + "\n", options_.durable);
    }
  }
  fs::rename(staging, dir);
  if (options_.durable) sync_dir(root_);
  lock.unlock();
  load_project(dir);
  return created;
}

Workspace::Created Workspace::create_project(const nlohmann::json& spec) { return create_project(project_from_spec(spec)); }

Workspace::Created Workspace::create_project(Project project) {
  project.state = ProjectState::Draft;
  return install(std::move(project), nullptr);
}

void Workspace::set_model_output(const std::string& id, const std::string& model, std::vector<std::string> segments) {
  auto p = entry(id);
  std::lock_guard lock(p->mutex);
  Project copy = p->project;
  service::set_model_output(copy, model, std::move(segments));
  p->project = std::move(copy);
  write_project(*p);
}

void Workspace::set_reference(const std::string& id, std::vector<std::string> segments) {
  auto p = entry(id);
  std::lock_guard lock(p->mutex);
  Project copy = p->project;
  service::set_reference(copy, std::move(segments));
  p->project = std::move(copy);
  write_project(*p);
}

void Workspace::activate(const std::string& id) {
  auto p = entry(id);
  std::lock_guard lock(p->mutex);
  check_activatable(p->project);
  p->project.state = ProjectState::Active;
  try {
    write_project(*p);
  } catch (...) {
    p->project.state = ProjectState::Draft;
    throw;
  }
}

std::vector<std::string> Workspace::project_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, p] : projects_) out.push_back(id);
  return out;
}

Project Workspace::project(const std::string& id) const {
  auto p = entry(id);
  std::lock_guard lock(p->mutex);
  return p->project;
}

std::map<std::string, std::string> Workspace::tokens(const std::string& id) const {
  auto p = entry(id);
  std::lock_guard lock(p->mutex);
  return p->tokens;
}

std::string Workspace::authenticate(const std::string& id, const std::string& bearer) const {
  auto p = entry(id);
  std::lock_guard lock(p->mutex);
  for (const auto& [translator, token] : p->tokens) {
    if (!bearer.empty() && token == bearer) return translator;
  }
  throw Error(ErrorCode::Unauthorized, "unknown bearer token for project '" + id + "'");
}

Workspace::SessionEntry& Workspace::session_entry(ProjectEntry& p, const std::string& translator,
                                                  std::size_t index) const {
  // Caller holds p.mutex.
  const Project& project = p.project;
  if (index >= project.document.segments.size()) {
    throw Error(ErrorCode::OutOfRange, "segment index " + std::to_string(index) + " outside the document (" +
                                           std::to_string(project.document.segments.size()) + " segments)");
  }
  const auto condition = project.condition_for(translator, index);
  if (!condition) throw Error(ErrorCode::NotAssigned, "translator '" + translator + "' has no assignment here");
  auto& slot = p.sessions[session_key(translator, index)];
  if (!slot) {
    slot = std::make_unique<SessionEntry>();
    slot->session = {project.document.segments[index].id, translator, *condition,
                     project.initial_text(*condition, index), {}};
    slot->buffer = session::BufferState::from_utf8(slot->session.initial_text);
  }
  return *slot;
}

std::vector<Assignment> Workspace::assignments(const std::string& id, const std::string& translator) const {
  auto p = entry(id);
  std::lock_guard lock(p->mutex);
  const Project& project = p->project;
  const auto row = project.rotation.translator_index(translator);
  if (!row) throw Error(ErrorCode::NotAssigned, "translator '" + translator + "' is not on the roster");
  std::vector<Assignment> out;
  for (std::size_t j = 0; j < project.chunks.size(); ++j) {
    Assignment a{j, project.chunks[j], project.rotation.at(*row, j), 0};
    for (std::size_t i = a.chunk.begin; i < a.chunk.end; ++i) {
      auto it = p->sessions.find(session_key(translator, i));
      if (it == p->sessions.end()) continue;
      std::lock_guard session_lock(it->second->mutex);
      if (it->second->session.finalized()) ++a.finalized_segments;
    }
    out.push_back(std::move(a));
  }
  return out;
}

SegmentBundle Workspace::bundle(const std::string& id, const std::string& translator, std::size_t index,
                                std::optional<std::size_t> context_window) const {
  auto p = entry(id);
  std::lock_guard lock(p->mutex);
  const Project& project = p->project;
  SessionEntry& s = session_entry(*p, translator, index);

  SegmentBundle b;
  b.index = index;
  b.segment_id = project.document.segments[index].id;
  b.source = project.document.segments[index].text;
  {
    std::lock_guard session_lock(s.mutex);
    b.condition = s.session.condition;
    b.initial_text = s.session.initial_text;
    b.current_text = s.buffer.utf8();
    b.last_seq = s.session.last_seq();
    b.finalized = s.session.finalized();
  }
  auto context = [&](std::size_t i) {
    ContextSegment c{i, project.document.segments[i].id, project.document.segments[i].text, {}};
    auto it = p->sessions.find(session_key(translator, i));
    if (it != p->sessions.end()) {
      std::lock_guard session_lock(it->second->mutex);
      c.target = it->second->buffer.utf8();
    } else {
      c.target = project.initial_text(*project.condition_for(translator, i), i);
    }
    return c;
  };
  const std::size_t k = context_window.value_or(project.config.context_window);
  for (std::size_t i = index >= k ? index - k : 0; i < index; ++i) b.preceding.push_back(context(i));
  for (std::size_t i = index + 1; i <= index + k && i < project.document.segments.size(); ++i) {
    b.following.push_back(context(i));
  }
  return b;
}

Workspace::Lease Workspace::acquire_lease(const std::string& id, const std::string& translator, std::size_t index) {
  auto p = entry(id);
  std::unique_lock lock(p->mutex);
  if (p->project.state != ProjectState::Active) throw Error(ErrorCode::InvalidState, "project is not active");
  SessionEntry& s = session_entry(*p, translator, index);
  const std::int64_t lease_ms = p->project.config.lease_ms;
  lock.unlock();

  std::lock_guard session_lock(s.mutex);
  const std::int64_t t = now();
  if (s.lease && s.lease->expires_at_ms > t) {
    throw Error(ErrorCode::LeaseLost, "segment " + std::to_string(index) + " is leased by another writer for " +
                                          std::to_string(s.lease->expires_at_ms - t) + " ms");
  }
  s.lease = Lease{random_token(), t + lease_ms};
  return *s.lease;
}

void Workspace::release_lease(const std::string& id, const std::string& translator, std::size_t index,
                              const std::string& lease_token) {
  auto p = entry(id);
  std::unique_lock lock(p->mutex);
  SessionEntry& s = session_entry(*p, translator, index);
  lock.unlock();
  std::lock_guard session_lock(s.mutex);
  if (s.lease && s.lease->token == lease_token) s.lease.reset();
}

Workspace::Ack Workspace::append_events(const std::string& id, const std::string& translator, std::size_t index,
                                        const std::string& lease_token, std::vector<EditEvent> batch,
                                        const std::optional<std::string>& expected_text) {
  auto p = entry(id);
  std::unique_lock lock(p->mutex);
  if (p->project.state != ProjectState::Active) throw Error(ErrorCode::InvalidState, "project is not active");
  SessionEntry& s = session_entry(*p, translator, index);
  const fs::path dir = p->dir;
  const std::int64_t lease_ms = p->project.config.lease_ms;
  lock.unlock();

  std::lock_guard session_lock(s.mutex);
  const std::int64_t t = now();
  if (!s.lease || s.lease->token != lease_token || s.lease->expires_at_ms <= t) {
    throw Error(ErrorCode::LeaseLost, "no valid lease on segment " + std::to_string(index));
  }

  // Drop a resent prefix that is already stored.
  const std::uint64_t stored = s.session.last_seq();
  std::size_t skip = 0;
  while (skip < batch.size() && batch[skip].seq <= stored) {
    const std::uint64_t seq = batch[skip].seq;
    const auto& events = s.session.events;
    auto it = std::lower_bound(events.begin(), events.end(), seq,
                               [](const EditEvent& e, std::uint64_t v) { return e.seq < v; });
    if (it == events.end() || *it != batch[skip]) {
      throw Error(ErrorCode::ValidationFailed, "seq " + std::to_string(seq) + " resent with different content");
    }
    ++skip;
  }
  batch.erase(batch.begin(), batch.begin() + static_cast<std::ptrdiff_t>(skip));

  std::uint64_t expected_seq = stored + 1;
  for (const auto& e : batch) {
    if (e.seq != expected_seq) {
      throw Error(ErrorCode::SeqGap, "expected seq " + std::to_string(expected_seq) + ", got " + std::to_string(e.seq));
    }
    ++expected_seq;
  }

  session::BufferState next = s.buffer;
  try {
    for (const auto& e : batch) session::apply_event_in_place(next, e);
    if (!batch.empty()) {
      std::vector<EditEvent> all = s.session.events;
      all.insert(all.end(), batch.begin(), batch.end());
      session::validate_stream(all);
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationFailed, bare_message(e));
  }
  std::string text = next.utf8();
  if (expected_text && *expected_text != text) {
    throw Error(ErrorCode::ValidationFailed, "replay after seq " + std::to_string(expected_seq - 1) +
                                                 " differs from the client buffer");
  }

  if (!batch.empty()) {
    if (!s.log) s.log = std::make_unique<SessionLog>(log_path(dir, translator, index), options_.durable);
    s.log->append(batch);
    s.buffer = std::move(next);
    for (auto& e : batch) s.session.events.push_back(std::move(e));
    ++s.batches_since_snapshot;
    if (s.session.finalized() || s.batches_since_snapshot >= options_.snapshot_every) {
      write_atomic(snap_path(dir, translator, index),
                   nlohmann::json{{"last_seq", s.session.last_seq()}, {"text", text}}.dump() + "\n", options_.durable);
      s.batches_since_snapshot = 0;
    }
  }
  s.lease->expires_at_ms = t + lease_ms;
  return {s.session.last_seq(), std::move(text)};
}

Workspace::Ack Workspace::finalize(const std::string& id, const std::string& translator, std::size_t index,
                                   const std::string& lease_token, std::int64_t timestamp_ms,
                                   const std::optional<std::string>& expected_text) {
  const std::uint64_t next = session(id, translator, index).last_seq() + 1;
  return append_events(id, translator, index, lease_token,
                       {EditEvent::marker(next, timestamp_ms, session::EventKind::Finalized)}, expected_text);
}

SegmentSession Workspace::session(const std::string& id, const std::string& translator, std::size_t index) const {
  auto p = entry(id);
  std::unique_lock lock(p->mutex);
  SessionEntry& s = session_entry(*p, translator, index);
  lock.unlock();
  std::lock_guard session_lock(s.mutex);
  return s.session;
}

AnnotationStore::AddResult Workspace::add_annotation(const std::string& id, AnnotationSpan span) {
  auto p = entry(id);
  {
    std::lock_guard lock(p->mutex);
    const Project& project = p->project;
    const auto [variant, segment_id] = annotation::split_segment_id(span.segment_id);
    if (!variant.empty()) {
      std::size_t index = project.document.segments.size();
      for (const auto& seg : project.document.segments) {
        if (seg.id == segment_id) index = seg.index;
      }
      if (index >= project.document.segments.size()) {
        throw Error(ErrorCode::OutOfBounds, "unknown segment '" + span.segment_id + "'");
      }
      const Condition condition = experiment::parse_condition_label(variant, project.models);
      const auto translator = project.translator_for(condition, index);
      if (!translator) throw Error(ErrorCode::OutOfBounds, "nobody works on '" + span.segment_id + "'");
      auto it = p->sessions.find(session_key(*translator, index));
      std::size_t length = 0;
      if (it != p->sessions.end()) {
        std::lock_guard session_lock(it->second->mutex);
        length = it->second->buffer.text.size();
      } else {
        length = unicode::length(project.initial_text(condition, index));
      }
      p->annotations->set_segment_length(span.segment_id, length);
    }
  }
  std::lock_guard file_lock(p->annotation_file_mutex);
  const std::string line = nlohmann::json(span).dump() + "\n";
  auto result = p->annotations->add(std::move(span));
  const fs::path path = p->dir / "annotations.jsonl";
  trim_torn_tail(path);
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) io_fail("open", path);
  write_all(fd, line, path);
  if (options_.durable) ::fdatasync(fd);
  ::close(fd);
  return result;
}

std::vector<AnnotationStore::Stored> Workspace::annotations(const std::string& id) const {
  return entry(id)->annotations->all();
}

void Workspace::ingest_scores(const std::string& id, const std::string& condition_label, std::string_view content) {
  auto p = entry(id);
  std::lock_guard lock(p->mutex);
  experiment::parse_condition_label(condition_label, p->project.models);
  std::vector<std::string> expected;
  for (const auto& s : p->project.document.segments) expected.push_back(s.id);
  auto scores = p->scores;
  scores[condition_label] = metrics::parse_external_scores(content, expected);
  write_atomic(p->dir / "scores.json", scores_json(scores).dump() + "\n", options_.durable);
  p->scores = std::move(scores);
}

ProjectData Workspace::snapshot(const std::string& id) const {
  auto p = entry(id);
  ProjectData data;
  {
    std::lock_guard lock(p->mutex);
    data.project = p->project;
    data.scores = p->scores;
    for (const auto& [key, s] : p->sessions) {
      std::lock_guard session_lock(s->mutex);
      if (!s->session.events.empty()) data.sessions.emplace(key, s->session);
    }
  }
  for (const auto& stored : p->annotations->all()) data.annotations.push_back(stored.span);
  return data;
}

std::string Workspace::export_archive(const std::string& id) const { return service::export_archive(snapshot(id)); }

Workspace::Created Workspace::import_archive(std::string_view archive) {
  ProjectData data = service::import_archive(archive);
  Project project = data.project;
  return install(std::move(project), &data);
}

}  // namespace postedit::service
