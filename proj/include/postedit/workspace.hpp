#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "postedit/annotation.hpp"
#include "postedit/project.hpp"
#include "postedit/session.hpp"

namespace postedit::service {

// Append-only file holding one JSON line per accepted batch:
// {"events": [...]}. A batch is acknowledged only after its line is on disk.
class SessionLog {
 public:
  SessionLog(std::filesystem::path path, bool durable);
  ~SessionLog();
  SessionLog(const SessionLog&) = delete;
  SessionLog& operator=(const SessionLog&) = delete;

  void append(std::span<const session::EditEvent> batch);

  // Reads every complete batch. A trailing line without newline or with
  // broken JSON is a torn write and is cut off; damage elsewhere throws
  // MalformedStream.
  static std::vector<std::vector<session::EditEvent>> recover(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  bool durable_ = true;
};

struct WorkspaceOptions {
  // Milliseconds; drives lease expiry. Defaults to the system clock.
  std::function<std::int64_t()> clock;
  // fsync log appends and metadata writes.
  bool durable = true;
  // Write a final-text snapshot every this many batches (and on finalize).
  std::size_t snapshot_every = 64;
};

// Persistent multi-project store. Every call is safe to make concurrently;
// writes to one segment session are serialised by its lease.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root, WorkspaceOptions options = {});
  ~Workspace();

  struct Created {
    std::string id;
    std::map<std::string, std::string> tokens;  // translator -> bearer token
  };

  Created create_project(const nlohmann::json& spec);
  Created create_project(Project project);
  void set_model_output(const std::string& id, const std::string& model, std::vector<std::string> segments);
  void set_reference(const std::string& id, std::vector<std::string> segments);
  void activate(const std::string& id);

  std::vector<std::string> project_ids() const;
  Project project(const std::string& id) const;
  std::map<std::string, std::string> tokens(const std::string& id) const;
  // Translator owning the token; throws Unauthorized.
  std::string authenticate(const std::string& id, const std::string& bearer) const;

  std::vector<Assignment> assignments(const std::string& id, const std::string& translator) const;
  // `context` overrides the project's context window for this request.
  SegmentBundle bundle(const std::string& id, const std::string& translator, std::size_t index,
                       std::optional<std::size_t> context = std::nullopt) const;

  struct Lease {
    std::string token;
    std::int64_t expires_at_ms = 0;
  };
  // Throws LeaseLost while another unexpired lease is held.
  Lease acquire_lease(const std::string& id, const std::string& translator, std::size_t index);
  void release_lease(const std::string& id, const std::string& translator, std::size_t index,
                     const std::string& lease_token);

  struct Ack {
    std::uint64_t last_seq = 0;
    std::string text;
  };
  // Whole batch or nothing. Events already stored with identical content are
  // skipped so a client may resend after a lost ack. Throws SeqGap,
  // LeaseLost, ValidationFailed (bad edit, phase violation, conflicting
  // resend, or replay differing from expected_text).
  Ack append_events(const std::string& id, const std::string& translator, std::size_t index,
                    const std::string& lease_token, std::vector<session::EditEvent> batch,
                    const std::optional<std::string>& expected_text = std::nullopt);
  // Appends a Finalized event with the next seq.
  Ack finalize(const std::string& id, const std::string& translator, std::size_t index, const std::string& lease_token,
               std::int64_t timestamp_ms, const std::optional<std::string>& expected_text = std::nullopt);

  session::SegmentSession session(const std::string& id, const std::string& translator, std::size_t index) const;

  annotation::AnnotationStore::AddResult add_annotation(const std::string& id, annotation::AnnotationSpan span);
  std::vector<annotation::AnnotationStore::Stored> annotations(const std::string& id) const;

  // Segment scores for one condition label; every source segment must be covered.
  void ingest_scores(const std::string& id, const std::string& condition_label, std::string_view content);

  ProjectData snapshot(const std::string& id) const;
  std::string export_archive(const std::string& id) const;
  // Recreates the project (fresh tokens); DuplicateId if it exists.
  Created import_archive(std::string_view archive);

 private:
  struct SessionEntry;
  struct ProjectEntry;

  std::shared_ptr<ProjectEntry> entry(const std::string& id) const;
  SessionEntry& session_entry(ProjectEntry& p, const std::string& translator, std::size_t index) const;
  void load_project(const std::filesystem::path& dir);
  Created install(Project project, ProjectData* contents);
  void write_project(const ProjectEntry& p) const;
  std::int64_t now() const;

  std::filesystem::path root_;
  WorkspaceOptions options_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<ProjectEntry>> projects_;
};

}  // namespace postedit::service
