#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "postedit/analytics.hpp"
#include "postedit/annotation.hpp"
#include "postedit/corpus.hpp"
#include "postedit/experiment.hpp"
#include "postedit/metrics.hpp"
#include "postedit/session.hpp"

namespace postedit::service {

using experiment::Condition;

enum class ProjectState { Draft, Active };
std::string_view to_string(ProjectState s);

struct ProjectConfig {
  corpus::TokenizerScheme tokenizer = corpus::TokenizerScheme::WhitespacePunctuation;
  std::int64_t idle_threshold_ms = session::kDefaultIdleThresholdMs;
  std::size_t context_window = 2;
  annotation::Taxonomy taxonomy = annotation::Taxonomy::defaults();
  std::int64_t lease_ms = 5 * 60 * 1000;
  double balance_tolerance = corpus::kDefaultBalanceTolerance;

  bool operator==(const ProjectConfig&) const = default;
};

struct Project {
  std::string id;
  ProjectState state = ProjectState::Draft;
  corpus::SourceDocument document;
  std::vector<std::string> models;                         // registration order
  std::map<std::string, std::vector<std::string>> mt;      // model id -> one text per segment
  std::optional<std::vector<std::string>> reference;       // published translation, one per segment
  std::vector<std::string> translators;
  experiment::RotationPlan rotation;
  std::vector<corpus::Chunk> chunks;                       // one per rotation position
  ProjectConfig config;

  std::vector<Condition> conditions() const { return rotation.conditions(); }
  std::size_t chunk_of(std::size_t segment_index) const;
  // Condition under which `translator` works on `segment_index`; nullopt for
  // translators outside the roster.
  std::optional<Condition> condition_for(const std::string& translator, std::size_t segment_index) const;
  // Translator who works on the segment under `condition`, if any.
  std::optional<std::string> translator_for(const Condition& condition, std::size_t segment_index) const;
  // MT text for post-editing, empty for from-scratch work.
  std::string initial_text(const Condition& condition, std::size_t segment_index) const;

  bool operator==(const Project&) const = default;
};

// Project definition as posted by a client or read by the CLI:
// {"id", "document": {...}, "models": [...], "mt": {"<model>": [...]},
//  "reference": [...], "translators": [...], "rotation": {...} | "seed": n,
//  "config": {...}}
// Validates alignment (AlignmentMismatch names the model) and generates or
// validates the rotation. The result is in Draft state.
Project project_from_spec(const nlohmann::json& spec);

// Adds or replaces one model's output. Draft projects only.
void set_model_output(Project& project, const std::string& model, std::vector<std::string> segments);
void set_reference(Project& project, std::vector<std::string> segments);

// Throws InvalidState unless Draft, ValidationFailed listing rotation
// violations or models without MT output.
void check_activatable(const Project& project);

void to_json(nlohmann::json& j, const ProjectConfig& c);
void from_json(const nlohmann::json& j, ProjectConfig& c);
nlohmann::json project_to_json(const Project& p);
Project project_from_json(const nlohmann::json& j);

struct Assignment {
  std::size_t position = 0;
  corpus::Chunk chunk;
  Condition condition;
  std::size_t finalized_segments = 0;
};

struct ContextSegment {
  std::size_t index = 0;
  std::string segment_id;
  std::string source;
  std::string target;  // the translator's current text for that segment
};

struct SegmentBundle {
  std::size_t index = 0;
  std::string segment_id;
  std::string source;
  Condition condition;
  std::string initial_text;
  std::string current_text;
  std::uint64_t last_seq = 0;
  bool finalized = false;
  std::vector<ContextSegment> preceding;
  std::vector<ContextSegment> following;
};

void to_json(nlohmann::json& j, const Assignment& a);
void to_json(nlohmann::json& j, const ContextSegment& c);
void to_json(nlohmann::json& j, const SegmentBundle& b);

// Session logs are keyed by "<translator>/<segment index>".
std::string session_key(const std::string& translator, std::size_t segment_index);

// Everything a report or an archive needs, detached from storage.
struct ProjectData {
  Project project;
  std::map<std::string, session::SegmentSession> sessions;
  std::vector<annotation::AnnotationSpan> annotations;  // insertion order
  std::map<std::string, metrics::ExternalScores> scores;  // condition label -> segment scores
};

struct ProjectReports {
  analytics::EditingTimes times;
  analytics::HterTable hter;
  std::vector<analytics::ConditionReport> conditions;
};

analytics::ReportInputs report_inputs(const ProjectData& data);
ProjectReports compute_reports(const ProjectData& data);
analytics::Table report_table(const ProjectReports& reports, std::string_view name);  // times|hter|quality|creativity

// Deterministic single-document archive: keys sorted, session logs embedded
// as JSON Lines strings, translator tokens left out. Reports are included when
// they can be computed; otherwise "complete" is false.
std::string export_archive(const ProjectData& data);
ProjectData import_archive(std::string_view archive);

}  // namespace postedit::service
