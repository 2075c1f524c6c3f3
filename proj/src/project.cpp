#include "postedit/project.hpp"

#include <algorithm>
#include <set>

#include "postedit/error.hpp"

namespace postedit::service {

namespace {

constexpr const char* kArchiveFormat = "postedit-archive/1";

}  // namespace

std::string_view to_string(ProjectState s) { return s == ProjectState::Draft ? "Draft" : "Active"; }

std::size_t Project::chunk_of(std::size_t segment_index) const {
  for (std::size_t k = 0; k < chunks.size(); ++k) {
    if (chunks[k].contains(segment_index)) return k;
  }
  throw Error(ErrorCode::OutOfRange, "segment index " + std::to_string(segment_index) + " outside the document (" +
                                         std::to_string(document.segments.size()) + " segments)");
}

std::optional<Condition> Project::condition_for(const std::string& translator, std::size_t segment_index) const {
  const auto row = rotation.translator_index(translator);
  if (!row) return std::nullopt;
  return rotation.at(*row, chunk_of(segment_index));
}

std::optional<std::string> Project::translator_for(const Condition& condition, std::size_t segment_index) const {
  const std::size_t position = chunk_of(segment_index);
  for (std::size_t i = 0; i < rotation.translators.size(); ++i) {
    if (rotation.at(i, position) == condition) return rotation.translators[i];
  }
  return std::nullopt;
}

std::string Project::initial_text(const Condition& condition, std::size_t segment_index) const {
  if (!condition.is_post_edit()) return {};
  auto it = mt.find(condition.model_id);
  if (it == mt.end() || segment_index >= it->second.size()) {
    throw Error(ErrorCode::MissingSegment, "no MT output of '" + condition.model_id + "' for segment " +
                                               std::to_string(segment_index));
  }
  return it->second[segment_index];
}

void set_model_output(Project& project, const std::string& model, std::vector<std::string> segments) {
  if (project.state != ProjectState::Draft) throw Error(ErrorCode::InvalidState, "project is already active");
  if (std::find(project.models.begin(), project.models.end(), model) == project.models.end()) {
    throw Error(ErrorCode::NotFound, "model '" + model + "' is not registered");
  }
  if (segments.size() != project.document.segments.size()) {
    throw Error(ErrorCode::AlignmentMismatch, "model '" + model + "' has " + std::to_string(segments.size()) +
                                                  " segments, source has " +
                                                  std::to_string(project.document.segments.size()));
  }
  project.mt[model] = std::move(segments);
}

void set_reference(Project& project, std::vector<std::string> segments) {
  if (segments.size() != project.document.segments.size()) {
    throw Error(ErrorCode::AlignmentMismatch, "reference has " + std::to_string(segments.size()) +
                                                  " segments, source has " +
                                                  std::to_string(project.document.segments.size()));
  }
  project.reference = std::move(segments);
}

void check_activatable(const Project& project) {
  if (project.state != ProjectState::Draft) throw Error(ErrorCode::InvalidState, "project is already active");
  std::string problems;
  for (const auto& v : experiment::validate_rotation(project.rotation)) {
    problems += (problems.empty() ? "" : "; ") + v.message;
  }
  for (const auto& m : project.models) {
    if (!project.mt.contains(m)) problems += (problems.empty() ? "" : "; ") + ("no MT output for model '" + m + "'");
  }
  if (!problems.empty()) throw Error(ErrorCode::ValidationFailed, problems);
}

void to_json(nlohmann::json& j, const ProjectConfig& c) {
  j = nlohmann::json{{"tokenizer", corpus::to_string(c.tokenizer)},
                     {"idle_threshold_ms", c.idle_threshold_ms},
                     {"context_window", c.context_window},
                     {"taxonomy", c.taxonomy.types},
                     {"lease_ms", c.lease_ms},
                     {"balance_tolerance", c.balance_tolerance}};
}

void from_json(const nlohmann::json& j, ProjectConfig& c) {
  c = {};
  if (j.contains("tokenizer")) c.tokenizer = corpus::parse_tokenizer_scheme(j.at("tokenizer").get<std::string>());
  c.idle_threshold_ms = j.value("idle_threshold_ms", c.idle_threshold_ms);
  c.context_window = j.value("context_window", c.context_window);
  if (j.contains("taxonomy")) c.taxonomy = annotation::taxonomy_from_json(j.at("taxonomy"));
  c.lease_ms = j.value("lease_ms", c.lease_ms);
  c.balance_tolerance = j.value("balance_tolerance", c.balance_tolerance);
  if (c.idle_threshold_ms < 0 || c.lease_ms <= 0) throw Error(ErrorCode::InvalidArgument, "negative time in config");
}

namespace {

corpus::SourceDocument document_from_any(const nlohmann::json& j, corpus::TokenizerScheme tokenizer) {
  const auto& segments = j.contains("segments") ? j.at("segments") : nlohmann::json();
  if (segments.is_array() && !segments.empty() && segments.front().is_object()) return j.get<corpus::SourceDocument>();
  corpus::SegmentationRules rules;
  rules.tokenizer = tokenizer;
  return corpus::ingest_json(j, rules);
}

}  // namespace

Project project_from_spec(const nlohmann::json& spec) {
  try {
    Project p;
    p.id = spec.at("id").get<std::string>();
    if (p.id.empty() || p.id.find_first_of("/\\. ") != std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "project id '" + p.id + "' must be non-empty without '/', '.', spaces");
    }
    if (spec.contains("config")) p.config = spec.at("config").get<ProjectConfig>();
    p.document = document_from_any(spec.at("document"), p.config.tokenizer);
    p.models = spec.at("models").get<std::vector<std::string>>();
    p.translators = spec.at("translators").get<std::vector<std::string>>();
    for (const auto& t : p.translators) {
      if (t.empty() || t.find('/') != std::string::npos) throw Error(ErrorCode::InvalidArgument, "bad translator id '" + t + "'");
    }

    if (spec.contains("rotation")) {
      p.rotation = experiment::rotation_from_json(spec.at("rotation"));
      if (p.rotation.translators != p.translators || p.rotation.models != p.models) {
        throw Error(ErrorCode::ValidationFailed, "rotation roster or models differ from the project's");
      }
      const auto violations = experiment::validate_rotation(p.rotation);
      if (!violations.empty()) throw Error(ErrorCode::ValidationFailed, violations.front().message);
    } else {
      p.rotation = experiment::generate_rotation(p.translators, p.models, spec.value("seed", std::uint64_t{0}));
    }
    p.chunks = corpus::chunk_document(p.document, p.models.size() + 1, p.config.balance_tolerance);

    if (spec.contains("mt")) {
      for (const auto& [model, segments] : spec.at("mt").items()) {
        set_model_output(p, model, segments.get<std::vector<std::string>>());
      }
    }
    if (spec.contains("reference") && !spec.at("reference").is_null()) {
      set_reference(p, spec.at("reference").get<std::vector<std::string>>());
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("bad project definition: ") + e.what());
  }
}

nlohmann::json project_to_json(const Project& p) {
  return {{"id", p.id},
          {"state", to_string(p.state)},
          {"document", p.document},
          {"models", p.models},
          {"mt", p.mt},
          {"reference", p.reference ? nlohmann::json(*p.reference) : nlohmann::json(nullptr)},
          {"translators", p.translators},
          {"rotation", experiment::rotation_to_json(p.rotation)},
          {"chunks", p.chunks},
          {"config", p.config}};
}

Project project_from_json(const nlohmann::json& j) {
  try {
    Project p;
    j.at("id").get_to(p.id);
    const auto state = j.at("state").get<std::string>();
    if (state != "Draft" && state != "Active") throw Error(ErrorCode::MalformedInput, "unknown state '" + state + "'");
    p.state = state == "Draft" ? ProjectState::Draft : ProjectState::Active;
    j.at("document").get_to(p.document);
    j.at("models").get_to(p.models);
    j.at("mt").get_to(p.mt);
    if (!j.at("reference").is_null()) p.reference = j.at("reference").get<std::vector<std::string>>();
    j.at("translators").get_to(p.translators);
    p.rotation = experiment::rotation_from_json(j.at("rotation"));
    j.at("chunks").get_to(p.chunks);
    j.at("config").get_to(p.config);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("bad project record: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const Assignment& a) {
  j = nlohmann::json{{"position", a.position},
                     {"chunk", a.chunk},
                     {"condition", a.condition},
                     {"label", a.condition.label()},
                     {"finalized_segments", a.finalized_segments}};
}

void to_json(nlohmann::json& j, const ContextSegment& c) {
  j = nlohmann::json{{"index", c.index}, {"segment_id", c.segment_id}, {"source", c.source}, {"target", c.target}};
}

void to_json(nlohmann::json& j, const SegmentBundle& b) {
  j = nlohmann::json{{"index", b.index},
                     {"segment_id", b.segment_id},
                     {"source", b.source},
                     {"condition", b.condition},
                     {"initial_text", b.initial_text},
                     {"current_text", b.current_text},
                     {"last_seq", b.last_seq},
                     {"finalized", b.finalized},
                     {"preceding", b.preceding},
                     {"following", b.following}};
}

std::string session_key(const std::string& translator, std::size_t segment_index) {
  return translator + "/" + std::to_string(segment_index);
}

analytics::ReportInputs report_inputs(const ProjectData& data) {
  const Project& p = data.project;
  analytics::ReportInputs in;
  in.translators = p.translators;
  in.conditions = p.conditions();
  for (const auto& [key, s] : data.sessions) in.sessions.push_back(s);
  if (p.reference) {
    for (std::size_t i = 0; i < p.document.segments.size(); ++i) {
      in.references[p.document.segments[i].id] = (*p.reference)[i];
    }
  }
  in.comet = data.scores;
  for (const auto& span : data.annotations) {
    if (span.annotator_id == annotation::kResolvedAnnotator) in.annotations.push_back(span);
  }
  in.tokenizer = p.config.tokenizer;
  in.idle_threshold_ms = p.config.idle_threshold_ms;
  return in;
}

ProjectReports compute_reports(const ProjectData& data) {
  const analytics::ReportInputs in = report_inputs(data);
  ProjectReports out;
  std::vector<analytics::TimeKey> expected;
  for (const auto& c : in.conditions) expected.push_back({"", c.label()});
  out.times = analytics::editing_time_report(in.sessions, analytics::TimeGrouping::Condition, in.idle_threshold_ms,
                                             expected);
  out.hter = analytics::hter_report(in.sessions, in.translators, in.conditions, in.references, {in.tokenizer, {}});
  out.conditions = analytics::build_condition_report(in);
  return out;
}

analytics::Table report_table(const ProjectReports& reports, std::string_view name) {
  if (name == "times") return analytics::times_table(reports.times, reports.hter.conditions);
  if (name == "hter") return analytics::hter_table(reports.hter);
  if (name == "quality") return analytics::quality_table(reports.conditions);
  if (name == "creativity") return analytics::creativity_table(reports.conditions);
  throw Error(ErrorCode::NotFound, "unknown report '" + std::string(name) + "' (times, hter, quality, creativity)");
}

namespace {

nlohmann::json reports_json(const ProjectReports& r) {
  nlohmann::json times = nlohmann::json::object();
  for (const auto& [key, ms] : r.times.active_ms) times[key.condition] = ms;
  nlohmann::json hter = nlohmann::json::object();
  for (const auto& c : r.hter.conditions) {
    nlohmann::json row = nlohmann::json::object();
    for (const auto& t : r.hter.translators) {
      if (auto v = r.hter.cell_percent(c, t)) row[t] = *v;
    }
    if (auto v = r.hter.document_percent(c)) row["Doc"] = *v;
    hter[c.label()] = std::move(row);
  }
  return {{"active_ms", std::move(times)}, {"hter", std::move(hter)}, {"conditions", r.conditions}};
}

}  // namespace

std::string export_archive(const ProjectData& data) {
  nlohmann::json sessions = nlohmann::json::object();
  bool complete = !data.sessions.empty();
  for (const auto& [key, s] : data.sessions) {
    sessions[key] = session::to_jsonl(s);
    complete = complete && s.finalized();
  }
  const std::size_t expected_sessions = data.project.translators.size() * data.project.document.segments.size();
  complete = complete && data.sessions.size() == expected_sessions;

  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [label, s] : data.scores) scores[label] = s.by_segment;

  nlohmann::json reports = nullptr;
  if (!data.sessions.empty()) {
    try {
      reports = reports_json(compute_reports(data));
    } catch (const Error&) {
      complete = false;
    }
  }

  const nlohmann::json archive{{"format", kArchiveFormat},
                               {"complete", complete},
                               {"project", project_to_json(data.project)},
                               {"sessions", std::move(sessions)},
                               {"annotations", data.annotations},
                               {"scores", std::move(scores)},
                               {"reports", std::move(reports)}};
  return archive.dump(1) + "\n";
}

ProjectData import_archive(std::string_view archive) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(archive);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, std::string("archive is not JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", std::string()) != kArchiveFormat) {
    throw Error(ErrorCode::MalformedInput, std::string("not a ") + kArchiveFormat + " document");
  }
  ProjectData data;
  data.project = project_from_json(j.at("project"));
  for (const auto& [key, log] : j.at("sessions").items()) {
    session::SegmentSession s = session::from_jsonl(log.get<std::string>());
    const auto slash = key.rfind('/');
    if (slash == std::string::npos || key.substr(0, slash) != s.translator_id) {
      throw Error(ErrorCode::MalformedInput, "session key '" + key + "' does not match its header");
    }
    data.sessions.emplace(key, std::move(s));
  }
  data.annotations = j.at("annotations").get<std::vector<annotation::AnnotationSpan>>();
  for (const auto& [label, by_segment] : j.at("scores").items()) {
    data.scores[label].by_segment = by_segment.get<std::map<std::string, double>>();
  }
  return data;
}

}  // namespace postedit::service
