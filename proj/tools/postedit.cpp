// Command-line front end for the post-editing study store.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "postedit/analytics.hpp"
#include "postedit/corpus.hpp"
#include "postedit/error.hpp"
#include "postedit/experiment.hpp"
#include "postedit/http_server.hpp"
#include "postedit/project.hpp"
#include "postedit/session.hpp"
#include "postedit/workspace.hpp"

namespace {

using namespace postedit;
using nlohmann::json;

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& content, const std::string& output) {
  if (output.empty() || output == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(output, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + output + "'");
  out << content;
}

json parse_json(const std::string& content, const std::string& what) {
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, what + " is not JSON: " + e.what());
  }
}

// A JSON array of strings, or one segment per line.
std::vector<std::string> read_segments(const std::string& path) {
  const std::string content = slurp(path);
  const auto first = content.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && content[first] == '[') {
    return parse_json(content, path).get<std::vector<std::string>>();
  }
  std::vector<std::string> out;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"postedit: post-editing study store, metrics and reports"};
  app.require_subcommand(1);

  std::string store = "postedit-store";
  std::string project_id;
  std::string input;
  std::string output;
  std::string format = "text";

  auto add_store = [&](CLI::App* cmd) {
    cmd->add_option("--store", store, "Store directory")->capture_default_str();
  };
  auto add_project = [&](CLI::App* cmd) {
    add_store(cmd);
    cmd->add_option("-p,--project", project_id, "Project id")->required();
  };

  // project -----------------------------------------------------------------
  auto* project = app.add_subcommand("project", "Create, activate or import projects");
  project->require_subcommand(1);
  auto* project_create = project->add_subcommand("create", "Create a Draft project from a JSON definition");
  add_store(project_create);
  project_create->add_option("--spec", input, "Project definition (JSON)")->required();
  auto* project_activate = project->add_subcommand("activate", "Validate and activate a project");
  add_project(project_activate);
  auto* project_import = project->add_subcommand("import", "Load an exported archive into the store");
  add_store(project_import);
  project_import->add_option("--archive", input, "Archive file")->required();
  auto* project_tokens = project->add_subcommand("tokens", "Print translator bearer tokens");
  add_project(project_tokens);

  // ingest ------------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Ingest documents, MT output, references and scores");
  ingest->require_subcommand(1);
  auto* ingest_doc = ingest->add_subcommand("doc", "Segment a source text into a document JSON");
  std::string doc_id = "doc";
  std::string title;
  std::string language;
  std::string tokenizer = "whitespace+punctuation";
  std::vector<std::string> abbreviations;
  ingest_doc->add_option("-i,--input", input, "Plain text, or JSON with text/segments")->required();
  ingest_doc->add_option("-o,--output", output, "Output file (default stdout)");
  ingest_doc->add_option("--id", doc_id, "Document id")->capture_default_str();
  ingest_doc->add_option("--title", title, "Title");
  ingest_doc->add_option("--language", language, "Language code");
  ingest_doc->add_option("--tokenizer", tokenizer, "whitespace | whitespace+punctuation")->capture_default_str();
  ingest_doc->add_option("--abbrev", abbreviations, "Tokens that never end a sentence, e.g. Mr.");

  std::string model;
  auto* ingest_mt = ingest->add_subcommand("mt", "Attach one model's output (one segment per line or JSON array)");
  add_project(ingest_mt);
  ingest_mt->add_option("-m,--model", model, "Model id")->required();
  ingest_mt->add_option("-i,--input", input, "Segments file")->required();
  auto* ingest_ref = ingest->add_subcommand("reference", "Attach the reference translation");
  add_project(ingest_ref);
  ingest_ref->add_option("-i,--input", input, "Segments file")->required();
  std::string condition;
  auto* ingest_scores = ingest->add_subcommand("scores", "Attach external segment scores (CSV or JSON) for a condition");
  add_project(ingest_scores);
  ingest_scores->add_option("-c,--condition", condition, "Condition label (model id or Translation)")->required();
  ingest_scores->add_option("-i,--input", input, "Score file")->required();

  // rotation ----------------------------------------------------------------
  auto* rotation = app.add_subcommand("rotation", "Latin-square assignment plans");
  rotation->require_subcommand(1);
  std::string translators;
  std::string models;
  std::uint64_t seed = 0;
  auto* rotation_generate = rotation->add_subcommand("generate", "Generate a plan");
  rotation_generate->add_option("--translators", translators, "Comma-separated translator ids")->required();
  rotation_generate->add_option("--models", models, "Comma-separated model ids")->required();
  rotation_generate->add_option("--seed", seed, "Seed")->capture_default_str();
  rotation_generate->add_option("-o,--output", output, "Output file (default stdout)");
  auto* rotation_validate = rotation->add_subcommand("validate", "Check a plan; exit 1 on violations");
  rotation_validate->add_option("input", input, "Plan JSON")->required();

  // report ------------------------------------------------------------------
  auto* report = app.add_subcommand("report", "Result tables");
  report->require_subcommand(1);
  std::string archive;
  std::vector<CLI::App*> report_cmds;
  for (const char* name : {"times", "hter", "quality", "creativity"}) {
    auto* cmd = report->add_subcommand(name, std::string(name) + " table");
    add_store(cmd);
    cmd->add_option("-p,--project", project_id, "Project id in the store");
    cmd->add_option("--archive", archive, "Report from an exported archive instead of a store");
    cmd->add_option("-f,--format", format, "text | csv | json")->capture_default_str();
    cmd->add_option("-o,--output", output, "Output file (default stdout)");
    report_cmds.push_back(cmd);
  }

  // export ------------------------------------------------------------------
  auto* export_cmd = app.add_subcommand("export", "Write the deterministic project archive");
  add_project(export_cmd);
  export_cmd->add_option("-o,--output", output, "Output file (default stdout)");

  // session -----------------------------------------------------------------
  auto* session_cmd = app.add_subcommand("session", "Session logs (JSON Lines)");
  session_cmd->require_subcommand(1);
  std::string translator;
  std::size_t index = 0;
  auto* session_import = session_cmd->add_subcommand("import", "Append a JSON Lines session log to the store");
  add_project(session_import);
  session_import->add_option("-t,--translator", translator, "Translator id")->required();
  session_import->add_option("--index", index, "Segment index")->required();
  session_import->add_option("-i,--input", input, "Session log")->required();
  auto* session_verify = session_cmd->add_subcommand("verify", "Replay logs and check their final texts");
  session_verify->add_option("-i,--input", input, "Session log (.jsonl) or archive (.json)")->required();

  // serve -------------------------------------------------------------------
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string host = "127.0.0.1";
  int port = 8080;
  add_store(serve);
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port (0 = any)")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (project_create->parsed()) {
      service::Workspace ws(store);
      const auto created = ws.create_project(parse_json(slurp(input), input));
      std::cout << json{{"id", created.id}, {"tokens", created.tokens}}.dump(2) << "\n";
    } else if (project_activate->parsed()) {
      service::Workspace ws(store);
      ws.activate(project_id);
      std::cout << "activated " << project_id << "\n";
    } else if (project_import->parsed()) {
      service::Workspace ws(store);
      const auto created = ws.import_archive(slurp(input));
      std::cout << json{{"id", created.id}, {"tokens", created.tokens}}.dump(2) << "\n";
    } else if (project_tokens->parsed()) {
      service::Workspace ws(store);
      std::cout << json(ws.tokens(project_id)).dump(2) << "\n";
    } else if (ingest_doc->parsed()) {
      corpus::SegmentationRules rules;
      rules.tokenizer = corpus::parse_tokenizer_scheme(tokenizer);
      rules.abbreviations = abbreviations;
      const std::string content = slurp(input);
      const auto first = content.find_first_not_of(" \t\r\n");
      corpus::SourceDocument doc;
      if (first != std::string::npos && content[first] == '{') {
        json j = parse_json(content, input);
        if (!j.contains("id")) j["id"] = doc_id;
        doc = corpus::ingest_json(j, rules);
      } else {
        doc = corpus::segment_document(content, rules, doc_id, title, language);
      }
      emit(json(doc).dump(2) + "\n", output);
      std::cerr << doc.segments.size() << " segments, " << doc.word_count() << " words\n";
    } else if (ingest_mt->parsed()) {
      service::Workspace ws(store);
      ws.set_model_output(project_id, model, read_segments(input));
    } else if (ingest_ref->parsed()) {
      service::Workspace ws(store);
      ws.set_reference(project_id, read_segments(input));
    } else if (ingest_scores->parsed()) {
      service::Workspace ws(store);
      ws.ingest_scores(project_id, condition, slurp(input));
    } else if (rotation_generate->parsed()) {
      const auto plan = experiment::generate_rotation(split_list(translators), split_list(models), seed);
      emit(experiment::rotation_to_json(plan).dump(2) + "\n", output);
    } else if (rotation_validate->parsed()) {
      const auto plan = experiment::rotation_from_json(parse_json(slurp(input), input));
      const auto violations = experiment::validate_rotation(plan);
      for (const auto& v : violations) std::cout << v.message << "\n";
      if (!violations.empty()) return 1;
      std::cout << "ok: " << plan.translators.size() << "x" << plan.translators.size() << " Latin square\n";
    } else if (report->parsed()) {
      service::ProjectData data;
      if (!archive.empty()) {
        data = service::import_archive(slurp(archive));
      } else {
        if (project_id.empty()) throw Error(ErrorCode::InvalidArgument, "give --project or --archive");
        data = service::Workspace(store).snapshot(project_id);
      }
      const auto tables = service::compute_reports(data);
      for (auto* cmd : report_cmds) {
        if (!cmd->parsed()) continue;
        emit(analytics::render(service::report_table(tables, cmd->get_name()), analytics::parse_table_format(format)),
             output);
      }
    } else if (export_cmd->parsed()) {
      emit(service::Workspace(store).export_archive(project_id), output);
    } else if (session_import->parsed()) {
      const auto log = session::from_jsonl(slurp(input));
      service::Workspace ws(store);
      const auto lease = ws.acquire_lease(project_id, translator, index);
      const auto ack = ws.append_events(project_id, translator, index, lease.token, log.events, log.final_text());
      ws.release_lease(project_id, translator, index, lease.token);
      std::cout << "stored through seq " << ack.last_seq << "\n";
    } else if (session_verify->parsed()) {
      const std::string content = slurp(input);
      std::vector<session::SegmentSession> sessions;
      const auto first = content.find_first_not_of(" \t\r\n");
      if (first != std::string::npos && content[first] == '{' && content.find("\"format\"") != std::string::npos &&
          content.find("\"sessions\"") != std::string::npos) {
        for (auto& [key, s] : service::import_archive(content).sessions) sessions.push_back(std::move(s));
      } else {
        sessions.push_back(session::from_jsonl(content));
      }
      std::size_t finalized = 0;
      for (const auto& s : sessions) finalized += s.finalized() ? 1 : 0;
      std::cout << sessions.size() << " session(s) replay to their recorded final text; " << finalized
                << " finalized\n";
    } else if (serve->parsed()) {
      service::Workspace ws(store);
      service::HttpServer server(ws);
      const int bound = server.bind(host, port);
      if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << host << ":" << bound << "\n";
      server.listen_after_bind();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "postedit: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "postedit: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
