#include "postedit/http_server.hpp"

#include <httplib.h>

#include <sstream>

namespace postedit::service {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::NotAssigned:
      return 403;
    case ErrorCode::DuplicateId:
    case ErrorCode::SeqGap:
    case ErrorCode::LeaseLost:
    case ErrorCode::InvalidState:
      return 409;
    case ErrorCode::OutOfRange:
      return 416;
    case ErrorCode::IoError:
      return 500;
    case ErrorCode::MalformedInput:
    case ErrorCode::MalformedStream:
    case ErrorCode::InvalidArgument:
      return 400;
    default:
      return 422;
  }
}

namespace {

using json = nlohmann::json;

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump() + "\n", "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_json(res, {{"error", to_string(e.code())}, {"message", e.what()}}, http_status(e.code()));
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, std::string("request body is not JSON: ") + e.what());
  }
}

std::size_t parse_index(const std::string& s) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidArgument, "segment index '" + s + "' is not a number");
}

std::string bearer(const httplib::Request& req) {
  const std::string h = req.get_header_value("Authorization");
  const std::string prefix = "Bearer ";
  if (!h.starts_with(prefix)) throw Error(ErrorCode::Unauthorized, "missing bearer token");
  return h.substr(prefix.size());
}

bool is_jsonl(const httplib::Request& req) {
  const std::string type = req.get_header_value("Content-Type");
  return type.find("jsonl") != std::string::npos || type.find("ndjson") != std::string::npos ||
         type.find("json-seq") != std::string::npos;
}

struct Batch {
  std::vector<session::EditEvent> events;
  std::optional<std::string> text;
};

// JSON array of events, {"events": [...], "text": "..."} or JSON Lines.
Batch parse_batch(const httplib::Request& req) {
  Batch b;
  if (is_jsonl(req)) {
    std::istringstream in(req.body);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      try {
        b.events.push_back(json::parse(line).get<session::EditEvent>());
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedStream, std::string("bad JSON line: ") + e.what());
      }
    }
    return b;
  }
  const json body = parse_body(req);
  const json& events = body.is_array() ? body : body.at("events");
  if (!events.is_array()) throw Error(ErrorCode::MalformedStream, "events must be a JSON array");
  for (const auto& e : events) b.events.push_back(e.get<session::EditEvent>());
  if (body.is_object() && body.contains("text") && !body.at("text").is_null()) b.text = body.at("text").get<std::string>();
  return b;
}

json ack_json(const Workspace::Ack& ack) { return {{"last_seq", ack.last_seq}, {"text", ack.text}}; }

}  // namespace

struct HttpServer::Impl {
  Workspace& ws;
  httplib::Server server;

  explicit Impl(Workspace& w) : ws(w) { routes(); }

  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const json::exception& e) {
        send_error(res, Error(ErrorCode::MalformedInput, e.what()));
      } catch (const std::exception& e) {
        send_json(res, {{"error", "Internal"}, {"message", e.what()}}, 500);
      }
    };
  }

  std::string translator(const httplib::Request& req, const std::string& id) { return ws.authenticate(id, bearer(req)); }

  void routes() {
    server.Post("/projects", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto created = ws.create_project(parse_body(req));
      send_json(res, {{"id", created.id}, {"tokens", created.tokens}}, 201);
    }));
    server.Get("/projects", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, ws.project_ids());
    }));
    server.Post("/projects/import", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto created = ws.import_archive(req.body);
      send_json(res, {{"id", created.id}, {"tokens", created.tokens}}, 201);
    }));
    server.Get(R"(/projects/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, project_to_json(ws.project(req.matches[1])));
    }));
    server.Post(R"(/projects/([^/]+)/activate)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      ws.activate(req.matches[1]);
      send_json(res, {{"id", req.matches[1]}, {"state", "Active"}});
    }));
    server.Put(R"(/projects/([^/]+)/mt/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      ws.set_model_output(req.matches[1], req.matches[2],
                          (body.is_array() ? body : body.at("segments")).get<std::vector<std::string>>());
      send_json(res, {{"model", req.matches[2]}});
    }));
    server.Put(R"(/projects/([^/]+)/reference)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      ws.set_reference(req.matches[1], (body.is_array() ? body : body.at("segments")).get<std::vector<std::string>>());
      send_json(res, {{"reference", true}});
    }));

    server.Get(R"(/projects/([^/]+)/assignments)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const std::string who = translator(req, id);
      send_json(res, {{"translator", who}, {"assignments", ws.assignments(id, who)}});
    }));
    server.Get(R"(/projects/([^/]+)/segments/(\d+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 std::optional<std::size_t> context;
                 if (req.has_param("context")) context = parse_index(req.get_param_value("context"));
                 send_json(res, ws.bundle(id, translator(req, id), parse_index(req.matches[2]), context));
               }));
    server.Post(R"(/projects/([^/]+)/segments/(\d+)/lease)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  const auto lease = ws.acquire_lease(id, translator(req, id), parse_index(req.matches[2]));
                  send_json(res, {{"lease", lease.token}, {"expires_at_ms", lease.expires_at_ms}});
                }));
    server.Delete(R"(/projects/([^/]+)/segments/(\d+)/lease)",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                    const std::string id = req.matches[1];
                    ws.release_lease(id, translator(req, id), parse_index(req.matches[2]),
                                     req.get_header_value("X-Lease-Token"));
                    send_json(res, {{"released", true}});
                  }));
    server.Post(R"(/projects/([^/]+)/segments/(\d+)/events)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  const std::string who = translator(req, id);
                  Batch batch = parse_batch(req);
                  const auto ack = ws.append_events(id, who, parse_index(req.matches[2]),
                                                    req.get_header_value("X-Lease-Token"), std::move(batch.events),
                                                    batch.text);
                  send_json(res, ack_json(ack));
                }));
    server.Post(R"(/projects/([^/]+)/segments/(\d+)/finalize)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  const std::string who = translator(req, id);
                  const json body = req.body.empty() ? json::object() : parse_body(req);
                  std::optional<std::string> text;
                  if (body.contains("text") && !body.at("text").is_null()) text = body.at("text").get<std::string>();
                  const auto ack = ws.finalize(id, who, parse_index(req.matches[2]), req.get_header_value("X-Lease-Token"),
                                               body.at("timestamp").get<std::int64_t>(), text);
                  send_json(res, ack_json(ack));
                }));

    server.Get(R"(/projects/([^/]+)/reports)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, compute_reports(ws.snapshot(req.matches[1])).conditions);
    }));
    server.Get(R"(/projects/([^/]+)/reports/([a-z]+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto format =
                     analytics::parse_table_format(req.has_param("format") ? req.get_param_value("format") : "json");
                 const auto table = report_table(compute_reports(ws.snapshot(req.matches[1])), req.matches[2].str());
                 static constexpr const char* kTypes[] = {"application/json", "text/csv", "text/plain"};
                 res.set_content(analytics::render(table, format), kTypes[static_cast<int>(format)]);
               }));

    server.Get(R"(/projects/([^/]+)/annotations)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string annotator = req.has_param("annotator") ? req.get_param_value("annotator") : "";
                 json out = json::array();
                 for (const auto& s : ws.annotations(req.matches[1])) {
                   if (!annotator.empty() && s.span.annotator_id != annotator) continue;
                   json j = s.span;
                   j["id"] = s.id;
                   j["overlap_flagged"] = s.overlap_flagged;
                   out.push_back(std::move(j));
                 }
                 send_json(res, out);
               }));
    server.Post(R"(/projects/([^/]+)/annotations)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  json out = json::array();
                  for (const auto& item : body.is_array() ? body : json::array({body})) {
                    const auto r = ws.add_annotation(req.matches[1], item.get<annotation::AnnotationSpan>());
                    out.push_back({{"id", r.id}, {"overlap_flagged", r.overlap_flagged}});
                  }
                  send_json(res, body.is_array() ? out : out.front(), 201);
                }));
    server.Post(R"(/projects/([^/]+)/scores/([^/]+))",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  ws.ingest_scores(req.matches[1], req.matches[2], req.body);
                  send_json(res, {{"condition", req.matches[2]}}, 201);
                }));
    server.Get(R"(/projects/([^/]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(ws.export_archive(req.matches[1]), "application/json");
    }));
  }
};

HttpServer::HttpServer(Workspace& workspace) : impl_(std::make_unique<Impl>(workspace)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace postedit::service
