#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "postedit/error.hpp"
#include "postedit/http_server.hpp"
#include "small_project.hpp"

using namespace postedit;
using namespace postedit::service;
using json = nlohmann::json;

namespace {

class Http : public ::testing::Test {
 protected:
  postedit::testing::TempDir dir{"http"};
  std::unique_ptr<Workspace> ws;
  std::unique_ptr<HttpServer> server;
  std::thread thread;
  std::unique_ptr<httplib::Client> client;

  void SetUp() override {
    WorkspaceOptions o;
    o.durable = false;
    ws = std::make_unique<Workspace>(dir.path, o);
    server = std::make_unique<HttpServer>(*ws);
    const int port = server->bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    thread = std::thread([this] { server->listen_after_bind(); });
    server->wait_until_ready();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  void TearDown() override {
    server->stop();
    thread.join();
  }

  httplib::Headers auth(const std::string& token, const std::string& lease = {}) {
    httplib::Headers h{{"Authorization", "Bearer " + token}};
    if (!lease.empty()) h.emplace("X-Lease-Token", lease);
    return h;
  }

  // Creates and activates the small project; returns translator tokens.
  json create_active() {
    auto spec = postedit::testing::small_project_spec();
    const json mt = spec["mt"];
    spec.erase("mt");
    auto res = client->Post("/projects", spec.dump(), "application/json");
    EXPECT_EQ(res->status, 201);
    const json created = json::parse(res->body);
    EXPECT_EQ(client->Post("/projects/p1/activate")->status, 422);  // MT missing
    for (const auto& [model, segs] : mt.items()) {
      EXPECT_EQ(client->Put("/projects/p1/mt/" + model, segs.dump(), "application/json")->status, 200);
    }
    EXPECT_EQ(client->Post("/projects/p1/activate")->status, 200);
    return created["tokens"];
  }

  static json events_opening() {
    return json::array({{{"seq", 1}, {"timestamp", 0}, {"kind", "ReadingOpened"}},
                        {{"seq", 2}, {"timestamp", 1000}, {"kind", "EditingStarted"}}});
  }

  // Runs a full from-scratch or post-edit session on one segment.
  void complete_segment(const std::string& token, std::size_t index, const std::string& text) {
    const std::string base = "/projects/p1/segments/" + std::to_string(index);
    auto bundle = json::parse(client->Get(base, auth(token))->body);
    auto lease = json::parse(client->Post(base + "/lease", auth(token), "", "application/json")->body);
    const std::string lt = lease["lease"];
    json events = events_opening();
    std::uint64_t seq = 3;
    const std::string initial = bundle["initial_text"];
    if (!initial.empty()) {
      events.push_back({{"seq", seq++}, {"timestamp", 2000}, {"kind", "Delete"}, {"position", 0},
                        {"content", session::BufferState::from_utf8(initial).text.size()}});
    }
    events.push_back({{"seq", seq++}, {"timestamp", 9000}, {"kind", "Insert"}, {"position", 0}, {"content", text}});
    auto res = client->Post(base + "/events", auth(token, lt), json{{"events", events}, {"text", text}}.dump(),
                            "application/json");
    ASSERT_EQ(res->status, 200) << res->body;
    res = client->Post(base + "/finalize", auth(token, lt), json{{"timestamp", 9500}}.dump(), "application/json");
    ASSERT_EQ(res->status, 200) << res->body;
  }
};

}  // namespace

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status(ErrorCode::NotFound), 404);
  EXPECT_EQ(http_status(ErrorCode::Unauthorized), 401);
  EXPECT_EQ(http_status(ErrorCode::NotAssigned), 403);
  EXPECT_EQ(http_status(ErrorCode::SeqGap), 409);
  EXPECT_EQ(http_status(ErrorCode::LeaseLost), 409);
  EXPECT_EQ(http_status(ErrorCode::OutOfRange), 416);
  EXPECT_EQ(http_status(ErrorCode::MalformedInput), 400);
  EXPECT_EQ(http_status(ErrorCode::ValidationFailed), 422);
}

TEST_F(Http, ProjectLifecycle) {
  EXPECT_EQ(client->Get("/projects")->body, "[]\n");
  const json tokens = create_active();
  EXPECT_EQ(tokens.size(), 3u);
  EXPECT_EQ(json::parse(client->Get("/projects")->body), json::array({"p1"}));
  const auto p = json::parse(client->Get("/projects/p1")->body);
  EXPECT_EQ(p["state"], "Active");
  EXPECT_EQ(p["document"]["segments"].size(), 9u);
  EXPECT_EQ(client->Get("/projects/zzz")->status, 404);
  auto dup = client->Post("/projects", postedit::testing::small_project_spec().dump(), "application/json");
  EXPECT_EQ(dup->status, 409);
  EXPECT_EQ(json::parse(dup->body)["error"], "DuplicateId");
  EXPECT_EQ(client->Post("/projects", "{nope", "application/json")->status, 400);
  // The reference only feeds reports, so it may still arrive after activation.
  EXPECT_EQ(client->Put("/projects/p1/reference", json::array({"x"}).dump(), "application/json")->status, 422);
  EXPECT_EQ(client->Put("/projects/p1/reference", json(std::vector<std::string>(9, "r")).dump(), "application/json")->status,
            200);
}

TEST_F(Http, TranslatorEndpoints) {
  const json tokens = create_active();
  const std::string t1 = tokens["T1"];
  EXPECT_EQ(client->Get("/projects/p1/assignments")->status, 401);
  EXPECT_EQ(client->Get("/projects/p1/assignments", auth("bad"))->status, 401);
  const auto a = json::parse(client->Get("/projects/p1/assignments", auth(t1))->body);
  EXPECT_EQ(a["translator"], "T1");
  ASSERT_EQ(a["assignments"].size(), 3u);
  EXPECT_TRUE(a["assignments"][0].contains("label"));
  EXPECT_TRUE(a["assignments"][0]["chunk"].contains("begin"));

  const auto b = json::parse(client->Get("/projects/p1/segments/4", auth(t1))->body);
  EXPECT_EQ(b["segment_id"], "s4");
  EXPECT_EQ(b["preceding"].size(), 2u);
  EXPECT_EQ(b["last_seq"], 0);
  const auto wide = json::parse(client->Get("/projects/p1/segments/4?context=5", auth(t1))->body);
  EXPECT_EQ(wide["preceding"].size(), 4u);
  EXPECT_EQ(wide["following"].size(), 4u);
  EXPECT_EQ(client->Get("/projects/p1/segments/4?context=x", auth(t1))->status, 400);
  EXPECT_EQ(client->Get("/projects/p1/segments/40", auth(t1))->status, 416);

  const auto lease = json::parse(client->Post("/projects/p1/segments/4/lease", auth(t1), "", "application/json")->body);
  const std::string lt = lease["lease"];
  EXPECT_EQ(client->Post("/projects/p1/segments/4/lease", auth(t1), "", "application/json")->status, 409);

  // JSON array body.
  auto res = client->Post("/projects/p1/segments/4/events", auth(t1, lt), events_opening().dump(), "application/json");
  ASSERT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(json::parse(res->body)["last_seq"], 2);
  // JSON Lines body.
  const std::string initial = b["initial_text"];
  const std::string jsonl = json{{"seq", 3}, {"timestamp", 2000}, {"kind", "Insert"}, {"position", 0}, {"content", "A"}}.dump() +
                            "\n" + json{{"seq", 4}, {"timestamp", 2500}, {"kind", "FocusLost"}}.dump() + "\n";
  res = client->Post("/projects/p1/segments/4/events", auth(t1, lt), jsonl, "application/x-ndjson");
  ASSERT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(json::parse(res->body)["text"], "A" + initial);
  // Gap, missing lease, mismatched text.
  const json gap = json::array({{{"seq", 9}, {"timestamp", 3000}, {"kind", "FocusGained"}}});
  res = client->Post("/projects/p1/segments/4/events", auth(t1, lt), gap.dump(), "application/json");
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(json::parse(res->body)["error"], "SeqGap");
  const json next = json::array({{{"seq", 5}, {"timestamp", 3000}, {"kind", "FocusGained"}}});
  EXPECT_EQ(client->Post("/projects/p1/segments/4/events", auth(t1), next.dump(), "application/json")->status, 409);
  res = client->Post("/projects/p1/segments/4/events", auth(t1, lt), json{{"events", next}, {"text", "zz"}}.dump(),
                     "application/json");
  EXPECT_EQ(res->status, 422);
  EXPECT_EQ(client->Post("/projects/p1/segments/4/events", auth(t1, lt), "[{\"seq\":5}]", "application/json")->status,
            400);

  res = client->Post("/projects/p1/segments/4/finalize", auth(t1, lt), json{{"timestamp", 4000}}.dump(),
                     "application/json");
  ASSERT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(json::parse(res->body)["last_seq"], 5);
  EXPECT_TRUE(json::parse(client->Get("/projects/p1/segments/4", auth(t1))->body)["finalized"].get<bool>());

  EXPECT_EQ(client->Delete("/projects/p1/segments/4/lease", auth(t1, lt))->status, 200);
  EXPECT_EQ(client->Post("/projects/p1/segments/4/lease", auth(t1), "", "application/json")->status, 200);
}

TEST_F(Http, AnnotationsScoresReportsExport) {
  const json tokens = create_active();
  for (const auto& [who, token] : tokens.items()) {
    for (std::size_t i = 0; i < 9; ++i) complete_segment(token, i, "Satz Nummer " + std::to_string(i) + " da.");
  }
  const json spans = json::array(
      {{{"layer", "UCP"}, {"segment_id", "s0"}, {"char_range", {0, 6}}, {"annotator_id", "resolved"}},
       {{"layer", "CreativeShift"}, {"segment_id", "M1/s0"}, {"char_range", {0, 4}}, {"shift_type", "abstraction"},
        {"annotator_id", "resolved"}},
       {{"layer", "UCP"}, {"segment_id", "s1"}, {"char_range", {0, 3}}, {"annotator_id", "A"}}});
  auto res = client->Post("/projects/p1/annotations", spans.dump(), "application/json");
  ASSERT_EQ(res->status, 201) << res->body;
  EXPECT_EQ(json::parse(res->body).size(), 3u);
  const json bad = {{"layer", "CreativeShift"}, {"segment_id", "M1/s0"}, {"char_range", {0, 4}},
                    {"shift_type", "magic"}, {"annotator_id", "A"}};
  EXPECT_EQ(client->Post("/projects/p1/annotations", bad.dump(), "application/json")->status, 422);
  EXPECT_EQ(json::parse(client->Get("/projects/p1/annotations")->body).size(), 3u);
  EXPECT_EQ(json::parse(client->Get("/projects/p1/annotations?annotator=A")->body).size(), 1u);

  std::string csv = "segment_id,score\n";
  for (int i = 0; i < 9; ++i) csv += "s" + std::to_string(i) + ",0.7\n";
  for (const char* label : {"Translation", "M1", "M2"}) {
    ASSERT_EQ(client->Post(std::string("/projects/p1/scores/") + label, csv, "text/csv")->status, 201);
  }
  EXPECT_EQ(client->Post("/projects/p1/scores/M1", "segment_id,score\ns0,2\n", "text/csv")->status, 422);

  const auto reports = json::parse(client->Get("/projects/p1/reports")->body);
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_DOUBLE_EQ(reports[1]["cs_ratio"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(reports[1]["creativity_percent"].get<double>(), 70.0);

  for (const char* name : {"times", "hter", "quality", "creativity"}) {
    res = client->Get(std::string("/projects/p1/reports/") + name + "?format=csv");
    ASSERT_EQ(res->status, 200) << name;
    EXPECT_EQ(res->get_header_value("Content-Type"), "text/csv");
  }
  res = client->Get("/projects/p1/reports/hter?format=text");
  EXPECT_EQ(res->body.substr(0, 6), "Source");
  EXPECT_EQ(client->Get("/projects/p1/reports/bogus")->status, 404);
  EXPECT_EQ(client->Get("/projects/p1/reports/times?format=xml")->status, 400);

  const std::string archive = client->Get("/projects/p1/export")->body;
  EXPECT_TRUE(json::parse(archive)["complete"].get<bool>());
  EXPECT_EQ(client->Post("/projects/import", archive, "application/json")->status, 409);

  postedit::testing::TempDir other("http2");
  Workspace ws2(other.path, {});
  ws2.import_archive(archive);
  EXPECT_EQ(ws2.export_archive("p1"), archive);
}
