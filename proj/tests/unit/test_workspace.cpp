#include <gtest/gtest.h>

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <fstream>
#include <functional>
#include <thread>

#include "postedit/error.hpp"
#include "postedit/workspace.hpp"
#include "session_fuzz.hpp"
#include "small_project.hpp"

using namespace postedit;
using namespace postedit::service;
using session::EditEvent;
using session::EventKind;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}

struct Fixture : ::testing::Test {
  postedit::testing::TempDir dir{"ws"};
  std::int64_t clock_ms = 1'000'000;
  WorkspaceOptions options() {
    WorkspaceOptions o;
    o.clock = [this] { return clock_ms; };
    o.durable = false;
    return o;
  }
  std::unique_ptr<Workspace> ws = std::make_unique<Workspace>(dir.path, options());
  Workspace::Created created;

  void SetUp() override {
    created = ws->create_project(postedit::testing::small_project_spec());
    ws->activate("p1");
  }
  void reopen() {
    ws.reset();
    ws = std::make_unique<Workspace>(dir.path, options());
  }
  fs::path log_file(const std::string& t, std::size_t i) const {
    return dir.path / "p1" / "sessions" / t / (std::to_string(i) + ".log");
  }
};

std::vector<EditEvent> opening(std::uint64_t first = 1) {
  return {EditEvent::marker(first, 0, EventKind::ReadingOpened), EditEvent::marker(first + 1, 10, EventKind::EditingStarted)};
}

}  // namespace

TEST_F(Fixture, CreateListAuthenticate) {
  EXPECT_EQ(ws->project_ids(), std::vector<std::string>{"p1"});
  EXPECT_EQ(created.tokens.size(), 3u);
  EXPECT_EQ(ws->authenticate("p1", created.tokens.at("T2")), "T2");
  EXPECT_EQ(code_of([&] { ws->authenticate("p1", "bogus"); }), ErrorCode::Unauthorized);
  EXPECT_EQ(code_of([&] { ws->project("nope"); }), ErrorCode::NotFound);
  EXPECT_EQ(code_of([&] { ws->create_project(postedit::testing::small_project_spec()); }), ErrorCode::DuplicateId);
  EXPECT_EQ(code_of([&] { ws->activate("p1"); }), ErrorCode::InvalidState);
  EXPECT_EQ(ws->project("p1").state, ProjectState::Active);
}

TEST_F(Fixture, DraftProjectsRejectLeases) {
  ws->create_project(postedit::testing::small_project_spec("p2"));
  EXPECT_EQ(code_of([&] { ws->acquire_lease("p2", "T1", 0); }), ErrorCode::InvalidState);
  ws->set_reference("p2", std::vector<std::string>(9, "x"));
  EXPECT_EQ(ws->project("p2").reference->front(), "x");
}

TEST_F(Fixture, AssignmentsAndBundle) {
  const auto a = ws->assignments("p1", "T1");
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(code_of([&] { ws->assignments("p1", "T9"); }), ErrorCode::NotAssigned);
  const auto b = ws->bundle("p1", "T1", 4);
  EXPECT_EQ(b.segment_id, "s4");
  EXPECT_EQ(b.preceding.size(), 2u);
  EXPECT_EQ(b.following.size(), 2u);
  EXPECT_EQ(b.current_text, b.initial_text);
  EXPECT_EQ(b.condition, *ws->project("p1").condition_for("T1", 4));
  EXPECT_EQ(code_of([&] { ws->bundle("p1", "T1", 9); }), ErrorCode::OutOfRange);
  EXPECT_EQ(code_of([&] { ws->bundle("p1", "T9", 0); }), ErrorCode::NotAssigned);
}

TEST_F(Fixture, LeaseLifecycle) {
  const auto lease = ws->acquire_lease("p1", "T1", 0);
  EXPECT_EQ(lease.expires_at_ms, clock_ms + 300000);
  EXPECT_EQ(code_of([&] { ws->acquire_lease("p1", "T1", 0); }), ErrorCode::LeaseLost);
  EXPECT_EQ(code_of([&] { ws->append_events("p1", "T1", 0, "wrong", opening()); }), ErrorCode::LeaseLost);
  ws->append_events("p1", "T1", 0, lease.token, opening());
  clock_ms += 299000;  // renewed by the append, so still valid
  EXPECT_NO_THROW(ws->append_events("p1", "T1", 0, lease.token, {}));
  clock_ms += 300001;
  EXPECT_EQ(code_of([&] { ws->append_events("p1", "T1", 0, lease.token, {}); }), ErrorCode::LeaseLost);
  const auto second = ws->acquire_lease("p1", "T1", 0);
  ws->release_lease("p1", "T1", 0, second.token);
  EXPECT_NO_THROW(ws->acquire_lease("p1", "T1", 0));
}

TEST_F(Fixture, SeqRulesAndIdempotentResend) {
  const auto lease = ws->acquire_lease("p1", "T1", 0);
  EXPECT_EQ(code_of([&] { ws->append_events("p1", "T1", 0, lease.token, opening(2)); }), ErrorCode::SeqGap);
  auto batch = opening();
  batch.push_back(EditEvent::insert(3, 20, 0, "Hallo "));
  const auto ack = ws->append_events("p1", "T1", 0, lease.token, batch);
  EXPECT_EQ(ack.last_seq, 3u);
  // The same batch again plus one more event: the stored prefix is skipped.
  batch.push_back(EditEvent::erase(4, 30, 0, 1));
  const auto ack2 = ws->append_events("p1", "T1", 0, lease.token, batch);
  EXPECT_EQ(ack2.last_seq, 4u);
  EXPECT_EQ(ws->session("p1", "T1", 0).events.size(), 4u);
  auto conflicting = batch;
  conflicting[2].text = "Hi ";
  EXPECT_EQ(code_of([&] { ws->append_events("p1", "T1", 0, lease.token, conflicting); }), ErrorCode::ValidationFailed);
  EXPECT_EQ(code_of([&] { ws->append_events("p1", "T1", 0, lease.token, {EditEvent::insert(6, 40, 0, "x")}); }),
            ErrorCode::SeqGap);
}

TEST_F(Fixture, ValidationFailures) {
  const auto lease = ws->acquire_lease("p1", "T1", 0);
  const std::string initial = ws->bundle("p1", "T1", 0).initial_text;
  EXPECT_EQ(code_of([&] { ws->append_events("p1", "T1", 0, lease.token, {EditEvent::insert(1, 0, 0, "x")}); }),
            ErrorCode::ValidationFailed);  // edit before EditingStarted
  auto bad = opening();
  bad.push_back(EditEvent::erase(3, 20, 500, 1));
  EXPECT_EQ(code_of([&] { ws->append_events("p1", "T1", 0, lease.token, bad); }), ErrorCode::ValidationFailed);
  EXPECT_EQ(ws->session("p1", "T1", 0).events.size(), 0u);  // all or nothing
  auto good = opening();
  good.push_back(EditEvent::insert(3, 20, 0, "x"));
  EXPECT_EQ(code_of([&] { ws->append_events("p1", "T1", 0, lease.token, good, std::string("nope")); }),
            ErrorCode::ValidationFailed);
  EXPECT_EQ(ws->append_events("p1", "T1", 0, lease.token, good, "x" + initial).text, "x" + initial);
}

TEST_F(Fixture, FinalizeAndAssignmentsProgress) {
  const auto lease = ws->acquire_lease("p1", "T2", 1);
  ws->append_events("p1", "T2", 1, lease.token, opening());
  const auto ack = ws->finalize("p1", "T2", 1, lease.token, 50);
  EXPECT_EQ(ack.last_seq, 3u);
  EXPECT_TRUE(ws->session("p1", "T2", 1).finalized());
  const auto p = ws->project("p1");
  const auto a = ws->assignments("p1", "T2");
  EXPECT_EQ(a[p.chunk_of(1)].finalized_segments, 1u);
  EXPECT_EQ(code_of([&] { ws->append_events("p1", "T2", 1, lease.token, {EditEvent::insert(4, 60, 0, "x")}); }),
            ErrorCode::ValidationFailed);
}

TEST_F(Fixture, RecoveryAfterReopen) {
  std::mt19937_64 rng(9);
  const auto stream = postedit::testing::fuzz_stream(rng, 400);
  const auto lease = ws->acquire_lease("p1", "T3", 2);
  const std::string initial = ws->bundle("p1", "T3", 2).initial_text;
  // Swap the segment's initial text for the fuzzed one, then replay the rest.
  const std::int64_t t0 = stream.events[1].timestamp_ms;
  std::vector<EditEvent> head{stream.events[0], stream.events[1]};
  if (!initial.empty()) head.push_back(EditEvent::erase(3, t0, 0, session::BufferState::from_utf8(initial).text.size()));
  if (!stream.initial.empty()) head.push_back(EditEvent::insert(head.size() + 1, t0, 0, stream.initial));
  ws->append_events("p1", "T3", 2, lease.token, head);
  std::uint64_t seq = head.size() + 1;
  for (std::size_t i = 2; i < stream.events.size(); i += 7) {
    std::vector<EditEvent> batch;
    for (std::size_t k = i; k < std::min(stream.events.size(), i + 7); ++k) {
      batch.push_back(stream.events[k]);
      batch.back().seq = seq++;
    }
    ws->append_events("p1", "T3", 2, lease.token, batch);
  }
  const auto before = ws->session("p1", "T3", 2);
  EXPECT_EQ(before.final_text(), stream.expected_text);
  reopen();
  EXPECT_EQ(ws->session("p1", "T3", 2), before);
  EXPECT_TRUE(fs::exists(log_file("T3", 2).replace_extension(".snap")));
  EXPECT_EQ(ws->bundle("p1", "T3", 2).current_text, stream.expected_text);
}

TEST_F(Fixture, TornTailIsDropped) {
  const auto lease = ws->acquire_lease("p1", "T1", 3);
  ws->append_events("p1", "T1", 3, lease.token, opening());
  {
    std::ofstream out(log_file("T1", 3), std::ios::app);
    out << R"({"events":[{"seq":3,"timestamp":20,"kind":"Ins)";
  }
  reopen();
  EXPECT_EQ(ws->session("p1", "T1", 3).last_seq(), 2u);
  const auto lease2 = ws->acquire_lease("p1", "T1", 3);
  EXPECT_EQ(ws->append_events("p1", "T1", 3, lease2.token, {EditEvent::insert(3, 20, 0, "a")}).last_seq, 3u);
  reopen();
  EXPECT_EQ(ws->session("p1", "T1", 3).last_seq(), 3u);
}

TEST_F(Fixture, DamageBeforeTailIsAnError) {
  const auto lease = ws->acquire_lease("p1", "T1", 3);
  ws->append_events("p1", "T1", 3, lease.token, opening());
  ws->append_events("p1", "T1", 3, lease.token, {EditEvent::insert(3, 20, 0, "a")});
  std::string content;
  {
    std::ifstream in(log_file("T1", 3));
    content.assign(std::istreambuf_iterator<char>(in), {});
  }
  content[2] = '#';
  {
    std::ofstream out(log_file("T1", 3), std::ios::trunc);
    out << content;
  }
  EXPECT_THROW(SessionLog::recover(log_file("T1", 3)), Error);
}

TEST_F(Fixture, AnnotationsPersistAndValidate) {
  const auto r = ws->add_annotation("p1", {annotation::Layer::UCP, "s0", 0, 6, std::nullopt, "A"});
  EXPECT_FALSE(r.overlap_flagged);
  EXPECT_TRUE(ws->add_annotation("p1", {annotation::Layer::UCP, "s0", 2, 8, std::nullopt, "A"}).overlap_flagged);
  EXPECT_NO_THROW(ws->add_annotation("p1", {annotation::Layer::CreativeShift, "M1/s0", 0, 4, "abstraction", "resolved"}));
  EXPECT_EQ(code_of([&] { ws->add_annotation("p1", {annotation::Layer::UCP, "s0", 0, 999, std::nullopt, "A"}); }),
            ErrorCode::OutOfBounds);
  EXPECT_EQ(code_of([&] { ws->add_annotation("p1", {annotation::Layer::UCP, "zz", 0, 1, std::nullopt, "A"}); }),
            ErrorCode::OutOfBounds);
  reopen();
  const auto stored = ws->annotations("p1");
  ASSERT_EQ(stored.size(), 3u);
  EXPECT_TRUE(stored[1].overlap_flagged);
}

TEST_F(Fixture, ScoresIngest) {
  std::string csv = "segment_id,score\n";
  for (int i = 0; i < 9; ++i) csv += "s" + std::to_string(i) + ",0.8\n";
  ws->ingest_scores("p1", "M1", csv);
  EXPECT_EQ(code_of([&] { ws->ingest_scores("p1", "M7", csv); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { ws->ingest_scores("p1", "M2", "segment_id,score\ns0,0.1\n"); }), ErrorCode::MissingSegment);
  reopen();
  EXPECT_DOUBLE_EQ(ws->snapshot("p1").scores.at("M1").mean(), 0.8);
}

TEST_F(Fixture, ArchiveExportImport) {
  const auto lease = ws->acquire_lease("p1", "T1", 0);
  ws->append_events("p1", "T1", 0, lease.token, opening());
  const std::string archive = ws->export_archive("p1");
  EXPECT_EQ(code_of([&] { ws->import_archive(archive); }), ErrorCode::DuplicateId);
  postedit::testing::TempDir other("ws2");
  Workspace ws2(other.path, options());
  const auto created2 = ws2.import_archive(archive);
  EXPECT_EQ(created2.id, "p1");
  EXPECT_NE(created2.tokens.at("T1"), created.tokens.at("T1"));
  EXPECT_EQ(ws2.export_archive("p1"), archive);
  EXPECT_EQ(ws2.session("p1", "T1", 0), ws->session("p1", "T1", 0));
}

TEST_F(Fixture, ConcurrentWritersOnDistinctSegments) {
  std::vector<std::thread> threads;
  std::atomic<int> failures{0};
  for (std::size_t i = 0; i < 9; ++i) {
    threads.emplace_back([&, i] {
      try {
        const auto lease = ws->acquire_lease("p1", "T1", i);
        ws->append_events("p1", "T1", i, lease.token, opening());
        for (std::uint64_t s = 3; s < 40; ++s) {
          ws->append_events("p1", "T1", i, lease.token, {EditEvent::insert(s, static_cast<std::int64_t>(s) * 10, 0, "x")});
        }
        ws->finalize("p1", "T1", i, lease.token, 1000);
      } catch (...) {
        ++failures;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(failures.load(), 0);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_TRUE(ws->session("p1", "T1", i).finalized());
}
