#include <gtest/gtest.h>

#include <functional>
#include <set>

#include "postedit/error.hpp"
#include "postedit/project.hpp"
#include "postedit/unicode.hpp"
#include "small_project.hpp"

using namespace postedit;
using namespace postedit::service;
using session::EditEvent;
using session::EventKind;

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

session::SegmentSession finished(const Project& p, const std::string& translator, std::size_t index,
                                 const std::string& text, std::int64_t ms) {
  const auto c = *p.condition_for(translator, index);
  session::SegmentSession s{p.document.segments[index].id, translator, c, p.initial_text(c, index), {}};
  s.events.push_back(EditEvent::marker(1, 0, EventKind::ReadingOpened));
  s.events.push_back(EditEvent::marker(2, 100, EventKind::EditingStarted));
  if (!s.initial_text.empty()) s.events.push_back(EditEvent::erase(3, 100 + ms, 0, unicode::length(s.initial_text)));
  s.events.push_back(EditEvent::insert(s.events.size() + 1, 100 + ms, 0, text));
  s.events.push_back(EditEvent::marker(s.events.size() + 1, 100 + ms, EventKind::Finalized));
  return s;
}

}  // namespace

TEST(ProjectSpec, Parses) {
  const Project p = project_from_spec(postedit::testing::small_project_spec());
  EXPECT_EQ(p.state, ProjectState::Draft);
  EXPECT_EQ(p.document.segments.size(), 9u);
  EXPECT_EQ(p.chunks.size(), 3u);
  EXPECT_EQ(p.conditions().size(), 3u);
  EXPECT_NO_THROW(check_activatable(p));
}

TEST(ProjectSpec, Rejections) {
  auto spec = postedit::testing::small_project_spec();
  spec["id"] = "a/b";
  EXPECT_EQ(code_of([&] { project_from_spec(spec); }), ErrorCode::InvalidArgument);
  spec = postedit::testing::small_project_spec();
  spec["mt"]["M1"].erase(0);
  EXPECT_EQ(code_of([&] { project_from_spec(spec); }), ErrorCode::AlignmentMismatch);
  spec = postedit::testing::small_project_spec();
  spec["mt"]["M9"] = spec["mt"]["M1"];
  EXPECT_EQ(code_of([&] { project_from_spec(spec); }), ErrorCode::NotFound);
  spec = postedit::testing::small_project_spec();
  spec["translators"] = {"T1", "T2"};
  EXPECT_EQ(code_of([&] { project_from_spec(spec); }), ErrorCode::CountMismatch);
  spec = postedit::testing::small_project_spec();
  spec.erase("models");
  EXPECT_EQ(code_of([&] { project_from_spec(spec); }), ErrorCode::MalformedInput);
  spec = postedit::testing::small_project_spec();
  spec.erase("mt");
  const Project no_mt = project_from_spec(spec);
  EXPECT_EQ(code_of([&] { check_activatable(no_mt); }), ErrorCode::ValidationFailed);
}

TEST(ProjectSpec, ExplicitRotationIsValidated) {
  auto spec = postedit::testing::small_project_spec();
  const Project generated = project_from_spec(spec);
  spec["rotation"] = experiment::rotation_to_json(generated.rotation);
  EXPECT_EQ(project_from_spec(spec).rotation, generated.rotation);
  auto broken = generated.rotation;
  broken.matrix[0][0] = broken.matrix[0][1];
  spec["rotation"] = experiment::rotation_to_json(broken);
  EXPECT_EQ(code_of([&] { project_from_spec(spec); }), ErrorCode::ValidationFailed);
}

TEST(Project, ConditionMapping) {
  const Project p = project_from_spec(postedit::testing::small_project_spec());
  for (std::size_t i = 0; i < 9; ++i) {
    const std::size_t chunk = p.chunk_of(i);
    EXPECT_TRUE(p.chunks[chunk].contains(i));
    std::set<experiment::Condition> seen;
    for (std::size_t t = 0; t < 3; ++t) {
      const auto c = p.condition_for(p.translators[t], i);
      ASSERT_TRUE(c);
      EXPECT_EQ(*c, p.rotation.at(t, chunk));
      EXPECT_EQ(p.translator_for(*c, i), p.translators[t]);
      seen.insert(*c);
    }
    EXPECT_EQ(seen.size(), 3u);  // every condition covers every segment once
  }
  EXPECT_FALSE(p.condition_for("T9", 0));
  EXPECT_EQ(code_of([&] { p.chunk_of(9); }), ErrorCode::OutOfRange);
  EXPECT_EQ(p.initial_text(experiment::Condition::from_scratch(), 0), "");
  EXPECT_EQ(p.initial_text(experiment::Condition::post_edit("M2"), 1), "Satz zwei Nummer 1 dort.");
}

TEST(Project, DraftOnlyMutations) {
  Project p = project_from_spec(postedit::testing::small_project_spec());
  set_reference(p, std::vector<std::string>(9, "r"));
  EXPECT_EQ(code_of([&] { set_reference(p, {"r"}); }), ErrorCode::AlignmentMismatch);
  p.state = ProjectState::Active;
  EXPECT_EQ(code_of([&] { set_model_output(p, "M1", std::vector<std::string>(9, "x")); }), ErrorCode::InvalidState);
  EXPECT_EQ(code_of([&] { check_activatable(p); }), ErrorCode::InvalidState);
}

TEST(Project, JsonRoundTrip) {
  Project p = project_from_spec(postedit::testing::small_project_spec());
  p.state = ProjectState::Active;
  p.config.context_window = 3;
  EXPECT_EQ(project_from_json(project_to_json(p)), p);
}

TEST(Archive, RoundTripAndReports) {
  ProjectData data;
  data.project = project_from_spec(postedit::testing::small_project_spec());
  data.project.state = ProjectState::Active;
  EXPECT_EQ(nlohmann::json::parse(export_archive(data))["reports"], nullptr);

  for (const auto& t : data.project.translators) {
    for (std::size_t i = 0; i < 9; ++i) {
      data.sessions[session_key(t, i)] = finished(data.project, t, i, "Satz Nummer " + std::to_string(i) + " da.", 20000);
    }
  }
  data.annotations.push_back({annotation::Layer::UCP, "s0", 0, 6, std::nullopt, "resolved"});
  data.annotations.push_back({annotation::Layer::CreativeShift, "M1/s0", 0, 4, "abstraction", "resolved"});
  data.annotations.push_back({annotation::Layer::UCP, "s1", 0, 6, std::nullopt, "A"});
  for (const auto& c : data.project.conditions()) {
    for (const auto& seg : data.project.document.segments) data.scores[c.label()].by_segment[seg.id] = 0.5;
  }

  const std::string archive = export_archive(data);
  const auto j = nlohmann::json::parse(archive);
  EXPECT_EQ(j["format"], "postedit-archive/1");
  EXPECT_TRUE(j["complete"].get<bool>());
  EXPECT_FALSE(j["reports"].is_null());
  EXPECT_EQ(archive.find("\"token\""), std::string::npos);

  const ProjectData back = import_archive(archive);
  EXPECT_EQ(back.project, data.project);
  EXPECT_EQ(back.sessions, data.sessions);
  EXPECT_EQ(back.annotations, data.annotations);
  EXPECT_EQ(export_archive(back), archive);

  const auto reports = compute_reports(back);
  ASSERT_EQ(reports.conditions.size(), 3u);
  for (const auto& r : reports.conditions) {
    EXPECT_NEAR(r.total_editing_minutes, 9 * 20000 / 60000.0, 1e-12);
    EXPECT_DOUBLE_EQ(*r.comet, 0.5);
  }
  // Only the resolved layer counts.
  EXPECT_DOUBLE_EQ(*reports.conditions[1].cs_ratio, 1.0);
  EXPECT_EQ(report_table(reports, "times").rows.size(), 3u);
  EXPECT_EQ(report_table(reports, "hter").rows.size(), 4u);
  EXPECT_EQ(code_of([&] { report_table(reports, "nope"); }), ErrorCode::NotFound);
}

TEST(Archive, IncompleteAndCorrupt) {
  ProjectData data;
  data.project = project_from_spec(postedit::testing::small_project_spec());
  data.sessions[session_key("T1", 0)] = finished(data.project, "T1", 0, "x", 10);
  auto j = nlohmann::json::parse(export_archive(data));
  EXPECT_FALSE(j["complete"].get<bool>());
  EXPECT_THROW(import_archive("{"), Error);
  j["format"] = "other/9";
  EXPECT_THROW(import_archive(j.dump()), Error);
}
