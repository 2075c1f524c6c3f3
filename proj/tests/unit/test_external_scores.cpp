#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "postedit/error.hpp"
#include "postedit/metrics.hpp"

using namespace postedit;

namespace {

ErrorCode parse_error(std::string_view content, const std::vector<std::string>& expected) {
  try {
    metrics::parse_external_scores(content, expected);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "accepted: " << content;
  return ErrorCode::IoError;
}

}  // namespace

TEST(ExternalScores, Csv) {
  const auto s = metrics::parse_external_scores("segment_id,score\ns0,0.5\ns1,0.75\n", {"s0", "s1"});
  EXPECT_DOUBLE_EQ(s.mean(), 0.625);
  EXPECT_DOUBLE_EQ(s.mean_over({"s1"}), 0.75);
}

TEST(ExternalScores, Json) {
  const auto s = metrics::parse_external_scores(R"([{"segment_id":"s0","score":1},{"segment_id":"s1","score":0}])",
                                                {"s0", "s1"});
  EXPECT_EQ(s.by_segment.size(), 2u);
  EXPECT_DOUBLE_EQ(s.mean(), 0.5);
}

TEST(ExternalScores, Rejections) {
  EXPECT_EQ(parse_error("segment_id,score\ns0,1.5\n", {}), ErrorCode::OutOfRangeScore);
  EXPECT_EQ(parse_error("segment_id,score\ns0,-0.1\n", {}), ErrorCode::OutOfRangeScore);
  EXPECT_EQ(parse_error("segment_id,score\ns0,abc\n", {}), ErrorCode::MalformedInput);
  EXPECT_EQ(parse_error("id,value\ns0,0.1\n", {}), ErrorCode::MalformedInput);
  EXPECT_EQ(parse_error("segment_id,score\ns0,0.1\n", {"s0", "s1"}), ErrorCode::MissingSegment);
  EXPECT_EQ(parse_error("segment_id,score\ns0,0.1\ns0,0.2\n", {}), ErrorCode::DuplicateId);
  EXPECT_EQ(parse_error(R"([{"segment_id":"s0"}])", {}), ErrorCode::MalformedInput);
  EXPECT_EQ(parse_error("", {}), ErrorCode::MalformedInput);
}

TEST(ExternalScores, MeanOverMissing) {
  metrics::ExternalScores s;
  s.by_segment["a"] = 0.3;
  EXPECT_THROW(s.mean_over({"b"}), Error);
  EXPECT_THROW(metrics::ExternalScores{}.mean(), Error);
}

TEST(ExternalScores, FromFile) {
  const auto path = std::filesystem::temp_directory_path() / "postedit_scores_test.csv";
  {
    std::ofstream out(path);
    out << "segment_id,score\ns0,0.9\n";
  }
  EXPECT_DOUBLE_EQ(metrics::ingest_external_scores(path.string(), {"s0"}).mean(), 0.9);
  std::filesystem::remove(path);
  try {
    metrics::ingest_external_scores(path.string(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotFound);
  }
}
