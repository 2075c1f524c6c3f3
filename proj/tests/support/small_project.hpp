#pragma once

#include <chrono>
#include <filesystem>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

namespace postedit::testing {

// Three translators, two models, nine equal-length segments.
inline nlohmann::json small_project_spec(const std::string& id = "p1") {
  nlohmann::json segments = nlohmann::json::array();
  nlohmann::json m1 = nlohmann::json::array(), m2 = nlohmann::json::array(), ref = nlohmann::json::array();
  for (int i = 0; i < 9; ++i) {
    const std::string n = std::to_string(i);
    segments.push_back("Source sentence number " + n + " here.");
    m1.push_back("Satz eins Nummer " + n + " hier.");
    m2.push_back("Satz zwei Nummer " + n + " dort.");
    ref.push_back("Satz Nummer " + n + " hier.");
  }
  return {{"id", id},
          {"document", {{"id", "doc"}, {"title", "Small"}, {"language", "en"}, {"segments", segments}}},
          {"models", {"M1", "M2"}},
          {"translators", {"T1", "T2", "T3"}},
          {"seed", 4},
          {"mt", {{"M1", m1}, {"M2", m2}}},
          {"reference", ref}};
}

inline std::filesystem::path fresh_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / ("postedit-" + tag + "-" + std::to_string(rng()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) : path(fresh_dir(tag)) {}
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace postedit::testing
