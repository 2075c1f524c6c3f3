#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace postedit::experiment {

// A translation condition: either translating from scratch or post-editing the
// output of one registered model.
struct Condition {
  enum class Kind { FromScratch, PostEdit };

  Kind kind = Kind::FromScratch;
  std::string model_id;  // empty iff kind == FromScratch

  static Condition from_scratch() { return {}; }
  static Condition post_edit(std::string model) { return {Kind::PostEdit, std::move(model)}; }

  bool is_post_edit() const { return kind == Kind::PostEdit; }
  // "Translation" for from-scratch work, otherwise the model id.
  std::string label() const;

  auto operator<=>(const Condition&) const = default;
};

// Inverse of Condition::label() given the registered models.
Condition parse_condition_label(const std::string& label, const std::vector<std::string>& models);

// Translators are rows; chunk positions are columns.
struct RotationPlan {
  std::vector<std::string> translators;
  std::vector<std::string> models;
  std::vector<std::vector<Condition>> matrix;

  std::vector<Condition> conditions() const;  // FromScratch first, then models in order
  const Condition& at(std::size_t translator, std::size_t position) const { return matrix.at(translator).at(position); }
  std::optional<std::size_t> translator_index(const std::string& id) const;
  // Column holding `condition` in the translator's row.
  std::optional<std::size_t> position_of(std::size_t translator, const Condition& condition) const;

  bool operator==(const RotationPlan&) const = default;
};

// Cyclic Latin square with row, column and symbol permutations drawn from a
// seeded mt19937_64, so a given seed yields the same plan on every platform.
// Throws CountMismatch unless translators.size() == models.size() + 1.
RotationPlan generate_rotation(const std::vector<std::string>& translators, const std::vector<std::string>& models,
                               std::uint64_t seed);

struct Violation {
  enum class Kind { Shape, UnknownCondition, Row, Column };
  Kind kind;
  std::size_t index = 0;  // row or column index where applicable
  std::string message;
};

// Empty iff the plan is a Latin square over the plan's conditions.
std::vector<Violation> validate_rotation(const RotationPlan& plan);

// {"translators": [...], "models": [...], "matrix": {"<translator>": {"0": "<label>", ...}}}
nlohmann::json rotation_to_json(const RotationPlan& plan);
RotationPlan rotation_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const Condition& c);
void from_json(const nlohmann::json& j, Condition& c);

}  // namespace postedit::experiment
