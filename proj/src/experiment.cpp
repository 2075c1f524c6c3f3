#include "postedit/experiment.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "postedit/error.hpp"

namespace postedit::experiment {

namespace {

constexpr const char* kFromScratchLabel = "Translation";

// Unbiased draw in [0, bound) straight from the engine; the standard
// distributions are not specified bit-for-bit across library vendors.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = 0;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

std::vector<std::size_t> permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[bounded(rng, i)]);
  return p;
}

}  // namespace

std::string Condition::label() const { return is_post_edit() ? model_id : kFromScratchLabel; }

Condition parse_condition_label(const std::string& label, const std::vector<std::string>& models) {
  if (std::find(models.begin(), models.end(), label) != models.end()) return Condition::post_edit(label);
  if (label == kFromScratchLabel) return Condition::from_scratch();
  throw Error(ErrorCode::InvalidArgument, "unknown condition '" + label + "'");
}

std::vector<Condition> RotationPlan::conditions() const {
  std::vector<Condition> out{Condition::from_scratch()};
  for (const auto& m : models) out.push_back(Condition::post_edit(m));
  return out;
}

std::optional<std::size_t> RotationPlan::translator_index(const std::string& id) const {
  auto it = std::find(translators.begin(), translators.end(), id);
  if (it == translators.end()) return std::nullopt;
  return static_cast<std::size_t>(it - translators.begin());
}

std::optional<std::size_t> RotationPlan::position_of(std::size_t translator, const Condition& condition) const {
  const auto& row = matrix.at(translator);
  auto it = std::find(row.begin(), row.end(), condition);
  if (it == row.end()) return std::nullopt;
  return static_cast<std::size_t>(it - row.begin());
}

RotationPlan generate_rotation(const std::vector<std::string>& translators, const std::vector<std::string>& models,
                               std::uint64_t seed) {
  const std::size_t n = models.size() + 1;
  if (translators.size() != n) {
    throw Error(ErrorCode::CountMismatch, std::to_string(translators.size()) + " translators for " +
                                              std::to_string(n) + " conditions (models + from-scratch)");
  }
  if (std::set<std::string>(translators.begin(), translators.end()).size() != translators.size()) {
    throw Error(ErrorCode::DuplicateId, "translator ids must be unique");
  }
  if (std::set<std::string>(models.begin(), models.end()).size() != models.size()) {
    throw Error(ErrorCode::DuplicateId, "model ids must be unique");
  }
  for (const auto& m : models) {
    if (m.empty() || m == kFromScratchLabel) {
      throw Error(ErrorCode::InvalidArgument, "model id '" + m + "' is reserved or empty");
    }
  }

  RotationPlan plan{translators, models, {}};
  const std::vector<Condition> symbols = plan.conditions();
  std::mt19937_64 rng(seed);
  const auto rows = permutation(n, rng);
  const auto cols = permutation(n, rng);
  const auto syms = permutation(n, rng);
  plan.matrix.assign(n, std::vector<Condition>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      plan.matrix[rows[i]][cols[j]] = symbols[syms[(i + j) % n]];
    }
  }
  return plan;
}

std::vector<Violation> validate_rotation(const RotationPlan& plan) {
  std::vector<Violation> out;
  const std::vector<Condition> symbols = plan.conditions();
  const std::size_t n = symbols.size();
  if (plan.translators.size() != n) {
    out.push_back({Violation::Kind::Shape, 0,
                   std::to_string(plan.translators.size()) + " translators but " + std::to_string(n) + " conditions"});
  }
  if (plan.matrix.size() != plan.translators.size()) {
    out.push_back({Violation::Kind::Shape, 0,
                   "matrix has " + std::to_string(plan.matrix.size()) + " rows for " +
                       std::to_string(plan.translators.size()) + " translators"});
  }
  for (std::size_t i = 0; i < plan.matrix.size(); ++i) {
    if (plan.matrix[i].size() != n) {
      out.push_back({Violation::Kind::Shape, i,
                     "row " + std::to_string(i) + " has " + std::to_string(plan.matrix[i].size()) + " positions, expected " +
                         std::to_string(n)});
    }
    for (std::size_t j = 0; j < plan.matrix[i].size(); ++j) {
      if (std::find(symbols.begin(), symbols.end(), plan.matrix[i][j]) == symbols.end()) {
        out.push_back({Violation::Kind::UnknownCondition, i,
                       "cell (" + std::to_string(i) + ", " + std::to_string(j) + ") holds unregistered condition '" +
                           plan.matrix[i][j].label() + "'"});
      }
    }
  }

  auto check_line = [&](Violation::Kind kind, std::size_t index, const std::string& what,
                        const std::vector<Condition>& line) {
    std::map<Condition, std::size_t> counts;
    for (const auto& c : line) ++counts[c];
    std::string problems;
    for (const auto& s : symbols) {
      const std::size_t k = counts.contains(s) ? counts[s] : 0;
      if (k == 1) continue;
      if (!problems.empty()) problems += ", ";
      problems += "'" + s.label() + "' appears " + std::to_string(k) + " times";
    }
    if (!problems.empty()) out.push_back({kind, index, what + ": " + problems});
  };
  for (std::size_t i = 0; i < plan.matrix.size(); ++i) {
    const std::string name = i < plan.translators.size() ? plan.translators[i] : std::to_string(i);
    check_line(Violation::Kind::Row, i, "translator " + name, plan.matrix[i]);
  }
  std::size_t width = 0;
  for (const auto& row : plan.matrix) width = std::max(width, row.size());
  for (std::size_t j = 0; j < width; ++j) {
    std::vector<Condition> column;
    for (const auto& row : plan.matrix) {
      if (j < row.size()) column.push_back(row[j]);
    }
    check_line(Violation::Kind::Column, j, "chunk position " + std::to_string(j), column);
  }
  return out;
}

nlohmann::json rotation_to_json(const RotationPlan& plan) {
  nlohmann::json matrix = nlohmann::json::object();
  for (std::size_t i = 0; i < plan.translators.size() && i < plan.matrix.size(); ++i) {
    nlohmann::json row = nlohmann::json::object();
    for (std::size_t j = 0; j < plan.matrix[i].size(); ++j) row[std::to_string(j)] = plan.matrix[i][j].label();
    matrix[plan.translators[i]] = std::move(row);
  }
  return {{"translators", plan.translators}, {"models", plan.models}, {"matrix", std::move(matrix)}};
}

RotationPlan rotation_from_json(const nlohmann::json& j) {
  RotationPlan plan;
  j.at("translators").get_to(plan.translators);
  j.at("models").get_to(plan.models);
  const auto& matrix = j.at("matrix");
  for (const auto& t : plan.translators) {
    if (!matrix.contains(t)) throw Error(ErrorCode::MalformedInput, "rotation has no row for translator '" + t + "'");
    const auto& row = matrix.at(t);
    std::vector<Condition> cells(row.size());
    for (const auto& [key, value] : row.items()) {
      std::size_t index = 0;
      try {
        index = std::stoul(key);
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedInput, "chunk index '" + key + "' is not a number");
      }
      if (index >= cells.size()) throw Error(ErrorCode::MalformedInput, "chunk index " + key + " out of range");
      cells[index] = parse_condition_label(value.get<std::string>(), plan.models);
    }
    plan.matrix.push_back(std::move(cells));
  }
  return plan;
}

void to_json(nlohmann::json& j, const Condition& c) {
  j = nlohmann::json{{"kind", c.is_post_edit() ? "PostEdit" : "FromScratch"}};
  if (c.is_post_edit()) j["model_id"] = c.model_id;
}

void from_json(const nlohmann::json& j, Condition& c) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "FromScratch") {
    c = Condition::from_scratch();
  } else if (kind == "PostEdit") {
    c = Condition::post_edit(j.at("model_id").get<std::string>());
  } else {
    throw Error(ErrorCode::MalformedInput, "unknown condition kind '" + kind + "'");
  }
}

}  // namespace postedit::experiment
