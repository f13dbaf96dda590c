#pragma once

#include <array>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dlm/error.hpp"
#include "dlm/reward_dsl.hpp"

namespace dlm {

struct TaskSpec {
  int index = 0;
  std::string label;
  std::string prompt;
  std::string base_source;  // base reward as written in the task table
  RewardExpr base_reward;
  std::set<int> base_features;
};

struct TaskRow {
  std::string_view label;
  std::string_view prompt;
  std::string_view base_reward;
};

// Base rewards keep the table's `feature[k]` spelling; the parser
// canonicalizes it to `agent_feats[k]`.
inline constexpr std::array<TaskRow, 16> kTaskRows = {{
    {"Older Bias", "While still prioritizing all, slightly focus on the oldest by age distribution.",
     "state * 0.1 + if_(state) * 2.0 * feature[11]"},
    {"Low Income",
     "While still prioritizing all, slightly focus on the bottom 12.5% of the income_bracket distribution.",
     "state * 0.1 + if_(state) * 2.0 * feature[36]"},
    {"Hindi Speakers", "While still prioritizing all, slightly focus on those who speak Hindi.",
     "state * 0.1 + if_(state) * 2.0 * if_(feature[12])"},
    {"Low Education Bias", "While still prioritizing all, slightly weight those who have had low education.",
     "state * 0.1 + if_(state) * 2.0 * if_(feature[16])"},
    {"Age Distribution Tail Emphasis",
     "While still prioritizing all, slightly focus on both the youngest and oldest by age.",
     "state * 0.1 + if_(state) * 2.0 * if_(feature[11] or feature[7])"},
    {"Middle Income",
     "While still prioritizing all, slightly prefer the income bracket bounds for the middle 40% of the "
     "population.",
     "state * 0.1 + if_(state) * 2.0 * if_(feature[38] or feature[39] or feature[40])"},
    {"Non-Phone Owner",
     "While still prioritizing all, slightly favor those women who do not own their own phone.",
     "state * 0.1 + if_(state) * 2.0 * if_(feature[24] or feature[25])"},
    {"Low Income + Younger Bias",
     "While still prioritizing all, slightly prioritize impoverished younger mothers by combining the "
     "distributions of 'age' and 'education'.",
     "state * 0.1 + if_(state) * 2.0 * if_(feature[7] and feature[16])"},
    {"Marathi Speakers + Middle Aged",
     "While still prioritizing all, slightly focus on those Marathi-speakers with middle-aged mothers.",
     "state * 0.1 + if_(state) * 2.0 * if_(feature[13] and (feature[9] or feature[10]))"},
    {"Early and Late Workers",
     "While still prioritizing all, slightly emphasize beneficiaries who likely work early in the morning and "
     "late at night.",
     "state * 0.1 + if_(state) * 2.0 * if_(feature[26] or feature[28])"},
    {"Critical Low Income",
     "While still prioritizing all, slightly weight the lowest income_bracket groups, the absolute lowest "
     "earners in the population.",
     "state * 0.1 + if_(state) * 2.0 * if_(feature[35] or feature[36] or feature[37])"},
    {"Early Morning Call + NGO Registered",
     "While still prioritizing all, slightly advantage those who prefer being called before 10:30am 'slot' and "
     "are registered at an NGO.",
     "state * 0.1 + if_(state) * 2.0 * if_(feature[26] and feature[32])"},
    {"Morning Call + NGO Registered",
     "While still prioritizing all, slightly advantage those who prefer being called between 10:30am-12:30pm "
     "and are registered at an NGO.",
     "state * 0.1 + if_(state) * 2.0 * if_(feature[27] and feature[32])"},
    {"Afternoon Call + NGO Registered",
     "While still prioritizing all, slightly advantage those who prefer being called between 12:30pm-3:30pm "
     "and are registered at an NGO.",
     "state * 0.1 + if_(state) * 2.0 * if_(feature[28] and feature[32])"},
    {"Evening Call + NGO Registered",
     "While still prioritizing all, slightly advantage those who prefer being called after 7PM 'slot' "
     "registered at an NGO.",
     "state * 0.1 + if_(state) * 2.0 * if_(feature[31] and feature[32])"},
    {"Technically Challenged",
     "While still prioritizing all, infer technical challenges in reaching the phone that could indicate "
     "'at-risk' beneficiaries and give slight preference.",
     "state * 0.1 + if_(state) * 2.0 * if_(feature[24] or feature[25])"},
}};

inline TaskSpec make_task(int index, std::string label, std::string prompt, std::string base_source) {
  RewardExpr expr = [&] {
    try {
      return dsl::parse(base_source);
    } catch (const ParseError& e) {
      throw ConfigError("task " + std::to_string(index) + " base reward does not parse: " + e.what());
    }
  }();
  auto features = dsl::used_features(expr);
  return TaskSpec{index, std::move(label), std::move(prompt), std::move(base_source), std::move(expr),
                  std::move(features)};
}

/// The sixteen built-in allocation tasks.
inline const std::vector<TaskSpec>& task_catalog() {
  static const std::vector<TaskSpec> catalog = [] {
    std::vector<TaskSpec> out;
    for (std::size_t i = 0; i < kTaskRows.size(); ++i) {
      const auto& row = kTaskRows[i];
      out.push_back(make_task(static_cast<int>(i), std::string(row.label), std::string(row.prompt),
                              std::string(row.base_reward)));
    }
    return out;
  }();
  return catalog;
}

inline const TaskSpec& task_by_index(int index) {
  const auto& c = task_catalog();
  if (index < 0 || index >= static_cast<int>(c.size()))
    throw ConfigError("unknown task index " + std::to_string(index));
  return c[static_cast<std::size_t>(index)];
}

inline nlohmann::json catalog_to_json(const std::vector<TaskSpec>& tasks) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : tasks) {
    arr.push_back({{"index", t.index},
                   {"label", t.label},
                   {"prompt", t.prompt},
                   {"base_reward", t.base_source},
                   {"base_features", std::vector<int>(t.base_features.begin(), t.base_features.end())}});
  }
  return arr;
}

/// Loads and validates a catalog file: contiguous indices from 0, every base
/// reward parses, and any listed base_features match the parsed expression.
inline std::vector<TaskSpec> load_task_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open task catalog '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("task catalog is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_array() || j.empty()) throw ConfigError("task catalog must be a non-empty array");
  std::vector<TaskSpec> out;
  for (const auto& row : j) {
    try {
      const int index = row.at("index").get<int>();
      if (index != static_cast<int>(out.size())) throw ConfigError("task indices must be contiguous from 0");
      auto task = make_task(index, row.at("label").get<std::string>(), row.at("prompt").get<std::string>(),
                            row.at("base_reward").get<std::string>());
      if (row.contains("base_features")) {
        const auto listed = row.at("base_features").get<std::vector<int>>();
        if (std::set<int>(listed.begin(), listed.end()) != task.base_features)
          throw ConfigError("task " + std::to_string(index) + " base_features disagree with its base reward");
      }
      out.push_back(std::move(task));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("malformed task entry: " + std::string(e.what()));
    }
  }
  return out;
}

}  // namespace dlm
