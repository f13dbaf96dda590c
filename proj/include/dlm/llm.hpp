#pragma once

#include <cctype>
#include <fstream>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dlm/error.hpp"
#include "dlm/features.hpp"
#include "dlm/reward_dsl.hpp"
#include "dlm/tasks.hpp"

namespace dlm {

inline constexpr double kGenerationTemperature = 0.7;
inline constexpr double kReflectionTemperature = 0.0;

inline constexpr std::string_view kPriorsHeader = "Here are your best previous attempts:";
inline constexpr std::string_view kAnswerPhrase = "The best reward function is at index:";

// ---------------------------------------------------------------------------
// Prompts

/// " 7. Ages 10-20 - Binary" lines for the visible features. `indent` is
/// prepended to each line.
inline std::string feature_catalog(std::string_view indent) {
  std::string out;
  for (std::size_t k = kFirstVisibleFeature; k < kNumFeatures; ++k) {
    out += indent;
    out += std::to_string(k);
    out += ". ";
    out += kFeatureNames[k];
    out += " - Binary\n";
  }
  return out;
}

inline std::string build_generation_prompt(const TaskSpec& task, const std::vector<RewardExpr>& prior_best) {
  std::string p;
  p += "Create a Python reward function for RL in phone call resource allocation to mothers in India, with the "
       "objective of prioritizing higher states and: ";
  p += task.prompt;
  p += ". The function should use 'state' (value is either 0,1) and features 'agent_feats' (length 43 array) to "
       "direct the RL agent. Here is a description of the features you may use:\n";
  p += "Index Name DataType\n[sensitive feature hidden]\n";
  p += feature_catalog(" ");
  p += " Your task:\n";
  p += "1. Write a simple, single-line Python reward function. Exclude the word 'return' and exclude non-standard "
       "libraries. Format your code with triple $ signs: $$$[YOUR FUNCTION]$$$.\n";
  p += "2. Provide an explanation on how this function prioritizes the specified group. Format your explanation "
       "with triple # signs: ###[YOUR EXPLANATION]###.\n";
  p += "Note that HIGHER states are always preferred, so ensure reward increases as state increases. Make sure "
       "reward is always positive and increasing with state. Avoid using bitwise operators &, |. Using and, or "
       "instead.\n";
  p += "Example Prompt: While prioritizing all, emphasize agents that are both older and richer\n";
  p += "Let's think about this step by step. We want to give reward only for agents that are older, which "
       "corresponds to feature 11, and rich which corresponds to feature 42. This corresponds to a condition of "
       "(agent_feats[11] and agent_feats[42]). In addition, we always only want to give reward when the state is "
       "1, since the agent gets reward only when it is in a listening state. Therefore, our reward function should "
       "be: state * (agent_feats[11] and agent_feats[42]).\n";
  p += "Example Response:\n";
  p += "Python Code: '$$$ state * 0.1 + 2 * state * (agent_feats[11] and agent_feats[42]) $$$'\n";
  p += "Explanation: ###This function rewards engaged agents, with a larger bonus for those in the oldest age "
       "group and the richest income bracket.###\n";
  p += "Come up with a unique new reward for the specified goal: ";
  p += task.prompt;
  p += ". ";
  p += kPriorsHeader;
  p += '\n';
  for (const auto& r : prior_best) {
    p += dsl::render(r);
    p += '\n';
  }
  return p;
}

struct ReflectionCandidate {
  RewardExpr reward;
  std::string report;  // rendered outcome distribution
};

inline std::string build_reflection_prompt(const TaskSpec& task, const std::vector<ReflectionCandidate>& candidates) {
  if (candidates.empty()) throw ConfigError("reflection needs at least one candidate");
  std::string p;
  p += "My goal was to create a Python reward function for RL in resource allocation, with the objective of: ";
  p += task.prompt;
  p += " I tried several reward functions for this task. Below, I have the given reward function, and the "
       "corresponding distribution of reward achieved across 43 agent features. A description of the features "
       "is as follows:\n";
  p += "Index Name DataType\n[sensitive features hidden]\n";
  p += feature_catalog("");
  p += "\n\nBelow are the reward functions I used and their corresponding reward distributions:\n";
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    p += "\nIndex " + std::to_string(i) + ":\n";
    p += "Reward Function: " + dsl::render(candidates[i].reward) + "\n";
    p += "Reflection:\n'\n\n";
    p += candidates[i].report;
    p += "'\n";
  }
  p += "\n\nBased on the above reward distributions and the given goal: ";
  p += task.prompt;
  p += ", please identify the index of the most effective reward function. Provide your answer EXACTLY IN the "
       "following format: '";
  p += kAnswerPhrase;
  p += " [INDEX]'.\n";
  return p;
}

// ---------------------------------------------------------------------------
// Responses

/// First `$$$ ... $$$` payload, parsed. Rejects the hidden feature indices.
inline RewardExpr parse_generation_response(std::string_view text) {
  constexpr std::string_view fence = "$$$";
  const auto open = text.find(fence);
  if (open == std::string_view::npos) throw ResponseError("response has no $$$ delimited reward");
  const auto close = text.find(fence, open + fence.size());
  if (close == std::string_view::npos) throw ResponseError("response has an unterminated $$$ block");
  std::string_view body = text.substr(open + fence.size(), close - open - fence.size());
  while (!body.empty() && std::isspace(static_cast<unsigned char>(body.front()))) body.remove_prefix(1);
  while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back()))) body.remove_suffix(1);
  RewardExpr expr = dsl::parse(body);
  for (int k : dsl::used_features(expr))
    if (k < static_cast<int>(kFirstVisibleFeature))
      throw ResponseError("reward uses hidden feature " + std::to_string(k));
  return expr;
}

/// Integer after the answer phrase; must lie in [0, k).
inline int parse_reflection_response(std::string_view text, int k) {
  if (k < 1) throw ConfigError("candidate count must be >= 1");
  const auto at = text.find(kAnswerPhrase);
  if (at == std::string_view::npos) throw ResponseError("reflection answer lacks the index phrase");
  std::size_t i = at + kAnswerPhrase.size();
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  if (i < text.size() && text[i] == '[') ++i;
  const std::size_t digits = i;
  long long value = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    value = value * 10 + (text[i] - '0');
    if (value > 1'000'000) break;
    ++i;
  }
  if (i == digits) throw ResponseError("reflection answer has no index after the phrase");
  if (value >= k) throw ResponseError("reflection index " + std::to_string(value) + " out of range [0, " +
                                      std::to_string(k) + ")");
  return static_cast<int>(value);
}

// ---------------------------------------------------------------------------
// Backends

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string complete(const std::string& prompt, double temperature) = 0;
  /// Non-secret description for manifests.
  virtual nlohmann::json describe() const = 0;
};

/// Replays a fixed list of responses in order and records every prompt.
class ScriptedBackend final : public LlmBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> responses, std::string source = "inline")
      : responses_(std::move(responses)), source_(std::move(source)) {}

  /// Reads a JSON array of strings.
  static ScriptedBackend from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open transcript '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
      return ScriptedBackend(j.get<std::vector<std::string>>(), path);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("transcript must be a JSON array of strings: " + std::string(e.what()));
    }
  }

  std::string complete(const std::string& prompt, double) override {
    if (next_ >= responses_.size())
      throw LlmError("scripted transcript exhausted after " + std::to_string(responses_.size()) + " responses");
    prompts_.push_back(prompt);
    return responses_[next_++];
  }

  nlohmann::json describe() const override {
    return {{"kind", "scripted"}, {"transcript", source_}, {"responses", responses_.size()}};
  }

  const std::vector<std::string>& prompts() const { return prompts_; }
  std::size_t remaining() const { return responses_.size() - next_; }

 private:
  std::vector<std::string> responses_;
  std::string source_;
  std::size_t next_ = 0;
  std::vector<std::string> prompts_;
};

}  // namespace dlm
