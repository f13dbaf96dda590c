#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "dlm/error.hpp"
#include "dlm/features.hpp"
#include "dlm/policy.hpp"
#include "dlm/rmab.hpp"
#include "dlm/rng.hpp"

namespace dlm {

/// 50 trials of 10 steps, run back to back.
inline constexpr int kDefaultAnalysisSteps = 500;

/// Share of accumulated engaged states per demographic group.
struct OutcomeReport {
  std::vector<std::uint64_t> totals;  // S_n: steps arm n spent in state 1
  std::array<double, kNumFeatures> percent{};  // per feature index; 0 for hidden indices
  std::uint64_t total = 0;
  std::string rendered;

  bool empty() const { return total == 0; }
};

/// Rolls the policy forward from the instance's initial states with
/// budgeted eval-mode actions, adding the current state vector to S before
/// each transition.
inline std::vector<std::uint64_t> accumulate(const PolicyTable& policy, const RmabInstance& inst, int n_steps,
                                             Rng& rng) {
  if (n_steps < 1) throw ConfigError("analysis needs at least one step");
  if (policy.size() != inst.size()) throw ConfigError("policy and instance sizes differ");
  std::vector<std::uint64_t> totals(inst.size(), 0);
  StateVector states = inst.initial_states();
  StateVector next;
  ActionVector actions;
  std::vector<std::size_t> scratch;
  for (int t = 0; t < n_steps; ++t) {
    select_actions_into(policy, states, inst.budget, ActionMode::kEval, rng, 0.0, actions, scratch);
    for (std::size_t i = 0; i < states.size(); ++i) totals[i] += states[i];
    step_into(inst, states, actions, rng, next);
    states.swap(next);
  }
  return totals;
}

/// 100 * (S summed over arms carrying the feature) / (S summed over all arms).
inline OutcomeReport distributions(std::vector<std::uint64_t> totals, const RmabInstance& inst) {
  if (totals.size() != inst.size()) throw ConfigError("totals and instance sizes differ");
  OutcomeReport r;
  r.totals = std::move(totals);
  std::array<std::uint64_t, kNumFeatures> by_feature{};
  for (std::size_t n = 0; n < inst.size(); ++n) {
    r.total += r.totals[n];
    for (std::size_t k = kFirstVisibleFeature; k < kNumFeatures; ++k)
      if (inst.arms[n].features[k]) by_feature[k] += r.totals[n];
  }
  if (r.total > 0)
    for (std::size_t k = kFirstVisibleFeature; k < kNumFeatures; ++k)
      r.percent[k] = 100.0 * static_cast<double>(by_feature[k]) / static_cast<double>(r.total);
  return r;
}

inline constexpr const char* kNoPositiveStates = "No positive states observed.";

inline std::string render(const OutcomeReport& report) {
  std::string out = "[sensitive features hidden]\n";
  if (report.empty()) out += std::string(kNoPositiveStates) + "\n";
  char buf[32];
  for (Category c : kReportOrder) {
    const auto& block = block_of(c);
    out += "\nCategory: ";
    out += block.title;
    out += '\n';
    for (std::size_t k = block.first; k <= block.last; ++k) {
      std::snprintf(buf, sizeof buf, "%.2f%%", report.percent[k]);
      out += kOutcomeLabels[k];
      out += ": ";
      out += buf;
      out += '\n';
    }
  }
  return out;
}

inline OutcomeReport analyze(const PolicyTable& policy, const RmabInstance& inst, int n_steps, Rng& rng) {
  OutcomeReport r = distributions(accumulate(policy, inst, n_steps, rng), inst);
  r.rendered = render(r);
  return r;
}

/// Sum of the percentages of the listed feature groups.
inline double targeted_share(const OutcomeReport& report, const std::set<int>& features) {
  double s = 0.0;
  for (int k : features)
    if (k >= 0 && static_cast<std::size_t>(k) < kNumFeatures) s += report.percent[static_cast<std::size_t>(k)];
  return s;
}

inline nlohmann::json to_json(const OutcomeReport& r) {
  nlohmann::json cats = nlohmann::json::object();
  for (Category c : kReportOrder) {
    const auto& block = block_of(c);
    nlohmann::json groups = nlohmann::json::object();
    for (std::size_t k = block.first; k <= block.last; ++k) groups[std::string(kOutcomeLabels[k])] = r.percent[k];
    cats[std::string(block.title)] = groups;
  }
  return {{"totals", r.totals}, {"total", r.total}, {"distributions", cats}, {"rendered", r.rendered}};
}

}  // namespace dlm
