#pragma once

// Markdown renderings of run traces and evaluation tables. Both work from
// the JSON artifacts so `dlm report` can regenerate them offline.

#include <cstdio>
#include <sstream>
#include <string>

#include "json.hpp"

#include "dlm/dlm.hpp"

namespace dlm::cli {

using nlohmann::json;

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string pvalue(double p) {
  if (p < 1e-4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", p);
    return buf;
  }
  return fixed(p, 4);
}

inline std::string run_report(const json& trace) {
  const int index = trace.at("task").get<int>();
  const TaskSpec& task = task_by_index(index);
  std::ostringstream md;
  md << "# Run report: task " << index << " (" << task.label << ")\n\n";
  md << "Prompt: " << task.prompt << "\n\n";
  md << "Mode: " << (trace.at("reflection").get<bool>() ? "reflection" : "no reflection") << "  \n";
  md << "LLM calls: " << trace.at("generation_calls").get<int>() << " generation, "
     << trace.at("reflection_calls").get<int>() << " reflection\n\n";
  for (const auto& it : trace.at("iterations")) {
    md << "## Iteration " << it.at("iteration").get<int>() << "\n\n";
    if (it.at("skipped").get<bool>()) md << "All candidates failed; iteration skipped.\n\n";
    for (const auto& c : it.at("candidates")) {
      md << "### Candidate " << c.at("slot").get<int>() << " (" << c.at("status").get<std::string>() << ")\n\n";
      if (c.contains("reward")) {
        md << "Reward: `" << c.at("reward").get<std::string>() << "`  \n";
        md << "Action charge: " << fixed(c.at("lambda").get<double>(), 4) << "\n\n";
        md << "```\n" << c.at("report").get<std::string>() << "```\n\n";
      }
      const auto& attempts = c.at("attempts");
      for (std::size_t a = 0; a < attempts.size(); ++a) {
        const auto err = attempts[a].at("error").get<std::string>();
        if (!err.empty()) md << "- attempt " << a << " rejected: " << err << "\n";
      }
      if (!attempts.empty() && !attempts.back().at("error").get<std::string>().empty()) md << "\n";
    }
    if (!it.at("skipped").get<bool>() && it.contains("fallback") && it.at("fallback").get<bool>())
      md << "Reflection answer unusable (" << it.at("reflection_error").get<std::string>()
         << "); fell back to the largest targeted-group share.\n\n";
    if (!it.at("skipped").get<bool>()) md << "Selected candidate: " << it.at("selected").get<int>() << "\n\n";
  }
  md << "## Result\n\n";
  if (trace.at("selected").is_null()) {
    md << "No reward selected.\n";
    return md.str();
  }
  const auto selected = trace.at("selected").get<std::string>();
  md << "Selected reward: `" << selected << "`  \n";
  md << "Base reward: `" << dsl::render(task.base_reward) << "`  \n";
  const auto pr = feature_precision_recall(dsl::parse(selected), task);
  md << "Feature precision " << fixed(pr.precision, 3) << ", recall " << fixed(pr.recall, 3) << "\n";
  return md.str();
}

inline std::string eval_report(const json& results) {
  std::ostringstream md;
  md << "# Evaluation report\n\n";
  const auto& cfg = results.at("config");
  md << "Seeds " << cfg.at("/protocol/n_seeds"_json_pointer).get<int>() << ", trials per seed "
     << cfg.at("/protocol/trials_per_seed"_json_pointer).get<int>() << ", steps per trial "
     << cfg.at("/protocol/steps_per_trial"_json_pointer).get<int>() << ". Cells show MNR IQM ± SE.\n\n";
  const auto& tasks = results.at("tasks");
  if (tasks.empty()) return md.str();
  const auto methods = tasks.at(0).at("method_order").get<std::vector<std::string>>();
  md << "| Idx | Label |";
  for (const auto& m : methods) md << " " << m << " |";
  md << "\n|---|---|";
  for (std::size_t i = 0; i < methods.size(); ++i) md << "---|";
  md << "\n";
  for (const auto& t : tasks) {
    md << "| " << t.at("task").get<int>() << " | " << t.at("label").get<std::string>() << " |";
    for (const auto& m : methods) {
      const auto& r = t.at("methods").at(m);
      md << " " << fixed(r.at("iqm").get<double>(), 3) << " ± " << fixed(r.at("standard_error").get<double>(), 3)
         << " |";
    }
    md << "\n";
  }
  md << "\n## One-tailed t-tests\n\np-values for H1: mean(A) > mean(B), on per-seed MNR and on raw base reward.\n\n";
  md << "| Idx | A | B | p (MNR) | p (raw) |\n|---|---|---|---|---|\n";
  for (const auto& t : tasks)
    for (const auto& tt : t.at("ttests"))
      md << "| " << t.at("task").get<int>() << " | " << tt.at("a").get<std::string>() << " | "
         << tt.at("b").get<std::string>() << " | " << pvalue(tt.at("p_mnr").get<double>()) << " | "
         << pvalue(tt.at("p_raw").get<double>()) << " |\n";
  md << "\n## Budget audit\n\n";
  std::uint64_t steps = 0, violations = 0;
  for (const auto& t : tasks) {
    steps += t.at("/audit/steps"_json_pointer).get<std::uint64_t>();
    violations += t.at("/audit/violations"_json_pointer).get<std::uint64_t>();
  }
  md << violations << " budget violations in " << steps << " evaluation steps.\n";
  return md.str();
}

}  // namespace dlm::cli
