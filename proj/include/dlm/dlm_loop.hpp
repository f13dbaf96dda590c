#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dlm/error.hpp"
#include "dlm/llm.hpp"
#include "dlm/outcome.hpp"
#include "dlm/policy.hpp"
#include "dlm/reward_dsl.hpp"
#include "dlm/rmab.hpp"
#include "dlm/rng.hpp"
#include "dlm/tasks.hpp"

namespace dlm {

struct LoopConfig {
  int iterations = 2;
  int candidates = 2;
  int retries = 2;  // extra generation queries per failed slot
  int analysis_steps = kDefaultAnalysisSteps;
  TrainConfig train;
  std::uint64_t seed = 0;
};

inline void validate(const LoopConfig& c) {
  if (c.iterations < 1) throw ConfigError("iterations must be >= 1");
  if (c.candidates < 1) throw ConfigError("candidates must be >= 1");
  if (c.retries < 0) throw ConfigError("retries must be >= 0");
  if (c.analysis_steps < 1) throw ConfigError("analysis_steps must be >= 1");
  validate(c.train);
}

/// Every iteration failed to produce a trainable candidate.
class NoCandidateError : public Error {
 public:
  using Error::Error;
};

struct Attempt {
  std::string response;
  std::string error;  // empty when the response was accepted
};

struct CandidateRecord {
  int slot = 0;
  std::vector<Attempt> attempts;
  std::optional<RewardExpr> reward;
  std::string status;  // selected | trained-not-selected | failed:<reason>
  double lambda = 0.0;
  std::string report;
};

struct IterationRecord {
  int iteration = 0;
  std::string generation_prompt;
  std::vector<CandidateRecord> candidates;
  bool skipped = false;
  std::string reflection_prompt;
  std::string reflection_response;
  std::string reflection_error;
  bool fallback = false;
  int selected = -1;  // slot index
};

struct LoopTrace {
  int task = 0;
  bool reflection = true;
  std::vector<IterationRecord> iterations;
  std::optional<RewardExpr> selected;
  int generation_calls = 0;
  int reflection_calls = 0;
};

struct LoopResult {
  RewardExpr reward;
  PolicyTable policy;
  LoopTrace trace;
};

namespace detail {

struct Trained {
  int slot;
  RewardExpr reward;
  PolicyTable policy;
  OutcomeReport report;
};

/// Queries until a response parses and is defined on every arm, or the
/// retry budget runs out.
inline std::optional<RewardExpr> generate_candidate(LlmBackend& backend, const std::string& prompt,
                                                    const RmabInstance& inst, int retries, CandidateRecord& rec,
                                                    int& calls, int iteration) {
  for (int attempt = 0; attempt <= retries; ++attempt) {
    Attempt a;
    try {
      ++calls;
      a.response = backend.complete(prompt, kGenerationTemperature);
    } catch (const LlmError& e) {
      throw LlmError("iteration " + std::to_string(iteration) + " candidate " + std::to_string(rec.slot) + ": " +
                     e.what());
    }
    try {
      RewardExpr expr = parse_generation_response(a.response);
      (void)make_reward_table(expr, inst);
      rec.attempts.push_back(std::move(a));
      return expr;
    } catch (const Error& e) {
      a.error = e.what();
      rec.attempts.push_back(std::move(a));
    }
  }
  return std::nullopt;
}

inline int fallback_choice(const std::vector<Trained>& trained, const TaskSpec& task) {
  int best = 0;
  for (std::size_t i = 1; i < trained.size(); ++i)
    if (targeted_share(trained[i].report, task.base_features) >
        targeted_share(trained[static_cast<std::size_t>(best)].report, task.base_features))
      best = static_cast<int>(i);
  return best;
}

inline LoopResult run_loop(const TaskSpec& task, const RmabInstance& inst, LlmBackend& backend,
                           const LoopConfig& config, bool reflect) {
  validate(config);
  validate(inst);
  const TabularQTrainer trainer(config.train);
  LoopTrace trace;
  trace.task = task.index;
  trace.reflection = reflect;
  std::vector<RewardExpr> zeta;
  std::optional<Trained> winner;

  for (int it = 0; it < config.iterations; ++it) {
    IterationRecord rec;
    rec.iteration = it;
    rec.generation_prompt = build_generation_prompt(task, zeta);
    std::vector<Trained> trained;
    for (int c = 0; c < config.candidates; ++c) {
      CandidateRecord cand;
      cand.slot = c;
      auto expr = generate_candidate(backend, rec.generation_prompt, inst, config.retries, cand,
                                     trace.generation_calls, it);
      if (!expr) {
        cand.status = "failed:" + cand.attempts.back().error;
        rec.candidates.push_back(std::move(cand));
        continue;
      }
      const auto coords = {static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(c)};
      PolicyTable policy = trainer.train(inst, *expr, derive_seed(config.seed, "candidate", coords));
      Rng analysis_rng(derive_seed(config.seed, "analysis", coords));
      OutcomeReport report = analyze(policy, inst, config.analysis_steps, analysis_rng);
      cand.reward = *expr;
      cand.lambda = policy.lambda;
      cand.report = report.rendered;
      cand.status = "trained-not-selected";
      rec.candidates.push_back(std::move(cand));
      trained.push_back(Trained{c, *expr, std::move(policy), std::move(report)});
    }
    if (trained.empty()) {
      rec.skipped = true;
      trace.iterations.push_back(std::move(rec));
      continue;
    }

    int pick = 0;
    if (reflect) {
      std::vector<ReflectionCandidate> shown;
      for (const auto& t : trained) shown.push_back({t.reward, t.report.rendered});
      rec.reflection_prompt = build_reflection_prompt(task, shown);
      ++trace.reflection_calls;
      try {
        rec.reflection_response = backend.complete(rec.reflection_prompt, kReflectionTemperature);
      } catch (const LlmError& e) {
        throw LlmError("iteration " + std::to_string(it) + " reflection: " + e.what());
      }
      try {
        pick = parse_reflection_response(rec.reflection_response, static_cast<int>(trained.size()));
      } catch (const ResponseError& e) {
        rec.reflection_error = e.what();
        rec.fallback = true;
        pick = fallback_choice(trained, task);
      }
    }
    Trained& chosen = trained[static_cast<std::size_t>(pick)];
    rec.selected = chosen.slot;
    rec.candidates[static_cast<std::size_t>(chosen.slot)].status = "selected";
    zeta.push_back(chosen.reward);
    winner = std::move(chosen);
    trace.iterations.push_back(std::move(rec));
  }

  if (!winner) throw NoCandidateError("no candidate reward could be trained in any iteration");
  trace.selected = winner->reward;
  return LoopResult{winner->reward, std::move(winner->policy), std::move(trace)};
}

}  // namespace detail

/// Generate, train, analyze and reflect for `config.iterations` rounds;
/// each round's winner joins the prompt context of the next.
inline LoopResult run(const TaskSpec& task, const RmabInstance& inst, LlmBackend& backend, const LoopConfig& config) {
  return detail::run_loop(task, inst, backend, config, true);
}

/// One generation query (plus retries), no reflection.
inline LoopResult run_no_reflection(const TaskSpec& task, const RmabInstance& inst, LlmBackend& backend,
                                    LoopConfig config) {
  config.iterations = 1;
  config.candidates = 1;
  return detail::run_loop(task, inst, backend, config, false);
}

inline nlohmann::json to_json(const LoopTrace& t) {
  nlohmann::json its = nlohmann::json::array();
  for (const auto& r : t.iterations) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : r.candidates) {
      nlohmann::json attempts = nlohmann::json::array();
      for (const auto& a : c.attempts) attempts.push_back({{"response", a.response}, {"error", a.error}});
      nlohmann::json jc = {{"slot", c.slot}, {"attempts", attempts}, {"status", c.status}};
      if (c.reward) {
        jc["reward"] = dsl::render(*c.reward);
        jc["lambda"] = c.lambda;
        jc["report"] = c.report;
      }
      cands.push_back(std::move(jc));
    }
    nlohmann::json jr = {{"iteration", r.iteration},
                         {"generation_prompt", r.generation_prompt},
                         {"candidates", cands},
                         {"skipped", r.skipped}};
    if (!r.skipped) {
      jr["selected"] = r.selected;
      if (t.reflection) {
        jr["reflection_prompt"] = r.reflection_prompt;
        jr["reflection_response"] = r.reflection_response;
        jr["reflection_error"] = r.reflection_error;
        jr["fallback"] = r.fallback;
      }
    }
    its.push_back(std::move(jr));
  }
  nlohmann::json j = {{"task", t.task},
                      {"reflection", t.reflection},
                      {"iterations", its},
                      {"generation_calls", t.generation_calls},
                      {"reflection_calls", t.reflection_calls}};
  j["selected"] = t.selected ? nlohmann::json(dsl::render(*t.selected)) : nlohmann::json(nullptr);
  return j;
}

}  // namespace dlm
