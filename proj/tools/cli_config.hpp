#pragma once

// Effective configuration for the CLI: built-in defaults, merged with an
// optional JSON file (a plain config or a previous run's manifest), then
// with any flags given on the command line.

#include <chrono>
#include <fstream>
#include <string>

#include "json.hpp"

#include "dlm/dlm.hpp"
#include "dlm/http_backend.hpp"

namespace dlm::cli {

using nlohmann::json;

inline json defaults() {
  const TrainConfig t;
  const EvalProtocol p;
  const PopulationConfig pop;
  const LoopConfig l;
  const HttpConfig h;
  const OracleSuiteConfig o;
  return {
      {"seed", 0},
      {"task", 0},
      {"tasks", "all"},
      {"instance", {{"path", ""}, {"seed", 0}, {"n_arms", 48}, {"budget", 5}}},
      {"population",
       {{"passive_alpha", pop.passive_alpha},
        {"passive_beta", pop.passive_beta},
        {"lift_alpha", pop.lift_alpha},
        {"lift_beta", pop.lift_beta},
        {"stickiness", pop.stickiness},
        {"initial_engaged", pop.initial_engaged},
        {"discount", pop.discount}}},
      {"train",
       {{"epochs", t.epochs},
        {"steps_per_epoch", t.steps_per_epoch},
        {"alpha_q", t.alpha_q},
        {"alpha_lambda", t.alpha_lambda},
        {"epsilon_start", t.epsilon_start},
        {"epsilon_end", t.epsilon_end},
        {"initial_lambda", t.initial_lambda},
        {"replay_sweeps", t.replay_sweeps}}},
      {"protocol", {{"n_seeds", p.n_seeds}, {"trials_per_seed", p.trials_per_seed}, {"steps_per_trial", p.steps_per_trial}}},
      {"loop",
       {{"iterations", l.iterations},
        {"candidates", l.candidates},
        {"retries", l.retries},
        {"analysis_steps", l.analysis_steps},
        {"reflection", true}}},
      {"eval", {{"workers", 1}, {"rewards", ""}, {"methods", "all"}}},
      {"llm",
       {{"backend", ""},
        {"http",
         {{"base_url", h.base_url},
          {"path", h.path},
          {"model", h.model},
          {"api_key_env", h.api_key_env},
          {"timeout_seconds", h.timeout_seconds},
          {"max_concurrent", h.max_concurrent},
          {"max_retries", h.retry.max_retries},
          {"base_delay_ms", h.retry.base_delay.count()}}}}},
      {"oracle",
       {{"cases", o.cases},
        {"support_max", o.support_max},
        {"k_max", o.K_max},
        {"alphas", o.alphas},
        {"non_monotone", o.non_monotone}}},
  };
}

/// Reads a config file; a manifest contributes its "config" object.
inline json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (j.contains("config") && j.contains("command")) return j.at("config");
  return j;
}

template <class T>
T get(const json& cfg, const char* pointer) {
  try {
    return cfg.at(json::json_pointer(pointer)).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config entry ") + pointer + ": " + e.what());
  }
}

inline TrainConfig train_config(const json& c) {
  TrainConfig t;
  t.epochs = get<int>(c, "/train/epochs");
  t.steps_per_epoch = get<int>(c, "/train/steps_per_epoch");
  t.alpha_q = get<double>(c, "/train/alpha_q");
  t.alpha_lambda = get<double>(c, "/train/alpha_lambda");
  t.epsilon_start = get<double>(c, "/train/epsilon_start");
  t.epsilon_end = get<double>(c, "/train/epsilon_end");
  t.initial_lambda = get<double>(c, "/train/initial_lambda");
  t.replay_sweeps = get<int>(c, "/train/replay_sweeps");
  validate(t);
  return t;
}

inline EvalProtocol protocol(const json& c) {
  EvalProtocol p;
  p.n_seeds = get<int>(c, "/protocol/n_seeds");
  p.trials_per_seed = get<int>(c, "/protocol/trials_per_seed");
  p.steps_per_trial = get<int>(c, "/protocol/steps_per_trial");
  validate(p);
  return p;
}

inline PopulationConfig population(const json& c) {
  PopulationConfig p;
  p.passive_alpha = get<double>(c, "/population/passive_alpha");
  p.passive_beta = get<double>(c, "/population/passive_beta");
  p.lift_alpha = get<double>(c, "/population/lift_alpha");
  p.lift_beta = get<double>(c, "/population/lift_beta");
  p.stickiness = get<double>(c, "/population/stickiness");
  p.initial_engaged = get<double>(c, "/population/initial_engaged");
  p.discount = get<double>(c, "/population/discount");
  validate(p);
  return p;
}

inline LoopConfig loop_config(const json& c) {
  LoopConfig l;
  l.iterations = get<int>(c, "/loop/iterations");
  l.candidates = get<int>(c, "/loop/candidates");
  l.retries = get<int>(c, "/loop/retries");
  l.analysis_steps = get<int>(c, "/loop/analysis_steps");
  l.train = train_config(c);
  l.seed = get<std::uint64_t>(c, "/seed");
  validate(l);
  return l;
}

inline HttpConfig http_config(const json& c) {
  HttpConfig h;
  h.base_url = get<std::string>(c, "/llm/http/base_url");
  h.path = get<std::string>(c, "/llm/http/path");
  h.model = get<std::string>(c, "/llm/http/model");
  h.api_key_env = get<std::string>(c, "/llm/http/api_key_env");
  h.timeout_seconds = get<int>(c, "/llm/http/timeout_seconds");
  h.max_concurrent = get<int>(c, "/llm/http/max_concurrent");
  h.retry.max_retries = get<int>(c, "/llm/http/max_retries");
  h.retry.base_delay = std::chrono::milliseconds(get<long long>(c, "/llm/http/base_delay_ms"));
  validate(h);
  return h;
}

inline OracleSuiteConfig oracle_config(const json& c) {
  OracleSuiteConfig o;
  o.cases = get<int>(c, "/oracle/cases");
  o.support_max = get<int>(c, "/oracle/support_max");
  o.K_max = get<int>(c, "/oracle/k_max");
  o.alphas = get<std::vector<double>>(c, "/oracle/alphas");
  o.non_monotone = get<bool>(c, "/oracle/non_monotone");
  o.seed = get<std::uint64_t>(c, "/seed");
  return o;
}

}  // namespace dlm::cli
