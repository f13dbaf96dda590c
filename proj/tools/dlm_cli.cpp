// dlm: instance generation, reward-design loop runs, evaluation sweeps,
// grid-search verification and report rendering.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cli_config.hpp"
#include "dlm/dlm.hpp"
#include "dlm/http_backend.hpp"
#include "report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBackend = 3;
constexpr int kExitFailure = 4;

/// Flags that override a config entry only when given.
class Overrides {
 public:
  template <class T>
  void bind(CLI::App* app, const std::string& flag, const std::string& pointer, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help + " [" + pointer + "]");
    apply_.push_back([opt, value, pointer](json& cfg) {
      if (opt->count() > 0) cfg[json::json_pointer(pointer)] = *value;
    });
  }

  void bind_flag(CLI::App* app, const std::string& flag, const std::string& pointer, bool value_when_set,
                 const std::string& help) {
    CLI::Option* opt = app->add_flag(flag, help);
    apply_.push_back([opt, pointer, value_when_set](json& cfg) {
      if (opt->count() > 0) cfg[json::json_pointer(pointer)] = value_when_set;
    });
  }

  void apply(json& cfg) const {
    for (const auto& f : apply_) f(cfg);
  }

 private:
  std::vector<std::function<void(json&)>> apply_;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dlm::ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw dlm::ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

struct Context {
  std::string config_path;
  Overrides overrides;
  std::string started_at;

  json effective() const {
    json cfg = dlm::cli::defaults();
    if (!config_path.empty()) cfg.merge_patch(dlm::cli::load_config_file(config_path));
    overrides.apply(cfg);
    return cfg;
  }
};

json manifest(const std::string& command, const json& cfg, const json& backend, const json& artifacts,
              const std::string& started_at) {
  return {{"tool", "dlm"},
          {"version", dlm::kVersion},
          {"command", command},
          {"config", cfg},
          {"backend", backend},
          {"artifacts", artifacts},
          {"started_at", started_at},
          {"finished_at", utc_now()}};
}

dlm::RmabInstance load_or_generate(const json& cfg) {
  const auto path = dlm::cli::get<std::string>(cfg, "/instance/path");
  if (!path.empty()) return dlm::instance_from_json(read_json(path));
  return dlm::generate_instance(dlm::cli::get<std::uint64_t>(cfg, "/instance/seed"),
                                dlm::cli::get<int>(cfg, "/instance/n_arms"),
                                dlm::cli::get<int>(cfg, "/instance/budget"), dlm::cli::population(cfg));
}

std::unique_ptr<dlm::LlmBackend> make_backend(const json& cfg) {
  const auto spec = dlm::cli::get<std::string>(cfg, "/llm/backend");
  constexpr std::string_view scripted = "scripted:";
  if (spec.rfind(scripted, 0) == 0)
    return std::make_unique<dlm::ScriptedBackend>(dlm::ScriptedBackend::from_file(spec.substr(scripted.size())));
  if (spec == "http") return std::make_unique<dlm::HttpBackend>(dlm::cli::http_config(cfg));
  throw dlm::ConfigError("--llm must be 'scripted:<path>' or 'http' (got '" + spec + "')");
}

std::vector<int> task_list(const json& cfg) {
  const auto& v = cfg.at("tasks");
  std::vector<int> out;
  if (v.is_array()) {
    out = v.get<std::vector<int>>();
  } else {
    const auto s = v.get<std::string>();
    if (s == "all") {
      for (const auto& t : dlm::task_catalog()) out.push_back(t.index);
    } else {
      std::stringstream ss(s);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          out.push_back(std::stoi(item));
        } catch (const std::exception&) {
          throw dlm::ConfigError("bad task list entry '" + item + "'");
        }
      }
    }
  }
  if (out.empty()) throw dlm::ConfigError("no tasks selected");
  for (int t : out) (void)dlm::task_by_index(t);
  return out;
}

// ---------------------------------------------------------------------------

int cmd_gen(const Context& ctx, const std::string& out_path) {
  const json cfg = ctx.effective();
  const auto inst = dlm::generate_instance(dlm::cli::get<std::uint64_t>(cfg, "/instance/seed"),
                                           dlm::cli::get<int>(cfg, "/instance/n_arms"),
                                           dlm::cli::get<int>(cfg, "/instance/budget"), dlm::cli::population(cfg));
  const fs::path out(out_path);
  write_file(out, dump(dlm::to_json(inst)));
  fs::path mpath = out;
  mpath.replace_extension(".manifest.json");
  write_file(mpath, dump(manifest("gen", cfg, nullptr, {{"instance", out.filename().string()}}, ctx.started_at)));
  int engaged = 0;
  for (const auto& a : inst.arms) engaged += a.state;
  std::cout << "wrote " << out.string() << ": " << inst.size() << " arms, budget " << inst.budget << ", discount "
            << inst.discount << ", seed " << inst.rng_seed << ", " << engaged << " initially engaged\n";
  return kExitOk;
}

int cmd_run(const Context& ctx, const std::string& out_dir) {
  const json cfg = ctx.effective();
  const dlm::TaskSpec& task = dlm::task_by_index(dlm::cli::get<int>(cfg, "/task"));
  const auto inst = load_or_generate(cfg);
  const auto loop = dlm::cli::loop_config(cfg);
  auto backend = make_backend(cfg);
  const bool reflect = dlm::cli::get<bool>(cfg, "/loop/reflection");
  const auto result = reflect ? dlm::run(task, inst, *backend, loop) : dlm::run_no_reflection(task, inst, *backend, loop);

  const fs::path dir(out_dir);
  const json trace = dlm::to_json(result.trace);
  const std::string selected = dlm::dsl::render(result.reward);
  write_file(dir / "trace.json", dump(trace));
  write_file(dir / "policy.json", dump(dlm::to_json(result.policy)));
  write_file(dir / "rewards.json",
             dump({{reflect ? "dlm" : "dlm_no_reflection", {{std::to_string(task.index), selected}}}}));
  write_file(dir / "report.md", dlm::cli::run_report(trace));
  const json artifacts = {
      {"trace", "trace.json"}, {"policy", "policy.json"}, {"rewards", "rewards.json"}, {"report", "report.md"}};
  write_file(dir / "manifest.json", dump(manifest("run", cfg, backend->describe(), artifacts, ctx.started_at)));
  std::cout << "task " << task.index << " (" << task.label << "): selected " << selected << "\n";
  return kExitOk;
}

int cmd_eval(const Context& ctx, const std::string& out_dir) {
  const json cfg = ctx.effective();
  dlm::SweepConfig sweep;
  sweep.protocol = dlm::cli::protocol(cfg);
  sweep.train = dlm::cli::train_config(cfg);
  sweep.population = dlm::cli::population(cfg);
  sweep.n_arms = dlm::cli::get<int>(cfg, "/instance/n_arms");
  sweep.budget = dlm::cli::get<int>(cfg, "/instance/budget");
  sweep.seed = dlm::cli::get<std::uint64_t>(cfg, "/seed");
  sweep.workers = dlm::cli::get<int>(cfg, "/eval/workers");
  if (sweep.workers < 1) throw dlm::ConfigError("workers must be >= 1");
  const auto tasks = task_list(cfg);

  json rewards = json::object();
  const auto rewards_path = dlm::cli::get<std::string>(cfg, "/eval/rewards");
  if (!rewards_path.empty()) rewards = read_json(rewards_path);
  std::vector<std::string> wanted;
  const auto methods = dlm::cli::get<std::string>(cfg, "/eval/methods");
  if (methods == "all") {
    for (const auto& [name, _] : rewards.items()) wanted.push_back(name);
  } else {
    std::stringstream ss(methods);
    for (std::string m; std::getline(ss, m, ',');)
      if (!m.empty()) wanted.push_back(m);
  }

  json out_tasks = json::array();
  std::uint64_t violations = 0;
  for (int t : tasks) {
    const auto& task = dlm::task_by_index(t);
    std::vector<dlm::Method> extra;
    for (const auto& m : wanted) {
      const auto key = std::to_string(t);
      if (!rewards.contains(m) || !rewards.at(m).contains(key))
        throw std::runtime_error("missing reward for method '" + m + "' on task " + key);
      extra.push_back(dlm::trained_method(m, dlm::dsl::parse(rewards.at(m).at(key).get<std::string>()), sweep.train));
    }
    const auto res = dlm::sweep_task(task, sweep, extra);
    violations += res.audit.violations;

    json jm = json::object();
    for (const auto& name : res.methods) {
      const auto& r = res.mnr.at(name);
      jm[name] = {{"iqm", r.iqm},
                  {"standard_error", r.standard_error},
                  {"raw", res.raw.at(name)},
                  {"normalized", r.normalized},
                  {"excluded_seeds", r.excluded}};
    }
    auto ttest = [&](const std::string& a, const std::string& b) {
      return json{{"a", a},
                  {"b", b},
                  {"p_mnr", dlm::one_tailed_t(res.mnr.at(a).normalized, res.mnr.at(b).normalized)},
                  {"p_raw", dlm::one_tailed_t(res.raw.at(a), res.raw.at(b))}};
    };
    json tt = json::array({ttest(dlm::kBase, dlm::kRandom), ttest(dlm::kBase, dlm::kDefault)});
    for (const auto& m : wanted) {
      tt.push_back(ttest(m, dlm::kDefault));
      tt.push_back(ttest(m, dlm::kRandom));
    }
    out_tasks.push_back({{"task", t},
                         {"label", task.label},
                         {"method_order", res.methods},
                         {"methods", jm},
                         {"ttests", tt},
                         {"audit", {{"steps", res.audit.steps}, {"violations", res.audit.violations}}}});
    std::cout << "task " << t << " (" << task.label << "):";
    for (const auto& name : res.methods) std::cout << " " << name << "=" << dlm::cli::fixed(res.mnr.at(name).iqm, 3);
    std::cout << "\n";
  }

  const json results = {{"config", cfg}, {"tasks", out_tasks}};
  const fs::path dir(out_dir);
  write_file(dir / "results.json", dump(results));
  write_file(dir / "results.md", dlm::cli::eval_report(results));
  write_file(dir / "manifest.json", dump(manifest("eval", cfg, nullptr,
                                                  {{"results", "results.json"}, {"report", "results.md"}},
                                                  ctx.started_at)));
  if (violations > 0) {
    std::cerr << "budget violated in " << violations << " evaluation steps\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_oracle(const Context& ctx, const std::string& out_path) {
  const json cfg = ctx.effective();
  const auto oc = dlm::cli::oracle_config(cfg);
  const auto rep = dlm::run_oracle_suite(oc);
  json cells = json::array();
  for (const auto& c : rep.cells)
    cells.push_back({{"support", c.support}, {"K", c.K}, {"cases", c.cases}, {"mean_calls", c.mean_calls}});
  const json report = {{"cases", rep.cases},
                       {"mismatches", rep.mismatches},
                       {"non_monotone", oc.non_monotone},
                       {"cells", cells},
                       {"slope", rep.slope},
                       {"intercept", rep.intercept},
                       {"r_squared", rep.r_squared}};
  std::cout << "cases " << rep.cases << ", mismatches " << rep.mismatches
            << (oc.non_monotone ? " (non-monotone valuations, informational)" : "") << "\n";
  std::cout << "mean oracle calls ~ " << dlm::cli::fixed(rep.slope, 3) << " * support * K + "
            << dlm::cli::fixed(rep.intercept, 3) << " (R^2 " << dlm::cli::fixed(rep.r_squared, 4) << ")\n";
  if (!out_path.empty()) {
    const fs::path out(out_path);
    write_file(out, dump(report));
    fs::path mpath = out;
    mpath.replace_extension(".manifest.json");
    write_file(mpath, dump(manifest("oracle", cfg, nullptr, {{"report", out.filename().string()}}, ctx.started_at)));
  }
  return (!oc.non_monotone && rep.mismatches > 0) ? kExitFailure : kExitOk;
}

int cmd_report(const std::string& input, const std::string& out_path) {
  const json j = read_json(input);
  std::string md;
  if (j.contains("iterations"))
    md = dlm::cli::run_report(j);
  else if (j.contains("tasks"))
    md = dlm::cli::eval_report(j);
  else
    throw dlm::ConfigError("'" + input + "' is neither a run trace nor an evaluation result");
  if (out_path.empty())
    std::cout << md;
  else
    write_file(out_path, md);
  return kExitOk;
}

void add_training_flags(CLI::App* app, Overrides& ov) {
  ov.bind<int>(app, "--epochs", "/train/epochs", "Training epochs");
  ov.bind<int>(app, "--steps-per-epoch", "/train/steps_per_epoch", "Simulator steps per epoch");
  ov.bind<int>(app, "--replay-sweeps", "/train/replay_sweeps", "Passes over the transition buffer per epoch");
  ov.bind<double>(app, "--alpha-q", "/train/alpha_q", "Q learning rate");
  ov.bind<double>(app, "--alpha-lambda", "/train/alpha_lambda", "Action-charge learning rate");
}

void add_instance_flags(CLI::App* app, Overrides& ov) {
  ov.bind<std::uint64_t>(app, "--instance-seed", "/instance/seed", "Seed of the generated instance");
  ov.bind<int>(app, "--arms", "/instance/n_arms", "Number of arms");
  ov.bind<int>(app, "--budget", "/instance/budget", "Arms acted on per step");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Language-directed reward design for restless bandits"};
  app.set_version_flag("--version", dlm::kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  Context ctx;
  ctx.started_at = utc_now();
  app.add_option("--config", ctx.config_path, "JSON config or a previous manifest; flags take precedence");

  std::string gen_out = "instance.json";
  auto* gen = app.add_subcommand("gen", "Generate a synthetic arm population");
  ctx.overrides.bind<std::uint64_t>(gen, "--seed", "/instance/seed", "Population seed");
  ctx.overrides.bind<int>(gen, "--arms", "/instance/n_arms", "Number of arms");
  ctx.overrides.bind<int>(gen, "--budget", "/instance/budget", "Arms acted on per step");
  gen->add_option("--out", gen_out, "Instance file to write");

  std::string run_dir;
  auto* run = app.add_subcommand("run", "Run the generate/train/reflect loop for one task");
  ctx.overrides.bind<int>(run, "--task", "/task", "Task index 0-15");
  ctx.overrides.bind<std::string>(run, "--instance", "/instance/path", "Instance file (default: generate one)");
  add_instance_flags(run, ctx.overrides);
  ctx.overrides.bind<std::string>(run, "--llm", "/llm/backend", "scripted:<transcript.json> or http");
  ctx.overrides.bind<int>(run, "--iterations", "/loop/iterations", "Reflection rounds");
  ctx.overrides.bind<int>(run, "--candidates", "/loop/candidates", "Candidate rewards per round");
  ctx.overrides.bind<int>(run, "--retries", "/loop/retries", "Extra queries per failed candidate");
  ctx.overrides.bind<std::uint64_t>(run, "--seed", "/seed", "Run seed");
  ctx.overrides.bind_flag(run, "--no-reflection", "/loop/reflection", false, "Single candidate, no reflection");
  ctx.overrides.bind<std::string>(run, "--http-base-url", "/llm/http/base_url", "Chat-completions server");
  ctx.overrides.bind<std::string>(run, "--http-model", "/llm/http/model", "Model name");
  ctx.overrides.bind<std::string>(run, "--http-key-env", "/llm/http/api_key_env",
                                  "Environment variable holding the API key");
  add_training_flags(run, ctx.overrides);
  run->add_option("--out-dir", run_dir, "Output directory")->required();

  std::string eval_dir;
  auto* eval = app.add_subcommand("eval", "Evaluate baselines and supplied rewards across seeds");
  ctx.overrides.bind<std::string>(eval, "--tasks", "/tasks", "Comma-separated task indices or 'all'");
  ctx.overrides.bind<std::string>(eval, "--rewards", "/eval/rewards",
                                  "JSON {method: {task: reward}} of extra rewards to train and score");
  ctx.overrides.bind<std::string>(eval, "--methods", "/eval/methods", "Methods from the rewards file, or 'all'");
  ctx.overrides.bind<int>(eval, "--seeds", "/protocol/n_seeds", "Evaluation seeds");
  ctx.overrides.bind<int>(eval, "--trials", "/protocol/trials_per_seed", "Trials per seed");
  ctx.overrides.bind<int>(eval, "--steps", "/protocol/steps_per_trial", "Steps per trial");
  ctx.overrides.bind<std::uint64_t>(eval, "--seed", "/seed", "Sweep seed");
  ctx.overrides.bind<int>(eval, "--workers", "/eval/workers", "Worker threads");
  ctx.overrides.bind<int>(eval, "--arms", "/instance/n_arms", "Number of arms");
  ctx.overrides.bind<int>(eval, "--budget", "/instance/budget", "Arms acted on per step");
  add_training_flags(eval, ctx.overrides);
  eval->add_option("--out-dir", eval_dir, "Output directory")->required();

  std::string oracle_out;
  auto* oracle = app.add_subcommand("oracle", "Verify the grid line search against brute force");
  ctx.overrides.bind<int>(oracle, "--cases", "/oracle/cases", "Randomized cases");
  ctx.overrides.bind<int>(oracle, "--support-max", "/oracle/support_max", "Largest support size");
  ctx.overrides.bind<int>(oracle, "--k-max", "/oracle/k_max", "Largest K");
  ctx.overrides.bind<std::uint64_t>(oracle, "--seed", "/seed", "Suite seed");
  ctx.overrides.bind_flag(oracle, "--non-monotone", "/oracle/non_monotone", true,
                          "Use arbitrary valuations; mismatches are informational");
  oracle->add_option("--out", oracle_out, "Write the JSON report here");

  std::string report_in, report_out;
  auto* report = app.add_subcommand("report", "Render a trace.json or results.json as markdown");
  report->add_option("input", report_in, "trace.json or results.json")->required();
  report->add_option("--out", report_out, "Markdown file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(ctx, gen_out);
    if (*run) return cmd_run(ctx, run_dir);
    if (*eval) return cmd_eval(ctx, eval_dir);
    if (*oracle) return cmd_oracle(ctx, oracle_out);
    if (*report) return cmd_report(report_in, report_out);
  } catch (const dlm::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dlm::LlmError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const dlm::NoCandidateError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
