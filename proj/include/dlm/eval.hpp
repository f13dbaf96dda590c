#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "dlm/error.hpp"
#include "dlm/policy.hpp"
#include "dlm/reward_dsl.hpp"
#include "dlm/rmab.hpp"
#include "dlm/rng.hpp"
#include "dlm/tasks.hpp"

namespace dlm {

struct EvalProtocol {
  int n_seeds = 50;
  int trials_per_seed = 50;
  int steps_per_trial = 10;
};

inline void validate(const EvalProtocol& p) {
  if (p.n_seeds < 1 || p.trials_per_seed < 1 || p.steps_per_trial < 1)
    throw ConfigError("evaluation protocol counts must be >= 1");
}

/// Chooses actions for the current states; draws only from `rng`.
using Allocator = std::function<void(const StateVector& states, Rng& rng, ActionVector& actions)>;

inline Allocator trained_allocator(const PolicyTable& policy, int budget) {
  return [&policy, budget, scratch = std::vector<std::size_t>{}](const StateVector& s, Rng& rng,
                                                                  ActionVector& a) mutable {
    select_actions_into(policy, s, budget, ActionMode::kEval, rng, 0.0, a, scratch);
  };
}

/// B arms chosen uniformly without replacement each step.
inline Allocator random_allocator(int budget) {
  return [budget, idx = std::vector<std::size_t>{}](const StateVector& s, Rng& rng, ActionVector& a) mutable {
    const std::size_t n = s.size();
    a.assign(n, 0);
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t take = std::min(n, static_cast<std::size_t>(budget));
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(n - k));
      std::swap(idx[k], idx[j]);
      a[idx[k]] = 1;
    }
  };
}

inline Allocator no_action_allocator() {
  return [](const StateVector& s, Rng&, ActionVector& a) { a.assign(s.size(), 0); };
}

/// Mean over trials of the per-trial summed reward of the states reached
/// after each step. Every trial starts from the instance's initial states and
/// draws transitions from a stream keyed only by (eval_seed, trial), so
/// different allocators evaluated with one eval_seed share their randomness.
inline double evaluate_allocator(const Allocator& alloc, const RmabInstance& inst, const RewardTable& reward,
                                 const EvalProtocol& protocol, std::uint64_t eval_seed,
                                 BudgetAudit* audit = nullptr) {
  validate(protocol);
  StateVector states, next;
  ActionVector actions;
  double total = 0.0;
  for (int trial = 0; trial < protocol.trials_per_seed; ++trial) {
    Rng transitions(derive_seed(eval_seed, "eval-transitions", {static_cast<std::uint64_t>(trial)}));
    Rng choices(derive_seed(eval_seed, "eval-actions", {static_cast<std::uint64_t>(trial)}));
    states = inst.initial_states();
    double trial_sum = 0.0;
    for (int t = 0; t < protocol.steps_per_trial; ++t) {
      alloc(states, choices, actions);
      if (audit) audit->record(actions, inst.budget);
      step_into(inst, states, actions, transitions, next);
      for (std::size_t i = 0; i < next.size(); ++i) trial_sum += reward(i, next[i]);
      states.swap(next);
    }
    total += trial_sum;
  }
  return total / protocol.trials_per_seed;
}

inline double evaluate_policy(const PolicyTable& policy, const RmabInstance& inst, const TaskSpec& task,
                              const EvalProtocol& protocol, std::uint64_t eval_seed,
                              BudgetAudit* audit = nullptr) {
  return evaluate_allocator(trained_allocator(policy, inst.budget), inst, make_reward_table(task.base_reward, inst),
                            protocol, eval_seed, audit);
}

// ---------------------------------------------------------------------------
// Aggregation

/// Mean of the central half: floor(n/4) values trimmed from each end.
inline double iqm(std::vector<double> xs) {
  if (xs.empty()) throw ConfigError("iqm of an empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t cut = xs.size() / 4;
  const auto first = xs.begin() + static_cast<std::ptrdiff_t>(cut);
  const auto last = xs.end() - static_cast<std::ptrdiff_t>(cut);
  return std::accumulate(first, last, 0.0) / static_cast<double>(last - first);
}

/// Standard error of the interquartile mean, from the trimmed sample.
inline double iqm_standard_error(std::vector<double> xs) {
  if (xs.empty()) throw ConfigError("iqm of an empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t cut = xs.size() / 4;
  const std::span<const double> mid(xs.data() + cut, xs.size() - 2 * cut);
  if (mid.size() < 2) return 0.0;
  const double mean = std::accumulate(mid.begin(), mid.end(), 0.0) / static_cast<double>(mid.size());
  double ss = 0.0;
  for (double x : mid) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(mid.size() - 1)) / std::sqrt(static_cast<double>(mid.size()));
}

struct MnrResult {
  std::vector<double> method_raw;
  std::vector<double> random_raw;
  std::vector<double> base_raw;
  std::vector<double> normalized;  // one per kept seed
  std::vector<std::size_t> kept;    // seed positions behind `normalized`
  std::vector<std::size_t> excluded;  // seeds with |R_base - R_rand| below tolerance
  double iqm = 0.0;
  double standard_error = 0.0;
};

inline constexpr double kMnrTolerance = 1e-9;

/// Per-seed (R - R_rand) / (R_base - R_rand), aggregated by IQM.
inline MnrResult mnr(std::span<const double> method, std::span<const double> random, std::span<const double> base,
                     double tolerance = kMnrTolerance) {
  if (method.size() != random.size() || method.size() != base.size())
    throw ConfigError("mnr inputs must have equal length");
  MnrResult r;
  r.method_raw.assign(method.begin(), method.end());
  r.random_raw.assign(random.begin(), random.end());
  r.base_raw.assign(base.begin(), base.end());
  for (std::size_t i = 0; i < method.size(); ++i) {
    const double denom = base[i] - random[i];
    if (std::abs(denom) <= tolerance * std::max(1.0, std::abs(base[i]))) {
      r.excluded.push_back(i);
      continue;
    }
    r.normalized.push_back((method[i] - random[i]) / denom);
    r.kept.push_back(i);
  }
  if (!r.normalized.empty()) {
    r.iqm = iqm(r.normalized);
    r.standard_error = iqm_standard_error(r.normalized);
  }
  return r;
}

/// Welch one-tailed p-value for H1: mean(a) > mean(b).
inline double one_tailed_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ConfigError("t-test needs at least two samples per group");
  auto moments = [](std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::pair{m, ss / (n - 1.0)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double sa = va / na;
  const double sb = vb / nb;
  const double se2 = sa + sb;
  if (se2 == 0.0) {
    if (ma == mb) return 0.5;
    return ma > mb ? 0.0 : 1.0;
  }
  const double t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / ((sa * sa) / (na - 1.0) + (sb * sb) / (nb - 1.0));
  const boost::math::students_t dist(df);
  return boost::math::cdf(boost::math::complement(dist, t));
}

// ---------------------------------------------------------------------------
// Baselines

struct BaselineScores {
  double random = 0.0;
  double no_action = 0.0;
  double default_reward = 0.0;
  double base = 0.0;
};

inline const RewardExpr& default_reward() {
  static const RewardExpr expr = dsl::parse("state");
  return expr;
}

/// Seeds used for one evaluation seed of a sweep, so that every method
/// evaluated on a seed sees the same population and evaluation randomness.
struct SeedPlan {
  std::uint64_t instance_seed;
  std::uint64_t eval_seed;
  std::uint64_t train_seed(std::string_view method) const { return derive_seed(instance_seed, method); }
};

inline SeedPlan seed_plan(std::uint64_t sweep_seed, int seed_index) {
  const auto i = static_cast<std::uint64_t>(seed_index);
  return {derive_seed(sweep_seed, "instance", {i}), derive_seed(sweep_seed, "evaluation", {i})};
}

/// Random and NoAction are fixed allocators; Default and Base are trained
/// with `state` and the task's base reward. All are scored on the base reward.
inline BaselineScores baselines(const RmabInstance& inst, const TaskSpec& task, const EvalProtocol& protocol,
                                const TrainConfig& train_config, const SeedPlan& plan,
                                BudgetAudit* audit = nullptr) {
  const RewardTable base_table = make_reward_table(task.base_reward, inst);
  const TabularQTrainer trainer(train_config);
  BaselineScores s;
  s.random = evaluate_allocator(random_allocator(inst.budget), inst, base_table, protocol, plan.eval_seed, audit);
  s.no_action = evaluate_allocator(no_action_allocator(), inst, base_table, protocol, plan.eval_seed, audit);
  const PolicyTable def = trainer.train(inst, default_reward(), plan.train_seed("default"));
  s.default_reward =
      evaluate_allocator(trained_allocator(def, inst.budget), inst, base_table, protocol, plan.eval_seed, audit);
  const PolicyTable base = trainer.train(inst, base_table, plan.train_seed("base"));
  s.base = evaluate_allocator(trained_allocator(base, inst.budget), inst, base_table, protocol, plan.eval_seed, audit);
  return s;
}

// ---------------------------------------------------------------------------
// Sweeps

/// Scores one method on one seed's instance; evaluation must use
/// `plan.eval_seed` and the supplied base-reward table.
using MethodFn = std::function<double(const RmabInstance& inst, const SeedPlan& plan, const RewardTable& base,
                                      const EvalProtocol& protocol, BudgetAudit* audit)>;

struct Method {
  std::string name;
  MethodFn score;
};

/// Trains on `reward` with the seed plan's stream for `name`.
inline Method trained_method(std::string name, RewardExpr reward, TrainConfig config) {
  MethodFn fn = [name, reward = std::move(reward), config](const RmabInstance& inst, const SeedPlan& plan,
                                                            const RewardTable& base, const EvalProtocol& protocol,
                                                            BudgetAudit* audit) {
    const PolicyTable policy = TabularQTrainer(config).train(inst, reward, plan.train_seed(name));
    return evaluate_allocator(trained_allocator(policy, inst.budget), inst, base, protocol, plan.eval_seed, audit);
  };
  return Method{std::move(name), std::move(fn)};
}

struct SweepConfig {
  EvalProtocol protocol;
  TrainConfig train;
  PopulationConfig population;
  int n_arms = 48;
  int budget = 5;
  std::uint64_t seed = 0;
  int workers = 1;
};

inline constexpr const char* kRandom = "random";
inline constexpr const char* kNoAction = "no_action";
inline constexpr const char* kDefault = "default";
inline constexpr const char* kBase = "base";

struct TaskSweep {
  int task = 0;
  std::vector<std::string> methods;  // baselines first, then extras in the order given
  std::map<std::string, std::vector<double>> raw;  // per seed
  std::map<std::string, MnrResult> mnr;
  BudgetAudit audit;
};

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads. The first
/// exception thrown by any call is rethrown.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Baselines plus `extra` methods on `protocol.n_seeds` fresh instances.
/// Each seed's instance, training streams and evaluation stream depend only
/// on (config.seed, seed index), so results do not depend on `workers`.
inline TaskSweep sweep_task(const TaskSpec& task, const SweepConfig& config, const std::vector<Method>& extra = {}) {
  validate(config.protocol);
  validate(config.train);
  const int n = config.protocol.n_seeds;
  TaskSweep out;
  out.task = task.index;
  out.methods = {kRandom, kNoAction, kDefault, kBase};
  for (const auto& m : extra) {
    if (std::find(out.methods.begin(), out.methods.end(), m.name) != out.methods.end())
      throw ConfigError("duplicate method name '" + m.name + "'");
    out.methods.push_back(m.name);
  }
  std::vector<std::vector<double>> scores(out.methods.size(), std::vector<double>(static_cast<std::size_t>(n)));
  std::vector<BudgetAudit> audits(static_cast<std::size_t>(n));
  const std::uint64_t task_seed = derive_seed(config.seed, "task", {static_cast<std::uint64_t>(task.index)});
  parallel_for(n, config.workers, [&](int i) {
    const SeedPlan plan = seed_plan(task_seed, i);
    const RmabInstance inst = generate_instance(plan.instance_seed, config.n_arms, config.budget, config.population);
    BudgetAudit* audit = &audits[static_cast<std::size_t>(i)];
    const BaselineScores b = baselines(inst, task, config.protocol, config.train, plan, audit);
    const auto si = static_cast<std::size_t>(i);
    scores[0][si] = b.random;
    scores[1][si] = b.no_action;
    scores[2][si] = b.default_reward;
    scores[3][si] = b.base;
    const RewardTable base_table = make_reward_table(task.base_reward, inst);
    for (std::size_t m = 0; m < extra.size(); ++m)
      scores[4 + m][si] = extra[m].score(inst, plan, base_table, config.protocol, audit);
  });
  for (const auto& a : audits) out.audit += a;
  for (std::size_t m = 0; m < out.methods.size(); ++m) {
    out.raw[out.methods[m]] = scores[m];
    out.mnr[out.methods[m]] = mnr(scores[m], scores[0], scores[3]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reward-structure metrics

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

inline PrecisionRecall feature_precision_recall(const RewardExpr& candidate, const TaskSpec& task) {
  const auto used = dsl::used_features(candidate);
  const auto& base = task.base_features;
  std::size_t hit = 0;
  for (int k : used) hit += base.count(k);
  PrecisionRecall pr;
  if (used.empty()) {
    pr.precision = base.empty() ? 1.0 : 0.0;
  } else {
    pr.precision = static_cast<double>(hit) / static_cast<double>(used.size());
  }
  pr.recall = base.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(base.size());
  return pr;
}

/// A candidate whose features include all base features matches the base
/// logic when both rewards reward exactly the same assignments over the
/// union of their features.
inline bool logic_matches(const RewardExpr& candidate, const TaskSpec& task) {
  const auto used = dsl::used_features(candidate);
  std::set<int> uni = used;
  uni.insert(task.base_features.begin(), task.base_features.end());
  try {
    return dsl::bonus_set(candidate, uni) == dsl::bonus_set(task.base_reward, uni);
  } catch (const DomainError&) {
    return false;  // undefined on some assignment
  } catch (const ConfigError&) {
    return false;  // too many features to enumerate
  }
}

/// Fraction of qualifying candidates (used features a superset of the base
/// features) whose logic matches the base reward; nullopt when none qualify.
inline std::optional<double> logic_recall(std::span<const RewardExpr> candidates, const TaskSpec& task) {
  if (task.base_features.size() < 2) throw ConfigError("logic recall is defined for multi-feature tasks only");
  std::size_t qualifying = 0, matches = 0;
  for (const auto& c : candidates) {
    const auto used = dsl::used_features(c);
    if (!std::includes(used.begin(), used.end(), task.base_features.begin(), task.base_features.end())) continue;
    ++qualifying;
    if (logic_matches(c, task)) ++matches;
  }
  if (qualifying == 0) return std::nullopt;
  return static_cast<double>(matches) / static_cast<double>(qualifying);
}

}  // namespace dlm
