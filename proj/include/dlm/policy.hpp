#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "json.hpp"

#include "dlm/error.hpp"
#include "dlm/reward_dsl.hpp"
#include "dlm/rmab.hpp"
#include "dlm/rng.hpp"

namespace dlm {

struct Hyper {
  double alpha_q = 0.1;
  double alpha_lambda = 0.01;
  double epsilon = 0.1;
  double beta = 0.9;
};

struct TrainConfig {
  int epochs = 5;
  int steps_per_epoch = 100;
  double alpha_q = 0.1;
  double alpha_lambda = 0.01;
  double epsilon_start = 0.1;  // decayed linearly to epsilon_end over epochs
  double epsilon_end = 0.01;
  double initial_lambda = 0.0;
  int replay_sweeps = 10;  // passes over the accumulated buffer per epoch
};

inline void validate(const TrainConfig& c) {
  if (c.epochs < 1 || c.steps_per_epoch < 1) throw ConfigError("epochs and steps_per_epoch must be >= 1");
  if (!(c.alpha_q >= 0.0 && c.alpha_q <= 1.0)) throw ConfigError("alpha_q must lie in [0,1]");
  if (!(c.alpha_lambda >= 0.0)) throw ConfigError("alpha_lambda must be >= 0");
  if (!(c.epsilon_start >= 0.0 && c.epsilon_start <= 1.0 && c.epsilon_end >= 0.0 && c.epsilon_end <= 1.0))
    throw ConfigError("epsilon must lie in [0,1]");
  if (!(c.initial_lambda >= 0.0)) throw ConfigError("initial_lambda must be >= 0");
  if (c.replay_sweeps < 1) throw ConfigError("replay_sweeps must be >= 1");
}

using QTable = std::array<std::array<double, 2>, 2>;  // q[s][a]

/// Per-arm Q tables plus the scalar action charge.
struct PolicyTable {
  std::vector<QTable> q;
  double lambda = 0.0;
  Hyper hyper;

  PolicyTable() = default;
  PolicyTable(std::size_t n_arms, Hyper h, double initial_lambda = 0.0)
      : q(n_arms, QTable{}), lambda(initial_lambda), hyper(h) {}

  std::size_t size() const { return q.size(); }

  /// Q_n(s,1) - Q_n(s,0) - lambda.
  double charged_advantage(std::size_t arm, int s) const {
    const auto& row = q[arm][s ? 1 : 0];
    return row[1] - row[0] - lambda;
  }
};

inline double action_cost(int a) { return a ? 1.0 : 0.0; }

/// Q_n(s,a) <- (1 - alpha_q) Q_n(s,a) + alpha_q (r - lambda c_a + beta max_a' Q_n(s',a')).
inline double q_update(PolicyTable& policy, std::size_t arm, int s, int a, double reward, int s_next) {
  auto& q = policy.q.at(arm);
  const auto& next = q[s_next ? 1 : 0];
  const double target =
      reward - policy.lambda * action_cost(a) + policy.hyper.beta * std::max(next[0], next[1]);
  double& entry = q[s ? 1 : 0][a ? 1 : 0];
  const double alpha = policy.hyper.alpha_q;
  entry = (1.0 - alpha) * entry + alpha * target;
  if (!std::isfinite(entry)) throw DomainError("Q update produced a non-finite value");
  return entry;
}

/// Projected ascent on the action charge: lambda rises when the observed
/// discounted spend exceeds the discounted budget B / (1 - beta).
inline double lambda_update(PolicyTable& policy, double discounted_spend, int budget, double beta) {
  if (!(discounted_spend >= 0.0)) throw ConfigError("spend must be nonnegative");
  const double target = static_cast<double>(budget) / (1.0 - beta);
  policy.lambda = std::max(0.0, policy.lambda + policy.hyper.alpha_lambda * (discounted_spend - target));
  return policy.lambda;
}

enum class ActionMode { kTrain, kEval };

/// Eval: act on exactly min(B, N) arms with the largest charged advantage,
/// ties to the lower arm id. Train: independent epsilon-greedy per arm on
/// the charged Q values (ties pick no action), no budget cap.
inline void select_actions_into(const PolicyTable& policy, std::span<const std::uint8_t> states, int budget,
                                ActionMode mode, Rng& rng, double epsilon, ActionVector& actions,
                                std::vector<std::size_t>& scratch) {
  const std::size_t n = policy.size();
  if (states.size() != n) throw ConfigError("state vector length mismatch");
  actions.assign(n, 0);
  if (mode == ActionMode::kTrain) {
    for (std::size_t i = 0; i < n; ++i) {
      if (epsilon > 0.0 && rng.uniform() < epsilon) {
        actions[i] = rng.bernoulli(0.5) ? 1 : 0;
      } else {
        actions[i] = policy.charged_advantage(i, states[i]) > 0.0 ? 1 : 0;
      }
    }
    return;
  }
  const std::size_t take = std::min(n, static_cast<std::size_t>(std::max(budget, 0)));
  scratch.resize(n);
  std::iota(scratch.begin(), scratch.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    const double va = policy.charged_advantage(a, states[a]);
    const double vb = policy.charged_advantage(b, states[b]);
    return va > vb || (va == vb && a < b);
  };
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(take), scratch.end(), better);
  for (std::size_t k = 0; k < take; ++k) actions[scratch[k]] = 1;
}

inline ActionVector select_actions(const PolicyTable& policy, std::span<const std::uint8_t> states, int budget,
                                   ActionMode mode, Rng& rng, double epsilon = 0.0) {
  ActionVector actions;
  std::vector<std::size_t> scratch;
  select_actions_into(policy, states, budget, mode, rng, epsilon, actions, scratch);
  return actions;
}

/// r_n(s) for every arm, precomputed from a reward expression. Throws
/// DomainError if the expression is undefined for any arm and state.
struct RewardTable {
  std::vector<std::array<double, 2>> r;

  double operator()(std::size_t arm, int s) const { return r[arm][s ? 1 : 0]; }
};

inline RewardTable make_reward_table(const RewardExpr& expr, const RmabInstance& inst) {
  RewardTable t;
  t.r.reserve(inst.size());
  for (const auto& arm : inst.arms)
    t.r.push_back({dsl::evaluate(expr, 0, arm.features), dsl::evaluate(expr, 1, arm.features)});
  return t;
}

/// Training backend. The tabular learner is the only implementation; the
/// interface leaves room for an actor-critic variant.
class PolicyTrainer {
 public:
  virtual ~PolicyTrainer() = default;
  virtual PolicyTable train(const RmabInstance& inst, const RewardExpr& reward, std::uint64_t seed) const = 0;
};

/// Decoupled per-arm Q-learning under a frozen-per-epoch action charge,
/// followed by a projected lambda step from the epoch's discounted spend.
class TabularQTrainer final : public PolicyTrainer {
 public:
  explicit TabularQTrainer(TrainConfig config = {}) : config_(config) { validate(config_); }

  const TrainConfig& config() const { return config_; }

  PolicyTable train(const RmabInstance& inst, const RewardExpr& reward, std::uint64_t seed) const override {
    return train(inst, make_reward_table(reward, inst), seed);
  }

  PolicyTable train(const RmabInstance& inst, const RewardTable& rewards, std::uint64_t seed) const {
    validate(inst);
    const std::size_t n = inst.size();
    if (rewards.r.size() != n) throw ConfigError("reward table size mismatch");
    const double beta = inst.discount;
    PolicyTable policy(n, Hyper{config_.alpha_q, config_.alpha_lambda, config_.epsilon_start, beta},
                       config_.initial_lambda);

    Rng rng(derive_seed(seed, "train"));
    StateVector states = inst.initial_states();
    StateVector next;
    ActionVector actions;
    std::vector<std::size_t> scratch;

    struct Transition {
      StateVector s;
      ActionVector a;
      StateVector s_next;
    };
    std::vector<Transition> buffer;
    buffer.reserve(static_cast<std::size_t>(config_.steps_per_epoch) * static_cast<std::size_t>(config_.epochs));

    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
      const double frac = config_.epochs > 1 ? static_cast<double>(epoch) / (config_.epochs - 1) : 0.0;
      policy.hyper.epsilon = config_.epsilon_start + (config_.epsilon_end - config_.epsilon_start) * frac;
      const std::size_t epoch_begin = buffer.size();
      for (int t = 0; t < config_.steps_per_epoch; ++t) {
        select_actions_into(policy, states, inst.budget, ActionMode::kTrain, rng, policy.hyper.epsilon, actions,
                            scratch);
        step_into(inst, states, actions, rng, next);
        buffer.push_back({states, actions, next});
        states.swap(next);
      }
      for (int sweep = 0; sweep < config_.replay_sweeps; ++sweep)
        for (const auto& tr : buffer)
          for (std::size_t i = 0; i < n; ++i) q_update(policy, i, tr.s[i], tr.a[i], rewards(i, tr.s[i]), tr.s_next[i]);
      double spend = 0.0;
      double discount = 1.0;
      for (std::size_t k = epoch_begin; k < buffer.size(); ++k) {
        double cost = 0.0;
        for (auto a : buffer[k].a) cost += action_cost(a);
        spend += discount * cost;
        discount *= beta;
      }
      lambda_update(policy, spend, inst.budget, beta);
    }
    return policy;
  }

 private:
  TrainConfig config_;
};

inline PolicyTable train(const RmabInstance& inst, const RewardExpr& reward, const TrainConfig& config,
                         std::uint64_t seed) {
  return TabularQTrainer(config).train(inst, reward, seed);
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const PolicyTable& p) {
  nlohmann::json q = nlohmann::json::array();
  for (const auto& t : p.q) q.push_back({{t[0][0], t[0][1]}, {t[1][0], t[1][1]}});
  return {{"lambda", p.lambda}, {"q", q}};
}

inline PolicyTable policy_from_json(const nlohmann::json& j) {
  PolicyTable p;
  try {
    p.lambda = j.at("lambda").get<double>();
    for (const auto& t : j.at("q")) {
      QTable q{};
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) q[s][a] = t.at(s).at(a).get<double>();
      p.q.push_back(q);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed policy JSON: ") + e.what());
  }
  if (!(p.lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  return p;
}

}  // namespace dlm
