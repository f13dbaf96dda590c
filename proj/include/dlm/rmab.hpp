#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dlm/error.hpp"
#include "dlm/features.hpp"
#include "dlm/rng.hpp"

namespace dlm {

using StateVector = std::vector<std::uint8_t>;
using ActionVector = std::vector<std::uint8_t>;

/// One arm's 43 binary demographic features.
struct FeatureVector {
  std::array<std::uint8_t, kNumFeatures> bits{};

  std::uint8_t operator[](std::size_t i) const { return bits[i]; }
  std::uint8_t& operator[](std::size_t i) { return bits[i]; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// p[s][a]: probability that the next state is 1 from state s under action a.
struct TransitionTable {
  std::array<std::array<double, 2>, 2> p{};

  friend bool operator==(const TransitionTable&, const TransitionTable&) = default;
};

struct Arm {
  int id = 0;
  FeatureVector features;
  TransitionTable transitions;
  std::uint8_t state = 0;  // initial state for rollouts

  friend bool operator==(const Arm&, const Arm&) = default;
};

struct RmabInstance {
  std::vector<Arm> arms;
  int budget = 5;
  double discount = 0.9;
  std::uint64_t rng_seed = 0;

  std::size_t size() const { return arms.size(); }
  StateVector initial_states() const {
    StateVector s(arms.size());
    std::transform(arms.begin(), arms.end(), s.begin(), [](const Arm& a) { return a.state; });
    return s;
  }

  friend bool operator==(const RmabInstance&, const RmabInstance&) = default;
};

/// Parameters of the synthetic population.
struct PopulationConfig {
  /// Unnormalized sampling weights per category block, indexed like
  /// kCategoryBlocks; an empty vector means uniform over the block.
  std::array<std::vector<double>, kNumCategories> category_weights{};
  double passive_alpha = 2.0;  // p[0][0] ~ Beta(passive_alpha, passive_beta)
  double passive_beta = 4.0;
  double lift_alpha = 2.0;  // action lift ~ Beta(lift_alpha, lift_beta)
  double lift_beta = 6.0;
  double stickiness = 0.15;  // p[1][a] = min(1, p[0][a] + stickiness)
  double initial_engaged = 0.5;
  double discount = 0.9;

  /// Expected action lift before clipping at 1.
  double action_lift() const { return lift_alpha / (lift_alpha + lift_beta); }
};

inline void validate(const TransitionTable& t) {
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) {
      const double p = t.p[s][a];
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("transition probability outside [0,1]");
    }
    if (t.p[s][1] < t.p[s][0]) throw ConfigError("acting must not lower the engagement probability");
  }
}

inline void validate(const FeatureVector& f) {
  for (std::size_t i = 0; i < kFirstVisibleFeature; ++i)
    if (f[i] != 0) throw ConfigError("reserved feature " + std::to_string(i) + " must be 0");
  for (const auto& block : kCategoryBlocks) {
    int set = 0;
    for (std::size_t i = block.first; i <= block.last; ++i) {
      if (f[i] > 1) throw ConfigError("feature values must be binary");
      set += f[i];
    }
    if (set != 1) throw ConfigError("category '" + std::string(block.title) + "' is not one-hot");
  }
}

inline void validate(const RmabInstance& inst) {
  if (inst.arms.empty()) throw ConfigError("instance has no arms");
  if (inst.budget < 1 || static_cast<std::size_t>(inst.budget) > inst.arms.size())
    throw ConfigError("budget must lie in [1, N]");
  if (!(inst.discount >= 0.0 && inst.discount < 1.0)) throw ConfigError("discount must lie in [0,1)");
  for (const auto& arm : inst.arms) {
    if (arm.state > 1) throw ConfigError("arm state must be 0 or 1");
    validate(arm.features);
    validate(arm.transitions);
  }
}

inline void validate(const PopulationConfig& c) {
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(c.stickiness)) throw ConfigError("stickiness outside [0,1]");
  if (!unit(c.initial_engaged)) throw ConfigError("initial_engaged outside [0,1]");
  if (!(c.discount >= 0.0 && c.discount < 1.0)) throw ConfigError("discount must lie in [0,1)");
  for (double shape : {c.passive_alpha, c.passive_beta, c.lift_alpha, c.lift_beta})
    if (!(shape > 0.0)) throw ConfigError("Beta shape parameters must be positive");
  for (std::size_t k = 0; k < kNumCategories; ++k) {
    const auto& w = c.category_weights[k];
    if (w.empty()) continue;
    if (w.size() != kCategoryBlocks[k].size())
      throw ConfigError("category weight count mismatch for '" + std::string(kCategoryBlocks[k].title) + "'");
    double total = 0.0;
    for (double x : w) {
      if (!(x >= 0.0)) throw ConfigError("category weights must be nonnegative");
      total += x;
    }
    if (!(total > 0.0)) throw ConfigError("category weights sum to zero");
  }
}

namespace detail {

inline std::size_t sample_category(Rng& rng, const std::vector<double>& weights, std::size_t n) {
  if (weights.empty()) return static_cast<std::size_t>(rng.below(n));
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < n; ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  // Rounding fell off the end; return the last option with positive weight.
  for (std::size_t i = n; i-- > 0;)
    if (weights[i] > 0.0) return i;
  return n - 1;
}

}  // namespace detail

inline Arm sample_arm(Rng& rng, int id, const PopulationConfig& config) {
  Arm arm;
  arm.id = id;
  for (std::size_t k = 0; k < kNumCategories; ++k) {
    const auto& block = kCategoryBlocks[k];
    arm.features[block.first + detail::sample_category(rng, config.category_weights[k], block.size())] = 1;
  }
  const double passive = rng.beta(config.passive_alpha, config.passive_beta);
  const double lift = rng.beta(config.lift_alpha, config.lift_beta);
  auto& p = arm.transitions.p;
  p[0][0] = passive;
  p[0][1] = std::min(1.0, passive + lift);
  p[1][0] = std::min(1.0, p[0][0] + config.stickiness);
  p[1][1] = std::min(1.0, p[0][1] + config.stickiness);
  arm.state = rng.bernoulli(config.initial_engaged) ? 1 : 0;
  return arm;
}

/// Deterministic synthetic population of `n_arms` arms.
inline RmabInstance generate_instance(std::uint64_t seed, int n_arms, int budget,
                                      const PopulationConfig& config = {}) {
  if (n_arms < 1) throw ConfigError("n_arms must be >= 1");
  if (budget < 1 || budget > n_arms) throw ConfigError("budget must lie in [1, n_arms]");
  validate(config);
  Rng rng(derive_seed(seed, "population"));
  RmabInstance inst;
  inst.budget = budget;
  inst.discount = config.discount;
  inst.rng_seed = seed;
  inst.arms.reserve(static_cast<std::size_t>(n_arms));
  for (int i = 0; i < n_arms; ++i) inst.arms.push_back(sample_arm(rng, i, config));
  return inst;
}

/// Result of one simulator step.
struct StepResult {
  StateVector next;
  StateVector prev;
};

/// Advances every arm independently: next_n = 1 with probability
/// p[s_n][a_n]. Consumes exactly one uniform draw per arm regardless of the
/// actions, so rollouts that share a stream see coupled randomness.
inline void step_into(const RmabInstance& inst, std::span<const std::uint8_t> states,
                      std::span<const std::uint8_t> actions, Rng& rng, StateVector& next) {
  const std::size_t n = inst.arms.size();
  if (states.size() != n) throw ConfigError("state vector length mismatch");
  if (actions.size() != n) throw ConfigError("action vector length mismatch");
  next.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = inst.arms[i].transitions.p[states[i] ? 1 : 0][actions[i] ? 1 : 0];
    next[i] = rng.uniform() < p ? 1 : 0;
  }
}

inline StepResult step(const RmabInstance& inst, std::span<const std::uint8_t> states,
                       std::span<const std::uint8_t> actions, Rng& rng) {
  StepResult r;
  r.prev.assign(states.begin(), states.end());
  step_into(inst, states, actions, rng, r.next);
  return r;
}

/// Counts eval-mode steps and budget violations across rollouts.
struct BudgetAudit {
  std::uint64_t steps = 0;
  std::uint64_t violations = 0;

  void record(std::span<const std::uint8_t> actions, int budget) {
    ++steps;
    int used = 0;
    for (auto a : actions) used += a ? 1 : 0;
    if (used > budget) ++violations;
  }

  BudgetAudit& operator+=(const BudgetAudit& o) {
    steps += o.steps;
    violations += o.violations;
    return *this;
  }
};

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const RmabInstance& inst) {
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& arm : inst.arms) {
    nlohmann::json features = nlohmann::json::array();
    for (auto b : arm.features.bits) features.push_back(static_cast<int>(b));
    const auto& p = arm.transitions.p;
    arms.push_back({{"id", arm.id},
                    {"features", features},
                    {"p", {{p[0][0], p[0][1]}, {p[1][0], p[1][1]}}},
                    {"state", static_cast<int>(arm.state)}});
  }
  return {{"seed", inst.rng_seed}, {"budget", inst.budget}, {"discount", inst.discount}, {"arms", arms}};
}

inline RmabInstance instance_from_json(const nlohmann::json& j) {
  RmabInstance inst;
  try {
    inst.rng_seed = j.at("seed").get<std::uint64_t>();
    inst.budget = j.at("budget").get<int>();
    inst.discount = j.at("discount").get<double>();
    for (const auto& a : j.at("arms")) {
      Arm arm;
      arm.id = a.at("id").get<int>();
      const auto& f = a.at("features");
      if (f.size() != kNumFeatures) throw ConfigError("feature vector must have 43 entries");
      for (std::size_t i = 0; i < kNumFeatures; ++i) arm.features[i] = static_cast<std::uint8_t>(f[i].get<int>());
      const auto& p = a.at("p");
      for (int s = 0; s < 2; ++s)
        for (int act = 0; act < 2; ++act) arm.transitions.p[s][act] = p.at(s).at(act).get<double>();
      arm.state = static_cast<std::uint8_t>(a.value("state", 0));
      inst.arms.push_back(arm);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed instance JSON: ") + e.what());
  }
  validate(inst);
  return inst;
}

}  // namespace dlm
