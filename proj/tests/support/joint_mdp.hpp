#pragma once

// Exact finite-horizon solution of the joint MDP for tiny instances. States
// are bit masks over arms; reward is collected on the state reached after
// each step, starting from the instance's initial states.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "dlm/policy.hpp"
#include "dlm/rmab.hpp"

namespace fixture {

using JointPolicy = std::function<std::uint32_t(std::uint32_t state_mask)>;

struct JointMdp {
  const dlm::RmabInstance& inst;
  const dlm::RewardTable& reward;

  std::size_t n() const { return inst.size(); }

  double transition(std::uint32_t s, std::uint32_t a, std::uint32_t next) const {
    double p = 1.0;
    for (std::size_t i = 0; i < n(); ++i) {
      const int si = (s >> i) & 1, ai = (a >> i) & 1, ni = (next >> i) & 1;
      const double q = inst.arms[i].transitions.p[si][ai];
      p *= ni ? q : 1.0 - q;
    }
    return p;
  }

  double state_reward(std::uint32_t s) const {
    double r = 0.0;
    for (std::size_t i = 0; i < n(); ++i) r += reward(i, (s >> i) & 1);
    return r;
  }

  std::vector<std::uint32_t> feasible_actions() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t a = 0; a < (1u << n()); ++a)
      if (std::popcount(a) <= inst.budget) out.push_back(a);
    return out;
  }

  std::uint32_t initial_mask() const {
    std::uint32_t m = 0;
    for (std::size_t i = 0; i < n(); ++i) m |= static_cast<std::uint32_t>(inst.arms[i].state) << i;
    return m;
  }

  /// Expected total reward over `horizon` steps under the best joint policy.
  double optimal(int horizon) const { return solve(horizon, nullptr); }

  /// Expected total reward over `horizon` steps under a fixed stationary policy.
  double evaluate(int horizon, const JointPolicy& policy) const { return solve(horizon, &policy); }

 private:
  double solve(int horizon, const JointPolicy* policy) const {
    if (n() > 10) throw std::invalid_argument("joint MDP is only tractable for tiny instances");
    const std::uint32_t states = 1u << n();
    const auto actions = feasible_actions();
    std::vector<double> v(states, 0.0), next_v(states);
    for (int t = 0; t < horizon; ++t) {
      for (std::uint32_t s = 0; s < states; ++s) {
        auto q = [&](std::uint32_t a) {
          double total = 0.0;
          for (std::uint32_t s2 = 0; s2 < states; ++s2) total += transition(s, a, s2) * (state_reward(s2) + v[s2]);
          return total;
        };
        if (policy) {
          next_v[s] = q((*policy)(s));
        } else {
          double best = -1e300;
          for (auto a : actions) best = std::max(best, q(a));
          next_v[s] = best;
        }
      }
      v.swap(next_v);
    }
    return v[initial_mask()];
  }
};

/// The eval-mode policy as a mask-to-mask map.
inline JointPolicy greedy_policy(const dlm::PolicyTable& policy, int budget) {
  return [&policy, budget](std::uint32_t mask) {
    dlm::StateVector s(policy.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = (mask >> i) & 1;
    dlm::Rng unused(0);
    const auto a = dlm::select_actions(policy, s, budget, dlm::ActionMode::kEval, unused);
    std::uint32_t out = 0;
    for (std::size_t i = 0; i < a.size(); ++i) out |= static_cast<std::uint32_t>(a[i]) << i;
    return out;
  };
}

}  // namespace fixture
