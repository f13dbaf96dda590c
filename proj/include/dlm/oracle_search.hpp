#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dlm/error.hpp"
#include "dlm/rng.hpp"

namespace dlm {

/// Grid S = {alpha^k : -K <= k <= K} for each weight in `support`; the
/// other coordinates of the n-dimensional weight vector stay 0.
struct SearchSpace {
  double alpha = 10.0;
  int K = 1;
  std::size_t dimension = 1;
  std::vector<std::size_t> support{0};

  std::size_t grid_size() const { return static_cast<std::size_t>(2 * K + 1); }
  double value(int k) const { return std::pow(alpha, k); }
  double min_value() const { return value(-K); }
  double max_value() const { return value(K); }
  std::vector<double> grid() const {
    std::vector<double> g;
    for (int k = -K; k <= K; ++k) g.push_back(value(k));
    return g;
  }
};

inline void validate(const SearchSpace& s) {
  if (!(s.alpha > 1.0) || !std::isfinite(s.alpha)) throw ConfigError("alpha must be a finite value > 1");
  if (s.K < 0) throw ConfigError("K must be >= 0");
  for (std::size_t i = 0; i < s.support.size(); ++i) {
    if (s.support[i] >= s.dimension) throw ConfigError("support index outside the weight vector");
    for (std::size_t j = 0; j < i; ++j)
      if (s.support[j] == s.support[i]) throw ConfigError("support indices must be distinct");
  }
}

/// A point on the grid: one exponent per support coordinate.
using GridPoint = std::vector<int>;

inline std::vector<double> weights(const SearchSpace& s, const GridPoint& p) {
  std::vector<double> w(s.dimension, 0.0);
  for (std::size_t i = 0; i < s.support.size(); ++i) w[s.support[i]] = s.value(p[i]);
  return w;
}

/// Counts every evaluation.
class ValuationOracle {
 public:
  using Fn = std::function<double(const std::vector<double>&)>;

  explicit ValuationOracle(Fn fn) : fn_(std::move(fn)) {}

  double operator()(const std::vector<double>& w) {
    ++calls_;
    return fn_(w);
  }

  std::uint64_t calls() const { return calls_; }

 private:
  Fn fn_;
  std::uint64_t calls_ = 0;
};

struct LineStep {
  GridPoint w;
  GridPoint w_prime;
  bool converged = false;
  std::size_t i = 0;
};

/// One step of the line search. An improving proposal is accepted and the
/// next one scales coordinate i by alpha (held at max S); otherwise move to
/// the next coordinate, converging once every coordinate has been visited.
inline LineStep optimize_step(const SearchSpace& space, GridPoint w, GridPoint w_prime, double v_w, double v_wp,
                                 std::size_t i) {
  if (v_wp > v_w && w[i] < space.K) {
    w = w_prime;
    w_prime[i] = std::min(w[i] + 1, space.K);
    return {std::move(w), std::move(w_prime), false, i};
  }
  ++i;
  return {std::move(w), std::move(w_prime), i >= space.support.size(), i};
}

struct SearchResult {
  GridPoint point;
  std::vector<double> w;
  std::uint64_t calls = 0;
};

inline SearchResult iterated_line_search(const SearchSpace& space, ValuationOracle& oracle) {
  validate(space);
  const std::uint64_t calls_before = oracle.calls();
  const std::size_t n = space.support.size();
  GridPoint w(n, -space.K);
  GridPoint w_prime = w;
  std::size_t i = 0;
  bool converged = n == 0;
  // A fresh coordinate starts from the current w with one grid step up on i.
  auto seed_proposal = [&] {
    w_prime = w;
    w_prime[i] = std::min(w[i] + 1, space.K);
  };
  if (!converged) seed_proposal();
  while (!converged) {
    const double v_w = oracle(weights(space, w));
    const double v_wp = oracle(weights(space, w_prime));
    const std::size_t before = i;
    auto r = optimize_step(space, std::move(w), std::move(w_prime), v_w, v_wp, i);
    w = std::move(r.w);
    w_prime = std::move(r.w_prime);
    converged = r.converged;
    i = r.i;
    if (!converged && i != before) seed_proposal();
  }
  return {w, weights(space, w), oracle.calls() - calls_before};
}

inline constexpr std::uint64_t kBruteForceLimit = 100000;

/// Exhaustive argmax over the grid product; ties go to the lexicographically
/// smallest exponent vector.
inline SearchResult brute_force_argmax(const SearchSpace& space, ValuationOracle& oracle) {
  validate(space);
  const std::uint64_t calls_before = oracle.calls();
  const std::size_t n = space.support.size();
  std::uint64_t count = 1;
  for (std::size_t k = 0; k < n; ++k) {
    count *= space.grid_size();
    if (count > kBruteForceLimit) throw ConfigError("grid product exceeds the brute-force limit");
  }
  GridPoint p(n, -space.K);
  GridPoint best = p;
  double best_v = oracle(weights(space, p));
  for (std::uint64_t c = 1; c < count; ++c) {
    for (std::size_t k = n; k-- > 0;) {  // odometer, last coordinate fastest
      if (p[k] < space.K) {
        ++p[k];
        break;
      }
      p[k] = -space.K;
    }
    const double v = oracle(weights(space, p));
    if (v > best_v) {
      best_v = v;
      best = p;
    }
  }
  return {best, weights(space, best), oracle.calls() - calls_before};
}

// ---------------------------------------------------------------------------
// Randomized verification

struct OracleSuiteConfig {
  int cases = 200;
  int support_max = 3;
  int K_max = 3;
  std::vector<double> alphas{2.0, 10.0};
  std::uint64_t seed = 0;
  bool non_monotone = false;  // random lookup valuations instead of distance-based ones
};

struct OracleCell {
  std::size_t support = 0;
  int K = 0;
  int cases = 0;
  double mean_calls = 0.0;
};

struct OracleSuiteReport {
  int cases = 0;
  int mismatches = 0;
  std::vector<OracleCell> cells;
  double slope = 0.0;  // least squares of mean calls on support * K
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least-squares line through (x, y); returns {slope, intercept, R^2}.
inline std::array<double, 3> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return {0.0, 0.0, 0.0};
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return {0.0, my, 0.0};
  const double slope = sxy / sxx;
  const double r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return {slope, my - slope * mx, r2};
}

/// Cases cycle through every (support size, K) cell; targets are drawn
/// log-uniformly over the grid's range.
inline OracleSuiteReport run_oracle_suite(const OracleSuiteConfig& cfg) {
  if (cfg.cases < 1) throw ConfigError("case count must be >= 1");
  if (cfg.support_max < 1 || cfg.K_max < 1) throw ConfigError("support_max and K_max must be >= 1");
  if (cfg.alphas.empty()) throw ConfigError("at least one alpha is required");
  OracleSuiteReport rep;
  std::vector<std::vector<double>> calls(static_cast<std::size_t>(cfg.support_max * cfg.K_max));
  for (int c = 0; c < cfg.cases; ++c) {
    Rng rng(derive_seed(cfg.seed, "oracle-case", {static_cast<std::uint64_t>(c)}));
    const int cell = c % (cfg.support_max * cfg.K_max);
    const auto n = static_cast<std::size_t>(cell / cfg.K_max + 1);
    const int K = cell % cfg.K_max + 1;
    SearchSpace space;
    space.alpha = cfg.alphas[static_cast<std::size_t>(c) % cfg.alphas.size()];
    space.K = K;
    space.dimension = n + 1;  // one coordinate outside the support
    space.support.clear();
    for (std::size_t k = 0; k < n; ++k) space.support.push_back(k + 1);
    std::vector<double> target(space.dimension, 0.0);
    for (auto k : space.support) target[k] = std::pow(space.alpha, (2.0 * rng.uniform() - 1.0) * K);
    const std::uint64_t salt = rng.next_u64();
    ValuationOracle::Fn fn;
    if (cfg.non_monotone) {
      fn = [salt](const std::vector<double>& w) {
        std::uint64_t h = salt;
        for (double x : w) h = mix64(h ^ static_cast<std::uint64_t>(std::llround(std::log2(x > 0 ? x : 1.0) * 64)));
        return static_cast<double>(h >> 11);
      };
    } else {
      fn = [target](const std::vector<double>& w) {
        double v = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) v -= std::abs(w[k] - target[k]);
        return v;
      };
    }
    ValuationOracle line(fn), brute(fn);
    const auto found = iterated_line_search(space, line);
    const auto best = brute_force_argmax(space, brute);
    if (found.point != best.point) ++rep.mismatches;
    calls[static_cast<std::size_t>(cell)].push_back(static_cast<double>(found.calls));
    ++rep.cases;
  }
  std::vector<double> xs, ys;
  for (int cell = 0; cell < cfg.support_max * cfg.K_max; ++cell) {
    const auto& v = calls[static_cast<std::size_t>(cell)];
    if (v.empty()) continue;
    OracleCell oc;
    oc.support = static_cast<std::size_t>(cell / cfg.K_max + 1);
    oc.K = cell % cfg.K_max + 1;
    oc.cases = static_cast<int>(v.size());
    for (double x : v) oc.mean_calls += x;
    oc.mean_calls /= static_cast<double>(v.size());
    xs.push_back(static_cast<double>(oc.support) * oc.K);
    ys.push_back(oc.mean_calls);
    rep.cells.push_back(oc);
  }
  const auto fit = fit_line(xs, ys);
  rep.slope = fit[0];
  rep.intercept = fit[1];
  rep.r_squared = fit[2];
  return rep;
}

}  // namespace dlm
