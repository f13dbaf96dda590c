#include <gtest/gtest.h>

#include <cmath>

#include "dlm/oracle_search.hpp"

namespace {

dlm::SearchSpace space(double alpha, int K, std::size_t dimension, std::vector<std::size_t> support) {
  dlm::SearchSpace s;
  s.alpha = alpha;
  s.K = K;
  s.dimension = dimension;
  s.support = std::move(support);
  return s;
}

dlm::ValuationOracle distance_to(std::vector<double> target) {
  return dlm::ValuationOracle([target](const std::vector<double>& w) {
    double v = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) v -= std::abs(w[k] - target[k]);
    return v;
  });
}

TEST(Space, Grid) {
  const auto s = space(10, 1, 1, {0});
  EXPECT_EQ(s.grid_size(), 3u);
  const auto g = s.grid();
  ASSERT_EQ(g.size(), 3u);
  EXPECT_DOUBLE_EQ(g[0], 0.1);
  EXPECT_DOUBLE_EQ(g[1], 1.0);
  EXPECT_DOUBLE_EQ(g[2], 10.0);
  for (int K = 0; K < 5; ++K) {
    const auto gk = space(2, K, 1, {0}).grid();
    EXPECT_EQ(gk.size(), static_cast<std::size_t>(2 * K + 1));
    for (std::size_t i = 1; i < gk.size(); ++i) EXPECT_LT(gk[i - 1], gk[i]);
  }
  EXPECT_THROW(dlm::validate(space(1.0, 1, 1, {0})), dlm::ConfigError);
  EXPECT_THROW(dlm::validate(space(10, -1, 1, {0})), dlm::ConfigError);
  EXPECT_THROW(dlm::validate(space(10, 1, 1, {1})), dlm::ConfigError);
  EXPECT_THROW(dlm::validate(space(10, 1, 3, {1, 1})), dlm::ConfigError);
}

TEST(Oracle, CountsEveryCall) {
  auto v = distance_to({1.0});
  v({0.0});
  v({2.0});
  EXPECT_EQ(v.calls(), 2u);
}

TEST(OptimizeStep, ImprovementIsAccepted) {
  const auto s = space(10, 2, 2, {0, 1});
  const auto r = dlm::optimize_step(s, {-2, -2}, {-1, -2}, -5.0, -3.0, 0);
  EXPECT_EQ(r.w, (dlm::GridPoint{-1, -2}));
  EXPECT_EQ(r.w_prime, (dlm::GridPoint{0, -2}));  // scaled by alpha once more
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.i, 0u);
}

TEST(OptimizeStep, ProposalHeldAtTheTopOfTheGrid) {
  const auto s = space(10, 1, 1, {0});
  const auto r = dlm::optimize_step(s, {0}, {1}, -1.0, 0.0, 0);
  EXPECT_EQ(r.w, dlm::GridPoint{1});
  EXPECT_EQ(r.w_prime, dlm::GridPoint{1});
}

TEST(OptimizeStep, NoImprovementAdvances) {
  const auto s = space(10, 1, 2, {0, 1});
  auto r = dlm::optimize_step(s, {-1, -1}, {0, -1}, -1.0, -1.0, 0);  // a tie is not an improvement
  EXPECT_EQ(r.w, (dlm::GridPoint{-1, -1}));
  EXPECT_EQ(r.i, 1u);
  EXPECT_FALSE(r.converged);
  r = dlm::optimize_step(s, {-1, -1}, {-1, 0}, 0.0, -2.0, 1);
  EXPECT_EQ(r.i, 2u);
  EXPECT_TRUE(r.converged);
}

TEST(OptimizeStep, AtMaxDoesNotMove) {
  const auto s = space(10, 1, 1, {0});
  const auto r = dlm::optimize_step(s, {1}, {1}, 0.0, 5.0, 0);
  EXPECT_EQ(r.w, dlm::GridPoint{1});
  EXPECT_TRUE(r.converged);
}

TEST(LineSearch, Examples) {
  auto v = distance_to({1.0});
  EXPECT_EQ(dlm::iterated_line_search(space(10, 1, 1, {0}), v).point, dlm::GridPoint{0});
  auto low = distance_to({0.001});
  const auto r = dlm::iterated_line_search(space(10, 1, 1, {0}), low);
  EXPECT_EQ(r.point, dlm::GridPoint{-1});
  EXPECT_DOUBLE_EQ(r.w[0], 0.1);
  auto two = distance_to({10.0, 0.1});
  EXPECT_EQ(dlm::iterated_line_search(space(10, 1, 2, {0, 1}), two).point, (dlm::GridPoint{1, -1}));
}

TEST(LineSearch, OffSupportCoordinatesStayZero) {
  auto v = distance_to({0.0, 5.0, 0.0});
  const auto r = dlm::iterated_line_search(space(2, 3, 3, {1}), v);
  EXPECT_EQ(r.w[0], 0.0);
  EXPECT_EQ(r.w[2], 0.0);
  EXPECT_DOUBLE_EQ(r.w[1], 4.0);
}

TEST(LineSearch, EmptySupportMakesNoCalls) {
  auto v = distance_to({1.0});
  EXPECT_EQ(dlm::iterated_line_search(space(10, 1, 1, {}), v).calls, 0u);
}

TEST(BruteForce, Examples) {
  auto two = distance_to({10.0, 0.1});
  const auto r = dlm::brute_force_argmax(space(10, 1, 2, {0, 1}), two);
  EXPECT_EQ(r.point, (dlm::GridPoint{1, -1}));
  EXPECT_EQ(r.calls, 9u);
  dlm::ValuationOracle flat([](const std::vector<double>&) { return 1.0; });
  EXPECT_EQ(dlm::brute_force_argmax(space(10, 2, 3, {0, 1, 2}), flat).point, (dlm::GridPoint{-2, -2, -2}));
  EXPECT_THROW(dlm::brute_force_argmax(space(10, 10, 4, {0, 1, 2, 3}), flat), dlm::ConfigError);
}

TEST(Property, MatchesBruteForceOnMonotoneOracles) {
  dlm::Rng rng(99);
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 1 + rng.below(3);
    const int K = 1 + static_cast<int>(rng.below(3));
    const double alpha = rng.bernoulli(0.5) ? 2.0 : 10.0;
    std::vector<std::size_t> support;
    for (std::size_t k = 0; k < n; ++k) support.push_back(k);
    const auto s = space(alpha, K, n, support);
    std::vector<double> target(n);
    for (auto& t : target) t = std::pow(alpha, (2.0 * rng.uniform() - 1.0) * K);
    auto a = distance_to(target), b = distance_to(target);
    ASSERT_EQ(dlm::iterated_line_search(s, a).point, dlm::brute_force_argmax(s, b).point) << c;
  }
}

TEST(Property, CallBoundForTwoCoordinates) {
  dlm::Rng rng(5);
  const auto s = space(10, 2, 2, {0, 1});
  for (int c = 0; c < 100; ++c) {
    const std::vector<double> target{std::pow(10.0, 4 * rng.uniform() - 2), std::pow(10.0, 4 * rng.uniform() - 2)};
    // Log-scale distance is another monotone valuation.
    dlm::ValuationOracle v([target](const std::vector<double>& w) {
      return -std::abs(std::log(w[0] / target[0])) - std::abs(std::log(w[1] / target[1]));
    });
    const auto r = dlm::iterated_line_search(s, v);
    ASSERT_LE(r.calls, 2u * 5u * 2u);
    ASSERT_EQ(r.calls, v.calls());
  }
}

TEST(Suite, DefaultsHaveNoMismatchesAndLinearCost) {
  const auto rep = dlm::run_oracle_suite({});
  EXPECT_EQ(rep.cases, 200);
  EXPECT_EQ(rep.mismatches, 0);
  EXPECT_EQ(rep.cells.size(), 9u);
  EXPECT_GT(rep.slope, 0.0);
  EXPECT_GT(rep.r_squared, 0.9);
}

TEST(Suite, NonMonotoneOraclesCanDiverge) {
  dlm::OracleSuiteConfig cfg;
  cfg.non_monotone = true;
  const auto rep = dlm::run_oracle_suite(cfg);
  EXPECT_GT(rep.mismatches, 0);
}

TEST(Suite, RejectsEmptyBudget) {
  dlm::OracleSuiteConfig cfg;
  cfg.cases = 0;
  EXPECT_THROW(dlm::run_oracle_suite(cfg), dlm::ConfigError);
}

TEST(FitLine, ExactLine) {
  const auto f = dlm::fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
  EXPECT_DOUBLE_EQ(f[0], 2.0);
  EXPECT_DOUBLE_EQ(f[1], 1.0);
  EXPECT_DOUBLE_EQ(f[2], 1.0);
}

}  // namespace
