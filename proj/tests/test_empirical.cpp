#include <gtest/gtest.h>

#include <cmath>

#include "bmc/empirical.hpp"
#include "bmc/error.hpp"
#include "bmc/rng.hpp"
#include "bmc/simulate.hpp"
#include "bmc/stats.hpp"

using namespace bmc;

namespace {

TreePopulation from_values(std::vector<double> v) {
  TreePopulation pop;
  pop.values = std::move(v);
  pop.depth = tree::generation(pop.values.size());
  pop.model = "observed";
  return pop;
}

BarParams gaussian_bar() {
  BarParams b;
  b.alpha0 = 0.6;
  b.beta0 = 0.5;
  b.alpha1 = -0.4;
  b.beta1 = 1.0;
  b.sigma2 = 0.8;
  b.rho = 0.2;
  return b;
}

const Functional identity = Functional::single([](double x) { return x; });

}  // namespace

TEST(Empirical, GenerationMean) {
  const auto pop = from_values({0, 0, 0, 1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(mean_generation(pop, identity, 2), 2.5);
  const auto c = Functional::constant(3.5, FunctionalKind::single);
  for (int r = 0; r <= 2; ++r) EXPECT_DOUBLE_EQ(mean_generation(pop, c, r), 3.5);
  EXPECT_THROW(mean_generation(pop, identity, 3), Error);
}

TEST(Empirical, TreeMean) {
  const auto pop = from_values({1, 2, 3});
  EXPECT_DOUBLE_EQ(mean_tree(pop, identity, 1), 2.0);
  EXPECT_DOUBLE_EQ(mean_tree(pop, Functional::constant(1.0, FunctionalKind::single), 1), 1.0);
}

TEST(Empirical, TreeMeanRegroupsGenerationMeans) {
  const auto pop = simulate_tree(gaussian_bar(), 10, 4);
  for (int r = 0; r <= 10; ++r) {
    double regrouped = 0.0;
    for (int q = 0; q <= r; ++q) regrouped += std::ldexp(1.0, q) / tree::subtree_size(r) * mean_generation(pop, identity, q);
    EXPECT_NEAR(mean_tree(pop, identity, r), regrouped, 1e-12);
  }
}

TEST(Empirical, TriangleNeedsTheNextGeneration) {
  const auto pop = simulate_tree(gaussian_bar(), 4, 1);
  const Functional y = Functional::triangle([](double, double y, double) { return y; });
  EXPECT_NO_THROW(mean_tree(pop, y, 3));
  try {
    mean_tree(pop, y, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::insufficient_depth);
  }
}

TEST(Empirical, NoiseFreeDaughterMean) {
  BarParams b = gaussian_bar();
  b.sigma2 = 0.0;
  b.initial = InitialLaw::point(2.0);
  const auto pop = simulate_tree(b, 7, 1);
  const Functional y = Functional::triangle([](double, double y, double) { return y; });
  for (int r = 0; r <= 6; ++r) {
    EXPECT_NEAR(mean_generation(pop, y, r), 0.6 * mean_generation(pop, identity, r) + 0.5, 1e-12);
  }
}

TEST(Empirical, PermutedMean) {
  const auto pop = simulate_tree(gaussian_bar(), 8, 2);
  RandomStream rng(3);
  const auto pi = tree::sample_permutation(8, rng);
  EXPECT_DOUBLE_EQ(mean_permuted(pop, identity, pi, 1), pop.at(1));
  for (int r = 0; r <= 8; ++r) {
    EXPECT_NEAR(mean_permuted(pop, identity, pi, tree::subtree_size(r)), mean_tree(pop, identity, r), 1e-12);
  }
  EXPECT_THROW(mean_permuted(pop, identity, pi, tree::subtree_size(8) + 1), Error);
  EXPECT_THROW(mean_permuted(pop, identity, pi, 0), Error);
}

TEST(Empirical, PermutedMeanDecomposition) {
  const auto pop = simulate_tree(gaussian_bar(), 9, 6);
  RandomStream rng(8);
  const auto pi = tree::sample_permutation(9, rng);
  for (std::uint64_t n : {5u, 77u, 300u, 1000u}) {
    const int rn = tree::generation(n);
    double value = 0.0;
    for (int q = 0; q < rn; ++q) value += std::ldexp(1.0, q) / n * mean_generation(pop, identity, q);
    for (std::uint64_t i = std::uint64_t{1} << rn; i <= n; ++i) value += pop.at(pi(i)) / n;
    EXPECT_NEAR(mean_permuted(pop, identity, pi, n), value, 1e-12);
  }
}

TEST(Empirical, MeansAreLinear) {
  const auto pop = simulate_tree(gaussian_bar(), 8, 9);
  const Functional sq = Functional::single([](double x) { return x * x; });
  const Functional combo = Functional::linear_combination(1.5, identity, -2.0, sq);
  RandomStream rng(1);
  const auto pi = tree::sample_permutation(8, rng);
  EXPECT_NEAR(mean_tree(pop, combo, 8), 1.5 * mean_tree(pop, identity, 8) - 2.0 * mean_tree(pop, sq, 8), 1e-12);
  EXPECT_NEAR(mean_generation(pop, combo, 5),
              1.5 * mean_generation(pop, identity, 5) - 2.0 * mean_generation(pop, sq, 5), 1e-12);
  EXPECT_NEAR(mean_permuted(pop, combo, pi, 200),
              1.5 * mean_permuted(pop, identity, pi, 200) - 2.0 * mean_permuted(pop, sq, pi, 200), 1e-12);
}

TEST(Empirical, ResidualBracketIsLinearInN) {
  const BarParams b = gaussian_bar();
  const auto pop = simulate_tree(b, 9, 12);
  RandomStream rng(5);
  const auto pi = tree::sample_permutation(9, rng);
  const Functional f = bar_triangle_functional(b, BarMoment::residual0);
  const Functional pf2 = bar_conditional_moment(b, BarMoment::residual0_sq).as_functional();
  const std::uint64_t n = tree::subtree_size(8);
  const MartingalePath path = martingale_path(pop, f, pi, n, pf2);
  ASSERT_EQ(path.partial_sums.size(), n + 1);
  EXPECT_EQ(path.partial_sums[0], 0.0);
  for (std::uint64_t k = 1; k <= n; ++k) {
    EXPECT_NEAR(path.bracket[k], k * b.sigma2, 1e-9);
    EXPECT_NEAR(path.partial_sums[k] - path.partial_sums[k - 1], path.increments[k - 1], 1e-12);
    EXPECT_GE(path.bracket[k], path.bracket[k - 1]);
  }
  EXPECT_NEAR(path.partial_sums[n], sum_tree(pop, f, 8), 1e-9);
}

TEST(Empirical, ResidualIncrementsAreCentered) {
  const BarParams b = gaussian_bar();
  const Functional f = bar_triangle_functional(b, BarMoment::residual0);
  const Functional pf2 = bar_conditional_moment(b, BarMoment::residual0_sq).as_functional();
  const int reps = 10000;
  std::vector<double> inc(reps);
  for (int k = 0; k < reps; ++k) {
    const auto pop = simulate_tree(b, 3, derive_seed(21, {static_cast<std::uint64_t>(k)}));
    RandomStream rng(derive_seed(22, {static_cast<std::uint64_t>(k)}));
    const auto pi = tree::sample_permutation(3, rng);
    inc[k] = martingale_path(pop, f, pi, 7, pf2).increments.back();
  }
  EXPECT_NEAR(stats::mean(inc), 0.0, 3.0 * std::sqrt(stats::variance(inc) / reps));
}
