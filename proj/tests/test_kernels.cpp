#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "bmc/error.hpp"
#include "bmc/kernels.hpp"
#include "bmc/rng.hpp"
#include "bmc/stats.hpp"

using namespace bmc;

namespace {

// p[x][y][z] = P0(x, y) P1(x, z): daughters conditionally independent.
FiniteKernel product_kernel(const std::vector<std::vector<double>>& p0, const std::vector<std::vector<double>>& p1,
                            std::vector<double> nu) {
  const std::size_t m = p0.size();
  std::vector<double> p(m * m * m);
  for (std::size_t x = 0; x < m; ++x)
    for (std::size_t y = 0; y < m; ++y)
      for (std::size_t z = 0; z < m; ++z) p[(x * m + y) * m + z] = p0[x][y] * p1[x][z];
  return FiniteKernel(m, std::move(p), std::move(nu));
}

BarParams noise_free() {
  BarParams b;
  b.alpha0 = 0.5;
  b.beta0 = 1.0;
  b.alpha1 = -0.25;
  b.beta1 = 2.0;
  b.sigma2 = 0.0;
  return b;
}

}  // namespace

TEST(Bar, NoiseFreeSampleIsAffine) {
  RandomStream rng(1);
  const auto [y, z] = bar_sample(noise_free(), 1.0, rng);
  EXPECT_DOUBLE_EQ(y, 1.5);
  EXPECT_DOUBLE_EQ(z, 1.75);
}

TEST(Bar, GaussianPairMomentsMatch) {
  BarParams b;
  b.alpha0 = 0.5;
  b.beta0 = 1.0;
  b.alpha1 = 0.3;
  b.beta1 = -1.0;
  b.sigma2 = 2.0;
  b.rho = 0.4;
  RandomStream rng(derive_seed(77, {tag_hash("bar-pair")}));
  const int n = 100000;
  const double x = 2.0;
  std::vector<double> ys(n), zs(n);
  for (int i = 0; i < n; ++i) std::tie(ys[i], zs[i]) = bar_sample(b, x, rng);
  const double my = stats::mean(ys), mz = stats::mean(zs);
  EXPECT_NEAR(my, 0.5 * x + 1.0, 3.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(mz, 0.3 * x - 1.0, 3.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(stats::variance(ys), 2.0, 3.0 * 2.0 * std::sqrt(2.0 / n));
  double cov = 0.0;
  for (int i = 0; i < n; ++i) cov += (ys[i] - my) * (zs[i] - mz);
  const double corr = cov / (n - 1) / std::sqrt(stats::variance(ys) * stats::variance(zs));
  // se of a sample correlation is about (1 - rho^2) / sqrt(n)
  EXPECT_NEAR(corr, 0.4, 3.0 * (1 - 0.16) / std::sqrt(n));
}

TEST(Bar, CompactNoiseStaysInsideItsSupport) {
  BarParams b;
  b.sigma2 = 1.0;
  b.rho = 0.5;
  b.noise = {NoiseFamily::truncated_gaussian, 1.5};
  RandomStream rng(5);
  for (int i = 0; i < 20000; ++i) {
    const auto [e0, e1] = sample_noise(b, rng);
    ASSERT_LE(std::abs(e0), 1.5);
    ASSERT_LE(std::abs(e1), 1.5);
  }
  b.noise = {NoiseFamily::uniform_box, 0.7};
  for (int i = 0; i < 20000; ++i) {
    const auto [e0, e1] = sample_noise(b, rng);
    ASSERT_LE(std::abs(e0), 0.7);
    // e1 = rho u0 + sqrt(1 - rho^2) u1 with (u0, u1) uniform on the box
    ASSERT_LE(std::abs(e1), (0.5 + std::sqrt(0.75)) * 0.7 + 1e-15);
  }
  const NoiseMoments eff = effective_noise_moments(b);
  EXPECT_GT(eff.sigma2, 0.0);
  EXPECT_LT(std::abs(eff.rho), 1.0);
}

TEST(Bar, InvalidParametersAreRejected) {
  BarParams b;
  b.alpha0 = 1.0;
  EXPECT_THROW(b.validate(), Error);
  b.alpha0 = 0.2;
  b.rho = 1.0;
  EXPECT_THROW(b.validate(), Error);
}

TEST(Bar, LineageChainMeanReachesStationaryMean) {
  BarParams b;
  b.alpha0 = 0.5;
  b.beta0 = 1.0;
  b.alpha1 = 0.5;
  b.beta1 = 1.0;
  b.sigma2 = 1.0;
  RandomStream rng(derive_seed(3, {tag_hash("lineage")}));
  double y = 0.0;
  const int n = 100000;
  stats::CompensatedSum s;
  for (int i = 0; i < n; ++i) {
    y = bar_lineage_step(b, y, rng);
    s.add(y);
  }
  // AR(1) with a = 0.5: stationary var 1 / (1 - a^2), long-run var of the mean 1 / (1 - a)^2 per step
  EXPECT_NEAR(s.value() / n, 2.0, 3.0 * 2.0 / std::sqrt(n));
}

TEST(Bar, ConditionalMoments) {
  BarParams b;
  b.alpha0 = 0.5;
  b.beta0 = 1.0;
  b.alpha1 = -0.2;
  b.beta1 = 0.3;
  b.sigma2 = 1.5;
  b.rho = 0.25;
  const Quadratic r0 = bar_conditional_moment(b, BarMoment::residual0);
  EXPECT_EQ(r0.c0, 0.0);
  EXPECT_EQ(r0.c1, 0.0);
  EXPECT_EQ(r0.c2, 0.0);
  const Quadratic r0sq = bar_conditional_moment(b, BarMoment::residual0_sq);
  EXPECT_DOUBLE_EQ(r0sq(3.0), 1.5);
  EXPECT_DOUBLE_EQ(bar_conditional_moment(b, BarMoment::residual0_residual1)(-1.0), 0.25 * 1.5);
  const Quadratic xy = bar_conditional_moment(b, BarMoment::xy);
  for (double x : {-2.0, 0.0, 1.0, 3.5}) EXPECT_NEAR(xy(x), x * (0.5 * x + 1.0), 1e-12);
  EXPECT_NEAR(bar_conditional_moment(b, BarMoment::y)(2.0), 2.0, 1e-15);
  EXPECT_THROW(parse_bar_moment("x3"), Error);

  // Monte Carlo conditional average of x*y at x = 1.
  RandomStream rng(derive_seed(8, {tag_hash("xy")}));
  const int n = 100000;
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = 1.0 * bar_sample(b, 1.0, rng).first;
  EXPECT_NEAR(stats::mean(v), xy(1.0), 3.0 * std::sqrt(stats::variance(v) / n));
}

TEST(Finite, MeanKernelOfIdentityAndSwap) {
  const FiniteKernel k = product_kernel({{1, 0}, {0, 1}}, {{0, 1}, {1, 0}}, {0.5, 0.5});
  const Eigen::MatrixXd q = mean_kernel(k);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(q(i, j), 0.5);
}

TEST(Finite, MarginalsAndMeanKernelAreStochastic) {
  RandomStream rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const FiniteKernel k = random_finite_kernel(2 + trial % 4, rng);
    for (const Eigen::MatrixXd& m : {k.daughter0_marginal(), k.daughter1_marginal(), mean_kernel(k)}) {
      for (Eigen::Index x = 0; x < m.rows(); ++x) {
        EXPECT_NEAR(m.row(x).sum(), 1.0, 1e-12);
        EXPECT_GE(m.row(x).minCoeff(), 0.0);
      }
    }
  }
}

TEST(Finite, InvalidKernelIsRejected) {
  EXPECT_THROW(FiniteKernel(2, std::vector<double>(8, 0.2), {0.5, 0.5}), Error);
  EXPECT_THROW(FiniteKernel(2, std::vector<double>(8, 0.25), {0.6, 0.5}), Error);
  EXPECT_THROW(FiniteKernel(2, std::vector<double>(7, 0.25), {0.5, 0.5}), Error);
}

TEST(Finite, ApplyPExamples) {
  RandomStream rng(4);
  const FiniteKernel k = random_finite_kernel(3, rng);
  const Functional one = Functional::constant(1.0, FunctionalKind::triangle);
  const Functional one_table = Functional::triangle_table(3, std::vector<double>(27, 1.0));
  for (double v : to_vector(apply_P(k, one_table))) EXPECT_NEAR(v, 1.0, 1e-12);
  EXPECT_THROW(apply_P(k, Functional::single_table({1, 2, 3})), Error);

  // m = 2, p[0] uniform over the four cells, f = y + z.
  const FiniteKernel uniform(2, std::vector<double>(8, 0.25), {0.5, 0.5});
  std::vector<double> sum(8);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int z = 0; z < 2; ++z) sum[(x * 2 + y) * 2 + z] = y + z;
  EXPECT_DOUBLE_EQ(to_vector(apply_P(uniform, Functional::triangle_table(2, sum)))(0), 1.0);
  (void)one;
}

TEST(Finite, ApplyPIsLinearAndIntegratesAgainstNu) {
  RandomStream rng(12);
  const FiniteKernel k = random_finite_kernel(3, rng);
  std::vector<double> a(27), b(27);
  for (auto& v : a) v = rng.uniform() - 0.5;
  for (auto& v : b) v = rng.uniform() * 3.0;
  const Functional f = Functional::triangle_table(3, a), g = Functional::triangle_table(3, b);
  const Eigen::VectorXd lhs = to_vector(apply_P(k, Functional::linear_combination(2.0, f, -0.7, g)));
  const Eigen::VectorXd rhs = 2.0 * to_vector(apply_P(k, f)) - 0.7 * to_vector(apply_P(k, g));
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);

  double direct = 0.0;
  for (std::size_t x = 0; x < 3; ++x)
    for (std::size_t y = 0; y < 3; ++y)
      for (std::size_t z = 0; z < 3; ++z) direct += k.nu()[x] * k(x, y, z) * a[(x * 3 + y) * 3 + z];
  const Eigen::VectorXd pf = to_vector(apply_P(k, f));
  double contracted = 0.0;
  for (std::size_t x = 0; x < 3; ++x) contracted += k.nu()[x] * pf(x);
  EXPECT_NEAR(contracted, direct, 1e-12);
}

TEST(Finite, ApplyQPower) {
  // P0 = P1 = [[.9,.1],[.2,.8]] so that Q equals that matrix.
  const FiniteKernel k = product_kernel({{.9, .1}, {.2, .8}}, {{.9, .1}, {.2, .8}}, {0.5, 0.5});
  const Functional f = Functional::single_table({1.0, -2.0});
  const Eigen::VectorXd qf = to_vector(apply_Q_power(k, f, 1));
  EXPECT_NEAR(qf(0), 0.7, 1e-15);
  EXPECT_NEAR(qf(1), -1.4, 1e-15);
  EXPECT_EQ(to_vector(apply_Q_power(k, f, 0)), to_vector(f));
  EXPECT_THROW(apply_Q_power(k, f, -1), Error);

  const FiniteKernel flat(2, std::vector<double>(8, 0.25), {0.5, 0.5});
  const Eigen::VectorXd zero = to_vector(apply_Q_power(flat, Functional::single_table({1.0, -1.0}), 1));
  EXPECT_LT(zero.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Finite, DaughterInnovationHasZeroConditionalMean) {
  RandomStream rng(9);
  const FiniteKernel k = random_finite_kernel(4, rng);
  const std::vector<double> g{1.0, -0.5, 2.0, 0.25};
  const Functional f = daughter_innovation(k, g);
  EXPECT_LT(to_vector(apply_P(k, f)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Finite, TextRoundTrip) {
  RandomStream rng(31);
  const FiniteKernel k = random_finite_kernel(3, rng);
  std::stringstream ss;
  write_finite_kernel(ss, k);
  const FiniteKernel back = read_finite_kernel(ss);
  ASSERT_EQ(back.states(), 3u);
  for (std::size_t i = 0; i < 27; ++i) EXPECT_EQ(back.tensor()[i], k.tensor()[i]);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back.nu()[i], k.nu()[i]);
}
