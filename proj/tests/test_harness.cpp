#include <gtest/gtest.h>

#include <cmath>

#include "bmc/config.hpp"
#include "bmc/error.hpp"
#include "bmc/harness.hpp"
#include "bmc/stats.hpp"

using namespace bmc;
using nlohmann::json;

namespace {

const json kBar = {{"type", "bar"}, {"alpha0", 0.5}, {"beta0", 1.0}, {"alpha1", 0.3},
                   {"beta1", 0.5},  {"sigma2", 1.0}, {"rho", 0.3}};

// Two states, conditionally independent daughters; Q has second eigenvalue 0.35.
const json kFinite = {{"type", "finite"},
                      {"states", 2},
                      {"tensor", {0.49, 0.21, 0.21, 0.09, 0.12, 0.18, 0.28, 0.42}},
                      {"nu", {0.5, 0.5}}};

harness::ExperimentResult run(const json& root) {
  return harness::run_experiment(config::parse_experiment(root, {}));
}

json with_experiment(json model, json functional, json experiment, std::uint64_t seed = 7) {
  json root = {{"seed", seed}, {"experiment", std::move(experiment)}};
  if (!model.is_null()) root["model"] = std::move(model);
  if (!functional.is_null()) root["functional"] = std::move(functional);
  return root;
}

}  // namespace

TEST(Harness, ResultsAreIndependentOfWorkerCount) {
  const json root = with_experiment(kBar, "x-centered",
                                    {{"type", "deviation"}, {"replications", 300}, {"depths", {3, 4, 5}}, {"deltas", {0.5}}});
  auto serial = config::parse_experiment(root, {});
  auto parallel = serial;
  parallel.workers = 4;
  const auto a = harness::run_experiment(serial);
  const auto b = harness::run_experiment(parallel);
  EXPECT_EQ(a.csv(), b.csv());
  EXPECT_EQ(a.summary.dump(), b.summary.dump());
  EXPECT_EQ(run(root).csv(), a.csv());
}

TEST(Harness, ParallelForPropagatesExceptions) {
  EXPECT_THROW(harness::parallel_for_replications(10, 3,
                                                  [](std::size_t k) {
                                                    if (k == 6) throw std::runtime_error("boom");
                                                  }),
               std::runtime_error);
  std::vector<int> hits(100, 0);
  harness::parallel_for_replications(100, 4, [&](std::size_t k) { hits[k] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Deviation, ImpossibleEventIsExactlyZero) {
  json f = {{"kind", "single"}, {"values", {1.0, -1.0}}, {"center", true}};
  const auto res = run(with_experiment(kFinite, f,
                                       {{"type", "deviation"}, {"replications", 200}, {"depths", {2, 3, 4}}, {"deltas", {5.0}}}));
  for (const auto& cell : res.summary.at("curves")[0].at("cells")) {
    EXPECT_EQ(cell.at("hits"), 0);
    EXPECT_EQ(cell.at("censored"), true);
  }
}

TEST(Deviation, ProbabilitiesAndFittedBound) {
  json f = {{"kind", "single"}, {"values", {1.0, -1.0}}, {"center", true}};
  const auto res = run(with_experiment(
      kFinite, f,
      {{"type", "deviation"}, {"replications", 2000}, {"depths", {2, 3, 4, 5}}, {"deltas", {0.3}}, {"family", "exponential"}}));
  const json& curve = res.summary.at("curves")[0];
  const double c_star = curve.at("c_star");
  EXPECT_TRUE(std::isfinite(c_star));
  for (const auto& cell : curve.at("cells")) {
    const double p = cell.at("p_hat");
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    EXPECT_NEAR(double(cell.at("stderr")), stats::binomial_stderr(p, 2000), 1e-15);
    if (!cell.at("censored")) EXPECT_LE(p, c_star * double(cell.at("shape")) * (1 + 1e-12));
  }
  EXPECT_EQ(curve.at("below_fitted_bound"), true);
}

TEST(Clt, SingleReplicationIsFlagged) {
  const auto res = run(with_experiment(kBar, "residual0", {{"type", "clt"}, {"replications", 1}, {"depths", {3}}}));
  EXPECT_EQ(res.summary.at("depths")[0].at("insufficient_replications"), true);
}

TEST(Clt, ResidualStatisticIsStandardNormal) {
  const auto res = run(with_experiment(kBar, "residual0", {{"type", "clt"}, {"replications", 500}, {"depths", {5}}}));
  const json& d = res.summary.at("depths")[0];
  EXPECT_GT(double(d.at("ks_pvalue")), 0.001);
  EXPECT_NEAR(double(d.at("variance")), 1.0, 0.2);
}

TEST(Clt, UnknownStationaryBracketIsAnError) {
  json f = {{"kind", "single"}, {"values", {1.0, -1.0}}, {"center", true}};
  EXPECT_THROW(run(with_experiment(kFinite, f, {{"type", "clt"}, {"replications", 10}, {"depths", {3}}})), Error);
}

TEST(Mdp, CurvesAreMonotoneInX) {
  json f = {{"kind", "innovation"}, {"values", {1.0, -1.0}}};
  const auto res = run(with_experiment(
      kFinite, f,
      {{"type", "mdp"}, {"replications", 2000}, {"n_grid", {64, 256, 1024}}, {"x_grid", {0.0, 0.25, 0.5, 1.0}}}));
  EXPECT_EQ(res.summary.at("verdicts").at("monotone_in_x"), true);
}

TEST(Mdp, RejectsInvalidSpeed) {
  EXPECT_THROW(run(with_experiment(kBar, "residual0",
                                   {{"type", "mdp"}, {"replications", 10}, {"n_grid", {64}}, {"x_grid", {0.0}}, {"gamma", 0.4}})),
               Error);
  // Without a bounded functional the default speed assumption cannot hold for n^gamma.
  EXPECT_THROW(run(with_experiment(kBar, "residual0", {{"type", "mdp"}, {"replications", 10}, {"n_grid", {64}}, {"x_grid", {0.0}}})),
               Error);
}

TEST(Superexp, ConstantBracketIsFullyCensored) {
  const auto res = run(with_experiment(
      kBar, "residual0",
      {{"type", "superexp"}, {"replications", 100}, {"n_grid", {64, 256}}, {"deltas", {0.1}}, {"target", "bracket"}}));
  const json& curve = res.summary.at("curves")[0];
  EXPECT_EQ(curve.at("fully_censored"), true);
  for (const auto& p : curve.at("points")) EXPECT_EQ(p.at("hits"), 0);
}

TEST(Superexp, ZeroDeltaIsRejected) {
  EXPECT_THROW(run(with_experiment(kBar, "residual0",
                                   {{"type", "superexp"}, {"replications", 10}, {"n_grid", {64}}, {"deltas", {0.0}}})),
               Error);
}

TEST(Lil, ZeroFunctionalGivesZeroStatistic) {
  const auto pop = simulate_tree(std::get<BarParams>(config::parse_model(kBar)), 8, 3);
  for (double s : harness::lil_statistics(pop, Functional::constant(0.0, FunctionalKind::triangle), 8, 1.0)) EXPECT_EQ(s, 0.0);
}

TEST(Lil, HomogeneousUnderScaling) {
  const BarParams b = std::get<BarParams>(config::parse_model(kBar));
  const auto pop = simulate_tree(b, 9, 4);
  const auto bundle = config::bar_functional(b, "residual0");
  const auto scaled = harness::scaled(bundle, 3.0);
  const auto a = harness::lil_statistics(pop, bundle.f, 8, *bundle.stationary_pf2);
  const auto c = harness::lil_statistics(pop, scaled.f, 8, *scaled.stationary_pf2);
  ASSERT_EQ(a.size(), c.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], c[i], 1e-12 * std::max(1.0, std::abs(a[i])));
}

TEST(Asclt, ZeroPathIsAStepAtZero) {
  const std::vector<double> zeros(200, 0.0);
  const auto m = harness::asclt_measure(zeros, 1.0);
  for (std::size_t i = 0; i < m.grid.size(); ++i) {
    if (m.grid[i] < 0) EXPECT_EQ(m.cdf[i], 0.0);
    else EXPECT_NEAR(m.cdf[i], m.normalization, 1e-12);
  }
}

TEST(Asclt, NormalizationTelescopes) {
  const std::size_t steps = 1000;
  const auto m = harness::asclt_measure(std::vector<double>(steps + 1, 0.0), 2.0);
  // sum_{n=1}^{N} (1 - n / (n + 1)) = H_{N+1} - 1, divided by ln V_N^2 = ln(2 N)
  double h = 0.0;
  for (std::size_t n = 1; n <= steps; ++n) h += 1.0 / (n + 1);
  EXPECT_NEAR(m.normalization, h / std::log(2.0 * steps), 1e-12);
  EXPECT_GT(m.normalization, 0.0);
  EXPECT_LE(m.normalization, 1.0);
  EXPECT_THROW(harness::asclt_measure(std::vector<double>(10, 0.0), 1.0), Error);
}

TEST(Slln, UncenteredFunctionalFailsTheVerdict) {
  json f = {{"kind", "single"}, {"values", {1.0, 1.0}}, {"center", false}};
  const auto res = run(with_experiment(
      kFinite, f, {{"type", "slln"}, {"replications", 3}, {"n_grid", {256, 4096}}, {"tolerance", 0.02}}));
  EXPECT_EQ(res.summary.at("verdicts").at("all_final_within_tolerance"), false);
  for (const auto& fin : res.summary.at("finals")) EXPECT_NEAR(double(fin.at("final")), 1.0, 1e-12);
}

TEST(Slln, CenteredBoundedFunctionalSettles) {
  json f = {{"kind", "single"}, {"values", {1.0, -1.0}}, {"center", true}};
  const auto res = run(with_experiment(
      kFinite, f, {{"type", "slln"}, {"replications", 5}, {"n_grid", {1024, 16384, 65536}}, {"tolerance", 0.02}}));
  EXPECT_EQ(res.summary.at("verdicts").at("all_final_within_tolerance"), true);
  EXPECT_EQ(res.summary.at("verdicts").at("permutation_streams_agree"), true);
}

TEST(ExactTables, MomentsAllPass) {
  const auto res = run(with_experiment(nullptr, nullptr,
                                       {{"type", "moments-exact"}, {"kernels", 5}, {"depths", {1, 2, 3}}, {"orders", {2}}}));
  EXPECT_EQ(res.summary.at("verdicts").at("all_pass"), true);
  EXPECT_LE(double(res.summary.at("max_abs_diff")), 1e-10);
}

TEST(ExactTables, EventsContainThreeOverThirtyTwo) {
  const auto res = run(with_experiment(nullptr, nullptr, {{"type", "events-exact"}, {"depths", {2}}}));
  EXPECT_NE(res.csv().find("0.09375"), std::string::npos);
  EXPECT_EQ(res.summary.at("verdicts").at("e0_generation2_is_3_over_32"), true);
}

TEST(Config, UnknownKeysAndTypesAreRejected) {
  auto code = [](const json& root) {
    try {
      config::parse_experiment(root, {});
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::invalid_argument;
  };
  EXPECT_EQ(code(with_experiment(kBar, "residual0", {{"type", "nope"}})), ErrorCode::config);
  EXPECT_EQ(code(with_experiment(kBar, "residual0", {{"type", "clt"}, {"colour", 1}})), ErrorCode::config);
  json extra = kBar;
  extra["gamma"] = 1;
  EXPECT_EQ(code(with_experiment(extra, "residual0", {{"type", "clt"}})), ErrorCode::config);
}

TEST(Config, EchoOmitsPlacementFields) {
  json root = with_experiment(kBar, "residual0", {{"type", "clt"}, {"depths", {3}}});
  root["out"] = "somewhere";
  root["workers"] = 3;
  const auto cfg = config::parse_experiment(root, {std::uint64_t{99}, 2, std::string("else")});
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.workers, 2);
  EXPECT_FALSE(cfg.echo.contains("out"));
  EXPECT_FALSE(cfg.echo.contains("workers"));
  EXPECT_EQ(cfg.echo.at("seed"), 99);
}
