// Acceptance run: one PASS/FAIL line per criterion. Settings and tolerances
// are fixed here; a failing criterion is reported, never retuned.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "bmc/config.hpp"
#include "bmc/exact.hpp"
#include "bmc/harness.hpp"
#include "bmc/inference.hpp"
#include "bmc/simulate.hpp"

namespace {

using nlohmann::json;
using namespace bmc;

constexpr std::uint64_t kSeed = 20261016;

// Tolerances and budgets.
constexpr double kExactMomentTolerance = 1e-10;
constexpr double kFourthMomentGrowth = 10.0;
constexpr double kRecoveryTolerance = 1e-10;
constexpr double kKsPvalueFloor = 0.01;
constexpr double kVarianceBand = 0.05;
constexpr double kFrobeniusTolerance = 0.15;
constexpr double kLevelLow = 0.02, kLevelHigh = 0.09;
constexpr double kPowerFloor = 0.95;
constexpr double kPolynomialSlopeCeiling = -0.8;
constexpr double kSuperexpFloor = -0.5;
constexpr double kLilFraction = 0.9;
constexpr double kAscltTolerance = 0.1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

harness::ExperimentResult run(json root) {
  root["seed"] = kSeed;
  return harness::run_experiment(config::parse_experiment(root, {std::nullopt, workers(), std::nullopt}));
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const json kGaussianBar = {{"type", "bar"}, {"alpha0", 0.5}, {"beta0", 1.0}, {"alpha1", 0.3},
                           {"beta1", 1.5},  {"sigma2", 1.0}, {"rho", 0.3}};

// P0 = [[.7,.3],[.3,.7]], P1 = [[.6,.4],[.4,.6]], daughters conditionally
// independent; Q = [[.65,.35],[.35,.65]] so alpha = 0.3.
json bounded_finite() {
  const double p0[2][2] = {{0.7, 0.3}, {0.3, 0.7}};
  const double p1[2][2] = {{0.6, 0.4}, {0.4, 0.6}};
  json tensor = json::array();
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int z = 0; z < 2; ++z) tensor.push_back(p0[x][y] * p1[x][z]);
  return {{"type", "finite"}, {"states", 2}, {"tensor", tensor}, {"nu", {0.5, 0.5}}};
}

const json kSignFunctional = {{"kind", "single"}, {"values", {1.0, -1.0}}, {"center", true}};

Outcome exact_second_moment() {
  const auto res = run({{"experiment", {{"type", "moments-exact"}, {"states", 2}, {"kernels", 8}, {"depths", {1, 2, 3}}, {"orders", {2}}}}});
  const double diff = res.summary.at("max_abs_diff");
  const bool pass = res.summary.at("verdicts").at("all_pass") && diff <= kExactMomentTolerance;
  return {pass, "8 kernels x r in {1,2,3}: max |formula - enumeration| = " + num(diff) + " (tol " + num(kExactMomentTolerance) + ")"};
}

Outcome ancestor_events() {
  const auto res = run({{"experiment", {{"type", "events-exact"}, {"depths", {2, 3, 4}}}}});
  const json& v = res.summary.at("verdicts");
  std::size_t mismatches = 0, compared = 0;
  for (const auto& table : res.summary.at("tables"))
    for (const auto& row : table.at("comparisons")) {
      ++compared;
      if (!row.at("agree")) ++mismatches;
    }
  const bool pass = v.at("e0_generation2_is_3_over_32") && v.at("counts_total_consistent") && compared > 0;
  return {pass, "P(E0^2) = 3/32 for r = 2,3,4; counts total 2^{4r}; " + std::to_string(compared) +
                    " formula comparisons shown side by side, " + std::to_string(mismatches) + " differ from enumeration"};
}

Outcome fourth_moment_regime() {
  const FiniteKernel k = std::get<FiniteKernel>(config::parse_model(bounded_finite()));
  const Eigen::VectorXd f = Eigen::Vector2d(1.0, -1.0);
  const double alpha = exact::ergodicity_constants(mean_kernel(k), f, 40).alpha;
  std::vector<double> scaled;
  for (int r = 1; r <= 3; ++r) scaled.push_back(std::pow(4.0, r) * exact::brute_force_moment(k, f, 4, exact::Scope::generation, r));
  bool pass = alpha * alpha < 0.5;
  std::string detail = "alpha = " + num(alpha) + "; 4^r E[mean^4] =";
  for (double v : scaled) {
    detail += " " + num(v);
    pass = pass && v <= kFourthMomentGrowth * scaled.front();
  }
  return {pass, detail + " (each <= " + num(kFourthMomentGrowth) + " x r=1 value)"};
}

Outcome noise_free_recovery() {
  BarParams b;
  b.alpha0 = 0.5;
  b.beta0 = 1.0;
  b.alpha1 = -0.25;
  b.beta1 = 2.0;
  b.sigma2 = 0.0;
  b.initial = InitialLaw::normal(0.0, 4.0);
  const auto pop = simulate_tree(b, 4, kSeed);
  const auto ls = inference::least_squares(pop, 3);
  double err = 0.0;
  const auto truth = b.theta();
  for (int j = 0; j < 4; ++j) err = std::max(err, std::abs(ls.theta_hat[j] - truth[j]));
  return {err <= kRecoveryTolerance, "r = 3: max |theta_hat - theta| = " + num(err)};
}

Outcome exact_normal_clt() {
  const auto res = run({{"model", kGaussianBar},
                        {"functional", "residual0"},
                        {"experiment", {{"type", "clt"}, {"replications", 2000}, {"depths", {8}}}}});
  const json& d = res.summary.at("depths")[0];
  const double p = d.at("ks_pvalue"), var = d.at("variance");
  return {p > kKsPvalueFloor && std::abs(var - 1.0) <= kVarianceBand,
          "r = 8, N = 2000: KS p-value = " + num(p) + ", variance = " + num(var)};
}

Outcome estimator_clt() {
  const auto res = run({{"model", kGaussianBar},
                        {"experiment", {{"type", "estimator-clt"}, {"replications", 1000}, {"depths", {10}}}}});
  const double err = res.summary.at("depths")[0].at("relative_frobenius_error");
  return {err <= kFrobeniusTolerance, "r = 10, N = 1000, rho = 0.3: relative Frobenius error = " + num(err)};
}

Outcome test_calibration() {
  json null_model = kGaussianBar;
  null_model["alpha1"] = 0.5;
  null_model["beta1"] = 1.0;
  null_model["rho"] = 0.0;
  json alt_model = kGaussianBar;
  alt_model["rho"] = 0.0;
  const json exp = {{"type", "estimator-clt"}, {"replications", 1000}, {"depths", {10}}, {"level", 0.05}};
  const double level = run({{"model", null_model}, {"experiment", exp}}).summary.at("depths")[0].at("rejection_rate");
  const double power = run({{"model", alt_model}, {"experiment", exp}}).summary.at("depths")[0].at("rejection_rate");
  return {level >= kLevelLow && level <= kLevelHigh && power >= kPowerFloor,
          "r = 10, N = 1000, rho = 0: empirical level = " + num(level) + ", power = " + num(power)};
}

Outcome exponential_deviation() {
  const auto res = run({{"model", bounded_finite()},
                        {"functional", kSignFunctional},
                        {"experiment",
                         {{"type", "deviation"},
                          {"replications", 100000},
                          {"depths", {4, 5, 6, 7, 8}},
                          {"delta_rule", "half-sd-first-depth"},
                          {"scope", "tree"},
                          {"family", "exponential"}}}});
  const json& curve = res.summary.at("curves")[0];
  const json& fit = curve.at("fit_log_p_vs_size");
  if (fit.is_null() || fit.at("ci95").is_null()) return {false, "too few uncensored depths for a slope interval"};
  const double slope = fit.at("slope"), hi = fit.at("ci95")[1];
  const bool below = curve.at("below_fitted_bound");
  return {slope < 0.0 && hi < 0.0 && below, "delta = " + num(curve.at("delta")) + ", slope of ln p vs |T_r| = " + num(slope) +
                                                 ", CI upper = " + num(hi) + ", below fitted c* curve: " + (below ? "yes" : "no")};
}

Outcome polynomial_deviation() {
  json model = kGaussianBar;
  model["beta1"] = 0.5;
  // point mass at the stationary mean mu1 = 0.75 / 0.6
  model["initial"] = {{"kind", "point"}, {"location", 1.25}};
  const auto res = run({{"model", model},
                        {"functional", "x-centered"},
                        {"experiment",
                         {{"type", "deviation"},
                          {"replications", 100000},
                          {"depths", {4, 5, 6, 7, 8, 9}},
                          {"delta_rule", "half-sd-first-depth"},
                          {"scope", "tree"},
                          {"family", "polynomial"}}}});
  const json& curve = res.summary.at("curves")[0];
  const json& fit = curve.at("fit_log_p_vs_generation");
  if (fit.is_null()) return {false, "too few uncensored depths for a fit"};
  const double slope2 = double(fit.at("slope")) / std::log(2.0);
  return {slope2 <= kPolynomialSlopeCeiling,
          "delta = " + num(curve.at("delta")) + ", slope of log2 p vs r = " + num(slope2)};
}

Outcome superexp_and_mdp() {
  const auto sup = run({{"model", bounded_finite()},
                        {"functional", kSignFunctional},
                        {"experiment",
                         {{"type", "superexp"},
                          {"replications", 10000},
                          {"n_grid", {256, 512, 1024, 2048, 4096, 8192, 16384}},
                          {"deltas", {0.1}},
                          {"gamma", 0.6},
                          {"floor", kSuperexpFloor},
                          {"target", "mean-functional"}}}});
  const json& curve = sup.summary.at("curves")[0];
  const bool decreasing = curve.at("strictly_decreasing") && curve.at("censored_cells_form_suffix");
  const bool consistent = sup.summary.at("verdicts").at("consistent");
  std::size_t uncensored = 0;
  for (const auto& p : curve.at("points")) uncensored += p.at("censored") ? 0 : 1;

  const auto mdp = run({{"model", bounded_finite()},
                        {"functional", {{"kind", "innovation"}, {"values", {1.0, -1.0}}}},
                        {"experiment",
                         {{"type", "mdp"},
                          {"replications", 10000},
                          {"n_grid", {256, 1024, 4096, 16384}},
                          {"x_grid", {0.0, 0.5, 1.0}},
                          {"gamma", 0.6}}}});
  const json x0 = mdp.summary.at("verdicts").at("x0_tends_to_zero");
  const bool x0_ok = x0.is_boolean() && x0.get<bool>();
  return {decreasing && consistent && uncensored >= 2 && x0_ok,
          "superexp curve strictly decreasing over " + std::to_string(uncensored) + " uncensored points, verdict " +
              std::string(curve.at("verdict")) + "; mdp x = 0 curve shrinking toward 0: " + (x0_ok ? "yes" : "no")};
}

Outcome lil_and_asclt() {
  const auto lil = run({{"model", kGaussianBar},
                        {"functional", "residual0"},
                        {"experiment", {{"type", "lil"}, {"replications", 200}, {"depths", {14}}, {"epsilon", 0.5}, {"window", 4}}}});
  const double fraction = lil.summary.at("fraction_within_envelope");
  const auto asclt = run({{"model", kGaussianBar},
                          {"functional", "residual0"},
                          {"experiment", {{"type", "asclt"}, {"replications", 1}, {"steps", 16384}, {"tolerance", kAscltTolerance}}}});
  const json& t0 = asclt.summary.at("trajectory0");
  const double dist = t0.at("sup_distance");
  return {fraction >= kLilFraction && dist <= kAscltTolerance,
          "LIL: " + num(100 * fraction) + "% of 200 paths with tail-max <= 1.5; ASCLT N = 2^14: sup-distance = " + num(dist) +
              " (weights total " + num(t0.at("normalization")) + " of ln V_N^2; renormalized " +
              num(t0.at("sup_distance_renormalized")) + ")"};
}

Outcome reproducibility() {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / ("bmc_acceptance_" + std::to_string(kSeed));
  const json configs[] = {
      {{"model", bounded_finite()},
       {"functional", kSignFunctional},
       {"experiment", {{"type", "deviation"}, {"replications", 20000}, {"depths", {4, 5, 6}}, {"delta_rule", "half-sd-first-depth"}, {"family", "exponential"}}}},
      {{"model", kGaussianBar}, {"experiment", {{"type", "estimator-clt"}, {"replications", 200}, {"depths", {6, 7, 8}}}}},
      {{"model", bounded_finite()},
       {"functional", {{"kind", "innovation"}, {"values", {1.0, -1.0}}}},
       {"experiment", {{"type", "mdp"}, {"replications", 2000}, {"n_grid", {256, 1024}}, {"x_grid", {0.0, 0.5}}}}},
      {{"model", kGaussianBar}, {"functional", "residual0"}, {"experiment", {{"type", "slln"}, {"replications", 4}, {"n_grid", {1024, 8192}}}}},
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::size_t files = 0;
  bool identical = true;
  for (const json& cfg : configs) {
    json root = cfg;
    root["seed"] = kSeed;
    auto parsed = config::parse_experiment(root, {});
    const std::string type = parsed.type;
    for (int pass = 0; pass < 2; ++pass) {
      parsed.workers = pass == 0 ? 1 : 3;
      harness::write_result(harness::run_experiment(parsed), base / std::to_string(pass));
    }
    for (const char* ext : {".csv", ".json"}) {
      ++files;
      identical = identical && slurp(base / "0" / (type + ext)) == slurp(base / "1" / (type + ext));
    }
  }
  fs::remove_all(base);
  return {identical, std::to_string(files) + " output files rerun with 1 and 3 workers: " + (identical ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> check;
  };
  const Criterion criteria[] = {
      {1, "exact second moment vs enumeration", 10, exact_second_moment},
      {2, "ancestor-event probabilities", 30, ancestor_events},
      {3, "fourth-moment quarter-rate regime", 60, fourth_moment_regime},
      {4, "noise-free estimator recovery", 1, noise_free_recovery},
      {5, "exact-normal CLT", 60, exact_normal_clt},
      {6, "estimator CLT covariance", 300, estimator_clt},
      {7, "asymmetry test level and power", 300, test_calibration},
      {8, "exponential deviation regime", 600, exponential_deviation},
      {9, "polynomial deviation regime", 600, polynomial_deviation},
      {10, "superexponential and MDP trends", 600, superexp_and_mdp},
      {11, "LIL envelope and ASCLT distance", 600, lil_and_asclt},
      {12, "byte-identical reruns", 600, reproducibility},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs <= c.budget_seconds;
    const bool pass = o.pass && in_budget;
    failures += pass ? 0 : 1;
    std::printf("criterion %2d %s  %s: %s [%.2fs of %.0fs]\n", c.id, pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                c.budget_seconds);
    std::fflush(stdout);
  }
  std::printf("%d of 12 criteria passed\n", 12 - failures);
  return failures == 0 ? 0 : 1;
}
