#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bmc/exact.hpp"
#include "bmc/kernels.hpp"
#include "bmc/simulate.hpp"

// Monte Carlo experiments and exact-oracle tables. Every result is a pure
// function of the configuration (including its base seed): replication k of
// experiment `type` draws from derive_seed(seed, {tag_hash(type), k}).
namespace bmc::harness {

// A test function together with what the experiments need to know about it.
struct FunctionalBundle {
  std::string name;
  Functional f = Functional::constant(0.0, FunctionalKind::single);
  std::optional<Functional> pf2;         // P(f^2) for triangle functionals with Pf = 0
  std::optional<double> stationary_pf2;  // (mu, Pf^2)
  std::optional<double> sup_abs;         // sup |f| for bounded functionals
};

// Multiplies f by u, Pf^2 and (mu, Pf^2) by u^2, sup |f| by |u|.
FunctionalBundle scaled(const FunctionalBundle& bundle, double u);

enum class Target { mean_functional, bracket, theta_hat, sigma2_rho };

Target parse_target(const std::string& name);
std::string to_string(Target target);

struct ExperimentConfig {
  std::string type;
  Model model = BarParams{};
  FunctionalBundle functional;
  std::uint64_t seed = 0;
  std::size_t replications = 1;
  int workers = 1;

  std::vector<int> depths;              // generation-indexed grids
  std::vector<std::uint64_t> n_grid;    // node-count grids for permuted averages
  std::vector<double> deltas;
  std::string delta_rule;               // "half-sd-first-depth" instead of fixed deltas
  exact::Scope scope = exact::Scope::tree;
  std::string family = "polynomial";    // deviation shape: polynomial or exponential
  std::optional<double> alpha;          // overrides the model's ergodicity rate
  double gamma = 0.6;
  std::optional<exact::SpeedSetting> speed_setting;
  std::vector<double> x_grid;
  Target target = Target::mean_functional;
  double floor = -1.0;                  // superexp: value the last point must fall below
  double epsilon = 0.5;                 // lil envelope slack
  int window = 4;                       // lil tail window length
  double tolerance = 0.1;               // slln final tolerance, asclt sup-distance
  double level = 0.05;                  // estimator-clt test level
  std::uint64_t steps = 0;              // asclt trajectory length N

  // moments-exact / events-exact
  std::size_t states = 2;
  std::size_t kernels = 5;
  std::vector<int> orders{2};
  std::vector<int> levels;              // events-exact p values (default 2..r)

  nlohmann::json echo;                  // effective configuration, copied into the summary
};

// Long-format table plus a JSON summary.
struct ExperimentResult {
  std::string type;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  nlohmann::json summary;

  std::string csv() const;
};

// Runs body(k) for k in [0, count) on up to `workers` threads. body must only
// write to storage owned by index k.
void parallel_for_replications(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

std::uint64_t replication_key(std::uint64_t seed, const std::string& experiment, std::size_t rep);

ExperimentResult deviation_experiment(const ExperimentConfig& config);
ExperimentResult clt_experiment(const ExperimentConfig& config);
ExperimentResult estimator_clt_experiment(const ExperimentConfig& config);
ExperimentResult mdp_experiment(const ExperimentConfig& config);
ExperimentResult superexp_diagnostic(const ExperimentConfig& config);
ExperimentResult lil_diagnostic(const ExperimentConfig& config);
ExperimentResult asclt_diagnostic(const ExperimentConfig& config);
ExperimentResult slln_diagnostic(const ExperimentConfig& config);
ExperimentResult moments_exact(const ExperimentConfig& config);
ExperimentResult events_exact(const ExperimentConfig& config);

// Dispatch on config.type; unknown types raise ErrorCode::config.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Writes <dir>/<type>.csv and <dir>/<type>.json.
void write_result(const ExperimentResult& result, const std::filesystem::path& dir);

// Log-weighted occupation CDF of M_n / V_n along one path, V_n = s sqrt(n).
struct AscltMeasure {
  std::vector<double> grid;
  std::vector<double> cdf;         // normalized by ln V_N^2
  double normalization = 0.0;      // total weight / ln V_N^2
  double sup_distance = 0.0;       // against the standard normal CDF on the grid
  double sup_distance_renormalized = 0.0;  // same, with the weights rescaled to total 1
};

AscltMeasure asclt_measure(const std::vector<double>& partial_sums, double s2);

// S_r = M_{T_r}(f) / sqrt(2 |T_r| loglog|T_r| s2) for r = 2..depth.
std::vector<double> lil_statistics(const TreePopulation& pop, const Functional& f, int depth, double s2);

}  // namespace bmc::harness
