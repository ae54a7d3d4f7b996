#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bmc/config.hpp"
#include "bmc/error.hpp"
#include "bmc/harness.hpp"
#include "bmc/inference.hpp"
#include "bmc/simulate.hpp"

namespace {

using nlohmann::json;

void echo_config(const json& effective) { std::cerr << "# effective config: " << effective.dump() << '\n'; }

std::filesystem::path config_dir(const std::string& path) {
  return std::filesystem::absolute(path).parent_path();
}

int run_simulate(const std::string& config_path, const bmc::config::RunOptions& opts, std::optional<int> depth) {
  json root = bmc::config::load_json(config_path);
  if (depth) {
    if (!root.is_object()) throw bmc::Error(bmc::ErrorCode::config, "config must be a JSON object");
    root["depth"] = *depth;
  }
  const auto cfg = bmc::config::parse_simulate(root, opts, config_dir(config_path));
  echo_config(cfg.echo);
  const bmc::TreePopulation pop = bmc::simulate_tree(cfg.model, cfg.depth, cfg.seed);

  std::filesystem::path target = cfg.out;
  if (target.extension() != ".csv") target /= "tree.csv";
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  std::ofstream out(target, std::ios::binary);
  if (!out) throw bmc::Error(bmc::ErrorCode::config, "cannot write " + target.string());
  bmc::write_population_csv(out, pop);
  std::cout << target.string() << '\n';
  return 0;
}

int run_estimate(const std::string& input, double level, std::optional<int> r, const bmc::config::RunOptions& opts) {
  std::ifstream in(input);
  if (!in) throw bmc::Error(bmc::ErrorCode::data, "cannot open " + input);
  const bmc::TreePopulation pop = bmc::read_population_csv(in);
  const int depth = r.value_or(pop.depth - 1);
  if (depth < 0 || depth + 1 > pop.depth) {
    throw bmc::Error(bmc::ErrorCode::data, "estimation at r = " + std::to_string(depth) + " needs the tree observed to generation r + 1; file holds T_" +
                                               std::to_string(pop.depth));
  }
  echo_config({{"input", input}, {"level", level}, {"r", depth}, {"out", opts.out.value_or("")}});

  const bmc::inference::EstimatorReport report = bmc::inference::estimate(pop, depth);
  json j = bmc::inference::to_json(report);
  if (report.chi1) j["test"] = bmc::inference::to_json(bmc::inference::asymmetry_test(*report.chi1, level));
  else j["test"] = nullptr;
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (opts.out) {
    std::filesystem::create_directories(*opts.out);
    std::ofstream out(std::filesystem::path(*opts.out) / "estimate.json", std::ios::binary);
    out << text;
  }
  if (report.degenerate) {
    std::cerr << "error: degenerate design (empirical variance of the mothers is zero)\n";
    return bmc::exit_code_for(bmc::ErrorCode::degenerate);
  }
  return 0;
}

int run_experiment(const std::string& config_path, const bmc::config::RunOptions& opts) {
  const json root = bmc::config::load_json(config_path);
  const auto cfg = bmc::config::parse_experiment(root, opts, config_dir(config_path));
  const std::string out = bmc::config::output_dir(root, opts);
  json effective = cfg.echo;
  effective["workers"] = cfg.workers;
  effective["out"] = out;
  echo_config(effective);
  const auto result = bmc::harness::run_experiment(cfg);
  bmc::harness::write_result(result, out);
  std::cout << (std::filesystem::path(out) / (result.type + ".json")).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bifurcating Markov chain simulation, estimation and experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  const auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path, "JSON config file");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Base seed (overrides the config)");
    cmd->add_option("--out", out, "Output directory (overrides the config)");
    cmd->add_option("--workers", workers, "Worker threads for replications")->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate a tree and write node,value CSV");
  add_common(simulate, true);
  std::optional<int> depth;
  simulate->add_option("--depth", depth, "Tree depth (overrides the config)");

  auto* estimate = app.add_subcommand("estimate", "Estimate BAR parameters from a tree CSV and test symmetry");
  add_common(estimate, false);
  std::string input;
  double level = 0.05;
  std::optional<int> r;
  estimate->add_option("--input", input, "Tree CSV (node,value)")->required();
  estimate->add_option("--level", level, "Test level")->check(CLI::Range(0.0, 1.0));
  estimate->add_option("--r", r, "Estimation depth (default: deepest complete T_r with T_{r+1} observed)");

  auto* experiment = app.add_subcommand("experiment", "Run an experiment described by a config");
  add_common(experiment, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bmc::exit_code_for(bmc::ErrorCode::config);
  }

  const bmc::config::RunOptions opts{seed, workers, out};
  try {
    if (*simulate) return run_simulate(config_path, opts, depth);
    if (*estimate) return run_estimate(input, level, r, opts);
    return run_experiment(config_path, opts);
  } catch (const bmc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bmc::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
