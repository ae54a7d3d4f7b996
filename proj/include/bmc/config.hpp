#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "bmc/harness.hpp"
#include "bmc/simulate.hpp"

// JSON configuration schema. Every object is checked against its allowed keys
// before any value is used; violations raise ErrorCode::config.
//
//   model:      {"type": "bar", "alpha0", "beta0", "alpha1", "beta1", "sigma2", "rho",
//                "noise": {"family": "gaussian" | "truncated-gaussian" | "uniform-box", "bound"},
//                "initial": {"kind": "point", "location"} | {"kind": "gaussian", "mean", "variance"}}
//               {"type": "finite", "file": path}
//               {"type": "finite", "states": m, "tensor": [m^3 reals], "nu": [m reals]}
//   functional: "residual0" | "residual1" | "x-centered" | "x2-centered" | "zero"      (bar)
//               {"name": one of the above, "scale": u}                                (bar)
//               {"kind": "single", "values": [...], "center": bool, "scale": u}       (finite)
//               {"kind": "innovation", "values": [g...], "scale": u}                  (finite)
namespace bmc::config {

nlohmann::json load_json(const std::filesystem::path& path);

Model parse_model(const nlohmann::json& spec, const std::filesystem::path& base_dir = {});
harness::FunctionalBundle parse_functional(const nlohmann::json& spec, const Model& model);

// Named BAR functionals, also used directly by the tests.
harness::FunctionalBundle bar_functional(const BarParams& params, const std::string& name);
// Finite-state functionals: a single functional centered under the stationary
// law (when center is true) or the innovation g(y) + g(z) - (P0 g + P1 g)(x).
harness::FunctionalBundle finite_single(const FiniteKernel& kernel, std::vector<double> values, bool center);
harness::FunctionalBundle finite_innovation(const FiniteKernel& kernel, const std::vector<double>& g);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
};

// {"model", "functional", "seed", "workers", "out", "experiment": {"type", ...}}
// Flags in `overrides` replace the file values. The returned config echo is
// the effective configuration.
harness::ExperimentConfig parse_experiment(const nlohmann::json& root, const RunOptions& overrides,
                                           const std::filesystem::path& base_dir = {});

struct SimulateConfig {
  Model model = BarParams{};
  int depth = 0;
  std::uint64_t seed = 0;
  std::string out;
  nlohmann::json echo;
};

// {"model", "depth", "seed", "out"}
SimulateConfig parse_simulate(const nlohmann::json& root, const RunOptions& overrides,
                              const std::filesystem::path& base_dir = {});

// Output directory from --out, the config, or "." in that order.
std::string output_dir(const nlohmann::json& root, const RunOptions& overrides);

}  // namespace bmc::config
