#include "bmc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include "bmc/error.hpp"
#include "bmc/exact.hpp"
#include "bmc/inference.hpp"

namespace bmc::config {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::config, what); }

void check_object(const json& obj, const std::string& where) {
  if (!obj.is_object()) fail(where + " must be a JSON object");
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  check_object(obj, where);
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      fail("unknown key '" + item.key() + "' in " + where);
    }
  }
}

double number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) fail(where + "." + key + " is required");
  const json& v = obj.at(key);
  if (!v.is_number()) fail(where + "." + key + " must be a number");
  return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj, key, where) : fallback;
}

std::int64_t integer(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) fail(where + "." + key + " is required");
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(where + "." + key + " must be an integer");
  return v.get<std::int64_t>();
}

std::uint64_t unsigned_integer(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  fail(where + " must be a nonnegative integer");
}

std::string string(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) fail(where + "." + key + " is required");
  const json& v = obj.at(key);
  if (!v.is_string()) fail(where + "." + key + " must be a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) fail(where + " must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<int> integers(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where + " must be an array of integers");
  std::vector<int> out;
  for (const auto& x : v) {
    if (!x.is_number_integer()) fail(where + " must be an array of integers");
    out.push_back(x.get<int>());
  }
  return out;
}

NoiseLaw parse_noise(const json& spec) {
  check_keys(spec, {"family", "bound"}, "model.noise");
  NoiseLaw law;
  const std::string family = string(spec, "family", "model.noise");
  if (family == "gaussian") {
    law.family = NoiseFamily::gaussian;
  } else if (family == "truncated-gaussian") {
    law.family = NoiseFamily::truncated_gaussian;
  } else if (family == "uniform-box") {
    law.family = NoiseFamily::uniform_box;
  } else {
    fail("unknown noise family '" + family + "'");
  }
  law.bound = number_or(spec, "bound", 0.0, "model.noise");
  return law;
}

InitialLaw parse_initial(const json& spec) {
  check_object(spec, "model.initial");
  const std::string kind = string(spec, "kind", "model.initial");
  if (kind == "point") {
    check_keys(spec, {"kind", "location"}, "model.initial");
    return InitialLaw::point(number(spec, "location", "model.initial"));
  }
  if (kind == "gaussian") {
    check_keys(spec, {"kind", "mean", "variance"}, "model.initial");
    const double variance = number(spec, "variance", "model.initial");
    if (!(variance >= 0.0)) fail("model.initial.variance must be >= 0");
    return InitialLaw::normal(number(spec, "mean", "model.initial"), variance);
  }
  fail("unknown initial law kind '" + kind + "'");
}

}  // namespace

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

Model parse_model(const json& spec, const std::filesystem::path& base_dir) {
  check_object(spec, "model");
  const std::string type = string(spec, "type", "model");
  try {
    if (type == "bar") {
      check_keys(spec, {"type", "alpha0", "beta0", "alpha1", "beta1", "sigma2", "rho", "noise", "initial"}, "model");
      BarParams p;
      p.alpha0 = number(spec, "alpha0", "model");
      p.beta0 = number(spec, "beta0", "model");
      p.alpha1 = number(spec, "alpha1", "model");
      p.beta1 = number(spec, "beta1", "model");
      p.sigma2 = number_or(spec, "sigma2", 1.0, "model");
      p.rho = number_or(spec, "rho", 0.0, "model");
      if (spec.contains("noise")) p.noise = parse_noise(spec.at("noise"));
      if (spec.contains("initial")) p.initial = parse_initial(spec.at("initial"));
      p.validate();
      return p;
    }
    if (type == "finite") {
      if (spec.contains("file")) {
        check_keys(spec, {"type", "file"}, "model");
        std::filesystem::path path = string(spec, "file", "model");
        if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
        return load_finite_kernel(path);
      }
      check_keys(spec, {"type", "states", "tensor", "nu"}, "model");
      const std::int64_t m = integer(spec, "states", "model");
      if (m < 1) fail("model.states must be >= 1");
      if (!spec.contains("tensor") || !spec.contains("nu")) fail("inline finite model needs tensor and nu");
      return FiniteKernel(static_cast<std::size_t>(m), numbers(spec.at("tensor"), "model.tensor"),
                          numbers(spec.at("nu"), "model.nu"));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config) throw;
    fail(std::string("invalid model: ") + e.what());
  }
  fail("unknown model type '" + type + "'");
}

harness::FunctionalBundle bar_functional(const BarParams& params, const std::string& name) {
  const NoiseMoments noise = effective_noise_moments(params);
  harness::FunctionalBundle b;
  b.name = name;
  if (name == "residual0" || name == "residual1") {
    const bool first = name == "residual0";
    b.f = bar_triangle_functional(params, first ? BarMoment::residual0 : BarMoment::residual1);
    b.pf2 = Functional::constant(noise.sigma2, FunctionalKind::single);
    b.stationary_pf2 = noise.sigma2;
    const double h = params.noise.bound;
    if (params.noise.family == NoiseFamily::truncated_gaussian) b.sup_abs = h;
    if (params.noise.family == NoiseFamily::uniform_box) {
      b.sup_abs = first ? h : (std::abs(params.rho) + std::sqrt(1.0 - params.rho * params.rho)) * h;
    }
    return b;
  }
  if (name == "x-centered" || name == "x2-centered") {
    const auto m = inference::stationary_moments(params.theta(), noise.sigma2);
    if (name == "x-centered") {
      b.f = Functional::single([mu1 = m.mu1](double x) { return x - mu1; });
    } else {
      b.f = Functional::single([mu2 = m.mu2](double x) { return x * x - mu2; });
    }
    return b;
  }
  if (name == "zero") {
    b.f = Functional::constant(0.0, FunctionalKind::triangle);
    b.pf2 = Functional::constant(0.0, FunctionalKind::single);
    b.stationary_pf2 = 0.0;
    b.sup_abs = 0.0;
    return b;
  }
  fail("unknown BAR functional '" + name + "'");
}

harness::FunctionalBundle finite_single(const FiniteKernel& kernel, std::vector<double> values, bool center) {
  if (values.size() != kernel.states()) fail("functional needs one value per state");
  if (center) {
    const Eigen::VectorXd mu = exact::stationary_distribution(mean_kernel(kernel));
    double mean = 0.0;
    for (std::size_t x = 0; x < values.size(); ++x) mean += mu[static_cast<Eigen::Index>(x)] * values[x];
    for (double& v : values) v -= mean;
  }
  harness::FunctionalBundle b;
  b.name = center ? "single-centered" : "single";
  double sup = 0.0;
  for (double v : values) sup = std::max(sup, std::abs(v));
  b.sup_abs = sup;
  b.f = Functional::single_table(std::move(values));
  return b;
}

harness::FunctionalBundle finite_innovation(const FiniteKernel& kernel, const std::vector<double>& g) {
  if (g.size() != kernel.states()) fail("innovation needs one value of g per state");
  harness::FunctionalBundle b;
  b.name = "innovation";
  b.f = daughter_innovation(kernel, g);
  b.pf2 = apply_P(kernel, b.f.pow(2));
  const Eigen::VectorXd mu = exact::stationary_distribution(mean_kernel(kernel));
  b.stationary_pf2 = mu.dot(to_vector(*b.pf2));
  double sup = 0.0;
  for (double v : b.f.table()) sup = std::max(sup, std::abs(v));
  b.sup_abs = sup;
  return b;
}

harness::FunctionalBundle parse_functional(const json& spec, const Model& model) {
  harness::FunctionalBundle b;
  double scale = 1.0;
  if (const auto* bar = std::get_if<BarParams>(&model)) {
    if (spec.is_string()) return bar_functional(*bar, spec.get<std::string>());
    check_keys(spec, {"name", "scale"}, "functional");
    b = bar_functional(*bar, string(spec, "name", "functional"));
    scale = number_or(spec, "scale", 1.0, "functional");
  } else {
    const FiniteKernel& kernel = std::get<FiniteKernel>(model);
    check_object(spec, "functional");
    const std::string kind = string(spec, "kind", "functional");
    if (kind == "single") {
      check_keys(spec, {"kind", "values", "center", "scale"}, "functional");
      bool center = true;
      if (spec.contains("center")) {
        if (!spec.at("center").is_boolean()) fail("functional.center must be a boolean");
        center = spec.at("center").get<bool>();
      }
      if (!spec.contains("values")) fail("functional.values is required");
      b = finite_single(kernel, numbers(spec.at("values"), "functional.values"), center);
    } else if (kind == "innovation") {
      check_keys(spec, {"kind", "values", "scale"}, "functional");
      if (!spec.contains("values")) fail("functional.values is required");
      b = finite_innovation(kernel, numbers(spec.at("values"), "functional.values"));
    } else {
      fail("unknown finite functional kind '" + kind + "'");
    }
    scale = number_or(spec, "scale", 1.0, "functional");
  }
  return scale == 1.0 ? b : harness::scaled(b, scale);
}

std::string output_dir(const json& root, const RunOptions& overrides) {
  if (overrides.out) return *overrides.out;
  if (root.is_object() && root.contains("out")) {
    if (!root.at("out").is_string()) fail("out must be a string");
    return root.at("out").get<std::string>();
  }
  return ".";
}

namespace {

std::uint64_t effective_seed(const json& root, const RunOptions& overrides) {
  if (overrides.seed) return *overrides.seed;
  if (!root.contains("seed")) fail("seed is required (in the config or via --seed)");
  return unsigned_integer(root.at("seed"), "seed");
}

int effective_workers(const json& root, const RunOptions& overrides) {
  if (overrides.workers) return *overrides.workers;
  if (!root.contains("workers")) return 1;
  return static_cast<int>(unsigned_integer(root.at("workers"), "workers"));
}

}  // namespace

harness::ExperimentConfig parse_experiment(const json& root, const RunOptions& overrides,
                                           const std::filesystem::path& base_dir) {
  check_keys(root, {"model", "functional", "seed", "workers", "out", "experiment"}, "config");
  if (!root.contains("experiment")) fail("config.experiment is required");
  const json& e = root.at("experiment");
  check_keys(e,
             {"type", "replications", "depths", "n_grid", "deltas", "delta_rule", "scope", "family", "alpha", "gamma",
              "speed_setting", "x_grid", "target", "floor", "epsilon", "window", "tolerance", "level", "steps",
              "states", "kernels", "orders", "levels"},
             "experiment");
  harness::ExperimentConfig c;
  c.type = string(e, "type", "experiment");
  static const std::vector<std::string> known{"deviation", "clt",   "estimator-clt", "mdp",           "superexp",
                                              "lil",       "asclt", "slln",          "moments-exact", "events-exact"};
  if (std::find(known.begin(), known.end(), c.type) == known.end()) fail("unknown experiment type '" + c.type + "'");

  c.seed = effective_seed(root, overrides);
  c.workers = effective_workers(root, overrides);
  if (c.workers < 1) fail("workers must be >= 1");

  const bool exact_only = c.type == "moments-exact" || c.type == "events-exact";
  if (root.contains("model")) {
    c.model = parse_model(root.at("model"), base_dir);
  } else if (!exact_only) {
    fail("config.model is required for " + c.type);
  }
  if (root.contains("functional")) c.functional = parse_functional(root.at("functional"), c.model);

  if (e.contains("replications")) {
    c.replications = unsigned_integer(e.at("replications"), "experiment.replications");
    if (c.replications < 1) fail("experiment.replications must be >= 1");
  }
  if (e.contains("depths")) c.depths = integers(e.at("depths"), "experiment.depths");
  if (e.contains("n_grid")) {
    for (double v : numbers(e.at("n_grid"), "experiment.n_grid")) {
      if (!(v >= 1.0) || v != std::floor(v)) fail("experiment.n_grid entries must be positive integers");
      c.n_grid.push_back(static_cast<std::uint64_t>(v));
    }
  }
  if (e.contains("deltas")) c.deltas = numbers(e.at("deltas"), "experiment.deltas");
  if (e.contains("delta_rule")) c.delta_rule = string(e, "delta_rule", "experiment");
  if (e.contains("scope")) c.scope = exact::parse_scope(string(e, "scope", "experiment"));
  if (e.contains("family")) c.family = string(e, "family", "experiment");
  if (e.contains("alpha")) c.alpha = number(e, "alpha", "experiment");
  c.gamma = number_or(e, "gamma", c.gamma, "experiment");
  if (c.type == "mdp" && !(c.gamma > 0.5 && c.gamma < 1.0)) fail("experiment.gamma must lie in (1/2, 1)");
  if (e.contains("speed_setting")) {
    const std::string s = string(e, "speed_setting", "experiment");
    if (s == "hh2") {
      c.speed_setting = exact::SpeedSetting::hh2;
    } else if (s == "h1") {
      c.speed_setting = exact::SpeedSetting::h1;
    } else {
      fail("experiment.speed_setting must be 'hh2' or 'h1'");
    }
  }
  if (e.contains("x_grid")) c.x_grid = numbers(e.at("x_grid"), "experiment.x_grid");
  if (e.contains("target")) c.target = harness::parse_target(string(e, "target", "experiment"));
  c.floor = number_or(e, "floor", c.floor, "experiment");
  c.epsilon = number_or(e, "epsilon", c.epsilon, "experiment");
  if (e.contains("window")) c.window = static_cast<int>(integer(e, "window", "experiment"));
  c.tolerance = number_or(e, "tolerance", c.tolerance, "experiment");
  c.level = number_or(e, "level", c.level, "experiment");
  if (e.contains("steps")) c.steps = unsigned_integer(e.at("steps"), "experiment.steps");
  if (e.contains("states")) c.states = unsigned_integer(e.at("states"), "experiment.states");
  if (e.contains("kernels")) c.kernels = unsigned_integer(e.at("kernels"), "experiment.kernels");
  if (e.contains("orders")) c.orders = integers(e.at("orders"), "experiment.orders");
  if (e.contains("levels")) c.levels = integers(e.at("levels"), "experiment.levels");

  // Results depend on neither the output location nor the worker count, so
  // the summary echo leaves them out.
  c.echo = root;
  c.echo.erase("out");
  c.echo.erase("workers");
  c.echo["seed"] = c.seed;
  return c;
}

SimulateConfig parse_simulate(const json& root, const RunOptions& overrides, const std::filesystem::path& base_dir) {
  check_keys(root, {"model", "depth", "seed", "out", "workers"}, "config");
  SimulateConfig c;
  if (!root.contains("model")) fail("config.model is required");
  c.model = parse_model(root.at("model"), base_dir);
  const std::int64_t depth = integer(root, "depth", "config");
  if (depth < 0) fail("depth must be >= 0");
  if (depth > kDefaultMaxDepth) fail("depth must be <= " + std::to_string(kDefaultMaxDepth));
  c.depth = static_cast<int>(depth);
  c.seed = effective_seed(root, overrides);
  c.out = output_dir(root, overrides);
  c.echo = root;
  c.echo["seed"] = c.seed;
  c.echo["out"] = c.out;
  return c;
}

}  // namespace bmc::config
