#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "bmc/config.hpp"
#include "bmc/error.hpp"
#include "bmc/exact.hpp"
#include "bmc/harness.hpp"
#include "bmc/inference.hpp"
#include "bmc/simulate.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

// JSON crosses the boundary as text; the Python wrapper converts to dicts.
bmc::Model model_from(const std::string& text) { return bmc::config::parse_model(json::parse(text)); }

bmc::FiniteKernel finite_from(const std::string& text) {
  bmc::Model m = model_from(text);
  if (!std::holds_alternative<bmc::FiniteKernel>(m)) throw bmc::Error(bmc::ErrorCode::config, "expected a finite model");
  return std::get<bmc::FiniteKernel>(m);
}

py::array_t<double> simulate(const std::string& model, int depth, std::uint64_t seed) {
  const bmc::TreePopulation pop = bmc::simulate_tree(model_from(model), depth, seed);
  return py::array_t<double>(static_cast<py::ssize_t>(pop.values.size()), pop.values.data());
}

bmc::TreePopulation population_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& values) {
  const auto n = static_cast<std::uint64_t>(values.size());
  if (n == 0 || ((n + 1) & n) != 0) {
    throw bmc::Error(bmc::ErrorCode::data, "values must hold a complete tree (2^{d+1} - 1 entries)");
  }
  bmc::TreePopulation pop;
  pop.depth = bmc::tree::generation(n);
  pop.values.assign(values.data(), values.data() + n);
  pop.model = "observed";
  return pop;
}

std::string estimate(const py::array_t<double, py::array::c_style | py::array::forcecast>& values, std::optional<int> r,
                     double level) {
  const bmc::TreePopulation pop = population_from(values);
  const auto report = bmc::inference::estimate(pop, r.value_or(pop.depth - 1));
  json j = bmc::inference::to_json(report);
  j["test"] = report.chi1 ? bmc::inference::to_json(bmc::inference::asymmetry_test(*report.chi1, level)) : json(nullptr);
  return j.dump();
}

std::string events(int r, int p) {
  const auto ev = bmc::exact::ancestor_event_probabilities(r, p);
  json rows = json::array();
  for (const auto& c : ev.comparisons) rows.push_back({{"event", c.label}, {"enumeration", c.enumeration}, {"formula", c.formula}});
  return json{{"r", ev.r},
              {"p", ev.p},
              {"total", ev.total},
              {"counts", ev.counts},
              {"probability", ev.probability},
              {"e0_generation2", ev.e0_generation2},
              {"comparisons", rows}}
      .dump();
}

double bound(const std::string& family, const std::string& scope, double alpha, std::uint64_t index, double c,
             double c_prime, double c_dprime, double delta) {
  bmc::exact::BoundSpec spec;
  spec.family = bmc::exact::parse_bound_family(family);
  spec.scope = bmc::exact::parse_scope(scope);
  spec.alpha = alpha;
  spec.c = c;
  spec.c_prime = c_prime;
  spec.c_dprime = c_dprime;
  spec.delta = delta;
  return bmc::exact::evaluate_bound(spec, index);
}

py::tuple run_experiment(const std::string& config, std::optional<std::uint64_t> seed, int workers) {
  bmc::config::RunOptions opts;
  opts.seed = seed;
  opts.workers = workers;
  const auto cfg = bmc::config::parse_experiment(json::parse(config), opts);
  const auto result = bmc::harness::run_experiment(cfg);
  return py::make_tuple(result.summary.dump(), result.csv());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bifurcating Markov chain core (C++)";
  py::register_exception<bmc::Error>(m, "BmcError", PyExc_ValueError);

  m.def("simulate_tree", &simulate, py::arg("model"), py::arg("depth"), py::arg("seed"),
        "Heap-ordered values of one simulated tree T_depth.");
  m.def("estimate", &estimate, py::arg("values"), py::arg("r") = py::none(), py::arg("level") = 0.05,
        "Estimator report (JSON text) for a complete tree.");
  m.def("stationary_distribution", &bmc::exact::stationary_distribution, py::arg("q"));
  m.def(
      "ergodicity_constants",
      [](const Eigen::MatrixXd& q, const Eigen::VectorXd& f, int horizon) {
        const auto e = bmc::exact::ergodicity_constants(q, f, horizon);
        return py::make_tuple(e.alpha, e.c);
      },
      py::arg("q"), py::arg("f"), py::arg("horizon") = 50);
  m.def(
      "second_moment_generation",
      [](const std::string& kernel, const Eigen::VectorXd& f, int r) {
        return bmc::exact::second_moment_generation(finite_from(kernel), f, r);
      },
      py::arg("kernel"), py::arg("f"), py::arg("r"));
  m.def(
      "brute_force_moment",
      [](const std::string& kernel, const Eigen::VectorXd& f, int order, const std::string& scope, std::uint64_t index) {
        return bmc::exact::brute_force_moment(finite_from(kernel), f, order, bmc::exact::parse_scope(scope), index);
      },
      py::arg("kernel"), py::arg("f"), py::arg("order"), py::arg("scope"), py::arg("index"));
  m.def("ancestor_events", &events, py::arg("r"), py::arg("p"));
  m.def("evaluate_bound", &bound, py::arg("family"), py::arg("scope"), py::arg("alpha"), py::arg("index"),
        py::arg("c") = 1.0, py::arg("c_prime") = 1.0, py::arg("c_dprime") = 1.0, py::arg("delta") = 1.0);
  m.def(
      "stationary_moments",
      [](const std::array<double, 4>& theta, double sigma2) {
        const auto s = bmc::inference::stationary_moments(theta, sigma2);
        return py::make_tuple(s.mu1, s.mu2);
      },
      py::arg("theta"), py::arg("sigma2"));
  m.def(
      "asymmetry_test",
      [](double chi, double level) {
        const auto d = bmc::inference::asymmetry_test(chi, level);
        return py::make_tuple(d.reject, d.threshold);
      },
      py::arg("chi"), py::arg("level"));
  m.def(
      "asymptotic_covariance",
      [](const std::array<double, 4>& theta, double sigma2, double rho) {
        const auto c = bmc::inference::asymptotic_covariance(theta, sigma2, rho);
        return py::make_tuple(Eigen::MatrixXd(c.k), Eigen::MatrixXd(c.sigma_prime), Eigen::MatrixXd(c.sigma_dprime));
      },
      py::arg("theta"), py::arg("sigma2"), py::arg("rho"));
  m.def("run_experiment", &run_experiment, py::arg("config"), py::arg("seed") = py::none(), py::arg("workers") = 1,
        "Runs an experiment config (JSON text); returns (summary JSON, CSV text).");
}
