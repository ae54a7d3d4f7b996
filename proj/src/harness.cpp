#include "bmc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "bmc/empirical.hpp"
#include "bmc/error.hpp"
#include "bmc/inference.hpp"
#include "bmc/stats.hpp"
#include "bmc/tree.hpp"

namespace bmc::harness {

using nlohmann::json;

FunctionalBundle scaled(const FunctionalBundle& bundle, double u) {
  FunctionalBundle out = bundle;
  const Functional zero = Functional::constant(0.0, bundle.f.kind());
  out.f = Functional::linear_combination(u, bundle.f, 0.0, zero);
  if (bundle.pf2) {
    out.pf2 = Functional::linear_combination(u * u, *bundle.pf2, 0.0, Functional::constant(0.0, FunctionalKind::single));
  }
  if (bundle.stationary_pf2) out.stationary_pf2 = u * u * *bundle.stationary_pf2;
  if (bundle.sup_abs) out.sup_abs = std::abs(u) * *bundle.sup_abs;
  return out;
}

Target parse_target(const std::string& name) {
  if (name == "mean-functional") return Target::mean_functional;
  if (name == "bracket") return Target::bracket;
  if (name == "theta_hat") return Target::theta_hat;
  if (name == "sigma2_rho") return Target::sigma2_rho;
  throw Error(ErrorCode::config, "unknown superexp target '" + name + "'");
}

std::string to_string(Target target) {
  switch (target) {
    case Target::mean_functional: return "mean-functional";
    case Target::bracket: return "bracket";
    case Target::theta_hat: return "theta_hat";
    case Target::sigma2_rho: return "sigma2_rho";
  }
  return "";
}

std::string ExperimentResult::csv() const {
  std::ostringstream out;
  for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << '\n';
  }
  return out.str();
}

void parallel_for_replications(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= count) return;
        try {
          body(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t replication_key(std::uint64_t seed, const std::string& experiment, std::size_t rep) {
  return derive_seed(seed, {tag_hash(experiment), static_cast<std::uint64_t>(rep)});
}

namespace {

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "1" : "0"; }

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::config, what); }

void require_replications(const ExperimentConfig& c, std::size_t minimum = 1) {
  if (c.replications < minimum) {
    config_error(c.type + " needs at least " + std::to_string(minimum) + " replications");
  }
}

template <typename T>
void require_increasing(const std::vector<T>& grid, const std::string& name) {
  if (grid.empty()) config_error(name + " grid is empty");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) config_error(name + " grid must be strictly increasing");
  }
}

bool is_triangle(const FunctionalBundle& b) { return b.f.kind() == FunctionalKind::triangle; }

// Tree depth needed to evaluate the functional on T_r.
int tree_depth_for(const FunctionalBundle& b, int r) { return is_triangle(b) ? r + 1 : r; }

int floor_log2(std::uint64_t n) { return tree::generation(n); }

const BarParams& require_bar(const ExperimentConfig& c) {
  const auto* bar = std::get_if<BarParams>(&c.model);
  if (!bar) config_error(c.type + " needs a BAR model");
  return *bar;
}

double model_alpha(const ExperimentConfig& c) {
  if (c.alpha) return *c.alpha;
  if (const auto* bar = std::get_if<BarParams>(&c.model)) return bar->bound_alpha();
  const FiniteKernel& kernel = std::get<FiniteKernel>(c.model);
  const Eigen::MatrixXd q = mean_kernel(kernel);
  const Eigen::VectorXd mu = exact::stationary_distribution(q);
  Eigen::VectorXd probe = Eigen::VectorXd::Unit(q.rows(), 0);
  probe.array() -= mu[0];
  return exact::ergodicity_constants(q, probe, 10).alpha;
}

// The centering precondition, checked exactly for tabulated single functionals
// of a finite model.
void require_centered(const ExperimentConfig& c) {
  const auto* kernel = std::get_if<FiniteKernel>(&c.model);
  if (!kernel || is_triangle(c.functional) || !c.functional.f.has_table()) return;
  const Eigen::VectorXd mu = exact::stationary_distribution(mean_kernel(*kernel));
  const double mean = mu.dot(to_vector(c.functional.f));
  if (std::abs(mean) > 1e-10) {
    std::ostringstream msg;
    msg << c.type << " needs a centered functional, (mu, f) = " << mean;
    config_error(msg.str());
  }
}

double require_pf2(const ExperimentConfig& c) {
  if (!is_triangle(c.functional) || !c.functional.stationary_pf2) {
    config_error(c.type + " needs a triangle functional with Pf = 0 and known (mu, Pf^2)");
  }
  return *c.functional.stationary_pf2;
}

tree::GenerationPermutation permutation_for(std::uint64_t key, int depth, const char* stream = "permutation") {
  RandomStream rng(derive_seed(key, {tag_hash(stream)}));
  return tree::sample_permutation(depth, rng);
}

// Sums of f over the first n permuted nodes for every n in the grid.
std::vector<double> permuted_sums(const TreePopulation& pop, const Functional& f, const tree::GenerationPermutation& pi,
                                  const std::vector<std::uint64_t>& grid) {
  std::vector<double> out;
  out.reserve(grid.size());
  stats::CompensatedSum s;
  std::size_t next = 0;
  for (std::uint64_t k = 1; k <= grid.back(); ++k) {
    s += evaluate_at(pop, f, pi.image()[k - 1]);
    if (k == grid[next]) {
      out.push_back(s.value());
      ++next;
    }
  }
  return out;
}

struct Tail {
  std::size_t hits = 0;
  std::size_t total = 0;
  double p() const { return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0; }
  double stderr_() const { return stats::binomial_stderr(p(), total); }
  bool censored() const { return hits == 0; }
};

json tail_json(const Tail& t) {
  json j{{"hits", t.hits}, {"replications", t.total}, {"p_hat", t.p()}, {"stderr", t.stderr_()},
         {"censored", t.censored()}};
  if (t.censored()) j["upper_bound"] = 1.0 / static_cast<double>(t.total);
  return j;
}

std::optional<stats::LinearFit> fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return std::nullopt;
  return stats::linear_fit(x, y);
}

json fit_json(const std::optional<stats::LinearFit>& f) {
  if (!f) return nullptr;
  json j{{"slope", f->slope}, {"intercept", f->intercept}, {"points", f->points}};
  if (f->points > 2) {
    j["slope_stderr"] = f->slope_stderr;
    j["ci95"] = {f->ci_low, f->ci_high};
  } else {
    j["ci95"] = nullptr;
  }
  return j;
}

json base_summary(const ExperimentConfig& c) {
  return json{{"type", c.type}, {"config", c.echo}, {"seed", c.seed}, {"replications", c.replications}};
}

// Speed b_n = n^gamma normalized log-probability (n / b_n^2) ln p.
double normalized_log(double n, double gamma, double p) { return std::pow(n, 1.0 - 2.0 * gamma) * std::log(p); }

}  // namespace

// ---------------------------------------------------------------------------
// deviation
// ---------------------------------------------------------------------------

ExperimentResult deviation_experiment(const ExperimentConfig& c) {
  require_replications(c, 2);
  require_centered(c);
  const bool permuted = c.scope == exact::Scope::permuted;
  std::vector<std::uint64_t> indices;
  if (permuted) {
    require_increasing(c.n_grid, "n");
    indices = c.n_grid;
  } else {
    require_increasing(c.depths, "depth");
    if (c.depths.front() < 0) config_error("depths must be >= 0");
    for (int r : c.depths) indices.push_back(static_cast<std::uint64_t>(r));
  }
  if (c.family != "polynomial" && c.family != "exponential") {
    config_error("deviation family must be 'polynomial' or 'exponential'");
  }
  const int last_r = permuted ? floor_log2(indices.back()) : static_cast<int>(indices.back());
  const int depth = tree_depth_for(c.functional, last_r);
  const std::size_t g = indices.size();

  std::vector<double> values(c.replications * g);
  parallel_for_replications(c.replications, c.workers, [&](std::size_t k) {
    const std::uint64_t key = replication_key(c.seed, c.type, k);
    const TreePopulation pop = simulate_tree(c.model, depth, key, std::max(depth, kDefaultMaxDepth));
    double* row = values.data() + k * g;
    if (permuted) {
      const auto pi = permutation_for(key, last_r);
      const auto sums = permuted_sums(pop, c.functional.f, pi, indices);
      for (std::size_t j = 0; j < g; ++j) row[j] = sums[j] / static_cast<double>(indices[j]);
    } else {
      for (std::size_t j = 0; j < g; ++j) {
        const int r = static_cast<int>(indices[j]);
        row[j] = c.scope == exact::Scope::generation ? mean_generation(pop, c.functional.f, r)
                                                     : mean_tree(pop, c.functional.f, r);
      }
    }
  });

  std::vector<double> deltas = c.deltas;
  json delta_note;
  if (c.delta_rule == "half-sd-first-depth") {
    std::vector<double> first(c.replications);
    for (std::size_t k = 0; k < c.replications; ++k) first[k] = values[k * g];
    const double sd = std::sqrt(stats::variance(first));
    deltas = {0.5 * sd};
    delta_note = {{"rule", c.delta_rule}, {"first_index_sd", sd}};
  } else if (!c.delta_rule.empty()) {
    config_error("unknown delta rule '" + c.delta_rule + "'");
  }
  if (deltas.empty()) config_error("deviation needs deltas or a delta rule");
  for (double d : deltas) {
    if (!(d > 0.0)) config_error("deltas must be positive");
  }

  const double alpha = model_alpha(c);
  ExperimentResult result;
  result.type = c.type;
  result.columns = {"index", "generation", "size", "delta", "hits", "replications", "p_hat", "stderr",
                    "censored", "shape", "bound"};
  json summary = base_summary(c);
  summary["alpha"] = alpha;
  summary["scope"] = exact::to_string(c.scope);
  summary["family"] = c.family;
  if (!delta_note.is_null()) summary["delta_rule"] = delta_note;
  json curves = json::array();
  bool all_below = true;

  for (double delta : deltas) {
    std::vector<Tail> tails(g);
    for (std::size_t j = 0; j < g; ++j) {
      tails[j].total = c.replications;
      for (std::size_t k = 0; k < c.replications; ++k) {
        if (std::abs(values[k * g + j]) > delta) ++tails[j].hits;
      }
    }
    std::vector<double> gen(g), size(g);
    for (std::size_t j = 0; j < g; ++j) {
      if (permuted) {
        gen[j] = floor_log2(indices[j]);
        size[j] = static_cast<double>(indices[j]);
      } else {
        const int r = static_cast<int>(indices[j]);
        gen[j] = r;
        size[j] = c.scope == exact::Scope::tree ? static_cast<double>(tree::subtree_size(r))
                                                : static_cast<double>(tree::generation_size(r));
      }
    }
    // Log-space fits use uncensored cells only.
    std::vector<double> fx_size, fx_gen, fy;
    for (std::size_t j = 0; j < g; ++j) {
      if (tails[j].censored()) continue;
      fx_size.push_back(size[j]);
      fx_gen.push_back(gen[j]);
      fy.push_back(std::log(tails[j].p()));
    }
    const auto fit_size = fit(fx_size, fy);
    const auto fit_gen = fit(fx_gen, fy);

    exact::BoundSpec spec;
    spec.scope = c.scope;
    spec.alpha = alpha;
    spec.delta = delta;
    std::optional<double> c_prime;
    if (c.family == "polynomial") {
      spec.family = exact::BoundFamily::probaineq;
    } else {
      spec.family = exact::BoundFamily::expoineq;
      if (fit_size && fit_size->slope < 0.0) c_prime = -fit_size->slope / (delta * delta);
      spec.c_prime = c_prime.value_or(1.0);
    }
    std::vector<double> shape(g);
    std::optional<double> c_star;
    for (std::size_t j = 0; j < g; ++j) {
      shape[j] = exact::evaluate_bound(spec, indices[j]);
      if (tails[j].censored() || !(shape[j] > 0.0)) continue;
      c_star = std::max(c_star.value_or(0.0), tails[j].p() / shape[j]);
    }
    json cells = json::array();
    bool below = true;
    for (std::size_t j = 0; j < g; ++j) {
      const double bound = c_star ? *c_star * shape[j] : std::nan("");
      if (c_star && tails[j].p() > bound * (1.0 + 1e-12)) below = false;
      result.rows.push_back({fmt(indices[j]), fmt(gen[j]), fmt(size[j]), fmt(delta), fmt(tails[j].hits),
                             fmt(c.replications), fmt(tails[j].p()), fmt(tails[j].stderr_()), fmt(tails[j].censored()),
                             fmt(shape[j]), fmt(bound)});
      json cell = tail_json(tails[j]);
      cell["index"] = indices[j];
      cell["size"] = size[j];
      cell["shape"] = shape[j];
      cell["bound"] = c_star ? json(bound) : json(nullptr);
      cells.push_back(cell);
    }
    all_below = all_below && below;
    json curve{{"delta", delta},
               {"regime", exact::regime_label(spec)},
               {"cells", cells},
               {"fit_log_p_vs_size", fit_json(fit_size)},
               {"fit_log_p_vs_generation", fit_json(fit_gen)},
               {"c_star", c_star ? json(*c_star) : json(nullptr)},
               {"c_prime", c_prime ? json(*c_prime) : json(nullptr)},
               {"below_fitted_bound", below}};
    if (fit_gen) curve["log2_p_slope_vs_generation"] = fit_gen->slope / std::log(2.0);
    curve["size_slope_negative"] = fit_size && fit_size->points > 2 && fit_size->ci_high < 0.0;
    curves.push_back(curve);
  }
  summary["curves"] = curves;
  summary["verdicts"] = {{"below_fitted_bound", all_below}};
  result.summary = summary;
  return result;
}

// ---------------------------------------------------------------------------
// clt
// ---------------------------------------------------------------------------

ExperimentResult clt_experiment(const ExperimentConfig& c) {
  require_replications(c);
  const double s2 = require_pf2(c);
  if (!(s2 > 0.0)) config_error("clt needs (mu, Pf^2) > 0");
  require_increasing(c.depths, "depth");
  const std::size_t g = c.depths.size();
  const int depth = c.depths.back() + 1;

  std::vector<double> values(c.replications * g);
  parallel_for_replications(c.replications, c.workers, [&](std::size_t k) {
    const TreePopulation pop = simulate_tree(c.model, depth, replication_key(c.seed, c.type, k));
    for (std::size_t j = 0; j < g; ++j) {
      const int r = c.depths[j];
      const double nodes = static_cast<double>(tree::subtree_size(r));
      values[k * g + j] = sum_tree(pop, c.functional.f, r) / std::sqrt(nodes * s2);
    }
  });

  ExperimentResult result;
  result.type = c.type;
  result.columns = {"r", "replication", "statistic"};
  json summary = base_summary(c);
  summary["stationary_pf2"] = s2;
  json per_depth = json::array();
  for (std::size_t j = 0; j < g; ++j) {
    std::vector<double> xs(c.replications);
    for (std::size_t k = 0; k < c.replications; ++k) {
      xs[k] = values[k * g + j];
      result.rows.push_back({fmt(c.depths[j]), fmt(static_cast<std::uint64_t>(k)), fmt(xs[k])});
    }
    json entry{{"r", c.depths[j]}};
    if (c.replications < 3) {
      entry["insufficient_replications"] = true;
    } else {
      const double d = stats::ks_distance_to_normal(xs);
      entry["insufficient_replications"] = false;
      entry["mean"] = stats::mean(xs);
      entry["variance"] = stats::variance(xs);
      entry["skewness"] = stats::skewness(xs);
      entry["ks_distance"] = d;
      entry["ks_pvalue"] = stats::ks_pvalue(d, xs.size());
    }
    per_depth.push_back(entry);
  }
  summary["depths"] = per_depth;
  summary["insufficient_replications"] = c.replications < 3;
  result.summary = summary;
  return result;
}

// ---------------------------------------------------------------------------
// estimator-clt
// ---------------------------------------------------------------------------

ExperimentResult estimator_clt_experiment(const ExperimentConfig& c) {
  require_replications(c, 2);
  const BarParams& bar = require_bar(c);
  if (bar.noise.family != NoiseFamily::gaussian) config_error("estimator-clt needs gaussian noise");
  require_increasing(c.depths, "depth");
  if (!(c.level > 0.0 && c.level < 1.0)) config_error("level must lie in (0, 1)");
  const std::size_t g = c.depths.size();
  const int depth = c.depths.back() + 1;
  const inference::Theta theta = bar.theta();
  const NoiseMoments noise = effective_noise_moments(bar);
  const inference::AsymptoticCovariance cov = inference::asymptotic_covariance(theta, noise.sigma2, noise.rho);

  struct Cell {
    std::array<double, 4> z{};
    double chi = std::nan("");
    bool reject = false;
    bool excluded = false;
  };
  std::vector<Cell> cells(c.replications * g);
  parallel_for_replications(c.replications, c.workers, [&](std::size_t k) {
    const TreePopulation pop = simulate_tree(c.model, depth, replication_key(c.seed, c.type, k));
    for (std::size_t j = 0; j < g; ++j) {
      Cell& cell = cells[k * g + j];
      const int r = c.depths[j];
      try {
        const inference::EstimatorReport rep = inference::estimate(pop, r);
        if (rep.degenerate || !rep.chi1) {
          cell.excluded = true;
          continue;
        }
        const double scale = std::sqrt(static_cast<double>(tree::subtree_size(r)));
        for (std::size_t i = 0; i < 4; ++i) cell.z[i] = scale * ((*rep.theta_hat)[i] - theta[i]);
        cell.chi = *rep.chi1;
        cell.reject = inference::asymmetry_test(cell.chi, c.level).reject;
      } catch (const Error&) {
        cell.excluded = true;
      }
    }
  });

  ExperimentResult result;
  result.type = c.type;
  result.columns = {"r", "replication", "z_alpha0", "z_beta0", "z_alpha1", "z_beta1", "chi", "reject", "excluded"};
  json summary = base_summary(c);
  summary["level"] = c.level;
  summary["threshold"] = stats::chi_squared_quantile(2.0, 1.0 - c.level);
  const auto matrix_json = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  summary["sigma_prime"] = matrix_json(cov.sigma_prime);
  json per_depth = json::array();
  std::vector<double> trend_r, trend_err;
  for (std::size_t j = 0; j < g; ++j) {
    std::vector<const Cell*> used;
    std::size_t excluded = 0;
    Tail rejections;
    for (std::size_t k = 0; k < c.replications; ++k) {
      const Cell& cell = cells[k * g + j];
      result.rows.push_back({fmt(c.depths[j]), fmt(static_cast<std::uint64_t>(k)), fmt(cell.z[0]), fmt(cell.z[1]),
                             fmt(cell.z[2]), fmt(cell.z[3]), fmt(cell.chi), fmt(cell.reject), fmt(cell.excluded)});
      if (cell.excluded) {
        ++excluded;
        continue;
      }
      used.push_back(&cell);
      ++rejections.total;
      if (cell.reject) ++rejections.hits;
    }
    json entry{{"r", c.depths[j]}, {"excluded", excluded}, {"used", used.size()}};
    if (used.size() >= 2) {
      Eigen::Vector4d mean = Eigen::Vector4d::Zero();
      for (const Cell* cell : used) mean += Eigen::Map<const Eigen::Vector4d>(cell->z.data());
      mean /= static_cast<double>(used.size());
      Eigen::Matrix4d s = Eigen::Matrix4d::Zero();
      for (const Cell* cell : used) {
        const Eigen::Vector4d d = Eigen::Map<const Eigen::Vector4d>(cell->z.data()) - mean;
        s += d * d.transpose();
      }
      s /= static_cast<double>(used.size() - 1);
      const double rel = (s - cov.sigma_prime).norm() / cov.sigma_prime.norm();
      // Cross-block entries against 0 with the independent-pair standard error.
      double max_z = 0.0;
      json cross = json::array();
      for (int a = 0; a < 2; ++a) {
        for (int b = 2; b < 4; ++b) {
          const double se = std::sqrt(s(a, a) * s(b, b) / static_cast<double>(used.size()));
          const double z = se > 0.0 ? s(a, b) / se : 0.0;
          max_z = std::max(max_z, std::abs(z));
          cross.push_back(z);
        }
      }
      entry["sample_covariance"] = matrix_json(s);
      entry["relative_frobenius_error"] = rel;
      entry["cross_block_z"] = cross;
      entry["max_abs_cross_block_z"] = max_z;
      trend_r.push_back(c.depths[j]);
      trend_err.push_back(rel);
    }
    entry["rejection"] = tail_json(rejections);
    entry["rejection_rate"] = rejections.p();
    per_depth.push_back(entry);
  }
  summary["depths"] = per_depth;
  // Trend: the error must not increase significantly with r.
  json trend{{"points", trend_r.size()}};
  if (trend_r.size() >= 3) {
    const auto f = stats::linear_fit(trend_r, trend_err);
    trend["fit"] = fit_json(f);
    trend["no_significant_increase"] = f.ci_low <= 0.0;
  } else if (trend_r.size() == 2) {
    trend["no_significant_increase"] = trend_err[1] <= trend_err[0];
  }
  summary["trend"] = trend;
  result.summary = summary;
  return result;
}

// ---------------------------------------------------------------------------
// mdp
// ---------------------------------------------------------------------------

namespace {

exact::SpeedSequence validated_speed(const ExperimentConfig& c, std::uint64_t n_max, json& summary) {
  const exact::SpeedSetting setting =
      c.speed_setting.value_or(c.functional.sup_abs ? exact::SpeedSetting::h1 : exact::SpeedSetting::hh2);
  const double alpha = model_alpha(c);
  const int horizon = std::max(20, floor_log2(n_max) + 1);
  exact::SpeedSequence seq;
  try {
    seq = exact::speed_sequence(c.gamma, setting, alpha, horizon);
  } catch (const Error& e) {
    config_error(e.what());
  }
  json checks = json::array();
  for (const auto& chk : seq.checks) checks.push_back({{"name", chk.name}, {"passed", chk.passed}, {"detail", chk.detail}});
  summary["speed"] = {{"gamma", c.gamma},
                      {"setting", setting == exact::SpeedSetting::hh2 ? "hh2" : "h1"},
                      {"alpha", alpha},
                      {"checks", checks}};
  if (!seq.valid()) {
    std::string failed;
    for (const auto& chk : seq.checks) {
      if (!chk.passed) failed += " [" + chk.name + ": " + chk.detail + "]";
    }
    config_error("speed b_n = n^" + format_double(c.gamma) + " fails the speed assumption:" + failed);
  }
  return seq;
}

}  // namespace

ExperimentResult mdp_experiment(const ExperimentConfig& c) {
  require_replications(c);
  const double s2 = require_pf2(c);
  if (!c.functional.pf2) config_error("mdp needs Pf^2");
  require_increasing(c.n_grid, "n");
  require_increasing(c.x_grid, "x");
  json summary = base_summary(c);
  const exact::SpeedSequence b = validated_speed(c, c.n_grid.back(), summary);
  if (c.functional.sup_abs) {
    // Conditional tail condition: holds identically once b_n exceeds sup |f|.
    const double b_min = b(static_cast<double>(c.n_grid.front()));
    if (!(b_min > *c.functional.sup_abs)) {
      config_error("b_n at the smallest n (" + format_double(b_min) + ") must exceed sup|f| = " +
                   format_double(*c.functional.sup_abs));
    }
    summary["conditional_tail_condition"] = "holds: b_n > sup|f| on the whole grid";
  } else {
    summary["conditional_tail_condition"] = "not checked: unbounded functional";
  }
  const int r_max = floor_log2(c.n_grid.back());
  const std::size_t g = c.n_grid.size();

  std::vector<double> sums(c.replications * g);
  parallel_for_replications(c.replications, c.workers, [&](std::size_t k) {
    const std::uint64_t key = replication_key(c.seed, c.type, k);
    const TreePopulation pop = simulate_tree(c.model, r_max + 1, key);
    const auto pi = permutation_for(key, r_max);
    const auto s = permuted_sums(pop, c.functional.f, pi, c.n_grid);
    std::copy(s.begin(), s.end(), sums.begin() + static_cast<std::ptrdiff_t>(k * g));
  });

  ExperimentResult result;
  result.type = c.type;
  result.columns = {"n", "x", "hits", "replications", "p_hat", "stderr", "censored", "normalized_log_p", "reference"};
  json curves = json::array();
  bool monotone_in_x = true;
  std::vector<std::vector<std::optional<double>>> table(c.x_grid.size(), std::vector<std::optional<double>>(g));
  for (std::size_t j = 0; j < g; ++j) {
    const double n = static_cast<double>(c.n_grid[j]);
    const double bn = b(n);
    std::optional<double> prev;
    for (std::size_t xi = 0; xi < c.x_grid.size(); ++xi) {
      const double x = c.x_grid[xi];
      Tail t{0, c.replications};
      for (std::size_t k = 0; k < c.replications; ++k) {
        if (sums[k * g + j] / bn >= x) ++t.hits;
      }
      const double reference = -x * x / (2.0 * s2);
      std::optional<double> value;
      if (!t.censored()) value = normalized_log(n, c.gamma, t.p());
      table[xi][j] = value;
      if (value && prev && *value > *prev) monotone_in_x = false;
      if (value) prev = value;
      result.rows.push_back({fmt(c.n_grid[j]), fmt(x), fmt(t.hits), fmt(c.replications), fmt(t.p()),
                             fmt(t.stderr_()), fmt(t.censored()), value ? fmt(*value) : "nan", fmt(reference)});
    }
  }
  std::optional<bool> x0_tends_to_zero;
  for (std::size_t xi = 0; xi < c.x_grid.size(); ++xi) {
    json points = json::array();
    std::vector<double> ns, vs;
    for (std::size_t j = 0; j < g; ++j) {
      points.push_back({{"n", c.n_grid[j]}, {"value", table[xi][j] ? json(*table[xi][j]) : json(nullptr)}});
      if (table[xi][j]) {
        ns.push_back(static_cast<double>(c.n_grid[j]));
        vs.push_back(*table[xi][j]);
      }
    }
    json curve{{"x", c.x_grid[xi]}, {"reference", -c.x_grid[xi] * c.x_grid[xi] / (2.0 * s2)}, {"points", points}};
    if (vs.size() >= 2) curve["direction_in_n"] = vs.back() > vs.front() ? "increasing" : "decreasing";
    if (c.x_grid[xi] == 0.0) {
      bool shrinking = vs.size() == g && g >= 2;
      for (std::size_t j = 1; shrinking && j < vs.size(); ++j) shrinking = std::abs(vs[j]) < std::abs(vs[j - 1]);
      x0_tends_to_zero = shrinking;
      curve["abs_strictly_decreasing"] = shrinking;
    }
    curves.push_back(curve);
  }
  summary["stationary_pf2"] = s2;
  summary["curves"] = curves;
  summary["verdicts"] = {{"monotone_in_x", monotone_in_x},
                         {"x0_tends_to_zero", x0_tends_to_zero ? json(*x0_tends_to_zero) : json(nullptr)}};
  result.summary = summary;
  return result;
}

// ---------------------------------------------------------------------------
// superexp
// ---------------------------------------------------------------------------

ExperimentResult superexp_diagnostic(const ExperimentConfig& c) {
  require_replications(c);
  if (c.deltas.empty()) config_error("superexp needs deltas");
  for (double d : c.deltas) {
    if (!(d > 0.0)) config_error("superexp needs delta > 0");
  }
  if (!(c.gamma > 0.5 && c.gamma < 1.0)) config_error("gamma must lie in (1/2, 1)");
  const bool by_depth = c.target == Target::theta_hat || c.target == Target::sigma2_rho;

  // grid[j] is the node count n the speed is evaluated at.
  std::vector<std::uint64_t> grid;
  if (by_depth) {
    require_bar(c);
    require_increasing(c.depths, "depth");
    for (int r : c.depths) grid.push_back(tree::subtree_size(r));
  } else {
    require_increasing(c.n_grid, "n");
    grid = c.n_grid;
    if (c.target == Target::mean_functional) require_centered(c);
    if (c.target == Target::bracket && (!c.functional.pf2 || !c.functional.stationary_pf2)) {
      config_error("bracket target needs Pf^2 and (mu, Pf^2)");
    }
  }
  const std::size_t g = grid.size();
  const std::size_t nd = c.deltas.size();

  // deviation[k][j] = |Z_n - z| (max-norm for vector targets).
  std::vector<double> deviation(c.replications * g);
  parallel_for_replications(c.replications, c.workers, [&](std::size_t k) {
    const std::uint64_t key = replication_key(c.seed, c.type, k);
    double* row = deviation.data() + k * g;
    if (by_depth) {
      const BarParams& bar = std::get<BarParams>(c.model);
      const NoiseMoments noise = effective_noise_moments(bar);
      const TreePopulation pop = simulate_tree(c.model, c.depths.back() + 1, key);
      for (std::size_t j = 0; j < g; ++j) {
        const int r = c.depths[j];
        try {
          const auto ls = inference::least_squares(pop, r);
          if (c.target == Target::theta_hat) {
            double m = 0.0;
            for (std::size_t i = 0; i < 4; ++i) m = std::max(m, std::abs(ls.theta_hat[i] - bar.theta()[i]));
            row[j] = m;
          } else {
            const auto rm = inference::residual_moments(pop, ls.theta_hat, r);
            row[j] = std::max(std::abs(rm.sigma2_hat - noise.sigma2), std::abs(rm.rho_hat - noise.rho));
          }
        } catch (const Error& e) {
          if (e.code() != ErrorCode::degenerate) throw;
          row[j] = std::numeric_limits<double>::infinity();  // a failed estimate counts as a deviation
        }
      }
      return;
    }
    const int r_max = floor_log2(grid.back());
    const TreePopulation pop = simulate_tree(c.model, tree_depth_for(c.functional, r_max), key);
    const auto pi = permutation_for(key, r_max);
    if (c.target == Target::mean_functional) {
      const auto s = permuted_sums(pop, c.functional.f, pi, grid);
      for (std::size_t j = 0; j < g; ++j) row[j] = std::abs(s[j] / static_cast<double>(grid[j]));
    } else {
      const auto s = permuted_sums(pop, *c.functional.pf2, pi, grid);
      for (std::size_t j = 0; j < g; ++j) {
        row[j] = std::abs(s[j] / static_cast<double>(grid[j]) - *c.functional.stationary_pf2);
      }
    }
  });

  ExperimentResult result;
  result.type = c.type;
  result.columns = {"n", "delta", "hits", "replications", "p_hat", "stderr", "censored", "normalized_log_p"};
  json summary = base_summary(c);
  summary["target"] = to_string(c.target);
  summary["gamma"] = c.gamma;
  summary["floor"] = c.floor;
  json curves = json::array();
  bool all_consistent = true;
  for (std::size_t d = 0; d < nd; ++d) {
    const double delta = c.deltas[d];
    std::vector<Tail> tails(g, Tail{0, c.replications});
    for (std::size_t j = 0; j < g; ++j) {
      for (std::size_t k = 0; k < c.replications; ++k) {
        if (deviation[k * g + j] > delta) ++tails[j].hits;
      }
    }
    json points = json::array();
    std::vector<double> uncensored;
    bool censored_suffix_only = true;
    bool seen_censored = false;
    for (std::size_t j = 0; j < g; ++j) {
      const double n = static_cast<double>(grid[j]);
      std::optional<double> value;
      if (!tails[j].censored()) value = normalized_log(n, c.gamma, tails[j].p());
      if (tails[j].censored()) {
        seen_censored = true;
      } else {
        if (seen_censored) censored_suffix_only = false;
        uncensored.push_back(*value);
      }
      json p = tail_json(tails[j]);
      p["n"] = grid[j];
      p["value"] = value ? json(*value) : json(nullptr);
      if (tails[j].censored()) p["value_upper_bound"] = normalized_log(n, c.gamma, 1.0 / static_cast<double>(c.replications));
      points.push_back(p);
      result.rows.push_back({fmt(grid[j]), fmt(delta), fmt(tails[j].hits), fmt(c.replications), fmt(tails[j].p()),
                             fmt(tails[j].stderr_()), fmt(tails[j].censored()), value ? fmt(*value) : "nan"});
    }
    bool strictly_decreasing = true;
    for (std::size_t j = 1; j < uncensored.size(); ++j) {
      if (!(uncensored[j] < uncensored[j - 1])) strictly_decreasing = false;
    }
    const bool fully_censored = uncensored.empty();
    const bool last_censored = tails.back().censored();
    const bool below_floor = last_censored || uncensored.back() < c.floor;
    const bool consistent = censored_suffix_only && strictly_decreasing && below_floor;
    all_consistent = all_consistent && consistent;
    curves.push_back({{"delta", delta},
                      {"points", points},
                      {"fully_censored", fully_censored},
                      {"strictly_decreasing", strictly_decreasing},
                      {"censored_cells_form_suffix", censored_suffix_only},
                      {"last_below_floor_or_censored", below_floor},
                      {"verdict", consistent ? "consistent with -inf trend" : "not consistent with -inf trend"}});
  }
  summary["curves"] = curves;
  summary["verdicts"] = {{"consistent", all_consistent}};
  result.summary = summary;
  return result;
}

// ---------------------------------------------------------------------------
// lil
// ---------------------------------------------------------------------------

std::vector<double> lil_statistics(const TreePopulation& pop, const Functional& f, int depth, double s2) {
  if (depth < 2) throw Error(ErrorCode::invalid_argument, "the LIL statistic starts at r = 2");
  if (!(s2 >= 0.0)) throw Error(ErrorCode::invalid_argument, "(mu, Pf^2) must be >= 0");
  std::vector<double> out;
  stats::CompensatedSum m;
  for (int r = 0; r <= depth; ++r) {
    const tree::Layer layer = tree::layer(r);
    for (tree::NodeId i = layer.first; i <= layer.last; ++i) m += evaluate_at(pop, f, i);
    if (r < 2) continue;
    const double nodes = static_cast<double>(tree::subtree_size(r));
    const double value = m.value();
    if (value == 0.0) {
      out.push_back(0.0);
      continue;
    }
    if (s2 == 0.0) throw Error(ErrorCode::degenerate, "nonzero martingale with (mu, Pf^2) = 0");
    out.push_back(value / std::sqrt(2.0 * nodes * std::log(std::log(nodes)) * s2));
  }
  return out;
}

ExperimentResult lil_diagnostic(const ExperimentConfig& c) {
  require_replications(c);
  const double s2 = require_pf2(c);
  if (c.depths.empty()) config_error("lil needs a depth");
  const int depth = c.depths.back();
  if (depth < 2) config_error("lil depth must be >= 2");
  if (c.window < 1 || c.window > depth - 1) config_error("lil window must lie in [1, depth - 1]");
  const std::size_t len = static_cast<std::size_t>(depth - 1);

  std::vector<double> paths(c.replications * len);
  parallel_for_replications(c.replications, c.workers, [&](std::size_t k) {
    const TreePopulation pop = simulate_tree(c.model, depth + 1, replication_key(c.seed, c.type, k));
    const auto s = lil_statistics(pop, c.functional.f, depth, s2);
    std::copy(s.begin(), s.end(), paths.begin() + static_cast<std::ptrdiff_t>(k * len));
  });

  ExperimentResult result;
  result.type = c.type;
  result.columns = {"replication", "r", "statistic"};
  std::vector<double> tail_max(c.replications);
  std::size_t inside = 0;
  for (std::size_t k = 0; k < c.replications; ++k) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) {
      const int r = static_cast<int>(i) + 2;
      const double v = paths[k * len + i];
      result.rows.push_back({fmt(static_cast<std::uint64_t>(k)), fmt(r), fmt(v)});
      if (r > depth - c.window) mx = std::max(mx, v);
    }
    tail_max[k] = mx;
    if (mx <= 1.0 + c.epsilon) ++inside;
  }
  json summary = base_summary(c);
  summary["depth"] = depth;
  summary["window"] = {depth - c.window + 1, depth};
  summary["epsilon"] = c.epsilon;
  summary["stationary_pf2"] = s2;
  summary["fraction_within_envelope"] = static_cast<double>(inside) / static_cast<double>(c.replications);
  std::vector<double> sorted = tail_max;
  std::sort(sorted.begin(), sorted.end());
  summary["median_tail_max"] = sorted[sorted.size() / 2];
  summary["max_tail_max"] = sorted.back();
  result.summary = summary;
  return result;
}

// ---------------------------------------------------------------------------
// asclt
// ---------------------------------------------------------------------------

AscltMeasure asclt_measure(const std::vector<double>& partial_sums, double s2) {
  if (partial_sums.size() < 17) throw Error(ErrorCode::invalid_argument, "asclt needs N >= 16");
  if (!(s2 > 0.0)) throw Error(ErrorCode::invalid_argument, "asclt needs s^2 > 0");
  const std::size_t n_max = partial_sums.size() - 1;
  const double log_vn2 = std::log(s2 * static_cast<double>(n_max));
  if (!(log_vn2 > 0.0)) throw Error(ErrorCode::invalid_argument, "asclt needs V_N^2 > 1");

  // Weight 1 - V_n^2 / V_{n+1}^2 = 1 / (n + 1) on the point M_n / V_n.
  std::vector<std::pair<double, double>> points;
  points.reserve(n_max);
  stats::CompensatedSum total;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double w = 1.0 / static_cast<double>(n + 1);
    points.emplace_back(partial_sums[n] / std::sqrt(s2 * static_cast<double>(n)), w);
    total += w;
  }
  std::sort(points.begin(), points.end());

  AscltMeasure out;
  out.normalization = total.value() / log_vn2;
  for (int i = -400; i <= 400; ++i) out.grid.push_back(i / 100.0);
  out.cdf.reserve(out.grid.size());
  std::size_t idx = 0;
  stats::CompensatedSum acc;
  for (double x : out.grid) {
    while (idx < points.size() && points[idx].first <= x) acc += points[idx++].second;
    const double weight = acc.value();
    const double phi = stats::normal_cdf(x);
    out.cdf.push_back(weight / log_vn2);
    out.sup_distance = std::max(out.sup_distance, std::abs(weight / log_vn2 - phi));
    out.sup_distance_renormalized = std::max(out.sup_distance_renormalized, std::abs(weight / total.value() - phi));
  }
  return out;
}

ExperimentResult asclt_diagnostic(const ExperimentConfig& c) {
  require_replications(c);
  const double s2 = require_pf2(c);
  if (c.steps < 16) config_error("asclt needs N >= 16");
  if (!c.functional.pf2) config_error("asclt needs Pf^2");
  const int r_max = floor_log2(c.steps);

  std::vector<AscltMeasure> measures(c.replications);
  parallel_for_replications(c.replications, c.workers, [&](std::size_t k) {
    const std::uint64_t key = replication_key(c.seed, c.type, k);
    const TreePopulation pop = simulate_tree(c.model, r_max + 1, key);
    const auto pi = permutation_for(key, r_max);
    const MartingalePath path = martingale_path(pop, c.functional.f, pi, c.steps, *c.functional.pf2);
    measures[k] = asclt_measure(path.partial_sums, s2);
  });

  ExperimentResult result;
  result.type = c.type;
  result.columns = {"x", "cdf", "normal_cdf"};
  const AscltMeasure& first = measures.front();
  for (std::size_t i = 0; i < first.grid.size(); ++i) {
    result.rows.push_back({fmt(first.grid[i]), fmt(first.cdf[i]), fmt(stats::normal_cdf(first.grid[i]))});
  }
  std::vector<double> distances;
  std::size_t within = 0;
  for (const auto& m : measures) {
    distances.push_back(m.sup_distance);
    if (m.sup_distance <= c.tolerance) ++within;
  }
  std::vector<double> sorted = distances;
  std::sort(sorted.begin(), sorted.end());
  json summary = base_summary(c);
  summary["steps"] = c.steps;
  summary["stationary_pf2"] = s2;
  summary["tolerance"] = c.tolerance;
  summary["trajectory0"] = {{"sup_distance", first.sup_distance},
                            {"sup_distance_renormalized", first.sup_distance_renormalized},
                            {"normalization", first.normalization}};
  summary["median_sup_distance"] = sorted[sorted.size() / 2];
  summary["fraction_within_tolerance"] = static_cast<double>(within) / static_cast<double>(measures.size());
  summary["verdicts"] = {{"trajectory0_within_tolerance", first.sup_distance <= c.tolerance}};
  result.summary = summary;
  return result;
}

// ---------------------------------------------------------------------------
// slln
// ---------------------------------------------------------------------------

ExperimentResult slln_diagnostic(const ExperimentConfig& c) {
  require_replications(c);
  require_increasing(c.n_grid, "n");
  const int r_max = floor_log2(c.n_grid.back());
  const std::size_t g = c.n_grid.size();

  std::vector<double> means(c.replications * g * 2);
  parallel_for_replications(c.replications, c.workers, [&](std::size_t k) {
    const std::uint64_t key = replication_key(c.seed, c.type, k);
    const TreePopulation pop = simulate_tree(c.model, tree_depth_for(c.functional, r_max), key);
    for (int stream = 0; stream < 2; ++stream) {
      const auto pi = permutation_for(key, r_max, stream == 0 ? "permutation" : "permutation-b");
      const auto s = permuted_sums(pop, c.functional.f, pi, c.n_grid);
      for (std::size_t j = 0; j < g; ++j) {
        means[(k * 2 + static_cast<std::size_t>(stream)) * g + j] = s[j] / static_cast<double>(c.n_grid[j]);
      }
    }
  });

  ExperimentResult result;
  result.type = c.type;
  result.columns = {"replication", "stream", "n", "mean"};
  const double scale = c.functional.sup_abs.value_or(1.0) / std::sqrt(static_cast<double>(c.n_grid.back()));
  bool all_final_within = true;
  bool streams_agree = true;
  json finals = json::array();
  for (std::size_t k = 0; k < c.replications; ++k) {
    for (int stream = 0; stream < 2; ++stream) {
      for (std::size_t j = 0; j < g; ++j) {
        result.rows.push_back({fmt(static_cast<std::uint64_t>(k)), fmt(stream), fmt(c.n_grid[j]),
                               fmt(means[(k * 2 + static_cast<std::size_t>(stream)) * g + j])});
      }
    }
    const double a = means[(k * 2) * g + g - 1];
    const double b = means[(k * 2 + 1) * g + g - 1];
    all_final_within = all_final_within && std::abs(a) <= c.tolerance;
    streams_agree = streams_agree && std::abs(a - b) <= 2.0 * scale;
    finals.push_back({{"replication", k}, {"final", a}, {"final_other_permutation", b}});
  }
  json summary = base_summary(c);
  summary["tolerance"] = c.tolerance;
  summary["clt_scale"] = scale;
  summary["finals"] = finals;
  summary["verdicts"] = {{"all_final_within_tolerance", all_final_within}, {"permutation_streams_agree", streams_agree}};
  result.summary = summary;
  return result;
}

// ---------------------------------------------------------------------------
// exact tables
// ---------------------------------------------------------------------------

ExperimentResult moments_exact(const ExperimentConfig& c) {
  require_increasing(c.depths, "depth");
  for (int order : c.orders) {
    if (order != 1 && order != 2 && order != 4) config_error("moment orders must be 1, 2 or 4");
  }
  struct Instance {
    std::string label;
    FiniteKernel kernel;
    Eigen::VectorXd f;
  };
  std::vector<Instance> instances;
  if (const auto* kernel = std::get_if<FiniteKernel>(&c.model)) {
    if (c.functional.f.has_table() && !is_triangle(c.functional)) {
      instances.push_back({"configured", *kernel, to_vector(c.functional.f)});
    }
  }
  RandomStream rng(derive_seed(c.seed, {tag_hash(c.type)}));
  for (std::size_t k = 0; k < c.kernels; ++k) {
    FiniteKernel kernel = random_finite_kernel(c.states, rng);
    Eigen::VectorXd f(static_cast<Eigen::Index>(c.states));
    for (Eigen::Index x = 0; x < f.size(); ++x) f[x] = 2.0 * rng.uniform() - 1.0;
    const Eigen::VectorXd mu = exact::stationary_distribution(mean_kernel(kernel));
    f.array() -= mu.dot(f);
    instances.push_back({"random-" + std::to_string(k), std::move(kernel), f});
  }
  if (instances.empty()) config_error("moments-exact has no instances (set kernels > 0 or a finite model)");

  ExperimentResult result;
  result.type = c.type;
  result.columns = {"instance", "r", "order", "formula", "brute_force", "abs_diff", "pass", "scaled_moment"};
  constexpr double tol = 1e-10;
  bool all_pass = true;
  double max_diff = 0.0;
  for (const auto& inst : instances) {
    for (int r : c.depths) {
      for (int order : c.orders) {
        const double brute = exact::brute_force_moment(inst.kernel, inst.f, order, exact::Scope::generation,
                                                       static_cast<std::uint64_t>(r));
        std::optional<double> formula;
        if (order == 1) formula = exact::first_moment(inst.kernel, inst.f, exact::Scope::generation, r);
        if (order == 2) formula = exact::second_moment_generation(inst.kernel, inst.f, r);
        std::string diff = "nan", pass = "nan";
        if (formula) {
          const double d = std::abs(*formula - brute);
          max_diff = std::max(max_diff, d);
          all_pass = all_pass && d <= tol;
          diff = fmt(d);
          pass = fmt(d <= tol);
        }
        // 2^{r k / 2} E[M^k]: the quantity the moment bounds keep finite.
        const double scaled = std::ldexp(brute, r * order / 2);
        result.rows.push_back({inst.label, fmt(r), fmt(order), formula ? fmt(*formula) : "nan", fmt(brute), diff, pass,
                               fmt(scaled)});
      }
    }
  }
  json summary = base_summary(c);
  summary["instances"] = instances.size();
  summary["tolerance"] = tol;
  summary["max_abs_diff"] = max_diff;
  summary["verdicts"] = {{"all_pass", all_pass}};
  result.summary = summary;
  return result;
}

ExperimentResult events_exact(const ExperimentConfig& c) {
  require_increasing(c.depths, "depth");
  ExperimentResult result;
  result.type = c.type;
  result.columns = {"r", "p", "event", "enumeration", "formula", "abs_diff", "agree"};
  json tables = json::array();
  bool e0_exact = true;
  bool counts_consistent = true;
  for (int r : c.depths) {
    std::vector<int> levels = c.levels;
    if (levels.empty()) {
      for (int p = 2; p <= r; ++p) levels.push_back(p);
    }
    for (int p : levels) {
      if (p > r) continue;
      const exact::AncestorEvents ev = exact::ancestor_event_probabilities(r, p);
      const std::uint64_t sum = std::accumulate(ev.counts.begin(), ev.counts.end(), std::uint64_t{0});
      const bool consistent = sum == ev.total && ev.total == (std::uint64_t{1} << (4 * r));
      counts_consistent = counts_consistent && consistent;
      e0_exact = e0_exact && ev.e0_generation2 == 3.0 / 32.0;
      json rows = json::array();
      for (const auto& cmp : ev.comparisons) {
        const double d = std::abs(cmp.enumeration - cmp.formula);
        const bool agree = d <= 1e-15;
        result.rows.push_back({fmt(r), fmt(p), cmp.label, fmt(cmp.enumeration), fmt(cmp.formula), fmt(d), fmt(agree)});
        rows.push_back({{"event", cmp.label}, {"enumeration", cmp.enumeration}, {"formula", cmp.formula}, {"agree", agree}});
      }
      tables.push_back({{"r", r},
                        {"p", p},
                        {"total", ev.total},
                        {"counts", ev.counts},
                        {"counts_total_consistent", consistent},
                        {"comparisons", rows}});
    }
  }
  json summary = base_summary(c);
  summary["tables"] = tables;
  summary["verdicts"] = {{"e0_generation2_is_3_over_32", e0_exact}, {"counts_total_consistent", counts_consistent}};
  result.summary = summary;
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& c) {
  if (c.type == "deviation") return deviation_experiment(c);
  if (c.type == "clt") return clt_experiment(c);
  if (c.type == "estimator-clt") return estimator_clt_experiment(c);
  if (c.type == "mdp") return mdp_experiment(c);
  if (c.type == "superexp") return superexp_diagnostic(c);
  if (c.type == "lil") return lil_diagnostic(c);
  if (c.type == "asclt") return asclt_diagnostic(c);
  if (c.type == "slln") return slln_diagnostic(c);
  if (c.type == "moments-exact") return moments_exact(c);
  if (c.type == "events-exact") return events_exact(c);
  config_error("unknown experiment type '" + c.type + "'");
}

void write_result(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::config, "cannot create output directory " + dir.string() + ": " + ec.message());
  const auto write = [&](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::config, "cannot write " + path.string());
    out << text;
  };
  write(dir / (result.type + ".csv"), result.csv());
  write(dir / (result.type + ".json"), result.summary.dump(2) + "\n");
}

}  // namespace bmc::harness
