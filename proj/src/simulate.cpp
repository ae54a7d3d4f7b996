#include "bmc/simulate.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "bmc/error.hpp"

namespace bmc {

namespace {

void check_depth(int depth, int max_depth) {
  if (depth < 0) throw Error(ErrorCode::invalid_argument, "depth must be >= 0");
  if (depth > max_depth) {
    throw Error(ErrorCode::resource_guard,
                "depth " + std::to_string(depth) + " exceeds the configured maximum " + std::to_string(max_depth));
  }
}

void fill_bar(const BarParams& params, int depth, std::uint64_t key, std::vector<double>& values) {
  values.resize(tree::subtree_size(depth));
  RandomStream root = node_stream(key, 0);
  values[0] = sample_initial(params.initial, root);
  const std::uint64_t internal = tree::subtree_size(depth) / 2;  // 2^depth - 1
  for (std::uint64_t i = 1; i <= internal; ++i) {
    RandomStream rng = node_stream(key, i);
    const auto [d0, d1] = bar_sample(params, values[i - 1], rng);
    values[2 * i - 1] = d0;
    values[2 * i] = d1;
  }
}

void fill_finite(const FiniteKernel& kernel, int depth, std::uint64_t key, std::vector<double>& values) {
  values.resize(tree::subtree_size(depth));
  RandomStream root = node_stream(key, 0);
  values[0] = static_cast<double>(kernel.sample_initial(root));
  const std::uint64_t internal = tree::subtree_size(depth) / 2;
  for (std::uint64_t i = 1; i <= internal; ++i) {
    RandomStream rng = node_stream(key, i);
    const auto [d0, d1] = kernel.sample(static_cast<std::size_t>(values[i - 1]), rng);
    values[2 * i - 1] = static_cast<double>(d0);
    values[2 * i] = static_cast<double>(d1);
  }
}

}  // namespace

TreePopulation simulate_tree(const BarParams& params, int depth, std::uint64_t key, int max_depth) {
  check_depth(depth, max_depth);
  params.validate();
  TreePopulation pop{depth, {}, "bar", key};
  fill_bar(params, depth, key, pop.values);
  return pop;
}

TreePopulation simulate_tree(const FiniteKernel& kernel, int depth, std::uint64_t key, int max_depth) {
  check_depth(depth, max_depth);
  TreePopulation pop{depth, {}, "finite", key};
  fill_finite(kernel, depth, key, pop.values);
  return pop;
}

TreePopulation simulate_tree(const Model& model, int depth, std::uint64_t key, int max_depth) {
  return std::visit([&](const auto& m) { return simulate_tree(m, depth, key, max_depth); }, model);
}

void simulate_values(const Model& model, int depth, std::uint64_t key, std::vector<double>& values) {
  check_depth(depth, kDefaultMaxDepth);
  if (const auto* bar = std::get_if<BarParams>(&model)) {
    fill_bar(*bar, depth, key, values);
  } else {
    fill_finite(std::get<FiniteKernel>(model), depth, key, values);
  }
}

std::vector<double> simulate_tagged_chain(const BarParams& params, int steps, std::uint64_t key) {
  if (steps < 1) throw Error(ErrorCode::invalid_argument, "tagged chain needs steps >= 1");
  params.validate();
  RandomStream rng(derive_seed(key, {tag_hash("tagged-chain")}));
  std::vector<double> path(static_cast<std::size_t>(steps) + 1);
  path[0] = sample_initial(params.initial, rng);
  for (int k = 1; k <= steps; ++k) path[k] = bar_lineage_step(params, path[k - 1], rng);
  return path;
}

std::vector<double> simulate_tagged_chain(const FiniteKernel& kernel, int steps, std::uint64_t key) {
  if (steps < 1) throw Error(ErrorCode::invalid_argument, "tagged chain needs steps >= 1");
  RandomStream rng(derive_seed(key, {tag_hash("tagged-chain")}));
  std::vector<double> path(static_cast<std::size_t>(steps) + 1);
  auto state = kernel.sample_initial(rng);
  path[0] = static_cast<double>(state);
  for (int k = 1; k <= steps; ++k) {
    state = finite_lineage_step(kernel, state, rng);
    path[k] = static_cast<double>(state);
  }
  return path;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_population_csv(std::ostream& out, const TreePopulation& pop) {
  out << "node,value\n";
  for (std::size_t i = 0; i < pop.values.size(); ++i) out << (i + 1) << ',' << format_double(pop.values[i]) << '\n';
}

TreePopulation read_population_csv(std::istream& in) {
  auto data_error = [](const std::string& what) { return Error(ErrorCode::data, what); };
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty tree file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "node,value") throw data_error("expected header 'node,value', got '" + line + "'");

  std::map<std::uint64_t, double> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw data_error("line " + std::to_string(line_no) + ": expected 'node,value'");
    std::uint64_t id = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + comma, id);
    if (ec != std::errc() || ptr != line.data() + comma || id < 1) {
      throw data_error("line " + std::to_string(line_no) + ": invalid node id");
    }
    double value = 0.0;
    try {
      std::size_t used = 0;
      const std::string field = line.substr(comma + 1);
      value = std::stod(field, &used);
      if (used != field.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw data_error("line " + std::to_string(line_no) + ": invalid value");
    }
    if (!rows.emplace(id, value).second) throw data_error("duplicate node id " + std::to_string(id));
  }
  if (rows.empty()) throw data_error("tree file has no rows");

  const std::uint64_t max_id = rows.rbegin()->first;
  const int depth = tree::generation(max_id);
  if (depth > tree::kMaxIndexableDepth) throw data_error("node id too large");
  const std::uint64_t expected = tree::subtree_size(depth);
  std::vector<std::uint64_t> missing;
  for (std::uint64_t id = 1; id <= expected; ++id) {
    if (!rows.contains(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "incomplete tree T_" << depth << ", missing node ids:";
    const std::size_t shown = std::min<std::size_t>(missing.size(), 50);
    for (std::size_t k = 0; k < shown; ++k) msg << ' ' << missing[k];
    if (shown < missing.size()) msg << " ... (" << missing.size() << " missing)";
    throw data_error(msg.str());
  }

  TreePopulation pop{depth, {}, "observed", 0};
  pop.values.reserve(expected);
  for (const auto& [id, value] : rows) pop.values.push_back(value);
  return pop;
}

}  // namespace bmc
