#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "bmc/kernels.hpp"
#include "bmc/tree.hpp"

namespace bmc {

using Model = std::variant<BarParams, FiniteKernel>;

inline constexpr int kDefaultMaxDepth = 24;

// Values of the chain on T_depth, heap-indexed: values[id - 1] = X_id. Finite
// state populations store state indices as doubles.
struct TreePopulation {
  int depth = 0;
  std::vector<double> values;
  std::string model;            // "bar", "finite" or "observed"
  std::uint64_t seed = 0;       // replication key the tree was drawn from

  std::size_t size() const { return values.size(); }
  double at(tree::NodeId id) const { return values.at(id - 1); }
};

// Draws X_1 from the initial law and then, generation by generation, both
// daughters of every node with one kernel call. The root uses the stream of
// node 0 and the daughters of node i the stream of node i, so the tree is a
// pure function of (replication_key, depth).
TreePopulation simulate_tree(const BarParams& params, int depth, std::uint64_t replication_key,
                             int max_depth = kDefaultMaxDepth);
TreePopulation simulate_tree(const FiniteKernel& kernel, int depth, std::uint64_t replication_key,
                             int max_depth = kDefaultMaxDepth);
TreePopulation simulate_tree(const Model& model, int depth, std::uint64_t replication_key,
                             int max_depth = kDefaultMaxDepth);

// Allocation-reusing form used by the experiment loops.
void simulate_values(const Model& model, int depth, std::uint64_t replication_key, std::vector<double>& values);

// Y_0 ~ nu, then `steps` moves of the random-lineage chain Q. Returns steps + 1 states.
std::vector<double> simulate_tagged_chain(const BarParams& params, int steps, std::uint64_t key);
std::vector<double> simulate_tagged_chain(const FiniteKernel& kernel, int steps, std::uint64_t key);

// CSV with header `node,value`, one row per node in increasing id order.
void write_population_csv(std::ostream& out, const TreePopulation& pop);
// Reads a `node,value` CSV. Throws ErrorCode::data naming missing ids when the
// rows do not form a complete tree 1..2^{d+1}-1.
TreePopulation read_population_csv(std::istream& in);

std::string format_double(double v);

}  // namespace bmc
