#include "bmc/empirical.hpp"

#include <string>

#include "bmc/error.hpp"
#include "bmc/stats.hpp"

namespace bmc {

namespace {

// Deepest generation whose nodes the functional can be evaluated on.
int usable_depth(const TreePopulation& pop, const Functional& f) {
  return f.kind() == FunctionalKind::triangle ? pop.depth - 1 : pop.depth;
}

void require_range(const TreePopulation& pop, const Functional& f, int r) {
  if (r < 0) throw Error(ErrorCode::invalid_argument, "generation must be >= 0");
  if (r > usable_depth(pop, f)) {
    throw Error(ErrorCode::insufficient_depth,
                "population of depth " + std::to_string(pop.depth) + " is too shallow for a " +
                    (f.kind() == FunctionalKind::triangle ? "triangle" : "single") + " average up to generation " +
                    std::to_string(r));
  }
}

void require_prefix(const TreePopulation& pop, const Functional& f, const tree::GenerationPermutation& pi,
                    std::uint64_t n) {
  const int depth = usable_depth(pop, f);
  if (n < 1 || depth < 0 || n > tree::subtree_size(depth)) {
    throw Error(ErrorCode::invalid_argument, "permuted prefix length " + std::to_string(n) + " out of range");
  }
  if (pi.size() < n) throw Error(ErrorCode::invalid_argument, "permutation does not cover the first n nodes");
}

}  // namespace

double evaluate_at(const TreePopulation& pop, const Functional& f, tree::NodeId i) {
  const auto& v = pop.values;
  if (f.kind() == FunctionalKind::single) return f(v[i - 1]);
  return f(v[i - 1], v[2 * i - 1], v[2 * i]);
}

double mean_generation(const TreePopulation& pop, const Functional& f, int r) {
  require_range(pop, f, r);
  const tree::Layer g = tree::layer(r);
  stats::CompensatedSum s;
  for (tree::NodeId i = g.first; i <= g.last; ++i) s += evaluate_at(pop, f, i);
  return s.value() / static_cast<double>(g.size());
}

double sum_tree(const TreePopulation& pop, const Functional& f, int r) {
  require_range(pop, f, r);
  stats::CompensatedSum s;
  const std::uint64_t last = tree::subtree_size(r);
  for (tree::NodeId i = 1; i <= last; ++i) s += evaluate_at(pop, f, i);
  return s.value();
}

double mean_tree(const TreePopulation& pop, const Functional& f, int r) {
  return sum_tree(pop, f, r) / static_cast<double>(tree::subtree_size(r));
}

double mean_permuted(const TreePopulation& pop, const Functional& f, const tree::GenerationPermutation& pi,
                     std::uint64_t n) {
  require_prefix(pop, f, pi, n);
  stats::CompensatedSum s;
  for (std::uint64_t k = 1; k <= n; ++k) s += evaluate_at(pop, f, pi.image()[k - 1]);
  return s.value() / static_cast<double>(n);
}

MartingalePath martingale_path(const TreePopulation& pop, const Functional& f, const tree::GenerationPermutation& pi,
                               std::uint64_t n, const Functional& pf2) {
  if (f.kind() != FunctionalKind::triangle) {
    throw Error(ErrorCode::invalid_argument, "martingale path needs a triangle functional");
  }
  if (pf2.kind() != FunctionalKind::single) throw Error(ErrorCode::invalid_argument, "Pf^2 must be a single functional");
  require_prefix(pop, f, pi, n);
  MartingalePath path;
  path.increments.resize(n);
  path.partial_sums.assign(n + 1, 0.0);
  path.bracket.assign(n + 1, 0.0);
  stats::CompensatedSum m, b;
  for (std::uint64_t k = 1; k <= n; ++k) {
    const tree::NodeId node = pi.image()[k - 1];
    const double inc = evaluate_at(pop, f, node);
    const double var = pf2(pop.values[node - 1]);
    if (var < 0.0) throw Error(ErrorCode::invalid_argument, "Pf^2 must be nonnegative");
    path.increments[k - 1] = inc;
    m += inc;
    b += var;
    path.partial_sums[k] = m.value();
    path.bracket[k] = b.value();
  }
  return path;
}

}  // namespace bmc
