#pragma once

#include <vector>

#include "bmc/kernels.hpp"
#include "bmc/simulate.hpp"
#include "bmc/tree.hpp"

namespace bmc {

// f(X_i) for a single functional, f(X_i, X_2i, X_2i+1) for a triangle one.
double evaluate_at(const TreePopulation& pop, const Functional& f, tree::NodeId i);

// Averages over G_r, T_r, and the first n nodes of a generation-preserving
// permutation. Triangle functionals need the population observed one
// generation deeper than the averaging range.
double mean_generation(const TreePopulation& pop, const Functional& f, int r);
double mean_tree(const TreePopulation& pop, const Functional& f, int r);
double mean_permuted(const TreePopulation& pop, const Functional& f, const tree::GenerationPermutation& pi,
                     std::uint64_t n);

// Unnormalized sum over T_r.
double sum_tree(const TreePopulation& pop, const Functional& f, int r);

struct MartingalePath {
  std::vector<double> increments;    // f(Delta_{pi(k)}), k = 1..n
  std::vector<double> partial_sums;  // M_0 = 0, ..., M_n
  std::vector<double> bracket;       // <M>_0 = 0, ..., <M>_n
};

// Permuted martingale M_n = sum_{k<=n} f(Delta_{pi(k)}) and its bracket
// sum_{k<=n} Pf^2(X_{pi(k)}). The caller guarantees Pf = 0 and supplies Pf^2.
MartingalePath martingale_path(const TreePopulation& pop, const Functional& f, const tree::GenerationPermutation& pi,
                               std::uint64_t n, const Functional& pf2);

}  // namespace bmc
