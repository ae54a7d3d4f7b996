#pragma once

#include <cstdint>
#include <vector>

#include "bmc/rng.hpp"

// Index arithmetic on the complete binary tree. Nodes are heap-numbered from 1:
// the daughters of n are 2n and 2n+1, generation r holds [2^r, 2^{r+1}).
namespace bmc::tree {

using NodeId = std::uint64_t;

// Deepest tree any routine will index; keeps 2^{r+1} inside 63 bits.
inline constexpr int kMaxIndexableDepth = 60;

int generation(NodeId n);
NodeId parent(NodeId n);
inline NodeId left_child(NodeId n) { return 2 * n; }
inline NodeId right_child(NodeId n) { return 2 * n + 1; }

struct Layer {
  NodeId first;
  NodeId last;  // inclusive
  std::uint64_t size() const { return last - first + 1; }
};

Layer layer(int r);
// |G_r| = 2^r and |T_r| = 2^{r+1} - 1.
std::uint64_t generation_size(int r);
std::uint64_t subtree_size(int r);

struct Triangle {
  NodeId mother;
  NodeId daughter0;
  NodeId daughter1;
};

Triangle triangle_indices(NodeId i);

// A permutation of T_depth that maps each generation onto itself.
class GenerationPermutation {
 public:
  // Identity on T_depth.
  explicit GenerationPermutation(int depth);

  int depth() const { return depth_; }
  std::uint64_t size() const { return image_.size(); }
  NodeId operator()(NodeId i) const;
  GenerationPermutation inverse() const;

  // Raw image table; slot i-1 holds pi(i).
  const std::vector<NodeId>& image() const { return image_; }
  std::vector<NodeId>& image() { return image_; }

 private:
  int depth_;
  std::vector<NodeId> image_;
};

// Independent Fisher-Yates shuffle of every generation, uniform on the set of
// generation-preserving permutations of T_depth.
GenerationPermutation sample_permutation(int depth, RandomStream& rng);

}  // namespace bmc::tree
