#include "bmc/tree.hpp"

#include <bit>
#include <string>
#include <utility>

#include "bmc/error.hpp"

namespace bmc::tree {

namespace {

void require_node(NodeId n) {
  if (n < 1) throw Error(ErrorCode::invalid_node, "node id must be >= 1, got " + std::to_string(n));
}

void require_depth(int r) {
  if (r < 0 || r > kMaxIndexableDepth) {
    throw Error(ErrorCode::invalid_argument, "depth out of range: " + std::to_string(r));
  }
}

}  // namespace

int generation(NodeId n) {
  require_node(n);
  return std::bit_width(n) - 1;
}

NodeId parent(NodeId n) {
  require_node(n);
  if (n == 1) throw Error(ErrorCode::invalid_node, "the root has no parent");
  return n / 2;
}

Layer layer(int r) {
  require_depth(r);
  const NodeId first = NodeId{1} << r;
  return {first, 2 * first - 1};
}

std::uint64_t generation_size(int r) {
  require_depth(r);
  return std::uint64_t{1} << r;
}

std::uint64_t subtree_size(int r) {
  require_depth(r);
  return (std::uint64_t{1} << (r + 1)) - 1;
}

Triangle triangle_indices(NodeId i) {
  require_node(i);
  return {i, 2 * i, 2 * i + 1};
}

GenerationPermutation::GenerationPermutation(int depth) : depth_(depth) {
  require_depth(depth);
  image_.resize(subtree_size(depth));
  for (std::uint64_t k = 0; k < image_.size(); ++k) image_[k] = k + 1;
}

NodeId GenerationPermutation::operator()(NodeId i) const {
  require_node(i);
  if (i > image_.size()) {
    throw Error(ErrorCode::invalid_node,
                "node " + std::to_string(i) + " outside T_" + std::to_string(depth_));
  }
  return image_[i - 1];
}

GenerationPermutation GenerationPermutation::inverse() const {
  GenerationPermutation inv(depth_);
  for (std::uint64_t k = 0; k < image_.size(); ++k) inv.image_[image_[k] - 1] = k + 1;
  return inv;
}

GenerationPermutation sample_permutation(int depth, RandomStream& rng) {
  GenerationPermutation pi(depth);
  auto& image = pi.image();
  for (int q = 1; q <= depth; ++q) {
    const Layer g = layer(q);
    // Fisher-Yates on slots [first-1, last-1].
    for (std::uint64_t k = g.size() - 1; k > 0; --k) {
      const std::uint64_t j = rng.below(k + 1);
      std::swap(image[g.first - 1 + k], image[g.first - 1 + j]);
    }
  }
  return pi;
}

}  // namespace bmc::tree
