#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>
#include <utility>

namespace bmc {

// splitmix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Deterministic seed for a derivation path (root seed, then e.g. experiment id,
// replication index, node id). Distinct paths give unrelated seeds.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) noexcept;

// FNV-1a hash, used to turn experiment names into path components.
std::uint64_t tag_hash(std::string_view tag) noexcept;

// Small splitmix64 stream. Satisfies UniformRandomBitGenerator, but the
// distributions below are implemented here so that every draw is bit-identical
// across standard library implementations.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  // Uniform integer in [0, bound), unbiased. bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;
  // Two independent standard normals (Box-Muller).
  std::pair<double, double> normal_pair() noexcept;
  double normal() noexcept { return normal_pair().first; }
  bool coin() noexcept { return (operator()() >> 63) != 0; }

 private:
  std::uint64_t state_;
};

// Stream for one node of one replication: the draw at node `node` is a pure
// function of (replication_key, node).
inline RandomStream node_stream(std::uint64_t replication_key, std::uint64_t node) noexcept {
  return RandomStream(derive_seed(replication_key, {node}));
}

}  // namespace bmc
