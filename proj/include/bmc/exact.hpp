#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bmc/kernels.hpp"

// Exact computations for finite-state bifurcating chains, plus closed-form
// evaluators for the moment and deviation bounds.
namespace bmc::exact {

// mu with mu Q = mu. Throws ErrorCode::not_ergodic when Q is not primitive
// (some power up to m^2 strictly positive).
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& q);

enum class ErgodicityMode { h1_geometric, h2_uniform };

struct ErgodicityEstimate {
  double alpha = 0.0;
  double c = 0.0;
  int horizon = 0;
  ErgodicityMode mode = ErgodicityMode::h2_uniform;
};

// alpha is the second-largest eigenvalue modulus of Q, found by power
// iteration on the mu-centered subspace and clamped below at kAlphaFloor;
// c = max_{r <= horizon, x} |Q^r f(x)| / alpha^r. The certificate
// |Q^r f(x)| <= c alpha^r is re-checked before returning.
ErgodicityEstimate ergodicity_constants(const Eigen::MatrixXd& q, const Eigen::VectorXd& f, int horizon);

// E[(M_{G_r}(f))^2] through
//   sum_{p=0}^{r} 2^{-p-1{p<r}} nu Q^p P(Q^{r-p-1} f (x) Q^{r-p-1} f),
// with the p = r term read as nu Q^r f^2. f must be centered under the
// stationary law of Q.
double second_moment_generation(const FiniteKernel& kernel, const Eigen::VectorXd& f, int r);

enum class Scope { generation, tree, permuted };

// E[M_scope(f)] by contraction: sum over generations of (weight) nu Q^q f.
// index is r for generation/tree scopes and n for the permuted scope.
double first_moment(const FiniteKernel& kernel, const Eigen::VectorXd& f, Scope scope, std::uint64_t index);

// Largest number of tree configurations brute_force_moment will visit.
inline constexpr double kEnumerationLimit = 1e7;

// E[(M_scope(f))^order] by enumerating every configuration of the tree
// (weighted by nu and the kernel tensor) and, for the permuted scope, every
// subset of the last generation the permutation can select.
double brute_force_moment(const FiniteKernel& kernel, const Eigen::VectorXd& f, int order, Scope scope,
                          std::uint64_t index);

// Ancestor coincidence patterns of four independent uniform indices of G_r,
// read at generation p.
//   E0: four distinct ancestors  E1: exactly one pair  E2: two pairs
//   E3: exactly three equal      E4: all four equal
struct EventComparison {
  std::string label;
  double enumeration;
  double formula;
};

struct AncestorEvents {
  int r = 0;
  int p = 0;
  std::uint64_t total = 0;                 // 2^{4r}
  std::array<std::uint64_t, 5> counts{};   // E0..E4 at generation p
  std::array<double, 5> probability{};
  double e0_generation2 = 0.0;             // P(E0^2)
  double e1_then_e0_next = 0.0;            // P(E1^p and E0^{p+1}); E0^{r+1} is certain
  double e2_then_e0_next = 0.0;            // P(E2^p and E0^{p+1})
  std::vector<EventComparison> comparisons;
};

inline constexpr int kMaxEventDepth = 4;

AncestorEvents ancestor_event_probabilities(int r, int p);

enum class BoundFamily { moment2, moment4, probaineq, expoineq, estimator_dev_gaussian, estimator_dev_bounded };

struct BoundSpec {
  BoundFamily family = BoundFamily::moment4;
  Scope scope = Scope::generation;
  double alpha = 0.5;
  double c = 1.0;
  double c_prime = 1.0;
  double c_dprime = 1.0;
  double delta = 1.0;
};

inline constexpr double kRegimeTolerance = 1e-12;

// Value of the bound at index r (generation, tree) or n (permuted). The
// regime follows alpha^2 against 1/2, and for the exponential families also
// alpha against 1/2 and sqrt(2)/2; values within kRegimeTolerance of a
// boundary use the boundary branch.
double evaluate_bound(const BoundSpec& spec, std::uint64_t index);
std::string regime_label(const BoundSpec& spec);

BoundFamily parse_bound_family(const std::string& name);
Scope parse_scope(const std::string& name);
std::string to_string(BoundFamily family);
std::string to_string(Scope scope);

enum class SpeedSetting { hh2, h1 };

struct SpeedCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

// b_n = n^gamma together with numerical checks of the speed assumption over
// the dyadic grid n = 2^1 .. 2^horizon_log2.
struct SpeedSequence {
  double gamma = 0.0;
  SpeedSetting setting = SpeedSetting::hh2;
  double alpha = 0.0;
  std::vector<SpeedCheck> checks;

  double operator()(double n) const;
  bool valid() const;
};

SpeedSequence speed_sequence(double gamma, SpeedSetting setting, double alpha = 0.5, int horizon_log2 = 20);

}  // namespace bmc::exact
