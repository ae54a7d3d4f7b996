#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bmc/rng.hpp"

namespace bmc {

// ---------------------------------------------------------------------------
// Functionals
// ---------------------------------------------------------------------------

enum class FunctionalKind { single, triangle };

// A test function on S (single) or on mother-daughter triangles S^3. Finite
// state functionals also carry their exact table, indexed x (single) or
// (x*m + y)*m + z (triangle).
class Functional {
 public:
  using SingleFn = std::function<double(double)>;
  using TriangleFn = std::function<double(double, double, double)>;

  static Functional single(SingleFn fn);
  static Functional triangle(TriangleFn fn);
  static Functional single_table(std::vector<double> values);
  static Functional triangle_table(std::size_t states, std::vector<double> values);
  static Functional constant(double c, FunctionalKind kind);

  FunctionalKind kind() const { return kind_; }
  bool has_table() const { return !table_.empty(); }
  const std::vector<double>& table() const { return table_; }
  // Number of states of a tabulated functional (0 otherwise).
  std::size_t states() const { return states_; }

  double operator()(double x) const;
  double operator()(double x, double y, double z) const;

  // Pointwise a*f + b*g for two functionals of the same kind.
  static Functional linear_combination(double a, const Functional& f, double b, const Functional& g);
  // Pointwise f^power.
  Functional pow(int power) const;

 private:
  FunctionalKind kind_ = FunctionalKind::single;
  SingleFn single_;
  TriangleFn triangle_;
  std::vector<double> table_;
  std::size_t states_ = 0;
};

// ---------------------------------------------------------------------------
// BAR(1) kernel
// ---------------------------------------------------------------------------

enum class NoiseFamily { gaussian, truncated_gaussian, uniform_box };

struct NoiseLaw {
  NoiseFamily family = NoiseFamily::gaussian;
  // Truncation bound B (truncated_gaussian) or half-width h (uniform_box).
  double bound = 0.0;
};

struct InitialLaw {
  enum class Kind { point_mass, gaussian };
  Kind kind = Kind::point_mass;
  double location = 0.0;
  double variance = 0.0;

  static InitialLaw point(double x0) { return {Kind::point_mass, x0, 0.0}; }
  static InitialLaw normal(double mean, double variance) { return {Kind::gaussian, mean, variance}; }
};

// Parameters of X_{2n} = a0 X_n + b0 + e_{2n}, X_{2n+1} = a1 X_n + b1 + e_{2n+1}
// with noise covariance sigma2 * [[1, rho], [rho, 1]].
//
// sigma2 = 0 is accepted as the noise-free limit. For the compact noise
// families sigma2/rho are targets before truncation; use
// effective_noise_moments() for the moments actually produced.
struct BarParams {
  double alpha0 = 0.0;
  double beta0 = 0.0;
  double alpha1 = 0.0;
  double beta1 = 0.0;
  double sigma2 = 1.0;
  double rho = 0.0;
  NoiseLaw noise;
  InitialLaw initial;

  void validate() const;
  // max(|alpha0|, |alpha1|).
  double alpha() const;
  // alpha() clamped away from zero for the bound evaluators.
  double bound_alpha() const;
  // (alpha0, beta0, alpha1, beta1).
  std::array<double, 4> theta() const { return {alpha0, beta0, alpha1, beta1}; }
};

inline constexpr double kAlphaFloor = 1e-9;

struct NoiseMoments {
  double sigma2;
  double rho;
};

NoiseMoments effective_noise_moments(const BarParams& params);

// Draws the noise pair (e0, e1).
std::pair<double, double> sample_noise(const BarParams& params, RandomStream& rng);
// Draws both daughters of a mother with value x.
std::pair<double, double> bar_sample(const BarParams& params, double x, RandomStream& rng);
double sample_initial(const InitialLaw& law, RandomStream& rng);

// Q for a BAR kernel: one step of the random-lineage chain, picking daughter 0
// or 1 with a fair coin.
double bar_lineage_step(const BarParams& params, double y, RandomStream& rng);

// Closed-form conditional expectations under the BAR kernel.
enum class BarMoment { y, z, xy, xz, residual0, residual1, residual0_sq, residual1_sq, residual0_residual1 };

BarMoment parse_bar_moment(std::string_view name);
std::string_view to_string(BarMoment m);

// c0 + c1 x + c2 x^2.
struct Quadratic {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double operator()(double x) const { return c0 + x * (c1 + x * c2); }
  Functional as_functional() const;
};

// P f for the named triangle functional f, as a polynomial in the mother value.
Quadratic bar_conditional_moment(const BarParams& params, BarMoment f);
// The triangle functional itself, (x, y, z) -> f.
Functional bar_triangle_functional(const BarParams& params, BarMoment f);

// ---------------------------------------------------------------------------
// Finite-state kernel
// ---------------------------------------------------------------------------

class FiniteKernel {
 public:
  // p is the m*m*m tensor p[x][y][z] flattened as (x*m + y)*m + z.
  FiniteKernel(std::size_t states, std::vector<double> p, std::vector<double> nu);

  std::size_t states() const { return m_; }
  double operator()(std::size_t x, std::size_t y, std::size_t z) const { return p_[(x * m_ + y) * m_ + z]; }
  const std::vector<double>& tensor() const { return p_; }
  const std::vector<double>& nu() const { return nu_; }

  Eigen::MatrixXd daughter0_marginal() const;
  Eigen::MatrixXd daughter1_marginal() const;

  std::pair<std::size_t, std::size_t> sample(std::size_t x, RandomStream& rng) const;
  std::size_t sample_initial(RandomStream& rng) const;

 private:
  std::size_t m_;
  std::vector<double> p_;
  std::vector<double> nu_;
  std::vector<double> cumulative_;     // per mother state, over the m*m cells
  std::vector<double> nu_cumulative_;
};

// Text format: m, then m blocks of m rows of m reals (the slices p[x]), then
// one row with nu. Whitespace separated.
FiniteKernel read_finite_kernel(std::istream& in);
FiniteKernel load_finite_kernel(const std::filesystem::path& path);
void write_finite_kernel(std::ostream& out, const FiniteKernel& kernel);

// Q = (P0 + P1) / 2.
Eigen::MatrixXd mean_kernel(const FiniteKernel& kernel);
// One step of the random-lineage chain for a finite kernel.
std::size_t finite_lineage_step(const FiniteKernel& kernel, std::size_t y, RandomStream& rng);

// (Pf)(x) = sum_{y,z} f(x,y,z) p[x][y][z] for a tabulated triangle functional.
Functional apply_P(const FiniteKernel& kernel, const Functional& f);
// Q^k f for a tabulated single functional.
Functional apply_Q_power(const FiniteKernel& kernel, const Functional& f, int k);

// Triangle functional g(y) + g(z) - (P0 g + P1 g)(x); P of it vanishes.
Functional daughter_innovation(const FiniteKernel& kernel, std::span<const double> g);

Eigen::VectorXd to_vector(const Functional& f);

// Kernel with every row of p[x] and nu drawn uniformly from the simplex
// (flat Dirichlet). Used to build test corpora.
FiniteKernel random_finite_kernel(std::size_t states, RandomStream& rng);

}  // namespace bmc
