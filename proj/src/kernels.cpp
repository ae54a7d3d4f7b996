#include "bmc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "bmc/error.hpp"

namespace bmc {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::invalid_argument, what); }

std::size_t state_index(double x, std::size_t states) {
  const auto idx = static_cast<std::size_t>(x);
  if (x < 0.0 || idx >= states || static_cast<double>(idx) != x) {
    invalid("value " + std::to_string(x) + " is not a state index below " + std::to_string(states));
  }
  return idx;
}

std::size_t sample_cumulative(std::span<const double> cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto idx = static_cast<std::size_t>(it - cumulative.begin());
  // u can exceed the last partial sum by rounding; fall back to the last
  // cell with positive mass.
  if (idx < cumulative.size()) return idx;
  std::size_t last = cumulative.size() - 1;
  while (last > 0 && cumulative[last] == cumulative[last - 1]) --last;
  return last;
}

}  // namespace

// ---------------------------------------------------------------------------
// Functional
// ---------------------------------------------------------------------------

Functional Functional::single(SingleFn fn) {
  Functional f;
  f.kind_ = FunctionalKind::single;
  f.single_ = std::move(fn);
  return f;
}

Functional Functional::triangle(TriangleFn fn) {
  Functional f;
  f.kind_ = FunctionalKind::triangle;
  f.triangle_ = std::move(fn);
  return f;
}

Functional Functional::single_table(std::vector<double> values) {
  if (values.empty()) invalid("empty functional table");
  Functional f;
  f.kind_ = FunctionalKind::single;
  f.states_ = values.size();
  f.table_ = std::move(values);
  return f;
}

Functional Functional::triangle_table(std::size_t states, std::vector<double> values) {
  if (states == 0 || values.size() != states * states * states) {
    invalid("triangle table must have m^3 entries");
  }
  Functional f;
  f.kind_ = FunctionalKind::triangle;
  f.states_ = states;
  f.table_ = std::move(values);
  return f;
}

Functional Functional::constant(double c, FunctionalKind kind) {
  if (kind == FunctionalKind::single) return single([c](double) { return c; });
  return triangle([c](double, double, double) { return c; });
}

double Functional::operator()(double x) const {
  if (kind_ != FunctionalKind::single) invalid("triangle functional evaluated at a single state");
  if (has_table()) return table_[state_index(x, states_)];
  return single_(x);
}

double Functional::operator()(double x, double y, double z) const {
  if (kind_ != FunctionalKind::triangle) invalid("single functional evaluated on a triangle");
  if (has_table()) {
    const std::size_t m = states_;
    return table_[(state_index(x, m) * m + state_index(y, m)) * m + state_index(z, m)];
  }
  return triangle_(x, y, z);
}

Functional Functional::linear_combination(double a, const Functional& f, double b, const Functional& g) {
  if (f.kind() != g.kind()) invalid("linear combination of functionals of different kinds");
  if (f.has_table() && g.has_table()) {
    if (f.states() != g.states() || f.table().size() != g.table().size()) invalid("table size mismatch");
    std::vector<double> out(f.table().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * f.table()[i] + b * g.table()[i];
    return f.kind() == FunctionalKind::single ? single_table(std::move(out))
                                              : triangle_table(f.states(), std::move(out));
  }
  if (f.kind() == FunctionalKind::single) {
    return single([=](double x) { return a * f(x) + b * g(x); });
  }
  return triangle([=](double x, double y, double z) { return a * f(x, y, z) + b * g(x, y, z); });
}

Functional Functional::pow(int power) const {
  if (has_table()) {
    std::vector<double> out(table_);
    for (double& v : out) v = std::pow(v, power);
    return kind_ == FunctionalKind::single ? single_table(std::move(out)) : triangle_table(states_, std::move(out));
  }
  const Functional self = *this;
  if (kind_ == FunctionalKind::single) {
    return single([self, power](double x) { return std::pow(self(x), power); });
  }
  return triangle([self, power](double x, double y, double z) { return std::pow(self(x, y, z), power); });
}

// ---------------------------------------------------------------------------
// BAR kernel
// ---------------------------------------------------------------------------

void BarParams::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(alpha0) || !finite(alpha1) || !finite(beta0) || !finite(beta1) || !finite(sigma2) || !finite(rho)) {
    invalid("BAR parameters must be finite");
  }
  if (std::abs(alpha0) >= 1.0 || std::abs(alpha1) >= 1.0) invalid("BAR slopes must lie in (-1, 1)");
  if (sigma2 < 0.0) invalid("sigma2 must be >= 0");
  if (std::abs(rho) >= 1.0) invalid("rho must lie in (-1, 1)");
  if (noise.family != NoiseFamily::gaussian && !(noise.bound > 0.0)) {
    invalid("compact noise families need a positive bound");
  }
  if (initial.kind == InitialLaw::Kind::gaussian && !(initial.variance >= 0.0)) {
    invalid("initial variance must be >= 0");
  }
}

double BarParams::alpha() const { return std::max(std::abs(alpha0), std::abs(alpha1)); }

double BarParams::bound_alpha() const { return std::max(alpha(), kAlphaFloor); }

namespace {

NoiseMoments truncated_moments(double sigma2, double rho, double bound) {
  // Composite Simpson on [-B, B]^2 of the bivariate normal density.
  constexpr int kIntervals = 400;
  const double h = 2.0 * bound / kIntervals;
  const double det = 1.0 - rho * rho;
  double mass = 0.0, second = 0.0, cross = 0.0;
  for (int i = 0; i <= kIntervals; ++i) {
    const double u = -bound + i * h;
    const double wu = (i == 0 || i == kIntervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    for (int j = 0; j <= kIntervals; ++j) {
      const double v = -bound + j * h;
      const double wv = (j == 0 || j == kIntervals) ? 1.0 : (j % 2 ? 4.0 : 2.0);
      const double q = (u * u - 2.0 * rho * u * v + v * v) / (sigma2 * det);
      const double w = wu * wv * std::exp(-0.5 * q);
      mass += w;
      second += w * u * u;
      cross += w * u * v;
    }
  }
  const double s2 = second / mass;
  return {s2, s2 > 0.0 ? (cross / mass) / s2 : 0.0};
}

}  // namespace

NoiseMoments effective_noise_moments(const BarParams& params) {
  switch (params.noise.family) {
    case NoiseFamily::gaussian:
      return {params.sigma2, params.rho};
    case NoiseFamily::truncated_gaussian:
      if (params.sigma2 == 0.0) return {0.0, params.rho};
      return truncated_moments(params.sigma2, params.rho, params.noise.bound);
    case NoiseFamily::uniform_box:
      // e0 = u0, e1 = rho u0 + sqrt(1 - rho^2) u1 with u iid uniform on [-h, h].
      return {params.noise.bound * params.noise.bound / 3.0, params.rho};
  }
  return {params.sigma2, params.rho};
}

std::pair<double, double> sample_noise(const BarParams& params, RandomStream& rng) {
  const double c = std::sqrt(1.0 - params.rho * params.rho);
  switch (params.noise.family) {
    case NoiseFamily::gaussian: {
      const double s = std::sqrt(params.sigma2);
      const auto [z0, z1] = rng.normal_pair();
      return {s * z0, s * (params.rho * z0 + c * z1)};
    }
    case NoiseFamily::truncated_gaussian: {
      const double s = std::sqrt(params.sigma2);
      const double b = params.noise.bound;
      for (;;) {
        const auto [z0, z1] = rng.normal_pair();
        const double e0 = s * z0;
        const double e1 = s * (params.rho * z0 + c * z1);
        if (std::abs(e0) <= b && std::abs(e1) <= b) return {e0, e1};
      }
    }
    case NoiseFamily::uniform_box: {
      const double h = params.noise.bound;
      const double u0 = h * (2.0 * rng.uniform() - 1.0);
      const double u1 = h * (2.0 * rng.uniform() - 1.0);
      return {u0, params.rho * u0 + c * u1};
    }
  }
  return {0.0, 0.0};
}

std::pair<double, double> bar_sample(const BarParams& params, double x, RandomStream& rng) {
  const auto [e0, e1] = sample_noise(params, rng);
  return {params.alpha0 * x + params.beta0 + e0, params.alpha1 * x + params.beta1 + e1};
}

double sample_initial(const InitialLaw& law, RandomStream& rng) {
  if (law.kind == InitialLaw::Kind::point_mass) return law.location;
  return law.location + std::sqrt(law.variance) * rng.normal();
}

double bar_lineage_step(const BarParams& params, double y, RandomStream& rng) {
  const bool second = rng.coin();
  const auto [d0, d1] = bar_sample(params, y, rng);
  return second ? d1 : d0;
}

BarMoment parse_bar_moment(std::string_view name) {
  static constexpr std::pair<std::string_view, BarMoment> kNames[] = {
      {"y", BarMoment::y},
      {"z", BarMoment::z},
      {"xy", BarMoment::xy},
      {"xz", BarMoment::xz},
      {"residual0", BarMoment::residual0},
      {"residual1", BarMoment::residual1},
      {"residual0_sq", BarMoment::residual0_sq},
      {"residual1_sq", BarMoment::residual1_sq},
      {"residual0_residual1", BarMoment::residual0_residual1},
  };
  for (const auto& [key, value] : kNames) {
    if (key == name) return value;
  }
  invalid("unsupported BAR functional '" + std::string(name) + "'");
}

std::string_view to_string(BarMoment m) {
  switch (m) {
    case BarMoment::y: return "y";
    case BarMoment::z: return "z";
    case BarMoment::xy: return "xy";
    case BarMoment::xz: return "xz";
    case BarMoment::residual0: return "residual0";
    case BarMoment::residual1: return "residual1";
    case BarMoment::residual0_sq: return "residual0_sq";
    case BarMoment::residual1_sq: return "residual1_sq";
    case BarMoment::residual0_residual1: return "residual0_residual1";
  }
  return "?";
}

Functional Quadratic::as_functional() const {
  const Quadratic q = *this;
  return Functional::single([q](double x) { return q(x); });
}

Quadratic bar_conditional_moment(const BarParams& params, BarMoment f) {
  const NoiseMoments noise = effective_noise_moments(params);
  switch (f) {
    case BarMoment::y: return {params.beta0, params.alpha0, 0.0};
    case BarMoment::z: return {params.beta1, params.alpha1, 0.0};
    case BarMoment::xy: return {0.0, params.beta0, params.alpha0};
    case BarMoment::xz: return {0.0, params.beta1, params.alpha1};
    case BarMoment::residual0:
    case BarMoment::residual1: return {};
    case BarMoment::residual0_sq:
    case BarMoment::residual1_sq: return {noise.sigma2, 0.0, 0.0};
    case BarMoment::residual0_residual1: return {noise.rho * noise.sigma2, 0.0, 0.0};
  }
  return {};
}

Functional bar_triangle_functional(const BarParams& p, BarMoment f) {
  switch (f) {
    case BarMoment::y: return Functional::triangle([](double, double y, double) { return y; });
    case BarMoment::z: return Functional::triangle([](double, double, double z) { return z; });
    case BarMoment::xy: return Functional::triangle([](double x, double y, double) { return x * y; });
    case BarMoment::xz: return Functional::triangle([](double x, double, double z) { return x * z; });
    case BarMoment::residual0:
      return Functional::triangle([p](double x, double y, double) { return y - p.alpha0 * x - p.beta0; });
    case BarMoment::residual1:
      return Functional::triangle([p](double x, double, double z) { return z - p.alpha1 * x - p.beta1; });
    case BarMoment::residual0_sq:
      return Functional::triangle([p](double x, double y, double) {
        const double e = y - p.alpha0 * x - p.beta0;
        return e * e;
      });
    case BarMoment::residual1_sq:
      return Functional::triangle([p](double x, double, double z) {
        const double e = z - p.alpha1 * x - p.beta1;
        return e * e;
      });
    case BarMoment::residual0_residual1:
      return Functional::triangle([p](double x, double y, double z) {
        return (y - p.alpha0 * x - p.beta0) * (z - p.alpha1 * x - p.beta1);
      });
  }
  invalid("unsupported BAR functional");
}

// ---------------------------------------------------------------------------
// Finite kernel
// ---------------------------------------------------------------------------

FiniteKernel::FiniteKernel(std::size_t states, std::vector<double> p, std::vector<double> nu)
    : m_(states), p_(std::move(p)), nu_(std::move(nu)) {
  if (m_ < 2) invalid("a finite kernel needs at least 2 states");
  if (p_.size() != m_ * m_ * m_) invalid("kernel tensor must have m^3 entries");
  if (nu_.size() != m_) invalid("initial law must have m entries");
  cumulative_.resize(p_.size());
  for (std::size_t x = 0; x < m_; ++x) {
    double total = 0.0;
    for (std::size_t c = 0; c < m_ * m_; ++c) {
      const double v = p_[x * m_ * m_ + c];
      if (!(v >= 0.0) || !std::isfinite(v)) invalid("kernel entries must be finite and nonnegative");
      total += v;
      cumulative_[x * m_ * m_ + c] = total;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      invalid("kernel slice p[" + std::to_string(x) + "] does not sum to 1");
    }
  }
  double total = 0.0;
  nu_cumulative_.resize(m_);
  for (std::size_t x = 0; x < m_; ++x) {
    if (!(nu_[x] >= 0.0) || !std::isfinite(nu_[x])) invalid("initial law entries must be nonnegative");
    total += nu_[x];
    nu_cumulative_[x] = total;
  }
  if (std::abs(total - 1.0) > 1e-12) invalid("initial law does not sum to 1");
}

Eigen::MatrixXd FiniteKernel::daughter0_marginal() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m_, m_);
  for (std::size_t x = 0; x < m_; ++x)
    for (std::size_t y = 0; y < m_; ++y)
      for (std::size_t z = 0; z < m_; ++z) out(x, y) += (*this)(x, y, z);
  return out;
}

Eigen::MatrixXd FiniteKernel::daughter1_marginal() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m_, m_);
  for (std::size_t x = 0; x < m_; ++x)
    for (std::size_t y = 0; y < m_; ++y)
      for (std::size_t z = 0; z < m_; ++z) out(x, z) += (*this)(x, y, z);
  return out;
}

std::pair<std::size_t, std::size_t> FiniteKernel::sample(std::size_t x, RandomStream& rng) const {
  const std::span<const double> row(cumulative_.data() + x * m_ * m_, m_ * m_);
  const std::size_t cell = sample_cumulative(row, rng.uniform());
  return {cell / m_, cell % m_};
}

std::size_t FiniteKernel::sample_initial(RandomStream& rng) const {
  return sample_cumulative(nu_cumulative_, rng.uniform());
}

FiniteKernel read_finite_kernel(std::istream& in) {
  long long m = 0;
  if (!(in >> m) || m < 2) invalid("kernel file: first token must be the number of states (>= 2)");
  const auto states = static_cast<std::size_t>(m);
  std::vector<double> p(states * states * states);
  for (double& v : p) {
    if (!(in >> v)) invalid("kernel file: truncated tensor");
  }
  std::vector<double> nu(states);
  for (double& v : nu) {
    if (!(in >> v)) invalid("kernel file: missing initial law row");
  }
  std::string extra;
  if (in >> extra) invalid("kernel file: trailing content '" + extra + "'");
  return FiniteKernel(states, std::move(p), std::move(nu));
}

FiniteKernel load_finite_kernel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open kernel file " + path.string());
  return read_finite_kernel(in);
}

void write_finite_kernel(std::ostream& out, const FiniteKernel& kernel) {
  const std::size_t m = kernel.states();
  out << m << '\n' << std::setprecision(17);
  for (std::size_t x = 0; x < m; ++x) {
    for (std::size_t y = 0; y < m; ++y) {
      for (std::size_t z = 0; z < m; ++z) out << (z ? " " : "") << kernel(x, y, z);
      out << '\n';
    }
  }
  for (std::size_t x = 0; x < m; ++x) out << (x ? " " : "") << kernel.nu()[x];
  out << '\n';
}

Eigen::MatrixXd mean_kernel(const FiniteKernel& kernel) {
  return 0.5 * (kernel.daughter0_marginal() + kernel.daughter1_marginal());
}

std::size_t finite_lineage_step(const FiniteKernel& kernel, std::size_t y, RandomStream& rng) {
  const bool second = rng.coin();
  const auto [d0, d1] = kernel.sample(y, rng);
  return second ? d1 : d0;
}

Functional apply_P(const FiniteKernel& kernel, const Functional& f) {
  if (f.kind() != FunctionalKind::triangle) invalid("apply_P needs a triangle functional");
  const std::size_t m = kernel.states();
  std::vector<double> out(m, 0.0);
  for (std::size_t x = 0; x < m; ++x) {
    double acc = 0.0;
    for (std::size_t y = 0; y < m; ++y)
      for (std::size_t z = 0; z < m; ++z) {
        const double w = kernel(x, y, z);
        if (w != 0.0) acc += w * f(double(x), double(y), double(z));
      }
    out[x] = acc;
  }
  return Functional::single_table(std::move(out));
}

Functional apply_Q_power(const FiniteKernel& kernel, const Functional& f, int k) {
  if (k < 0) invalid("apply_Q_power needs k >= 0");
  if (f.kind() != FunctionalKind::single) invalid("apply_Q_power needs a single functional");
  const Eigen::MatrixXd q = mean_kernel(kernel);
  Eigen::VectorXd v(kernel.states());
  for (std::size_t x = 0; x < kernel.states(); ++x) v(x) = f(double(x));
  for (int i = 0; i < k; ++i) v = q * v;
  return Functional::single_table(std::vector<double>(v.data(), v.data() + v.size()));
}

Functional daughter_innovation(const FiniteKernel& kernel, std::span<const double> g) {
  const std::size_t m = kernel.states();
  if (g.size() != m) invalid("innovation base function needs m values");
  const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(m));
  const Eigen::VectorXd drift = kernel.daughter0_marginal() * gv + kernel.daughter1_marginal() * gv;
  std::vector<double> table(m * m * m);
  for (std::size_t x = 0; x < m; ++x)
    for (std::size_t y = 0; y < m; ++y)
      for (std::size_t z = 0; z < m; ++z) table[(x * m + y) * m + z] = g[y] + g[z] - drift(x);
  return Functional::triangle_table(m, std::move(table));
}

Eigen::VectorXd to_vector(const Functional& f) {
  if (!f.has_table() || f.kind() != FunctionalKind::single) invalid("expected a tabulated single functional");
  return Eigen::Map<const Eigen::VectorXd>(f.table().data(), static_cast<Eigen::Index>(f.table().size()));
}

namespace {

std::vector<double> flat_dirichlet(std::size_t size, RandomStream& rng) {
  std::vector<double> w(size);
  double total = 0.0;
  for (double& v : w) {
    v = -std::log(rng.uniform());
    total += v;
  }
  for (double& v : w) v /= total;
  return w;
}

}  // namespace

FiniteKernel random_finite_kernel(std::size_t states, RandomStream& rng) {
  if (states < 1) throw Error(ErrorCode::invalid_argument, "kernel needs at least one state");
  std::vector<double> p;
  p.reserve(states * states * states);
  for (std::size_t x = 0; x < states; ++x) {
    const std::vector<double> row = flat_dirichlet(states * states, rng);
    p.insert(p.end(), row.begin(), row.end());
  }
  return FiniteKernel(states, std::move(p), flat_dirichlet(states, rng));
}

}  // namespace bmc
