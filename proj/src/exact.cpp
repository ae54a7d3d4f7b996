#include "bmc/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "bmc/error.hpp"
#include "bmc/stats.hpp"
#include "bmc/tree.hpp"

namespace bmc::exact {

namespace {

void require_stochastic(const Eigen::MatrixXd& q) {
  if (q.rows() == 0 || q.rows() != q.cols()) throw Error(ErrorCode::invalid_argument, "Q must be a nonempty square matrix");
  for (Eigen::Index x = 0; x < q.rows(); ++x) {
    if ((q.row(x).array() < 0.0).any()) throw Error(ErrorCode::invalid_argument, "Q has a negative entry");
    if (std::abs(q.row(x).sum() - 1.0) > 1e-12) {
      throw Error(ErrorCode::invalid_argument, "row " + std::to_string(x) + " of Q does not sum to 1");
    }
  }
}

bool primitive(const Eigen::MatrixXd& q) {
  const Eigen::Index m = q.rows();
  using Pattern = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
  const Pattern step = (q.array() > 0.0).cast<int>();
  Pattern reach = step;
  for (Eigen::Index k = 1; k <= m * m; ++k) {
    if ((reach.array() > 0).all()) return true;
    reach = ((reach * step).array() > 0).cast<int>();
  }
  return (reach.array() > 0).all();
}

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// P(g (x) h)(x) = sum_{y,z} p[x][y][z] g(y) h(z).
Eigen::VectorXd apply_P_product(const FiniteKernel& kernel, const Eigen::VectorXd& g, const Eigen::VectorXd& h) {
  const std::size_t m = kernel.states();
  Eigen::VectorXd out(static_cast<Eigen::Index>(m));
  for (std::size_t x = 0; x < m; ++x) {
    stats::CompensatedSum s;
    for (std::size_t y = 0; y < m; ++y) {
      for (std::size_t z = 0; z < m; ++z) s += kernel(x, y, z) * g[y] * h[z];
    }
    out[x] = s.value();
  }
  return out;
}

Eigen::RowVectorXd nu_row(const FiniteKernel& kernel) {
  const auto& nu = kernel.nu();
  return Eigen::Map<const Eigen::RowVectorXd>(nu.data(), static_cast<Eigen::Index>(nu.size()));
}

void require_centered(const FiniteKernel& kernel, const Eigen::VectorXd& f) {
  if (static_cast<std::size_t>(f.size()) != kernel.states()) {
    throw Error(ErrorCode::invalid_argument, "functional has " + std::to_string(f.size()) + " values for " +
                                                 std::to_string(kernel.states()) + " states");
  }
  const Eigen::VectorXd mu = stationary_distribution(mean_kernel(kernel));
  const double mean = mu.dot(f);
  if (std::abs(mean) > 1e-10 * std::max(1.0, max_abs(f))) {
    std::ostringstream msg;
    msg << "functional is not centered: (mu, f) = " << mean;
    throw Error(ErrorCode::invalid_argument, msg.str());
  }
}

int floor_log2(std::uint64_t n) { return std::bit_width(n) - 1; }

}  // namespace

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& q) {
  require_stochastic(q);
  if (!primitive(q)) throw Error(ErrorCode::not_ergodic, "Q is reducible or periodic");
  const Eigen::Index m = q.rows();
  // (Q^T - I) mu = 0 with the last equation replaced by sum(mu) = 1.
  Eigen::MatrixXd a = q.transpose() - Eigen::MatrixXd::Identity(m, m);
  a.row(m - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b[m - 1] = 1.0;
  Eigen::VectorXd mu = a.fullPivLu().solve(b);
  mu = mu.cwiseMax(0.0);
  mu /= mu.sum();
  const double residual = (q.transpose() * mu - mu).cwiseAbs().maxCoeff();
  if (residual > 1e-12) {
    std::ostringstream msg;
    msg << "stationary solve residual " << residual << " exceeds 1e-12";
    throw Error(ErrorCode::not_ergodic, msg.str());
  }
  return mu;
}

ErgodicityEstimate ergodicity_constants(const Eigen::MatrixXd& q, const Eigen::VectorXd& f, int horizon) {
  if (horizon < 0) throw Error(ErrorCode::invalid_argument, "horizon must be >= 0");
  const Eigen::VectorXd mu = stationary_distribution(q);
  const Eigen::Index m = q.rows();
  if (f.size() != m) throw Error(ErrorCode::invalid_argument, "functional size does not match Q");
  const double scale = max_abs(f);
  if (std::abs(mu.dot(f)) > 1e-10 * std::max(1.0, scale)) {
    throw Error(ErrorCode::invalid_argument, "functional is not centered under the stationary law");
  }

  // Growth rate of Q^k v on the centered subspace {v : (mu, v) = 0}, which Q
  // preserves. Measured after a burn-in so the dominant mode has taken over.
  constexpr int burn_in = 200;
  constexpr int window = 400;
  double alpha = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(m, j);
    v.array() -= mu.dot(v);
    if (v.norm() == 0.0) continue;
    v.normalize();
    double log_growth = 0.0;
    bool collapsed = false;
    for (int k = 0; k < burn_in + window; ++k) {
      v = q * v;
      v.array() -= mu.dot(v);  // keep round-off from leaking into the unit mode
      const double norm = v.norm();
      if (norm < 1e-250) {
        collapsed = true;
        break;
      }
      if (k >= burn_in) log_growth += std::log(norm);
      v /= norm;
    }
    if (!collapsed) alpha = std::max(alpha, std::exp(log_growth / window));
  }
  alpha = std::max(alpha, kAlphaFloor);
  if (alpha >= 1.0 - 1e-9) {
    throw Error(ErrorCode::not_ergodic, "second eigenvalue modulus is 1 within tolerance");
  }

  const double negligible = 1e-13 * scale;
  std::vector<Eigen::VectorXd> iterates;
  iterates.reserve(static_cast<std::size_t>(horizon) + 1);
  Eigen::VectorXd qf = f;
  double c = 0.0;
  for (int r = 0; r <= horizon; ++r) {
    if (r > 0) qf = q * qf;
    iterates.push_back(qf);
    const double power = std::pow(alpha, r);
    for (Eigen::Index x = 0; x < m; ++x) {
      const double value = std::abs(qf[x]);
      if (value <= negligible) continue;
      c = std::max(c, value / power);
    }
  }
  if (c == 0.0) c = std::max(scale, std::numeric_limits<double>::min());

  for (int r = 0; r <= horizon; ++r) {
    const double bound = c * std::pow(alpha, r) * (1.0 + 1e-12) + negligible;
    if (max_abs(iterates[static_cast<std::size_t>(r)]) > bound) {
      throw Error(ErrorCode::not_ergodic, "ergodicity certificate fails at r = " + std::to_string(r));
    }
  }
  return {alpha, c, horizon, ErgodicityMode::h2_uniform};
}

double second_moment_generation(const FiniteKernel& kernel, const Eigen::VectorXd& f, int r) {
  if (r < 0) throw Error(ErrorCode::invalid_argument, "r must be >= 0");
  require_centered(kernel, f);
  const Eigen::MatrixXd q = mean_kernel(kernel);
  const Eigen::RowVectorXd nu = nu_row(kernel);

  // q_powers[k] = Q^k f for k = 0..r.
  std::vector<Eigen::VectorXd> q_powers{f};
  for (int k = 1; k <= r; ++k) q_powers.push_back(q * q_powers.back());

  stats::CompensatedSum total;
  Eigen::RowVectorXd nu_qp = nu;  // nu Q^p
  for (int p = 0; p <= r; ++p) {
    Eigen::VectorXd inner;
    double weight;
    if (p < r) {
      const Eigen::VectorXd& g = q_powers[static_cast<std::size_t>(r - p - 1)];
      inner = apply_P_product(kernel, g, g);
      weight = std::ldexp(1.0, -p - 1);
    } else {
      inner = f.cwiseProduct(f);
      weight = std::ldexp(1.0, -r);
    }
    total += weight * nu_qp.dot(inner);
    nu_qp = nu_qp * q;
  }
  return total.value();
}

double first_moment(const FiniteKernel& kernel, const Eigen::VectorXd& f, Scope scope, std::uint64_t index) {
  if (static_cast<std::size_t>(f.size()) != kernel.states()) {
    throw Error(ErrorCode::invalid_argument, "functional size does not match the kernel");
  }
  const Eigen::MatrixXd q = mean_kernel(kernel);
  int depth;
  if (scope == Scope::permuted) {
    if (index < 1) throw Error(ErrorCode::invalid_argument, "n must be >= 1");
    depth = floor_log2(index);
  } else {
    depth = static_cast<int>(index);
  }
  if (depth > tree::kMaxIndexableDepth) throw Error(ErrorCode::invalid_argument, "index too large");

  // generation_means[q] = nu Q^q f.
  std::vector<double> generation_means;
  Eigen::RowVectorXd row = nu_row(kernel);
  for (int g = 0; g <= depth; ++g) {
    generation_means.push_back(row.dot(f));
    row = row * q;
  }
  switch (scope) {
    case Scope::generation:
      return generation_means.back();
    case Scope::tree: {
      stats::CompensatedSum s;
      for (int g = 0; g <= depth; ++g) s += std::ldexp(generation_means[static_cast<std::size_t>(g)], g);
      return s.value() / static_cast<double>(tree::subtree_size(depth));
    }
    case Scope::permuted: {
      // Every node of the last generation is selected with probability j / 2^depth.
      stats::CompensatedSum s;
      for (int g = 0; g < depth; ++g) s += std::ldexp(generation_means[static_cast<std::size_t>(g)], g);
      const double chosen = static_cast<double>(index - tree::generation_size(depth) + 1);
      s += chosen * generation_means.back();
      return s.value() / static_cast<double>(index);
    }
  }
  return 0.0;
}

namespace {

struct Enumerator {
  const FiniteKernel& kernel;
  const Eigen::VectorXd& f;
  int order;
  int depth;
  Scope scope;
  std::uint64_t n;
  std::vector<std::uint64_t> subsets;  // permuted scope: admissible masks over the last generation
  std::vector<std::size_t> states;     // heap-indexed, slot 0 unused
  stats::CompensatedSum total;

  double statistic() const {
    const std::uint64_t last = tree::subtree_size(depth);
    const std::uint64_t first_leaf = tree::generation_size(depth);
    if (scope == Scope::generation) {
      double s = 0.0;
      for (std::uint64_t i = first_leaf; i <= last; ++i) s += f[static_cast<Eigen::Index>(states[i])];
      return std::pow(s / static_cast<double>(first_leaf), order);
    }
    if (scope == Scope::tree) {
      double s = 0.0;
      for (std::uint64_t i = 1; i <= last; ++i) s += f[static_cast<Eigen::Index>(states[i])];
      return std::pow(s / static_cast<double>(last), order);
    }
    double inner = 0.0;
    for (std::uint64_t i = 1; i < first_leaf; ++i) inner += f[static_cast<Eigen::Index>(states[i])];
    double avg = 0.0;
    for (std::uint64_t mask : subsets) {
      double s = inner;
      for (std::uint64_t b = 0; b < first_leaf; ++b) {
        if ((mask >> b) & 1U) s += f[static_cast<Eigen::Index>(states[first_leaf + b])];
      }
      avg += std::pow(s / static_cast<double>(n), order);
    }
    return avg / static_cast<double>(subsets.size());
  }

  // Assigns the daughters of internal node i (heap order), then recurses.
  void visit(std::uint64_t i, double weight) {
    if (i >= tree::generation_size(depth)) {
      total += weight * statistic();
      return;
    }
    const std::size_t m = kernel.states();
    const std::size_t x = states[i];
    for (std::size_t y = 0; y < m; ++y) {
      for (std::size_t z = 0; z < m; ++z) {
        const double w = weight * kernel(x, y, z);
        if (w == 0.0) continue;
        states[2 * i] = y;
        states[2 * i + 1] = z;
        visit(i + 1, w);
      }
    }
  }
};

}  // namespace

double brute_force_moment(const FiniteKernel& kernel, const Eigen::VectorXd& f, int order, Scope scope,
                          std::uint64_t index) {
  if (order != 1 && order != 2 && order != 4) throw Error(ErrorCode::invalid_argument, "order must be 1, 2 or 4");
  if (static_cast<std::size_t>(f.size()) != kernel.states()) {
    throw Error(ErrorCode::invalid_argument, "functional size does not match the kernel");
  }
  int depth;
  if (scope == Scope::permuted) {
    if (index < 1) throw Error(ErrorCode::invalid_argument, "n must be >= 1");
    depth = floor_log2(index);
  } else {
    depth = static_cast<int>(index);
  }
  if (depth < 0 || depth > 6) throw Error(ErrorCode::resource_guard, "tree too deep for enumeration");
  const double nodes = static_cast<double>(tree::subtree_size(depth));
  const double configurations = std::pow(static_cast<double>(kernel.states()), nodes);
  if (configurations > kEnumerationLimit) {
    std::ostringstream msg;
    msg << "enumeration of " << configurations << " configurations exceeds the limit " << kEnumerationLimit;
    throw Error(ErrorCode::resource_guard, msg.str());
  }

  Enumerator e{kernel, f, order, depth, scope, index, {}, {}, {}};
  if (scope == Scope::permuted) {
    const std::uint64_t leaves = tree::generation_size(depth);
    const std::uint64_t chosen = index - leaves + 1;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << leaves); ++mask) {
      if (static_cast<std::uint64_t>(std::popcount(mask)) == chosen) e.subsets.push_back(mask);
    }
  }
  e.states.assign(tree::subtree_size(depth) + 1, 0);
  const auto& nu = kernel.nu();
  for (std::size_t x = 0; x < kernel.states(); ++x) {
    if (nu[x] == 0.0) continue;
    e.states[1] = x;
    e.visit(1, nu[x]);
  }
  return e.total.value();
}

AncestorEvents ancestor_event_probabilities(int r, int p) {
  if (r > kMaxEventDepth) {
    throw Error(ErrorCode::resource_guard, "ancestor enumeration limited to r <= " + std::to_string(kMaxEventDepth));
  }
  if (p < 2 || p > r) throw Error(ErrorCode::invalid_argument, "need 2 <= p <= r");

  // Pattern of four ancestors: 0 all distinct, 1 one pair, 2 two pairs,
  // 3 three equal, 4 all equal.
  const auto pattern = [](std::array<std::uint64_t, 4> a) {
    std::sort(a.begin(), a.end());
    int equal_runs[4] = {1, 0, 0, 0};
    int run = 0;
    for (int k = 1; k < 4; ++k) {
      if (a[k] == a[k - 1]) {
        ++equal_runs[run];
      } else {
        equal_runs[++run] = 1;
      }
    }
    int largest = 0, pairs = 0;
    for (int k = 0; k <= run; ++k) {
      largest = std::max(largest, equal_runs[k]);
      if (equal_runs[k] == 2) ++pairs;
    }
    if (largest == 4) return 4;
    if (largest == 3) return 3;
    if (pairs == 2) return 2;
    if (pairs == 1) return 1;
    return 0;
  };

  AncestorEvents out;
  out.r = r;
  out.p = p;
  const std::uint64_t width = tree::generation_size(r);
  std::uint64_t e0_level2 = 0, e1_next = 0, e2_next = 0;
  for (std::uint64_t a = 0; a < width; ++a) {
    for (std::uint64_t b = 0; b < width; ++b) {
      for (std::uint64_t c = 0; c < width; ++c) {
        for (std::uint64_t d = 0; d < width; ++d) {
          ++out.total;
          const auto at = [&](int level) {
            const int shift = r - level;
            return std::array<std::uint64_t, 4>{a >> shift, b >> shift, c >> shift, d >> shift};
          };
          const int here = pattern(at(p));
          ++out.counts[static_cast<std::size_t>(here)];
          if (pattern(at(2)) == 0) ++e0_level2;
          const bool distinct_next = p == r ? true : pattern(at(p + 1)) == 0;
          if (distinct_next && here == 1) ++e1_next;
          if (distinct_next && here == 2) ++e2_next;
        }
      }
    }
  }
  const double total = static_cast<double>(out.total);
  for (std::size_t k = 0; k < 5; ++k) out.probability[k] = static_cast<double>(out.counts[k]) / total;
  out.e0_generation2 = static_cast<double>(e0_level2) / total;
  out.e1_then_e0_next = static_cast<double>(e1_next) / total;
  out.e2_then_e0_next = static_cast<double>(e2_next) / total;

  const double two_p = std::ldexp(1.0, p);
  const double pair_factor = two_p - 1.0;
  out.comparisons = {
      {"P(E0^2)", out.e0_generation2, 3.0 / 32.0},
      {"P(E1^p)", out.probability[1], 3.0 * pair_factor / (two_p * two_p)},
      {"P(E2^p)", out.probability[2], 6.0 * pair_factor / (two_p * two_p * two_p)},
      {"P(E3^p)", out.probability[3], 4.0 * pair_factor / (two_p * two_p * two_p)},
      {"P(E4^p)", out.probability[4], 6.0 / (two_p * two_p * two_p)},
      {"P(E1^p)P(E0^{p+1}|E1^p)", out.e1_then_e0_next, 1.5 * pair_factor / (two_p * two_p)},
      {"P(E2^p)P(E0^{p+1}|E2^p)", out.e2_then_e0_next, 1.5 * pair_factor / (two_p * two_p * two_p)},
  };
  return out;
}

namespace {

enum class SquareRegime { below, boundary, above };

SquareRegime square_regime(double alpha) {
  const double a2 = alpha * alpha;
  if (std::abs(a2 - 0.5) <= kRegimeTolerance) return SquareRegime::boundary;
  return a2 < 0.5 ? SquareRegime::below : SquareRegime::above;
}

// Five-way split on alpha against 1/2 and sqrt(2)/2.
enum class LinearRegime { below_half, half, between, sqrt2_half, above };

LinearRegime linear_regime(double alpha) {
  if (std::abs(alpha * alpha - 0.5) <= kRegimeTolerance) return LinearRegime::sqrt2_half;
  if (std::abs(alpha - 0.5) <= kRegimeTolerance) return LinearRegime::half;
  if (alpha < 0.5) return LinearRegime::below_half;
  if (alpha * alpha < 0.5) return LinearRegime::between;
  return LinearRegime::above;
}

void validate(const BoundSpec& spec) {
  if (!(spec.alpha >= 0.0) || !std::isfinite(spec.alpha)) throw Error(ErrorCode::invalid_argument, "alpha must be >= 0");
  if (!(spec.c > 0.0) || !(spec.c_prime > 0.0) || !(spec.c_dprime > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "bound constants must be positive");
  }
  if (!(spec.delta > 0.0)) throw Error(ErrorCode::invalid_argument, "delta must be positive");
}

}  // namespace

double evaluate_bound(const BoundSpec& spec, std::uint64_t index) {
  validate(spec);
  const double alpha = std::max(spec.alpha, kAlphaFloor);
  // k: the generation count the rate is expressed in; size: number of averaged
  // nodes; poly: the polynomial correction at the boundary.
  double k = 0.0, size = 0.0, poly = 0.0;
  switch (spec.scope) {
    case Scope::generation:
      k = static_cast<double>(index);
      size = std::ldexp(1.0, static_cast<int>(index));
      poly = k;
      break;
    case Scope::tree:
      k = static_cast<double>(index) + 1.0;
      size = static_cast<double>(tree::subtree_size(static_cast<int>(index)));
      poly = static_cast<double>(index);
      break;
    case Scope::permuted: {
      if (index < 1) throw Error(ErrorCode::invalid_argument, "n must be >= 1");
      const int rn = floor_log2(index);
      k = rn + 1.0;
      size = static_cast<double>(index);
      poly = rn;
      break;
    }
  }
  if (spec.scope != Scope::permuted && index > static_cast<std::uint64_t>(tree::kMaxIndexableDepth)) {
    throw Error(ErrorCode::invalid_argument, "r too large");
  }
  const double c = spec.c, cp = spec.c_prime, cpp = spec.c_dprime, d = spec.delta;

  switch (spec.family) {
    case BoundFamily::moment2:
    case BoundFamily::probaineq: {
      const double scale = spec.family == BoundFamily::probaineq ? c / (d * d) : c;
      switch (square_regime(alpha)) {
        case SquareRegime::below: return scale * std::pow(0.5, k);
        case SquareRegime::boundary: return scale * poly * std::pow(0.5, k);
        case SquareRegime::above: return scale * std::pow(alpha, 2.0 * k);
      }
      break;
    }
    case BoundFamily::moment4:
      switch (square_regime(alpha)) {
        case SquareRegime::below: return c * std::pow(0.25, k);
        case SquareRegime::boundary: return c * poly * poly * std::pow(0.25, k);
        case SquareRegime::above: return c * std::pow(alpha, 4.0 * k);
      }
      break;
    case BoundFamily::expoineq:
      if (spec.scope == Scope::generation) {
        switch (square_regime(alpha)) {
          case SquareRegime::below: return std::exp(-cp * d * d * size);
          case SquareRegime::boundary: return std::exp(-cp * size / std::max(poly, 1.0));
          case SquareRegime::above: return std::exp(-cp * d * d * std::pow(alpha, -2.0 * k));
        }
      }
      switch (linear_regime(alpha)) {
        case LinearRegime::below_half: return cpp * std::exp(-cp * d * d * size);
        case LinearRegime::half: return std::exp(-cp * d * d * size) * std::exp(2.0 * cp * d * k);
        case LinearRegime::between: return 2.0 * std::exp(-cp * d * d * size);
        case LinearRegime::sqrt2_half: return std::exp(-cp * d * d * size / k);
        case LinearRegime::above: return std::exp(-cp * d * d * std::pow(alpha, -2.0 * k));
      }
      break;
    case BoundFamily::estimator_dev_gaussian: {
      // Always expressed on T_r.
      const double kr = static_cast<double>(index) + 1.0;
      const double rr = static_cast<double>(index);
      switch (square_regime(alpha)) {
        case SquareRegime::below: return c * std::pow(0.25, kr);
        case SquareRegime::boundary: return c * rr * rr * std::pow(0.25, kr);
        case SquareRegime::above: return c * std::pow(alpha, 4.0 * kr);
      }
      break;
    }
    case BoundFamily::estimator_dev_bounded: {
      const double kr = static_cast<double>(index) + 1.0;
      const double t = static_cast<double>(tree::subtree_size(static_cast<int>(index)));
      switch (linear_regime(alpha)) {
        case LinearRegime::below_half: return cpp * std::exp(-cp * t);
        case LinearRegime::half: return cpp * std::exp(-cp * t) * std::exp(2.0 * cp * d * kr);
        // The estimator bound leaves 1/2 < alpha < sqrt(2)/2 open; the
        // alpha < 1/2 rate is used there.
        case LinearRegime::between: return cpp * std::exp(-cp * t);
        case LinearRegime::sqrt2_half: return cpp * std::exp(-cp * t / kr);
        case LinearRegime::above: return cpp * std::exp(-cp * std::pow(alpha, -2.0 * kr));
      }
      break;
    }
  }
  return 0.0;
}

std::string regime_label(const BoundSpec& spec) {
  const double alpha = std::max(spec.alpha, kAlphaFloor);
  const bool linear = spec.family == BoundFamily::estimator_dev_bounded ||
                      (spec.family == BoundFamily::expoineq && spec.scope != Scope::generation);
  if (linear) {
    switch (linear_regime(alpha)) {
      case LinearRegime::below_half: return "alpha<1/2";
      case LinearRegime::half: return "alpha=1/2";
      case LinearRegime::between: return "1/2<alpha<sqrt2/2";
      case LinearRegime::sqrt2_half: return "alpha=sqrt2/2";
      case LinearRegime::above: return "alpha>sqrt2/2";
    }
  }
  switch (square_regime(alpha)) {
    case SquareRegime::below: return "alpha^2<1/2";
    case SquareRegime::boundary: return "alpha^2=1/2";
    case SquareRegime::above: return "alpha^2>1/2";
  }
  return "";
}

BoundFamily parse_bound_family(const std::string& name) {
  if (name == "moment2") return BoundFamily::moment2;
  if (name == "moment4") return BoundFamily::moment4;
  if (name == "probaineq") return BoundFamily::probaineq;
  if (name == "expoineq") return BoundFamily::expoineq;
  if (name == "estimator-dev-gaussian") return BoundFamily::estimator_dev_gaussian;
  if (name == "estimator-dev-bounded") return BoundFamily::estimator_dev_bounded;
  throw Error(ErrorCode::config, "unknown bound family '" + name + "'");
}

Scope parse_scope(const std::string& name) {
  if (name == "generation") return Scope::generation;
  if (name == "tree") return Scope::tree;
  if (name == "permuted" || name == "permuted-n") return Scope::permuted;
  throw Error(ErrorCode::config, "unknown scope '" + name + "'");
}

std::string to_string(BoundFamily family) {
  switch (family) {
    case BoundFamily::moment2: return "moment2";
    case BoundFamily::moment4: return "moment4";
    case BoundFamily::probaineq: return "probaineq";
    case BoundFamily::expoineq: return "expoineq";
    case BoundFamily::estimator_dev_gaussian: return "estimator-dev-gaussian";
    case BoundFamily::estimator_dev_bounded: return "estimator-dev-bounded";
  }
  return "";
}

std::string to_string(Scope scope) {
  switch (scope) {
    case Scope::generation: return "generation";
    case Scope::tree: return "tree";
    case Scope::permuted: return "permuted";
  }
  return "";
}

double SpeedSequence::operator()(double n) const { return std::pow(n, gamma); }

bool SpeedSequence::valid() const {
  return std::all_of(checks.begin(), checks.end(), [](const SpeedCheck& c) { return c.passed; });
}

namespace {

// Checks that ratio(n) moves monotonically in the wanted direction over the
// tail of the dyadic grid (its second half).
SpeedCheck monotone_tail(const std::string& name, int horizon_log2, bool increasing,
                         const std::function<double(double)>& ratio) {
  const int start = std::max(1, horizon_log2 / 2);
  bool ok = true;
  double prev = ratio(std::ldexp(1.0, start));
  const double first = prev;
  for (int k = start + 1; k <= horizon_log2; ++k) {
    const double cur = ratio(std::ldexp(1.0, k));
    if (increasing ? !(cur > prev) : !(cur < prev)) ok = false;
    prev = cur;
  }
  std::ostringstream detail;
  detail << "ratio " << first << " at n=2^" << start << " -> " << prev << " at n=2^" << horizon_log2;
  return {name, ok, detail.str()};
}

}  // namespace

SpeedSequence speed_sequence(double gamma, SpeedSetting setting, double alpha, int horizon_log2) {
  if (!(gamma > 0.5 && gamma < 1.0)) throw Error(ErrorCode::invalid_argument, "gamma must lie in (1/2, 1)");
  if (horizon_log2 < 4 || horizon_log2 > tree::kMaxIndexableDepth) {
    throw Error(ErrorCode::invalid_argument, "horizon must be between 2^4 and 2^60");
  }
  SpeedSequence seq;
  seq.gamma = gamma;
  seq.setting = setting;
  seq.alpha = alpha;
  const auto b = [gamma](double n) { return std::pow(n, gamma); };
  seq.checks.push_back(
      monotone_tail("b_n/sqrt(n) -> inf", horizon_log2, true, [&](double n) { return b(n) / std::sqrt(n); }));
  if (setting == SpeedSetting::hh2) {
    seq.checks.push_back(monotone_tail("b_n/sqrt(n log n) -> 0", horizon_log2, false,
                                       [&](double n) { return b(n) / std::sqrt(n * std::log(n)); }));
    return seq;
  }
  const double a = std::max(alpha, kAlphaFloor);
  switch (square_regime(a)) {
    case SquareRegime::below:
      seq.checks.push_back(monotone_tail("b_n/n -> 0", horizon_log2, false, [&](double n) { return b(n) / n; }));
      break;
    case SquareRegime::boundary:
      seq.checks.push_back(monotone_tail("b_n log n/n -> 0", horizon_log2, false,
                                         [&](double n) { return b(n) * std::log(n) / n; }));
      break;
    case SquareRegime::above:
      seq.checks.push_back(monotone_tail("b_n alpha^(r_n+1)/sqrt(n) -> 0", horizon_log2, false, [&](double n) {
        const int rn = floor_log2(static_cast<std::uint64_t>(n));
        return b(n) * std::pow(a, rn + 1) / std::sqrt(n);
      }));
      break;
  }
  return seq;
}

}  // namespace bmc::exact
