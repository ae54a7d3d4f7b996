#include "bmc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bmc/error.hpp"
#include "bmc/exact.hpp"
#include "bmc/stats.hpp"
#include "bmc/tree.hpp"

namespace bmc::inference {

namespace {

void require_observed(const TreePopulation& pop, int r) {
  if (r < 0) throw Error(ErrorCode::invalid_argument, "r must be >= 0");
  if (pop.depth < r + 1) {
    throw Error(ErrorCode::insufficient_depth, "estimation at r = " + std::to_string(r) +
                                                   " needs the tree observed to generation " + std::to_string(r + 1));
  }
}

double total_nodes(int r) { return static_cast<double>(tree::subtree_size(r)); }

}  // namespace

LeastSquares least_squares(const TreePopulation& pop, int r) {
  require_observed(pop, r);
  const auto& x = pop.values;
  const std::uint64_t last = tree::subtree_size(r);
  const double n = total_nodes(r);

  stats::CompensatedSum sx, s0, s1;
  for (std::uint64_t i = 1; i <= last; ++i) {
    sx += x[i - 1];
    s0 += x[2 * i - 1];
    s1 += x[2 * i];
  }
  const double mx = sx.value() / n, m0 = s0.value() / n, m1 = s1.value() / n;

  // Centered second pass; algebraically the displayed ratio of empirical
  // covariance to empirical variance.
  stats::CompensatedSum sxx, sx0, sx1;
  for (std::uint64_t i = 1; i <= last; ++i) {
    const double dx = x[i - 1] - mx;
    sxx += dx * dx;
    sx0 += dx * (x[2 * i - 1] - m0);
    sx1 += dx * (x[2 * i] - m1);
  }
  LeastSquares out;
  out.r = r;
  out.a_r = mx;
  out.b_r = sxx.value() / n;
  if (out.b_r <= kDesignTolerance) {
    std::ostringstream msg;
    msg << "degenerate design: empirical variance " << out.b_r << " of the mothers on T_" << r;
    throw Error(ErrorCode::degenerate, msg.str());
  }
  const double a0 = sx0.value() / sxx.value();
  const double a1 = sx1.value() / sxx.value();
  out.theta_hat = {a0, m0 - a0 * mx, a1, m1 - a1 * mx};
  return out;
}

double residual_variance(const TreePopulation& pop, const Theta& theta, int r) {
  require_observed(pop, r);
  const auto& x = pop.values;
  const std::uint64_t last = tree::subtree_size(r);
  stats::CompensatedSum s;
  for (std::uint64_t i = 1; i <= last; ++i) {
    const double e0 = x[2 * i - 1] - theta[0] * x[i - 1] - theta[1];
    const double e1 = x[2 * i] - theta[2] * x[i - 1] - theta[3];
    s += e0 * e0 + e1 * e1;
  }
  return s.value() / (2.0 * total_nodes(r));
}

ResidualMoments residual_moments(const TreePopulation& pop, const Theta& theta, int r) {
  ResidualMoments out;
  out.sigma2_hat = residual_variance(pop, theta, r);
  if (out.sigma2_hat <= kVarianceTolerance) {
    std::ostringstream msg;
    msg << "zero residual variance (" << out.sigma2_hat << "); sister correlation undefined";
    throw Error(ErrorCode::degenerate, msg.str());
  }
  const auto& x = pop.values;
  const std::uint64_t last = tree::subtree_size(r);
  stats::CompensatedSum s;
  for (std::uint64_t i = 1; i <= last; ++i) {
    const double e0 = x[2 * i - 1] - theta[0] * x[i - 1] - theta[1];
    const double e1 = x[2 * i] - theta[2] * x[i - 1] - theta[3];
    s += e0 * e1;
  }
  double rho = s.value() / (total_nodes(r) * out.sigma2_hat);
  if (std::abs(rho) > 1.0) {
    if (std::abs(rho) - 1.0 > 1e-9) {
      std::ostringstream msg;
      msg << "sister correlation " << rho << " outside [-1, 1]";
      throw Error(ErrorCode::degenerate, msg.str());
    }
    rho = std::clamp(rho, -1.0, 1.0);
    out.clipped = true;
  }
  out.rho_hat = rho;
  return out;
}

StationaryMoments stationary_moments(const Theta& theta, double sigma2) {
  const double a0 = theta[0], b0 = theta[1], a1 = theta[2], b1 = theta[3];
  if (!(std::abs(a0) < 1.0) || !(std::abs(a1) < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "stationary moments need |alpha0|, |alpha1| < 1");
  }
  if (!(sigma2 >= 0.0)) throw Error(ErrorCode::invalid_argument, "sigma2 must be >= 0");
  StationaryMoments m;
  m.mu1 = 0.5 * (b0 + b1) / (1.0 - 0.5 * (a0 + a1));
  m.mu2 = ((a0 * b0 + a1 * b1) * m.mu1 + 0.5 * (b0 * b0 + b1 * b1) + sigma2) / (1.0 - 0.5 * (a0 * a0 + a1 * a1));
  return m;
}

double chi_square_statistic(int r, const Theta& theta_hat, double sigma2_hat, double mu1_hat, double mu2_hat) {
  if (sigma2_hat <= kVarianceTolerance) throw Error(ErrorCode::degenerate, "chi statistic needs sigma2_hat > 0");
  const double variance = mu2_hat - mu1_hat * mu1_hat;
  if (variance <= kDesignTolerance) throw Error(ErrorCode::degenerate, "chi statistic needs mu2 - mu1^2 > 0");
  const double da = theta_hat[0] - theta_hat[2];
  const double db = theta_hat[1] - theta_hat[3];
  const double shifted = da * mu1_hat + db;
  return total_nodes(r) / (2.0 * sigma2_hat) * (da * da * variance + shifted * shifted);
}

double chi_square_statistic(const EstimatorReport& report) {
  if (!report.theta_hat || !report.sigma2_hat || !report.mu1_hat || !report.mu2_hat) {
    throw Error(ErrorCode::degenerate, "report lacks the estimates the chi statistic needs");
  }
  return chi_square_statistic(report.r, *report.theta_hat, *report.sigma2_hat, *report.mu1_hat, *report.mu2_hat);
}

TestDecision asymmetry_test(double chi, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::invalid_argument, "level must lie in (0, 1)");
  TestDecision d;
  d.level = level;
  d.statistic = chi;
  d.threshold = stats::chi_squared_quantile(2.0, 1.0 - level);
  d.reject = chi > d.threshold;
  return d;
}

EstimatorReport estimate(const TreePopulation& pop, int r) {
  EstimatorReport report;
  report.r = r;
  LeastSquares ls;
  try {
    ls = least_squares(pop, r);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::degenerate) throw;
    report.degenerate = true;
    report.warnings.emplace_back(e.what());
    require_observed(pop, r);
    stats::CompensatedSum s, s2;
    for (std::uint64_t i = 1; i <= tree::subtree_size(r); ++i) {
      s += pop.values[i - 1];
    }
    report.a_r = s.value() / total_nodes(r);
    for (std::uint64_t i = 1; i <= tree::subtree_size(r); ++i) {
      const double d = pop.values[i - 1] - report.a_r;
      s2 += d * d;
    }
    report.b_r = s2.value() / total_nodes(r);
    return report;
  }
  report.theta_hat = ls.theta_hat;
  report.a_r = ls.a_r;
  report.b_r = ls.b_r;

  const double sigma2 = residual_variance(pop, ls.theta_hat, r);
  report.sigma2_hat = sigma2;
  try {
    const ResidualMoments rm = residual_moments(pop, ls.theta_hat, r);
    report.rho_hat = rm.rho_hat;
    if (rm.clipped) report.warnings.emplace_back("rho_hat clipped to [-1, 1]");
  } catch (const Error& e) {
    report.warnings.emplace_back(e.what());
  }
  try {
    const StationaryMoments m = stationary_moments(ls.theta_hat, sigma2);
    report.mu1_hat = m.mu1;
    report.mu2_hat = m.mu2;
  } catch (const Error& e) {
    report.warnings.emplace_back(std::string("stationary moments unavailable: ") + e.what());
  }
  if (report.mu1_hat) {
    try {
      report.chi1 = chi_square_statistic(report);
    } catch (const Error& e) {
      report.warnings.emplace_back(std::string("chi statistic unavailable: ") + e.what());
    }
  }
  return report;
}

AsymptoticCovariance asymptotic_covariance(const Theta& theta, double sigma2, double rho) {
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::degenerate, "asymptotic covariance needs sigma2 > 0");
  if (!(std::abs(rho) < 1.0)) throw Error(ErrorCode::degenerate, "asymptotic covariance needs |rho| < 1");
  const StationaryMoments m = stationary_moments(theta, sigma2);
  const double variance = m.mu2 - m.mu1 * m.mu1;
  if (variance <= kDesignTolerance) throw Error(ErrorCode::degenerate, "mu2 - mu1^2 must be positive");
  AsymptoticCovariance out;
  out.k << 1.0, -m.mu1, -m.mu1, m.mu2;
  out.k /= variance;
  out.sigma_prime.topLeftCorner<2, 2>() = sigma2 * out.k;
  out.sigma_prime.topRightCorner<2, 2>() = sigma2 * rho * out.k;
  out.sigma_prime.bottomLeftCorner<2, 2>() = sigma2 * rho * out.k;
  out.sigma_prime.bottomRightCorner<2, 2>() = sigma2 * out.k;
  out.sigma_dprime = 2.0 * sigma2 * (1.0 - rho) * out.k;
  return out;
}

double estimator_deviation_bound(double alpha, double delta, int r, DeviationSetting setting,
                                 const DeviationConstants& constants) {
  if (r < 0) throw Error(ErrorCode::invalid_argument, "r must be >= 0");
  exact::BoundSpec spec;
  spec.family = setting == DeviationSetting::gaussian ? exact::BoundFamily::estimator_dev_gaussian
                                                      : exact::BoundFamily::estimator_dev_bounded;
  spec.scope = exact::Scope::tree;
  spec.alpha = alpha;
  spec.delta = delta;
  spec.c = constants.c;
  spec.c_prime = constants.c_prime;
  spec.c_dprime = constants.c_dprime;
  return exact::evaluate_bound(spec, static_cast<std::uint64_t>(r));
}

namespace {

nlohmann::json optional_value(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const EstimatorReport& report) {
  nlohmann::json j;
  j["r"] = report.r;
  if (report.theta_hat) {
    const Theta& t = *report.theta_hat;
    j["theta_hat"] = {{"alpha0", t[0]}, {"beta0", t[1]}, {"alpha1", t[2]}, {"beta1", t[3]}};
  } else {
    j["theta_hat"] = nullptr;
  }
  j["sigma2_hat"] = optional_value(report.sigma2_hat);
  j["rho_hat"] = optional_value(report.rho_hat);
  j["mu1_hat"] = optional_value(report.mu1_hat);
  j["mu2_hat"] = optional_value(report.mu2_hat);
  j["A_r"] = report.a_r;
  j["B_r"] = report.b_r;
  j["chi1"] = optional_value(report.chi1);
  j["degenerate"] = report.degenerate;
  j["warnings"] = report.warnings;
  return j;
}

nlohmann::json to_json(const TestDecision& decision) {
  return {{"level", decision.level},
          {"threshold", decision.threshold},
          {"statistic", decision.statistic},
          {"verdict", decision.reject ? "reject" : "fail to reject"}};
}

}  // namespace bmc::inference
