#include "bmc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "bmc/error.hpp"

namespace bmc::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorCode::invalid_argument, "mean of an empty sample");
  CompensatedSum s;
  for (double v : xs) s += v;
  return s.value() / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw Error(ErrorCode::invalid_argument, "variance needs at least 2 points");
  const double m = mean(xs);
  CompensatedSum s;
  for (double v : xs) s += (v - m) * (v - m);
  return s.value() / static_cast<double>(xs.size() - 1);
}

double skewness(std::span<const double> xs) {
  if (xs.size() < 3) throw Error(ErrorCode::invalid_argument, "skewness needs at least 3 points");
  const double m = mean(xs);
  CompensatedSum m2, m3;
  for (double v : xs) {
    const double d = v - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double n = static_cast<double>(xs.size());
  const double var = m2.value() / n;
  if (var <= 0.0) return 0.0;
  return (m3.value() / n) / std::pow(var, 1.5);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal_distribution<>(), p); }

double chi_squared_quantile(double degrees, double p) {
  return boost::math::quantile(boost::math::chi_squared_distribution<>(degrees), p);
}

double student_t_quantile(double degrees, double p) {
  return boost::math::quantile(boost::math::students_t_distribution<>(degrees), p);
}

double ks_distance_to_normal(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorCode::invalid_argument, "KS distance of an empty sample");
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf(sorted[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

double ks_pvalue(double distance, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * distance;
  if (lambda < 1e-3) return 1.0;
  // Q_KS(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double binomial_stderr(double p, std::size_t n) {
  if (n == 0) return 0.0;
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "linear fit needs two equally sized samples of >= 2 points");
  }
  const double mx = mean(x);
  const double my = mean(y);
  CompensatedSum sxx, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx.value() <= 0.0) throw Error(ErrorCode::degenerate, "linear fit with constant regressor");
  LinearFit fit;
  fit.points = x.size();
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = my - fit.slope * mx;
  if (x.size() > 2) {
    CompensatedSum rss;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - fit.intercept - fit.slope * x[i];
      rss += e * e;
    }
    const double dof = static_cast<double>(x.size() - 2);
    fit.slope_stderr = std::sqrt(rss.value() / dof / sxx.value());
    const double t = student_t_quantile(dof, 0.975);
    fit.ci_low = fit.slope - t * fit.slope_stderr;
    fit.ci_high = fit.slope + t * fit.slope_stderr;
  } else {
    fit.ci_low = fit.ci_high = fit.slope;
  }
  return fit;
}

}  // namespace bmc::stats
