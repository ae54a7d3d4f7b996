#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace bmc::stats {

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double v) {
    add(v);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double mean(std::span<const double> xs);
// Unbiased sample variance (n - 1 denominator).
double variance(std::span<const double> xs);
// Sample skewness m3 / m2^{3/2} with population moments.
double skewness(std::span<const double> xs);

double normal_cdf(double x);
double normal_quantile(double p);
double chi_squared_quantile(double degrees, double p);
double student_t_quantile(double degrees, double p);

// Kolmogorov-Smirnov distance between the empirical CDF of xs and the
// standard normal CDF.
double ks_distance_to_normal(std::span<const double> xs);
// Asymptotic Kolmogorov p-value with the Stephens small-sample correction.
double ks_pvalue(double distance, std::size_t n);

// sqrt(p (1 - p) / n).
double binomial_stderr(double p, std::size_t n);

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double ci_low = 0.0;   // 95% t interval for the slope
  double ci_high = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares y ~ a + b x. Needs at least 3 points for the interval;
// with 2 points the stderr is reported as 0.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace bmc::stats
