#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bmc/simulate.hpp"

// Least-squares estimation for the BAR(1) model on a tree observed up to
// generation r+1, and the symmetry test built on it.
namespace bmc::inference {

using Theta = std::array<double, 4>;  // (alpha0, beta0, alpha1, beta1)

inline constexpr double kDesignTolerance = 1e-12;
inline constexpr double kVarianceTolerance = 1e-14;

struct LeastSquares {
  int r = 0;
  Theta theta_hat{};
  double a_r = 0.0;  // mean of X_i over T_r
  double b_r = 0.0;  // mean of X_i^2 over T_r minus a_r^2
};

// Throws ErrorCode::degenerate when b_r <= kDesignTolerance.
LeastSquares least_squares(const TreePopulation& pop, int r);

struct ResidualMoments {
  double sigma2_hat = 0.0;
  double rho_hat = 0.0;
  bool clipped = false;  // rho_hat fell outside [-1, 1] by at most 1e-9 and was clipped
};

// Pooled residual variance (1 / (2|T_r|)) sum (e_2i^2 + e_2i+1^2).
double residual_variance(const TreePopulation& pop, const Theta& theta, int r);
// Variance and sister correlation (1 / (|T_r| sigma2_hat)) sum e_2i e_2i+1.
// Throws ErrorCode::degenerate when sigma2_hat <= kVarianceTolerance.
ResidualMoments residual_moments(const TreePopulation& pop, const Theta& theta, int r);

struct StationaryMoments {
  double mu1 = 0.0;
  double mu2 = 0.0;
};

// First two moments of the stationary law of the lineage chain.
StationaryMoments stationary_moments(const Theta& theta, double sigma2);

struct EstimatorReport {
  int r = 0;
  std::optional<Theta> theta_hat;
  std::optional<double> sigma2_hat;
  std::optional<double> rho_hat;
  std::optional<double> mu1_hat;
  std::optional<double> mu2_hat;
  double a_r = 0.0;
  double b_r = 0.0;
  std::optional<double> chi1;
  bool degenerate = false;
  std::vector<std::string> warnings;
};

// Full pipeline. Degenerate designs are reported (degenerate = true, no
// estimates) rather than thrown; quantities that cannot be formed (e.g. rho on
// noise-free data) are left empty with a warning.
EstimatorReport estimate(const TreePopulation& pop, int r);

// (|T_r| / (2 sigma2)) {(da)^2 (mu2 - mu1^2) + (da mu1 + db)^2}.
double chi_square_statistic(int r, const Theta& theta_hat, double sigma2_hat, double mu1_hat, double mu2_hat);
double chi_square_statistic(const EstimatorReport& report);

struct TestDecision {
  double level = 0.0;
  double threshold = 0.0;
  double statistic = 0.0;
  bool reject = false;
};

// Rejects symmetry when chi exceeds the (1 - level) quantile of chi^2 with 2
// degrees of freedom.
TestDecision asymmetry_test(double chi, double level);

struct AsymptoticCovariance {
  Eigen::Matrix2d k;
  Eigen::Matrix4d sigma_prime;
  Eigen::Matrix2d sigma_dprime;
};

AsymptoticCovariance asymptotic_covariance(const Theta& theta, double sigma2, double rho);

enum class DeviationSetting { gaussian, bounded };

struct DeviationConstants {
  double c = 1.0;
  double c_prime = 1.0;
  double c_dprime = 1.0;
};

double estimator_deviation_bound(double alpha, double delta, int r, DeviationSetting setting,
                                 const DeviationConstants& constants = {});

nlohmann::json to_json(const EstimatorReport& report);
nlohmann::json to_json(const TestDecision& decision);

}  // namespace bmc::inference
