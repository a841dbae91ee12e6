#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Core>

#include "fracsum/distributions.hpp"

namespace fracsum {

/// Raw sample moments M_k = (1/n) sum Y_i^k for k = 1, 2, 4.
struct MomentSummary {
  std::uint64_t n = 0;
  double m1 = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;

  static MomentSummary from_sample(std::span<const double> sample);
  /// Population moments of NML(mu, sigma2, kappa).
  static MomentSummary population(const NmlLaw& law);
};

enum class BoundaryFlag { interior, clamped_low, clamped_high };

std::string_view to_string(BoundaryFlag flag);

inline constexpr double kDefaultKappaMin = 1e-6;

struct HInverse {
  double kappa = 1.0;
  BoundaryFlag flag = BoundaryFlag::interior;
};

/// h(k) = Gamma(k+1)^2 / Gamma(2k+1), strictly decreasing from 1 to 1/2 on (0, 1].
double h(double kappa);
/// h'(k) = 2 h(k) [Psi(k+1) - Psi(2k+1)].
double h_prime(double kappa);
/// Root of h(k) = omega in [kappa_min, 1]. omega < 1/2 clamps to 1 and a root
/// below kappa_min (including omega >= 1) clamps to kappa_min; both are flagged.
HInverse h_inverse(double omega, double kappa_min = kDefaultKappaMin);

struct FitResult {
  std::uint64_t n = 0;
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;
  double kappa_hat = 1.0;
  /// Asymptotic covariance of sqrt(n) (mu_hat, sigma2_hat, kappa_hat) at the estimates.
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  /// sqrt(cov_ii / n). The kappa entry is empty when kappa_hat was clamped.
  std::array<std::optional<double>, 3> se;
  /// The kurtosis statistic omega that is inverted through h.
  double kurtosis_statistic = 0.0;
  BoundaryFlag boundary_flag = BoundaryFlag::interior;
};

/// Method-of-moments fit of NML(mu, sigma2, kappa). Throws EstimationError for
/// a degenerate sample (M2 == M1^2 up to rounding).
FitResult mm_fit(const MomentSummary& summary, double kappa_min = kDefaultKappaMin);

/// Covariance matrix of (Y, Y^2, Y^4) under NML(mu, sigma2, kappa).
Eigen::Matrix3d moment_covariance(double mu, double sigma2, double kappa);

/// g(x, y, z) = (x, (y - x^2) Gamma(k + 1), k) with k = h^-1(omega(x, y, z)).
Eigen::Vector3d moment_map(double x, double y, double z);

/// Jacobian of moment_map; rows are the components of g.
Eigen::Matrix3d moment_map_gradient(double x, double y, double z);

/// grad g * Sigma * grad g^T at the population moments of NML(mu, sigma2, kappa).
Eigen::Matrix3d asymptotic_covariance(double mu, double sigma2, double kappa);

using FittedCumulants = NmlCumulants;

FittedCumulants fitted_cumulants(const FitResult& fit);

// ---------------------------------------------------------------------------
// Comparison fits and descriptive statistics.

struct NormalFit {
  double mu = 0.0;
  double sigma2 = 0.0;  // 1/n variance (maximum likelihood)
  double se_mu = 0.0;
  double se_sigma2 = 0.0;
};

NormalFit normal_fit(std::span<const double> sample);

/// Laplace fit in the reporting convention used for return tables: mu is the
/// sample mean, sigma2 the 1/n sample variance taken as the squared Laplace
/// scale b^2, so the fitted variance is 2 sigma2 and the excess kurtosis 3.
/// Standard errors are the Laplace maximum-likelihood ones at that scale:
/// se(mu) = b / sqrt(n), se(sigma2) = 2 b^2 / sqrt(n).
struct LaplaceFit {
  double mu = 0.0;
  double sigma2 = 0.0;
  double se_mu = 0.0;
  double se_sigma2 = 0.0;
  double variance() const { return 2.0 * sigma2; }
};

LaplaceFit laplace_fit(std::span<const double> sample);

struct EmpiricalCumulants {
  double mean = 0.0;
  double variance = 0.0;  // 1/n
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

EmpiricalCumulants empirical_cumulants(std::span<const double> sample);

}  // namespace fracsum
