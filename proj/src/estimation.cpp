#include "fracsum/estimation.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fracsum/errors.hpp"
#include "fracsum/special_functions.hpp"

namespace fracsum {

namespace {

void check_kappa(double kappa, const char* who) {
  if (!(kappa > 0.0 && kappa <= 1.0)) {
    throw DomainError(std::string(who) + ": kappa must lie in (0, 1], got " + std::to_string(kappa));
  }
}

struct Central {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
};

Central central_moments(std::span<const double> sample, const char* who) {
  if (sample.size() < 2) {
    throw EstimationError(std::string(who) + ": need at least 2 observations, got " +
                          std::to_string(sample.size()));
  }
  Central c;
  c.n = sample.size();
  for (double v : sample) {
    if (!std::isfinite(v)) throw DataError(std::string(who) + ": sample contains a non-finite value");
    c.mean += v;
  }
  c.mean /= static_cast<double>(c.n);
  for (double v : sample) {
    const double d = v - c.mean;
    const double d2 = d * d;
    c.m2 += d2;
    c.m3 += d2 * d;
    c.m4 += d2 * d2;
  }
  const double dn = static_cast<double>(c.n);
  c.m2 /= dn;
  c.m3 /= dn;
  c.m4 /= dn;
  if (!(c.m2 > 0.0)) throw EstimationError(std::string(who) + ": sample has zero variance");
  return c;
}

}  // namespace

MomentSummary MomentSummary::from_sample(std::span<const double> sample) {
  if (sample.empty()) throw EstimationError("MomentSummary: empty sample");
  MomentSummary s;
  s.n = sample.size();
  for (double v : sample) {
    if (!std::isfinite(v)) throw DataError("MomentSummary: sample contains a non-finite value");
    const double v2 = v * v;
    s.m1 += v;
    s.m2 += v2;
    s.m4 += v2 * v2;
  }
  const double dn = static_cast<double>(s.n);
  s.m1 /= dn;
  s.m2 /= dn;
  s.m4 /= dn;
  return s;
}

MomentSummary MomentSummary::population(const NmlLaw& law) {
  return {1, nml_moments(law, 1), nml_moments(law, 2), nml_moments(law, 4)};
}

std::string_view to_string(BoundaryFlag flag) {
  switch (flag) {
    case BoundaryFlag::interior:
      return "interior";
    case BoundaryFlag::clamped_low:
      return "clamped_low";
    case BoundaryFlag::clamped_high:
      return "clamped_high";
  }
  return "unknown";
}

// Gamma on [1, 3] is exact at the integers, which keeps h(1) = 1/2 exactly.
double h(double kappa) {
  check_kappa(kappa, "h");
  const double g = std::tgamma(kappa + 1.0);
  return g * g / std::tgamma(2.0 * kappa + 1.0);
}

double h_prime(double kappa) {
  check_kappa(kappa, "h_prime");
  return 2.0 * h(kappa) * (digamma(kappa + 1.0) - digamma(2.0 * kappa + 1.0));
}

HInverse h_inverse(double omega, double kappa_min) {
  if (!(kappa_min > 0.0 && kappa_min < 1.0)) {
    throw DomainError("h_inverse: kappa_min must lie in (0, 1), got " + std::to_string(kappa_min));
  }
  if (std::isnan(omega)) throw DomainError("h_inverse: omega is NaN");
  if (omega < 0.5) return {1.0, BoundaryFlag::clamped_high};
  if (omega <= h(1.0)) return {1.0, BoundaryFlag::interior};
  if (omega >= h(kappa_min)) return {kappa_min, BoundaryFlag::clamped_low};

  constexpr double kResidualTol = 1e-12;
  constexpr int kMaxIterations = 100;
  double lo = kappa_min;
  double hi = 1.0;
  int iterations = 0;
  while (hi - lo > 1e-6 && iterations < kMaxIterations) {
    const double mid = 0.5 * (lo + hi);
    if (h(mid) > omega) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++iterations;
  }
  double k = 0.5 * (lo + hi);
  double best = k;
  double best_residual = std::abs(h(k) - omega);
  while (best_residual > kResidualTol && iterations < kMaxIterations) {
    const double residual = h(k) - omega;
    double next = k - residual / h_prime(k);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (residual > 0.0) {
      lo = std::max(lo, k);
    } else {
      hi = std::min(hi, k);
    }
    k = next;
    const double r = std::abs(h(k) - omega);
    if (r < best_residual) {
      best = k;
      best_residual = r;
    }
    ++iterations;
  }
  if (best_residual > kResidualTol) {
    throw EvaluationError("h_inverse: residual " + std::to_string(best_residual) +
                          " after " + std::to_string(iterations) + " iterations");
  }
  return {best, BoundaryFlag::interior};
}

Eigen::Matrix3d moment_covariance(double mu, double sigma2, double kappa) {
  check_kappa(kappa, "moment_covariance");
  if (!(sigma2 > 0.0)) throw DomainError("moment_covariance: sigma2 must be positive");
  const double m = mu;
  const double s = sigma2;
  const double a1 = 1.0 / std::tgamma(kappa + 1.0);
  const double a2 = 1.0 / std::tgamma(2.0 * kappa + 1.0);
  const double a3 = 1.0 / std::tgamma(3.0 * kappa + 1.0);
  const double a4 = 1.0 / std::tgamma(4.0 * kappa + 1.0);
  const double m2 = m * m;
  const double m4 = m2 * m2;
  const double s2 = s * s;
  const double s3 = s2 * s;

  Eigen::Matrix3d sigma;
  sigma(0, 0) = s * a1;
  sigma(0, 1) = 2.0 * m * s * a1;
  sigma(0, 2) = 24.0 * m * s2 * a2 + 4.0 * m2 * m * s * a1;
  sigma(1, 1) = 6.0 * s2 * a2 + 4.0 * m2 * s * a1 - s2 * a1 * a1;
  sigma(1, 2) = 90.0 * s3 * a3 - 6.0 * s3 * a2 * a1 + 84.0 * m2 * s2 * a2 -
                6.0 * m2 * s2 * a1 * a1 + 8.0 * m4 * s * a1;
  sigma(2, 2) = 16.0 * m4 * m2 * s * a1 + 408.0 * m4 * s2 * a2 - 36.0 * m4 * s2 * a1 * a1 -
                72.0 * m2 * s3 * a1 * a2 + 2520.0 * m2 * s3 * a3 + 2520.0 * s2 * s2 * a4 -
                36.0 * s2 * s2 * a2 * a2;
  sigma(1, 0) = sigma(0, 1);
  sigma(2, 0) = sigma(0, 2);
  sigma(2, 1) = sigma(1, 2);
  return sigma;
}

Eigen::Vector3d moment_map(double x, double y, double z) {
  const double d = y - x * x;
  if (!(d > 0.0)) throw DomainError("moment_map: requires y > x^2");
  const double omega = (z - 6.0 * x * x * y + 5.0 * x * x * x * x) / (6.0 * d * d);
  const double k = h_inverse(omega).kappa;
  return {x, d * std::tgamma(k + 1.0), k};
}

Eigen::Matrix3d moment_map_gradient(double x, double y, double z) {
  const double d = y - x * x;
  if (!(d > 0.0)) throw DomainError("moment_map_gradient: requires y > x^2");
  const double x2 = x * x;
  const double omega = (z - 6.0 * x2 * y + 5.0 * x2 * x2) / (6.0 * d * d);
  const double k = h_inverse(omega).kappa;
  const double hp = h_prime(k);
  const double g = std::tgamma(k + 1.0);
  const double g_prime = g * digamma(k + 1.0);
  const double d3 = d * d * d;
  const double dk_dx = (4.0 * x2 * x * y - 6.0 * x * y * y + 2.0 * x * z) / (3.0 * d3) / hp;
  const double dk_dy = (-2.0 * x2 * x2 + 3.0 * x2 * y - z) / (3.0 * d3) / hp;
  const double dk_dz = 1.0 / (hp * 6.0 * d * d);

  Eigen::Matrix3d grad;
  grad << 1.0, 0.0, 0.0,
      -2.0 * x * g + d * g_prime * dk_dx, g + d * g_prime * dk_dy, d * g_prime * dk_dz,
      dk_dx, dk_dy, dk_dz;
  return grad;
}

Eigen::Matrix3d asymptotic_covariance(double mu, double sigma2, double kappa) {
  const NmlLaw law(mu, sigma2, kappa);
  const MomentSummary pop = MomentSummary::population(law);
  const Eigen::Matrix3d grad = moment_map_gradient(pop.m1, pop.m2, pop.m4);
  Eigen::Matrix3d cov = grad * moment_covariance(mu, sigma2, kappa) * grad.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  if (!cov.allFinite()) {
    throw EvaluationError("asymptotic_covariance: non-finite entry at kappa=" +
                          std::to_string(kappa));
  }
  return cov;
}

FitResult mm_fit(const MomentSummary& summary, double kappa_min) {
  if (summary.n < 1) throw DomainError("mm_fit: sample size must be at least 1");
  if (!std::isfinite(summary.m1) || !std::isfinite(summary.m2) || !std::isfinite(summary.m4)) {
    throw DomainError("mm_fit: moments must be finite");
  }
  const double m1 = summary.m1;
  const double var = summary.m2 - m1 * m1;
  if (!(var > 64.0 * std::numeric_limits<double>::epsilon() * summary.m2)) {
    throw EstimationError("mm_fit: degenerate sample (M2 - M1^2 = " + std::to_string(var) + ")");
  }
  const double m1_sq = m1 * m1;
  const double omega = (summary.m4 - 6.0 * m1_sq * summary.m2 + 5.0 * m1_sq * m1_sq) / (6.0 * var * var);
  const HInverse inv = h_inverse(omega, kappa_min);

  FitResult fit;
  fit.n = summary.n;
  fit.mu_hat = m1;
  fit.kappa_hat = inv.kappa;
  fit.sigma2_hat = var * std::tgamma(inv.kappa + 1.0);
  fit.kurtosis_statistic = omega;
  fit.boundary_flag = inv.flag;
  fit.cov = asymptotic_covariance(fit.mu_hat, fit.sigma2_hat, fit.kappa_hat);
  const double dn = static_cast<double>(fit.n);
  for (int i = 0; i < 3; ++i) fit.se[i] = std::sqrt(std::max(fit.cov(i, i), 0.0) / dn);
  if (inv.flag != BoundaryFlag::interior) fit.se[2].reset();
  return fit;
}

FittedCumulants fitted_cumulants(const FitResult& fit) {
  return nml_cumulants(NmlLaw(fit.mu_hat, fit.sigma2_hat, fit.kappa_hat));
}

NormalFit normal_fit(std::span<const double> sample) {
  const Central c = central_moments(sample, "normal_fit");
  const double dn = static_cast<double>(c.n);
  return {c.mean, c.m2, std::sqrt(c.m2 / dn), c.m2 * std::sqrt(2.0 / dn)};
}

LaplaceFit laplace_fit(std::span<const double> sample) {
  const Central c = central_moments(sample, "laplace_fit");
  const double root_n = std::sqrt(static_cast<double>(c.n));
  return {c.mean, c.m2, std::sqrt(c.m2) / root_n, 2.0 * c.m2 / root_n};
}

EmpiricalCumulants empirical_cumulants(std::span<const double> sample) {
  const Central c = central_moments(sample, "empirical_cumulants");
  return {c.mean, c.m2, c.m3 / std::pow(c.m2, 1.5), c.m4 / (c.m2 * c.m2) - 3.0};
}

}  // namespace fracsum
