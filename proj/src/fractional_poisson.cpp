#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fracsum/distributions.hpp"
#include "fracsum/errors.hpp"
#include "fracsum/special_functions.hpp"
#include "quadrature.hpp"

namespace fracsum {

namespace {

// Largest nu for which the alternating series is tried first.
constexpr double kSeriesNuLimit = 3.0;

double poisson_pmf(double mean, std::uint64_t n) {
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  const double dn = static_cast<double>(n);
  return std::exp(dn * std::log(mean) - mean - log_gamma(dn + 1.0));
}

}  // namespace

FractionalPoissonLaw::FractionalPoissonLaw(double nu, double kappa) : nu_(nu), kappa_(kappa) {
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    throw DomainError("FractionalPoissonLaw: nu must be positive, got " + std::to_string(nu));
  }
  if (!(kappa > 0.0 && kappa <= 1.0)) {
    throw DomainError("FractionalPoissonLaw: kappa must lie in (0, 1], got " +
                      std::to_string(kappa));
  }
}

double fp_pmf_series(const FractionalPoissonLaw& law, std::uint64_t n) {
  const double nu = law.nu();
  const double kappa = law.kappa();
  const double dn = static_cast<double>(n);
  const double log_nu = std::log(nu);
  const double log_prefix = dn * log_nu - log_gamma(dn + 1.0);
  double sum = 0.0;
  double abs_sum = 0.0;
  double prev_mag = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 5000; ++i) {
    const double di = i;
    double mag = std::exp(log_prefix + log_gamma(di + dn + 1.0) - log_gamma(di + 1.0) +
                          di * log_nu - log_gamma(kappa * (di + dn) + 1.0));
    double term = (i & 1) ? -mag : mag;
    sum += term;
    abs_sum += mag;
    if (mag < prev_mag && mag <= 1e-17 * std::abs(sum)) {
      if (4.0 * std::numeric_limits<double>::epsilon() * abs_sum > 1e-9 * std::abs(sum)) {
        throw EvaluationError(
            "fp_pmf_series: alternating series lost precision to cancellation (nu=" +
            std::to_string(nu) + ", kappa=" + std::to_string(kappa) + ", n=" + std::to_string(n) +
            "); use the mixed-Poisson branch fp_pmf_mixture");
      }
      return std::max(sum, 0.0);
    }
    prev_mag = mag;
  }
  throw EvaluationError("fp_pmf_series: series did not converge (nu=" + std::to_string(nu) +
                        ", n=" + std::to_string(n) + "); use fp_pmf_mixture");
}

double fp_pmf_mixture(const FractionalPoissonLaw& law, std::uint64_t n) {
  const double nu = law.nu();
  if (law.kappa() == 1.0) return poisson_pmf(nu, n);
  const MittagLefflerLaw mixing(law.kappa());
  const double dn = static_cast<double>(n);
  const double log_norm = log_gamma(dn + 1.0);
  // Integrate over v = log u; the Poisson kernel peaks at u = n / nu.
  auto integrand = [&](double v) {
    const double u = std::exp(v);
    const double mean = nu * u;
    const double log_kernel = dn * std::log(mean) - mean - log_norm;
    if (log_kernel < -745.0) return 0.0;
    return std::exp(log_kernel) * ml_density(mixing, u) * u;
  };
  // Below v = -38 the integrand is under f(0) e^v < 1e-16.
  std::vector<double> inner{-24.0, -12.0, -6.0, -3.0, -1.5, 0.0, 1.5, 3.0};
  if (n > 0) inner.push_back(std::log(dn / nu));
  const double v_hi = std::max(std::log(100.0), std::log(dn / nu + 1.0) + 3.0);
  auto r = detail::integrate_pieces(integrand, detail::breakpoints(-38.0, v_hi, inner), 1e-9, 12);
  if (!(r.error <= 1e-7 * std::abs(r.value) + 1e-14)) {
    throw EvaluationError("fp_pmf_mixture: quadrature reached absolute error " +
                          std::to_string(r.error));
  }
  return std::max(r.value, 0.0);
}

double fp_pmf(const FractionalPoissonLaw& law, std::uint64_t n) {
  if (law.kappa() == 1.0) return poisson_pmf(law.nu(), n);
  if (law.nu() <= kSeriesNuLimit) {
    try {
      return fp_pmf_series(law, n);
    } catch (const EvaluationError&) {
      // Cancellation for small kappa; fall through to the integral.
    }
  }
  return fp_pmf_mixture(law, n);
}

MeanVar fp_mean_var(const FractionalPoissonLaw& law) {
  const double kappa = law.kappa();
  const double mean = law.nu() / std::exp(log_gamma(kappa + 1.0));
  const double factor = kappa * beta(kappa, 0.5) / std::pow(2.0, 2.0 * kappa - 1.0) - 1.0;
  return {mean, mean + mean * mean * factor};
}

double fp_pgf(const FractionalPoissonLaw& law, double s) {
  if (!(std::abs(s) <= 1.0)) {
    throw DomainError("fp_pgf: |s| must not exceed 1, got " + std::to_string(s));
  }
  return mittag_leffler(law.kappa(), law.nu() * (s - 1.0));
}

std::uint64_t fp_sample(const FractionalPoissonLaw& law, RngStream& rng) {
  const double u = ml_sample(MittagLefflerLaw(law.kappa()), rng);
  return rng.poisson(law.nu() * u);
}

}  // namespace fracsum
