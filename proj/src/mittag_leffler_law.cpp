#include <cmath>
#include <optional>
#include <string>
#include <vector>
#include <algorithm>

#include "fracsum/distributions.hpp"
#include "fracsum/errors.hpp"
#include "fracsum/special_functions.hpp"
#include "quadrature.hpp"

namespace fracsum {

namespace {

using detail::kPi;

constexpr double kTol = 1e-10;

// log of Kanter's function
//   A(phi) = [sin(k phi)^k sin((1-k) phi)^(1-k) / sin(phi)]^(1/(1-k)),
// written in s = pi - phi so that the blow-up at phi = pi keeps full relative
// precision. Decreasing in s, from +inf at s = 0 to
// A(0+) = [k^k (1-k)^(1-k)]^(1/(1-k)) at s = pi.
double log_kanter(double kappa, double s) {
  const double one_minus = 1.0 - kappa;
  const double phi = kPi - s;
  if (phi < 1e-8) return (kappa * std::log(kappa) + one_minus * std::log(one_minus)) / one_minus;
  return (kappa * std::log(std::sin(kappa * phi)) +
          one_minus * std::log(std::sin(one_minus * phi)) - std::log(std::sin(s))) /
         one_minus;
}

// s in (0, pi) where log A(s) = target, found by bisection on log s; 0 or pi
// when the level is out of range.
double kanter_level(double kappa, double target) {
  if (target <= log_kanter(kappa, kPi)) return kPi;
  double lo = -745.0;
  double hi = std::log(kPi);
  if (log_kanter(kappa, std::exp(lo)) < target) return 0.0;
  // A breakpoint only needs to be roughly placed; 40 halvings of ~750 in log s.
  for (int i = 0; i < 40; ++i) {
    double mid = 0.5 * (lo + hi);
    if (log_kanter(kappa, std::exp(mid)) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi));
}

// Breakpoints where w = u^(1/(1-k)) A(s) crosses a few levels around 1, the
// peak of w e^-w.
std::vector<double> kanter_breaks(double kappa, double log_scale) {
  std::vector<double> inner;
  for (double level : {-3.0, 0.0, 3.0}) {
    double s = kanter_level(kappa, level - log_scale);
    if (s > 0.0 && s < kPi) inner.push_back(s);
  }
  return detail::breakpoints(0.0, kPi, inner);
}

// (1 / (pi k)) sum_{j>=1} (-1)^(j-1) / j! sin(pi k j) Gamma(k j + 1) u^(j-1).
std::optional<double> density_series(double kappa, double u) {
  const double log_u = std::log(u);
  double sum = 0.0;
  double abs_sum = 0.0;
  double prev_mag = 0.0;
  for (int j = 1; j <= 500; ++j) {
    double log_mag = log_gamma(kappa * j + 1.0) - log_gamma(j + 1.0) + (j - 1) * log_u;
    double mag = std::exp(log_mag);
    double term = mag * detail::sin_pi(kappa * j);
    if (!(j & 1)) term = -term;
    sum += term;
    abs_sum += std::abs(term);
    if (j > 2 && mag < prev_mag && mag <= 1e-17 * std::abs(sum)) {
      if (abs_sum * 1e-16 > 1e-11 * std::abs(sum)) return std::nullopt;
      return sum / (kPi * kappa);
    }
    prev_mag = mag;
  }
  return std::nullopt;
}

double density_integral(double kappa, double u) {
  const double one_minus = 1.0 - kappa;
  const double log_scale = std::log(u) / one_minus;
  auto integrand = [=](double s) {
    double log_w = log_scale + log_kanter(kappa, s);
    if (log_w > 40.0) return 0.0;
    return std::exp(log_w - std::exp(log_w));
  };
  auto r = detail::tanh_sinh_pieces(integrand, kanter_breaks(kappa, log_scale), kTol);
  if (!(r.error <= 1e-8 * std::abs(r.value) + 1e-300)) {
    throw EvaluationError("ml_density: stable-law integral reached relative error " +
                          std::to_string(r.error / std::abs(r.value)));
  }
  return r.value / (kPi * one_minus * u);
}

}  // namespace

MittagLefflerLaw::MittagLefflerLaw(double kappa) : kappa_(kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) {
    throw DomainError("MittagLefflerLaw: kappa must lie in (0, 1], got " + std::to_string(kappa));
  }
}

double ml_density(const MittagLefflerLaw& law, double u) {
  if (!(u > 0.0) || !std::isfinite(u)) {
    throw DomainError("ml_density: u must be positive and finite, got " + std::to_string(u));
  }
  const double kappa = law.kappa();
  if (kappa == 1.0) throw DomainError("ml_density: ML(1) is a point mass at 1 and has no density");
  if (u <= 8.0) {
    if (auto v = density_series(kappa, u)) return std::max(*v, 0.0);
  }
  return density_integral(kappa, u);
}

double ml_cdf(const MittagLefflerLaw& law, double u) {
  if (std::isnan(u)) throw DomainError("ml_cdf: u is NaN");
  if (u <= 0.0) return 0.0;
  if (std::isinf(u)) return 1.0;
  const double kappa = law.kappa();
  if (kappa == 1.0) return u >= 1.0 ? 1.0 : 0.0;
  const double log_scale = std::log(u) / (1.0 - kappa);
  auto integrand = [=](double s) {
    return -std::expm1(-std::exp(log_scale + log_kanter(kappa, s)));
  };
  auto r = detail::tanh_sinh_pieces(integrand, kanter_breaks(kappa, log_scale), kTol);
  return std::min(1.0, r.value / kPi);
}

double ml_sample(const MittagLefflerLaw& law, RngStream& rng) {
  const double kappa = law.kappa();
  if (kappa == 1.0) return 1.0;
  // Theta ~ U(0, pi), sampled directly as s = pi - Theta.
  const double s = kPi * rng.uniform();
  const double e = rng.exponential();
  return std::exp((1.0 - kappa) * (std::log(e) - log_kanter(kappa, s)));
}

}  // namespace fracsum
