#include "fracsum/special_functions.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "fracsum/errors.hpp"
#include "quadrature.hpp"

namespace fracsum {

namespace {

using detail::kPi;

constexpr double kQuadTol = 1e-11;
// exp(-x) underflows to zero for x beyond ~745; integrate a little past it.
constexpr double kExpCutoff = 750.0;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void check_kappa(double kappa, const char* where) {
  if (!(kappa > 0.0 && kappa <= 1.0)) {
    throw DomainError(std::string(where) + ": kappa must lie in (0, 1], got " + fmt(kappa));
  }
}

double taylor_series(double kappa, double z, const MlEvalConfig& cfg) {
  double sum = 1.0;
  double log_abs_z = std::log(std::abs(z));
  int small_in_a_row = 0;
  for (int m = 1; m < cfg.max_terms; ++m) {
    double mag = std::exp(m * log_abs_z - log_gamma(kappa * m + 1.0));
    double term = (z < 0.0 && (m & 1)) ? -mag : mag;
    sum += term;
    if (mag <= cfg.series_tol * std::max(std::abs(sum), 1e-300)) {
      if (++small_in_a_row == 2) return sum;
    } else {
      small_in_a_row = 0;
    }
  }
  throw EvaluationError("mittag_leffler: Taylor series branch did not converge within " +
                        std::to_string(cfg.max_terms) + " terms (kappa=" + fmt(kappa) +
                        ", z=" + fmt(z) + ")");
}

// sin(k pi)/(k pi) * int_0^inf exp(-(x u)^(1/k)) / (u^2 + 2 sign u cos(k pi) + 1) du
// with sign = +1 for E(-x) and sign = -1 for the companion integral of E(+x).
double spectral_integral(double kappa, double x, double sign) {
  const double c = sign * detail::cos_pi(kappa);
  const double s = detail::sin_pi(kappa);
  const double inv_kappa = 1.0 / kappa;
  auto g = [=](double u) {
    double e = std::pow(x * u, inv_kappa);
    return e > kExpCutoff ? 0.0 : std::exp(-e);
  };
  // (u + c)^2 + s^2 == u^2 + 2cu + 1, written to stay accurate near u = -c.
  auto denom = [=](double u) { return (u + c) * (u + c) + s * s; };
  const double u_max = std::pow(kExpCutoff, kappa) / x;
  const double knee = 1.0 / x;

  double value = 0.0;
  double error = 0.0;
  if (c < 0.0 && s < 0.5) {
    // Near-pole at u0 = -c of half-width s. Remove g(u0) + g'(u0)(u - u0)
    // on [0, 2 u0]; the constant part integrates in closed form and the
    // linear part vanishes by symmetry.
    const double u0 = -c;
    const double g0 = g(u0);
    const double g1 = -inv_kappa * std::pow(x, inv_kappa) * std::pow(u0, inv_kappa - 1.0) * g0;
    value = g0 * (2.0 / s) * std::atan(u0 / s);
    auto remainder = [=](double u) { return (g(u) - g0 - g1 * (u - u0)) / denom(u); };
    auto near = detail::tanh_sinh_pieces(
        remainder,
        detail::breakpoints(0.0, 2.0 * u0,
                            {u0 - 4.0 * s, u0 - s, u0, u0 + s, u0 + 4.0 * s, knee}),
        kQuadTol);
    value += near.value;
    error += near.error;
    if (u_max > 2.0 * u0) {
      auto far = detail::tanh_sinh_pieces([=](double u) { return g(u) / denom(u); },
                                          detail::breakpoints(2.0 * u0, u_max, {knee}),
                                          kQuadTol);
      value += far.value;
      error += far.error;
    }
  } else {
    std::vector<double> inner{knee};
    if (c < 0.0) inner.insert(inner.end(), {-c - s, -c, -c + s});
    auto r = detail::tanh_sinh_pieces([=](double u) { return g(u) / denom(u); },
                                      detail::breakpoints(0.0, u_max, inner), kQuadTol);
    value = r.value;
    error = r.error;
  }
  if (!(error <= 1e-9 * std::abs(value))) {
    throw EvaluationError("mittag_leffler: quadrature branch reached relative error " +
                          fmt(error / std::abs(value)) + " (kappa=" + fmt(kappa) +
                          ", x=" + fmt(x) + ")");
  }
  return s / (kappa * kPi) * value;
}

// sum_{m>=1} (-1)^(m-1) x^-m / Gamma(1 - k m); 1/Gamma(1-y) = Gamma(y) sin(pi y) / pi.
std::optional<double> negative_asymptotic(double kappa, double x) {
  const double log_x = std::log(x);
  double sum = 0.0;
  double prev_bound = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= 300; ++m) {
    double y = kappa * m;
    double bound = std::exp(log_gamma(y) - m * log_x) / kPi;
    if (m > 1 && bound <= 1e-17 * std::abs(sum)) return sum;
    if (bound > prev_bound) return std::nullopt;
    prev_bound = bound;
    double term = bound * detail::sin_pi(y);
    sum += (m & 1) ? term : -term;
  }
  return std::nullopt;
}

}  // namespace

void MlEvalConfig::validate() const {
  if (!(series_tol > 0.0)) throw DomainError("MlEvalConfig: series_tol must be positive");
  if (max_terms < 1) throw DomainError("MlEvalConfig: max_terms must be at least 1");
  if (!(asymptotic_threshold > 0.0)) {
    throw DomainError("MlEvalConfig: asymptotic_threshold must be positive");
  }
}

double mittag_leffler(double kappa, double z, const MlEvalConfig& cfg) {
  check_kappa(kappa, "mittag_leffler");
  if (!std::isfinite(z)) throw DomainError("mittag_leffler: z must be finite, got " + fmt(z));
  cfg.validate();

  if (kappa == 1.0) return std::exp(z);
  if (z == 0.0) return 1.0;
  if (std::abs(z) <= 0.5) return taylor_series(kappa, z, cfg);

  if (z < 0.0) {
    const double x = -z;
    if (x > cfg.asymptotic_threshold) {
      if (auto v = negative_asymptotic(kappa, x)) return *v;
    }
    return spectral_integral(kappa, x, +1.0);
  }

  const double growth = std::pow(z, 1.0 / kappa);
  if (growth > 709.0) {
    throw EvaluationError("mittag_leffler: result overflows double (kappa=" + fmt(kappa) +
                          ", z=" + fmt(z) + ")");
  }
  return std::exp(growth) / kappa - spectral_integral(kappa, z, -1.0);
}

double log_gamma(double x) {
  if (!(x > 0.0)) throw DomainError("log_gamma: argument must be positive, got " + fmt(x));
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

double digamma(double x) {
  if (!(x > 0.0)) throw DomainError("digamma: argument must be positive, got " + fmt(x));
  // Shift upward with Psi(x) = Psi(x + 1) - 1/x, then use the asymptotic series.
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli terms B_2k / (2k x^2k), k = 1..8.
  double tail = inv2 * (1.0 / 12 -
                inv2 * (1.0 / 120 -
                inv2 * (1.0 / 252 -
                inv2 * (1.0 / 240 -
                inv2 * (1.0 / 132 -
                inv2 * (691.0 / 32760 -
                inv2 * (1.0 / 12 -
                inv2 * (3617.0 / 8160))))))));
  return shift + std::log(x) - 0.5 * inv - tail;
}

double beta(double a, double b) {
  if (!(a > 0.0 && b > 0.0)) {
    throw DomainError("beta: arguments must be positive, got (" + fmt(a) + ", " + fmt(b) + ")");
  }
  return std::exp(log_gamma(a) + log_gamma(b) - log_gamma(a + b));
}

}  // namespace fracsum
