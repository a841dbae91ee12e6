#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "fracsum/distributions.hpp"
#include "fracsum/errors.hpp"
#include "fracsum/special_functions.hpp"
#include "quadrature.hpp"

namespace fracsum {

namespace {

using detail::kPi;

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
// The inversion integral carries ~1e-17 absolute error, so small values and
// far tails are recomputed with the (positive) mixture integral.
constexpr double kInversionLimit = 12.0;
constexpr double kInversionFloor = 1e-8;

double normal_pdf(double y) { return kInvSqrt2Pi * std::exp(-0.5 * y * y); }

// Characteristic function E_k(-t^2/2) of the standard law, split as
//   E_k(-t^2/2) = a / (1 + t^2/2) + R(t),   a = 1/Gamma(1-k).
// The first part inverts in closed form (a Laplace density); R decays like
// t^-4. R is tabulated at fixed Gauss-Legendre nodes on [0, t0]; beyond t0
// it comes from the algebraic expansion of E_k(-x).
class CfTable {
 public:
  explicit CfTable(double kappa) : kappa_(kappa) {
    a_ = detail::sin_pi(kappa) * std::exp(log_gamma(kappa)) / kPi;
    build_coefficients();
    choose_t0();
    build_nodes();
  }

  double a() const { return a_; }

  // (1/pi) int_0^inf cos(t y) E_k(-t^2/2) dt for y >= 0.
  double density(double y) const {
    double head = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      head += weights_[i] * std::cos(nodes_[i] * y) * remainder_[i];
    }
    return a_ * std::exp(-kSqrt2 * y) / kSqrt2 + (head + tail(y)) / kPi;
  }

 private:
  // Asymptotic expansion E_k(-x) ~ sum_{m>=1} c_m x^-m with
  // c_m = (-1)^(m-1) sin(pi k m) Gamma(k m) / pi. Stops at 1e-17 absolute.
  double asymptotic(double x) const {
    const double inv = 1.0 / x;
    double power = inv;
    double sum = 0.0;
    for (std::size_t m = 0; m < coef_.size(); ++m) {
      double bound = bound_[m] * power;
      sum += coef_[m] * power;
      if (m > 0 && bound < 1e-17) return sum;
      power *= inv;
    }
    throw EvaluationError("nml_density: asymptotic expansion did not reach tolerance");
  }

  double remainder_asymptotic(double t) const {
    const double x = 0.5 * t * t;
    return asymptotic(x) - a_ / (1.0 + x);
  }

  void build_coefficients() {
    for (int m = 1; m <= 600; ++m) {
      double y = kappa_ * m;
      double log_bound = log_gamma(y) - std::log(kPi);
      if (log_bound > 700.0) break;
      double b = std::exp(log_bound);
      double c = b * detail::sin_pi(y);
      bound_.push_back(b);
      coef_.push_back((m & 1) ? c : -c);
    }
  }

  // Smallest x0 >= 25 (on an integer grid) where the expansion reaches 1e-17.
  void choose_t0() {
    for (double x = 25.0; x <= 2000.0; x += 1.0) {
      double power = 1.0 / x;
      for (std::size_t m = 1; m < bound_.size(); ++m) {
        power /= x;
        if (bound_[m] * power < 1e-17) {
          t0_ = std::sqrt(2.0 * x);
          return;
        }
      }
    }
    throw EvaluationError("nml_density: no usable asymptotic range for kappa=" +
                          std::to_string(kappa_));
  }

  void build_nodes() {
    using Rule = boost::math::quadrature::gauss<double, 20>;
    const auto& abscissa = Rule::abscissa();
    const auto& weight = Rule::weights();
    const int panels = static_cast<int>(std::ceil(t0_ / 0.25));
    const double h = t0_ / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = (p + 0.5) * h;
      const double half = 0.5 * h;
      for (std::size_t k = 0; k < abscissa.size(); ++k) {
        for (double sgn : {-1.0, 1.0}) {
          if (abscissa[k] == 0.0 && sgn < 0.0) continue;
          double t = mid + sgn * half * abscissa[k];
          double x = 0.5 * t * t;
          nodes_.push_back(t);
          weights_.push_back(half * weight[k]);
          remainder_.push_back(mittag_leffler(kappa_, -x) - a_ / (1.0 + x));
        }
      }
    }
  }

  // Each tail panel is either [t, 2t] with R smooth and monotone, or a half
  // period of cos(t y); a fixed 20-point rule is exact to rounding on both.
  // (An adaptive relative tolerance chases noise when R is nearly zero.)
  double piece(double lo, double hi, double y) const {
    auto f = [&](double t) { return std::cos(t * y) * remainder_asymptotic(t); };
    return boost::math::quadrature::gauss<double, 20>::integrate(f, lo, hi);
  }

  // int_{t0}^inf cos(t y) R(t) dt: geometric panels while the integrand does
  // not oscillate, then half periods accelerated with Wynn's epsilon.
  double tail(double y) const {
    constexpr double kFar = 1e7;  // R(t) ~ t^-4; the rest is below 1e-20.
    const double half_period = (y > 0.0) ? kPi / y : kFar;
    double t = t0_;
    double sum = 0.0;
    while (t < kFar && t < half_period) {
      double next = std::min({2.0 * t, kFar, std::max(half_period, t)});
      if (next <= t) break;
      sum += piece(t, next, y);
      t = next;
    }
    if (t >= kFar || y == 0.0) return sum;
    // Align to the zeros (k + 1/2) pi / y of cos(t y).
    double k = std::ceil(t * y / kPi - 0.5);
    double zero = (k + 0.5) * kPi / y;
    if (zero > t) {
      sum += piece(t, zero, y);
      t = zero;
    }
    detail::WynnEpsilon wynn;
    double estimate = wynn.add(sum);
    for (int panel = 0; panel < 400; ++panel) {
      double contribution = piece(t, t + half_period, y);
      sum += contribution;
      t += half_period;
      estimate = wynn.add(sum);
      if (std::abs(contribution) < 1e-19) return sum;
      if (wynn.count() >= 6 && wynn.last_change() < 1e-16) return estimate;
    }
    throw EvaluationError("nml_density: oscillatory tail did not converge at y=" +
                          std::to_string(y) + ", last change " +
                          std::to_string(wynn.last_change()));
  }

  double kappa_;
  double a_ = 0.0;
  double t0_ = 0.0;
  std::vector<double> coef_;
  std::vector<double> bound_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> remainder_;
};

std::shared_ptr<const CfTable> cf_table(double kappa) {
  static std::mutex mutex;
  static std::map<double, std::shared_ptr<const CfTable>> cache;
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(kappa);
    if (it != cache.end()) return it->second;
  }
  // Built outside the lock; a concurrent duplicate build is harmless.
  auto table = std::make_shared<const CfTable>(kappa);
  std::lock_guard<std::mutex> lock(mutex);
  if (cache.size() >= 64) cache.clear();
  return cache.emplace(kappa, table).first->second;
}

double standard_density_mixture(double kappa, double y) {
  const MittagLefflerLaw mixing(kappa);
  const double y2 = y * y;
  // Over v = log u: phi(y / sqrt(u)) / sqrt(u) f_k(u) u.
  auto integrand = [&](double v) {
    const double u = std::exp(v);
    const double expo = -0.5 * y2 / u + 0.5 * v;
    if (expo < -745.0) return 0.0;
    return kInvSqrt2Pi * std::exp(expo) * ml_density(mixing, u);
  };
  std::vector<double> inner{-40.0, -20.0, -10.0, -5.0, -2.5, -1.0, 0.0, 1.0, 2.5};
  if (y2 > 0.0) inner.push_back(std::log(y2));
  const double v_hi = std::max(std::log(300.0), std::log(y2 + 1.0) + 4.0);
  auto r = detail::integrate_pieces(integrand, detail::breakpoints(-75.0, v_hi, inner), 1e-9, 12);
  if (!(r.error <= 1e-8 * std::abs(r.value) + 1e-300)) {
    throw EvaluationError("nml_density_mixture: quadrature reached relative error " +
                          std::to_string(r.error / std::abs(r.value)));
  }
  return r.value;
}

}  // namespace

NmlLaw::NmlLaw(double mu, double sigma2, double kappa)
    : mu_(mu), sigma2_(sigma2), sigma_(std::sqrt(sigma2)), kappa_(kappa) {
  if (!std::isfinite(mu)) throw DomainError("NmlLaw: mu must be finite");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw DomainError("NmlLaw: sigma2 must be positive, got " + std::to_string(sigma2));
  }
  if (!(kappa > 0.0 && kappa <= 1.0)) {
    throw DomainError("NmlLaw: kappa must lie in (0, 1], got " + std::to_string(kappa));
  }
}

double nml_density(const NmlLaw& law, double x) {
  if (!std::isfinite(x)) return 0.0;
  const double y = std::abs(x - law.mu()) / law.sigma();
  if (law.kappa() == 1.0) return normal_pdf(y) / law.sigma();
  if (y <= kInversionLimit) {
    const double f = cf_table(law.kappa())->density(y);
    if (f >= kInversionFloor) return f / law.sigma();
  }
  return standard_density_mixture(law.kappa(), y) / law.sigma();
}

double nml_density_mixture(const NmlLaw& law, double x) {
  if (!std::isfinite(x)) return 0.0;
  const double y = (x - law.mu()) / law.sigma();
  if (law.kappa() == 1.0) return normal_pdf(y) / law.sigma();
  return standard_density_mixture(law.kappa(), y) / law.sigma();
}

double nml_moments(const NmlLaw& law, int n) {
  if (n < 1) throw DomainError("nml_moments: order must be at least 1, got " + std::to_string(n));
  const double mu = law.mu();
  const double sigma = law.sigma();
  const double kappa = law.kappa();
  const double log_n_fact = log_gamma(n + 1.0);
  double sum = 0.0;
  if (n % 2 == 1) {
    for (int j = 0; j <= (n - 1) / 2; ++j) {
      const int r = (n - 2 * j - 1) / 2;  // power of sigma^2 / 2
      double coef = std::exp(log_n_fact - log_gamma(2.0 * j + 2.0) -
                             r * std::log(2.0) - log_gamma(r * kappa + 1.0));
      sum += coef * std::pow(sigma, 2 * r) * std::pow(mu, 2 * j + 1);
    }
  } else {
    for (int j = 0; j <= n / 2; ++j) {
      const int r = n / 2 - j;
      double coef = std::exp(log_n_fact - log_gamma(2.0 * j + 1.0) - r * std::log(2.0) -
                             log_gamma(r * kappa + 1.0));
      sum += coef * std::pow(sigma, 2 * r) * std::pow(mu, 2 * j);
    }
  }
  return sum;
}

NmlCumulants nml_cumulants(const NmlLaw& law) {
  const double kappa = law.kappa();
  const double g1 = log_gamma(kappa + 1.0);
  NmlCumulants c;
  c.mean = law.mu();
  c.variance = law.sigma2() / std::exp(g1);
  c.skewness = 0.0;
  c.excess_kurtosis = 6.0 * std::exp(2.0 * g1 - log_gamma(2.0 * kappa + 1.0)) - 3.0;
  return c;
}

double nml_sample(const NmlLaw& law, RngStream& rng) {
  const double u = ml_sample(MittagLefflerLaw(law.kappa()), rng);
  return law.mu() + law.sigma() * std::sqrt(u) * rng.normal();
}

}  // namespace fracsum
