#pragma once

// Internal numerical helpers shared by the special-function and density
// code. Not part of the installed interface.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fracsum/errors.hpp"

namespace fracsum::detail {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// sin(pi x) without the argument-reduction error of sin(M_PI * x); exact
/// zero at integers.
inline double sin_pi(double x) {
  double r = std::fmod(x, 2.0);
  if (r < 0.0) r += 2.0;
  if (r == 0.0 || r == 1.0) return 0.0;
  if (r == 0.5) return 1.0;
  if (r == 1.5) return -1.0;
  if (r > 1.0) return -std::sin(kPi * (r - 1.0));
  return std::sin(kPi * r);
}

inline double cos_pi(double x) { return sin_pi(x + 0.5); }

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

/// Adaptive 21-point Gauss-Kronrod over [a, b] (either bound may be
/// infinite). Reports the achieved error instead of throwing.
template <class F>
QuadResult gauss_kronrod(F&& f, double a, double b, double rel_tol,
                         unsigned max_depth = 20) {
  QuadResult r;
  if (a == b) return r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
      f, a, b, max_depth, rel_tol, &r.error, &r.l1);
  return r;
}

/// Double-exponential quadrature on a finite [a, b]; tolerates algebraic
/// endpoint singularities such as u^(1/kappa) at u = 0.
template <class F>
QuadResult tanh_sinh(F&& f, double a, double b, double rel_tol) {
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  QuadResult r;
  if (a == b) return r;
  // Map to [-1, 1] here: Boost asserts when a mapped abscissa rounds onto an
  // endpoint of a narrow interval, and our integrands are finite there.
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  auto mapped = [&](double t) { return f(mid + half * t) * half; };
  r.value = rule.integrate(mapped, -1.0, 1.0, rel_tol, &r.error, &r.l1);
  r.error = std::abs(r.error);
  r.l1 = std::abs(r.l1);
  return r;
}

/// Sum of tanh_sinh over consecutive pieces.
template <class F>
QuadResult tanh_sinh_pieces(F&& f, const std::vector<double>& points, double rel_tol) {
  QuadResult total;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (!(points[i + 1] > points[i])) continue;
    QuadResult piece = tanh_sinh(f, points[i], points[i + 1], rel_tol);
    total.value += piece.value;
    total.error += piece.error;
    total.l1 += piece.l1;
  }
  return total;
}

/// Integrates over consecutive pieces [p0,p1], [p1,p2], ... so that kinks
/// and narrow peaks sit on panel boundaries. Points must be increasing.
template <class F>
QuadResult integrate_pieces(F&& f, const std::vector<double>& points,
                            double rel_tol, unsigned max_depth = 20) {
  QuadResult total;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (!(points[i + 1] > points[i])) continue;
    QuadResult piece = gauss_kronrod(f, points[i], points[i + 1], rel_tol, max_depth);
    total.value += piece.value;
    total.error += piece.error;
    total.l1 += piece.l1;
  }
  return total;
}

/// Sorted, deduplicated breakpoints clipped to [lo, hi] with both ends.
inline std::vector<double> breakpoints(double lo, double hi, std::vector<double> inner) {
  std::vector<double> pts{lo};
  std::sort(inner.begin(), inner.end());
  for (double p : inner) {
    if (p > pts.back() && p < hi) pts.push_back(p);
  }
  pts.push_back(hi);
  return pts;
}

/// Wynn's epsilon algorithm applied to a stream of partial sums. Used to
/// accelerate the alternating panel sums of oscillatory Fourier integrals.
class WynnEpsilon {
 public:
  /// Adds the next partial sum and returns the current extrapolated limit.
  double add(double partial_sum) {
    std::vector<double> next;
    next.reserve(prev_.size() + 1);
    next.push_back(partial_sum);
    // Each new diagonal element e_{k+1} = e_{k-1} + 1/(e_k(new) - e_k(old)).
    double older = 0.0;
    for (std::size_t k = 0; k < prev_.size(); ++k) {
      double diff = next[k] - prev_[k];
      double lower = (k == 0) ? 0.0 : older;
      double value;
      if (diff == 0.0) {
        // Converged column; freeze the table here.
        value = next[k];
        next.push_back(value);
        break;
      }
      value = lower + 1.0 / diff;
      older = prev_[k];
      next.push_back(value);
    }
    prev_ = std::move(next);
    // Even columns hold the extrapolants; take the deepest one.
    std::size_t best = (prev_.size() - 1) & ~static_cast<std::size_t>(1);
    estimate_history_.push_back(prev_[best]);
    return prev_[best];
  }

  /// Absolute change between the last two extrapolated values.
  double last_change() const {
    std::size_t n = estimate_history_.size();
    if (n < 2) return std::numeric_limits<double>::infinity();
    return std::abs(estimate_history_[n - 1] - estimate_history_[n - 2]);
  }

  std::size_t count() const { return estimate_history_.size(); }

 private:
  std::vector<double> prev_;
  std::vector<double> estimate_history_;
};

}  // namespace fracsum::detail
