#pragma once

namespace fracsum {

/// Controls evaluation of the one-parameter Mittag-Leffler function.
struct MlEvalConfig {
  /// Relative tolerance of the Taylor branch, measured against the running
  /// partial sum (floored at 1e-300 absolute).
  double series_tol = 1e-14;
  int max_terms = 500;
  /// For z < 0, |z| above which the algebraic asymptotic expansion is tried
  /// before falling back to quadrature.
  double asymptotic_threshold = 25.0;

  /// Throws DomainError when a field violates its invariant.
  void validate() const;
};

/// E_kappa(z) = sum_m z^m / Gamma(kappa m + 1) for 0 < kappa <= 1 and real z.
///
/// Branches:
///  * kappa == 1: exp(z).
///  * |z| <= 0.5: Taylor series.
///  * z < -0.5: spectral integral
///      E(-x) = sin(k pi)/(k pi) * int_0^inf exp(-(x u)^(1/k)) / (u^2 + 2u cos(k pi) + 1) du,
///    or the expansion sum_{m>=1} (-1)^(m-1) x^-m / Gamma(1 - k m) once
///    x > asymptotic_threshold and the expansion reaches full precision.
///  * z > 0.5: (1/k) exp(z^(1/k)) minus the companion spectral integral.
///
/// Throws DomainError for kappa outside (0,1] or non-finite z, and
/// EvaluationError when the selected branch fails to converge.
double mittag_leffler(double kappa, double z, const MlEvalConfig& cfg = {});

/// Psi(x) = Gamma'(x)/Gamma(x) for x > 0.
double digamma(double x);

/// log Gamma(x) for x > 0.
double log_gamma(double x);

/// B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b) for a, b > 0.
double beta(double a, double b);

}  // namespace fracsum
