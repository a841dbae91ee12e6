#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fracsum/rng.hpp"

namespace fracsum {

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;
};

// ---------------------------------------------------------------------------
// Type-2 Mittag-Leffler law ML(kappa): the positive law with E exp(sU) = E_kappa(s).

class MittagLefflerLaw {
 public:
  explicit MittagLefflerLaw(double kappa);
  double kappa() const { return kappa_; }

 private:
  double kappa_;
};

/// Density f_kappa(u), u > 0. Uses the power series for small u when it
/// keeps full precision and the stable-law integral otherwise. Not defined
/// as a density for kappa == 1 (point mass); throws DomainError there.
double ml_density(const MittagLefflerLaw& law, double u);

/// P(U <= u). Returns the step function at 1 for kappa == 1.
double ml_cdf(const MittagLefflerLaw& law, double u);

/// U = Q^-kappa with Q one-sided stable, drawn by Kanter's representation.
double ml_sample(const MittagLefflerLaw& law, RngStream& rng);

// ---------------------------------------------------------------------------
// Fractional Poisson law FP(nu, kappa) at t = 1.

class FractionalPoissonLaw {
 public:
  FractionalPoissonLaw(double nu, double kappa);
  double nu() const { return nu_; }
  double kappa() const { return kappa_; }

 private:
  double nu_;
  double kappa_;
};

/// P(N = n). Uses the alternating series when nu <= 3 and it does not lose
/// precision; otherwise the mixed-Poisson integral.
double fp_pmf(const FractionalPoissonLaw& law, std::uint64_t n);

/// Alternating series branch only. Throws EvaluationError when cancellation
/// would leave fewer than ~9 correct digits.
double fp_pmf_series(const FractionalPoissonLaw& law, std::uint64_t n);

/// int_0^inf Poisson(n; nu u) f_kappa(u) du.
double fp_pmf_mixture(const FractionalPoissonLaw& law, std::uint64_t n);

MeanVar fp_mean_var(const FractionalPoissonLaw& law);

/// E s^N = E_kappa(nu (s - 1)) for |s| <= 1.
double fp_pgf(const FractionalPoissonLaw& law, double s);

/// N | U ~ Poisson(nu U), U ~ ML(kappa).
std::uint64_t fp_sample(const FractionalPoissonLaw& law, RngStream& rng);

// ---------------------------------------------------------------------------
// Normal-Mittag-Leffler law NML(mu, sigma2, kappa): mu + sigma sqrt(U) Z.

class NmlLaw {
 public:
  NmlLaw(double mu, double sigma2, double kappa);
  double mu() const { return mu_; }
  double sigma2() const { return sigma2_; }
  double sigma() const { return sigma_; }
  double kappa() const { return kappa_; }

 private:
  double mu_;
  double sigma2_;
  double sigma_;
  double kappa_;
};

struct NmlCumulants {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

/// Density by Fourier inversion of the characteristic function
/// E_kappa(-t^2/2). Where that falls below 1e-8 / sigma, or |x - mu|/sigma > 12,
/// the mixture integral is used instead.
double nml_density(const NmlLaw& law, double x);

/// Density as the normal variance mixture int phi(y/sqrt(u))/sqrt(u) f_kappa(u) du.
/// Slower; kept as an independent route.
double nml_density_mixture(const NmlLaw& law, double x);

/// E(X^n), n >= 1, by the finite sum over the even moments of the standard law.
double nml_moments(const NmlLaw& law, int n);

NmlCumulants nml_cumulants(const NmlLaw& law);

double nml_sample(const NmlLaw& law, RngStream& rng);

// ---------------------------------------------------------------------------
// Conway-Maxwell-Poisson law COMP(lambda, eta). The normalizer is summed once
// at construction; the truncated support backs the inverse-CDF sampler.

class CompLaw {
 public:
  CompLaw(double lambda, double eta, double trunc_tol = 1e-14);

  double lambda() const { return lambda_; }
  double eta() const { return eta_; }
  double trunc_tol() const { return trunc_tol_; }
  /// Largest j kept in the truncated support.
  std::uint64_t horizon() const;

 private:
  struct Table;
  friend double comp_log_normalizer(const CompLaw&);
  friend double comp_pmf(const CompLaw&, std::uint64_t);
  friend std::uint64_t comp_sample(const CompLaw&, RngStream&);
  friend MeanVar comp_mean_var(const CompLaw&);

  double lambda_;
  double eta_;
  double trunc_tol_;
  std::shared_ptr<const Table> table_;
};

/// log H(lambda, eta).
double comp_log_normalizer(const CompLaw& law);

/// Large-lambda approximation of log H(lambda, eta).
double comp_log_normalizer_approx(double lambda, double eta);

/// Large-lambda approximation E(K) ~ lambda^(1/eta) - (eta - 1)/(2 eta).
double comp_mean_approx(double lambda, double eta);

double comp_pmf(const CompLaw& law, std::uint64_t j);
std::uint64_t comp_sample(const CompLaw& law, RngStream& rng);
MeanVar comp_mean_var(const CompLaw& law);

}  // namespace fracsum
