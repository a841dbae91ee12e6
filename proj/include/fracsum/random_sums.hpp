#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fracsum/distributions.hpp"
#include "fracsum/estimation.hpp"
#include "fracsum/rng.hpp"

namespace fracsum {

enum class SummandFamily { standard_normal, rademacher, centered_uniform, custom_table };

/// Law of the i.i.d. summands W_j. Every admissible spec has mean 0 and
/// variance 1; custom tables are checked on construction.
class SummandSpec {
 public:
  SummandSpec() = default;
  static SummandSpec standard_normal() { return SummandSpec(SummandFamily::standard_normal); }
  static SummandSpec rademacher() { return SummandSpec(SummandFamily::rademacher); }
  /// Uniform on (-sqrt 3, sqrt 3).
  static SummandSpec centered_uniform() { return SummandSpec(SummandFamily::centered_uniform); }
  /// Discrete law on `values` with `probabilities`; throws DomainError unless
  /// the mean is 0 and the variance 1 (to 1e-9).
  static SummandSpec custom_table(std::vector<double> values, std::vector<double> probabilities);

  SummandFamily family() const { return family_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& probabilities() const { return probabilities_; }

  /// W_1 + ... + W_count.
  double sum(std::uint64_t count, RngStream& rng) const;

 private:
  explicit SummandSpec(SummandFamily family) : family_(family) {}
  SummandFamily family_ = SummandFamily::standard_normal;
  std::vector<double> values_;
  std::vector<double> probabilities_;
};

SummandFamily parse_summand_family(const std::string& name);
std::string to_string(SummandFamily family);

/// nu^(-1/2), the normalization of the fractional Poisson sum.
double fp_scale(double nu);
/// lambda^(-1/(2 eta)), the normalization of the COMP sum.
double comp_scale(double lambda, double eta);

/// S_nu = W_1 + ... + W_N with N ~ FP(nu, kappa); 0 when N = 0.
double fp_raw_sum(const FractionalPoissonLaw& law, const SummandSpec& summands, RngStream& rng);
double fp_random_sum(double nu, double kappa, const SummandSpec& summands, RngStream& rng);

double comp_raw_sum(const CompLaw& law, const SummandSpec& summands, RngStream& rng);
double comp_random_sum(const CompLaw& law, const SummandSpec& summands, RngStream& rng);
/// Builds the COMP table on every call; prefer the CompLaw overload in loops.
double comp_random_sum(double lambda, double eta, const SummandSpec& summands, RngStream& rng);

/// CDF of the standard NML(0, 1, kappa) law, built once per kappa by adaptive
/// trapezoidal integration of nml_density over 12 standard deviations.
class NmlCdf {
 public:
  explicit NmlCdf(double kappa);
  double operator()(double y) const;
  double kappa() const { return kappa_; }
  std::size_t nodes() const;

  struct Grid;

 private:
  double kappa_;
  std::shared_ptr<const Grid> grid_;
};

double std_normal_cdf(double x);

/// sup_x |F_n(x) - F(x)| for the empirical CDF of `sample` (sorted internally).
double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Asymptotic one-sample KS critical value sqrt(-log(alpha/2)/2) / sqrt(n).
double ks_critical_value(std::uint64_t n, double alpha);

enum class SweepKind { fp, comp };
enum class SweepMetric { ks, sup_cf_distance };

std::string to_string(SweepKind kind);
std::string to_string(SweepMetric metric);

struct ConvergenceReport {
  SweepKind kind = SweepKind::fp;
  /// kappa for fp sweeps, eta for comp sweeps.
  double shape = 0.0;
  SweepMetric metric = SweepMetric::ks;
  /// "nml(kappa)" or "std_normal".
  std::string target;
  std::vector<double> parameter_grid;
  std::vector<double> distances;
  std::vector<std::uint64_t> draws;
};

struct SweepConfig {
  SweepKind kind = SweepKind::fp;
  double shape = 0.5;
  std::vector<double> grid;
  SummandSpec summands;
  std::uint64_t draws_per_point = 100'000;
  SweepMetric metric = SweepMetric::ks;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// Normalized sums at each grid value (nu or lambda) compared to the limit law:
/// NML(0, 1, kappa) for fp sums, N(0, 1) for COMP sums. Draws are generated in
/// fixed blocks with their own streams, so results do not depend on `threads`.
ConvergenceReport convergence_sweep(const SweepConfig& config);

/// Draws `count` normalized sums at one grid value (same streams as the sweep).
std::vector<double> sweep_draws(const SweepConfig& config, std::size_t grid_index);

struct McExperimentConfig {
  double mu = 0.5;
  double sigma2 = 1.0;
  std::vector<double> kappa_grid{0.2, 0.3, 0.5, 0.6, 0.8};
  std::vector<std::uint64_t> sample_sizes{200, 500, 1000, 2000};
  std::uint64_t replications = 5000;
  std::uint64_t base_seed = 1;

  void validate() const;
};

/// Summary of the estimates in one cell, in the parameter order (mu, sigma2, kappa).
struct McAggregate {
  std::uint64_t count = 0;
  std::array<double, 3> mean_est{};
  std::array<double, 3> rmse{};
  /// Standard deviation of the estimates across replications.
  std::array<double, 3> se_empirical{};
  /// Mean of the plug-in standard errors over replications that report one.
  std::array<double, 3> se_theoretical{};
};

struct McTableRow {
  double kappa = 0.0;
  std::uint64_t n = 0;
  std::uint64_t replications = 0;
  /// Degenerate samples that produced no fit.
  std::uint64_t failures = 0;
  std::uint64_t clamped_low = 0;
  std::uint64_t clamped_high = 0;
  /// Every fit, clamped ones included at their clamped kappa.
  McAggregate all;
  /// Only fits where h(kappa) = omega has a root in (0, 1].
  McAggregate interior;
  /// Standard errors from the asymptotic covariance at the true parameters.
  std::array<double, 3> se_at_truth{};
};

/// One row per (kappa, n) cell, kappa-major. Replication r of cell c uses the
/// stream (base_seed, stream_hash(c, r)); aggregates are bit-identical for any
/// thread count.
std::vector<McTableRow> run_mc_tables(const McExperimentConfig& config, unsigned threads = 1);

}  // namespace fracsum
