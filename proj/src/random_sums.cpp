#include "fracsum/random_sums.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>

#include "fracsum/errors.hpp"
#include "fracsum/special_functions.hpp"
#include "parallel.hpp"

namespace fracsum {

namespace {

constexpr double kSqrt3 = 1.73205080756887729353;
// Draws per independent stream in a sweep; fixes the stream layout so that
// the thread count cannot change the numbers.
constexpr std::uint64_t kSweepBlock = 10'000;

}  // namespace

// ---------------------------------------------------------------------------
// Summands

SummandSpec SummandSpec::custom_table(std::vector<double> values,
                                      std::vector<double> probabilities) {
  if (values.empty() || values.size() != probabilities.size()) {
    throw DomainError("custom summand table: values and probabilities must be non-empty and "
                      "of equal length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || !(probabilities[i] >= 0.0)) {
      throw DomainError("custom summand table: entries must be finite with non-negative "
                        "probabilities");
    }
    total += probabilities[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw DomainError("custom summand table: probabilities sum to " + std::to_string(total));
  }
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    mean += probabilities[i] * values[i];
    second += probabilities[i] * values[i] * values[i];
  }
  if (std::abs(mean) > 1e-9 || std::abs(second - mean * mean - 1.0) > 1e-9) {
    throw DomainError("custom summand table: need mean 0 and variance 1, got mean " +
                      std::to_string(mean) + ", variance " + std::to_string(second - mean * mean));
  }
  SummandSpec spec(SummandFamily::custom_table);
  spec.values_ = std::move(values);
  spec.probabilities_ = std::move(probabilities);
  return spec;
}

double SummandSpec::sum(std::uint64_t count, RngStream& rng) const {
  if (count == 0) return 0.0;
  switch (family_) {
    case SummandFamily::standard_normal:
      return std::sqrt(static_cast<double>(count)) * rng.normal();
    case SummandFamily::rademacher: {
      const std::uint64_t heads = rng.binomial(count, 0.5);
      return 2.0 * static_cast<double>(heads) - static_cast<double>(count);
    }
    case SummandFamily::centered_uniform: {
      double s = 0.0;
      for (std::uint64_t i = 0; i < count; ++i) s += kSqrt3 * (2.0 * rng.uniform() - 1.0);
      return s;
    }
    case SummandFamily::custom_table: {
      // Multinomial cell counts by successive conditional binomials.
      std::uint64_t remaining = count;
      double mass_left = 1.0;
      double s = 0.0;
      for (std::size_t i = 0; i + 1 < values_.size() && remaining > 0; ++i) {
        const double p = std::clamp(probabilities_[i] / mass_left, 0.0, 1.0);
        const std::uint64_t c = rng.binomial(remaining, p);
        s += static_cast<double>(c) * values_[i];
        remaining -= c;
        mass_left -= probabilities_[i];
      }
      return s + static_cast<double>(remaining) * values_.back();
    }
  }
  return 0.0;
}

SummandFamily parse_summand_family(const std::string& name) {
  if (name == "standard_normal" || name == "normal") return SummandFamily::standard_normal;
  if (name == "rademacher") return SummandFamily::rademacher;
  if (name == "centered_uniform" || name == "uniform") return SummandFamily::centered_uniform;
  if (name == "custom_table") return SummandFamily::custom_table;
  throw DomainError("unknown summand family '" + name + "'");
}

std::string to_string(SummandFamily family) {
  switch (family) {
    case SummandFamily::standard_normal:
      return "standard_normal";
    case SummandFamily::rademacher:
      return "rademacher";
    case SummandFamily::centered_uniform:
      return "centered_uniform";
    case SummandFamily::custom_table:
      return "custom_table";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Random sums

double fp_scale(double nu) {
  if (!(nu > 0.0)) throw DomainError("fp_scale: nu must be positive");
  return 1.0 / std::sqrt(nu);
}

double comp_scale(double lambda, double eta) {
  if (!(lambda > 0.0 && eta > 0.0)) throw DomainError("comp_scale: lambda and eta must be positive");
  return std::pow(lambda, -1.0 / (2.0 * eta));
}

double fp_raw_sum(const FractionalPoissonLaw& law, const SummandSpec& summands, RngStream& rng) {
  return summands.sum(fp_sample(law, rng), rng);
}

double fp_random_sum(double nu, double kappa, const SummandSpec& summands, RngStream& rng) {
  return fp_raw_sum(FractionalPoissonLaw(nu, kappa), summands, rng) * fp_scale(nu);
}

double comp_raw_sum(const CompLaw& law, const SummandSpec& summands, RngStream& rng) {
  return summands.sum(comp_sample(law, rng), rng);
}

double comp_random_sum(const CompLaw& law, const SummandSpec& summands, RngStream& rng) {
  return comp_raw_sum(law, summands, rng) * comp_scale(law.lambda(), law.eta());
}

double comp_random_sum(double lambda, double eta, const SummandSpec& summands, RngStream& rng) {
  return comp_random_sum(CompLaw(lambda, eta), summands, rng);
}

// ---------------------------------------------------------------------------
// NML CDF

struct NmlCdf::Grid {
  std::vector<double> y;
  std::vector<double> cum;  // int_0^y f
};

namespace {

std::shared_ptr<const NmlCdf::Grid> build_grid(double kappa);

}  // namespace

NmlCdf::NmlCdf(double kappa) : kappa_(kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) {
    throw DomainError("NmlCdf: kappa must lie in (0, 1], got " + std::to_string(kappa));
  }
  static std::mutex mutex;
  static std::map<double, std::shared_ptr<const Grid>> cache;
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(kappa);
    if (it != cache.end()) {
      grid_ = it->second;
      return;
    }
  }
  auto grid = build_grid(kappa);
  std::lock_guard<std::mutex> lock(mutex);
  grid_ = cache.emplace(kappa, grid).first->second;
}

namespace {

struct GridBuilder {
  const NmlLaw law;
  double tol_per_unit;
  std::vector<double> y;
  std::vector<double> f;

  double density(double x) const { return nml_density(law, x); }

  // Appends nodes in (a, b]; a is already stored.
  void refine(double a, double fa, double b, double fb, int depth) {
    const double m = 0.5 * (a + b);
    const double fm = density(m);
    const double coarse = 0.5 * (b - a) * (fa + fb);
    const double fine = 0.25 * (b - a) * (fa + 2.0 * fm + fb);
    if (depth >= 24 || std::abs(fine - coarse) <= tol_per_unit * (b - a)) {
      y.push_back(m);
      f.push_back(fm);
      y.push_back(b);
      f.push_back(fb);
      return;
    }
    refine(a, fa, m, fm, depth + 1);
    refine(m, fm, b, fb, depth + 1);
  }
};

std::shared_ptr<const NmlCdf::Grid> build_grid(double kappa) {
  const double sd = 1.0 / std::sqrt(std::exp(log_gamma(kappa + 1.0)));
  const double upper = 12.0 * sd;
  GridBuilder b{NmlLaw(0.0, 1.0, kappa), 1e-7 / upper, {}, {}};
  constexpr int kInitial = 96;
  b.y.push_back(0.0);
  b.f.push_back(b.density(0.0));
  for (int i = 0; i < kInitial; ++i) {
    const double lo = upper * i / kInitial;
    const double hi = upper * (i + 1) / kInitial;
    b.refine(lo, b.f.back(), hi, b.density(hi), 0);
  }
  auto grid = std::make_shared<NmlCdf::Grid>();
  grid->y = std::move(b.y);
  grid->cum.resize(grid->y.size());
  grid->cum[0] = 0.0;
  for (std::size_t i = 1; i < grid->y.size(); ++i) {
    grid->cum[i] = grid->cum[i - 1] + 0.5 * (grid->y[i] - grid->y[i - 1]) * (b.f[i] + b.f[i - 1]);
  }
  return grid;
}

}  // namespace

double NmlCdf::operator()(double y) const {
  if (std::isnan(y)) throw DomainError("NmlCdf: argument is NaN");
  const double a = std::abs(y);
  const auto& ys = grid_->y;
  const auto& cum = grid_->cum;
  double half;
  if (a >= ys.back()) {
    half = 0.5;
  } else {
    const auto it = std::upper_bound(ys.begin(), ys.end(), a);
    const std::size_t i = static_cast<std::size_t>(it - ys.begin());
    const double t = (a - ys[i - 1]) / (ys[i] - ys[i - 1]);
    half = std::min(0.5, cum[i - 1] + t * (cum[i] - cum[i - 1]));
  }
  return y >= 0.0 ? 0.5 + half : 0.5 - half;
}

std::size_t NmlCdf::nodes() const { return grid_->y.size(); }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("ks_statistic: empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical_value(std::uint64_t n, double alpha) {
  if (n == 0 || !(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("ks_critical_value: need n >= 1 and alpha in (0, 1)");
  }
  return std::sqrt(-0.5 * std::log(0.5 * alpha)) / std::sqrt(static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Convergence sweeps

std::string to_string(SweepKind kind) { return kind == SweepKind::fp ? "fp" : "comp"; }

std::string to_string(SweepMetric metric) {
  return metric == SweepMetric::ks ? "ks" : "sup_cf_distance";
}

namespace {

std::string format_shape(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void validate_sweep(const SweepConfig& c) {
  if (c.grid.empty()) throw DomainError("convergence_sweep: grid is empty");
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    if (!(c.grid[i] > 0.0) || !std::isfinite(c.grid[i])) {
      throw DomainError("convergence_sweep: grid values must be positive and finite");
    }
    if (i > 0 && !(c.grid[i] > c.grid[i - 1])) {
      throw DomainError("convergence_sweep: grid must be strictly increasing");
    }
  }
  if (c.draws_per_point == 0) throw DomainError("convergence_sweep: draws_per_point must be positive");
  if (c.kind == SweepKind::fp && !(c.shape > 0.0 && c.shape <= 1.0)) {
    throw DomainError("convergence_sweep: kappa must lie in (0, 1]");
  }
  if (c.kind == SweepKind::comp && !(c.shape > 0.0)) {
    throw DomainError("convergence_sweep: eta must be positive");
  }
}

double sup_cf_distance(std::span<const double> sample, const std::function<double(double)>& cf) {
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double t = 0.05 * k;
    double re = 0.0;
    double im = 0.0;
    for (double x : sample) {
      re += std::cos(t * x);
      im += std::sin(t * x);
    }
    d = std::max(d, std::hypot(re / n - cf(t), im / n));
  }
  return d;
}

}  // namespace

std::vector<double> sweep_draws(const SweepConfig& config, std::size_t grid_index) {
  validate_sweep(config);
  if (grid_index >= config.grid.size()) throw DomainError("sweep_draws: grid index out of range");
  const double value = config.grid[grid_index];
  std::optional<CompLaw> comp;
  std::optional<FractionalPoissonLaw> fp;
  double scale;
  if (config.kind == SweepKind::comp) {
    comp.emplace(value, config.shape);
    scale = comp_scale(value, config.shape);
  } else {
    fp.emplace(value, config.shape);
    scale = fp_scale(value);
  }
  const std::uint64_t n = config.draws_per_point;
  const std::uint64_t blocks = (n + kSweepBlock - 1) / kSweepBlock;
  const std::uint64_t point_key = stream_hash(static_cast<std::uint64_t>(config.kind), grid_index);
  std::vector<double> out(n);
  detail::parallel_for(blocks, config.threads, [&](std::size_t block) {
    RngStream rng(config.seed, stream_hash(point_key, block));
    const std::uint64_t begin = block * kSweepBlock;
    const std::uint64_t end = std::min(n, begin + kSweepBlock);
    for (std::uint64_t i = begin; i < end; ++i) {
      const double raw = comp ? comp_raw_sum(*comp, config.summands, rng)
                              : fp_raw_sum(*fp, config.summands, rng);
      out[i] = raw * scale;
    }
  });
  return out;
}

ConvergenceReport convergence_sweep(const SweepConfig& config) {
  validate_sweep(config);
  ConvergenceReport report;
  report.kind = config.kind;
  report.shape = config.shape;
  report.metric = config.metric;
  report.parameter_grid = config.grid;

  std::function<double(double)> cdf;
  std::function<double(double)> cf;
  if (config.kind == SweepKind::fp) {
    report.target = "nml(" + format_shape(config.shape) + ")";
    const double kappa = config.shape;
    if (config.metric == SweepMetric::ks) {
      if (kappa == 1.0) {
        cdf = std_normal_cdf;
      } else {
        cdf = NmlCdf(kappa);
      }
    }
    cf = [kappa](double t) { return mittag_leffler(kappa, -0.5 * t * t); };
  } else {
    report.target = "std_normal";
    cdf = std_normal_cdf;
    cf = [](double t) { return std::exp(-0.5 * t * t); };
  }

  for (std::size_t i = 0; i < config.grid.size(); ++i) {
    const std::vector<double> draws = sweep_draws(config, i);
    report.distances.push_back(config.metric == SweepMetric::ks ? ks_statistic(draws, cdf)
                                                                : sup_cf_distance(draws, cf));
    report.draws.push_back(draws.size());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Monte Carlo tables

void McExperimentConfig::validate() const {
  if (!(sigma2 > 0.0) || !std::isfinite(mu)) {
    throw DomainError("McExperimentConfig: need finite mu and sigma2 > 0");
  }
  if (kappa_grid.empty() || sample_sizes.empty()) {
    throw DomainError("McExperimentConfig: kappa grid and sample sizes must be non-empty");
  }
  for (double k : kappa_grid) {
    if (!(k > 0.0 && k <= 1.0)) throw DomainError("McExperimentConfig: kappa must lie in (0, 1]");
  }
  for (auto n : sample_sizes) {
    if (n < 2) throw DomainError("McExperimentConfig: sample sizes must be at least 2");
  }
  if (replications < 1) throw DomainError("McExperimentConfig: replications must be at least 1");
}

namespace {

struct Replicate {
  bool ok = false;
  std::array<double, 3> est{};
  std::array<std::optional<double>, 3> se;
  BoundaryFlag flag = BoundaryFlag::interior;
};

McAggregate aggregate(const std::vector<Replicate>& reps, const std::array<double, 3>& truth,
                      bool interior_only) {
  auto use = [&](const Replicate& r) {
    return r.ok && (!interior_only || r.flag == BoundaryFlag::interior);
  };
  McAggregate a;
  std::array<double, 3> sum{}, sum_sq_err{}, se_sum{};
  std::array<std::uint64_t, 3> se_count{};
  for (const auto& rep : reps) {
    if (!use(rep)) continue;
    ++a.count;
    for (int p = 0; p < 3; ++p) {
      sum[p] += rep.est[p];
      sum_sq_err[p] += (rep.est[p] - truth[p]) * (rep.est[p] - truth[p]);
      if (rep.se[p]) {
        se_sum[p] += *rep.se[p];
        ++se_count[p];
      }
    }
  }
  const double m = static_cast<double>(a.count);
  for (int p = 0; p < 3; ++p) {
    if (a.count == 0) {
      a.mean_est[p] = a.rmse[p] = a.se_empirical[p] = a.se_theoretical[p] = NAN;
      continue;
    }
    a.mean_est[p] = sum[p] / m;
    a.rmse[p] = std::sqrt(sum_sq_err[p] / m);
    double ss = 0.0;
    for (const auto& rep : reps) {
      if (use(rep)) ss += (rep.est[p] - a.mean_est[p]) * (rep.est[p] - a.mean_est[p]);
    }
    a.se_empirical[p] = a.count > 1 ? std::sqrt(ss / (m - 1.0)) : NAN;
    a.se_theoretical[p] = se_count[p] > 0 ? se_sum[p] / static_cast<double>(se_count[p]) : NAN;
  }
  return a;
}

}  // namespace

std::vector<McTableRow> run_mc_tables(const McExperimentConfig& config, unsigned threads) {
  config.validate();
  std::vector<McTableRow> rows;
  std::uint64_t cell = 0;
  for (double kappa : config.kappa_grid) {
    const NmlLaw law(config.mu, config.sigma2, kappa);
    const std::array<double, 3> truth{config.mu, config.sigma2, kappa};
    for (std::uint64_t n : config.sample_sizes) {
      std::vector<Replicate> reps(config.replications);
      detail::parallel_for(reps.size(), threads, [&](std::size_t r) {
        RngStream rng(config.base_seed, stream_hash(cell, r));
        std::vector<double> sample(n);
        for (auto& v : sample) v = nml_sample(law, rng);
        try {
          const FitResult fit = mm_fit(MomentSummary::from_sample(sample));
          reps[r] = {true, {fit.mu_hat, fit.sigma2_hat, fit.kappa_hat}, fit.se, fit.boundary_flag};
        } catch (const EstimationError&) {
          reps[r].ok = false;
        }
      });

      McTableRow row;
      row.kappa = kappa;
      row.n = n;
      row.replications = config.replications;
      for (const auto& rep : reps) {
        if (!rep.ok) ++row.failures;
        if (rep.ok && rep.flag == BoundaryFlag::clamped_low) ++row.clamped_low;
        if (rep.ok && rep.flag == BoundaryFlag::clamped_high) ++row.clamped_high;
      }
      row.all = aggregate(reps, truth, false);
      row.interior = aggregate(reps, truth, true);
      const Eigen::Matrix3d cov = asymptotic_covariance(config.mu, config.sigma2, kappa);
      for (int p = 0; p < 3; ++p) row.se_at_truth[p] = std::sqrt(cov(p, p) / static_cast<double>(n));
      rows.push_back(row);
      ++cell;
    }
  }
  return rows;
}

}  // namespace fracsum
