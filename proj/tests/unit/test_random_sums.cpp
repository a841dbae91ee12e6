#include <cmath>
#include <vector>

#include <doctest.h>

#include "fracsum/errors.hpp"
#include "fracsum/random_sums.hpp"

using namespace fracsum;

TEST_CASE("Normalizations") {
  CHECK(fp_scale(100.0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(comp_scale(1e4, 2.0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(comp_scale(9.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(fp_scale(0.0), DomainError);
}

TEST_CASE("Empty sums are zero") {
  RngStream rng(1, 0);
  for (auto spec : {SummandSpec::standard_normal(), SummandSpec::rademacher(),
                    SummandSpec::centered_uniform()}) {
    CHECK(spec.sum(0, rng) == 0.0);
  }
  // With nu tiny, N = 0 almost surely.
  const FractionalPoissonLaw law(1e-12, 0.5);
  CHECK(fp_raw_sum(law, SummandSpec::rademacher(), rng) == 0.0);
}

TEST_CASE("Summand sums have mean 0 and variance N") {
  const std::uint64_t count = 25;
  for (auto spec : {SummandSpec::standard_normal(), SummandSpec::rademacher(),
                    SummandSpec::centered_uniform(),
                    SummandSpec::custom_table({-2.0, 0.5}, {0.2, 0.8})}) {
    RngStream rng(3, 1);
    const int draws = 100000;
    double s1 = 0.0;
    double s2 = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double v = spec.sum(count, rng);
      s1 += v;
      s2 += v * v;
    }
    const double mean = s1 / draws;
    const double var = s2 / draws - mean * mean;
    CHECK(std::abs(mean) < 5.0 * std::sqrt(25.0 / draws));
    CHECK(var == doctest::Approx(25.0).epsilon(0.03));
  }
}

TEST_CASE("Rademacher sums have the parity of N") {
  RngStream rng(4, 0);
  for (std::uint64_t n : {1u, 2u, 7u, 100u}) {
    for (int i = 0; i < 50; ++i) {
      const double v = SummandSpec::rademacher().sum(n, rng);
      CHECK(std::fmod(std::abs(v), 2.0) == static_cast<double>(n % 2));
      CHECK(std::abs(v) <= static_cast<double>(n));
    }
  }
}

TEST_CASE("Custom tables are validated") {
  CHECK_THROWS_AS(SummandSpec::custom_table({-1.0, 1.0}, {0.3, 0.7}), DomainError);
  CHECK_THROWS_AS(SummandSpec::custom_table({-2.0, 2.0}, {0.5, 0.5}), DomainError);
  CHECK_THROWS_AS(SummandSpec::custom_table({-1.0, 1.0}, {0.5}), DomainError);
  CHECK_THROWS_AS(SummandSpec::custom_table({-1.0, 1.0}, {0.6, 0.6}), DomainError);
  CHECK_NOTHROW(SummandSpec::custom_table({-1.0, 1.0}, {0.5, 0.5}));
  CHECK(parse_summand_family("rademacher") == SummandFamily::rademacher);
  CHECK_THROWS_AS(parse_summand_family("cauchy"), DomainError);
}

TEST_CASE("Normalized sums are the raw sums times the normalization") {
  const FractionalPoissonLaw fp(40.0, 0.7);
  const CompLaw comp(50.0, 1.5);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RngStream a(seed, 3);
    RngStream b(seed, 3);
    CHECK(fp_random_sum(40.0, 0.7, SummandSpec::rademacher(), a) ==
          fp_raw_sum(fp, SummandSpec::rademacher(), b) * fp_scale(40.0));
    RngStream c(seed, 4);
    RngStream d(seed, 4);
    CHECK(comp_random_sum(comp, SummandSpec::standard_normal(), c) ==
          comp_raw_sum(comp, SummandSpec::standard_normal(), d) * comp_scale(50.0, 1.5));
  }
}

TEST_CASE("Normalized FP sums have mean zero") {
  RngStream rng(8, 0);
  const int draws = 1000000;
  double s1 = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = fp_random_sum(100.0, 0.6, SummandSpec::rademacher(), rng);
    s1 += v;
    s2 += v * v;
  }
  const double mean = s1 / draws;
  CHECK(std::abs(mean) <= 3.0 * std::sqrt((s2 / draws - mean * mean) / draws));
}

TEST_CASE("Raw FP sum variance over nu tends to 1/Gamma(1+kappa)") {
  const double nu = 1e4;
  const double kappa = 0.6;
  const FractionalPoissonLaw law(nu, kappa);
  RngStream rng(9, 0);
  const int draws = 200000;
  double s2 = 0.0;
  double s4 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double raw = fp_raw_sum(law, SummandSpec::rademacher(), rng);
    const double r2 = raw * raw / nu;
    s2 += r2;
    s4 += r2 * r2;
  }
  const double var = s2 / draws;
  const double se = std::sqrt((s4 / draws - var * var) / draws);
  CHECK(std::abs(var - 1.0 / std::tgamma(1.0 + kappa)) <= 3.0 * se);
}

TEST_CASE("NmlCdf is a symmetric cdf agreeing with known cases") {
  const NmlCdf half(0.5);
  CHECK(half(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  double previous = 0.0;
  for (double y = -15.0; y <= 15.0; y += 0.1) {
    const double v = half(y);
    CHECK(v >= previous);
    CHECK(std::abs(v + half(-y) - 1.0) < 1e-12);
    previous = v;
  }
  CHECK(half(-1e9) == 0.0);
  CHECK(half(1e9) == 1.0);
  const NmlCdf normal(1.0);
  for (double y : {-2.0, -0.3, 0.8, 3.0}) {
    CHECK(std::abs(normal(y) - std_normal_cdf(y)) < 1e-7);
  }
  // Derivative recovers the density.
  const NmlLaw law(0.0, 1.0, 0.5);
  for (double y : {0.4, 1.5, 3.0}) {
    const double step = 1e-3;
    CHECK((half(y + step) - half(y - step)) / (2 * step) ==
          doctest::Approx(nml_density(law, y)).epsilon(1e-4));
  }
}

TEST_CASE("KS statistic and critical value") {
  CHECK(ks_critical_value(100000, 0.01) == doctest::Approx(0.005147).epsilon(1e-3));
  const std::vector<double> one{0.0};
  CHECK(ks_statistic(one, std_normal_cdf) == doctest::Approx(0.5));
  std::vector<double> grid;
  for (int i = 0; i < 1000; ++i) grid.push_back((i + 0.5) / 1000.0);
  CHECK(ks_statistic(grid, [](double x) { return std::clamp(x, 0.0, 1.0); }) ==
        doctest::Approx(0.0005).epsilon(1e-9));
}

TEST_CASE("NML samples pass a KS test against NmlCdf") {
  const NmlLaw law(0.0, 1.0, 0.5);
  RngStream rng(12, 0);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = nml_sample(law, rng);
  const NmlCdf cdf(0.5);
  CHECK(ks_statistic(xs, [&](double y) { return cdf(y); }) < ks_critical_value(xs.size(), 0.01));
}

TEST_CASE("Sweeps are deterministic, thread-independent and converge") {
  SweepConfig config;
  config.kind = SweepKind::fp;
  config.shape = 0.5;
  config.grid = {10.0, 1000.0};
  config.summands = SummandSpec::rademacher();
  config.draws_per_point = 20000;
  config.seed = 5;
  config.threads = 1;
  const ConvergenceReport a = convergence_sweep(config);
  config.threads = 3;
  const ConvergenceReport b = convergence_sweep(config);
  CHECK(a.distances == b.distances);
  CHECK(a.target == "nml(0.5)");
  CHECK(a.distances[1] < a.distances[0]);
  CHECK(a.distances[1] < ks_critical_value(20000, 0.01));

  config.kind = SweepKind::comp;
  config.shape = 2.0;
  config.grid = {1e4};
  config.metric = SweepMetric::sup_cf_distance;
  const ConvergenceReport c = convergence_sweep(config);
  CHECK(c.target == "std_normal");
  CHECK(c.distances[0] < 0.05);

  config.grid = {};
  CHECK_THROWS_AS(convergence_sweep(config), DomainError);
}

TEST_CASE("Monte Carlo tables are reproducible across thread counts") {
  McExperimentConfig config;
  config.kappa_grid = {0.5};
  config.sample_sizes = {200};
  config.replications = 40;
  config.base_seed = 3;
  const auto one = run_mc_tables(config, 1);
  const auto many = run_mc_tables(config, 4);
  REQUIRE(one.size() == 1);
  CHECK(one[0].all.mean_est == many[0].all.mean_est);
  CHECK(one[0].all.rmse == many[0].all.rmse);
  CHECK(one[0].interior.count + one[0].clamped_low + one[0].clamped_high + one[0].failures == 40);
  CHECK(std::abs(one[0].all.mean_est[0] - 0.5) < 0.2);
  config.replications = 0;
  CHECK_THROWS_AS(run_mc_tables(config), DomainError);
}

TEST_CASE("The FP limit depends on the summands only through two moments") {
  SweepConfig config;
  config.kind = SweepKind::fp;
  config.shape = 0.5;
  config.grid = {1e4};
  config.draws_per_point = 100000;
  config.seed = 17;
  config.summands = SummandSpec::standard_normal();
  const double normal = convergence_sweep(config).distances[0];
  config.summands = SummandSpec::rademacher();
  const double rademacher = convergence_sweep(config).distances[0];
  CHECK(std::abs(normal - rademacher) <= 0.01);
}
