#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fracsum/distributions.hpp"
#include "fracsum/errors.hpp"
#include "fracsum/special_functions.hpp"

namespace fracsum {

namespace {

constexpr double kLog2Pi = 1.83787706640934548356;
// Largest truncated support we are willing to tabulate.
constexpr std::uint64_t kMaxHorizon = 20'000'000;

double log_term(double log_lambda, double eta, std::uint64_t j) {
  const double dj = static_cast<double>(j);
  return dj * log_lambda - eta * log_gamma(dj + 1.0);
}

double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

}  // namespace

struct CompLaw::Table {
  double log_h = 0.0;
  std::vector<double> cdf;  // normalized over 0..horizon
  MeanVar moments;
};

CompLaw::CompLaw(double lambda, double eta, double trunc_tol)
    : lambda_(lambda), eta_(eta), trunc_tol_(trunc_tol) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("CompLaw: lambda must be positive, got " + std::to_string(lambda));
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw DomainError("CompLaw: eta must be positive, got " + std::to_string(eta));
  }
  if (!(trunc_tol > 0.0)) throw DomainError("CompLaw: trunc_tol must be positive");

  const double log_lambda = std::log(lambda);
  const double mode = std::pow(lambda, 1.0 / eta);
  const double sd = std::sqrt(mode / eta);
  const double min_horizon = std::ceil(mode + 20.0 * sd);
  const double log_tol = std::log(trunc_tol);

  std::vector<double> log_terms;
  double log_sum = log_term(log_lambda, eta, 0);
  log_terms.push_back(log_sum);
  for (std::uint64_t j = 1;; ++j) {
    const double lt = log_term(log_lambda, eta, j);
    log_terms.push_back(lt);
    log_sum = log_add(log_sum, lt);
    const double ratio = log_lambda - eta * std::log(static_cast<double>(j + 1));
    if (static_cast<double>(j) >= min_horizon && ratio < 0.0 && lt - log_sum < log_tol) break;
    if (j >= kMaxHorizon) {
      const double r = std::exp(ratio);
      std::string tail = (r < 1.0)
          ? std::to_string(std::exp(lt - log_sum) * r / (1.0 - r))
          : std::string("unbounded (terms still increasing)");
      throw EvaluationError("CompLaw: truncation horizon " + std::to_string(kMaxHorizon) +
                            " exceeded for lambda=" + std::to_string(lambda) +
                            ", eta=" + std::to_string(eta) + "; tail mass beyond it " + tail);
    }
  }

  auto table = std::make_shared<Table>();
  table->log_h = log_sum;
  table->cdf.resize(log_terms.size());
  double acc = 0.0;
  double mean = 0.0;
  for (std::size_t j = 0; j < log_terms.size(); ++j) {
    const double p = std::exp(log_terms[j] - log_sum);
    acc += p;
    mean += static_cast<double>(j) * p;
    table->cdf[j] = acc;
  }
  for (double& c : table->cdf) c /= acc;
  mean /= acc;
  double var = 0.0;
  for (std::size_t j = 0; j < log_terms.size(); ++j) {
    const double d = static_cast<double>(j) - mean;
    var += d * d * std::exp(log_terms[j] - log_sum);
  }
  table->moments = {mean, var / acc};
  table_ = std::move(table);
}

std::uint64_t CompLaw::horizon() const { return table_->cdf.size() - 1; }

double comp_log_normalizer(const CompLaw& law) { return law.table_->log_h; }

double comp_log_normalizer_approx(double lambda, double eta) {
  if (!(lambda > 0.0 && eta > 0.0)) {
    throw DomainError("comp_log_normalizer_approx: lambda and eta must be positive");
  }
  return eta * std::pow(lambda, 1.0 / eta) - (eta - 1.0) / (2.0 * eta) * std::log(lambda) -
         0.5 * (eta - 1.0) * kLog2Pi - 0.5 * std::log(eta);
}

double comp_mean_approx(double lambda, double eta) {
  if (!(lambda > 0.0 && eta > 0.0)) {
    throw DomainError("comp_mean_approx: lambda and eta must be positive");
  }
  return std::pow(lambda, 1.0 / eta) - (eta - 1.0) / (2.0 * eta);
}

double comp_pmf(const CompLaw& law, std::uint64_t j) {
  return std::exp(log_term(std::log(law.lambda()), law.eta(), j) - law.table_->log_h);
}

std::uint64_t comp_sample(const CompLaw& law, RngStream& rng) {
  const auto& cdf = law.table_->cdf;
  const double u = rng.uniform();
  auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<std::uint64_t>(it - cdf.begin());
}

MeanVar comp_mean_var(const CompLaw& law) { return law.table_->moments; }

}  // namespace fracsum
