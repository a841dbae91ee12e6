#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracsum/estimation.hpp"

namespace fracsum {

/// Daily log-returns with their ISO-8601 dates (strictly increasing).
struct ReturnsSeries {
  std::vector<std::string> dates;
  std::vector<double> values;
};

/// Reads a `date,close` CSV (header required) and returns ln(P_t / P_{t-1}).
/// Throws DataError naming the line for unparseable rows, bad or
/// non-increasing dates, and non-positive prices.
ReturnsSeries log_returns_from_prices(std::istream& csv);

/// Reads a two-column `date,<value>` CSV of returns, e.g. the output of
/// log_returns_from_prices. Same validation rules.
ReturnsSeries read_returns_csv(std::istream& csv);

/// Synthetic returns from NML(mu, sigma2, kappa) with consecutive calendar
/// dates starting 2000-01-03; used when real data cannot be shipped.
ReturnsSeries synthetic_returns(const NmlLaw& law, std::size_t count, std::uint64_t seed);

/// Parameters of the demo series: an NML fit to daily IBOVESPA
/// log-returns, with that series' length.
inline constexpr double kDemoMu = 0.00021;
inline constexpr double kDemoSigma2 = 0.00018;
inline constexpr double kDemoKappa = 0.49123;
inline constexpr std::size_t kDemoLength = 2226;

enum class FitModel { nml, normal, laplace };

FitModel parse_fit_model(const std::string& name);
std::string to_string(FitModel model);

struct ModelFitRow {
  FitModel model = FitModel::nml;
  double mu = 0.0;
  double sigma2 = 0.0;
  /// kappa for NML; the boundary values 1 (normal) and 0 (Laplace) otherwise.
  double shape = 0.0;
  std::optional<double> se_mu;
  std::optional<double> se_sigma2;
  std::optional<double> se_shape;
  FittedCumulants cumulants;
  /// Only meaningful for NML.
  BoundaryFlag boundary_flag = BoundaryFlag::interior;
  double kurtosis_statistic = 0.0;
};

struct FitComparisonReport {
  std::uint64_t n = 0;
  EmpiricalCumulants empirical;
  std::vector<ModelFitRow> rows;
};

/// Fits each requested model to the same series. Needs at least 5 values.
FitComparisonReport fit_comparison(std::span<const double> returns,
                                   const std::vector<FitModel>& models);

}  // namespace fracsum
