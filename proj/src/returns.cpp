#include "fracsum/returns.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>

#include "fracsum/errors.hpp"
#include "fracsum/rng.hpp"

namespace fracsum {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

std::chrono::year_month_day parse_date(const std::string& text, std::size_t line) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (text.size() != 10 || std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    fail(line, "expected an ISO-8601 date YYYY-MM-DD, got '" + text + "'");
  }
  const std::chrono::year_month_day date{std::chrono::year{y}, std::chrono::month{m},
                                         std::chrono::day{d}};
  if (!date.ok()) fail(line, "invalid calendar date '" + text + "'");
  return date;
}

double parse_number(const std::string& text, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    fail(line, "cannot parse number '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v)) fail(line, "cannot parse number '" + text + "'");
  return v;
}

// Reads `date,value` rows after a required header; dates must increase.
ReturnsSeries read_dated_column(std::istream& csv, const char* expected_value_header) {
  std::string raw;
  std::size_t line = 0;
  bool header_seen = false;
  ReturnsSeries out;
  std::optional<std::chrono::year_month_day> previous;
  while (std::getline(csv, raw)) {
    ++line;
    std::string row = trim(raw);
    if (line == 1 && row.rfind("\xEF\xBB\xBF", 0) == 0) row = row.substr(3);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string::npos || row.find(',', comma + 1) != std::string::npos) {
      fail(line, "expected exactly two comma-separated fields");
    }
    const std::string first = trim(row.substr(0, comma));
    const std::string second = trim(row.substr(comma + 1));
    if (!header_seen) {
      if (first != "date" || (expected_value_header && second != expected_value_header)) {
        fail(line, std::string("expected header 'date,") +
                       (expected_value_header ? expected_value_header : "<value>") + "'");
      }
      header_seen = true;
      continue;
    }
    const auto date = parse_date(first, line);
    if (previous && !(date > *previous)) fail(line, "dates must be strictly increasing");
    previous = date;
    out.dates.push_back(first);
    out.values.push_back(parse_number(second, line));
  }
  if (!header_seen) throw DataError("empty input: a header row is required");
  return out;
}

}  // namespace

ReturnsSeries log_returns_from_prices(std::istream& csv) {
  const ReturnsSeries prices = read_dated_column(csv, "close");
  ReturnsSeries out;
  for (std::size_t i = 0; i < prices.values.size(); ++i) {
    if (!(prices.values[i] > 0.0)) {
      throw DataError("price on " + prices.dates[i] + " must be positive, got " +
                      std::to_string(prices.values[i]));
    }
    if (i == 0) continue;
    out.dates.push_back(prices.dates[i]);
    out.values.push_back(std::log(prices.values[i] / prices.values[i - 1]));
  }
  return out;
}

ReturnsSeries read_returns_csv(std::istream& csv) { return read_dated_column(csv, nullptr); }

ReturnsSeries synthetic_returns(const NmlLaw& law, std::size_t count, std::uint64_t seed) {
  using namespace std::chrono;
  ReturnsSeries out;
  RngStream rng(seed, 0);
  sys_days day = sys_days{year{2000} / January / 3};
  char buf[16];
  for (std::size_t i = 0; i < count; ++i) {
    const year_month_day ymd{day};
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    out.dates.emplace_back(buf);
    out.values.push_back(nml_sample(law, rng));
    day += days{1};
  }
  return out;
}

FitModel parse_fit_model(const std::string& name) {
  if (name == "nml") return FitModel::nml;
  if (name == "normal") return FitModel::normal;
  if (name == "laplace") return FitModel::laplace;
  throw DomainError("unknown model '" + name + "' (expected nml, normal or laplace)");
}

std::string to_string(FitModel model) {
  switch (model) {
    case FitModel::nml:
      return "nml";
    case FitModel::normal:
      return "normal";
    case FitModel::laplace:
      return "laplace";
  }
  return "unknown";
}

FitComparisonReport fit_comparison(std::span<const double> returns,
                                   const std::vector<FitModel>& models) {
  if (returns.size() < 5) {
    throw DataError("fit needs at least 5 returns, got " + std::to_string(returns.size()));
  }
  FitComparisonReport report;
  report.n = returns.size();
  report.empirical = empirical_cumulants(returns);
  for (FitModel model : models) {
    ModelFitRow row;
    row.model = model;
    switch (model) {
      case FitModel::nml: {
        const FitResult fit = mm_fit(MomentSummary::from_sample(returns));
        row.mu = fit.mu_hat;
        row.sigma2 = fit.sigma2_hat;
        row.shape = fit.kappa_hat;
        row.se_mu = fit.se[0];
        row.se_sigma2 = fit.se[1];
        row.se_shape = fit.se[2];
        row.cumulants = fitted_cumulants(fit);
        row.boundary_flag = fit.boundary_flag;
        row.kurtosis_statistic = fit.kurtosis_statistic;
        break;
      }
      case FitModel::normal: {
        const NormalFit fit = normal_fit(returns);
        row.mu = fit.mu;
        row.sigma2 = fit.sigma2;
        row.shape = 1.0;
        row.se_mu = fit.se_mu;
        row.se_sigma2 = fit.se_sigma2;
        row.cumulants = {fit.mu, fit.sigma2, 0.0, 0.0};
        break;
      }
      case FitModel::laplace: {
        const LaplaceFit fit = laplace_fit(returns);
        row.mu = fit.mu;
        row.sigma2 = fit.sigma2;
        row.shape = 0.0;
        row.se_mu = fit.se_mu;
        row.se_sigma2 = fit.se_sigma2;
        row.cumulants = {fit.mu, fit.variance(), 0.0, 3.0};
        break;
      }
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace fracsum
