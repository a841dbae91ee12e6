#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fracsum/distributions.hpp"
#include "fracsum/errors.hpp"
#include "fracsum/estimation.hpp"
#include "fracsum/random_sums.hpp"
#include "fracsum/returns.hpp"
#include "fracsum/special_functions.hpp"

using json = nlohmann::ordered_json;
using namespace fracsum;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitData = 4;

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  std::string format;
  unsigned threads = 0;
};

// Shortest representation that reads back to the same double.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto result = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, result.ptr);
}

// A column-major table: CSV rows on output, or a JSON object of arrays.
class Table {
 public:
  void add(const std::string& name, std::vector<json> values) {
    if (!columns_.empty() && values.size() != columns_.front().second.size()) {
      throw std::logic_error("Table: column length mismatch for " + name);
    }
    columns_.emplace_back(name, std::move(values));
  }
  void add(const std::string& name, const std::vector<double>& values) {
    add(name, std::vector<json>(values.begin(), values.end()));
  }

  std::string csv() const {
    std::ostringstream os;
    for (std::size_t c = 0; c < columns_.size(); ++c) os << (c ? "," : "") << columns_[c].first;
    os << "\n";
    const std::size_t rows = columns_.empty() ? 0 : columns_.front().second.size();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < columns_.size(); ++c) {
        if (c) os << ",";
        const json& v = columns_[c].second[r];
        if (v.is_number_float()) {
          os << num(v.get<double>());
        } else if (v.is_string()) {
          os << v.get<std::string>();
        } else if (v.is_null()) {
          os << "nan";
        } else {
          os << v.dump();
        }
      }
      os << "\n";
    }
    return os.str();
  }

  json to_json() const {
    json data = json::object();
    for (const auto& [name, values] : columns_) data[name] = values;
    return data;
  }

 private:
  std::vector<std::pair<std::string, std::vector<json>>> columns_;
};

json report_header(const std::string& command) {
  return json{{"schema", "fracsum." + command + "/v1"}, {"command", command}};
}

void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw DataError("cannot open output file '" + g.out + "'");
  f << text;
  if (!f) throw DataError("failed writing output file '" + g.out + "'");
}

void emit_table(const Globals& g, json header, const Table& table) {
  if (g.format == "json") {
    header["data"] = table.to_json();
    emit(g, header.dump(2) + "\n");
  } else if (g.format.empty() || g.format == "csv") {
    emit(g, table.csv());
  } else {
    throw DomainError("format '" + g.format + "' is not supported by this command");
  }
}

// "a:b:h" grid, or a comma list.
std::vector<double> parse_points(const std::string& spec) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw DomainError("cannot parse number '" + s + "'");
    return v;
  };
  try {
    if (spec.find(':') != std::string::npos) {
      std::vector<double> parts;
      std::stringstream ss(spec);
      std::string item;
      while (std::getline(ss, item, ':')) parts.push_back(number(item));
      if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
        throw DomainError("grid must be lo:hi:step with step > 0 and hi >= lo");
      }
      const auto count = static_cast<std::size_t>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
      if (count > 10'000'000) throw DomainError("grid has too many points");
      for (std::size_t i = 0; i <= count; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    } else {
      std::stringstream ss(spec);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(number(item));
    }
  } catch (const std::invalid_argument&) {
    throw DomainError("cannot parse point list '" + spec + "'");
  } catch (const std::out_of_range&) {
    throw DomainError("number out of range in '" + spec + "'");
  }
  if (out.empty()) throw DomainError("empty point list");
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open input file '" + path + "'");
  return f;
}

// ---------------------------------------------------------------------------

struct MlEvalArgs {
  double kappa = 0.5;
  std::string z = "-1";
};

void run_ml_eval(const Globals& g, const MlEvalArgs& a) {
  const auto z = parse_points(a.z);
  std::vector<double> values;
  for (double v : z) values.push_back(mittag_leffler(a.kappa, v));
  Table t;
  t.add("z", z);
  t.add("value", values);
  json h = report_header("ml-eval");
  h["params"] = {{"kappa", a.kappa}};
  emit_table(g, h, t);
}

struct DensityArgs {
  std::string dist;
  double kappa = 0.5;
  double mu = 0.0;
  double sigma2 = 1.0;
  std::string grid;
  std::string method = "auto";
  bool cdf = false;
  std::string quantiles;
};

// Root of F(y) = p for the standard NML law by bisection on the tabulated CDF.
double nml_standard_quantile(const NmlCdf& cdf, double p) {
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void run_density(const Globals& g, const DensityArgs& a) {
  json h = report_header("density");
  h["params"] = {{"dist", a.dist}, {"kappa", a.kappa}};
  Table t;
  if (a.dist == "nml") {
    const NmlLaw law(a.mu, a.sigma2, a.kappa);
    h["params"]["mu"] = a.mu;
    h["params"]["sigma2"] = a.sigma2;
    if (!a.quantiles.empty()) {
      if (a.kappa == 1.0) throw DomainError("quantiles: use the normal quantile for kappa = 1");
      const NmlCdf cdf(a.kappa);
      std::vector<double> ps = parse_points(a.quantiles);
      std::vector<double> qs;
      for (double p : ps) {
        if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile probabilities must lie in (0, 1)");
        qs.push_back(law.mu() + law.sigma() * nml_standard_quantile(cdf, p));
      }
      t.add("p", ps);
      t.add("quantile", qs);
      emit_table(g, h, t);
      return;
    }
    if (a.grid.empty()) throw DomainError("density: --grid is required");
    const auto xs = parse_points(a.grid);
    std::vector<double> f;
    for (double x : xs) {
      f.push_back(a.method == "mixture" ? nml_density_mixture(law, x) : nml_density(law, x));
    }
    t.add("x", xs);
    t.add("density", f);
    if (a.cdf) {
      std::vector<double> c;
      if (a.kappa == 1.0) {
        for (double x : xs) c.push_back(std_normal_cdf((x - law.mu()) / law.sigma()));
      } else {
        const NmlCdf cdf(a.kappa);
        for (double x : xs) c.push_back(cdf((x - law.mu()) / law.sigma()));
      }
      t.add("cdf", c);
    }
  } else if (a.dist == "ml") {
    const MittagLefflerLaw law(a.kappa);
    if (a.grid.empty()) throw DomainError("density: --grid is required");
    const auto xs = parse_points(a.grid);
    std::vector<double> f;
    std::vector<double> c;
    for (double x : xs) {
      f.push_back(x > 0.0 ? ml_density(law, x) : 0.0);
      if (a.cdf) c.push_back(ml_cdf(law, x));
    }
    t.add("x", xs);
    t.add("density", f);
    if (a.cdf) t.add("cdf", c);
  } else {
    throw DomainError("density: unknown --dist '" + a.dist + "' (expected ml or nml)");
  }
  h["params"]["method"] = a.method;
  emit_table(g, h, t);
}

struct PmfArgs {
  std::string dist;
  double nu = 1.0;
  double kappa = 0.5;
  double lambda = 1.0;
  double eta = 1.0;
  std::uint64_t max = 20;
  std::string method = "auto";
};

void run_pmf(const Globals& g, const PmfArgs& a) {
  json h = report_header("pmf");
  std::vector<json> ns;
  std::vector<double> ps;
  if (a.dist == "fp") {
    const FractionalPoissonLaw law(a.nu, a.kappa);
    h["params"] = {{"dist", "fp"}, {"nu", a.nu}, {"kappa", a.kappa}, {"method", a.method}};
    for (std::uint64_t n = 0; n <= a.max; ++n) {
      ns.push_back(n);
      if (a.method == "series") {
        ps.push_back(fp_pmf_series(law, n));
      } else if (a.method == "mixture") {
        ps.push_back(fp_pmf_mixture(law, n));
      } else {
        ps.push_back(fp_pmf(law, n));
      }
    }
  } else if (a.dist == "comp") {
    const CompLaw law(a.lambda, a.eta);
    h["params"] = {{"dist", "comp"}, {"lambda", a.lambda}, {"eta", a.eta}};
    for (std::uint64_t n = 0; n <= a.max; ++n) {
      ns.push_back(n);
      ps.push_back(comp_pmf(law, n));
    }
  } else {
    throw DomainError("pmf: unknown --dist '" + a.dist + "' (expected fp or comp)");
  }
  Table t;
  t.add("n", ns);
  t.add("pmf", ps);
  emit_table(g, h, t);
}

struct SampleArgs {
  std::string dist;
  double nu = 1.0;
  double kappa = 0.5;
  double mu = 0.0;
  double sigma2 = 1.0;
  double lambda = 1.0;
  double eta = 1.0;
  std::uint64_t n = 1000;
};

void run_sample(const Globals& g, const SampleArgs& a) {
  RngStream rng(g.seed, 0);
  std::vector<double> values(a.n);
  json h = report_header("sample");
  if (a.dist == "ml") {
    const MittagLefflerLaw law(a.kappa);
    h["params"] = {{"dist", "ml"}, {"kappa", a.kappa}};
    for (auto& v : values) v = ml_sample(law, rng);
  } else if (a.dist == "fp") {
    const FractionalPoissonLaw law(a.nu, a.kappa);
    h["params"] = {{"dist", "fp"}, {"nu", a.nu}, {"kappa", a.kappa}};
    for (auto& v : values) v = static_cast<double>(fp_sample(law, rng));
  } else if (a.dist == "nml") {
    const NmlLaw law(a.mu, a.sigma2, a.kappa);
    h["params"] = {{"dist", "nml"}, {"mu", a.mu}, {"sigma2", a.sigma2}, {"kappa", a.kappa}};
    for (auto& v : values) v = nml_sample(law, rng);
  } else if (a.dist == "comp") {
    const CompLaw law(a.lambda, a.eta);
    h["params"] = {{"dist", "comp"}, {"lambda", a.lambda}, {"eta", a.eta}};
    for (auto& v : values) v = static_cast<double>(comp_sample(law, rng));
  } else {
    throw DomainError("sample: unknown --dist '" + a.dist + "' (expected ml, fp, nml or comp)");
  }
  h["params"]["n"] = a.n;
  h["params"]["seed"] = g.seed;
  if (g.format == "json" && a.n >= 2) {
    try {
      const auto c = empirical_cumulants(values);
      h["summary"] = {{"mean", c.mean},
                      {"variance", c.variance},
                      {"skewness", c.skewness},
                      {"excess_kurtosis", c.excess_kurtosis}};
    } catch (const EstimationError&) {
      h["summary"] = nullptr;  // constant sample
    }
  }
  Table t;
  t.add("value", values);
  emit_table(g, h, t);
}

void run_returns(const Globals& g, const std::string& input) {
  auto f = open_input(input);
  const ReturnsSeries series = log_returns_from_prices(f);
  Table t;
  t.add("date", std::vector<json>(series.dates.begin(), series.dates.end()));
  t.add("log_return", series.values);
  json h = report_header("returns");
  h["params"] = {{"input", input}};
  emit_table(g, h, t);
}

struct FitArgs {
  std::string input;
  std::string prices;
  bool demo = false;
  std::size_t demo_n = kDemoLength;
  std::string models = "nml,normal,laplace";
};

constexpr const char* kLaplaceConvention =
    "Laplace: mu = sample mean, sigma2 = sample variance taken as the squared scale b^2; "
    "fitted variance 2*sigma2, excess kurtosis 3; se(mu) = b/sqrt(n), se(sigma2) = 2 b^2/sqrt(n)";

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fit_text(const FitComparisonReport& r, const std::string& source) {
  std::ostringstream os;
  char buf[256];
  os << "source: " << source << "  n = " << r.n << "\n\n";
  std::snprintf(buf, sizeof buf, "%-9s %-22s %-22s %-22s\n", "model", "mu (se)", "sigma2 (se)",
                "kappa (se)");
  os << buf;
  auto cell = [](double v, const std::optional<double>& se) {
    char b[64];
    if (se) {
      std::snprintf(b, sizeof b, "%.5f (%.3g)", v, *se);
    } else {
      std::snprintf(b, sizeof b, "%.5f (-------)", v);
    }
    return std::string(b);
  };
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%-9s %-22s %-22s %-22s", to_string(row.model).c_str(),
                  cell(row.mu, row.se_mu).c_str(), cell(row.sigma2, row.se_sigma2).c_str(),
                  cell(row.shape, row.se_shape).c_str());
    os << buf;
    if (row.model == FitModel::nml && row.boundary_flag != BoundaryFlag::interior) {
      os << "  [kappa " << to_string(row.boundary_flag) << "]";
    }
    os << "\n";
  }
  os << "\n";
  std::snprintf(buf, sizeof buf, "%-9s %12s %12s %12s %16s\n", "", "mean", "variance", "skewness",
                "excess kurtosis");
  os << buf;
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%-9s %12.5f %12.5f %12.5f %16.5f\n", to_string(row.model).c_str(),
                  row.cumulants.mean, row.cumulants.variance, row.cumulants.skewness,
                  row.cumulants.excess_kurtosis);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-9s %12.5f %12.5f %12.5f %16.5f\n", "empirical", r.empirical.mean,
                r.empirical.variance, r.empirical.skewness, r.empirical.excess_kurtosis);
  os << buf << "\n" << kLaplaceConvention << "\n";
  return os.str();
}

void run_fit(const Globals& g, const FitArgs& a) {
  const int sources = (!a.input.empty()) + (!a.prices.empty()) + (a.demo ? 1 : 0);
  if (sources != 1) throw DomainError("fit: give exactly one of --input, --prices, --demo");
  ReturnsSeries series;
  std::string source;
  if (a.demo) {
    series = synthetic_returns(NmlLaw(kDemoMu, kDemoSigma2, kDemoKappa), a.demo_n, g.seed);
    char params[96];
    std::snprintf(params, sizeof params, "%g, %g, %g", kDemoMu, kDemoSigma2, kDemoKappa);
    source = std::string("demo NML(") + params +
             "), seed " + std::to_string(g.seed);
  } else if (!a.prices.empty()) {
    auto f = open_input(a.prices);
    series = log_returns_from_prices(f);
    source = a.prices;
  } else {
    auto f = open_input(a.input);
    series = read_returns_csv(f);
    source = a.input;
  }
  std::vector<FitModel> models;
  for (const auto& m : split(a.models)) models.push_back(parse_fit_model(m));
  if (models.empty()) throw DomainError("fit: no models requested");
  const FitComparisonReport r = fit_comparison(series.values, models);

  if (g.format.empty() || g.format == "text") {
    emit(g, fit_text(r, source));
    return;
  }
  if (g.format == "json") {
    json h = report_header("fit");
    h["source"] = source;
    h["n"] = r.n;
    json rows = json::array();
    for (const auto& row : r.rows) {
      json j{{"model", to_string(row.model)},
             {"mu", row.mu},
             {"sigma2", row.sigma2},
             {"shape", row.shape},
             {"se", {{"mu", opt(row.se_mu)}, {"sigma2", opt(row.se_sigma2)}, {"shape", opt(row.se_shape)}}},
             {"cumulants",
              {{"mean", row.cumulants.mean},
               {"variance", row.cumulants.variance},
               {"skewness", row.cumulants.skewness},
               {"excess_kurtosis", row.cumulants.excess_kurtosis}}}};
      if (row.model == FitModel::nml) {
        j["boundary_flag"] = std::string(to_string(row.boundary_flag));
        j["kurtosis_statistic"] = row.kurtosis_statistic;
      }
      rows.push_back(j);
    }
    h["models"] = rows;
    h["empirical"] = {{"mean", r.empirical.mean},
                      {"variance", r.empirical.variance},
                      {"skewness", r.empirical.skewness},
                      {"excess_kurtosis", r.empirical.excess_kurtosis}};
    h["laplace_convention"] = kLaplaceConvention;
    emit(g, h.dump(2) + "\n");
    return;
  }
  if (g.format == "csv") {
    std::ostringstream os;
    os << "model,mu,se_mu,sigma2,se_sigma2,shape,se_shape,mean,variance,skewness,excess_kurtosis,"
          "boundary_flag\n";
    auto s = [](const std::optional<double>& v) { return v ? num(*v) : std::string("nan"); };
    for (const auto& row : r.rows) {
      os << to_string(row.model) << "," << num(row.mu) << "," << s(row.se_mu) << ","
         << num(row.sigma2) << "," << s(row.se_sigma2) << "," << num(row.shape) << ","
         << s(row.se_shape) << "," << num(row.cumulants.mean) << "," << num(row.cumulants.variance)
         << "," << num(row.cumulants.skewness) << "," << num(row.cumulants.excess_kurtosis) << ","
         << (row.model == FitModel::nml ? std::string(to_string(row.boundary_flag)) : "") << "\n";
    }
    os << "empirical,,,,,,," << num(r.empirical.mean) << "," << num(r.empirical.variance) << ","
       << num(r.empirical.skewness) << "," << num(r.empirical.excess_kurtosis) << ",\n";
    emit(g, os.str());
    return;
  }
  throw DomainError("fit: unknown format '" + g.format + "'");
}

struct McArgs {
  double mu = 0.5;
  double sigma2 = 1.0;
  std::string kappa = "0.2,0.3,0.5,0.6,0.8";
  std::string n = "200,500,1000,2000";
  std::uint64_t reps = 5000;
};

void run_mc_tables_cmd(const Globals& g, const McArgs& a) {
  McExperimentConfig cfg;
  cfg.mu = a.mu;
  cfg.sigma2 = a.sigma2;
  cfg.kappa_grid = parse_points(a.kappa);
  cfg.sample_sizes.clear();
  for (double v : parse_points(a.n)) {
    if (!(v >= 2.0) || v != std::floor(v)) throw DomainError("mc-tables: sample sizes must be integers >= 2");
    cfg.sample_sizes.push_back(static_cast<std::uint64_t>(v));
  }
  cfg.replications = a.reps;
  cfg.base_seed = g.seed;
  const auto rows = run_mc_tables(cfg, g.threads);

  Table t;
  std::vector<json> kappa, n, reps, failures, low, high;
  for (const auto& r : rows) {
    kappa.push_back(r.kappa);
    n.push_back(r.n);
    reps.push_back(r.replications);
    failures.push_back(r.failures);
    low.push_back(r.clamped_low);
    high.push_back(r.clamped_high);
  }
  t.add("kappa", kappa);
  t.add("n", n);
  t.add("replications", reps);
  t.add("failures", failures);
  t.add("clamped_low", low);
  t.add("clamped_high", high);
  const char* names[3] = {"mu", "sigma2", "kappa"};
  for (const char* scope : {"all", "interior"}) {
    std::vector<json> count;
    for (const auto& r : rows) count.push_back(std::string(scope) == "all" ? r.all.count : r.interior.count);
    t.add(std::string(scope) + "_count", count);
    auto column = [&](const char* stat, auto get) {
      for (int p = 0; p < 3; ++p) {
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(get(std::string(scope) == "all" ? r.all : r.interior)[p]);
        t.add(std::string(scope) + "_" + stat + "_" + names[p], v);
      }
    };
    column("mean", [](const McAggregate& x) { return x.mean_est; });
    column("rmse", [](const McAggregate& x) { return x.rmse; });
    column("se_empirical", [](const McAggregate& x) { return x.se_empirical; });
    column("se_theoretical", [](const McAggregate& x) { return x.se_theoretical; });
  }
  for (int p = 0; p < 3; ++p) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r.se_at_truth[p]);
    t.add(std::string("se_at_truth_") + names[p], v);
  }
  json h = report_header("mc-tables");
  h["params"] = {{"mu", cfg.mu},       {"sigma2", cfg.sigma2},   {"kappa", cfg.kappa_grid},
                 {"n", cfg.sample_sizes}, {"replications", cfg.replications}, {"seed", cfg.base_seed}};
  emit_table(g, h, t);
}

struct ConvergeArgs {
  std::string kind;
  double kappa = 0.5;
  double eta = 2.0;
  std::string grid = "10,100,1000,10000";
  std::uint64_t draws = 100'000;
  std::string summands = "standard_normal";
  std::string metric = "ks";
};

void run_converge(const Globals& g, const ConvergeArgs& a) {
  SweepConfig cfg;
  if (a.kind == "fp") {
    cfg.kind = SweepKind::fp;
    cfg.shape = a.kappa;
  } else if (a.kind == "comp") {
    cfg.kind = SweepKind::comp;
    cfg.shape = a.eta;
  } else {
    throw DomainError("converge: kind must be fp or comp");
  }
  cfg.grid = parse_points(a.grid);
  cfg.draws_per_point = a.draws;
  switch (parse_summand_family(a.summands)) {
    case SummandFamily::standard_normal:
      cfg.summands = SummandSpec::standard_normal();
      break;
    case SummandFamily::rademacher:
      cfg.summands = SummandSpec::rademacher();
      break;
    case SummandFamily::centered_uniform:
      cfg.summands = SummandSpec::centered_uniform();
      break;
    case SummandFamily::custom_table:
      throw DomainError("converge: custom summand tables are only available through the library");
  }
  if (a.metric == "ks") {
    cfg.metric = SweepMetric::ks;
  } else if (a.metric == "cf" || a.metric == "sup_cf_distance") {
    cfg.metric = SweepMetric::sup_cf_distance;
  } else {
    throw DomainError("converge: metric must be ks or cf");
  }
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  const ConvergenceReport rep = convergence_sweep(cfg);
  Table t;
  t.add(a.kind == "fp" ? "nu" : "lambda", rep.parameter_grid);
  t.add("distance", rep.distances);
  t.add("draws", std::vector<json>(rep.draws.begin(), rep.draws.end()));
  json h = report_header("converge");
  h["params"] = {{"kind", a.kind},
                 {a.kind == "fp" ? "kappa" : "eta", cfg.shape},
                 {"summands", to_string(cfg.summands.family())},
                 {"metric", to_string(rep.metric)},
                 {"seed", g.seed}};
  h["target"] = rep.target;
  emit_table(g, h, t);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional Poisson random sums: Mittag-Leffler functions, NML laws, fitting and "
               "Monte Carlo experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out", g.out, "Write output to this file instead of stdout");
  app.add_option("--format", g.format, "Output format: csv, json (fit also: text)")
      ->check(CLI::IsMember({"csv", "json", "text"}));
  app.add_option("--threads", g.threads, "Worker threads, 0 = all cores")->capture_default_str();

  MlEvalArgs ml;
  auto* c_ml = app.add_subcommand("ml-eval", "Evaluate E_kappa(z)");
  c_ml->add_option("--kappa", ml.kappa, "kappa in (0, 1]")->required();
  c_ml->add_option("--z", ml.z, "Points: comma list or lo:hi:step")->capture_default_str();

  DensityArgs de;
  auto* c_de = app.add_subcommand("density", "Density of the ML or NML law on a grid");
  c_de->add_option("--dist", de.dist, "ml or nml")->required();
  c_de->add_option("--kappa", de.kappa)->capture_default_str();
  c_de->add_option("--mu", de.mu)->capture_default_str();
  c_de->add_option("--sigma2", de.sigma2)->capture_default_str();
  c_de->add_option("--grid", de.grid, "lo:hi:step or comma list");
  c_de->add_option("--method", de.method, "nml: auto (Fourier inversion) or mixture")
      ->check(CLI::IsMember({"auto", "mixture"}));
  c_de->add_flag("--cdf", de.cdf, "Also emit the CDF");
  c_de->add_option("--quantiles", de.quantiles, "nml: probabilities to invert instead of a grid");

  PmfArgs pm;
  auto* c_pm = app.add_subcommand("pmf", "Probability mass function of FP or COMP");
  c_pm->add_option("--dist", pm.dist, "fp or comp")->required();
  c_pm->add_option("--nu", pm.nu)->capture_default_str();
  c_pm->add_option("--kappa", pm.kappa)->capture_default_str();
  c_pm->add_option("--lambda", pm.lambda)->capture_default_str();
  c_pm->add_option("--eta", pm.eta)->capture_default_str();
  c_pm->add_option("--max", pm.max, "Largest count")->capture_default_str();
  c_pm->add_option("--method", pm.method, "fp: auto, series or mixture")
      ->check(CLI::IsMember({"auto", "series", "mixture"}));

  SampleArgs sa;
  auto* c_sa = app.add_subcommand("sample", "Draw from ML, FP, NML or COMP");
  c_sa->add_option("--dist", sa.dist, "ml, fp, nml or comp")->required();
  c_sa->add_option("--nu", sa.nu)->capture_default_str();
  c_sa->add_option("--kappa", sa.kappa)->capture_default_str();
  c_sa->add_option("--mu", sa.mu)->capture_default_str();
  c_sa->add_option("--sigma2", sa.sigma2)->capture_default_str();
  c_sa->add_option("--lambda", sa.lambda)->capture_default_str();
  c_sa->add_option("--eta", sa.eta)->capture_default_str();
  c_sa->add_option("--n", sa.n, "Number of draws")->capture_default_str();

  std::string returns_input;
  auto* c_re = app.add_subcommand("returns", "Log-returns from a date,close price CSV");
  c_re->add_option("--input", returns_input, "Price CSV")->required();

  FitArgs fi;
  auto* c_fi = app.add_subcommand("fit", "Fit NML, normal and Laplace models to returns");
  c_fi->add_option("--input", fi.input, "Returns CSV (date,<value>)");
  c_fi->add_option("--prices", fi.prices, "Price CSV (date,close); returns are computed first");
  c_fi->add_flag("--demo", fi.demo, "Use a synthetic series from the reference NML fit");
  c_fi->add_option("--demo-n", fi.demo_n, "Length of the demo series")->capture_default_str();
  c_fi->add_option("--models", fi.models, "Comma list of nml, normal, laplace")->capture_default_str();

  McArgs mc;
  auto* c_mc = app.add_subcommand("mc-tables", "Monte Carlo study of the moment estimators");
  c_mc->add_option("--mu", mc.mu)->capture_default_str();
  c_mc->add_option("--sigma2", mc.sigma2)->capture_default_str();
  c_mc->add_option("--kappa", mc.kappa, "Comma list")->capture_default_str();
  c_mc->add_option("--n", mc.n, "Comma list of sample sizes")->capture_default_str();
  c_mc->add_option("--reps", mc.reps, "Replications per cell")->capture_default_str();

  ConvergeArgs co;
  auto* c_co = app.add_subcommand("converge", "Convergence of normalized random sums");
  c_co->add_option("kind", co.kind, "fp or comp")->required()->check(CLI::IsMember({"fp", "comp"}));
  c_co->add_option("--kappa", co.kappa, "fp: kappa")->capture_default_str();
  c_co->add_option("--eta", co.eta, "comp: eta")->capture_default_str();
  c_co->add_option("--grid", co.grid, "nu or lambda values, increasing")->capture_default_str();
  c_co->add_option("--draws", co.draws, "Draws per grid point")->capture_default_str();
  c_co->add_option("--summands", co.summands, "standard_normal, rademacher or centered_uniform")
      ->capture_default_str();
  c_co->add_option("--metric", co.metric, "ks or cf")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*c_ml) run_ml_eval(g, ml);
    if (*c_de) run_density(g, de);
    if (*c_pm) run_pmf(g, pm);
    if (*c_sa) run_sample(g, sa);
    if (*c_re) run_returns(g, returns_input);
    if (*c_fi) run_fit(g, fi);
    if (*c_mc) run_mc_tables_cmd(g, mc);
    if (*c_co) run_converge(g, co);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const EvaluationError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const EstimationError& e) {
    std::cerr << "estimation failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
