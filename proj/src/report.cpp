#include "car/report.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

namespace car {
namespace {

std::string coef_name(std::size_t r) { return "gamma" + std::to_string(r); }

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

nlohmann::json interval_json(const ConfidenceInterval& ci) {
  return {{"estimate", ci.estimate}, {"std_error", ci.std_error}, {"lower", ci.lower},
          {"upper", ci.upper},       {"level", ci.level}};
}

}  // namespace

void FitConfig::validate(std::size_t p) const {
  if (!(level > 0.0 && level < 1.0))
    throw CarError(ErrorCode::InvalidLevel, "confidence level must lie in (0, 1)");
  if (min_bin_size != 0 && min_bin_size < p + 1)
    throw CarError(ErrorCode::ConfigError, "min_bin_size must be at least p+1");
  if (!(det_threshold > 0.0)) throw CarError(ErrorCode::ConfigError, "det_threshold must be > 0");
  if (m && *m == 0) throw CarError(ErrorCode::ConfigError, "m must be >= 1");
}

FitReport run_fit(const Dataset& data, const FitConfig& config, Execution exec) {
  config.validate(data.p());
  FitReport rep;
  rep.config = config;
  FitOptions opts;
  opts.m = config.m;
  opts.min_bin_size = config.min_bin_size;
  opts.det_threshold = config.det_threshold;
  opts.exec = exec;
  rep.fit = fit_car(data, opts);
  rep.variances = estimate_variances(rep.fit);
  rep.car = car_intervals(rep.fit, rep.variances, config.level);
  rep.ols = naive_ols(data, config.level, config.det_threshold);
  return rep;
}

nlohmann::json fit_report_json(const FitReport& r) {
  const std::size_t p = r.fit.p();
  nlohmann::json coefs = nlohmann::json::array();
  for (std::size_t k = 0; k <= p; ++k) {
    nlohmann::json c = {{"name", coef_name(k)},
                        {"column", k == 0 ? std::string("(intercept)") : r.config.columns.x.at(k - 1)},
                        {"car", interval_json(r.car[k])},
                        {"ols", interval_json(r.ols.intervals[k])},
                        {"sigma_sq_raw", r.variances.sigma_sq[k]}};
    coefs.push_back(std::move(c));
  }
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& s : r.fit.skipped_bins)
    skipped.push_back({{"bin_index", s.bin_index},
                       {"count", s.count},
                       {"reason", std::string(error_code_name(s.reason))},
                       {"determinant", s.determinant}});
  return {{"n", r.fit.n},
          {"n_fitted", r.fit.n_fitted},
          {"p", p},
          {"level", r.config.level},
          {"bins_used", r.fit.bin_fits.size()},
          {"bins_skipped", r.fit.skipped_bins.size()},
          {"skipped", skipped},
          {"m_initial", r.fit.m_initial},
          {"m_final", r.fit.partition.bin_count()},
          {"min_bin_size", r.config.min_bin_size == 0 ? p + 1 : r.config.min_bin_size},
          {"det_threshold", r.config.det_threshold},
          {"pooled_rss_over_n", r.variances.pooled_rss_over_n},
          {"ols_residual_variance", r.ols.residual_variance},
          {"coefficients", coefs}};
}

std::string fit_report_table(const FitReport& r) {
  std::ostringstream out;
  out << "n = " << r.fit.n << ", bins used = " << r.fit.bin_fits.size() << " (initial "
      << r.fit.m_initial << ", skipped " << r.fit.skipped_bins.size() << "), level = " << r.config.level
      << "\n\n";
  const std::size_t w = 10;
  out << pad("", 14) << pad("Least sq. reg.", 3 * w) << pad("Covariate adj. reg.", 3 * w) << '\n';
  out << pad("Coefficient", 14);
  for (int k = 0; k < 2; ++k) out << pad("Lower", w) << pad("Estimate", w) << pad("Upper", w);
  out << '\n';
  for (std::size_t k = 0; k < r.car.size(); ++k) {
    const std::string name = k == 0 ? "Intercept" : r.config.columns.x.at(k - 1);
    out << pad(name, 14);
    for (const auto* ci : {&r.ols.intervals[k], &r.car[k]})
      out << pad(fixed4(ci->lower), w) << pad(fixed4(ci->estimate), w) << pad(fixed4(ci->upper), w);
    out << '\n';
  }
  return out.str();
}

nlohmann::json simulation_report_json(const std::vector<SimulationReport>& reports,
                                      const std::string& model_name) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& rep : reports) {
    nlohmann::json coefs = nlohmann::json::array();
    for (std::size_t k = 0; k < rep.coefficients.size(); ++k) {
      const auto& c = rep.coefficients[k];
      coefs.push_back({{"name", coef_name(k)},
                       {"coverage_fraction", c.coverage_fraction},
                       {"mean_ci_length", c.mean_ci_length},
                       {"mean_estimate", c.mean_estimate},
                       {"sd_estimate", c.sd_estimate},
                       {"mean_sigma_sq", c.mean_sigma_sq},
                       {"scaled_variance", c.scaled_variance}});
    }
    nlohmann::json reasons = nlohmann::json::object();
    for (const auto& [k, v] : rep.failure_reasons) reasons[k] = v;
    rows.push_back({{"n", rep.n},
                    {"replicates", rep.replicates},
                    {"m_used", rep.m_used},
                    {"min_bin_size", rep.min_bin_size},
                    {"level", rep.level},
                    {"seed", rep.seed},
                    {"failures", rep.failures},
                    {"failure_reasons", reasons},
                    {"mean_bins", rep.mean_bins},
                    {"mean_points_per_bin", rep.mean_points_per_bin},
                    {"coefficients", coefs}});
  }
  return {{"model", model_name},
          {"m_assumption",
           "m per n inverted from average points per bin: n=100 -> 20, n=400 -> 25, n=1600 -> 50"},
          {"runs", rows}};
}

void write_simulation_table_csv(std::ostream& out, const std::vector<SimulationReport>& reports) {
  const std::size_t k = reports.empty() ? 0 : reports.front().coefficients.size();
  out << 'n';
  for (std::size_t r = 0; r < k; ++r) out << ',' << coef_name(r) << "_coverage," << coef_name(r) << "_length";
  out << '\n';
  for (const auto& rep : reports) {
    out << rep.n;
    for (const auto& c : rep.coefficients) {
      char cov[32];
      std::snprintf(cov, sizeof(cov), "%.15g", 100.0 * c.coverage_fraction);
      out << ',' << cov << ',' << format_number(c.mean_ci_length);
    }
    out << '\n';
  }
}

std::string simulation_summary_table(const std::vector<SimulationReport>& reports) {
  std::ostringstream out;
  const std::size_t k = reports.empty() ? 0 : reports.front().coefficients.size();
  const std::size_t w = 10;
  out << pad("n", 6) << pad("m", 5) << pad("fail", 6);
  for (std::size_t r = 0; r < k; ++r) out << pad(coef_name(r) + " cov", w + 2) << pad("length", w);
  out << '\n';
  for (const auto& rep : reports) {
    out << pad(std::to_string(rep.n), 6) << pad(std::to_string(rep.m_used), 5)
        << pad(std::to_string(rep.failures), 6);
    for (const auto& c : rep.coefficients) {
      char cov[32];
      std::snprintf(cov, sizeof(cov), "%.1f", 100.0 * c.coverage_fraction);
      out << pad(cov, w + 2) << pad(fixed4(c.mean_ci_length), w);
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json identifiability_json(const IdentifiabilityReport& r, const std::string& name) {
  return {{"distortion", name}, {"samples", r.samples}, {"tol", r.tol},     {"psi_mean", r.psi_mean},
          {"phi_means", r.phi_means}, {"phi_min", r.phi_min}, {"passed", r.passed}};
}

nlohmann::json error_json(const CarError& error) {
  nlohmann::json j = {{"error", std::string(error_code_name(error.code()))}, {"message", error.what()}};
  if (const auto* pe = dynamic_cast<const ParseError*>(&error)) {
    j["row"] = pe->row();
    j["column"] = pe->column();
  }
  if (const auto* sb = dynamic_cast<const SingularBinError*>(&error)) j["determinant"] = sb->determinant();
  return j;
}

}  // namespace car
