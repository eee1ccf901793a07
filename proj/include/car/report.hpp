#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "car/distortion.hpp"
#include "car/error.hpp"
#include "car/estimator.hpp"
#include "car/inference.hpp"
#include "car/io.hpp"
#include "car/simulation.hpp"

namespace car {

struct FitConfig {
  std::optional<std::size_t> m;
  std::size_t min_bin_size = 0;  // 0 selects p+1
  double det_threshold = kDefaultDetThreshold;
  double level = 0.95;
  ColumnMapping columns;

  /// Throws ConfigError / InvalidLevel.
  void validate(std::size_t p) const;
};

/// CAR estimates with intervals next to the naive least squares fit.
struct FitReport {
  FitConfig config;
  CarFit fit;
  VarianceEstimates variances;
  std::vector<ConfidenceInterval> car;
  OlsComparison ols;
};

FitReport run_fit(const Dataset& data, const FitConfig& config,
                  Execution exec = Execution::Parallel);

nlohmann::json fit_report_json(const FitReport& report);

/// Aligned text table, 4 decimals.
std::string fit_report_table(const FitReport& report);

nlohmann::json simulation_report_json(const std::vector<SimulationReport>& reports,
                                      const std::string& model_name);

/// One row per n; coverage (percent) and mean length per coefficient.
void write_simulation_table_csv(std::ostream& out, const std::vector<SimulationReport>& reports);

std::string simulation_summary_table(const std::vector<SimulationReport>& reports);

nlohmann::json identifiability_json(const IdentifiabilityReport& report, const std::string& name);

nlohmann::json error_json(const CarError& error);

}  // namespace car
