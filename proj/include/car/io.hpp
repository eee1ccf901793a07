#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "car/estimator.hpp"
#include "car/simulation.hpp"

namespace car {

struct ColumnMapping {
  std::string u = "u";
  std::string y = "y";
  std::vector<std::string> x;
};

/// Reads a headered comma-separated file. Numbers use '.' as the decimal
/// separator regardless of locale. ParseError rows count data rows from 1.
Dataset load_csv(const std::filesystem::path& path, const ColumnMapping& mapping);
Dataset parse_csv(std::istream& in, const ColumnMapping& mapping);

/// Writes u, y and x columns under the mapping's names, 17 significant digits.
void write_dataset_csv(std::ostream& out, const Dataset& data, const ColumnMapping& mapping);

/// Header `midpoint,count,beta`.
void write_raw_coefficients_csv(std::ostream& out, std::span<const RawCoefficientRow> rows);

/// Shortest-round-trip decimal text for a double.
std::string format_number(double v);

/// Split "a,b,c" into trimmed names.
std::vector<std::string> split_list(const std::string& text);

/// `paper-5.2`, `identity`, or a path to a JSON model description:
/// {"gamma": [...], "predictors": [{"mean": m, "sd": s}, ...], "noise_sd": s,
///  "distortion": "paper-5.2" | "identity", "u_law": {"uniform": [a, b]}}
/// Throws ConfigError for anything malformed.
GenerativeModel load_model(const std::string& name_or_path);

}  // namespace car
