#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace car {

/// Closed set of failure kinds. Every error the library raises carries one.
enum class ErrorCode {
  InvalidInput,
  InsufficientData,
  SingularBin,
  TooManyBins,
  DegenerateRange,
  CannotSatisfy,
  NoUsableBins,
  MeanNearZero,
  IndexOutOfRange,
  InvalidLevel,
  InvalidDistortion,
  SingularDesignLimit,
  SchemaError,
  ParseError,
  ConfigError,
};

/// Stable snake_case identifier, used in machine-readable error output.
std::string_view error_code_name(ErrorCode code) noexcept;

/// Process exit code for the CLI: 2 config, 3 data, 4 numerical.
int exit_code_for(ErrorCode code) noexcept;

class CarError : public std::runtime_error {
 public:
  CarError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the determinant guard; keeps the offending determinant.
class SingularBinError : public CarError {
 public:
  SingularBinError(double determinant, const std::string& message)
      : CarError(ErrorCode::SingularBin, message), determinant_(determinant) {}

  double determinant() const noexcept { return determinant_; }

 private:
  double determinant_;
};

/// Parse failure at a specific CSV cell. Rows are 1-based data rows.
class ParseError : public CarError {
 public:
  ParseError(std::size_t row, std::string column, const std::string& message)
      : CarError(ErrorCode::ParseError, message), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

}  // namespace car
