#include "car/error.hpp"

namespace car {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid_input";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::SingularBin: return "singular_bin";
    case ErrorCode::TooManyBins: return "too_many_bins";
    case ErrorCode::DegenerateRange: return "degenerate_range";
    case ErrorCode::CannotSatisfy: return "cannot_satisfy";
    case ErrorCode::NoUsableBins: return "no_usable_bins";
    case ErrorCode::MeanNearZero: return "mean_near_zero";
    case ErrorCode::IndexOutOfRange: return "index_out_of_range";
    case ErrorCode::InvalidLevel: return "invalid_level";
    case ErrorCode::InvalidDistortion: return "invalid_distortion";
    case ErrorCode::SingularDesignLimit: return "singular_design_limit";
    case ErrorCode::SchemaError: return "schema_error";
    case ErrorCode::ParseError: return "parse_error";
    case ErrorCode::ConfigError: return "config_error";
  }
  return "unknown";
}

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidLevel:
    case ErrorCode::IndexOutOfRange:
      return 2;
    case ErrorCode::InvalidInput:
    case ErrorCode::InsufficientData:
    case ErrorCode::TooManyBins:
    case ErrorCode::DegenerateRange:
    case ErrorCode::CannotSatisfy:
    case ErrorCode::SchemaError:
    case ErrorCode::ParseError:
      return 3;
    case ErrorCode::SingularBin:
    case ErrorCode::NoUsableBins:
    case ErrorCode::MeanNearZero:
    case ErrorCode::InvalidDistortion:
    case ErrorCode::SingularDesignLimit:
      return 4;
  }
  return 4;
}

}  // namespace car
