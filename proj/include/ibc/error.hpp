#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ibc {

/// Failure categories raised by the toolkit. Each maps onto one named error
/// condition of a public operation, so callers can branch on `code()`
/// without parsing messages.
enum class ErrorCode {
  invalid_argument,
  // signals
  zero_seed,
  non_primitive_polynomial,
  sample_rate_mismatch,
  length_mismatch,
  // sounder
  insufficient_length,
  no_peak_found,
  frequency_out_of_range,
  non_positive_voltage,
  frame_mismatch,
  // channel_model
  insufficient_samples,
  fit_diverged,
  unstable_after_discretization,
  // tissue_fem
  resolution_too_coarse,
  empty_electrode,
  solver_did_not_converge,
  // ingest_io
  unparseable_file,
  no_numeric_data,
  ambiguous_delimiter,
  schema_violation,
  missing_capture,
  rate_mismatch,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::zero_seed: return "ZeroSeed";
    case ErrorCode::non_primitive_polynomial: return "NonPrimitivePolynomial";
    case ErrorCode::sample_rate_mismatch: return "SampleRateMismatch";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::insufficient_length: return "InsufficientLength";
    case ErrorCode::no_peak_found: return "NoPeakFound";
    case ErrorCode::frequency_out_of_range: return "FrequencyOutOfRange";
    case ErrorCode::non_positive_voltage: return "NonPositiveVoltage";
    case ErrorCode::frame_mismatch: return "FrameMismatch";
    case ErrorCode::insufficient_samples: return "InsufficientSamples";
    case ErrorCode::fit_diverged: return "FitDiverged";
    case ErrorCode::unstable_after_discretization: return "UnstableAfterDiscretization";
    case ErrorCode::resolution_too_coarse: return "ResolutionTooCoarse";
    case ErrorCode::empty_electrode: return "EmptyElectrode";
    case ErrorCode::solver_did_not_converge: return "SolverDidNotConverge";
    case ErrorCode::unparseable_file: return "UnparseableFile";
    case ErrorCode::no_numeric_data: return "NoNumericData";
    case ErrorCode::ambiguous_delimiter: return "AmbiguousDelimiter";
    case ErrorCode::schema_violation: return "SchemaViolation";
    case ErrorCode::missing_capture: return "MissingCapture";
    case ErrorCode::rate_mismatch: return "RateMismatch";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace ibc
