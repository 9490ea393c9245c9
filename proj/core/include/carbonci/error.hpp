#pragma once

#include <stdexcept>
#include <string>

namespace carbonci {

/// Error conditions surfaced by the library. The service layer maps these to
/// HTTP status classes; everything else just propagates them.
enum class Errc {
  // file / row level
  IoError,
  EmptyFile,
  MalformedRow,
  // intensity data
  IrregularResolution,
  NegativeIntensity,
  OutOfCoverage,
  UnknownRegion,
  ZeroOrNegativeDuration,
  InvalidConfig,
  // traces / annotations
  NonPositiveDuration,
  UnparseableDocument,
  BadDurationLiteral,
  UnknownRegionFormat,
  // estimation / scheduling
  NoEstimateAvailable,
  NoRegions,
  InfeasibleDeadline,
  EmptyTrace,
  // service
  UnknownJob,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace carbonci
