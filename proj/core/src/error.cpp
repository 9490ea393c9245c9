#include "carbonci/error.hpp"

namespace carbonci {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::IoError: return "IoError";
    case Errc::EmptyFile: return "EmptyFile";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::IrregularResolution: return "IrregularResolution";
    case Errc::NegativeIntensity: return "NegativeIntensity";
    case Errc::OutOfCoverage: return "OutOfCoverage";
    case Errc::UnknownRegion: return "UnknownRegion";
    case Errc::ZeroOrNegativeDuration: return "ZeroOrNegativeDuration";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NonPositiveDuration: return "NonPositiveDuration";
    case Errc::UnparseableDocument: return "UnparseableDocument";
    case Errc::BadDurationLiteral: return "BadDurationLiteral";
    case Errc::UnknownRegionFormat: return "UnknownRegionFormat";
    case Errc::NoEstimateAvailable: return "NoEstimateAvailable";
    case Errc::NoRegions: return "NoRegions";
    case Errc::InfeasibleDeadline: return "InfeasibleDeadline";
    case Errc::EmptyTrace: return "EmptyTrace";
    case Errc::UnknownJob: return "UnknownJob";
  }
  return "UnknownError";
}

}  // namespace carbonci
