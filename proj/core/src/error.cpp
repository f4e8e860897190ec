#include "malens/error.hpp"

namespace malens {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::VocabMismatch: return "VocabMismatch";
    case Errc::NonFinite: return "NonFinite";
    case Errc::ZeroFrameDuration: return "ZeroFrameDuration";
    case Errc::MissingFile: return "MissingFile";
    case Errc::LanguageMismatch: return "LanguageMismatch";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::ZeroQuery: return "ZeroQuery";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::AllRowsDegenerate: return "AllRowsDegenerate";
    case Errc::InvertedSpan: return "InvertedSpan";
    case Errc::UtteranceMismatch: return "UtteranceMismatch";
    case Errc::EmptyPool: return "EmptyPool";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::ProviderUnavailable: return "ProviderUnavailable";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::UnsupportedLanguagePair: return "UnsupportedLanguagePair";
    case Errc::UnsupportedLanguage: return "UnsupportedLanguage";
    case Errc::CacheCorrupt: return "CacheCorrupt";
    case Errc::NoIdentifiedTokens: return "NoIdentifiedTokens";
    case Errc::EmptyWordPhones: return "EmptyWordPhones";
    case Errc::InsufficientPairs: return "InsufficientPairs";
    case Errc::NoExamples: return "NoExamples";
    case Errc::TooFewLabels: return "TooFewLabels";
    case Errc::Degenerate: return "Degenerate";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::DegenerateRanks: return "DegenerateRanks";
    case Errc::EmptyReference: return "EmptyReference";
    case Errc::NoAssignments: return "NoAssignments";
    case Errc::NoDecipherableWords: return "NoDecipherableWords";
    case Errc::IoFailure: return "IoFailure";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

ErrorCategory category_of(Errc code) noexcept {
  switch (code) {
    case Errc::ProviderUnavailable:
    case Errc::UnsupportedLanguagePair:
    case Errc::UnsupportedLanguage:
    case Errc::CacheCorrupt:
      return ErrorCategory::Provider;
    case Errc::IoFailure:
      return ErrorCategory::Internal;
    default:
      return ErrorCategory::Input;
  }
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code),
      detail_(message) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace malens
