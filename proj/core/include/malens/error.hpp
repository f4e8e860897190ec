#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace malens {

/// Every failure the toolkit reports. Names follow the error vocabulary used in
/// the module contracts so callers can switch on them.
enum class Errc {
  // interchange / corpus
  BadMagic,
  ShapeMismatch,
  VocabMismatch,
  NonFinite,
  ZeroFrameDuration,
  MissingFile,
  LanguageMismatch,
  InvariantViolation,
  // neighbor / temporal-align
  ZeroQuery,
  DimMismatch,
  AllRowsDegenerate,
  InvertedSpan,
  UtteranceMismatch,
  EmptyPool,
  IndexOutOfRange,
  // providers
  ProviderUnavailable,
  EmptyInput,
  UnsupportedLanguagePair,
  UnsupportedLanguage,
  CacheCorrupt,
  // verdict
  NoIdentifiedTokens,
  EmptyWordPhones,
  InsufficientPairs,
  // probes
  NoExamples,
  TooFewLabels,
  Degenerate,
  LengthMismatch,
  DegenerateRanks,
  // asr-eval / report
  EmptyReference,
  NoAssignments,
  NoDecipherableWords,
  IoFailure,
  // generic
  InvalidArgument,
  ConfigError,
};

/// Coarse grouping used for process exit codes.
enum class ErrorCategory { Input, Provider, Internal };

std::string_view to_string(Errc code) noexcept;
ErrorCategory category_of(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }
  /// The message without the error-name prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

}  // namespace malens
