#pragma once

// Word error rate and language-match scoring of model transcriptions.

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "malens/providers.hpp"

namespace malens {

enum class WerScheme { Whitespace, Char };

std::string_view to_string(WerScheme scheme) noexcept;
WerScheme parse_wer_scheme(std::string_view name);

/// Scheme per language with a default for the rest.
struct WerSchemeMap {
  WerScheme fallback = WerScheme::Whitespace;
  std::map<std::string, WerScheme, std::less<>> overrides;

  WerScheme scheme_for(std::string_view language) const;
};

/// Whitespace: split on whitespace, trim punctuation at token edges, drop
/// tokens that become empty. Char: one token per grapheme cluster, skipping
/// whitespace and punctuation. Text is casefolded first unless told otherwise.
std::vector<std::string> tokenize_for_wer(std::string_view text, WerScheme scheme,
                                          bool casefold = true);

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t reference_length = 0;

  std::size_t distance() const noexcept { return substitutions + deletions + insertions; }
  EditCounts& operator+=(const EditCounts& other) noexcept;
  bool operator==(const EditCounts&) const = default;
};

/// Minimum unit-cost edit alignment. Among alignments of equal cost the one
/// with the most substitutions, then deletions, is reported.
EditCounts edit_counts(std::span<const std::string> reference,
                       std::span<const std::string> hypothesis);

/// (S + D + I) / |reference|; can exceed 1. EmptyReference for an empty reference.
double wer(std::span<const std::string> reference, std::span<const std::string> hypothesis);

struct HypothesisSet {
  std::string model_id;
  std::string language;
  std::map<std::string, std::string> hypotheses;  // utterance id -> text
};

/// JSON {"model_id": ..., "language": ..., "hypotheses": {"utt": "text", ...}}.
HypothesisSet load_hypotheses(const std::filesystem::path& path);
void write_hypotheses(const std::filesystem::path& path, const HypothesisSet& set);

/// Percentage of hypotheses whose identified language is `expected`. Empty
/// hypotheses count as misses without a provider call.
double lang_match_rate(const HypothesisSet& hypotheses, std::string_view expected,
                       const Providers& providers, std::size_t jobs = 1);

struct CorpusWer {
  EditCounts edits;
  std::size_t utterances = 0;

  /// Corpus-level rate in percent: total edits over total reference words.
  double wer_percent() const;
};

/// Scores every hypothesis against its reference. UtteranceMismatch unless
/// both maps hold the same utterance ids.
CorpusWer score_hypotheses(const std::map<std::string, std::string>& references,
                           const HypothesisSet& hypotheses, WerScheme scheme,
                           bool casefold = true, std::size_t jobs = 1);

}  // namespace malens
