#pragma once

// Per-word classification of what the adapter tokens aligned to a word carry:
// the word itself, a translation of it, a semantic relative, or its sound.
// Steps run in a fixed order and the first one that fires decides the verdict.

#include <bitset>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "malens/corpus.hpp"
#include "malens/neighbor.hpp"
#include "malens/providers.hpp"

namespace malens {

enum class Verdict { Transcribed, Translated, Semantic, Transliterated, Unclear };

std::string_view to_string(Verdict verdict) noexcept;
Verdict parse_verdict(std::string_view name);

/// Ladder steps, in the order they are tried ("3a".."3d").
enum class LadderStep { Transcription, Translation, Semantic, Transliteration };
inline constexpr std::size_t kLadderSteps = 4;

std::string_view to_string(LadderStep step) noexcept;
LadderStep parse_ladder_step(std::string_view name);
/// Comma-separated step names, e.g. "3a,3b".
std::bitset<kLadderSteps> parse_ladder_steps(std::string_view list);

enum class Normalization { Exact, Casefold, CasefoldStripMarks };

std::string_view to_string(Normalization normalization) noexcept;
Normalization parse_normalization(std::string_view name);

/// Token and word text as compared under `normalization`. Tokenizer markers
/// are always stripped.
std::string normalize_text(std::string_view text, Normalization normalization);

struct VerdictConfig {
  double semantic_threshold = 0.54;
  /// Fraction of a word's phones that must be found in order.
  double phone_match_ratio = 0.5;
  /// When set, the fraction must exceed phone_match_ratio instead of reaching it.
  bool strict_phone_ratio = false;
  Normalization normalization = Normalization::Exact;
  std::bitset<kLadderSteps> enabled_steps{0b1111};
  std::size_t top_k_languages = 3;

  bool enabled(LadderStep step) const { return enabled_steps.test(static_cast<std::size_t>(step)); }
  /// ConfigError on out-of-range values.
  void validate() const;
};

/// Word vectors of several languages mapped into one space.
class MultilingualEmbeddingSpace {
 public:
  explicit MultilingualEmbeddingSpace(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  bool covers(std::string_view language) const;
  std::vector<std::string> covered_languages() const;
  std::size_t size(std::string_view language) const;

  /// The first vector stored for a word wins. DimMismatch on a wrong length.
  void add(std::string_view language, std::string_view word, std::span<const float> vector);

  /// Exact key first, then the casefolded word.
  std::optional<std::span<const float>> lookup(std::string_view language,
                                               std::string_view word) const;

  /// JSON manifest {"dim": d, "languages": {"fr": "wiki.multi.fr.vec", ...}}.
  /// Files ending in ".vec" are word2vec text (optional "count dim" header
  /// line); anything else is an embedding matrix in the tensor format whose
  /// vocabulary gives the words.
  static MultilingualEmbeddingSpace load(const std::filesystem::path& manifest_path);

  /// Writes one embedding matrix per language next to the manifest.
  void save(const std::filesystem::path& manifest_path) const;

 private:
  struct Table {
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::string> words;
    std::vector<float> values;
  };
  std::size_t dim_;
  std::map<std::string, Table, std::less<>> tables_;
};

/// Cosine accumulated in double; empty when either vector has zero norm.
std::optional<double> cosine_similarity(std::span<const float> a, std::span<const float> b);

// Step 2 -------------------------------------------------------------------

/// Languages ranked by how many assignments carry them, most frequent first,
/// ties by code. "und", missing languages and sentinels are ignored.
/// NoIdentifiedTokens when nothing remains.
std::vector<std::string> top_languages(std::span<const NeighborAssignment> assignments,
                                       std::size_t k = 3);

/// Sets `language` on every assignment with a neighbor. Each distinct token is
/// identified once; tokens that are only markers get "und".
void identify_token_languages(std::span<NeighborAssignment> assignments,
                              const Providers& providers, std::size_t jobs = 1);

/// Sentence the word alignment indices refer to: surfaces joined by spaces.
std::string transcript_sentence(const UtteranceRecord& record);

/// Adds a translation and word alignment for every language in `languages`
/// that the record lacks, skipping the record's own language.
void ensure_translations(UtteranceRecord& record, std::span<const std::string> languages,
                         const Providers& providers);

// Step 3 -------------------------------------------------------------------

/// 3a: first token equal to the word under `normalization`.
std::optional<std::string> is_transcription(std::string_view word,
                                            std::span<const std::string> tokens,
                                            Normalization normalization);

struct AlignedTranslation {
  std::string language;
  std::vector<std::string> words;  // target words aligned to the source word
};

struct TranslationMatch {
  std::string token;
  std::string language;
};

/// 3b: languages are scanned in the given order, then tokens, then aligned words.
std::optional<TranslationMatch> is_translation(std::span<const AlignedTranslation> translations,
                                               std::span<const std::string> tokens,
                                               Normalization normalization);

/// 3c: cosine between the word and the token in the shared space. A word whose
/// language the space does not cover is replaced by `english_pivot`. Empty when
/// either side cannot be resolved.
std::optional<double> semantic_similarity(std::string_view word, std::string_view word_language,
                                          std::string_view token, std::string_view token_language,
                                          const MultilingualEmbeddingSpace& space,
                                          std::optional<std::string_view> english_pivot = {});

struct PhoneMatch {
  std::size_t matched_count = 0;
  bool is_match = false;

  bool operator==(const PhoneMatch&) const = default;
};

/// Length of the longest ordered subsequence of `word_phones` that occurs in
/// `token_phones`, compared phone by phone. EmptyWordPhones when there are no
/// word phones.
std::size_t ordered_phone_matches(std::span<const std::string> word_phones,
                                  std::span<const std::string> token_phones);

/// 3d: is_match when matched/|word_phones| reaches `ratio` (exceeds it when
/// `strict`).
PhoneMatch transliteration_match(std::span<const std::string> word_phones,
                                 std::span<const std::string> token_phones, double ratio,
                                 bool strict = false);

struct Evidence {
  std::vector<std::string> tokens;
  std::optional<std::string> language;
  std::optional<double> similarity;
  std::optional<std::size_t> matched_phones;
  std::optional<std::size_t> word_phones;

  bool empty() const noexcept {
    return tokens.empty() && !language && !similarity && !matched_phones && !word_phones;
  }
  bool operator==(const Evidence&) const = default;
};

struct WordVerdict {
  std::string utterance_id;
  std::size_t word_index = 0;
  std::string surface;
  Verdict verdict = Verdict::Unclear;
  /// Empty for Unclear.
  Evidence evidence;
  /// Step 3c cosines of the resolvable tokens, in token order; empty when an
  /// earlier step fired or 3c is disabled.
  std::vector<double> similarities;
  /// Tokens 3c could not resolve in the shared space.
  std::vector<std::string> unresolved;

  bool operator==(const WordVerdict&) const = default;
};

struct WordContext {
  const UtteranceRecord* record = nullptr;
  std::size_t word_index = 0;
  /// Top-1 assignments of the word's frames, in frame order; sentinels allowed.
  std::vector<NeighborAssignment> frames;
  /// Languages of the corpus-wide Step 2 ranking.
  std::vector<std::string> languages;
};

/// Distinct tokens of `frames` in first-seen order, sentinels skipped.
std::vector<std::string> distinct_tokens(std::span<const NeighborAssignment> frames);

/// Runs the enabled steps in order. Provider failures are rethrown with the
/// utterance and word prepended. Step 3d needs a Phonetize route.
WordVerdict classify_word(const WordContext& context, const VerdictConfig& config,
                          const MultilingualEmbeddingSpace& space, const Providers& providers);

/// Classifies every word of one utterance from its per-frame assignments
/// (which must already carry languages). Results are in word order.
std::vector<WordVerdict> classify_utterance(const UtteranceRecord& record,
                                            const RepresentationSequence& sequence,
                                            std::span<const NeighborAssignment> assignments,
                                            std::span<const std::string> languages,
                                            const VerdictConfig& config,
                                            const MultilingualEmbeddingSpace& space,
                                            const Providers& providers, std::size_t jobs = 1);

struct SimilarityJudgement {
  std::string word1;
  std::string word2;
  double score = 0.0;  // 0..10
};

/// Threshold t maximizing F1 of {cosine >= t} against {score >= high_cutoff},
/// swept over the observed cosines; ties go to the larger t. InsufficientPairs
/// below 100 resolvable pairs or without positives.
double calibrate_threshold(std::span<const SimilarityJudgement> pairs,
                           const MultilingualEmbeddingSpace& space,
                           std::string_view language = "en", double high_cutoff = 7.0);

/// Tab-separated "word1 word2 score" lines; a header line is skipped when its
/// score column does not parse.
std::vector<SimilarityJudgement> load_similarity_judgements(const std::filesystem::path& path);

// Verdict files: one JSON object per line.
nlohmann::json to_json(const WordVerdict& verdict);
WordVerdict word_verdict_from_json(const nlohmann::json& value);
void write_verdicts(const std::filesystem::path& path, std::span<const WordVerdict> verdicts);
std::vector<WordVerdict> read_verdicts(const std::filesystem::path& path);

}  // namespace malens
