#pragma once

// Utterance records (forced-aligned transcripts plus aligned translations) and
// the corpus manifest tying them to representation sequences.

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "malens/interchange.hpp"

namespace malens {

struct WordSpan {
  std::string surface;
  TimeMs start_ms = 0;
  TimeMs end_ms = 0;

  bool operator==(const WordSpan&) const = default;
};

struct PhoneSpan {
  std::string phone;  // one IPA segment, as produced upstream
  TimeMs start_ms = 0;
  TimeMs end_ms = 0;
  std::size_t parent_word_index = 0;

  bool operator==(const PhoneSpan&) const = default;
};

struct AlignmentPair {
  std::size_t source_word = 0;
  std::size_t target_word = 0;

  auto operator<=>(const AlignmentPair&) const = default;
};

struct Translation {
  std::string sentence;
  std::vector<AlignmentPair> alignment;

  /// Whitespace tokens of `sentence`; alignment target indices refer to these.
  std::vector<std::string> words() const;
  /// Target words aligned to `source_word`, in target order, without duplicates.
  std::vector<std::string> aligned_words(std::size_t source_word) const;

  bool operator==(const Translation&) const = default;
};

struct UtteranceRecord {
  std::string utterance_id;
  std::string language;
  std::vector<WordSpan> words;
  std::vector<PhoneSpan> phones;
  std::map<std::string, Translation> translations;  // target language -> translation

  std::vector<std::string> phones_of_word(std::size_t word_index) const;

  bool operator==(const UtteranceRecord&) const = default;
};

/// Phone spans may poke out of their parent word by this much (rounding slack).
inline constexpr TimeMs kPhoneSpanToleranceMs = 1;

/// Throws InvariantViolation naming the utterance on the first broken invariant.
void validate(const UtteranceRecord& record);

UtteranceRecord load_utterance_record(const std::filesystem::path& path);
void write_utterance_record(const std::filesystem::path& path, const UtteranceRecord& record);

struct CorpusEntry {
  std::string utterance_id;
  std::filesystem::path record_path;
  std::map<Stage, std::filesystem::path> sequence_paths;
};

struct CorpusManifest {
  std::string corpus_id;
  std::string model_id;
  std::string language;
  std::filesystem::path embedding_matrix_path;
  std::vector<CorpusEntry> entries;
};

/// Relative paths inside the manifest resolve against the manifest's directory.
CorpusManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);

/// A manifest whose referenced files are known to exist. Records and sequences
/// are read and validated when accessed; nothing is cached, so a Corpus is
/// cheap to copy and safe to share between threads.
class Corpus {
 public:
  explicit Corpus(CorpusManifest manifest);

  const CorpusManifest& manifest() const noexcept { return manifest_; }
  std::size_t size() const noexcept { return manifest_.entries.size(); }
  const std::string& language() const noexcept { return manifest_.language; }

  UtteranceRecord record(std::size_t index) const;
  bool has_stage(std::size_t index, Stage stage) const;
  RepresentationSequence sequence(std::size_t index, Stage stage) const;
  EmbeddingMatrix embedding_matrix() const;

 private:
  CorpusManifest manifest_;
};

/// Parses the manifest and checks that every referenced file exists
/// (MissingFile names the first absent path).
Corpus load_corpus(const std::filesystem::path& manifest_path);

}  // namespace malens
