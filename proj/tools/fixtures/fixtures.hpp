#pragma once

// Builders for small self-contained corpora: embedding matrix, sequences,
// utterance records, frozen provider responses and a multilingual space, all
// written in the regular on-disk formats. Used by the tests and by the
// malens-fixtures tool.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "malens/corpus.hpp"
#include "malens/interchange.hpp"
#include "malens/providers.hpp"
#include "malens/verdict.hpp"

namespace malens::fixtures {

struct FixtureWord {
  std::string surface;
  TimeMs start_ms = 0;
  TimeMs end_ms = 0;
  /// Spread evenly over the word span in the record.
  std::vector<std::string> phones;
};

struct FixtureUtterance {
  std::string utterance_id;
  /// One frame per entry; each frame is an exact copy of that token's row.
  std::vector<std::string> frame_tokens;
  std::vector<FixtureWord> words;
  std::map<std::string, Translation> translations;
};

struct FrozenResponse {
  ProviderRequest request;
  nlohmann::json response;
};

struct CorpusPlan {
  std::string corpus_id = "fixture";
  std::string model_id = "fixture-model";
  std::string language;
  std::uint32_t frame_ms = 340;
  Stage stage = Stage::AdapterOutput;
  std::size_t dim = 16;
  std::uint64_t seed = 7;
  /// Matrix rows, in order. Every frame token must appear here.
  std::vector<std::string> vocabulary;
  /// Frozen language-identification answers keyed by raw token.
  std::map<std::string, std::string> token_languages;
  std::vector<FixtureUtterance> utterances;
  std::vector<FrozenResponse> responses;
  std::optional<MultilingualEmbeddingSpace> space;
};

struct CorpusPaths {
  std::filesystem::path root;
  std::filesystem::path manifest;
  std::filesystem::path fixtures;
  std::filesystem::path space;  // empty when the plan has none
};

/// Rows drawn from a seeded standard normal.
EmbeddingMatrix build_matrix(const CorpusPlan& plan);
RepresentationSequence build_sequence(const CorpusPlan& plan, const FixtureUtterance& utterance,
                                      const EmbeddingMatrix& matrix);
UtteranceRecord build_record(const CorpusPlan& plan, const FixtureUtterance& utterance);

/// Every request the plan answers, language identification included.
std::vector<FrozenResponse> frozen_responses(const CorpusPlan& plan);

/// Writes manifest.json, embedding.bin, records/, sequences/, fixtures/ and,
/// when present, space/space.json under `root`.
CorpusPaths write_corpus(const CorpusPlan& plan, const std::filesystem::path& root);

/// Appends a word covering `tokens.size()` whole frames after the last word.
void append_word(FixtureUtterance& utterance, std::uint32_t frame_ms, std::string surface,
                 std::vector<std::string> tokens, std::vector<std::string> phones = {});

/// The six-word French sentence "il est mort à osaka mardi" with its aligned
/// tokens, English alignment and shared-space similarities (0.68, 0.17, 0.07,
/// 0.14, 0.74).
CorpusPlan walkthrough();

/// Verdict configuration the walkthrough is scored with: exact matching,
/// transliteration disabled.
VerdictConfig walkthrough_config();

inline const std::vector<std::pair<std::string, Verdict>> kWalkthroughVerdicts = {
    {"il", Verdict::Semantic},  {"est", Verdict::Unclear},   {"mort", Verdict::Translated},
    {"à", Verdict::Unclear},    {"osaka", Verdict::Unclear}, {"mardi", Verdict::Semantic},
};

struct SyntheticCorpus {
  CorpusPlan plan;
  /// Verdict of every word, utterance by utterance.
  std::vector<std::vector<Verdict>> verdicts;
  /// Frames per token language.
  std::map<std::string, std::size_t> language_counts;
};

/// Random sentences built from words whose aligned tokens force a known
/// verdict under the default configuration with all four steps enabled.
SyntheticCorpus synthetic_corpus(std::uint64_t seed, std::size_t utterances = 8);

}  // namespace malens::fixtures
