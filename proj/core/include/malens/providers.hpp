#pragma once

// Clients for the external capabilities the analysis needs: token/utterance
// language identification, sentence translation, translation word alignment
// and grapheme-to-phoneme transcription.
//
// Every backend speaks one request/response shape. Responses are JSON values:
//   LangId    -> "en"                       Translate -> "he died in osaka"
//   WordAlign -> [[0, 0], [1, 2], ...]      Phonetize -> ["v", "i", "v", "e"]

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "malens/corpus.hpp"

namespace malens {

enum class Capability { LangId, Translate, WordAlign, Phonetize };

std::string_view to_string(Capability capability) noexcept;
Capability parse_capability(std::string_view name);

struct ProviderRequest {
  Capability capability = Capability::LangId;
  std::vector<std::string> texts;
  std::string source_language;  // Translate source; Phonetize language
  std::string target_language;  // Translate target

  static ProviderRequest lang_id(std::string text);
  static ProviderRequest translate(std::string sentence, std::string source, std::string target);
  static ProviderRequest word_align(std::string source_sentence, std::string target_sentence);
  static ProviderRequest phonetize(std::string text, std::string language);

  /// Key-sorted JSON; texts are whitespace-trimmed. Two requests are the same
  /// request iff their canonical forms are equal.
  nlohmann::json canonical() const;
  static ProviderRequest from_canonical(const nlohmann::json& value);

  /// InvalidArgument when a capability-specific parameter is missing.
  void check() const;
};

class ProviderBackend {
 public:
  virtual ~ProviderBackend() = default;
  /// Identifies the backend in cache keys.
  virtual std::string name() const = 0;
  /// Must be safe to call concurrently.
  virtual nlohmann::json call(const ProviderRequest& request) = 0;
};

/// Directory of (digest -> response) records, one compact JSON file each at
/// <dir>/<digest[0:2]>/<digest>.json. The digest is SHA-256 over the canonical
/// {provider, capability, request} object. Each record carries a checksum over
/// its own content; a record failing it is reported as corrupt and treated as
/// absent.
class RecordStore {
 public:
  explicit RecordStore(std::filesystem::path directory);

  const std::filesystem::path& directory() const noexcept { return directory_; }

  static std::string digest(std::string_view provider, const ProviderRequest& request);
  std::filesystem::path record_path(std::string_view provider,
                                    const ProviderRequest& request) const;

  std::optional<nlohmann::json> get(std::string_view provider,
                                    const ProviderRequest& request) const;
  /// Atomic replace of any existing record for the same key.
  void put(std::string_view provider, const ProviderRequest& request,
           const nlohmann::json& response) const;

 private:
  std::filesystem::path directory_;
};

/// Provider name under which frozen fixtures are keyed, independent of the
/// live service that produced them.
inline constexpr std::string_view kFixtureProvider = "fixture";

/// Replays frozen responses; a request with no fixture is ProviderUnavailable.
class FixtureBackend final : public ProviderBackend {
 public:
  explicit FixtureBackend(std::filesystem::path directory);
  std::string name() const override { return std::string(kFixtureProvider); }
  nlohmann::json call(const ProviderRequest& request) override;

  /// Writes a fixture record (used when freezing live responses).
  void freeze(const ProviderRequest& request, const nlohmann::json& response) const;

 private:
  RecordStore store_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
};

struct HttpEndpoint {
  std::string url;  // http://host[:port]/path
  std::string api_key;
};

/// POSTs the canonical request as JSON; expects {"result": ...} or
/// {"error": {"code": "...", "message": "..."}}. Transport failures and 5xx
/// replies are retried per RetryPolicy, then reported as ProviderUnavailable.
class HttpBackend final : public ProviderBackend {
 public:
  HttpBackend(std::map<Capability, HttpEndpoint> endpoints, RetryPolicy retry = {},
              std::size_t max_inflight = 8);
  ~HttpBackend() override;

  /// Reads MALENS_{LANGID,TRANSLATE,ALIGN,G2P}_{URL,KEY}; URLs in `endpoints`
  /// are kept when the variable is unset.
  static std::map<Capability, HttpEndpoint> endpoints_from_environment(
      std::map<Capability, HttpEndpoint> endpoints = {});

  std::string name() const override { return "http"; }
  nlohmann::json call(const ProviderRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Long-lived child process speaking line-delimited JSON: one canonical request
/// per line on stdin, one {"result": ...} / {"error": ...} line on stdout.
/// A crashed bridge is restarted under the retry policy.
class CommandBackend final : public ProviderBackend {
 public:
  CommandBackend(std::string executable, std::vector<std::string> args = {},
                 RetryPolicy retry = {});
  ~CommandBackend() override;

  std::string name() const override;
  nlohmann::json call(const ProviderRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Table-driven grapheme-to-phoneme mapping for Phonetize requests only.
/// Each "<lang>.json" in the table directory holds
///   {"language": "fr", "rules": {"eau": ["o"], "ez$": ["e"], ...}}
/// Input is casefolded and split on whitespace; each word is consumed by
/// greedy longest match. "^" / "$" anchor a rule to the word start / end.
/// Code points no rule covers produce no phones.
class TableG2PBackend final : public ProviderBackend {
 public:
  explicit TableG2PBackend(std::filesystem::path table_directory);

  std::string name() const override { return "table-g2p"; }
  nlohmann::json call(const ProviderRequest& request) override;

  bool supports(std::string_view language) const;
  std::vector<std::string> languages() const;

 private:
  struct Table {
    std::map<std::u32string, std::vector<std::string>> rules;
    std::size_t longest = 0;
  };
  std::vector<std::string> transcribe(const Table& table, std::string_view text) const;

  std::map<std::string, Table, std::less<>> tables_;
};

/// Cache in front of another backend: the first call for a request reaches the
/// backend and is persisted; identical calls are then served from the store,
/// also across process restarts. Calls for one key are serialized.
class CachedBackend final : public ProviderBackend {
 public:
  CachedBackend(std::shared_ptr<ProviderBackend> backend, std::filesystem::path cache_directory);
  ~CachedBackend() override;

  std::string name() const override;
  nlohmann::json call(const ProviderRequest& request) override;

  std::size_t backend_calls() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Routes each capability to a backend and enforces request contracts.
class Providers {
 public:
  void route(Capability capability, std::shared_ptr<ProviderBackend> backend);
  void route_all(const std::shared_ptr<ProviderBackend>& backend);
  bool has_route(Capability capability) const;

  /// Tokenizer markers are stripped first. EmptyInput when nothing remains.
  std::string identify_language(std::string_view text) const;
  /// InvalidArgument when source == target; UnsupportedLanguagePair when either
  /// code is not ISO 639-1.
  std::string translate(std::string_view sentence, std::string_view source,
                        std::string_view target) const;
  /// Pairs are checked against the whitespace token counts of both sentences.
  std::vector<AlignmentPair> align_words(std::string_view source_sentence,
                                         std::string_view target_sentence) const;
  /// Empty text yields no phones without contacting the backend.
  std::vector<std::string> phonetize(std::string_view text, std::string_view language) const;

 private:
  ProviderBackend& backend_for(Capability capability) const;
  std::map<Capability, std::shared_ptr<ProviderBackend>> routes_;
};

}  // namespace malens
