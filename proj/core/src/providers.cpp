#include "malens/providers.hpp"

#include <array>
#include <atomic>
#include <ctime>
#include <functional>
#include <iomanip>
#include <mutex>
#include <sstream>

#include "malens/digest.hpp"
#include "malens/error.hpp"
#include "malens/io.hpp"
#include "malens/languages.hpp"
#include "malens/log.hpp"
#include "malens/text.hpp"

namespace malens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

json key_object(std::string_view provider, const ProviderRequest& request) {
  return json{{"capability", std::string(to_string(request.capability))},
              {"provider", std::string(provider)},
              {"request", request.canonical()}};
}

}  // namespace

std::string_view to_string(Capability capability) noexcept {
  switch (capability) {
    case Capability::LangId: return "langid";
    case Capability::Translate: return "translate";
    case Capability::WordAlign: return "align";
    case Capability::Phonetize: return "g2p";
  }
  return "unknown";
}

Capability parse_capability(std::string_view name) {
  for (auto c : {Capability::LangId, Capability::Translate, Capability::WordAlign,
                 Capability::Phonetize}) {
    if (to_string(c) == name) return c;
  }
  fail(Errc::InvalidArgument, "unknown capability '" + std::string(name) + "'");
}

ProviderRequest ProviderRequest::lang_id(std::string text) {
  return {Capability::LangId, {std::move(text)}, {}, {}};
}

ProviderRequest ProviderRequest::translate(std::string sentence, std::string source,
                                           std::string target) {
  return {Capability::Translate, {std::move(sentence)}, std::move(source), std::move(target)};
}

ProviderRequest ProviderRequest::word_align(std::string source_sentence,
                                            std::string target_sentence) {
  return {Capability::WordAlign, {std::move(source_sentence), std::move(target_sentence)}, {}, {}};
}

ProviderRequest ProviderRequest::phonetize(std::string text, std::string language) {
  return {Capability::Phonetize, {std::move(text)}, std::move(language), {}};
}

json ProviderRequest::canonical() const {
  json texts_json = json::array();
  for (const auto& t : texts) texts_json.push_back(text::trim(t));
  return json{{"capability", std::string(to_string(capability))},
              {"source", source_language},
              {"target", target_language},
              {"texts", texts_json}};
}

ProviderRequest ProviderRequest::from_canonical(const json& value) {
  try {
    ProviderRequest r;
    r.capability = parse_capability(value.at("capability").get<std::string>());
    r.texts = value.at("texts").get<std::vector<std::string>>();
    r.source_language = value.value("source", "");
    r.target_language = value.value("target", "");
    return r;
  } catch (const json::exception& e) {
    fail(Errc::InvalidArgument, std::string("malformed provider request: ") + e.what());
  }
}

void ProviderRequest::check() const {
  const auto need_texts = capability == Capability::WordAlign ? 2u : 1u;
  if (texts.size() != need_texts) {
    fail(Errc::InvalidArgument, std::string(to_string(capability)) + " request needs " +
                                    std::to_string(need_texts) + " text(s)");
  }
  if (capability == Capability::Translate &&
      (source_language.empty() || target_language.empty())) {
    fail(Errc::InvalidArgument, "translate request needs source and target languages");
  }
  if (capability == Capability::Phonetize && source_language.empty()) {
    fail(Errc::InvalidArgument, "g2p request needs a language");
  }
}

// RecordStore ---------------------------------------------------------------

RecordStore::RecordStore(fs::path directory) : directory_(std::move(directory)) {}

std::string RecordStore::digest(std::string_view provider, const ProviderRequest& request) {
  return sha256_hex(key_object(provider, request).dump());
}

fs::path RecordStore::record_path(std::string_view provider, const ProviderRequest& request) const {
  const std::string key = digest(provider, request);
  return directory_ / key.substr(0, 2) / (key + ".json");
}

std::optional<json> RecordStore::get(std::string_view provider,
                                     const ProviderRequest& request) const {
  const fs::path path = record_path(provider, request);
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;

  auto corrupt = [&](const std::string& why) -> std::optional<json> {
    log::warn(std::string(to_string(Errc::CacheCorrupt)) + ": " + path.string() + " (" + why +
              "); treating as a miss");
    return std::nullopt;
  };

  json record;
  try {
    record = json::parse(io::read_text_file(path));
  } catch (const json::exception&) {
    return corrupt("unparseable");
  } catch (const Error&) {
    return std::nullopt;  // removed between exists() and read
  }
  if (!record.is_object() || !record.contains("checksum") || !record["checksum"].is_string()) {
    return corrupt("missing checksum");
  }
  const std::string checksum = record["checksum"].get<std::string>();
  record.erase("checksum");
  if (sha256_hex(record.dump()) != checksum) return corrupt("checksum mismatch");
  const json expected = key_object(provider, request);
  if (record.value("key", "") != sha256_hex(expected.dump()) ||
      record.value("provider", "") != provider || record.value("request", json()) !=
                                                      expected["request"] ||
      !record.contains("response")) {
    return corrupt("key mismatch");
  }
  return record["response"];
}

void RecordStore::put(std::string_view provider, const ProviderRequest& request,
                      const json& response) const {
  json record{{"key", digest(provider, request)},
              {"provider", std::string(provider)},
              {"request", request.canonical()},
              {"response", response},
              {"created_at", utc_timestamp()}};
  record["checksum"] = sha256_hex(record.dump());
  io::write_file_atomic(record_path(provider, request), record.dump() + "\n");
}

// FixtureBackend ------------------------------------------------------------

FixtureBackend::FixtureBackend(fs::path directory) : store_(std::move(directory)) {}

json FixtureBackend::call(const ProviderRequest& request) {
  if (auto hit = store_.get(kFixtureProvider, request)) return *hit;
  fail(Errc::ProviderUnavailable,
       "no fixture for request " + request.canonical().dump() + " in " +
           store_.directory().string());
}

void FixtureBackend::freeze(const ProviderRequest& request, const json& response) const {
  store_.put(kFixtureProvider, request, response);
}

// CachedBackend -------------------------------------------------------------

struct CachedBackend::Impl {
  static constexpr std::size_t kStripes = 64;

  std::shared_ptr<ProviderBackend> backend;
  RecordStore store;
  std::array<std::mutex, kStripes> locks;
  std::atomic<std::size_t> calls{0};

  Impl(std::shared_ptr<ProviderBackend> b, fs::path dir)
      : backend(std::move(b)), store(std::move(dir)) {}
};

CachedBackend::CachedBackend(std::shared_ptr<ProviderBackend> backend, fs::path cache_directory)
    : impl_(std::make_unique<Impl>(std::move(backend), std::move(cache_directory))) {
  if (!impl_->backend) fail(Errc::InvalidArgument, "CachedBackend without a backend");
}

CachedBackend::~CachedBackend() = default;

std::string CachedBackend::name() const { return impl_->backend->name(); }

json CachedBackend::call(const ProviderRequest& request) {
  const std::string provider = impl_->backend->name();
  const std::string key = RecordStore::digest(provider, request);
  auto& lock = impl_->locks[std::hash<std::string>{}(key) % Impl::kStripes];
  std::lock_guard guard(lock);
  if (auto hit = impl_->store.get(provider, request)) return *hit;
  json response = impl_->backend->call(request);
  ++impl_->calls;
  impl_->store.put(provider, request, response);
  return response;
}

std::size_t CachedBackend::backend_calls() const noexcept { return impl_->calls.load(); }

// Providers -----------------------------------------------------------------

void Providers::route(Capability capability, std::shared_ptr<ProviderBackend> backend) {
  routes_[capability] = std::move(backend);
}

void Providers::route_all(const std::shared_ptr<ProviderBackend>& backend) {
  for (auto c : {Capability::LangId, Capability::Translate, Capability::WordAlign,
                 Capability::Phonetize}) {
    routes_[c] = backend;
  }
}

bool Providers::has_route(Capability capability) const { return routes_.contains(capability); }

ProviderBackend& Providers::backend_for(Capability capability) const {
  const auto it = routes_.find(capability);
  if (it == routes_.end() || !it->second) {
    fail(Errc::ProviderUnavailable,
         "no backend configured for " + std::string(to_string(capability)));
  }
  return *it->second;
}

std::string Providers::identify_language(std::string_view text) const {
  const std::string cleaned = text::strip_token_markers(text);
  if (cleaned.empty()) fail(Errc::EmptyInput, "language identification of an empty string");
  const json response = backend_for(Capability::LangId).call(ProviderRequest::lang_id(cleaned));
  if (!response.is_string()) fail(Errc::ProviderUnavailable, "malformed langid response");
  const auto code = response.get<std::string>();
  return code.empty() ? std::string(kUndetermined) : code;
}

std::string Providers::translate(std::string_view sentence, std::string_view source,
                                 std::string_view target) const {
  if (source == target) {
    fail(Errc::InvalidArgument, "translation source and target are both '" +
                                    std::string(source) + "'");
  }
  if (!is_iso639_1(source) || !is_iso639_1(target)) {
    fail(Errc::UnsupportedLanguagePair, std::string(source) + " -> " + std::string(target));
  }
  if (text::trim(sentence).empty()) fail(Errc::EmptyInput, "translation of an empty sentence");
  const json response = backend_for(Capability::Translate)
                            .call(ProviderRequest::translate(std::string(sentence),
                                                             std::string(source),
                                                             std::string(target)));
  if (!response.is_string()) fail(Errc::ProviderUnavailable, "malformed translate response");
  return response.get<std::string>();
}

std::vector<AlignmentPair> Providers::align_words(std::string_view source_sentence,
                                                  std::string_view target_sentence) const {
  const auto source_words = text::split_whitespace(source_sentence).size();
  const auto target_words = text::split_whitespace(target_sentence).size();
  if (source_words == 0 || target_words == 0) {
    fail(Errc::InvalidArgument, "word alignment needs two non-empty sentences");
  }
  const json response =
      backend_for(Capability::WordAlign)
          .call(ProviderRequest::word_align(std::string(source_sentence),
                                            std::string(target_sentence)));
  std::vector<AlignmentPair> pairs;
  try {
    for (const auto& p : response) {
      const auto s = p.at(0).get<std::size_t>();
      const auto t = p.at(1).get<std::size_t>();
      if (s >= source_words || t >= target_words) {
        fail(Errc::ProviderUnavailable, "alignment pair out of range");
      }
      pairs.push_back({s, t});
    }
  } catch (const json::exception& e) {
    fail(Errc::ProviderUnavailable, std::string("malformed alignment response: ") + e.what());
  }
  return pairs;
}

std::vector<std::string> Providers::phonetize(std::string_view text_in,
                                              std::string_view language) const {
  if (language.empty()) fail(Errc::InvalidArgument, "g2p without a language");
  const std::string cleaned = text::strip_token_markers(text_in);
  if (cleaned.empty()) return {};
  const json response = backend_for(Capability::Phonetize)
                            .call(ProviderRequest::phonetize(cleaned, std::string(language)));
  try {
    return response.get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(Errc::ProviderUnavailable, std::string("malformed g2p response: ") + e.what());
  }
}

}  // namespace malens
