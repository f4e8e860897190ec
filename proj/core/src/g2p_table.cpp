#include <algorithm>

#include "malens/error.hpp"
#include "malens/io.hpp"
#include "malens/providers.hpp"
#include "malens/text.hpp"

namespace malens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char32_t kStartAnchor = U'^';
constexpr char32_t kEndAnchor = U'$';

}  // namespace

TableG2PBackend::TableG2PBackend(fs::path table_directory) {
  std::error_code ec;
  if (!fs::is_directory(table_directory, ec)) {
    fail(Errc::MissingFile, "G2P table directory not found: " + table_directory.string());
  }
  for (const auto& entry : fs::directory_iterator(table_directory)) {
    if (entry.path().extension() != ".json") continue;
    const json doc = io::read_json_file(entry.path());
    try {
      const std::string language = doc.at("language").get<std::string>();
      Table table;
      for (const auto& [grapheme, phones] : doc.at("rules").items()) {
        auto key = text::decode_utf8(text::casefold(grapheme));
        if (key.empty()) fail(Errc::ConfigError, entry.path().string() + ": empty rule");
        table.longest = std::max(table.longest, key.size());
        table.rules[std::move(key)] = phones.get<std::vector<std::string>>();
      }
      tables_[language] = std::move(table);
    } catch (const json::exception& e) {
      fail(Errc::ConfigError, entry.path().string() + ": " + e.what());
    }
  }
}

bool TableG2PBackend::supports(std::string_view language) const {
  return tables_.find(language) != tables_.end();
}

std::vector<std::string> TableG2PBackend::languages() const {
  std::vector<std::string> out;
  for (const auto& [language, table] : tables_) out.push_back(language);
  return out;
}

std::vector<std::string> TableG2PBackend::transcribe(const Table& table,
                                                     std::string_view input) const {
  std::vector<std::string> phones;
  for (const auto& word : text::split_whitespace(text::casefold(input))) {
    const std::u32string cps = text::decode_utf8(word);
    std::size_t i = 0;
    while (i < cps.size()) {
      const std::vector<std::string>* best = nullptr;
      std::size_t consumed = 0;
      for (std::size_t len = std::min(table.longest, cps.size() - i); len > 0 && !best; --len) {
        const std::u32string piece = cps.substr(i, len);
        const bool at_start = i == 0;
        const bool at_end = i + len == cps.size();
        std::u32string anchored;
        // Most specific form first.
        if (at_start && at_end) {
          anchored = kStartAnchor + piece + kEndAnchor;
          if (auto it = table.rules.find(anchored); it != table.rules.end()) best = &it->second;
        }
        if (!best && at_start) {
          anchored = kStartAnchor + piece;
          if (auto it = table.rules.find(anchored); it != table.rules.end()) best = &it->second;
        }
        if (!best && at_end) {
          anchored = piece + kEndAnchor;
          if (auto it = table.rules.find(anchored); it != table.rules.end()) best = &it->second;
        }
        if (!best) {
          if (auto it = table.rules.find(piece); it != table.rules.end()) best = &it->second;
        }
        if (best) consumed = len;
      }
      if (best) {
        phones.insert(phones.end(), best->begin(), best->end());
        i += consumed;
      } else {
        ++i;
      }
    }
  }
  return phones;
}

json TableG2PBackend::call(const ProviderRequest& request) {
  request.check();
  if (request.capability != Capability::Phonetize) {
    fail(Errc::ProviderUnavailable,
         "table G2P cannot serve " + std::string(to_string(request.capability)));
  }
  const auto it = tables_.find(request.source_language);
  if (it == tables_.end()) {
    fail(Errc::UnsupportedLanguage, "no G2P table for '" + request.source_language + "'");
  }
  return transcribe(it->second, request.texts.front());
}

}  // namespace malens
