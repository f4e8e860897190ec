#include "malens/corpus.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "malens/error.hpp"
#include "malens/io.hpp"
#include "malens/text.hpp"

namespace malens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void violation(const UtteranceRecord& record, const std::string& what) {
  fail(Errc::InvariantViolation, "utterance '" + record.utterance_id + "': " + what);
}

template <typename T>
T field(const json& object, const char* key, const fs::path& origin) {
  const auto it = object.find(key);
  if (it == object.end()) {
    fail(Errc::InvalidArgument, origin.string() + ": missing field '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    fail(Errc::InvalidArgument, origin.string() + ": field '" + key + "': " + e.what());
  }
}

fs::path resolve(const fs::path& base_dir, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() ? p : base_dir / p;
}

/// In-memory paths are relative to the working directory; on disk they are
/// relative to the manifest's directory.
std::string relative_or_absolute(const fs::path& p, const fs::path& base_dir) {
  std::error_code ec;
  const fs::path absolute = fs::absolute(p, ec);
  if (ec) return p.generic_string();
  auto rel = fs::relative(absolute, fs::absolute(base_dir, ec), ec);
  return ec || rel.empty() ? absolute.generic_string() : rel.generic_string();
}

}  // namespace

std::vector<std::string> Translation::words() const { return text::split_whitespace(sentence); }

std::vector<std::string> Translation::aligned_words(std::size_t source_word) const {
  const auto target = words();
  std::vector<std::size_t> indices;
  for (const auto& pair : alignment) {
    if (pair.source_word == source_word && pair.target_word < target.size()) {
      indices.push_back(pair.target_word);
    }
  }
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  std::vector<std::string> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(target[i]);
  return out;
}

std::vector<std::string> UtteranceRecord::phones_of_word(std::size_t word_index) const {
  std::vector<std::string> out;
  for (const auto& phone : phones) {
    if (phone.parent_word_index == word_index) out.push_back(phone.phone);
  }
  return out;
}

void validate(const UtteranceRecord& record) {
  if (record.utterance_id.empty()) fail(Errc::InvariantViolation, "record without utterance_id");
  if (record.language.empty()) violation(record, "missing language code");
  for (std::size_t i = 0; i < record.words.size(); ++i) {
    const auto& w = record.words[i];
    if (w.start_ms < 0 || w.end_ms <= w.start_ms) {
      violation(record, "word " + std::to_string(i) + " has an empty or inverted span");
    }
    if (i > 0 && w.start_ms < record.words[i - 1].end_ms) {
      violation(record, "word " + std::to_string(i) + " overlaps or precedes word " +
                            std::to_string(i - 1));
    }
  }
  for (std::size_t i = 0; i < record.phones.size(); ++i) {
    const auto& p = record.phones[i];
    if (p.parent_word_index >= record.words.size()) {
      violation(record, "phone " + std::to_string(i) + " has invalid parent word " +
                            std::to_string(p.parent_word_index));
    }
    if (p.end_ms <= p.start_ms) {
      violation(record, "phone " + std::to_string(i) + " has an empty or inverted span");
    }
    const auto& parent = record.words[p.parent_word_index];
    if (p.start_ms < parent.start_ms - kPhoneSpanToleranceMs ||
        p.end_ms > parent.end_ms + kPhoneSpanToleranceMs) {
      violation(record, "phone " + std::to_string(i) + " [" + std::to_string(p.start_ms) + ", " +
                            std::to_string(p.end_ms) + ") lies outside word " +
                            std::to_string(p.parent_word_index) + " [" +
                            std::to_string(parent.start_ms) + ", " +
                            std::to_string(parent.end_ms) + ")");
    }
  }
  for (const auto& [lang, translation] : record.translations) {
    const auto target_size = translation.words().size();
    for (const auto& pair : translation.alignment) {
      if (pair.source_word >= record.words.size() || pair.target_word >= target_size) {
        violation(record, "alignment pair (" + std::to_string(pair.source_word) + ", " +
                              std::to_string(pair.target_word) + ") out of range for '" + lang +
                              "'");
      }
    }
  }
}

UtteranceRecord load_utterance_record(const fs::path& path) {
  const json doc = io::read_json_file(path);
  UtteranceRecord record;
  record.utterance_id = field<std::string>(doc, "utterance_id", path);
  record.language = field<std::string>(doc, "language", path);
  for (const auto& w : field<json>(doc, "transcript_words", path)) {
    record.words.push_back({field<std::string>(w, "surface", path),
                            field<TimeMs>(w, "start_ms", path), field<TimeMs>(w, "end_ms", path)});
  }
  if (doc.contains("transcript_phones")) {
    for (const auto& p : doc.at("transcript_phones")) {
      record.phones.push_back({field<std::string>(p, "phone", path),
                               field<TimeMs>(p, "start_ms", path),
                               field<TimeMs>(p, "end_ms", path),
                               field<std::size_t>(p, "parent_word_index", path)});
    }
  }
  if (doc.contains("translations")) {
    for (const auto& [lang, t] : doc.at("translations").items()) {
      Translation translation;
      translation.sentence = field<std::string>(t, "sentence", path);
      for (const auto& pair : field<json>(t, "alignment", path)) {
        const auto indices = pair.get<std::vector<std::size_t>>();
        if (indices.size() != 2) {
          fail(Errc::InvalidArgument, path.string() + ": alignment pairs need 2 indices");
        }
        translation.alignment.push_back({indices[0], indices[1]});
      }
      record.translations.emplace(lang, std::move(translation));
    }
  }
  return record;
}

void write_utterance_record(const fs::path& path, const UtteranceRecord& record) {
  json doc;
  doc["utterance_id"] = record.utterance_id;
  doc["language"] = record.language;
  doc["transcript_words"] = json::array();
  for (const auto& w : record.words) {
    doc["transcript_words"].push_back(
        {{"surface", w.surface}, {"start_ms", w.start_ms}, {"end_ms", w.end_ms}});
  }
  doc["transcript_phones"] = json::array();
  for (const auto& p : record.phones) {
    doc["transcript_phones"].push_back({{"phone", p.phone},
                                        {"start_ms", p.start_ms},
                                        {"end_ms", p.end_ms},
                                        {"parent_word_index", p.parent_word_index}});
  }
  doc["translations"] = json::object();
  for (const auto& [lang, t] : record.translations) {
    json pairs = json::array();
    for (const auto& pair : t.alignment) pairs.push_back({pair.source_word, pair.target_word});
    doc["translations"][lang] = {{"sentence", t.sentence}, {"alignment", pairs}};
  }
  io::write_file_atomic(path, io::dump_json(doc));
}

CorpusManifest load_manifest(const fs::path& path) {
  const json doc = io::read_json_file(path);
  const fs::path base = path.parent_path();
  CorpusManifest manifest;
  manifest.corpus_id = field<std::string>(doc, "corpus_id", path);
  manifest.model_id = field<std::string>(doc, "model_id", path);
  manifest.language = field<std::string>(doc, "language", path);
  manifest.embedding_matrix_path =
      resolve(base, field<std::string>(doc, "embedding_matrix_path", path));
  for (const auto& e : field<json>(doc, "entries", path)) {
    CorpusEntry entry;
    entry.utterance_id = field<std::string>(e, "utterance_id", path);
    entry.record_path = resolve(base, field<std::string>(e, "record_path", path));
    const json sequences = field<json>(e, "sequence_paths", path);
    for (const auto& [stage, p] : sequences.items()) {
      entry.sequence_paths.emplace(parse_stage(stage), resolve(base, p.get<std::string>()));
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

void write_manifest(const fs::path& path, const CorpusManifest& manifest) {
  const fs::path base = path.parent_path();
  json doc;
  doc["corpus_id"] = manifest.corpus_id;
  doc["model_id"] = manifest.model_id;
  doc["language"] = manifest.language;
  doc["embedding_matrix_path"] = relative_or_absolute(manifest.embedding_matrix_path, base);
  doc["entries"] = json::array();
  for (const auto& entry : manifest.entries) {
    json sequences = json::object();
    for (const auto& [stage, p] : entry.sequence_paths) {
      sequences[std::string(to_string(stage))] = relative_or_absolute(p, base);
    }
    doc["entries"].push_back({{"utterance_id", entry.utterance_id},
                              {"record_path", relative_or_absolute(entry.record_path, base)},
                              {"sequence_paths", sequences}});
  }
  io::write_file_atomic(path, io::dump_json(doc));
}

Corpus::Corpus(CorpusManifest manifest) : manifest_(std::move(manifest)) {}

UtteranceRecord Corpus::record(std::size_t index) const {
  const auto& entry = manifest_.entries.at(index);
  UtteranceRecord record = load_utterance_record(entry.record_path);
  if (record.utterance_id != entry.utterance_id) {
    fail(Errc::InvariantViolation, "utterance '" + entry.utterance_id + "': record file " +
                                       entry.record_path.string() + " declares id '" +
                                       record.utterance_id + "'");
  }
  if (record.language != manifest_.language) {
    fail(Errc::LanguageMismatch, "utterance '" + record.utterance_id + "' is '" +
                                     record.language + "', corpus is '" + manifest_.language +
                                     "'");
  }
  validate(record);
  return record;
}

bool Corpus::has_stage(std::size_t index, Stage stage) const {
  return manifest_.entries.at(index).sequence_paths.contains(stage);
}

RepresentationSequence Corpus::sequence(std::size_t index, Stage stage) const {
  const auto& entry = manifest_.entries.at(index);
  const auto it = entry.sequence_paths.find(stage);
  if (it == entry.sequence_paths.end()) {
    fail(Errc::MissingFile, "utterance '" + entry.utterance_id + "' has no " +
                                std::string(to_string(stage)) + " sequence");
  }
  return load_representation_sequence(it->second, entry.utterance_id);
}

EmbeddingMatrix Corpus::embedding_matrix() const {
  return load_embedding_matrix(manifest_.embedding_matrix_path);
}

Corpus load_corpus(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) fail(Errc::MissingFile, manifest_path.string());
  CorpusManifest manifest = load_manifest(manifest_path);
  auto require = [](const fs::path& p) {
    if (!fs::exists(p)) fail(Errc::MissingFile, p.string());
  };
  require(manifest.embedding_matrix_path);
  require(vocab_sidecar_path(manifest.embedding_matrix_path));
  for (const auto& entry : manifest.entries) {
    require(entry.record_path);
    for (const auto& [stage, p] : entry.sequence_paths) require(p);
  }
  return Corpus(std::move(manifest));
}

}  // namespace malens
