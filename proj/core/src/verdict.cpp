#include "malens/verdict.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "malens/error.hpp"
#include "malens/interchange.hpp"
#include "malens/io.hpp"
#include "malens/languages.hpp"
#include "malens/log.hpp"
#include "malens/parallel.hpp"
#include "malens/temporal_align.hpp"
#include "malens/text.hpp"

namespace malens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kMinCalibrationPairs = 100;

template <typename Enum, std::size_t N>
Enum parse_named(std::string_view name, const std::array<Enum, N>& values, const char* what) {
  for (auto v : values) {
    if (to_string(v) == name) return v;
  }
  fail(Errc::ConfigError, std::string("unknown ") + what + " '" + std::string(name) + "'");
}

}  // namespace

std::string_view to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::Transcribed: return "transcribed";
    case Verdict::Translated: return "translated";
    case Verdict::Semantic: return "semantic";
    case Verdict::Transliterated: return "transliterated";
    case Verdict::Unclear: return "unclear";
  }
  return "unknown";
}

Verdict parse_verdict(std::string_view name) {
  return parse_named(name,
                     std::array{Verdict::Transcribed, Verdict::Translated, Verdict::Semantic,
                                Verdict::Transliterated, Verdict::Unclear},
                     "verdict");
}

std::string_view to_string(LadderStep step) noexcept {
  switch (step) {
    case LadderStep::Transcription: return "3a";
    case LadderStep::Translation: return "3b";
    case LadderStep::Semantic: return "3c";
    case LadderStep::Transliteration: return "3d";
  }
  return "unknown";
}

LadderStep parse_ladder_step(std::string_view name) {
  return parse_named(name,
                     std::array{LadderStep::Transcription, LadderStep::Translation,
                                LadderStep::Semantic, LadderStep::Transliteration},
                     "ladder step");
}

std::bitset<kLadderSteps> parse_ladder_steps(std::string_view list) {
  std::bitset<kLadderSteps> steps;
  std::string item;
  std::istringstream in{std::string(list)};
  while (std::getline(in, item, ',')) {
    item = text::trim(item);
    if (item.empty()) continue;
    steps.set(static_cast<std::size_t>(parse_ladder_step(item)));
  }
  return steps;
}

std::string_view to_string(Normalization normalization) noexcept {
  switch (normalization) {
    case Normalization::Exact: return "exact";
    case Normalization::Casefold: return "casefold";
    case Normalization::CasefoldStripMarks: return "casefold_strip_marks";
  }
  return "unknown";
}

Normalization parse_normalization(std::string_view name) {
  return parse_named(name,
                     std::array{Normalization::Exact, Normalization::Casefold,
                                Normalization::CasefoldStripMarks},
                     "normalization");
}

std::string normalize_text(std::string_view value, Normalization normalization) {
  std::string out = text::strip_token_markers(value);
  switch (normalization) {
    case Normalization::Exact: return out;
    case Normalization::Casefold: return text::casefold(out);
    case Normalization::CasefoldStripMarks: return text::strip_marks(text::casefold(out));
  }
  return out;
}

void VerdictConfig::validate() const {
  if (!(semantic_threshold >= 0.0 && semantic_threshold <= 1.0)) {
    fail(Errc::ConfigError, "semantic_threshold must lie in [0, 1]");
  }
  if (!(phone_match_ratio > 0.0 && phone_match_ratio <= 1.0)) {
    fail(Errc::ConfigError, "phone_match_ratio must lie in (0, 1]");
  }
  if (top_k_languages == 0) fail(Errc::ConfigError, "top_k_languages must be positive");
}

// MultilingualEmbeddingSpace ---------------------------------------------------

MultilingualEmbeddingSpace::MultilingualEmbeddingSpace(std::size_t dim) : dim_(dim) {
  if (dim == 0) fail(Errc::ShapeMismatch, "embedding space with zero dimensions");
}

bool MultilingualEmbeddingSpace::covers(std::string_view language) const {
  return tables_.find(language) != tables_.end();
}

std::vector<std::string> MultilingualEmbeddingSpace::covered_languages() const {
  std::vector<std::string> out;
  for (const auto& [language, table] : tables_) out.push_back(language);
  return out;
}

std::size_t MultilingualEmbeddingSpace::size(std::string_view language) const {
  const auto it = tables_.find(language);
  return it == tables_.end() ? 0 : it->second.words.size();
}

void MultilingualEmbeddingSpace::add(std::string_view language, std::string_view word,
                                     std::span<const float> vector) {
  if (vector.size() != dim_) {
    fail(Errc::DimMismatch, "vector for '" + std::string(word) + "' has " +
                                std::to_string(vector.size()) + " values, space has " +
                                std::to_string(dim_));
  }
  for (float v : vector) {
    if (!std::isfinite(v)) fail(Errc::NonFinite, "vector for '" + std::string(word) + "'");
  }
  auto it = tables_.find(language);
  if (it == tables_.end()) it = tables_.emplace(std::string(language), Table{}).first;
  Table& table = it->second;
  const auto [slot, inserted] = table.index.emplace(std::string(word), table.words.size());
  if (!inserted) return;
  table.words.emplace_back(word);
  table.values.insert(table.values.end(), vector.begin(), vector.end());
}

std::optional<std::span<const float>> MultilingualEmbeddingSpace::lookup(
    std::string_view language, std::string_view word) const {
  const auto it = tables_.find(language);
  if (it == tables_.end() || word.empty()) return std::nullopt;
  const Table& table = it->second;
  auto at = [&](std::size_t i) {
    return std::span<const float>(table.values).subspan(i * dim_, dim_);
  };
  if (auto hit = table.index.find(std::string(word)); hit != table.index.end()) {
    return at(hit->second);
  }
  if (auto hit = table.index.find(text::casefold(word)); hit != table.index.end()) {
    return at(hit->second);
  }
  return std::nullopt;
}

namespace {

void load_vec_file(MultilingualEmbeddingSpace& space, const std::string& language,
                   const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::MissingFile, "cannot open " + path.string());
  std::string line;
  std::vector<float> values(space.dim());
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = text::split_whitespace(line);
    if (fields.empty()) continue;
    if (line_number == 1 && fields.size() == 2) continue;  // "count dim" header
    if (fields.size() != space.dim() + 1) {
      fail(Errc::ShapeMismatch, path.string() + ":" + std::to_string(line_number) + ": expected " +
                                    std::to_string(space.dim()) + " values");
    }
    for (std::size_t d = 0; d < space.dim(); ++d) {
      const std::string& f = fields[d + 1];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), values[d]);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        fail(Errc::InvalidArgument,
             path.string() + ":" + std::to_string(line_number) + ": bad number '" + f + "'");
      }
    }
    space.add(language, fields[0], values);
  }
}

}  // namespace

MultilingualEmbeddingSpace MultilingualEmbeddingSpace::load(const fs::path& manifest_path) {
  const json doc = io::read_json_file(manifest_path);
  const fs::path base = manifest_path.parent_path();
  try {
    MultilingualEmbeddingSpace space(doc.at("dim").get<std::size_t>());
    for (const auto& [language, rel] : doc.at("languages").items()) {
      const fs::path path = base / rel.get<std::string>();
      if (path.extension() == ".vec") {
        load_vec_file(space, language, path);
        continue;
      }
      const EmbeddingMatrix matrix = load_embedding_matrix(path);
      if (matrix.dim() != space.dim()) {
        fail(Errc::DimMismatch, path.string() + " has dim " + std::to_string(matrix.dim()));
      }
      for (std::size_t i = 0; i < matrix.vocab_size(); ++i) {
        space.add(language, matrix.token(i), matrix.row(i));
      }
    }
    return space;
  } catch (const json::exception& e) {
    fail(Errc::InvalidArgument, manifest_path.string() + ": " + e.what());
  }
}

void MultilingualEmbeddingSpace::save(const fs::path& manifest_path) const {
  json languages = json::object();
  for (const auto& [language, table] : tables_) {
    const std::string file = language + ".bin";
    write_embedding_matrix(manifest_path.parent_path() / file,
                           EmbeddingMatrix(dim_, table.values, table.words));
    languages[language] = file;
  }
  io::write_file_atomic(manifest_path, io::dump_json(json{{"dim", dim_}, {"languages", languages}}));
}

std::optional<double> cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) fail(Errc::DimMismatch, "cosine of vectors of different length");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return std::nullopt;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// Step 2 -----------------------------------------------------------------------

std::vector<std::string> top_languages(std::span<const NeighborAssignment> assignments,
                                       std::size_t k) {
  std::map<std::string, std::size_t> counts;
  for (const auto& a : assignments) {
    if (!a.has_neighbor() || !a.language || *a.language == kUndetermined || a.language->empty()) {
      continue;
    }
    ++counts[*a.language];
  }
  if (counts.empty()) fail(Errc::NoIdentifiedTokens, "no token has an identified language");
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(ranked[i].first);
  return out;
}

void identify_token_languages(std::span<NeighborAssignment> assignments,
                              const Providers& providers, std::size_t jobs) {
  std::vector<std::string> tokens;
  std::map<std::string, std::size_t> slot;
  for (const auto& a : assignments) {
    if (a.has_neighbor() && slot.emplace(a.token, tokens.size()).second) tokens.push_back(a.token);
  }
  std::vector<std::string> languages(tokens.size());
  parallel_for(tokens.size(), jobs, [&](std::size_t i) {
    if (text::strip_token_markers(tokens[i]).empty()) {
      languages[i] = std::string(kUndetermined);
      return;
    }
    languages[i] = providers.identify_language(tokens[i]);
  });
  for (auto& a : assignments) {
    if (a.has_neighbor()) a.language = languages[slot.at(a.token)];
  }
}

std::string transcript_sentence(const UtteranceRecord& record) {
  std::string out;
  for (const auto& w : record.words) {
    if (!out.empty()) out += ' ';
    out += w.surface;
  }
  return out;
}

void ensure_translations(UtteranceRecord& record, std::span<const std::string> languages,
                         const Providers& providers) {
  const std::string sentence = transcript_sentence(record);
  if (text::trim(sentence).empty()) return;
  for (const auto& language : languages) {
    if (language == record.language || record.translations.contains(language)) continue;
    std::string translated;
    try {
      translated = providers.translate(sentence, record.language, language);
    } catch (const Error& e) {
      if (e.code() != Errc::UnsupportedLanguagePair) throw;
      log::warn(record.utterance_id + ": no translation into '" + language + "' (" + e.detail() +
                ")");
      continue;
    }
    Translation t{translated, {}};
    if (!text::trim(translated).empty()) t.alignment = providers.align_words(sentence, translated);
    record.translations.emplace(language, std::move(t));
  }
}

// Step 3 -----------------------------------------------------------------------

std::optional<std::string> is_transcription(std::string_view word,
                                            std::span<const std::string> tokens,
                                            Normalization normalization) {
  const std::string target = normalize_text(word, normalization);
  if (target.empty()) return std::nullopt;
  for (const auto& token : tokens) {
    if (normalize_text(token, normalization) == target) return token;
  }
  return std::nullopt;
}

std::optional<TranslationMatch> is_translation(std::span<const AlignedTranslation> translations,
                                               std::span<const std::string> tokens,
                                               Normalization normalization) {
  for (const auto& translation : translations) {
    std::vector<std::string> targets;
    for (const auto& w : translation.words) {
      if (auto n = normalize_text(w, normalization); !n.empty()) targets.push_back(std::move(n));
    }
    if (targets.empty()) continue;
    for (const auto& token : tokens) {
      const std::string n = normalize_text(token, normalization);
      if (std::find(targets.begin(), targets.end(), n) != targets.end()) {
        return TranslationMatch{token, translation.language};
      }
    }
  }
  return std::nullopt;
}

std::optional<double> semantic_similarity(std::string_view word, std::string_view word_language,
                                          std::string_view token, std::string_view token_language,
                                          const MultilingualEmbeddingSpace& space,
                                          std::optional<std::string_view> english_pivot) {
  std::optional<std::span<const float>> word_vector;
  if (space.covers(word_language)) {
    word_vector = space.lookup(word_language, text::strip_token_markers(word));
  } else if (english_pivot) {
    word_vector = space.lookup("en", text::strip_token_markers(*english_pivot));
  }
  if (!word_vector) return std::nullopt;
  const auto token_vector = space.lookup(token_language, text::strip_token_markers(token));
  if (!token_vector) return std::nullopt;
  return cosine_similarity(*word_vector, *token_vector);
}

std::size_t ordered_phone_matches(std::span<const std::string> word_phones,
                                  std::span<const std::string> token_phones) {
  if (word_phones.empty()) fail(Errc::EmptyWordPhones, "word has no phones");
  // Threshold form of the longest common subsequence: thresholds[k] is the
  // smallest token position ending an ordered match of length k + 1.
  std::map<std::string_view, std::vector<std::size_t>> positions;
  for (std::size_t j = token_phones.size(); j-- > 0;) positions[token_phones[j]].push_back(j);
  std::vector<std::size_t> thresholds;
  for (const auto& phone : word_phones) {
    const auto it = positions.find(phone);
    if (it == positions.end()) continue;
    for (std::size_t j : it->second) {  // descending
      const auto slot = std::lower_bound(thresholds.begin(), thresholds.end(), j);
      if (slot == thresholds.end()) {
        thresholds.push_back(j);
      } else {
        *slot = j;
      }
    }
  }
  return thresholds.size();
}

PhoneMatch transliteration_match(std::span<const std::string> word_phones,
                                 std::span<const std::string> token_phones, double ratio,
                                 bool strict) {
  const std::size_t matched = ordered_phone_matches(word_phones, token_phones);
  // Compare matched / n against ratio without dividing.
  const double needed = ratio * static_cast<double>(word_phones.size());
  const double have = static_cast<double>(matched);
  return {matched, strict ? have > needed : have >= needed};
}

std::vector<std::string> distinct_tokens(std::span<const NeighborAssignment> frames) {
  std::vector<std::string> out;
  for (const auto& f : frames) {
    if (f.has_neighbor() && std::find(out.begin(), out.end(), f.token) == out.end()) {
      out.push_back(f.token);
    }
  }
  return out;
}

namespace {

std::optional<std::string> token_language(std::span<const NeighborAssignment> frames,
                                          const std::string& token) {
  for (const auto& f : frames) {
    if (f.has_neighbor() && f.token == token) return f.language;
  }
  return std::nullopt;
}

std::vector<std::string> phonetize_token(const std::string& token,
                                         const std::optional<std::string>& language,
                                         const std::string& fallback, const Providers& providers) {
  if (language && *language != kUndetermined && *language != fallback) {
    try {
      return providers.phonetize(token, *language);
    } catch (const Error& e) {
      if (e.code() != Errc::UnsupportedLanguage) throw;
    }
  }
  return providers.phonetize(token, fallback);
}

WordVerdict run_ladder(const WordContext& context, const VerdictConfig& config,
                       const MultilingualEmbeddingSpace& space, const Providers& providers) {
  const UtteranceRecord& record = *context.record;
  const WordSpan& word = record.words.at(context.word_index);

  WordVerdict result;
  result.utterance_id = record.utterance_id;
  result.word_index = context.word_index;
  result.surface = word.surface;

  const std::vector<std::string> tokens = distinct_tokens(context.frames);
  if (tokens.empty()) return result;

  if (config.enabled(LadderStep::Transcription)) {
    if (auto hit = is_transcription(word.surface, tokens, config.normalization)) {
      result.verdict = Verdict::Transcribed;
      result.evidence.tokens = {*hit};
      return result;
    }
  }

  if (config.enabled(LadderStep::Translation)) {
    std::vector<AlignedTranslation> translations;
    for (const auto& language : context.languages) {
      const auto it = record.translations.find(language);
      if (it == record.translations.end()) continue;
      translations.push_back({language, it->second.aligned_words(context.word_index)});
    }
    if (auto hit = is_translation(translations, tokens, config.normalization)) {
      result.verdict = Verdict::Translated;
      result.evidence.tokens = {hit->token};
      result.evidence.language = hit->language;
      return result;
    }
  }

  if (config.enabled(LadderStep::Semantic)) {
    std::optional<std::string> pivot;
    if (!space.covers(record.language)) {
      if (const auto en = record.translations.find("en"); en != record.translations.end()) {
        for (const auto& candidate : en->second.aligned_words(context.word_index)) {
          if (space.lookup("en", text::strip_token_markers(candidate))) {
            pivot = candidate;
            break;
          }
        }
      }
    }
    std::optional<double> best;
    std::string best_token;
    for (const auto& token : tokens) {
      const auto language = token_language(context.frames, token);
      std::optional<double> s;
      if (language && *language != kUndetermined) {
        s = semantic_similarity(word.surface, record.language, token, *language, space,
                                pivot ? std::optional<std::string_view>(*pivot) : std::nullopt);
      }
      if (!s) {
        result.unresolved.push_back(token);
        continue;
      }
      result.similarities.push_back(*s);
      if (!best || *s > *best) {
        best = s;
        best_token = token;
      }
    }
    if (best && *best >= config.semantic_threshold) {
      result.verdict = Verdict::Semantic;
      result.evidence.tokens = {best_token};
      result.evidence.similarity = best;
      return result;
    }
  }

  if (config.enabled(LadderStep::Transliteration)) {
    std::vector<std::string> word_phones = record.phones_of_word(context.word_index);
    if (word_phones.empty()) word_phones = providers.phonetize(word.surface, record.language);
    if (word_phones.empty()) {
      log::write(log::Level::Debug, record.utterance_id + ": no phones for '" + word.surface + "'");
      return result;
    }
    std::vector<std::string> sequence_tokens;
    std::vector<std::string> token_phones;
    std::map<std::string, std::vector<std::string>> memo;
    for (const auto& frame : context.frames) {
      if (!frame.has_neighbor()) continue;
      auto it = memo.find(frame.token);
      if (it == memo.end()) {
        it = memo.emplace(frame.token, phonetize_token(frame.token, frame.language,
                                                       record.language, providers))
                 .first;
      }
      sequence_tokens.push_back(frame.token);
      token_phones.insert(token_phones.end(), it->second.begin(), it->second.end());
    }
    const PhoneMatch match = transliteration_match(word_phones, token_phones,
                                                   config.phone_match_ratio,
                                                   config.strict_phone_ratio);
    if (match.is_match) {
      result.verdict = Verdict::Transliterated;
      result.evidence.tokens = std::move(sequence_tokens);
      result.evidence.matched_phones = match.matched_count;
      result.evidence.word_phones = word_phones.size();
      return result;
    }
  }
  return result;
}

}  // namespace

WordVerdict classify_word(const WordContext& context, const VerdictConfig& config,
                          const MultilingualEmbeddingSpace& space, const Providers& providers) {
  if (context.record == nullptr) fail(Errc::InvalidArgument, "word context without a record");
  if (context.word_index >= context.record->words.size()) {
    fail(Errc::IndexOutOfRange, "word index " + std::to_string(context.word_index));
  }
  try {
    return run_ladder(context, config, space, providers);
  } catch (const Error& e) {
    throw Error(e.code(), "utterance '" + context.record->utterance_id + "' word " +
                              std::to_string(context.word_index) + " '" +
                              context.record->words[context.word_index].surface +
                              "': " + e.detail());
  }
}

std::vector<WordVerdict> classify_utterance(const UtteranceRecord& record,
                                            const RepresentationSequence& sequence,
                                            std::span<const NeighborAssignment> assignments,
                                            std::span<const std::string> languages,
                                            const VerdictConfig& config,
                                            const MultilingualEmbeddingSpace& space,
                                            const Providers& providers, std::size_t jobs) {
  if (assignments.size() != sequence.num_frames()) {
    fail(Errc::ShapeMismatch, record.utterance_id + ": " + std::to_string(assignments.size()) +
                                  " assignments for " + std::to_string(sequence.num_frames()) +
                                  " frames");
  }
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i].frame_index != i) {
      fail(Errc::InvalidArgument, record.utterance_id + ": assignments are not in frame order");
    }
  }
  const auto spans = assign_words(record, sequence);
  std::vector<WordVerdict> out(spans.size());
  parallel_for(spans.size(), jobs, [&](std::size_t w) {
    WordContext context;
    context.record = &record;
    context.word_index = w;
    context.languages.assign(languages.begin(), languages.end());
    for (std::size_t f : spans[w].frame_indices) context.frames.push_back(assignments[f]);
    out[w] = classify_word(context, config, space, providers);
  });
  return out;
}

// Calibration --------------------------------------------------------------------

double calibrate_threshold(std::span<const SimilarityJudgement> pairs,
                           const MultilingualEmbeddingSpace& space, std::string_view language,
                           double high_cutoff) {
  std::vector<std::pair<double, bool>> observed;  // (cosine, positive)
  for (const auto& p : pairs) {
    const auto a = space.lookup(language, p.word1);
    const auto b = space.lookup(language, p.word2);
    if (!a || !b) continue;
    if (const auto c = cosine_similarity(*a, *b)) observed.emplace_back(*c, p.score >= high_cutoff);
  }
  if (observed.size() < kMinCalibrationPairs) {
    fail(Errc::InsufficientPairs, std::to_string(observed.size()) + " resolvable pairs, need " +
                                      std::to_string(kMinCalibrationPairs));
  }
  const auto positives = static_cast<std::size_t>(
      std::count_if(observed.begin(), observed.end(), [](const auto& o) { return o.second; }));
  if (positives == 0) fail(Errc::InsufficientPairs, "no pair reaches the high-similarity cutoff");

  // Descending cosine; every prefix ending at a distinct value is one candidate t.
  std::sort(observed.begin(), observed.end(),
            [](const auto& x, const auto& y) { return x.first > y.first; });
  double best_t = observed.front().first;
  double best_f1 = -1.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    (observed[i].second ? tp : fp) += 1;
    if (i + 1 < observed.size() && observed[i + 1].first == observed[i].first) continue;
    const std::size_t fn = positives - tp;
    const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    if (f1 > best_f1) {  // strict: earlier (larger) t wins ties
      best_f1 = f1;
      best_t = observed[i].first;
    }
  }
  return best_t;
}

std::vector<SimilarityJudgement> load_similarity_judgements(const fs::path& path) {
  std::istringstream in(io::read_text_file(path));
  std::vector<SimilarityJudgement> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream cols(line);
    while (std::getline(cols, field, '\t')) fields.push_back(text::trim(field));
    if (fields.size() < 3) {
      fail(Errc::InvalidArgument, path.string() + ":" + std::to_string(line_number) +
                                      ": expected word1<TAB>word2<TAB>score");
    }
    double score = 0.0;
    const auto [ptr, ec] =
        std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), score);
    if (ec != std::errc() || ptr != fields[2].data() + fields[2].size()) {
      if (line_number == 1) continue;
      fail(Errc::InvalidArgument,
           path.string() + ":" + std::to_string(line_number) + ": bad score '" + fields[2] + "'");
    }
    out.push_back({fields[0], fields[1], score});
  }
  return out;
}

// Verdict files --------------------------------------------------------------------

json to_json(const WordVerdict& v) {
  json evidence = json::object();
  if (!v.evidence.tokens.empty()) evidence["tokens"] = v.evidence.tokens;
  if (v.evidence.language) evidence["language"] = *v.evidence.language;
  if (v.evidence.similarity) evidence["similarity"] = *v.evidence.similarity;
  if (v.evidence.matched_phones) evidence["matched_phones"] = *v.evidence.matched_phones;
  if (v.evidence.word_phones) evidence["word_phones"] = *v.evidence.word_phones;
  return json{{"utterance_id", v.utterance_id},
              {"word_index", v.word_index},
              {"surface", v.surface},
              {"verdict", std::string(to_string(v.verdict))},
              {"evidence", evidence},
              {"similarities", v.similarities},
              {"unresolved", v.unresolved}};
}

WordVerdict word_verdict_from_json(const json& value) {
  try {
    WordVerdict v;
    v.utterance_id = value.at("utterance_id").get<std::string>();
    v.word_index = value.at("word_index").get<std::size_t>();
    v.surface = value.at("surface").get<std::string>();
    v.verdict = parse_verdict(value.at("verdict").get<std::string>());
    const json& e = value.at("evidence");
    if (e.contains("tokens")) v.evidence.tokens = e["tokens"].get<std::vector<std::string>>();
    if (e.contains("language")) v.evidence.language = e["language"].get<std::string>();
    if (e.contains("similarity")) v.evidence.similarity = e["similarity"].get<double>();
    if (e.contains("matched_phones")) {
      v.evidence.matched_phones = e["matched_phones"].get<std::size_t>();
    }
    if (e.contains("word_phones")) v.evidence.word_phones = e["word_phones"].get<std::size_t>();
    v.similarities = value.value("similarities", std::vector<double>{});
    v.unresolved = value.value("unresolved", std::vector<std::string>{});
    return v;
  } catch (const json::exception& e) {
    fail(Errc::InvalidArgument, std::string("malformed verdict record: ") + e.what());
  }
}

void write_verdicts(const fs::path& path, std::span<const WordVerdict> verdicts) {
  std::string out;
  for (const auto& v : verdicts) {
    out += to_json(v).dump();
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

std::vector<WordVerdict> read_verdicts(const fs::path& path) {
  std::istringstream in(io::read_text_file(path));
  std::vector<WordVerdict> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(word_verdict_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      fail(Errc::InvalidArgument, path.string() + ":" + std::to_string(line_number) + ": " +
                                      e.what());
    }
  }
  return out;
}

}  // namespace malens
