#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "malens/error.hpp"
#include "malens/rng.hpp"
#include "malens/text.hpp"

namespace malens::fixtures {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::size_t row_of(const std::vector<std::string>& vocabulary, const std::string& token) {
  const auto it = std::find(vocabulary.begin(), vocabulary.end(), token);
  if (it == vocabulary.end()) fail(Errc::InvalidArgument, "token '" + token + "' not in vocabulary");
  return static_cast<std::size_t>(it - vocabulary.begin());
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

/// Unit vector at `axis` scaled by c, plus sqrt(1 - c^2) at `other`.
std::vector<float> blend(std::size_t dim, std::size_t axis, double c, std::size_t other) {
  std::vector<float> v(dim, 0.0f);
  v[other] = static_cast<float>(std::sqrt(1.0 - c * c));
  v[axis] = static_cast<float>(c);
  return v;
}

std::vector<float> unit(std::size_t dim, std::size_t axis) { return blend(dim, axis, 1.0, axis); }

void freeze_phones(CorpusPlan& plan, const std::string& token, const std::string& language,
                   std::vector<std::string> phones) {
  plan.responses.push_back(
      {ProviderRequest::phonetize(text::strip_token_markers(token), language), json(phones)});
}

}  // namespace

EmbeddingMatrix build_matrix(const CorpusPlan& plan) {
  std::set<std::string> seen;
  for (const auto& t : plan.vocabulary) {
    if (!seen.insert(t).second) fail(Errc::InvalidArgument, "duplicate vocabulary entry '" + t + "'");
  }
  Rng rng(plan.seed);
  std::vector<float> values(plan.vocabulary.size() * plan.dim);
  for (float& v : values) v = static_cast<float>(rng.normal());
  return EmbeddingMatrix(plan.dim, std::move(values), plan.vocabulary);
}

RepresentationSequence build_sequence(const CorpusPlan& plan, const FixtureUtterance& utterance,
                                      const EmbeddingMatrix& matrix) {
  std::vector<float> frames;
  for (const auto& token : utterance.frame_tokens) {
    const auto row = matrix.row(row_of(plan.vocabulary, token));
    frames.insert(frames.end(), row.begin(), row.end());
  }
  return RepresentationSequence(utterance.utterance_id, plan.stage, plan.frame_ms, plan.dim,
                                std::move(frames));
}

UtteranceRecord build_record(const CorpusPlan& plan, const FixtureUtterance& utterance) {
  UtteranceRecord record;
  record.utterance_id = utterance.utterance_id;
  record.language = plan.language;
  record.translations = utterance.translations;
  for (std::size_t w = 0; w < utterance.words.size(); ++w) {
    const auto& word = utterance.words[w];
    record.words.push_back({word.surface, word.start_ms, word.end_ms});
    const auto n = static_cast<TimeMs>(word.phones.size());
    const TimeMs length = word.end_ms - word.start_ms;
    for (TimeMs k = 0; k < n; ++k) {
      record.phones.push_back({word.phones[static_cast<std::size_t>(k)],
                               word.start_ms + k * length / n, word.start_ms + (k + 1) * length / n,
                               w});
    }
  }
  validate(record);
  return record;
}

std::vector<FrozenResponse> frozen_responses(const CorpusPlan& plan) {
  std::vector<FrozenResponse> out;
  std::map<std::string, std::string> by_text;
  for (const auto& [token, language] : plan.token_languages) {
    const std::string cleaned = text::strip_token_markers(token);
    if (cleaned.empty()) continue;
    const auto [it, inserted] = by_text.emplace(cleaned, language);
    if (!inserted && it->second != language) {
      fail(Errc::InvalidArgument, "tokens stripping to '" + cleaned + "' disagree on language");
    }
  }
  for (const auto& [cleaned, language] : by_text) {
    out.push_back({ProviderRequest::lang_id(cleaned), json(language)});
  }
  out.insert(out.end(), plan.responses.begin(), plan.responses.end());
  return out;
}

CorpusPaths write_corpus(const CorpusPlan& plan, const fs::path& root) {
  CorpusPaths paths;
  paths.root = root;
  paths.manifest = root / "manifest.json";
  paths.fixtures = root / "fixtures";

  const EmbeddingMatrix matrix = build_matrix(plan);
  CorpusManifest manifest;
  manifest.corpus_id = plan.corpus_id;
  manifest.model_id = plan.model_id;
  manifest.language = plan.language;
  manifest.embedding_matrix_path = root / "embedding.bin";
  write_embedding_matrix(manifest.embedding_matrix_path, matrix);

  for (const auto& utterance : plan.utterances) {
    CorpusEntry entry;
    entry.utterance_id = utterance.utterance_id;
    entry.record_path = root / "records" / (utterance.utterance_id + ".json");
    write_utterance_record(entry.record_path, build_record(plan, utterance));
    const fs::path sequence_path = root / "sequences" / (utterance.utterance_id + ".bin");
    write_representation_sequence(sequence_path, build_sequence(plan, utterance, matrix));
    entry.sequence_paths[plan.stage] = sequence_path;
    manifest.entries.push_back(std::move(entry));
  }
  write_manifest(paths.manifest, manifest);

  FixtureBackend store(paths.fixtures);
  for (const auto& frozen : frozen_responses(plan)) store.freeze(frozen.request, frozen.response);

  if (plan.space) {
    paths.space = root / "space" / "space.json";
    plan.space->save(paths.space);
  }
  return paths;
}

void append_word(FixtureUtterance& utterance, std::uint32_t frame_ms, std::string surface,
                 std::vector<std::string> tokens, std::vector<std::string> phones) {
  const TimeMs start = utterance.words.empty() ? 0 : utterance.words.back().end_ms;
  const auto length = static_cast<TimeMs>(tokens.size()) * static_cast<TimeMs>(frame_ms);
  utterance.words.push_back({std::move(surface), start, start + length, std::move(phones)});
  utterance.frame_tokens.insert(utterance.frame_tokens.end(), tokens.begin(), tokens.end());
}

// Walkthrough -----------------------------------------------------------------

CorpusPlan walkthrough() {
  CorpusPlan plan;
  plan.corpus_id = "walkthrough-fr";
  plan.model_id = "walkthrough";
  plan.language = "fr";
  plan.frame_ms = 340;
  plan.dim = 16;
  plan.seed = 2024;

  const std::vector<std::string> tokens = {"щё", "▁him", "▁died", "▁in", "▁Osaka", "▁Tuesday"};
  plan.vocabulary = tokens;
  for (int i = 0; i < 34; ++i) plan.vocabulary.push_back("▁filler" + std::to_string(i));
  for (const auto& t : tokens) plan.token_languages[t] = t == "щё" ? "ru" : "en";

  FixtureUtterance u;
  u.utterance_id = "walkthrough-0001";
  u.frame_tokens = tokens;
  u.words = {{"il", 0, 600, {}},         {"est", 600, 680, {}},      {"mort", 680, 1020, {}},
             {"à", 1020, 1360, {}},      {"osaka", 1360, 1700, {}},  {"mardi", 1700, 2040, {}}};
  u.translations["en"] = Translation{
      "he him died ‖ cal Sunday",
      {{0, 0}, {2, 1}, {2, 2}, {3, 2}, {3, 3}, {4, 3}, {4, 4}, {5, 5}}};
  plan.utterances.push_back(u);

  const std::string sentence = "il est mort à osaka mardi";
  const std::string russian = "он умер в осаке во вторник";
  plan.responses.push_back({ProviderRequest::translate(sentence, "fr", "ru"), json(russian)});
  plan.responses.push_back({ProviderRequest::word_align(sentence, russian),
                            json::parse("[[0,0],[2,1],[3,2],[4,3],[5,4],[5,5]]")});
  const std::string english = "he died in osaka on tuesday";
  plan.responses.push_back({ProviderRequest::translate(sentence, "fr", "en"), json(english)});
  plan.responses.push_back({ProviderRequest::word_align(sentence, english),
                            json::parse("[[0,0],[2,1],[3,2],[4,3],[5,4],[5,5]]")});

  // Axes: him 0, in 3, osaka 5, tuesday 7, died 9, he 11; French words lean
  // towards their English partner by the tabulated cosine.
  constexpr std::size_t d = 12;
  MultilingualEmbeddingSpace space(d);
  space.add("en", "him", unit(d, 0));
  space.add("en", "in", unit(d, 3));
  space.add("en", "osaka", unit(d, 5));
  space.add("en", "tuesday", unit(d, 7));
  space.add("en", "died", unit(d, 9));
  space.add("en", "he", unit(d, 11));
  space.add("fr", "il", blend(d, 0, 0.68, 1));
  space.add("fr", "est", blend(d, 0, 0.17, 2));
  space.add("fr", "à", blend(d, 3, 0.07, 4));
  space.add("fr", "osaka", blend(d, 5, 0.14, 6));
  space.add("fr", "mardi", blend(d, 7, 0.74, 8));
  space.add("fr", "mort", blend(d, 9, 0.5, 10));
  plan.space = std::move(space);
  return plan;
}

VerdictConfig walkthrough_config() {
  VerdictConfig config;
  config.normalization = Normalization::Exact;
  config.enabled_steps = parse_ladder_steps("3a,3b,3c");
  return config;
}

// Synthetic corpus --------------------------------------------------------------

namespace {

struct LexiconEntry {
  std::string surface;
  Verdict verdict;
  std::string gloss;  // aligned English word
  std::vector<std::string> tokens;
  std::vector<std::string> phones;
};

struct TokenInfo {
  std::string language;
  std::vector<std::string> phones;
};

}  // namespace

SyntheticCorpus synthetic_corpus(std::uint64_t seed, std::size_t utterances) {
  const std::vector<LexiconEntry> lexicon = {
      {"maison", Verdict::Transcribed, "house", {"▁maison"}, {"m", "ɛ", "z", "ɔ̃"}},
      {"soleil", Verdict::Transcribed, "sun", {"▁soleil"}, {"s", "ɔ", "l", "ɛ", "j"}},
      {"rouge", Verdict::Transcribed, "red", {"▁rouge"}, {"ʁ", "u", "ʒ"}},
      {"chien", Verdict::Translated, "dog", {"▁dog"}, {"ʃ", "j", "ɛ̃"}},
      {"chat", Verdict::Translated, "cat", {"▁cat"}, {"ʃ", "a"}},
      {"livre", Verdict::Translated, "book", {"▁book"}, {"l", "i", "v", "ʁ"}},
      {"voiture", Verdict::Semantic, "automobile", {"▁car"}, {"v", "w", "a", "t", "y", "ʁ"}},
      {"mer", Verdict::Semantic, "seaside", {"▁sea"}, {"m", "ɛ", "ʁ"}},
      {"vivez", Verdict::Transliterated, "live", {"▁vi", "vez"}, {"v", "i", "v", "e"}},
      {"variée", Verdict::Transliterated, "varied", {"▁var"}, {"v", "a", "ʁ", "j", "e"}},
      {"arbre", Verdict::Unclear, "tree", {"▁qux"}, {"a", "ʁ", "b", "ʁ"}},
      {"pomme", Verdict::Unclear, "apple", {"▁zip"}, {"p", "ɔ", "m"}},
  };
  const std::map<std::string, TokenInfo> token_info = {
      {"▁maison", {"fr", {"m", "ɛ", "z", "ɔ̃"}}},
      {"▁soleil", {"fr", {"s", "ɔ", "l", "ɛ", "j"}}},
      {"▁rouge", {"fr", {"ʁ", "u", "ʒ"}}},
      {"▁dog", {"en", {"d", "ɒ", "ɡ"}}},
      {"▁cat", {"en", {"k", "æ", "t"}}},
      {"▁book", {"en", {"b", "ʊ", "k"}}},
      {"▁car", {"en", {"k", "ɑ", "ɹ"}}},
      {"▁sea", {"en", {"s", "i"}}},
      {"▁vi", {"en", {"v", "i"}}},
      {"vez", {"en", {"v", "e", "z"}}},
      {"▁var", {"en", {"v", "a", "ʁ"}}},
      {"▁qux", {"en", {"k", "u", "k", "s"}}},
      {"▁zip", {"en", {"z", "ɪ", "p"}}},
      {"谄", {"zh", {}}},
      {"文本", {"zh", {}}},
      {"ベース", {"ja", {}}},
  };
  const std::vector<std::string> fillers = {"谄", "文本", "ベース"};

  SyntheticCorpus out;
  CorpusPlan& plan = out.plan;
  plan.corpus_id = "synthetic-fr";
  plan.model_id = "synthetic";
  plan.language = "fr";
  plan.frame_ms = 80;
  plan.dim = 24;
  plan.seed = seed;
  for (const auto& [token, info] : token_info) {
    plan.vocabulary.push_back(token);
    plan.token_languages[token] = info.language;
    freeze_phones(plan, token, info.language, info.phones);
  }
  for (int i = 0; i < 40; ++i) plan.vocabulary.push_back("▁pad" + std::to_string(i));

  Rng rng(seed);
  for (std::size_t u = 0; u < utterances; ++u) {
    FixtureUtterance utt;
    utt.utterance_id = "synthetic-" + std::to_string(u);
    std::vector<std::string> surfaces;
    std::vector<std::string> glosses;
    std::vector<Verdict> verdicts;
    const std::size_t n_words = 3 + rng.below(5);
    for (std::size_t w = 0; w < n_words; ++w) {
      const LexiconEntry& entry = lexicon[rng.below(lexicon.size())];
      std::vector<std::string> frames = entry.tokens;
      const std::size_t n_fillers = rng.below(3);
      for (std::size_t f = 0; f < n_fillers; ++f) {
        const auto at = static_cast<long>(rng.below(frames.size() + 1));
        frames.insert(frames.begin() + at, fillers[rng.below(fillers.size())]);
      }
      for (const auto& t : frames) ++out.language_counts[token_info.at(t).language];
      append_word(utt, plan.frame_ms, entry.surface, frames, entry.phones);
      surfaces.push_back(entry.surface);
      glosses.push_back(entry.gloss);
      verdicts.push_back(entry.verdict);
    }
    Translation english{join(glosses), {}};
    for (std::size_t w = 0; w < n_words; ++w) english.alignment.push_back({w, w});
    utt.translations["en"] = english;

    const std::string sentence = join(surfaces);
    for (const auto& [language, reply] :
         std::map<std::string, std::string>{{"zh", "无关 句子"}, {"ja", "無関係 な 文"}}) {
      plan.responses.push_back({ProviderRequest::translate(sentence, "fr", language), json(reply)});
      plan.responses.push_back({ProviderRequest::word_align(sentence, reply), json::array()});
    }
    plan.utterances.push_back(std::move(utt));
    out.verdicts.push_back(std::move(verdicts));
  }

  constexpr std::size_t d = 32;
  MultilingualEmbeddingSpace space(d);
  const std::vector<std::string> english = {"house", "sun", "red", "dog", "cat", "book",
                                            "car", "sea", "tree", "apple", "automobile", "seaside"};
  for (std::size_t i = 0; i < english.size(); ++i) space.add("en", english[i], unit(d, i));
  std::size_t axis = english.size();
  for (const auto& entry : lexicon) {
    if (entry.surface == "voiture") {
      space.add("fr", entry.surface, blend(d, 6, 0.8, axis++));
    } else if (entry.surface == "mer") {
      space.add("fr", entry.surface, blend(d, 7, 0.7, axis++));
    } else {
      space.add("fr", entry.surface, unit(d, axis++));
    }
  }
  plan.space = std::move(space);
  return out;
}

}  // namespace malens::fixtures
