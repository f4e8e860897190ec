#include "malens/asr_eval.hpp"

#include <algorithm>

#include "malens/error.hpp"
#include "malens/io.hpp"
#include "malens/parallel.hpp"
#include "malens/text.hpp"

namespace malens {

using nlohmann::json;

std::string_view to_string(WerScheme scheme) noexcept {
  return scheme == WerScheme::Char ? "char" : "whitespace";
}

WerScheme parse_wer_scheme(std::string_view name) {
  if (name == "whitespace") return WerScheme::Whitespace;
  if (name == "char") return WerScheme::Char;
  fail(Errc::ConfigError, "unknown WER scheme '" + std::string(name) + "'");
}

WerScheme WerSchemeMap::scheme_for(std::string_view language) const {
  const auto it = overrides.find(language);
  return it == overrides.end() ? fallback : it->second;
}

std::vector<std::string> tokenize_for_wer(std::string_view input, WerScheme scheme,
                                          bool casefold) {
  const std::string normalized = casefold ? text::casefold(input) : std::string(input);
  std::vector<std::string> out;
  if (scheme == WerScheme::Whitespace) {
    for (const auto& token : text::split_whitespace(normalized)) {
      if (auto t = text::trim_punctuation(token); !t.empty()) out.push_back(std::move(t));
    }
    return out;
  }
  for (auto& cluster : text::grapheme_clusters(normalized)) {
    const std::u32string cps = text::decode_utf8(cluster);
    if (!cps.empty() && text::is_punctuation(cps.front())) continue;
    out.push_back(std::move(cluster));
  }
  return out;
}

EditCounts& EditCounts::operator+=(const EditCounts& other) noexcept {
  substitutions += other.substitutions;
  deletions += other.deletions;
  insertions += other.insertions;
  reference_length += other.reference_length;
  return *this;
}

EditCounts edit_counts(std::span<const std::string> reference,
                       std::span<const std::string> hypothesis) {
  // Rolling rows over the hypothesis; each cell keeps the operation counts of
  // its best path so no traceback matrix is needed.
  const std::size_t m = hypothesis.size();
  std::vector<EditCounts> prev(m + 1);
  std::vector<EditCounts> cur(m + 1);
  for (std::size_t j = 1; j <= m; ++j) prev[j].insertions = j;

  auto better = [](const EditCounts& a, const EditCounts& b) {
    if (a.distance() != b.distance()) return a.distance() < b.distance();
    if (a.substitutions != b.substitutions) return a.substitutions > b.substitutions;
    return a.deletions > b.deletions;
  };

  for (std::size_t i = 1; i <= reference.size(); ++i) {
    cur[0] = EditCounts{};
    cur[0].deletions = i;
    for (std::size_t j = 1; j <= m; ++j) {
      EditCounts diag = prev[j - 1];
      if (reference[i - 1] != hypothesis[j - 1]) ++diag.substitutions;
      EditCounts del = prev[j];
      ++del.deletions;
      EditCounts ins = cur[j - 1];
      ++ins.insertions;
      EditCounts best = diag;
      if (better(del, best)) best = del;
      if (better(ins, best)) best = ins;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  EditCounts result = prev[m];
  result.reference_length = reference.size();
  return result;
}

double wer(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  if (reference.empty()) fail(Errc::EmptyReference, "WER of an empty reference");
  const EditCounts c = edit_counts(reference, hypothesis);
  return static_cast<double>(c.distance()) / static_cast<double>(reference.size());
}

HypothesisSet load_hypotheses(const std::filesystem::path& path) {
  const json doc = io::read_json_file(path);
  try {
    HypothesisSet set;
    set.model_id = doc.value("model_id", "");
    set.language = doc.value("language", "");
    set.hypotheses = doc.at("hypotheses").get<std::map<std::string, std::string>>();
    return set;
  } catch (const json::exception& e) {
    fail(Errc::InvalidArgument, path.string() + ": " + e.what());
  }
}

void write_hypotheses(const std::filesystem::path& path, const HypothesisSet& set) {
  io::write_file_atomic(path, io::dump_json(json{{"model_id", set.model_id},
                                                 {"language", set.language},
                                                 {"hypotheses", set.hypotheses}}));
}

double lang_match_rate(const HypothesisSet& hypotheses, std::string_view expected,
                       const Providers& providers, std::size_t jobs) {
  if (hypotheses.hypotheses.empty()) fail(Errc::EmptyInput, "no hypotheses to identify");
  std::vector<const std::string*> texts;
  for (const auto& [id, text_value] : hypotheses.hypotheses) texts.push_back(&text_value);
  std::vector<char> match(texts.size(), 0);
  parallel_for(texts.size(), jobs, [&](std::size_t i) {
    if (text::strip_token_markers(*texts[i]).empty()) return;
    match[i] = providers.identify_language(*texts[i]) == expected ? 1 : 0;
  });
  const auto hits = std::count(match.begin(), match.end(), 1);
  return 100.0 * static_cast<double>(hits) / static_cast<double>(texts.size());
}

double CorpusWer::wer_percent() const {
  if (edits.reference_length == 0) fail(Errc::EmptyReference, "corpus has no reference words");
  return 100.0 * static_cast<double>(edits.distance()) /
         static_cast<double>(edits.reference_length);
}

CorpusWer score_hypotheses(const std::map<std::string, std::string>& references,
                           const HypothesisSet& hypotheses, WerScheme scheme, bool casefold,
                           std::size_t jobs) {
  for (const auto& [id, text_value] : hypotheses.hypotheses) {
    if (!references.contains(id)) {
      fail(Errc::UtteranceMismatch, "hypothesis for unknown utterance '" + id + "'");
    }
  }
  for (const auto& [id, text_value] : references) {
    if (!hypotheses.hypotheses.contains(id)) {
      fail(Errc::UtteranceMismatch, "no hypothesis for utterance '" + id + "'");
    }
  }
  std::vector<std::pair<const std::string*, const std::string*>> items;
  for (const auto& [id, ref] : references) items.emplace_back(&ref, &hypotheses.hypotheses.at(id));
  std::vector<EditCounts> counts(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto ref = tokenize_for_wer(*items[i].first, scheme, casefold);
    const auto hyp = tokenize_for_wer(*items[i].second, scheme, casefold);
    counts[i] = edit_counts(ref, hyp);
  });
  CorpusWer out;
  out.utterances = items.size();
  for (const auto& c : counts) out.edits += c;
  return out;
}

}  // namespace malens
