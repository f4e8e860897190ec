#include <doctest.h>

#include <cmath>
#include <map>
#include <fstream>
#include <numbers>

#include "fixtures.hpp"
#include "ladder_instances.hpp"
#include "malens/verdict.hpp"
#include "pipeline.hpp"
#include "support.hpp"

using namespace malens;
using malens::testing::error_of;
using malens::testing::TempDir;

namespace {

NeighborAssignment with_language(std::size_t frame, std::string token,
                                 std::optional<std::string> language) {
  NeighborAssignment a;
  a.frame_index = frame;
  a.token_index = frame;
  a.token = std::move(token);
  a.language = std::move(language);
  return a;
}

std::vector<NeighborAssignment> language_counts(const std::map<std::string, std::size_t>& counts) {
  std::vector<NeighborAssignment> out;
  for (const auto& [language, n] : counts) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(with_language(out.size(), "t", language));
  }
  return out;
}

MultilingualEmbeddingSpace walkthrough_space() { return *fixtures::walkthrough().space; }

/// Pair i is (a_i, b_i) with cos(a_i, b_i) equal to cosines[i].
MultilingualEmbeddingSpace pair_space(const std::vector<double>& cosines) {
  MultilingualEmbeddingSpace space(2);
  for (std::size_t i = 0; i < cosines.size(); ++i) {
    const float a[2] = {1.0F, 0.0F};
    const double theta = std::acos(cosines[i]);
    const float b[2] = {static_cast<float>(std::cos(theta)), static_cast<float>(std::sin(theta))};
    space.add("en", "a" + std::to_string(i), a);
    space.add("en", "b" + std::to_string(i), b);
  }
  return space;
}

std::vector<SimilarityJudgement> pair_judgements(const std::vector<double>& scores) {
  std::vector<SimilarityJudgement> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.push_back({"a" + std::to_string(i), "b" + std::to_string(i), scores[i]});
  }
  return out;
}

/// Every observed cosine as a candidate, F1 by direct counting, ties to the
/// larger threshold.
double calibration_oracle(const std::vector<SimilarityJudgement>& pairs,
                          const MultilingualEmbeddingSpace& space, double cutoff) {
  std::vector<std::pair<double, bool>> points;
  for (const auto& p : pairs) {
    const auto c = cosine_similarity(*space.lookup("en", p.word1), *space.lookup("en", p.word2));
    points.push_back({*c, p.score >= cutoff});
  }
  double best_t = 0.0;
  double best_f1 = -1.0;
  for (const auto& [t, unused] : points) {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (const auto& [c, positive] : points) {
      const bool predicted = c >= t;
      tp += predicted && positive;
      fp += predicted && !positive;
      fn += !predicted && positive;
    }
    const double f1 = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
    if (f1 > best_f1 || (f1 == best_f1 && t > best_t)) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return best_t;
}

}  // namespace

TEST_CASE("enum names round trip") {
  for (Verdict v : {Verdict::Transcribed, Verdict::Translated, Verdict::Semantic,
                    Verdict::Transliterated, Verdict::Unclear}) {
    CHECK(parse_verdict(to_string(v)) == v);
  }
  for (std::size_t s = 0; s < kLadderSteps; ++s) {
    const auto step = static_cast<LadderStep>(s);
    CHECK(parse_ladder_step(to_string(step)) == step);
  }
  CHECK(parse_ladder_steps("3a,3b") == std::bitset<kLadderSteps>(0b0011));
  CHECK(parse_ladder_steps("3d") == std::bitset<kLadderSteps>(0b1000));
  CHECK(error_of([] { parse_ladder_steps("3e"); }) == Errc::ConfigError);
  CHECK(error_of([] { parse_normalization("lower"); }) == Errc::ConfigError);
}

TEST_CASE("configuration ranges") {
  VerdictConfig c;
  CHECK_NOTHROW(c.validate());
  c.semantic_threshold = 1.2;
  CHECK(error_of([&] { c.validate(); }) == Errc::ConfigError);
  c = {};
  c.phone_match_ratio = 0.0;
  CHECK(error_of([&] { c.validate(); }) == Errc::ConfigError);
  c.phone_match_ratio = 1.0;
  CHECK_NOTHROW(c.validate());
  c.top_k_languages = 0;
  CHECK(error_of([&] { c.validate(); }) == Errc::ConfigError);
}

TEST_CASE("text normalization") {
  CHECK(normalize_text("▁Osaka", Normalization::Exact) == "Osaka");
  CHECK(normalize_text("▁Osaka", Normalization::Casefold) == "osaka");
  CHECK(normalize_text("Été", Normalization::Casefold) == "été");
  CHECK(normalize_text("Été", Normalization::CasefoldStripMarks) == "ete");
}

TEST_CASE("transcription check") {
  const std::vector<std::string> tokens{"▁Osaka"};
  CHECK_FALSE(is_transcription("osaka", tokens, Normalization::Exact));
  CHECK(is_transcription("osaka", tokens, Normalization::Casefold) == "▁Osaka");
  const std::vector<std::string> two{"x", "died"};
  CHECK(is_transcription("died", two, Normalization::Exact) == "died");
  CHECK_FALSE(is_transcription("died", {}, Normalization::Exact));
}

TEST_CASE("translation check scans languages in order") {
  const std::vector<AlignedTranslation> translations{{"ru", {"умер"}}, {"en", {"died", "in"}}};
  const std::vector<std::string> tokens{"▁in", "▁died"};
  const auto match = is_translation(translations, tokens, Normalization::Exact);
  REQUIRE(match);
  CHECK(match->token == "▁in");
  CHECK(match->language == "en");

  const std::vector<std::string> both{"▁died", "умер"};
  CHECK(is_translation(translations, both, Normalization::Exact)->language == "ru");
  const std::vector<std::string> none{"▁Osaka"};
  CHECK_FALSE(is_translation(translations, none, Normalization::Exact));
}

TEST_CASE("semantic similarity in the walkthrough space") {
  const auto space = walkthrough_space();
  CHECK(*semantic_similarity("mardi", "fr", "▁Tuesday", "en", space) == doctest::Approx(0.74).epsilon(1e-6));
  CHECK(*semantic_similarity("est", "fr", "▁him", "en", space) == doctest::Approx(0.17).epsilon(1e-6));
  CHECK(*semantic_similarity("il", "fr", "▁him", "en", space) == doctest::Approx(0.68).epsilon(1e-6));
  CHECK_FALSE(semantic_similarity("mardi", "fr", "▁Sunday", "en", space));
  CHECK_FALSE(semantic_similarity("mardi", "fr", "щё", "ru", space));
  // Uncovered word language: the aligned English word stands in.
  CHECK_FALSE(semantic_similarity("dienstag", "de", "▁Tuesday", "en", space));
  CHECK(*semantic_similarity("dienstag", "de", "▁Tuesday", "en", space, "tuesday") ==
        doctest::Approx(1.0));
}

TEST_CASE("cosine of zero vectors is empty") {
  const std::vector<float> zero(3, 0.0F);
  const std::vector<float> one{1.0F, 0.0F, 0.0F};
  CHECK_FALSE(cosine_similarity(zero, one));
  CHECK(*cosine_similarity(one, one) == doctest::Approx(1.0));
}

TEST_CASE("ordered phone matching") {
  const std::vector<std::string> vivez{"v", "i", "v", "e"};
  const std::vector<std::string> vi{"v", "i"};
  CHECK(ordered_phone_matches(vivez, vi) == 2);
  CHECK(transliteration_match(vivez, vi, 0.5) == PhoneMatch{2, true});
  CHECK(transliteration_match(vivez, vi, 0.5, true) == PhoneMatch{2, false});
  CHECK(transliteration_match(vivez, vi, 0.75) == PhoneMatch{2, false});
  const std::vector<std::string> reversed{"e", "v", "i", "v"};
  CHECK(ordered_phone_matches(vivez, reversed) == 3);
  CHECK(error_of([&] { ordered_phone_matches({}, vi); }) == Errc::EmptyWordPhones);
  CHECK(ordered_phone_matches(vivez, {}) == 0);
}

TEST_CASE("ordered phone matching agrees with the dynamic-programming oracle") {
  Rng rng(91);
  const std::vector<std::string> alphabet{"a", "b", "c", "d", "ɛ", "ʁ"};
  for (int n = 0; n < 1000; ++n) {
    std::vector<std::string> a(1 + rng.below(12));
    std::vector<std::string> b(rng.below(15));
    const std::size_t letters = 2 + rng.below(alphabet.size() - 1);
    for (auto& x : a) x = alphabet[rng.below(letters)];
    for (auto& x : b) x = alphabet[rng.below(letters)];
    REQUIRE(ordered_phone_matches(a, b) == malens::testing::lcs_oracle(a, b));
  }
}

TEST_CASE("language ranking") {
  const auto ranked = top_languages(language_counts({{"en", 90}, {"zh", 8}, {"fr", 2}}));
  CHECK(ranked == std::vector<std::string>{"en", "zh", "fr"});
  CHECK(top_languages(language_counts({{"en", 90}, {"zh", 8}, {"fr", 2}}), 1) ==
        std::vector<std::string>{"en"});

  auto tied = language_counts({{"fr", 5}, {"de", 5}, {"und", 10}});
  NeighborAssignment sentinel;
  sentinel.frame_index = tied.size();
  tied.push_back(sentinel);
  tied.push_back(with_language(tied.size(), "t", std::nullopt));
  CHECK(top_languages(tied) == std::vector<std::string>{"de", "fr"});

  CHECK(error_of([] { top_languages(language_counts({{"und", 3}})); }) == Errc::NoIdentifiedTokens);
}

TEST_CASE("distinct tokens keep first-seen order") {
  std::vector<NeighborAssignment> frames{with_language(0, "▁b", "en"), with_language(1, "▁a", "en"),
                                         with_language(2, "▁b", "en")};
  NeighborAssignment sentinel;
  sentinel.frame_index = 3;
  frames.push_back(sentinel);
  CHECK(distinct_tokens(frames) == std::vector<std::string>{"▁b", "▁a"});
}

TEST_CASE("walkthrough sentence end to end") {
  TempDir dir;
  const auto paths = fixtures::write_corpus(fixtures::walkthrough(), dir.path());
  const auto result = malens::testing::run_pipeline(paths, fixtures::walkthrough_config());
  REQUIRE(result.verdicts.size() == 1);
  const auto& words = result.verdicts[0];
  REQUIRE(words.size() == fixtures::kWalkthroughVerdicts.size());
  for (std::size_t w = 0; w < words.size(); ++w) {
    CAPTURE(words[w].surface);
    CHECK(words[w].surface == fixtures::kWalkthroughVerdicts[w].first);
    CHECK(words[w].verdict == fixtures::kWalkthroughVerdicts[w].second);
  }
  CHECK(words[0].evidence.tokens == std::vector<std::string>{"▁him"});
  CHECK(*words[0].evidence.similarity == doctest::Approx(0.68).epsilon(1e-6));
  CHECK(words[2].evidence.tokens == std::vector<std::string>{"▁died"});
  CHECK(words[2].evidence.language == "en");
  CHECK(*words[5].evidence.similarity == doctest::Approx(0.74).epsilon(1e-6));
  CHECK(words[1].similarities.size() == 1);
  CHECK(words[1].similarities[0] == doctest::Approx(0.17).epsilon(1e-6));
  CHECK(words[1].evidence.empty());
}

TEST_CASE("walkthrough under other settings") {
  TempDir dir;
  const auto paths = fixtures::write_corpus(fixtures::walkthrough(), dir.path());

  SUBCASE("casefolding turns osaka into a transcription") {
    auto config = fixtures::walkthrough_config();
    config.normalization = Normalization::Casefold;
    const auto words = malens::testing::run_pipeline(paths, config).verdicts[0];
    CHECK(words[4].verdict == Verdict::Transcribed);
    CHECK(words[4].evidence.tokens == std::vector<std::string>{"▁Osaka"});
  }
  SUBCASE("a lower threshold makes est semantic") {
    auto config = fixtures::walkthrough_config();
    config.semantic_threshold = 0.15;
    const auto words = malens::testing::run_pipeline(paths, config).verdicts[0];
    CHECK(words[1].verdict == Verdict::Semantic);
    CHECK(words[3].verdict == Verdict::Unclear);
  }
  SUBCASE("without 3c only the translation remains") {
    auto config = fixtures::walkthrough_config();
    config.enabled_steps = parse_ladder_steps("3a,3b");
    const auto words = malens::testing::run_pipeline(paths, config).verdicts[0];
    for (std::size_t w = 0; w < words.size(); ++w) {
      CHECK(words[w].verdict == (w == 2 ? Verdict::Translated : Verdict::Unclear));
      CHECK(words[w].similarities.empty());
    }
  }
}

TEST_CASE("transcription takes precedence over translation") {
  UtteranceRecord record;
  record.utterance_id = "u";
  record.language = "en";
  record.words = {{"died", 0, 340}};
  record.translations["fr"] = Translation{"mort", {{0, 0}}};
  WordContext context;
  context.record = &record;
  context.frames = {with_language(0, "mort", "fr"), with_language(1, "died", "en")};
  context.languages = {"fr", "en"};
  VerdictConfig config;
  config.enabled_steps = parse_ladder_steps("3a,3b");
  const MultilingualEmbeddingSpace space(2);
  const Providers providers;
  const auto verdict = classify_word(context, config, space, providers);
  CHECK(verdict.verdict == Verdict::Transcribed);
  CHECK(verdict.evidence.tokens == std::vector<std::string>{"died"});

  config.enabled_steps = parse_ladder_steps("3b");
  const auto translated = classify_word(context, config, space, providers);
  CHECK(translated.verdict == Verdict::Translated);
  CHECK(translated.evidence.language == "fr");
}

TEST_CASE("utterance classification checks its inputs") {
  TempDir dir;
  const auto paths = fixtures::write_corpus(fixtures::walkthrough(), dir.path());
  const Corpus corpus = load_corpus(paths.manifest);
  const auto record = corpus.record(0);
  const auto sequence = corpus.sequence(0, Stage::AdapterOutput);
  auto assignments = assign_neighbors(sequence, corpus.embedding_matrix());
  const MultilingualEmbeddingSpace space(2);
  const Providers providers;
  const std::vector<std::string> languages{"en"};
  const VerdictConfig config = fixtures::walkthrough_config();

  auto shorter = assignments;
  shorter.pop_back();
  CHECK(error_of([&] {
          classify_utterance(record, sequence, shorter, languages, config, space, providers);
        }) == Errc::ShapeMismatch);
  std::swap(assignments[0], assignments[1]);
  CHECK(error_of([&] {
          classify_utterance(record, sequence, assignments, languages, config, space, providers);
        }) == Errc::InvalidArgument);
}

TEST_CASE("transliteration needs a g2p route") {
  UtteranceRecord record;
  record.utterance_id = "u";
  record.language = "fr";
  record.words = {{"vivez", 0, 340}};
  WordContext context;
  context.record = &record;
  context.frames = {with_language(0, "▁vi", "en")};
  const MultilingualEmbeddingSpace space(2);
  const Providers providers;
  VerdictConfig config;
  config.enabled_steps = parse_ladder_steps("3d");
  CHECK(error_of([&] { classify_word(context, config, space, providers); }).has_value());
}

TEST_CASE("threshold calibration") {
  SUBCASE("cosines tracking the scores recover the cutoff") {
    std::vector<double> scores;
    for (int i = 0; i < 121; ++i) scores.push_back(i % 11);
    std::vector<double> cosines;
    for (double s : scores) cosines.push_back(s / 10.0);
    const auto space = pair_space(cosines);
    CHECK(calibrate_threshold(pair_judgements(scores), space) == doctest::Approx(0.7).epsilon(1e-6));
  }
  SUBCASE("too few pairs or no positives") {
    const std::vector<double> few(99, 8.0);
    CHECK(error_of([&] {
            calibrate_threshold(pair_judgements(few), pair_space(std::vector<double>(99, 0.5)));
          }) == Errc::InsufficientPairs);
    const std::vector<double> low(120, 2.0);
    CHECK(error_of([&] {
            calibrate_threshold(pair_judgements(low), pair_space(std::vector<double>(120, 0.5)));
          }) == Errc::InsufficientPairs);
  }
  SUBCASE("unresolvable pairs do not count") {
    auto judgements = pair_judgements(std::vector<double>(100, 8.0));
    judgements[0].word1 = "missing";
    CHECK(error_of([&] {
            calibrate_threshold(judgements, pair_space(std::vector<double>(100, 0.5)));
          }) == Errc::InsufficientPairs);
  }
  SUBCASE("random instances agree with a brute-force sweep") {
    Rng rng(17);
    for (int n = 0; n < 50; ++n) {
      const std::size_t count = 100 + rng.below(60);
      std::vector<double> cosines;
      std::vector<double> scores;
      for (std::size_t i = 0; i < count; ++i) {
        scores.push_back(std::round(rng.uniform() * 100.0) / 10.0);
        const double noisy = scores.back() / 10.0 + 0.3 * (rng.uniform() - 0.5);
        cosines.push_back(std::clamp(std::round(noisy * 20.0) / 20.0, -1.0, 1.0));
      }
      scores[0] = 9.0;
      const auto space = pair_space(cosines);
      const auto judgements = pair_judgements(scores);
      REQUIRE(calibrate_threshold(judgements, space) == calibration_oracle(judgements, space, 7.0));
    }
  }
}

TEST_CASE("similarity judgements file") {
  TempDir dir;
  const auto path = dir / "simlex.txt";
  {
    std::ofstream out(path);
    out << "word1\tword2\tSimLex999\nold\tnew\t1.58\nsmart\tintelligent\t9.2\n";
  }
  const auto pairs = load_similarity_judgements(path);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[1].word2 == "intelligent");
  CHECK(pairs[1].score == doctest::Approx(9.2));
}

TEST_CASE("verdict records round trip") {
  WordVerdict v;
  v.utterance_id = "u1";
  v.word_index = 3;
  v.surface = "vivez";
  v.verdict = Verdict::Transliterated;
  v.evidence.tokens = {"▁vi", "vez"};
  v.evidence.matched_phones = 4;
  v.evidence.word_phones = 4;
  v.similarities = {0.25, -0.5};
  v.unresolved = {"щё"};
  CHECK(word_verdict_from_json(to_json(v)) == v);

  WordVerdict s;
  s.utterance_id = "u2";
  s.surface = "mardi";
  s.verdict = Verdict::Semantic;
  s.evidence.tokens = {"▁Tuesday"};
  s.evidence.similarity = 0.74;
  TempDir dir;
  const std::vector<WordVerdict> all{v, s};
  write_verdicts(dir / "v.jsonl", all);
  CHECK(read_verdicts(dir / "v.jsonl") == all);
}

TEST_CASE("ladder properties over random instances") {
  const auto report = malens::testing::check_ladder_properties(5, 1000);
  CHECK(report.instances == 1000);
  CHECK(report.threshold_violations == 0);
  CHECK(report.ratio_violations == 0);
  CHECK(report.precedence_violations == 0);
  CHECK(report.nondeterministic == 0);
  // The generator reaches every outcome.
  CHECK(report.verdicts.size() == 5);
}

TEST_CASE("synthetic corpus verdicts") {
  TempDir dir;
  const auto synthetic = fixtures::synthetic_corpus(3, 6);
  const auto paths = fixtures::write_corpus(synthetic.plan, dir.path());
  const auto one = malens::testing::run_pipeline(paths, VerdictConfig{}, 1);
  const auto four = malens::testing::run_pipeline(paths, VerdictConfig{}, 4);
  CHECK(one.verdicts == four.verdicts);
  REQUIRE(one.verdicts.size() == synthetic.verdicts.size());
  for (std::size_t u = 0; u < one.verdicts.size(); ++u) {
    REQUIRE(one.verdicts[u].size() == synthetic.verdicts[u].size());
    for (std::size_t w = 0; w < one.verdicts[u].size(); ++w) {
      CAPTURE(one.verdicts[u][w].surface);
      CHECK(one.verdicts[u][w].verdict == synthetic.verdicts[u][w]);
    }
  }
}
