#pragma once

// Randomized single-word ladder instances and the ladder properties checked
// over them: threshold monotonicity, phone-ratio monotonicity, step
// precedence stability and determinism.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "malens/error.hpp"
#include "malens/providers.hpp"
#include "malens/rng.hpp"
#include "malens/verdict.hpp"

namespace malens::testing {

/// Language identification and g2p answered from fixed tables.
class TableBackend final : public ProviderBackend {
 public:
  std::map<std::string, std::string> languages;
  std::map<std::string, std::vector<std::string>> phones;

  std::string name() const override { return "table"; }
  nlohmann::json call(const ProviderRequest& request) override {
    const std::string& text = request.texts.at(0);
    if (request.capability == Capability::LangId) {
      const auto it = languages.find(text);
      return it == languages.end() ? std::string("und") : it->second;
    }
    if (request.capability == Capability::Phonetize) {
      const auto it = phones.find(text);
      return it == phones.end() ? nlohmann::json::array() : nlohmann::json(it->second);
    }
    fail(Errc::ProviderUnavailable, "table backend only answers langid and g2p");
  }
};

class LadderWorld {
 public:
  explicit LadderWorld(std::uint64_t seed) : rng_(seed), space_(8) {
    backend_ = std::make_shared<TableBackend>();
    for (std::size_t i = 0; i < 6; ++i) {
      fr_.push_back("mot" + std::to_string(i));
      en_.push_back("word" + std::to_string(i));
    }
    const std::vector<std::string> alphabet{"p", "t", "k", "a", "i", "u"};
    auto random_phones = [&] {
      std::vector<std::string> out(1 + rng_.below(5));
      for (auto& p : out) p = alphabet[rng_.below(alphabet.size())];
      return out;
    };
    for (const auto& w : fr_) {
      space_.add("fr", w, random_vector());
      word_phones_[w] = random_phones();
      backend_->languages[w] = "fr";
      backend_->phones[w] = word_phones_[w];
    }
    for (const auto& w : en_) {
      space_.add("en", w, random_vector());
      backend_->languages[w] = "en";
      backend_->phones[w] = random_phones();
    }
    backend_->languages["谄"] = "zh";
    backend_->phones["谄"] = random_phones();
    providers_.route_all(backend_);
  }

  struct Instance {
    UtteranceRecord record;
    WordContext context;
  };

  /// One word with 1-4 frames of random tokens and a random English
  /// alignment. Half the records carry the word's phones; the rest leave
  /// them to g2p.
  Instance make() {
    Instance inst;
    UtteranceRecord& r = inst.record;
    r.utterance_id = "u" + std::to_string(counter_++);
    r.language = "fr";
    const std::string& surface = fr_[rng_.below(fr_.size())];
    const std::size_t frames = 1 + rng_.below(4);
    r.words = {{surface, 0, static_cast<TimeMs>(frames * 340)}};
    if (rng_.below(2) == 0) {
      for (const auto& phone : word_phones_.at(surface)) {
        r.phones.push_back({phone, 0, static_cast<TimeMs>(frames * 340), 0});
      }
    }
    std::vector<std::string> target;
    for (std::size_t k = 0; k < 3; ++k) target.push_back(en_[rng_.below(en_.size())]);
    Translation t;
    t.sentence = target[0] + " " + target[1] + " " + target[2];
    for (std::size_t k = 0; k < 3; ++k) {
      if (rng_.below(3) == 0) t.alignment.push_back({0, k});
    }
    r.translations["en"] = t;

    inst.context.word_index = 0;
    inst.context.languages = {"en", "fr", "zh"};
    for (std::size_t f = 0; f < frames; ++f) {
      NeighborAssignment a;
      a.frame_index = f;
      const auto pick = rng_.below(10);
      if (pick == 0) {
        a.token = surface;
      } else if (pick == 1) {
        a.token = "谄";
      } else if (pick == 2) {
        a.token = fr_[rng_.below(fr_.size())];
      } else {
        a.token = "▁" + en_[rng_.below(en_.size())];
      }
      a.token_index = pick;
      a.similarity = 0.5;
      const std::string bare = a.token.starts_with("▁") ? a.token.substr(3) : a.token;
      a.language = backend_->languages.at(bare);
      inst.context.frames.push_back(a);
    }
    return inst;
  }

  WordVerdict classify(Instance& inst, const VerdictConfig& config) const {
    inst.context.record = &inst.record;
    return classify_word(inst.context, config, space_, providers_);
  }

  const MultilingualEmbeddingSpace& space() const { return space_; }
  const Providers& providers() const { return providers_; }

 private:
  std::vector<float> random_vector() {
    std::vector<float> v(8);
    for (auto& x : v) x = static_cast<float>(rng_.normal());
    return v;
  }

  Rng rng_;
  MultilingualEmbeddingSpace space_;
  std::shared_ptr<TableBackend> backend_;
  Providers providers_;
  std::vector<std::string> fr_;
  std::vector<std::string> en_;
  std::map<std::string, std::vector<std::string>> word_phones_;
  std::size_t counter_ = 0;
};

struct LadderPropertyReport {
  std::size_t instances = 0;
  std::size_t threshold_violations = 0;
  std::size_t ratio_violations = 0;
  std::size_t precedence_violations = 0;
  std::size_t nondeterministic = 0;
  std::map<Verdict, std::size_t> verdicts;

  bool ok() const {
    return threshold_violations == 0 && ratio_violations == 0 && precedence_violations == 0 &&
           nondeterministic == 0;
  }
};

inline Verdict label_of(LadderStep step) {
  switch (step) {
    case LadderStep::Transcription: return Verdict::Transcribed;
    case LadderStep::Translation: return Verdict::Translated;
    case LadderStep::Semantic: return Verdict::Semantic;
    case LadderStep::Transliteration: return Verdict::Transliterated;
  }
  return Verdict::Unclear;
}

inline LadderPropertyReport check_ladder_properties(std::uint64_t seed, std::size_t instances) {
  LadderWorld world(seed);
  LadderPropertyReport report;
  const std::vector<double> thresholds{0.0, 0.1, 0.3, 0.54, 0.7, 0.9, 1.0};
  const std::vector<double> ratios{0.1, 0.25, 0.5, 0.75, 1.0};
  for (std::size_t n = 0; n < instances; ++n) {
    auto inst = world.make();
    ++report.instances;
    const VerdictConfig base;
    const WordVerdict full = world.classify(inst, base);
    ++report.verdicts[full.verdict];
    if (!(world.classify(inst, base) == full)) ++report.nondeterministic;

    std::vector<Verdict> by_threshold;
    for (double t : thresholds) {
      VerdictConfig c = base;
      c.semantic_threshold = t;
      by_threshold.push_back(world.classify(inst, c).verdict);
    }
    for (std::size_t i = 0; i + 1 < by_threshold.size(); ++i) {
      const Verdict lo = by_threshold[i];
      const Verdict hi = by_threshold[i + 1];
      if (hi == Verdict::Semantic && lo != Verdict::Semantic) ++report.threshold_violations;
      if ((lo == Verdict::Unclear || lo == Verdict::Transliterated) && hi == Verdict::Semantic) {
        ++report.threshold_violations;
      }
    }

    for (bool strict : {false, true}) {
      std::vector<Verdict> by_ratio;
      for (double r : ratios) {
        VerdictConfig c = base;
        c.phone_match_ratio = r;
        c.strict_phone_ratio = strict;
        by_ratio.push_back(world.classify(inst, c).verdict);
      }
      for (std::size_t i = 0; i + 1 < by_ratio.size(); ++i) {
        if (by_ratio[i + 1] == Verdict::Transliterated && by_ratio[i] != Verdict::Transliterated) {
          ++report.ratio_violations;
        }
      }
    }

    for (std::size_t s = 0; s < kLadderSteps; ++s) {
      VerdictConfig c = base;
      c.enabled_steps.reset(s);
      const Verdict without = world.classify(inst, c).verdict;
      const Verdict label = label_of(static_cast<LadderStep>(s));
      if (full.verdict != label && without != full.verdict) ++report.precedence_violations;
      if (without == label) ++report.precedence_violations;
    }
  }
  return report;
}

}  // namespace malens::testing
