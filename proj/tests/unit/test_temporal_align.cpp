#include <doctest.h>

#include <numeric>

#include "malens/temporal_align.hpp"
#include "support.hpp"

using namespace malens;
using malens::testing::error_of;

namespace {

/// Interval-intersection oracle over every frame.
std::vector<std::size_t> frames_oracle(TimeMs start, TimeMs end, TimeMs frame_ms, std::size_t n,
                                       TimeMs min_overlap) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    const TimeMs fs = static_cast<TimeMs>(i) * frame_ms;
    const TimeMs overlap = std::min(end, fs + frame_ms) - std::max(start, fs);
    if (overlap > min_overlap) out.push_back(i);
  }
  return out;
}

RepresentationSequence ramp(std::size_t frames, std::uint32_t frame_ms, std::size_t dim = 2) {
  std::vector<float> v(frames * dim);
  std::iota(v.begin(), v.end(), 0.0f);
  return RepresentationSequence("u", Stage::AdapterOutput, frame_ms, dim, v);
}

}  // namespace

TEST_CASE("frames for a span") {
  CHECK(frames_for_span(0, 1020, 340, 3) == std::vector<std::size_t>{0, 1, 2});
  CHECK(frames_for_span(350, 400, 340, 10) == std::vector<std::size_t>{1});
  CHECK(frames_for_span(330, 345, 340, 10, 20).empty());
  CHECK(frames_for_span(330, 345, 340, 10) == std::vector<std::size_t>{0, 1});
  CHECK(error_of([] { frames_for_span(340, 340, 340, 10); }) == Errc::InvertedSpan);
  CHECK(frames_for_span(5000, 6000, 340, 3).empty());
  CHECK(error_of([] { frames_for_span(10, 5, 340, 3); }) == Errc::InvertedSpan);
  CHECK(error_of([] { frames_for_span(0, 5, 0, 3); }) == Errc::ZeroFrameDuration);
}

TEST_CASE("frames for a span match the interval oracle") {
  Rng rng(12);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto frame_ms = static_cast<std::uint32_t>(1 + rng.below(400));
    const std::size_t n = 1 + rng.below(40);
    const TimeMs start = static_cast<TimeMs>(rng.below(n * frame_ms + 200));
    const TimeMs end = start + 1 + static_cast<TimeMs>(rng.below(3 * frame_ms));
    const TimeMs overlap = static_cast<TimeMs>(rng.below(frame_ms));
    const auto got = frames_for_span(start, end, frame_ms, n, overlap);
    CHECK(got == frames_oracle(start, end, frame_ms, n, overlap));
    // Raising the overlap threshold never adds frames.
    const auto stricter = frames_for_span(start, end, frame_ms, n, overlap + 7);
    CHECK(std::includes(got.begin(), got.end(), stricter.begin(), stricter.end()));
  }
}

TEST_CASE("word assignment") {
  UtteranceRecord r;
  r.utterance_id = "u";
  r.language = "fr";
  r.words = {{"a", 0, 340}, {"b", 340, 680}};
  const auto seq = ramp(2, 340);
  const auto words = assign_words(r, seq);
  REQUIRE(words.size() == 2);
  CHECK(words[0].frame_indices == std::vector<std::size_t>{0});
  CHECK(words[1].frame_indices == std::vector<std::size_t>{1});

  r.words = {{"long", 0, 1000}};
  std::vector<std::size_t> all(25);
  std::iota(all.begin(), all.end(), 0);
  CHECK(assign_words(r, ramp(25, 40)).front().frame_indices == all);

  r.words = {{"late", 2000, 2400}};
  CHECK(assign_words(r, ramp(2, 340)).front().frame_indices.empty());

  auto other = ramp(2, 340);
  r.utterance_id = "v";
  CHECK(error_of([&] { assign_words(r, other); }) == Errc::UtteranceMismatch);
}

TEST_CASE("tiling words cover every spoken frame") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto frame_ms = static_cast<std::uint32_t>(20 + rng.below(400));
    UtteranceRecord r;
    r.utterance_id = "u";
    r.language = "fr";
    TimeMs t = static_cast<TimeMs>(rng.below(500));
    const TimeMs spoken_start = t;
    const std::size_t words = 1 + rng.below(8);
    for (std::size_t w = 0; w < words; ++w) {
      const TimeMs len = 1 + static_cast<TimeMs>(rng.below(700));
      r.words.push_back({"w" + std::to_string(w), t, t + len});
      t += len;
    }
    const std::size_t n = static_cast<std::size_t>(t / frame_ms) + 2;
    const auto seq = ramp(n, frame_ms, 1);
    std::vector<bool> covered(n, false);
    for (const auto& a : assign_words(r, seq)) {
      for (auto i : a.frame_indices) covered[i] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const TimeMs fs = static_cast<TimeMs>(i) * frame_ms;
      const bool intersects = fs < t && fs + frame_ms > spoken_start;
      CHECK(covered[i] == intersects);
    }
  }
}

TEST_CASE("phone assignment uses the phone index") {
  UtteranceRecord r;
  r.utterance_id = "u";
  r.language = "fr";
  r.words = {{"il", 0, 680}};
  r.phones = {{"i", 0, 340, 0}, {"l", 340, 680, 0}};
  const auto phones = assign_phones(r, ramp(2, 340));
  REQUIRE(phones.size() == 2);
  CHECK(phones[1].word_index == 1);
  CHECK(phones[1].frame_indices == std::vector<std::size_t>{1});
}

TEST_CASE("pooling") {
  const RepresentationSequence s("u", Stage::AdapterOutput, 340, 2, {1, 1, 3, 3});
  CHECK(pool_span(s, std::vector<std::size_t>{0}) == std::vector<double>{1, 1});
  CHECK(pool_span(s, std::vector<std::size_t>{0, 1}) == std::vector<double>{2, 2});
  CHECK(pool_all(s) == std::vector<double>{2, 2});
  CHECK(error_of([&] { pool_span(s, std::vector<std::size_t>{}); }) == Errc::EmptyPool);
  CHECK(error_of([&] { pool_span(s, std::vector<std::size_t>{2}); }) == Errc::IndexOutOfRange);

  Rng rng(6);
  const auto values = malens::testing::random_floats(rng, 10 * 5);
  const RepresentationSequence r("u", Stage::AdapterOutput, 40, 5, values);
  std::vector<std::size_t> idx(10);
  std::iota(idx.begin(), idx.end(), 0);
  const auto pooled = pool_span(r, idx);
  std::vector<float> scaled(values);
  for (auto& v : scaled) v *= 4.0f;
  const auto pooled_scaled =
      pool_span(RepresentationSequence("u", Stage::AdapterOutput, 40, 5, scaled), idx);
  auto shuffled = idx;
  rng.shuffle(std::span<std::size_t>(shuffled));
  const auto pooled_shuffled = pool_span(r, shuffled);
  for (std::size_t k = 0; k < 5; ++k) {
    long double sum = 0.0L;
    for (std::size_t i = 0; i < 10; ++i) sum += values[i * 5 + k];
    CHECK(std::abs(pooled[k] - static_cast<double>(sum / 10)) < 1e-12);
    CHECK(std::abs(pooled_shuffled[k] - pooled[k]) < 1e-12);
    CHECK(std::abs(pooled_scaled[k] - 4.0 * pooled[k]) < 1e-12);
  }
}
