#include "malens/temporal_align.hpp"

#include <algorithm>
#include <numeric>

#include "malens/error.hpp"

namespace malens {

std::vector<std::size_t> frames_for_span(TimeMs start_ms, TimeMs end_ms, std::uint32_t frame_ms,
                                         std::size_t num_frames, TimeMs min_overlap_ms) {
  if (frame_ms == 0) fail(Errc::ZeroFrameDuration, "frames_for_span");
  if (start_ms < 0) fail(Errc::InvalidArgument, "negative span start");
  if (end_ms <= start_ms) {
    fail(Errc::InvertedSpan, "[" + std::to_string(start_ms) + ", " + std::to_string(end_ms) + ")");
  }
  const TimeMs step = frame_ms;
  const auto first = static_cast<std::size_t>(start_ms / step);
  const auto last = static_cast<std::size_t>((end_ms - 1) / step);
  std::vector<std::size_t> frames;
  for (std::size_t i = first; i <= last && i < num_frames; ++i) {
    const TimeMs frame_start = static_cast<TimeMs>(i) * step;
    const TimeMs overlap = std::min(end_ms, frame_start + step) - std::max(start_ms, frame_start);
    if (overlap > min_overlap_ms) frames.push_back(i);
  }
  return frames;
}

namespace {

void check_same_utterance(const UtteranceRecord& record, const RepresentationSequence& sequence) {
  if (record.utterance_id != sequence.utterance_id()) {
    fail(Errc::UtteranceMismatch, "record '" + record.utterance_id + "' vs sequence '" +
                                      sequence.utterance_id() + "'");
  }
}

}  // namespace

std::vector<SpanAssignment> assign_words(const UtteranceRecord& record,
                                         const RepresentationSequence& sequence,
                                         TimeMs min_overlap_ms) {
  check_same_utterance(record, sequence);
  std::vector<SpanAssignment> out;
  out.reserve(record.words.size());
  for (std::size_t w = 0; w < record.words.size(); ++w) {
    const auto& word = record.words[w];
    out.push_back({w, frames_for_span(word.start_ms, word.end_ms, sequence.frame_ms(),
                                      sequence.num_frames(), min_overlap_ms)});
  }
  return out;
}

std::vector<SpanAssignment> assign_phones(const UtteranceRecord& record,
                                          const RepresentationSequence& sequence,
                                          TimeMs min_overlap_ms) {
  check_same_utterance(record, sequence);
  std::vector<SpanAssignment> out;
  out.reserve(record.phones.size());
  for (std::size_t p = 0; p < record.phones.size(); ++p) {
    const auto& phone = record.phones[p];
    out.push_back({p, frames_for_span(phone.start_ms, phone.end_ms, sequence.frame_ms(),
                                      sequence.num_frames(), min_overlap_ms)});
  }
  return out;
}

std::vector<double> pool_span(const RepresentationSequence& sequence,
                              std::span<const std::size_t> frame_indices) {
  if (frame_indices.empty()) fail(Errc::EmptyPool, "no frames to pool");
  std::vector<double> mean(sequence.dim(), 0.0);
  for (const std::size_t i : frame_indices) {
    const auto frame = sequence.frame(i);  // throws IndexOutOfRange
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += frame[j];
  }
  const double n = static_cast<double>(frame_indices.size());
  for (auto& v : mean) v /= n;
  return mean;
}

std::vector<double> pool_all(const RepresentationSequence& sequence) {
  std::vector<std::size_t> all(sequence.num_frames());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return pool_span(sequence, all);
}

}  // namespace malens
