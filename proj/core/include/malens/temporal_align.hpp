#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "malens/corpus.hpp"
#include "malens/interchange.hpp"

namespace malens {

struct SpanAssignment {
  std::size_t word_index = 0;  // phone index when produced by assign_phones
  std::vector<std::size_t> frame_indices;

  bool operator==(const SpanAssignment&) const = default;
};

/// Frames whose half-open span [i*frame_ms, (i+1)*frame_ms) overlaps
/// [start_ms, end_ms) by strictly more than min_overlap_ms. Frames at or past
/// num_frames are never returned, so truncated audio yields an empty list.
std::vector<std::size_t> frames_for_span(TimeMs start_ms, TimeMs end_ms, std::uint32_t frame_ms,
                                         std::size_t num_frames, TimeMs min_overlap_ms = 0);

/// One assignment per transcript word, in word order. A frame straddling a
/// boundary is listed under every word it overlaps.
std::vector<SpanAssignment> assign_words(const UtteranceRecord& record,
                                         const RepresentationSequence& sequence,
                                         TimeMs min_overlap_ms = 0);

/// Same interval rule applied to phone spans; word_index holds the phone index.
std::vector<SpanAssignment> assign_phones(const UtteranceRecord& record,
                                          const RepresentationSequence& sequence,
                                          TimeMs min_overlap_ms = 0);

/// Mean of the selected frames, accumulated in double.
std::vector<double> pool_span(const RepresentationSequence& sequence,
                              std::span<const std::size_t> frame_indices);

/// Mean over every frame of the sequence.
std::vector<double> pool_all(const RepresentationSequence& sequence);

}  // namespace malens
