#pragma once

// Binary tensor interchange format.
//
//   magic "MALENS01" (8 bytes) | kind u8 (1 = matrix, 2 = sequence)
//   matrix:   vocab_size u64 | dim u64
//   sequence: num_frames u64 | dim u64 | frame_ms u32 | stage u8
//   payload:  row-major IEEE-754 f32
//
// All integers and floats are little-endian; there is no padding. A matrix
// carries its vocabulary in a sidecar "<stem>.vocab.json" holding one JSON
// array of strings.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace malens {

/// Integer milliseconds; the only time unit used by the toolkit.
using TimeMs = std::int64_t;

inline constexpr std::string_view kTensorMagic = "MALENS01";

enum class TensorKind : std::uint8_t { Matrix = 1, Sequence = 2 };

/// Model stage a representation sequence was tapped from.
enum class Stage : std::uint8_t { EncoderOutput = 1, AdapterOutput = 2 };

std::string_view to_string(Stage stage) noexcept;
/// Accepts "encoder_output" / "adapter_output".
Stage parse_stage(std::string_view name);

/// Token-embedding table of a language model together with its vocabulary.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::size_t dim, std::vector<float> values, std::vector<std::string> tokens);

  std::size_t vocab_size() const noexcept { return tokens_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<const float> row(std::size_t index) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::string& token(std::size_t index) const { return tokens_.at(index); }

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t dim_;
  std::vector<float> values_;
  std::vector<std::string> tokens_;
};

/// Fixed-rate vectors from one model stage for one utterance. Frame i covers
/// [i * frame_ms, (i + 1) * frame_ms) from the start of the utterance.
class RepresentationSequence {
 public:
  RepresentationSequence(std::string utterance_id, Stage stage, std::uint32_t frame_ms,
                         std::size_t dim, std::vector<float> frames);

  const std::string& utterance_id() const noexcept { return utterance_id_; }
  Stage stage() const noexcept { return stage_; }
  std::uint32_t frame_ms() const noexcept { return frame_ms_; }
  std::size_t num_frames() const noexcept { return dim_ == 0 ? 0 : frames_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> values() const noexcept { return frames_; }
  std::span<const float> frame(std::size_t index) const;
  TimeMs duration_ms() const noexcept {
    return static_cast<TimeMs>(num_frames()) * static_cast<TimeMs>(frame_ms_);
  }

  bool operator==(const RepresentationSequence&) const = default;

 private:
  std::string utterance_id_;
  Stage stage_;
  std::uint32_t frame_ms_;
  std::size_t dim_;
  std::vector<float> frames_;
};

struct TensorHeader {
  TensorKind kind{};
  std::uint64_t rows = 0;  // vocab_size or num_frames
  std::uint64_t dim = 0;
  std::uint32_t frame_ms = 0;  // sequences only
  Stage stage = Stage::AdapterOutput;  // sequences only

  std::size_t encoded_size() const noexcept;
};

/// "<dir>/<stem>.vocab.json" for "<dir>/<stem>.<ext>".
std::filesystem::path vocab_sidecar_path(const std::filesystem::path& matrix_path);

TensorHeader read_tensor_header(const std::filesystem::path& path);

EmbeddingMatrix load_embedding_matrix(const std::filesystem::path& path);
void write_embedding_matrix(const std::filesystem::path& path, const EmbeddingMatrix& matrix);

/// The utterance id is not stored in the file; an empty id defaults to the file stem.
RepresentationSequence load_representation_sequence(const std::filesystem::path& path,
                                                     std::string utterance_id = {});
void write_representation_sequence(const std::filesystem::path& path,
                                   const RepresentationSequence& sequence);

/// Number of frames a fixed-rate producer emits for `duration_ms` of audio.
std::size_t expected_frame_count(TimeMs duration_ms, std::uint32_t frame_ms);

/// Producer-side contract: |num_frames - floor(duration / frame_ms)| <= 1.
/// Throws ShapeMismatch otherwise.
void check_frame_count(const RepresentationSequence& sequence, TimeMs audio_duration_ms);

}  // namespace malens
