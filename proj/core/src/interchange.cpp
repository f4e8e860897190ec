#include "malens/interchange.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "malens/error.hpp"

namespace malens {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMagicSize = 8;
constexpr std::size_t kMatrixHeaderSize = kMagicSize + 1 + 8 + 8;
constexpr std::size_t kSequenceHeaderSize = kMagicSize + 1 + 8 + 8 + 4 + 1;

template <typename T>
T byteswap(T value) {
  auto bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

template <typename T>
T from_le(T value) {
  if constexpr (std::endian::native == std::endian::big) return byteswap(value);
  return value;
}

template <typename T>
void put_le(std::ostream& out, T value) {
  value = from_le(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const fs::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    fail(Errc::ShapeMismatch, "truncated header in " + path.string());
  }
  return from_le(value);
}

void check_finite(std::span<const float> values, const std::string& what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      fail(Errc::NonFinite, what + ": value " + std::to_string(i) + " is not finite");
    }
  }
}

std::uint64_t file_size_of(const fs::path& path) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) fail(Errc::MissingFile, path.string());
  return size;
}

void check_payload_length(const TensorHeader& header, std::uint64_t file_size,
                          const fs::path& path) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / sizeof(float);
  const bool overflow = header.dim != 0 && header.rows > limit / header.dim;
  const std::uint64_t expected =
      overflow ? 0 : header.encoded_size() + header.rows * header.dim * sizeof(float);
  if (overflow || expected != file_size) {
    fail(Errc::ShapeMismatch,
         path.string() + ": header declares " + std::to_string(header.rows) + " x " +
             std::to_string(header.dim) + " but file holds " + std::to_string(file_size) +
             " bytes");
  }
}

std::vector<float> read_payload(std::istream& in, std::size_t count, const fs::path& path) {
  std::vector<float> values(count);
  if (count != 0 &&
      !in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(count * sizeof(float)))) {
    fail(Errc::ShapeMismatch, "short payload in " + path.string());
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : values) v = byteswap(v);
  }
  return values;
}

void write_payload(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::big) {
    for (float v : values) put_le(out, v);
  } else {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  }
}

std::ofstream open_for_write(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_for_read(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::MissingFile, path.string());
  return in;
}

TensorHeader parse_header(std::istream& in, const fs::path& path) {
  std::array<char, kMagicSize> magic{};
  if (!in.read(magic.data(), kMagicSize) ||
      std::string_view(magic.data(), kMagicSize) != kTensorMagic) {
    fail(Errc::BadMagic, path.string() + " is not an interchange tensor file");
  }
  TensorHeader header;
  const auto kind = get_le<std::uint8_t>(in, path);
  if (kind != static_cast<std::uint8_t>(TensorKind::Matrix) &&
      kind != static_cast<std::uint8_t>(TensorKind::Sequence)) {
    fail(Errc::BadMagic, path.string() + ": unknown tensor kind " + std::to_string(kind));
  }
  header.kind = static_cast<TensorKind>(kind);
  header.rows = get_le<std::uint64_t>(in, path);
  header.dim = get_le<std::uint64_t>(in, path);
  if (header.kind == TensorKind::Sequence) {
    header.frame_ms = get_le<std::uint32_t>(in, path);
    const auto stage = get_le<std::uint8_t>(in, path);
    if (stage != static_cast<std::uint8_t>(Stage::EncoderOutput) &&
        stage != static_cast<std::uint8_t>(Stage::AdapterOutput)) {
      fail(Errc::InvariantViolation, path.string() + ": unknown stage " + std::to_string(stage));
    }
    header.stage = static_cast<Stage>(stage);
  }
  return header;
}

}  // namespace

std::string_view to_string(Stage stage) noexcept {
  return stage == Stage::EncoderOutput ? "encoder_output" : "adapter_output";
}

Stage parse_stage(std::string_view name) {
  if (name == "encoder_output") return Stage::EncoderOutput;
  if (name == "adapter_output") return Stage::AdapterOutput;
  fail(Errc::InvalidArgument, "unknown stage '" + std::string(name) + "'");
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<float> values,
                                 std::vector<std::string> tokens)
    : dim_(dim), values_(std::move(values)), tokens_(std::move(tokens)) {
  if (dim_ == 0) fail(Errc::ShapeMismatch, "embedding matrix with dim 0");
  if (values_.size() % dim_ != 0) {
    fail(Errc::ShapeMismatch, "embedding payload is not a multiple of dim");
  }
  const std::size_t rows = values_.size() / dim_;
  if (rows != tokens_.size()) {
    fail(Errc::VocabMismatch, "vocabulary has " + std::to_string(tokens_.size()) +
                                  " tokens for " + std::to_string(rows) + " rows");
  }
  if (rows < 2) fail(Errc::ShapeMismatch, "embedding matrix needs at least 2 rows");
  check_finite(values_, "embedding matrix");
}

std::span<const float> EmbeddingMatrix::row(std::size_t index) const {
  if (index >= vocab_size()) fail(Errc::IndexOutOfRange, "row " + std::to_string(index));
  return std::span<const float>(values_).subspan(index * dim_, dim_);
}

RepresentationSequence::RepresentationSequence(std::string utterance_id, Stage stage,
                                               std::uint32_t frame_ms, std::size_t dim,
                                               std::vector<float> frames)
    : utterance_id_(std::move(utterance_id)),
      stage_(stage),
      frame_ms_(frame_ms),
      dim_(dim),
      frames_(std::move(frames)) {
  if (frame_ms_ == 0) fail(Errc::ZeroFrameDuration, "sequence '" + utterance_id_ + "'");
  if (dim_ == 0 || frames_.size() % dim_ != 0 || frames_.empty()) {
    fail(Errc::ShapeMismatch, "sequence '" + utterance_id_ + "' needs >= 1 frame of dim >= 1");
  }
  check_finite(frames_, "sequence '" + utterance_id_ + "'");
}

std::span<const float> RepresentationSequence::frame(std::size_t index) const {
  if (index >= num_frames()) {
    fail(Errc::IndexOutOfRange, "frame " + std::to_string(index) + " of " +
                                    std::to_string(num_frames()));
  }
  return std::span<const float>(frames_).subspan(index * dim_, dim_);
}

std::size_t TensorHeader::encoded_size() const noexcept {
  return kind == TensorKind::Matrix ? kMatrixHeaderSize : kSequenceHeaderSize;
}

fs::path vocab_sidecar_path(const fs::path& matrix_path) {
  fs::path sidecar = matrix_path;
  sidecar.replace_extension(".vocab.json");
  return sidecar;
}

TensorHeader read_tensor_header(const fs::path& path) {
  auto in = open_for_read(path);
  return parse_header(in, path);
}

EmbeddingMatrix load_embedding_matrix(const fs::path& path) {
  auto in = open_for_read(path);
  const TensorHeader header = parse_header(in, path);
  if (header.kind != TensorKind::Matrix) {
    fail(Errc::BadMagic, path.string() + " holds a sequence, not a matrix");
  }
  check_payload_length(header, file_size_of(path), path);
  auto values = read_payload(in, static_cast<std::size_t>(header.rows * header.dim), path);

  const fs::path sidecar = vocab_sidecar_path(path);
  std::ifstream vocab_in(sidecar, std::ios::binary);
  if (!vocab_in) fail(Errc::MissingFile, sidecar.string());
  std::vector<std::string> tokens;
  try {
    tokens = nlohmann::json::parse(vocab_in).get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::VocabMismatch, sidecar.string() + ": " + e.what());
  }
  if (tokens.size() != header.rows) {
    fail(Errc::VocabMismatch, sidecar.string() + " lists " + std::to_string(tokens.size()) +
                                  " tokens, header declares " + std::to_string(header.rows));
  }
  if (header.dim == 0) fail(Errc::ShapeMismatch, path.string() + ": dim 0");
  return EmbeddingMatrix(static_cast<std::size_t>(header.dim), std::move(values),
                         std::move(tokens));
}

void write_embedding_matrix(const fs::path& path, const EmbeddingMatrix& matrix) {
  {
    auto out = open_for_write(path);
    out.write(kTensorMagic.data(), kMagicSize);
    put_le(out, static_cast<std::uint8_t>(TensorKind::Matrix));
    put_le(out, static_cast<std::uint64_t>(matrix.vocab_size()));
    put_le(out, static_cast<std::uint64_t>(matrix.dim()));
    write_payload(out, matrix.values());
    if (!out) fail(Errc::IoFailure, "write failed: " + path.string());
  }
  auto vocab_out = open_for_write(vocab_sidecar_path(path));
  vocab_out << nlohmann::json(matrix.tokens()).dump();
  if (!vocab_out) fail(Errc::IoFailure, "write failed: " + vocab_sidecar_path(path).string());
}

RepresentationSequence load_representation_sequence(const fs::path& path,
                                                     std::string utterance_id) {
  auto in = open_for_read(path);
  const TensorHeader header = parse_header(in, path);
  if (header.kind != TensorKind::Sequence) {
    fail(Errc::BadMagic, path.string() + " holds a matrix, not a sequence");
  }
  if (header.frame_ms == 0) fail(Errc::ZeroFrameDuration, path.string());
  check_payload_length(header, file_size_of(path), path);
  if (header.rows == 0 || header.dim == 0) {
    fail(Errc::ShapeMismatch, path.string() + ": empty sequence");
  }
  auto values = read_payload(in, static_cast<std::size_t>(header.rows * header.dim), path);
  if (utterance_id.empty()) utterance_id = path.stem().string();
  return RepresentationSequence(std::move(utterance_id), header.stage, header.frame_ms,
                                static_cast<std::size_t>(header.dim), std::move(values));
}

void write_representation_sequence(const fs::path& path, const RepresentationSequence& sequence) {
  auto out = open_for_write(path);
  out.write(kTensorMagic.data(), kMagicSize);
  put_le(out, static_cast<std::uint8_t>(TensorKind::Sequence));
  put_le(out, static_cast<std::uint64_t>(sequence.num_frames()));
  put_le(out, static_cast<std::uint64_t>(sequence.dim()));
  put_le(out, sequence.frame_ms());
  put_le(out, static_cast<std::uint8_t>(sequence.stage()));
  write_payload(out, sequence.values());
  if (!out) fail(Errc::IoFailure, "write failed: " + path.string());
}

std::size_t expected_frame_count(TimeMs duration_ms, std::uint32_t frame_ms) {
  if (frame_ms == 0) fail(Errc::ZeroFrameDuration, "expected_frame_count");
  if (duration_ms < 0) fail(Errc::InvalidArgument, "negative duration");
  return static_cast<std::size_t>(duration_ms / frame_ms);
}

void check_frame_count(const RepresentationSequence& sequence, TimeMs audio_duration_ms) {
  const auto expected = expected_frame_count(audio_duration_ms, sequence.frame_ms());
  const auto actual = sequence.num_frames();
  const auto diff = actual > expected ? actual - expected : expected - actual;
  if (diff > 1) {
    fail(Errc::ShapeMismatch, "sequence '" + sequence.utterance_id() + "' has " +
                                  std::to_string(actual) + " frames; " +
                                  std::to_string(audio_duration_ms) + " ms at " +
                                  std::to_string(sequence.frame_ms()) + " ms/frame implies " +
                                  std::to_string(expected));
  }
}

}  // namespace malens
