#pragma once

// Nearest-token search: maps a representation vector q to
//   argmax_i cos(q - m, E_i - m)
// over the rows E_i of the LM embedding matrix, m being the row mean.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "malens/interchange.hpp"

namespace malens {

struct NeighborAssignment {
  std::size_t frame_index = 0;
  /// Empty for the no-neighbor sentinel (frame equal to the embedding mean).
  std::optional<std::size_t> token_index;
  std::string token;
  double similarity = 0.0;
  /// Filled in later by language identification.
  std::optional<std::string> language;

  bool has_neighbor() const noexcept { return token_index.has_value(); }
  bool operator==(const NeighborAssignment&) const = default;
};

/// Componentwise mean of all rows, accumulated in double.
std::vector<double> embedding_mean(const EmbeddingMatrix& matrix);

/// Exhaustive mean-centred cosine search. Centred row norms are computed once
/// at construction; the matrix must outlive the search object.
class NeighborSearch {
 public:
  explicit NeighborSearch(const EmbeddingMatrix& matrix);
  NeighborSearch(const EmbeddingMatrix& matrix, std::vector<double> mean);
  explicit NeighborSearch(EmbeddingMatrix&&) = delete;
  NeighborSearch(EmbeddingMatrix&&, std::vector<double>) = delete;

  const EmbeddingMatrix& matrix() const noexcept { return *matrix_; }
  const std::vector<double>& mean() const noexcept { return mean_; }

  /// Throws ZeroQuery when q equals the mean, DimMismatch on a size mismatch,
  /// AllRowsDegenerate when every centred row is zero. Rows whose centred
  /// vector is zero are skipped; ties go to the lowest index.
  NeighborAssignment nearest(std::span<const float> query) const;

  /// Same as nearest() for each query; a ZeroQuery yields the sentinel
  /// instead of throwing. Queries are scanned in blocks so each matrix row is
  /// read once per block.
  std::vector<NeighborAssignment> nearest_batch(std::span<const float> queries,
                                                std::size_t first_frame_index = 0) const;

 private:
  const EmbeddingMatrix* matrix_;
  std::vector<double> mean_;
  std::vector<double> centred_norms_;
  bool all_degenerate_ = true;
};

NeighborAssignment nearest_token(std::span<const float> query, const EmbeddingMatrix& matrix,
                                 std::span<const double> mean);

/// One assignment per frame, in frame order, regardless of `jobs`.
std::vector<NeighborAssignment> assign_neighbors(const RepresentationSequence& sequence,
                                                 const NeighborSearch& search,
                                                 std::size_t jobs = 1);
std::vector<NeighborAssignment> assign_neighbors(const RepresentationSequence& sequence,
                                                 const EmbeddingMatrix& matrix,
                                                 std::size_t jobs = 1);

/// Per-utterance assignment file (JSON): utterance id plus one record per frame
/// with frame_index, token_index, token, similarity and language.
struct AssignmentFile {
  std::string utterance_id;
  std::vector<NeighborAssignment> frames;

  bool operator==(const AssignmentFile&) const = default;
};

void write_assignments(const std::filesystem::path& path, const AssignmentFile& file);
AssignmentFile read_assignments(const std::filesystem::path& path);

}  // namespace malens
