#include "malens/neighbor.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "malens/error.hpp"
#include "malens/io.hpp"
#include "malens/parallel.hpp"

namespace malens {

namespace {

constexpr std::size_t kQueryBlock = 16;

// Four independent accumulators; the summation order is fixed, so results are reproducible.
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s0 += a[j] * b[j];
    s1 += a[j + 1] * b[j + 1];
    s2 += a[j + 2] * b[j + 2];
    s3 += a[j + 3] * b[j + 3];
  }
  for (; j < n; ++j) s0 += a[j] * b[j];
  return (s0 + s1) + (s2 + s3);
}

struct Best {
  std::optional<std::size_t> index;
  double cosine = -2.0;
};

}  // namespace

std::vector<double> embedding_mean(const EmbeddingMatrix& matrix) {
  const std::size_t dim = matrix.dim();
  std::vector<double> mean(dim, 0.0);
  const auto values = matrix.values();
  for (std::size_t r = 0; r < matrix.vocab_size(); ++r) {
    const float* row = values.data() + r * dim;
    for (std::size_t j = 0; j < dim; ++j) mean[j] += row[j];
  }
  const double n = static_cast<double>(matrix.vocab_size());
  for (auto& v : mean) v /= n;
  return mean;
}

NeighborSearch::NeighborSearch(const EmbeddingMatrix& matrix)
    : NeighborSearch(matrix, embedding_mean(matrix)) {}

NeighborSearch::NeighborSearch(const EmbeddingMatrix& matrix, std::vector<double> mean)
    : matrix_(&matrix), mean_(std::move(mean)) {
  if (mean_.size() != matrix.dim()) {
    fail(Errc::DimMismatch, "mean has dim " + std::to_string(mean_.size()) + ", matrix " +
                                std::to_string(matrix.dim()));
  }
  const std::size_t dim = matrix.dim();
  const auto values = matrix.values();
  centred_norms_.resize(matrix.vocab_size());
  for (std::size_t r = 0; r < matrix.vocab_size(); ++r) {
    const float* row = values.data() + r * dim;
    double sq = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double c = static_cast<double>(row[j]) - mean_[j];
      sq += c * c;
    }
    centred_norms_[r] = std::sqrt(sq);
    if (centred_norms_[r] > 0.0) all_degenerate_ = false;
  }
}

std::vector<NeighborAssignment> NeighborSearch::nearest_batch(std::span<const float> queries,
                                                              std::size_t first_frame_index) const {
  const std::size_t dim = matrix_->dim();
  if (queries.size() % dim != 0) {
    fail(Errc::DimMismatch, "query buffer of " + std::to_string(queries.size()) +
                                " values is not a multiple of dim " + std::to_string(dim));
  }
  if (all_degenerate_) fail(Errc::AllRowsDegenerate, "every centred embedding row is zero");

  const std::size_t count = queries.size() / dim;
  std::vector<NeighborAssignment> out(count);
  const auto values = matrix_->values();

  std::vector<double> centred(kQueryBlock * dim);
  std::vector<double> query_norm(kQueryBlock);
  std::vector<Best> best(kQueryBlock);
  std::vector<double> row_centred(dim);

  for (std::size_t start = 0; start < count; start += kQueryBlock) {
    const std::size_t block = std::min(kQueryBlock, count - start);
    std::size_t live = 0;
    std::vector<std::size_t> slot_of(block);
    for (std::size_t b = 0; b < block; ++b) {
      const float* q = queries.data() + (start + b) * dim;
      double sq = 0.0;
      double* c = centred.data() + live * dim;
      for (std::size_t j = 0; j < dim; ++j) {
        c[j] = static_cast<double>(q[j]) - mean_[j];
        sq += c[j] * c[j];
      }
      out[b + start].frame_index = first_frame_index + start + b;
      if (sq == 0.0) {
        slot_of[b] = kQueryBlock;
        continue;
      }
      query_norm[live] = std::sqrt(sq);
      best[live] = Best{};
      slot_of[b] = live++;
    }

    for (std::size_t r = 0; r < matrix_->vocab_size() && live > 0; ++r) {
      const double norm = centred_norms_[r];
      if (norm == 0.0) continue;
      const float* row = values.data() + r * dim;
      for (std::size_t j = 0; j < dim; ++j) row_centred[j] = static_cast<double>(row[j]) - mean_[j];
      for (std::size_t s = 0; s < live; ++s) {
        const double cosine =
            dot(row_centred.data(), centred.data() + s * dim, dim) / (query_norm[s] * norm);
        if (cosine > best[s].cosine) best[s] = Best{r, cosine};
      }
    }

    for (std::size_t b = 0; b < block; ++b) {
      if (slot_of[b] == kQueryBlock) continue;  // sentinel: query equals the mean
      const Best& hit = best[slot_of[b]];
      auto& a = out[start + b];
      a.token_index = hit.index;
      a.token = matrix_->token(*hit.index);
      a.similarity = std::clamp(hit.cosine, -1.0, 1.0);
    }
  }
  return out;
}

NeighborAssignment NeighborSearch::nearest(std::span<const float> query) const {
  if (query.size() != matrix_->dim()) {
    fail(Errc::DimMismatch, "query has dim " + std::to_string(query.size()) + ", matrix " +
                                std::to_string(matrix_->dim()));
  }
  auto result = nearest_batch(query, 0);
  if (!result.front().has_neighbor()) {
    fail(Errc::ZeroQuery, "query equals the embedding mean; cosine is undefined");
  }
  return std::move(result.front());
}

NeighborAssignment nearest_token(std::span<const float> query, const EmbeddingMatrix& matrix,
                                 std::span<const double> mean) {
  if (query.size() != matrix.dim() || mean.size() != matrix.dim()) {
    fail(Errc::DimMismatch, "query, mean and matrix dims differ");
  }
  NeighborSearch search(matrix, std::vector<double>(mean.begin(), mean.end()));
  return search.nearest(query);
}

std::vector<NeighborAssignment> assign_neighbors(const RepresentationSequence& sequence,
                                                 const NeighborSearch& search, std::size_t jobs) {
  if (sequence.dim() != search.matrix().dim()) {
    fail(Errc::DimMismatch, "sequence '" + sequence.utterance_id() + "' has dim " +
                                std::to_string(sequence.dim()) + ", embedding matrix " +
                                std::to_string(search.matrix().dim()));
  }
  const std::size_t frames = sequence.num_frames();
  const std::size_t chunks = (frames + kQueryBlock - 1) / kQueryBlock;
  std::vector<NeighborAssignment> out(frames);
  parallel_for(chunks, jobs, [&](std::size_t chunk) {
    const std::size_t first = chunk * kQueryBlock;
    const std::size_t n = std::min(kQueryBlock, frames - first);
    auto part = search.nearest_batch(sequence.values().subspan(first * sequence.dim(),
                                                                n * sequence.dim()),
                                     first);
    std::move(part.begin(), part.end(), out.begin() + static_cast<std::ptrdiff_t>(first));
  });
  return out;
}

std::vector<NeighborAssignment> assign_neighbors(const RepresentationSequence& sequence,
                                                 const EmbeddingMatrix& matrix, std::size_t jobs) {
  const NeighborSearch search(matrix);
  return assign_neighbors(sequence, search, jobs);
}

void write_assignments(const std::filesystem::path& path, const AssignmentFile& file) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& a : file.frames) {
    nlohmann::json rec;
    rec["frame_index"] = a.frame_index;
    rec["token_index"] = a.token_index ? nlohmann::json(*a.token_index) : nlohmann::json(nullptr);
    rec["token"] = a.token;
    rec["similarity"] = a.has_neighbor() ? nlohmann::json(a.similarity) : nlohmann::json(nullptr);
    rec["language"] = a.language ? nlohmann::json(*a.language) : nlohmann::json(nullptr);
    frames.push_back(std::move(rec));
  }
  nlohmann::json doc{{"utterance_id", file.utterance_id}, {"frames", frames}};
  io::write_file_atomic(path, io::dump_json(doc));
}

AssignmentFile read_assignments(const std::filesystem::path& path) {
  const auto doc = io::read_json_file(path);
  AssignmentFile file;
  try {
    file.utterance_id = doc.at("utterance_id").get<std::string>();
    for (const auto& rec : doc.at("frames")) {
      NeighborAssignment a;
      a.frame_index = rec.at("frame_index").get<std::size_t>();
      if (!rec.at("token_index").is_null()) {
        a.token_index = rec.at("token_index").get<std::size_t>();
        a.similarity = rec.at("similarity").get<double>();
      }
      a.token = rec.at("token").get<std::string>();
      if (rec.contains("language") && !rec.at("language").is_null()) {
        a.language = rec.at("language").get<std::string>();
      }
      file.frames.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::InvalidArgument, path.string() + ": " + e.what());
  }
  return file;
}

}  // namespace malens
