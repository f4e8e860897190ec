#pragma once

// Linear probes on mean-pooled representations, and sentence-similarity
// evaluation through Spearman's rank correlation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "malens/corpus.hpp"
#include "malens/interchange.hpp"

namespace malens {

enum class ProbeLevel { Phone, Word };

std::string_view to_string(ProbeLevel level) noexcept;
ProbeLevel parse_probe_level(std::string_view name);

struct ProbeExample {
  std::vector<double> features;
  std::string label;
};

enum class Split { Train, Test };

struct ProbeDataset {
  ProbeLevel level = ProbeLevel::Word;
  std::size_t dim = 0;
  std::vector<ProbeExample> examples;
  /// Sorted distinct labels of `examples`.
  std::vector<std::string> label_set;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  const std::vector<std::size_t>& split(Split s) const { return s == Split::Train ? train : test; }
};

struct ProbeSplitOptions {
  std::size_t min_label_count = 1;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

/// Drops labels seen fewer than min_label_count times, then splits every label
/// separately: a label with n >= 2 examples puts round(n * (1 - train_fraction))
/// of them, clamped to [1, n - 1], into the test split. NoExamples when nothing
/// survives, TooFewLabels below two classes, DimMismatch on ragged features.
ProbeDataset build_probe_dataset(std::vector<ProbeExample> examples, ProbeLevel level,
                                 const ProbeSplitOptions& options);

/// One example per aligned word or phone whose span overlaps at least one
/// frame, pooled with pool_span. Labels are the word surface or the phone.
std::vector<ProbeExample> collect_probe_examples(const Corpus& corpus, Stage stage,
                                                 ProbeLevel level, std::size_t jobs = 1);

ProbeDataset build_probe_dataset(const Corpus& corpus, Stage stage, ProbeLevel level,
                                 const ProbeSplitOptions& options, std::size_t jobs = 1);

struct ProbeTrainingOptions {
  std::size_t epochs = 100;
  double learning_rate = 0.1;
  double l2 = 1e-4;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

/// Multinomial logistic regression over standardized features.
struct ProbeModel {
  std::size_t dim = 0;
  std::vector<std::string> labels;
  /// Train-split feature mean and standard deviation (1 where constant).
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  /// labels.size() x dim, row-major.
  std::vector<double> weights;
  std::vector<double> bias;

  ProbeTrainingOptions options;
  /// Training objective after each epoch: mean cross-entropy + l2 * |W|^2 / 2.
  std::vector<double> epoch_losses;
  double final_loss() const { return epoch_losses.empty() ? 0.0 : epoch_losses.back(); }

  /// Index into `labels` of the largest logit; ties go to the lowest index.
  std::size_t predict(std::span<const double> features) const;
};

/// Mini-batch gradient descent on the train split, deterministic in the seed.
/// Degenerate when the train split has a single class, NonFinite when the
/// loss or the parameters overflow.
ProbeModel train_linear_probe(const ProbeDataset& dataset, const ProbeTrainingOptions& options);

/// Fraction of examples in the split predicted correctly. DimMismatch when
/// the dataset and model disagree; examples with labels unknown to the model
/// count as errors.
double evaluate_probe(const ProbeModel& model, const ProbeDataset& dataset, Split split,
                      std::size_t jobs = 1);

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. LengthMismatch for unequal lists or
/// fewer than 3 items, DegenerateRanks when either list is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

struct StsPair {
  RepresentationSequence a;
  RepresentationSequence b;
  double score = 0.0;
};

struct StsResult {
  double rho = 0.0;
  std::size_t num_pairs = 0;
};

/// Spearman between cos(pool(a), pool(b)) and the human scores. Both
/// sequences of every pair must come from `stage`.
StsResult sts_eval(std::span<const StsPair> pairs, Stage stage);

/// JSON {"pairs": [{"a": path, "b": path, "score": x}, ...]}; paths resolve
/// against the file's directory.
std::vector<StsPair> load_sts_pairs(const std::filesystem::path& path);

}  // namespace malens
