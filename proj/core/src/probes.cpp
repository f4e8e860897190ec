#include "malens/probes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "malens/error.hpp"
#include "malens/io.hpp"
#include "malens/parallel.hpp"
#include "malens/rng.hpp"
#include "malens/temporal_align.hpp"

namespace malens {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ProbeLevel level) noexcept {
  return level == ProbeLevel::Phone ? "phone" : "word";
}

ProbeLevel parse_probe_level(std::string_view name) {
  if (name == "phone") return ProbeLevel::Phone;
  if (name == "word") return ProbeLevel::Word;
  fail(Errc::ConfigError, "unknown probe level '" + std::string(name) + "'");
}

// Datasets ---------------------------------------------------------------------

ProbeDataset build_probe_dataset(std::vector<ProbeExample> examples, ProbeLevel level,
                                 const ProbeSplitOptions& options) {
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0)) {
    fail(Errc::ConfigError, "train_fraction must lie in (0, 1)");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& e : examples) ++counts[e.label];
  std::erase_if(examples, [&](const ProbeExample& e) {
    return counts[e.label] < options.min_label_count;
  });
  if (examples.empty()) fail(Errc::NoExamples, "no probe examples left after label filtering");

  ProbeDataset ds;
  ds.level = level;
  ds.dim = examples.front().features.size();
  for (const auto& e : examples) {
    if (e.features.size() != ds.dim) fail(Errc::DimMismatch, "probe features of unequal length");
  }
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < examples.size(); ++i) by_label[examples[i].label].push_back(i);
  if (by_label.size() < 2) {
    fail(Errc::TooFewLabels, std::to_string(by_label.size()) + " label(s); a probe needs 2");
  }
  ds.examples = std::move(examples);

  Rng rng(options.seed);
  for (auto& [label, indices] : by_label) {
    ds.label_set.push_back(label);
    const std::size_t n = indices.size();
    std::size_t n_test = 0;
    if (n >= 2) {
      const auto wanted = static_cast<std::size_t>(
          std::llround(static_cast<double>(n) * (1.0 - options.train_fraction)));
      n_test = std::clamp<std::size_t>(wanted, 1, n - 1);
    }
    rng.shuffle(std::span<std::size_t>(indices));
    ds.test.insert(ds.test.end(), indices.begin(), indices.begin() + static_cast<long>(n_test));
    ds.train.insert(ds.train.end(), indices.begin() + static_cast<long>(n_test), indices.end());
  }
  std::sort(ds.train.begin(), ds.train.end());
  std::sort(ds.test.begin(), ds.test.end());
  return ds;
}

std::vector<ProbeExample> collect_probe_examples(const Corpus& corpus, Stage stage,
                                                 ProbeLevel level, std::size_t jobs) {
  std::vector<std::vector<ProbeExample>> per_utterance(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t u) {
    if (!corpus.has_stage(u, stage)) {
      fail(Errc::MissingFile, corpus.manifest().entries[u].utterance_id + " has no " +
                                  std::string(to_string(stage)) + " sequence");
    }
    const UtteranceRecord record = corpus.record(u);
    const RepresentationSequence sequence = corpus.sequence(u, stage);
    const auto spans =
        level == ProbeLevel::Word ? assign_words(record, sequence) : assign_phones(record, sequence);
    for (const auto& span : spans) {
      if (span.frame_indices.empty()) continue;
      ProbeExample e;
      e.features = pool_span(sequence, span.frame_indices);
      e.label = level == ProbeLevel::Word ? record.words[span.word_index].surface
                                          : record.phones[span.word_index].phone;
      per_utterance[u].push_back(std::move(e));
    }
  });
  std::vector<ProbeExample> out;
  for (auto& v : per_utterance) {
    std::move(v.begin(), v.end(), std::back_inserter(out));
  }
  return out;
}

ProbeDataset build_probe_dataset(const Corpus& corpus, Stage stage, ProbeLevel level,
                                 const ProbeSplitOptions& options, std::size_t jobs) {
  return build_probe_dataset(collect_probe_examples(corpus, stage, level, jobs), level, options);
}

// Training -----------------------------------------------------------------------

namespace {

void standardize(const ProbeModel& model, std::span<const double> x, std::vector<double>& z) {
  z.resize(model.dim);
  for (std::size_t d = 0; d < model.dim; ++d) {
    z[d] = (x[d] - model.feature_mean[d]) / model.feature_scale[d];
  }
}

void logits_of(const ProbeModel& model, std::span<const double> z, std::vector<double>& out) {
  const std::size_t k = model.labels.size();
  out.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    const double* w = model.weights.data() + c * model.dim;
    double s = model.bias[c];
    for (std::size_t d = 0; d < model.dim; ++d) s += w[d] * z[d];
    out[c] = s;
  }
}

/// Turns logits into probabilities in place; returns log-sum-exp.
double softmax(std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - top);
    sum += x;
  }
  for (double& x : v) x /= sum;
  return top + std::log(sum);
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::size_t ProbeModel::predict(std::span<const double> features) const {
  std::vector<double> z;
  std::vector<double> logits;
  standardize(*this, features, z);
  logits_of(*this, z, logits);
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  return best;
}

ProbeModel train_linear_probe(const ProbeDataset& dataset, const ProbeTrainingOptions& options) {
  if (dataset.train.empty()) fail(Errc::NoExamples, "empty train split");
  if (options.batch_size == 0) fail(Errc::ConfigError, "batch_size must be positive");

  ProbeModel model;
  model.dim = dataset.dim;
  model.labels = dataset.label_set;
  model.options = options;
  const std::size_t k = model.labels.size();
  const std::size_t dim = model.dim;

  std::vector<std::size_t> target(dataset.examples.size());
  for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
    const auto it =
        std::lower_bound(model.labels.begin(), model.labels.end(), dataset.examples[i].label);
    target[i] = static_cast<std::size_t>(it - model.labels.begin());
  }
  std::vector<bool> seen(k, false);
  for (std::size_t i : dataset.train) seen[target[i]] = true;
  if (std::count(seen.begin(), seen.end(), true) < 2) {
    fail(Errc::Degenerate, "train split holds a single class");
  }

  model.feature_mean.assign(dim, 0.0);
  model.feature_scale.assign(dim, 0.0);
  const auto n_train = static_cast<double>(dataset.train.size());
  for (std::size_t i : dataset.train) {
    for (std::size_t d = 0; d < dim; ++d) model.feature_mean[d] += dataset.examples[i].features[d];
  }
  for (double& m : model.feature_mean) m /= n_train;
  for (std::size_t i : dataset.train) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double dev = dataset.examples[i].features[d] - model.feature_mean[d];
      model.feature_scale[d] += dev * dev;
    }
  }
  for (double& s : model.feature_scale) {
    s = std::sqrt(s / n_train);
    if (!(s > 0.0) || !std::isfinite(s)) s = 1.0;
  }

  model.weights.assign(k * dim, 0.0);
  model.bias.assign(k, 0.0);

  // Standardized train features, computed once.
  std::vector<std::vector<double>> z(dataset.train.size());
  for (std::size_t j = 0; j < dataset.train.size(); ++j) {
    standardize(model, dataset.examples[dataset.train[j]].features, z[j]);
  }

  Rng rng(options.seed);
  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad_w(k * dim);
  std::vector<double> grad_b(k);
  std::vector<double> p;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      std::fill(grad_b.begin(), grad_b.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t j = order[b];
        logits_of(model, z[j], p);
        softmax(p);
        p[target[dataset.train[j]]] -= 1.0;
        for (std::size_t c = 0; c < k; ++c) {
          double* g = grad_w.data() + c * dim;
          for (std::size_t d = 0; d < dim; ++d) g[d] += p[c] * z[j][d];
          grad_b[c] += p[c];
        }
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = 0; i < grad_w.size(); ++i) {
        model.weights[i] -= options.learning_rate * (grad_w[i] * inv + options.l2 * model.weights[i]);
      }
      for (std::size_t c = 0; c < k; ++c) model.bias[c] -= options.learning_rate * grad_b[c] * inv;
    }

    double loss = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      logits_of(model, z[j], p);
      const double correct = p[target[dataset.train[j]]];
      loss += softmax(p) - correct;
    }
    loss /= n_train;
    double norm2 = 0.0;
    for (double w : model.weights) norm2 += w * w;
    loss += 0.5 * options.l2 * norm2;
    if (!std::isfinite(loss) || !all_finite(model.weights) || !all_finite(model.bias)) {
      fail(Errc::NonFinite, "probe training diverged at epoch " + std::to_string(epoch + 1) +
                                "; lower the learning rate");
    }
    model.epoch_losses.push_back(loss);
  }
  return model;
}

double evaluate_probe(const ProbeModel& model, const ProbeDataset& dataset, Split split,
                      std::size_t jobs) {
  if (model.dim != dataset.dim) {
    fail(Errc::DimMismatch, "probe expects " + std::to_string(model.dim) + " features, dataset has " +
                                std::to_string(dataset.dim));
  }
  const auto& indices = dataset.split(split);
  if (indices.empty()) fail(Errc::NoExamples, "empty evaluation split");
  std::vector<char> correct(indices.size(), 0);
  parallel_for(indices.size(), jobs, [&](std::size_t i) {
    const ProbeExample& e = dataset.examples[indices[i]];
    correct[i] = model.labels[model.predict(e.features)] == e.label ? 1 : 0;
  });
  const auto hits = std::count(correct.begin(), correct.end(), 1);
  return static_cast<double>(hits) / static_cast<double>(indices.size());
}

// Rank correlation ----------------------------------------------------------------

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    fail(Errc::LengthMismatch, std::to_string(xs.size()) + " vs " + std::to_string(ys.size()));
  }
  if (xs.size() < 3) fail(Errc::LengthMismatch, "rank correlation needs at least 3 pairs");
  for (std::span<const double> v : {xs, ys}) {
    for (double x : v) {
      if (!std::isfinite(x)) fail(Errc::NonFinite, "rank correlation input");
    }
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  // Ranks are multiples of 1/2, so these sums are exact for any realistic n.
  const double mean = (static_cast<double>(xs.size()) + 1.0) / 2.0;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) fail(Errc::DegenerateRanks, "all values in a list are equal");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

StsResult sts_eval(std::span<const StsPair> pairs, Stage stage) {
  if (pairs.size() < 3) fail(Errc::LengthMismatch, "STS evaluation needs at least 3 pairs");
  std::vector<double> cosines;
  std::vector<double> scores;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const StsPair& p = pairs[i];
    if (p.a.stage() != stage || p.b.stage() != stage) {
      fail(Errc::InvalidArgument, "STS pair " + std::to_string(i) + " is not from stage " +
                                      std::string(to_string(stage)));
    }
    if (p.a.dim() != p.b.dim()) fail(Errc::DimMismatch, "STS pair " + std::to_string(i));
    const auto a = pool_all(p.a);
    const auto b = pool_all(p.b);
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
      dot += a[d] * b[d];
      na += a[d] * a[d];
      nb += b[d] * b[d];
    }
    if (na == 0.0 || nb == 0.0) {
      fail(Errc::Degenerate, "STS pair " + std::to_string(i) + " pools to a zero vector");
    }
    cosines.push_back(std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0));
    scores.push_back(p.score);
  }
  return {spearman(cosines, scores), pairs.size()};
}

std::vector<StsPair> load_sts_pairs(const fs::path& path) {
  const json doc = io::read_json_file(path);
  const fs::path base = path.parent_path();
  std::vector<StsPair> out;
  try {
    for (const auto& item : doc.at("pairs")) {
      const fs::path a = base / item.at("a").get<std::string>();
      const fs::path b = base / item.at("b").get<std::string>();
      out.push_back({load_representation_sequence(a), load_representation_sequence(b),
                     item.at("score").get<double>()});
    }
  } catch (const json::exception& e) {
    fail(Errc::InvalidArgument, path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace malens
