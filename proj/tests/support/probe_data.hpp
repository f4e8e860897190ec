#pragma once

// Labelled point clouds for probe training.

#include <string>
#include <vector>

#include "malens/probes.hpp"
#include "malens/rng.hpp"

namespace malens::testing {

/// `per_class` points per class around class centres placed on distinct axes
/// at distance `separation`, with unit-variance noise.
inline std::vector<ProbeExample> gaussian_clusters(Rng& rng, std::size_t classes,
                                                   std::size_t per_class, std::size_t dim,
                                                   double separation) {
  std::vector<ProbeExample> out;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      ProbeExample e;
      e.label = "c" + std::to_string(c);
      e.features.resize(dim);
      for (auto& x : e.features) x = rng.normal();
      e.features[c % dim] += separation;
      out.push_back(std::move(e));
    }
  }
  return out;
}

/// Same features with labels permuted at random.
inline std::vector<ProbeExample> shuffled_labels(Rng& rng, std::vector<ProbeExample> examples) {
  std::vector<std::string> labels;
  for (const auto& e : examples) labels.push_back(e.label);
  rng.shuffle(std::span<std::string>(labels));
  for (std::size_t i = 0; i < examples.size(); ++i) examples[i].label = labels[i];
  return examples;
}

}  // namespace malens::testing
