#pragma once

#include <cstdint>

#include "ged/graph.hpp"

namespace ged {

struct SyntheticConfig {
  int classes = 5;
  int graphs_per_class = 20;
  int min_nodes = 10;
  int max_nodes = 20;
  double jitter = 0.02;        // std-dev of Gaussian position noise
  double insert_delete = 0.1;  // per-node probability of deletion; same expected
                               // number of fresh nodes inserted
  std::uint64_t seed = 0;
  int knn = 3;
  int distractor_dims = 0;        // extra attribute dims of pure noise
  double distractor_scale = 1.0;  // range of the noise dims
  double train_fraction = 0.6;
  double validation_fraction = 0.2;
};

/// Per class: a random 2-d point prototype with k-nearest-neighbour edges;
/// instances jitter the points, drop/insert a few nodes and rebuild the
/// edges. Optional distractor dims append uniform noise to every node
/// attribute, resampled per instance, so only the first two dims carry the
/// class signal. Edges always come from the first two dims. Deterministic
/// per seed.
DatasetSplit generate_synthetic_dataset(const SyntheticConfig& cfg);

}  // namespace ged
