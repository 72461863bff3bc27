#include "ged/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace ged {

namespace {

std::vector<std::pair<int, int>> knn_edges(const std::vector<std::vector<double>>& pts, int k) {
  const int n = static_cast<int>(pts.size());
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> by_dist;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double dx = pts[i][0] - pts[j][0];
      double dy = pts[i][1] - pts[j][1];
      by_dist.emplace_back(dx * dx + dy * dy, j);
    }
    std::sort(by_dist.begin(), by_dist.end());
    for (int t = 0; t < std::min<int>(k, static_cast<int>(by_dist.size())); ++t) {
      int j = by_dist[t].second;
      edges.insert({std::min(i, j), std::max(i, j)});
    }
  }
  return {edges.begin(), edges.end()};
}

}  // namespace

DatasetSplit generate_synthetic_dataset(const SyntheticConfig& cfg) {
  if (cfg.classes < 2) throw Error(ErrorCode::Domain, "synthetic dataset needs >= 2 classes");
  if (cfg.min_nodes < 3 || cfg.max_nodes < cfg.min_nodes)
    throw Error(ErrorCode::Domain, "invalid node range");
  if (cfg.distractor_dims < 0 || cfg.distractor_scale < 0)
    throw Error(ErrorCode::Domain, "invalid distractor settings");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  DatasetSplit split;
  for (int c = 0; c < cfg.classes; ++c) {
    std::string label = "class_" + std::to_string(c);
    split.keywords.push_back(label);

    std::uniform_int_distribution<int> size_dist(cfg.min_nodes, cfg.max_nodes);
    const int proto_n = size_dist(rng);
    std::vector<std::vector<double>> proto(proto_n);
    for (auto& p : proto) p = {unit(rng), unit(rng)};

    std::vector<LabeledGraph> instances;
    for (int inst = 0; inst < cfg.graphs_per_class; ++inst) {
      std::vector<std::vector<double>> pts;
      for (const auto& p : proto) {
        if (cfg.insert_delete > 0 && unit(rng) < cfg.insert_delete) continue;  // delete
        pts.push_back({p[0] + cfg.jitter * noise(rng), p[1] + cfg.jitter * noise(rng)});
      }
      if (cfg.insert_delete > 0) {
        std::poisson_distribution<int> extra(cfg.insert_delete * proto_n);
        int add = extra(rng);
        for (int t = 0; t < add; ++t) pts.push_back({unit(rng), unit(rng)});
      }
      while (static_cast<int>(pts.size()) < 3) pts.push_back({unit(rng), unit(rng)});
      auto edges = knn_edges(pts, cfg.knn);
      for (auto& p : pts)
        for (int d = 0; d < cfg.distractor_dims; ++d)
          p.push_back(cfg.distractor_scale * unit(rng));
      Graph g = make_graph(pts, edges, {}, label + "_" + std::to_string(inst));
      instances.push_back({std::move(g), label});
    }

    const int n_train = static_cast<int>(std::lround(cfg.train_fraction * cfg.graphs_per_class));
    const int n_val = static_cast<int>(std::lround(cfg.validation_fraction * cfg.graphs_per_class));
    for (int i = 0; i < cfg.graphs_per_class; ++i) {
      if (i < n_train)
        split.train.push_back(std::move(instances[i]));
      else if (i < n_train + n_val)
        split.validation.push_back(std::move(instances[i]));
      else
        split.test.push_back(std::move(instances[i]));
    }
  }
  return split;
}

}  // namespace ged
