#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "ged/learned.hpp"
#include "ged/synthetic.hpp"

using namespace ged;

namespace {

ModelConfig small_config(GnnVariant variant = GnnVariant::GRU) {
  ModelConfig cfg;
  cfg.variant = variant;
  cfg.layers = 2;
  cfg.hidden_dim = 8;
  cfg.heads = 2;
  cfg.edge_dim = 4;
  return cfg;
}

std::vector<Graph> sample_graphs(std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.classes = 3;
  cfg.graphs_per_class = 4;
  cfg.min_nodes = 4;
  cfg.max_nodes = 8;
  cfg.seed = seed;
  DatasetSplit split = generate_synthetic_dataset(cfg);
  std::vector<Graph> out;
  for (const auto& lg : split.train) out.push_back(lg.graph);
  for (const auto& lg : split.validation) out.push_back(lg.graph);
  return out;
}

}  // namespace

TEST_CASE("self distance is exactly zero") {
  auto graphs = sample_graphs(1);
  for (auto variant : {GnnVariant::GAT, GnnVariant::GRU}) {
    ModelParams params = init_params(small_config(variant), 2);
    DistanceConfig cfg;
    for (const auto& g : graphs) CHECK(learned_distance(g, g, params, cfg) == 0.0);
  }
}

TEST_CASE("distance is non-negative and symmetric") {
  auto graphs = sample_graphs(2);
  ModelParams params = init_params(small_config(), 3);
  for (bool blend : {false, true}) {
    DistanceConfig cfg;
    cfg.spatial_blend = blend;
    for (std::size_t i = 0; i + 1 < graphs.size(); i += 2) {
      double d12 = learned_distance(graphs[i], graphs[i + 1], params, cfg);
      double d21 = learned_distance(graphs[i + 1], graphs[i], params, cfg);
      CHECK(d12 >= 0.0);
      CHECK(std::abs(d12 - d21) <= 1e-12);
    }
  }
}

TEST_CASE("distance is invariant under node permutation") {
  auto graphs = sample_graphs(3);
  ModelParams params = init_params(small_config(), 4);
  DistanceConfig cfg;
  for (std::size_t i = 0; i + 1 < graphs.size(); i += 2) {
    const Graph& g1 = graphs[i];
    const Graph& g2 = graphs[i + 1];
    Graph gp = permute(g1, random_permutation(g1.node_count(), i + 7));
    double d = learned_distance(g1, g2, params, cfg);
    double dp = learned_distance(gp, g2, params, cfg);
    CHECK(std::abs(d - dp) <= 1e-9);
  }
}

TEST_CASE("numeric fast path matches the tape evaluation bitwise") {
  auto graphs = sample_graphs(4);
  for (auto variant : {GnnVariant::GAT, GnnVariant::GRU}) {
    ModelParams params = init_params(small_config(variant), 5);
    for (bool blend : {false, true}) {
      DistanceConfig cfg;
      cfg.spatial_blend = blend;
      for (std::size_t i = 0; i + 1 < graphs.size(); i += 3) {
        double via_tape = learned_distance(graphs[i], graphs[i + 1], params, cfg);
        GraphEmbedding a = precompute_embedding(graphs[i], params);
        GraphEmbedding b = precompute_embedding(graphs[i + 1], params);
        CHECK(learned_hed_numeric(a, b, cfg) == via_tape);
      }
    }
  }
}

TEST_CASE("single-node distance matches the hand-built cost matrix") {
  Graph g1 = make_graph({{0.2, 0.4}}, {});
  Graph g2 = make_graph({{0.9, 0.1}}, {});
  ModelParams params = init_params(small_config(), 6);
  DistanceConfig cfg;

  GraphEmbedding a = precompute_embedding(g1, params);
  GraphEmbedding b = precompute_embedding(g2, params);
  double sub = 0.0;
  for (int k = 0; k < a.emb.cols; ++k) {
    double diff = a.emb.values[k] - b.emb.values[k];
    sub += diff * diff;
  }
  sub = std::sqrt(sub) * 0.5;
  // Rows: min(sub, phi1) and min(phi2, 0) = 0; columns mirror it.
  double expected = (std::min(sub, a.phi[0]) + std::min(sub, b.phi[0])) / 2.0;
  CHECK(learned_distance(g1, g2, params, cfg) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("distance against the empty graph counts insertions") {
  Graph g = make_graph({{0.3, 0.3}, {0.6, 0.6}}, {{0, 1}});
  Graph empty = make_graph({}, {});
  ModelParams params = init_params(small_config(), 7);
  DistanceConfig cfg;
  GraphEmbedding e = precompute_embedding(g, params);
  double expected = (e.phi[0] + e.phi[1]) / 2.0;  // n1 + n2 = 2
  CHECK(learned_distance(g, empty, params, cfg) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(learned_distance(empty, g, params, cfg) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(learned_distance(empty, empty, params, cfg), Error);
}

TEST_CASE("correspondence points at the argmin entries") {
  auto graphs = sample_graphs(5);
  ModelParams params = init_params(small_config(), 8);
  DistanceConfig cfg;
  Correspondence corr;
  learned_distance(graphs[0], graphs[1], params, cfg, &corr);
  CHECK(static_cast<int>(corr.forward.size()) == graphs[0].node_count());
  CHECK(static_cast<int>(corr.backward.size()) == graphs[1].node_count());
  for (int t : corr.forward) {
    CHECK(t >= -1);
    CHECK(t < graphs[1].node_count());
  }
  // Matching a graph with itself maps every node to itself.
  learned_distance(graphs[0], graphs[0], params, cfg, &corr);
  for (std::size_t u = 0; u < corr.forward.size(); ++u)
    CHECK(corr.forward[u] == static_cast<int>(u));

  auto parsed = nlohmann::json::parse(correspondence_to_json(corr));
  CHECK(parsed["forward"].size() == corr.forward.size());
}

TEST_CASE("full pipeline passes a finite-difference check") {
  auto graphs = sample_graphs(6);
  for (auto variant : {GnnVariant::GAT, GnnVariant::GRU}) {
    ModelParams params = init_params(small_config(variant), 9);
    DistanceConfig cfg;
    std::vector<ad::Param*> all = params.all();
    double err = ad::finite_difference_check(all, [&](bool compute_grad) {
      for (ad::Param* p : all) p->zero_grad();
      ad::Tape tape;
      ad::Tensor e1 = embed(tape, graphs[0], params, ad::Mode::Eval);
      ad::Tensor e2 = embed(tape, graphs[1], params, ad::Mode::Eval);
      ad::Tensor d = learned_hed(tape, e1, e2, graphs[0], graphs[1], params, cfg);
      if (compute_grad) tape.backward(d);
      return d.scalar();
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("pairwise matrix matches per-pair distances and is thread safe") {
  auto graphs = sample_graphs(7);
  std::vector<Graph> queries(graphs.begin(), graphs.begin() + 4);
  std::vector<Graph> gallery(graphs.begin(), graphs.begin() + 6);
  ModelParams params = init_params(small_config(), 10);
  DistanceConfig cfg;
  auto serial = pairwise_distance_matrix(queries, gallery, params, cfg, 1);
  auto parallel = pairwise_distance_matrix(queries, gallery, params, cfg, 3);
  REQUIRE(serial.size() == 4);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    REQUIRE(serial[i].size() == 6);
    for (std::size_t j = 0; j < serial[i].size(); ++j) {
      CHECK(serial[i][j] == parallel[i][j]);
      CHECK(serial[i][j] == learned_distance(queries[i], gallery[j], params, cfg));
    }
  }
}
