#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ged/gnn.hpp"
#include "ged/synthetic.hpp"

using namespace ged;

namespace {

ModelConfig small_config(GnnVariant variant) {
  ModelConfig cfg;
  cfg.variant = variant;
  cfg.layers = 2;
  cfg.hidden_dim = 8;
  cfg.heads = 2;
  cfg.edge_dim = 4;
  return cfg;
}

Graph sample_graph() {
  return make_graph({{0.1, 0.2}, {0.8, 0.3}, {0.4, 0.9}, {0.5, 0.5}},
                    {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig cfg = small_config(GnnVariant::GAT);
  cfg.heads = 3;  // does not divide hidden_dim
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config(GnnVariant::GRU);
  cfg.layers = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("edge expansion") {
  Graph g = make_graph({{0.0}, {1.0}, {2.0}}, {{0, 1}});
  DirectedEdges plain = expand_edges(g, false);
  CHECK(plain.src == std::vector<int>{0, 1});
  CHECK(plain.dst == std::vector<int>{1, 0});
  DirectedEdges loops = expand_edges(g, true);
  CHECK(loops.src.size() == 5);  // two directions plus three self loops
}

TEST_CASE("init is deterministic per seed") {
  for (auto variant : {GnnVariant::GAT, GnnVariant::GRU}) {
    ModelParams a = init_params(small_config(variant), 3);
    ModelParams b = init_params(small_config(variant), 3);
    ModelParams c = init_params(small_config(variant), 4);
    auto pa = a.all(), pb = b.all(), pc = c.all();
    REQUIRE(pa.size() == pb.size());
    bool any_diff = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i]->name == pb[i]->name);
      CHECK(pa[i]->value == pb[i]->value);
      if (pa[i]->value != pc[i]->value) any_diff = true;
    }
    CHECK(any_diff);
  }
}

TEST_CASE("embedding is deterministic in eval mode") {
  Graph g = sample_graph();
  for (auto variant : {GnnVariant::GAT, GnnVariant::GRU}) {
    ModelParams params = init_params(small_config(variant), 11);
    NodeEmbeddings a = embed_values(g, params);
    NodeEmbeddings b = embed_values(g, params);
    CHECK(a.rows == g.node_count());
    CHECK(a.cols == 8);
    CHECK(a.values == b.values);
  }
}

TEST_CASE("embedding is permutation equivariant") {
  Graph g = sample_graph();
  NodePermutation p = random_permutation(g.node_count(), 5);
  Graph gp = permute(g, p);
  for (auto variant : {GnnVariant::GAT, GnnVariant::GRU}) {
    ModelParams params = init_params(small_config(variant), 11);
    NodeEmbeddings orig = embed_values(g, params);
    NodeEmbeddings perm = embed_values(gp, params);
    for (int v = 0; v < g.node_count(); ++v)
      for (int k = 0; k < orig.cols; ++k)
        CHECK(perm.values[p.mapping[v] * orig.cols + k] ==
              doctest::Approx(orig.values[v * orig.cols + k]).epsilon(1e-9));
  }
}

TEST_CASE("embedding of the empty graph") {
  Graph empty = make_graph({}, {});
  ModelParams params = init_params(small_config(GnnVariant::GRU), 2);
  NodeEmbeddings e = embed_values(empty, params);
  CHECK(e.rows == 0);
  CHECK(e.cols == 8);
  CHECK(e.values.empty());
}

TEST_CASE("embedding handles isolated nodes") {
  Graph g = make_graph({{0.1, 0.1}, {0.9, 0.9}, {0.5, 0.1}}, {{0, 1}});  // node 2 isolated
  for (auto variant : {GnnVariant::GAT, GnnVariant::GRU}) {
    ModelParams params = init_params(small_config(variant), 11);
    NodeEmbeddings e = embed_values(g, params);
    CHECK(e.rows == 3);
    for (double v : e.values) CHECK(std::isfinite(v));
  }
}

TEST_CASE("gru cell with zero messages reduces to its gate equations") {
  // With no edges the message is zero; every weight zeroed leaves
  //   z = sigmoid(bz), r = sigmoid(br), cand = tanh(bn),
  //   h' = (1-z)*cand + z*h,   with h = input bias only.
  ModelConfig cfg = small_config(GnnVariant::GRU);
  cfg.layers = 1;
  ModelParams params = init_params(cfg, 1);
  for (ad::Param* p : params.all()) std::fill(p->value.begin(), p->value.end(), 0.0);
  params.input_b.value.assign(cfg.hidden_dim, 0.3);
  auto& layer = params.gru[0];
  layer.bz.value.assign(cfg.hidden_dim, 0.2);
  layer.bn.value.assign(cfg.hidden_dim, -0.4);

  Graph g = make_graph({{0.5, 0.5}}, {});
  NodeEmbeddings e = embed_values(g, params);
  double h = 0.3;
  double z = 1.0 / (1.0 + std::exp(-0.2));
  double expected = (1.0 - z) * std::tanh(-0.4) + z * h;
  for (int k = 0; k < cfg.hidden_dim; ++k)
    CHECK(e.values[k] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gru edge features are symmetric in edge direction") {
  Graph g = make_graph({{0.1, 0.9}, {0.7, 0.3}}, {{0, 1}});
  ModelParams params = init_params(small_config(GnnVariant::GRU), 9);
  ad::Tape tape;
  DirectedEdges edges = expand_edges(g, false);
  ad::Tensor h0 = tape.constant({2, 2}, {0.1, 0.9, 0.7, 0.3});
  ad::Tensor h = ad::add(ad::matmul(h0, tape.param(params.input_W)),
                         tape.param(params.input_b));
  ad::Tensor feats = compute_edge_features(tape, h, edges, params.edge_feature_net);
  auto v = feats.value();
  const int d = params.config.edge_dim;
  for (int k = 0; k < d; ++k) CHECK(v[k] == v[d + k]);  // (0,1) and (1,0) rows
}

TEST_CASE("checkpoint roundtrip restores parameters and running stats") {
  Graph g = sample_graph();
  for (auto variant : {GnnVariant::GAT, GnnVariant::GRU}) {
    ModelParams params = init_params(small_config(variant), 21);
    if (variant == GnnVariant::GAT) {
      // Populate batch-norm running statistics with one training pass.
      ad::Tape tape;
      embed(tape, g, params, ad::Mode::Train);
    }
    NodeEmbeddings before = embed_values(g, params);

    auto path = std::filesystem::temp_directory_path() / "ged_gnn_ckpt.bin";
    save_checkpoint(path.string(), to_checkpoint(params));
    ModelParams restored = from_checkpoint(load_checkpoint(path.string()));
    NodeEmbeddings after = embed_values(g, restored);
    CHECK(before.values == after.values);
  }
}

TEST_CASE("checkpoint rejects mismatched tensors") {
  ModelParams params = init_params(small_config(GnnVariant::GRU), 1);
  Checkpoint ckpt = to_checkpoint(params);
  ckpt.tensors.pop_back();
  CHECK_THROWS_AS(from_checkpoint(ckpt), Error);
}
