#include "ged/gnn.hpp"

#include <cmath>
#include <random>

namespace ged {

using ad::Tensor;

void ModelConfig::validate() const {
  if (layers < 1) throw Error(ErrorCode::Domain, "config: layers must be >= 1");
  if (hidden_dim < 2 || input_dim < 1 || edge_dim < 1)
    throw Error(ErrorCode::Domain, "config: bad dimensions");
  if (variant == GnnVariant::GAT && (heads < 1 || hidden_dim % heads != 0))
    throw Error(ErrorCode::Domain, "config: hidden_dim must be divisible by heads");
}

DirectedEdges expand_edges(const Graph& g, bool self_loops) {
  DirectedEdges e;
  for (auto [a, b] : g.edges) {
    e.src.push_back(a);
    e.dst.push_back(b);
    e.src.push_back(b);
    e.dst.push_back(a);
  }
  if (self_loops)
    for (int i = 0; i < g.node_count(); ++i) {
      e.src.push_back(i);
      e.dst.push_back(i);
    }
  return e;
}

namespace {

void glorot(ad::Param& p, std::mt19937_64& rng) {
  int fan_in = p.shape.size() == 2 ? p.shape[0] : 1;
  int fan_out = p.shape.size() == 2 ? p.shape[1] : static_cast<int>(p.value.size());
  double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : p.value) v = dist(rng);
}

MlpParams make_mlp(const std::string& prefix, int in, int mid, int out, std::mt19937_64& rng) {
  MlpParams m;
  m.W1 = ad::Param(prefix + ".W1", {in, mid});
  m.b1 = ad::Param(prefix + ".b1", {1, mid});
  m.W2 = ad::Param(prefix + ".W2", {mid, out});
  m.b2 = ad::Param(prefix + ".b2", {1, out});
  glorot(m.W1, rng);
  glorot(m.W2, rng);
  return m;
}

ad::Param make_weight(const std::string& name, ad::Shape shape, std::mt19937_64& rng) {
  ad::Param p(name, std::move(shape));
  glorot(p, rng);
  return p;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ModelParams mp;
  mp.config = config;
  const int d = config.hidden_dim;

  mp.input_W = make_weight("input.W", {config.input_dim, d}, rng);
  mp.input_b = ad::Param("input.b", {1, d});

  if (config.variant == GnnVariant::GAT) {
    for (int k = 0; k < config.layers; ++k) {
      bool last = k == config.layers - 1;
      int dh = last ? d : d / config.heads;
      GatLayerParams layer;
      std::string pre = "gat" + std::to_string(k);
      for (int h = 0; h < config.heads; ++h) {
        std::string hp = pre + ".h" + std::to_string(h);
        layer.W.push_back(make_weight(hp + ".W", {d, dh}, rng));
        layer.a_self.push_back(make_weight(hp + ".a_self", {dh, 1}, rng));
        layer.a_neigh.push_back(make_weight(hp + ".a_neigh", {dh, 1}, rng));
      }
      layer.bn_gamma = ad::Param(pre + ".bn.gamma", {1, d});
      std::fill(layer.bn_gamma.value.begin(), layer.bn_gamma.value.end(), 1.0);
      layer.bn_beta = ad::Param(pre + ".bn.beta", {1, d});
      mp.gat.push_back(std::move(layer));
    }
  } else {
    mp.edge_feature_net = make_mlp("edge_feat", d, d, config.edge_dim, rng);
    for (int k = 0; k < config.layers; ++k) {
      std::string pre = "gru" + std::to_string(k);
      GruLayerParams layer;
      layer.edge_matrix_net = make_mlp(pre + ".A", config.edge_dim, d, d * d, rng);
      layer.Wz = make_weight(pre + ".Wz", {d, d}, rng);
      layer.Uz = make_weight(pre + ".Uz", {d, d}, rng);
      layer.bz = ad::Param(pre + ".bz", {1, d});
      layer.Wr = make_weight(pre + ".Wr", {d, d}, rng);
      layer.Ur = make_weight(pre + ".Ur", {d, d}, rng);
      layer.br = ad::Param(pre + ".br", {1, d});
      layer.Wn = make_weight(pre + ".Wn", {d, d}, rng);
      layer.Un = make_weight(pre + ".Un", {d, d}, rng);
      layer.bn = ad::Param(pre + ".bn", {1, d});
      mp.gru.push_back(std::move(layer));
    }
  }
  mp.cost_head = make_mlp("cost", d, std::max(d / 2, 2), 1, rng);
  return mp;
}

namespace {

void collect_mlp(MlpParams& m, std::vector<ad::Param*>& out) {
  out.push_back(&m.W1);
  out.push_back(&m.b1);
  out.push_back(&m.W2);
  out.push_back(&m.b2);
}

}  // namespace

std::vector<ad::Param*> ModelParams::all() {
  std::vector<ad::Param*> out{&input_W, &input_b};
  for (auto& layer : gat) {
    for (auto& p : layer.W) out.push_back(&p);
    for (auto& p : layer.a_self) out.push_back(&p);
    for (auto& p : layer.a_neigh) out.push_back(&p);
    out.push_back(&layer.bn_gamma);
    out.push_back(&layer.bn_beta);
  }
  if (config.variant == GnnVariant::GRU) collect_mlp(edge_feature_net, out);
  for (auto& layer : gru) {
    collect_mlp(layer.edge_matrix_net, out);
    for (auto* p : {&layer.Wz, &layer.Uz, &layer.bz, &layer.Wr, &layer.Ur, &layer.br,
                    &layer.Wn, &layer.Un, &layer.bn})
      out.push_back(p);
  }
  collect_mlp(cost_head, out);
  return out;
}

std::vector<ad::Param*> ModelParams::decay_weights() {
  std::vector<ad::Param*> out{&input_W};
  for (auto& layer : gat) {
    for (auto& p : layer.W) out.push_back(&p);
    for (auto& p : layer.a_self) out.push_back(&p);
    for (auto& p : layer.a_neigh) out.push_back(&p);
  }
  auto mlp_weights = [&](MlpParams& m) {
    out.push_back(&m.W1);
    out.push_back(&m.W2);
  };
  if (config.variant == GnnVariant::GRU) mlp_weights(edge_feature_net);
  for (auto& layer : gru) {
    mlp_weights(layer.edge_matrix_net);
    for (auto* p : {&layer.Wz, &layer.Uz, &layer.Wr, &layer.Ur, &layer.Wn, &layer.Un})
      out.push_back(p);
  }
  mlp_weights(cost_head);
  return out;
}

Tensor mlp_forward(ad::Tape& tape, MlpParams& p, Tensor x) {
  Tensor h = ad::tanh_(ad::add(ad::matmul(x, tape.param(p.W1)), tape.param(p.b1)));
  return ad::add(ad::matmul(h, tape.param(p.W2)), tape.param(p.b2));
}

Tensor gat_layer(ad::Tape& tape, Tensor h, const DirectedEdges& edges, GatLayerParams& params,
                 int heads, bool is_last, ad::Mode mode) {
  const int n = h.shape()[0];
  const int e = static_cast<int>(edges.src.size());
  std::vector<Tensor> head_out;
  for (int hd = 0; hd < heads; ++hd) {
    Tensor wh = ad::matmul(h, tape.param(params.W[hd]));
    Tensor s_self = ad::matmul(wh, tape.param(params.a_self[hd]));
    Tensor s_neigh = ad::matmul(wh, tape.param(params.a_neigh[hd]));
    Tensor logits = ad::leaky_relu(
        ad::add(ad::gather_rows(s_self, edges.dst), ad::gather_rows(s_neigh, edges.src)), 0.2);
    Tensor alpha = ad::segment_softmax(ad::reshape(logits, {e}), edges.dst, n);
    Tensor msg = ad::mul(ad::reshape(alpha, {e, 1}), ad::gather_rows(wh, edges.src));
    head_out.push_back(ad::segment_sum(msg, edges.dst, n));
  }
  Tensor out = head_out[0];
  if (is_last) {
    for (std::size_t i = 1; i < head_out.size(); ++i) out = ad::add(out, head_out[i]);
    out = ad::scale(out, 1.0 / heads);
  } else {
    out = ad::concat(head_out, 1);
  }
  out = ad::add(out, h);  // residual; dims match by construction
  if (!is_last)
    out = ad::batch_norm(out, tape.param(params.bn_gamma), tape.param(params.bn_beta),
                         params.bn_stats, mode);
  return out;
}

Tensor compute_edge_features(ad::Tape& tape, Tensor h1, const DirectedEdges& edges,
                             MlpParams& params) {
  Tensor diff =
      ad::abs_(ad::sub(ad::gather_rows(h1, edges.dst), ad::gather_rows(h1, edges.src)));
  return mlp_forward(tape, params, diff);
}

Tensor gru_layer(ad::Tape& tape, Tensor h, const DirectedEdges& edges, Tensor edge_feats,
                 GruLayerParams& params) {
  auto& p = params;
  const int n = h.shape()[0];
  Tensor mats = mlp_forward(tape, p.edge_matrix_net, edge_feats);
  Tensor msgs = ad::edge_matvec(mats, ad::gather_rows(h, edges.src));
  Tensor m = ad::segment_sum(msgs, edges.dst, n);

  Tensor z = ad::sigmoid(ad::add(ad::add(ad::matmul(m, tape.param(p.Wz)),
                                         ad::matmul(h, tape.param(p.Uz))),
                                 tape.param(p.bz)));
  Tensor r = ad::sigmoid(ad::add(ad::add(ad::matmul(m, tape.param(p.Wr)),
                                         ad::matmul(h, tape.param(p.Ur))),
                                 tape.param(p.br)));
  Tensor cand = ad::tanh_(ad::add(ad::add(ad::matmul(m, tape.param(p.Wn)),
                                          ad::mul(r, ad::matmul(h, tape.param(p.Un)))),
                                  tape.param(p.bn)));
  Tensor one = tape.constant({1, 1}, {1.0});
  return ad::add(ad::mul(ad::sub(one, z), cand), ad::mul(z, h));
}

Tensor embed(ad::Tape& tape, const Graph& g, ModelParams& params, ad::Mode mode) {
  const ModelConfig& cfg = params.config;
  if (g.attr_dim() != cfg.input_dim && g.node_count() > 0)
    throw Error(ErrorCode::Dimension, "embed: node attribute dim does not match config");
  const int n = g.node_count();
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(n) * cfg.input_dim);
  for (const auto& attr : g.nodes) flat.insert(flat.end(), attr.begin(), attr.end());
  if (n == 0) return tape.constant({0, cfg.hidden_dim}, {});
  Tensor h0 = tape.constant({n, cfg.input_dim}, std::move(flat));
  Tensor h = ad::add(ad::matmul(h0, tape.param(params.input_W)), tape.param(params.input_b));

  if (cfg.variant == GnnVariant::GAT) {
    DirectedEdges edges = expand_edges(g, /*self_loops=*/true);
    for (int k = 0; k < cfg.layers; ++k)
      h = gat_layer(tape, h, edges, params.gat[k], cfg.heads, k == cfg.layers - 1, mode);
  } else {
    DirectedEdges edges = expand_edges(g, /*self_loops=*/false);
    Tensor feats = compute_edge_features(tape, h, edges, params.edge_feature_net);
    for (int k = 0; k < cfg.layers; ++k) h = gru_layer(tape, h, edges, feats, params.gru[k]);
  }
  return h;
}

NodeEmbeddings embed_values(const Graph& g, ModelParams& params) {
  ad::Tape tape;
  Tensor h = embed(tape, g, params, ad::Mode::Eval);
  NodeEmbeddings out;
  out.rows = h.shape()[0];
  out.cols = h.shape()[1];
  out.values = h.value();
  return out;
}

Checkpoint to_checkpoint(ModelParams& params) {
  Checkpoint ckpt;
  const ModelConfig& c = params.config;
  ckpt.metadata["variant"] = c.variant == GnnVariant::GAT ? "gat" : "gru";
  ckpt.metadata["layers"] = std::to_string(c.layers);
  ckpt.metadata["hidden_dim"] = std::to_string(c.hidden_dim);
  ckpt.metadata["heads"] = std::to_string(c.heads);
  ckpt.metadata["input_dim"] = std::to_string(c.input_dim);
  ckpt.metadata["edge_dim"] = std::to_string(c.edge_dim);
  for (ad::Param* p : params.all()) ckpt.tensors.push_back(*p);
  for (std::size_t k = 0; k < params.gat.size(); ++k) {
    auto& stats = params.gat[k].bn_stats;
    if (!stats.initialized) continue;
    int d = c.hidden_dim;
    ad::Param rm("gat" + std::to_string(k) + ".bn.running_mean", {1, d});
    rm.value = stats.running_mean;
    ad::Param rv("gat" + std::to_string(k) + ".bn.running_var", {1, d});
    rv.value = stats.running_var;
    ckpt.tensors.push_back(std::move(rm));
    ckpt.tensors.push_back(std::move(rv));
  }
  return ckpt;
}

ModelParams from_checkpoint(const Checkpoint& ckpt) {
  ModelConfig cfg;
  auto meta = [&](const std::string& key) {
    auto it = ckpt.metadata.find(key);
    if (it == ckpt.metadata.end())
      throw Error(ErrorCode::Parse, "checkpoint missing metadata key: " + key);
    return it->second;
  };
  cfg.variant = meta("variant") == "gat" ? GnnVariant::GAT : GnnVariant::GRU;
  cfg.layers = std::stoi(meta("layers"));
  cfg.hidden_dim = std::stoi(meta("hidden_dim"));
  cfg.heads = std::stoi(meta("heads"));
  cfg.input_dim = std::stoi(meta("input_dim"));
  cfg.edge_dim = std::stoi(meta("edge_dim"));

  ModelParams params = init_params(cfg, 0);
  std::map<std::string, const ad::Param*> by_name;
  for (const auto& t : ckpt.tensors) by_name[t.name] = &t;
  for (ad::Param* p : params.all()) {
    auto it = by_name.find(p->name);
    if (it == by_name.end())
      throw Error(ErrorCode::Parse, "checkpoint missing tensor: " + p->name);
    if (it->second->shape != p->shape)
      throw Error(ErrorCode::Parse, "checkpoint shape mismatch for tensor: " + p->name);
    p->value = it->second->value;
  }
  for (std::size_t k = 0; k < params.gat.size(); ++k) {
    auto rm = by_name.find("gat" + std::to_string(k) + ".bn.running_mean");
    auto rv = by_name.find("gat" + std::to_string(k) + ".bn.running_var");
    if (rm != by_name.end() && rv != by_name.end()) {
      auto& stats = params.gat[k].bn_stats;
      stats.running_mean = rm->second->value;
      stats.running_var = rv->second->value;
      stats.initialized = true;
    }
  }
  return params;
}

}  // namespace ged
