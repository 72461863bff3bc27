#pragma once

#include <cstdint>
#include <vector>

#include "ged/autodiff.hpp"
#include "ged/checkpoint.hpp"
#include "ged/graph.hpp"

namespace ged {

enum class GnnVariant { GAT, GRU };

struct ModelConfig {
  GnnVariant variant = GnnVariant::GRU;
  int layers = 3;  // K propagation layers
  int hidden_dim = 64;
  int heads = 4;      // GAT only
  int input_dim = 2;  // node attribute dimension
  int edge_dim = 16;  // GRU edge feature width

  void validate() const;
};

/// 2-layer perceptron with tanh between the layers.
struct MlpParams {
  ad::Param W1, b1, W2, b2;
};

struct GatLayerParams {
  std::vector<ad::Param> W;        // per head [d_in, d_head]
  std::vector<ad::Param> a_self;   // per head [d_head, 1], attention on the collecting node
  std::vector<ad::Param> a_neigh;  // per head [d_head, 1], attention on the neighbour
  ad::Param bn_gamma, bn_beta;
  ad::BatchNormStats bn_stats;
};

struct GruLayerParams {
  MlpParams edge_matrix_net;  // edge feature -> d x d message matrix
  ad::Param Wz, Uz, bz;       // update gate (input = message, state = h)
  ad::Param Wr, Ur, br;       // reset gate
  ad::Param Wn, Un, bn;       // candidate state
};

/// All learnable tensors: input embedding, K propagation layers of the
/// configured variant, the GRU edge feature net, and the shared
/// insertion/deletion cost head used by the learned distance.
struct ModelParams {
  ModelConfig config;
  ad::Param input_W, input_b;
  std::vector<GatLayerParams> gat;
  std::vector<GruLayerParams> gru;
  MlpParams edge_feature_net;
  MlpParams cost_head;

  std::vector<ad::Param*> all();             // stable order across runs
  std::vector<ad::Param*> decay_weights();   // weight matrices only (no biases/batch-norm)
};

struct NodeEmbeddings {
  int rows = 0, cols = 0;
  std::vector<double> values;  // row-major [rows, cols]
};

/// Directed edge expansion of an undirected graph: both directions, plus
/// self-loops when requested (GAT needs them so isolated nodes have a
/// defined softmax).
struct DirectedEdges {
  std::vector<int> src, dst;
};
DirectedEdges expand_edges(const Graph& g, bool self_loops);

ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

ad::Tensor mlp_forward(ad::Tape& tape, MlpParams& p, ad::Tensor x);

/// One GAT propagation layer: attention-weighted neighbourhood sum per head,
/// heads concatenated (intermediate) or averaged (last), residual added,
/// batch-norm on all but the last layer.
ad::Tensor gat_layer(ad::Tape& tape, ad::Tensor h, const DirectedEdges& edges,
                     GatLayerParams& params, int heads, bool is_last, ad::Mode mode);

/// One GRU propagation layer: messages A(e_vu) h_u summed per node, then a
/// GRU cell update of the node state.
ad::Tensor gru_layer(ad::Tape& tape, ad::Tensor h, const DirectedEdges& edges,
                     ad::Tensor edge_feats, GruLayerParams& params);

/// e_vu = MLP(|h_v - h_u|) on first-layer embeddings; symmetric in the edge
/// direction by construction.
ad::Tensor compute_edge_features(ad::Tape& tape, ad::Tensor h1, const DirectedEdges& edges,
                                 MlpParams& params);

/// Input embedding plus K layers of the configured variant; returns the
/// [|V|, hidden_dim] node embedding tensor on the caller's tape.
ad::Tensor embed(ad::Tape& tape, const Graph& g, ModelParams& params, ad::Mode mode);

NodeEmbeddings embed_values(const Graph& g, ModelParams& params);  // eval mode, throwaway tape

Checkpoint to_checkpoint(ModelParams& params);
ModelParams from_checkpoint(const Checkpoint& ckpt);

}  // namespace ged
