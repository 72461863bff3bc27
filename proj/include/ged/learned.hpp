#pragma once

#include <optional>
#include <string>

#include "ged/gnn.hpp"

namespace ged {

struct DistanceConfig {
  bool spatial_blend = false;  // mix raw-attribute distance into substitutions
  double tau_d = 0.5;          // minimum deletion cost (spatial_blend only)
  double tau_i = 0.5;          // minimum insertion cost (spatial_blend only)

  void validate() const {
    if (spatial_blend && (tau_d < 0.0 || tau_i < 0.0))
      throw Error(ErrorCode::Domain, "tau_d/tau_i must be >= 0");
  }
};

/// Directed argmin targets; -1 stands for the epsilon node. The two
/// directions need not be consistent.
struct Correspondence {
  std::vector<int> forward;   // per node of g1: target in V2 or -1
  std::vector<int> backward;  // per node of g2: source in V1 or -1
};

std::string correspondence_to_json(const Correspondence& corr);

/// Differentiable learned Hausdorff edit distance over node embeddings:
/// epsilon-augmented cost matrix, per-row and per-column minima summed and
/// normalized by |V1|+|V2|. Gradient flows through the argmin entries.
/// Throws if both graphs are empty.
ad::Tensor learned_hed(ad::Tape& tape, ad::Tensor emb1, ad::Tensor emb2, const Graph& g1,
                       const Graph& g2, ModelParams& params, const DistanceConfig& cfg,
                       Correspondence* corr = nullptr);

/// embed + learned_hed in eval mode on a throwaway tape.
double learned_distance(const Graph& g1, const Graph& g2, ModelParams& params,
                        const DistanceConfig& cfg, Correspondence* corr = nullptr);

/// Precomputed per-graph state for fast repeated distance evaluation.
struct GraphEmbedding {
  const Graph* graph = nullptr;
  NodeEmbeddings emb;
  std::vector<double> phi;  // |phi(h_v)| per node
};

GraphEmbedding precompute_embedding(const Graph& g, ModelParams& params);

/// Non-differentiable fast path; bit-identical to the tape evaluation.
double learned_hed_numeric(const GraphEmbedding& a, const GraphEmbedding& b,
                           const DistanceConfig& cfg, Correspondence* corr = nullptr);

/// Embeddings computed once per graph and reused; parallel over queries when
/// jobs > 1.
std::vector<std::vector<double>> pairwise_distance_matrix(const std::vector<Graph>& queries,
                                                          const std::vector<Graph>& gallery,
                                                          ModelParams& params,
                                                          const DistanceConfig& cfg,
                                                          int jobs = 1);

}  // namespace ged
