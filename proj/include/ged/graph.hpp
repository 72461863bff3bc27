#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ged/error.hpp"

namespace ged {

/// Attributed undirected simple graph. Node attributes are fixed-length real
/// vectors (all the same length within one graph); edge attributes are
/// optional and aligned with `edges`. Immutable after construction.
struct Graph {
  std::string id;
  std::vector<std::vector<double>> nodes;
  std::vector<std::pair<int, int>> edges;  // stored with first < second
  std::vector<std::vector<double>> edge_attrs;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }
  int attr_dim() const { return nodes.empty() ? 0 : static_cast<int>(nodes[0].size()); }

  bool operator==(const Graph& other) const {
    return nodes == other.nodes && edges == other.edges && edge_attrs == other.edge_attrs;
  }
};

struct NodePermutation {
  std::vector<int> mapping;  // old index -> new index
};

struct LabeledGraph {
  Graph graph;
  std::string label;
};

struct DatasetSplit {
  std::vector<LabeledGraph> train;
  std::vector<LabeledGraph> validation;
  std::vector<LabeledGraph> test;
  std::vector<std::string> keywords;
};

/// Validates invariants and canonicalizes edge order (first < second, sorted).
/// If dedupe is set, duplicate undirected edges and self-loops are dropped
/// (keeping the first occurrence of an edge's attributes); otherwise they are
/// integrity errors.
Graph make_graph(std::vector<std::vector<double>> nodes,
                 std::vector<std::pair<int, int>> edges,
                 std::vector<std::vector<double>> edge_attrs = {},
                 std::string id = "", bool dedupe = false);

NodePermutation identity_permutation(int n);
NodePermutation inverse(const NodePermutation& p);
NodePermutation random_permutation(int n, std::uint64_t seed);

Graph permute(const Graph& g, const NodePermutation& p);

std::vector<int> neighborhood(const Graph& g, int v);
std::vector<std::vector<int>> adjacency(const Graph& g);

/// Per-graph affine rescaling of 2-d positions to [0,1]^2; a degenerate axis
/// (max == min) maps to 0.5.
Graph normalize_positions(const Graph& g);

}  // namespace ged
