#include "ged/graph.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace ged {

Graph make_graph(std::vector<std::vector<double>> nodes,
                 std::vector<std::pair<int, int>> edges,
                 std::vector<std::vector<double>> edge_attrs, std::string id, bool dedupe) {
  const int n = static_cast<int>(nodes.size());
  for (const auto& attr : nodes) {
    if (attr.size() != nodes[0].size())
      throw Error(ErrorCode::Dimension,
                  "graph '" + id + "': node attribute vectors have mixed dimensions");
  }
  if (!edge_attrs.empty() && edge_attrs.size() != edges.size())
    throw Error(ErrorCode::Dimension, "graph '" + id + "': edge_attrs not aligned with edges");

  std::vector<std::pair<int, int>> canon;
  std::vector<std::vector<double>> canon_attrs;
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto [a, b] = edges[i];
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw Error(ErrorCode::Integrity, "graph '" + id + "': edge endpoint out of range");
    if (a == b) {
      if (dedupe) continue;
      throw Error(ErrorCode::Integrity, "graph '" + id + "': self-loop");
    }
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second) {
      if (dedupe) continue;
      throw Error(ErrorCode::Integrity, "graph '" + id + "': duplicate undirected edge");
    }
    canon.emplace_back(a, b);
    if (!edge_attrs.empty()) canon_attrs.push_back(edge_attrs[i]);
  }

  // Sort edges (with attrs riding along) for a canonical representation.
  std::vector<std::size_t> order(canon.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return canon[x] < canon[y]; });
  Graph g;
  g.id = std::move(id);
  g.nodes = std::move(nodes);
  for (std::size_t i : order) {
    g.edges.push_back(canon[i]);
    if (!canon_attrs.empty()) g.edge_attrs.push_back(canon_attrs[i]);
  }
  return g;
}

NodePermutation identity_permutation(int n) {
  NodePermutation p;
  p.mapping.resize(n);
  for (int i = 0; i < n; ++i) p.mapping[i] = i;
  return p;
}

NodePermutation inverse(const NodePermutation& p) {
  NodePermutation inv;
  inv.mapping.resize(p.mapping.size());
  for (std::size_t i = 0; i < p.mapping.size(); ++i) inv.mapping[p.mapping[i]] = static_cast<int>(i);
  return inv;
}

NodePermutation random_permutation(int n, std::uint64_t seed) {
  NodePermutation p = identity_permutation(n);
  std::mt19937_64 rng(seed);
  std::shuffle(p.mapping.begin(), p.mapping.end(), rng);
  return p;
}

Graph permute(const Graph& g, const NodePermutation& p) {
  const int n = g.node_count();
  if (static_cast<int>(p.mapping.size()) != n)
    throw Error(ErrorCode::Dimension, "permutation size does not match node count");
  std::vector<bool> hit(n, false);
  for (int v : p.mapping) {
    if (v < 0 || v >= n || hit[v])
      throw Error(ErrorCode::Integrity, "mapping is not a permutation");
    hit[v] = true;
  }
  std::vector<std::vector<double>> nodes(n);
  for (int i = 0; i < n; ++i) nodes[p.mapping[i]] = g.nodes[i];
  std::vector<std::pair<int, int>> edges;
  edges.reserve(g.edges.size());
  for (auto [a, b] : g.edges) edges.emplace_back(p.mapping[a], p.mapping[b]);
  return make_graph(std::move(nodes), std::move(edges), g.edge_attrs, g.id);
}

std::vector<int> neighborhood(const Graph& g, int v) {
  if (v < 0 || v >= g.node_count())
    throw Error(ErrorCode::Domain, "node index out of range");
  std::vector<int> nb;
  for (auto [a, b] : g.edges) {
    if (a == v) nb.push_back(b);
    if (b == v) nb.push_back(a);
  }
  std::sort(nb.begin(), nb.end());
  return nb;
}

std::vector<std::vector<int>> adjacency(const Graph& g) {
  std::vector<std::vector<int>> adj(g.node_count());
  for (auto [a, b] : g.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& nb : adj) std::sort(nb.begin(), nb.end());
  return adj;
}

Graph normalize_positions(const Graph& g) {
  if (g.attr_dim() != 2 && g.node_count() > 0)
    throw Error(ErrorCode::Dimension, "normalize_positions expects 2-d node attributes");
  Graph out = g;
  for (int axis = 0; axis < 2; ++axis) {
    double lo = 0.0, hi = 0.0;
    for (int i = 0; i < g.node_count(); ++i) {
      double v = g.nodes[i][axis];
      if (i == 0 || v < lo) lo = v;
      if (i == 0 || v > hi) hi = v;
    }
    for (auto& attr : out.nodes)
      attr[axis] = (hi > lo) ? (attr[axis] - lo) / (hi - lo) : 0.5;
  }
  return out;
}

}  // namespace ged
