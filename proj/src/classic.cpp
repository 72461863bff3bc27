#include "ged/classic.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ged {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::Dimension, "metric: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

void CostModel::validate() const {
  if (alpha < 0.0 || alpha > 1.0) throw Error(ErrorCode::Domain, "alpha must be in [0,1]");
  if (tau_node <= 0.0 || tau_edge <= 0.0)
    throw Error(ErrorCode::Domain, "tau_node and tau_edge must be positive");
}

double CostModel::node_sub(const Graph& g1, int u, const Graph& g2, int v) const {
  return alpha * node_dist(g1.nodes[u], g2.nodes[v]);
}

double CostModel::edge_sub(const Graph& g1, int e1, const Graph& g2, int e2) const {
  if (g1.edge_attrs.empty() || g2.edge_attrs.empty()) return 0.0;  // unlabelled edges
  return (1.0 - alpha) * edge_dist(g1.edge_attrs[e1], g2.edge_attrs[e2]);
}

Assignment solve_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  for (const auto& row : cost)
    if (static_cast<int>(row.size()) != n)
      throw Error(ErrorCode::Dimension, "assignment matrix must be square");
  Assignment out;
  out.row_to_col.assign(n, -1);
  if (n == 0) return out;

  // Shortest augmenting path with potentials (1-based internally).
  const double kBig = 4.0 * kInfCost;
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kBig);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      int i0 = p[j0], j1 = -1;
      double delta = kBig;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (int j = 1; j <= n; ++j) out.row_to_col[p[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i) {
    double c = cost[i][out.row_to_col[i]];
    if (c >= kInfCost) throw Error(ErrorCode::Infeasible, "no finite perfect assignment exists");
    out.total_cost += c;
  }
  return out;
}

namespace {

std::map<std::pair<int, int>, int> edge_index(const Graph& g) {
  std::map<std::pair<int, int>, int> idx;
  for (int e = 0; e < g.edge_count(); ++e) idx[g.edges[e]] = e;
  return idx;
}

std::pair<int, int> ordered(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

}  // namespace

double cost_of_node_map(const Graph& g1, const Graph& g2, const std::vector<int>& map,
                        const CostModel& c) {
  if (static_cast<int>(map.size()) != g1.node_count())
    throw Error(ErrorCode::Dimension, "node map size mismatch");
  auto e2_index = edge_index(g2);
  std::vector<int> preimage(g2.node_count(), -1);
  double total = 0.0;
  for (int u = 0; u < g1.node_count(); ++u) {
    if (map[u] < 0) {
      total += c.node_del();
    } else {
      total += c.node_sub(g1, u, g2, map[u]);
      preimage[map[u]] = u;
    }
  }
  for (int v = 0; v < g2.node_count(); ++v)
    if (preimage[v] < 0) total += c.node_ins();

  std::vector<bool> e2_matched(g2.edge_count(), false);
  for (int e = 0; e < g1.edge_count(); ++e) {
    auto [a, b] = g1.edges[e];
    if (map[a] >= 0 && map[b] >= 0) {
      auto it = e2_index.find(ordered(map[a], map[b]));
      if (it != e2_index.end()) {
        total += c.edge_sub(g1, e, g2, it->second);
        e2_matched[it->second] = true;
        continue;
      }
    }
    total += c.edge_del();
  }
  for (int e = 0; e < g2.edge_count(); ++e)
    if (!e2_matched[e]) total += c.edge_ins();
  return total;
}

namespace {

struct ExactSearch {
  const Graph& g1;
  const Graph& g2;
  const CostModel& c;
  std::map<std::pair<int, int>, int> e1_index;
  std::map<std::pair<int, int>, int> e2_index;
  std::vector<int> map;
  std::vector<bool> used;
  double best = kInfCost;

  ExactSearch(const Graph& a, const Graph& b, const CostModel& cm)
      : g1(a), g2(b), c(cm), e1_index(edge_index(a)), e2_index(edge_index(b)),
        map(a.node_count(), -2), used(b.node_count(), false) {}

  // Edge cost decided once both endpoints are assigned.
  double edge_delta(int u, int target) const {
    double d = 0.0;
    for (int w = 0; w < u; ++w) {
      bool e1 = e1_index.count(ordered(u, w)) > 0;
      bool e2 = map[w] >= 0 && target >= 0 && e2_index.count(ordered(target, map[w])) > 0;
      if (e1 && e2)
        d += c.edge_sub(g1, e1_index.at(ordered(u, w)), g2,
                        e2_index.at(ordered(target, map[w])));
      else if (e1)
        d += c.edge_del();
      else if (e2)
        d += c.edge_ins();
    }
    return d;
  }

  double leaf_remainder() const {
    double d = 0.0;
    for (int v = 0; v < g2.node_count(); ++v)
      if (!used[v]) d += c.node_ins();
    for (auto [pair, e] : e2_index) {
      (void)e;
      if (!used[pair.first] || !used[pair.second]) d += c.edge_ins();
    }
    return d;
  }

  void search(int u, double cost) {
    if (cost >= best) return;
    if (u == g1.node_count()) {
      best = std::min(best, cost + leaf_remainder());
      return;
    }
    for (int v = 0; v < g2.node_count(); ++v) {
      if (used[v]) continue;
      double step = c.node_sub(g1, u, g2, v) + edge_delta(u, v);
      map[u] = v;
      used[v] = true;
      search(u + 1, cost + step);
      used[v] = false;
    }
    map[u] = -1;
    search(u + 1, cost + c.node_del() + edge_delta(u, -1));
    map[u] = -2;
  }
};

}  // namespace

double exact_ged(const Graph& g1, const Graph& g2, const CostModel& c, int node_limit) {
  c.validate();
  if (g1.node_count() > node_limit || g2.node_count() > node_limit)
    throw Error(ErrorCode::SizeLimit,
                "exact_ged: graph exceeds node_limit " + std::to_string(node_limit));
  ExactSearch s(g1, g2, c);
  s.search(0, 0.0);
  return s.best;
}

namespace {

// Assignment over incident edge sets: the local-structure term of an AED
// substitution entry.
double incident_edge_cost(const Graph& g1, int u, const Graph& g2, int v, const CostModel& c) {
  std::vector<int> eu, ev;
  for (int e = 0; e < g1.edge_count(); ++e)
    if (g1.edges[e].first == u || g1.edges[e].second == u) eu.push_back(e);
  for (int e = 0; e < g2.edge_count(); ++e)
    if (g2.edges[e].first == v || g2.edges[e].second == v) ev.push_back(e);
  const int n1 = static_cast<int>(eu.size()), n2 = static_cast<int>(ev.size());
  if (n1 + n2 == 0) return 0.0;
  std::vector<std::vector<double>> m(n1 + n2, std::vector<double>(n1 + n2, 0.0));
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) m[i][j] = c.edge_sub(g1, eu[i], g2, ev[j]);
  for (int i = 0; i < n1; ++i)
    for (int j = n2; j < n1 + n2; ++j) m[i][j] = (j - n2 == i) ? c.edge_del() : kInfCost;
  for (int i = n1; i < n1 + n2; ++i)
    for (int j = 0; j < n2; ++j) m[i][j] = (i - n1 == j) ? c.edge_ins() : kInfCost;
  return solve_assignment(m).total_cost;
}

}  // namespace

std::vector<std::vector<double>> build_aed_cost_matrix(const Graph& g1, const Graph& g2,
                                                       const CostModel& c,
                                                       AedLocalStructure local) {
  c.validate();
  const int n1 = g1.node_count(), n2 = g2.node_count();
  auto adj1 = adjacency(g1), adj2 = adjacency(g2);
  std::vector<std::vector<double>> m(n1 + n2, std::vector<double>(n1 + n2, 0.0));
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      m[i][j] = c.node_sub(g1, i, g2, j);
      if (local == AedLocalStructure::NodeAndIncidentEdges)
        m[i][j] += incident_edge_cost(g1, i, g2, j, c);
    }
  const bool with_edges = local == AedLocalStructure::NodeAndIncidentEdges;
  for (int i = 0; i < n1; ++i)
    for (int j = n2; j < n1 + n2; ++j)
      m[i][j] = (j - n2 == i)
                    ? c.node_del() + (with_edges ? adj1[i].size() * c.edge_del() : 0.0)
                    : kInfCost;
  for (int i = n1; i < n1 + n2; ++i)
    for (int j = 0; j < n2; ++j)
      m[i][j] = (i - n1 == j)
                    ? c.node_ins() + (with_edges ? adj2[j].size() * c.edge_ins() : 0.0)
                    : kInfCost;
  return m;
}

double aed(const Graph& g1, const Graph& g2, const CostModel& c, AedLocalStructure local) {
  const int n1 = g1.node_count(), n2 = g2.node_count();
  if (n1 + n2 == 0) return 0.0;
  Assignment a = solve_assignment(build_aed_cost_matrix(g1, g2, c, local));
  std::vector<int> map(n1, -1);
  for (int i = 0; i < n1; ++i)
    if (a.row_to_col[i] < n2) map[i] = a.row_to_col[i];
  return cost_of_node_map(g1, g2, map, c);
}

namespace {

// Hausdorff edit distance between the incident edge sets of u and v
// (substitutions halved, deletions/insertions at full cost).
double hed_edges(const Graph& g1, int u, const Graph& g2, int v, const CostModel& c) {
  std::vector<int> eu, ev;
  for (int e = 0; e < g1.edge_count(); ++e)
    if (g1.edges[e].first == u || g1.edges[e].second == u) eu.push_back(e);
  for (int e = 0; e < g2.edge_count(); ++e)
    if (g2.edges[e].first == v || g2.edges[e].second == v) ev.push_back(e);
  double total = 0.0;
  for (int p : eu) {
    double best = c.edge_del();
    for (int q : ev) best = std::min(best, c.edge_sub(g1, p, g2, q) / 2.0);
    total += best;
  }
  for (int q : ev) {
    double best = c.edge_ins();
    for (int p : eu) best = std::min(best, c.edge_sub(g1, p, g2, q) / 2.0);
    total += best;
  }
  return total;
}

}  // namespace

double hed(const Graph& g1, const Graph& g2, const CostModel& c) {
  c.validate();
  auto adj1 = adjacency(g1), adj2 = adjacency(g2);
  double total = 0.0;
  for (int u = 0; u < g1.node_count(); ++u) {
    // Deleting a node drags half of each incident edge with it (the other
    // half belongs to the opposite endpoint).
    double best = c.node_del() + adj1[u].size() * c.edge_del() / 2.0;
    for (int v = 0; v < g2.node_count(); ++v) {
      double sub = (c.node_sub(g1, u, g2, v) + hed_edges(g1, u, g2, v, c) / 2.0) / 2.0;
      best = std::min(best, sub);
    }
    total += best;
  }
  for (int v = 0; v < g2.node_count(); ++v) {
    double best = c.node_ins() + adj2[v].size() * c.edge_ins() / 2.0;
    for (int u = 0; u < g1.node_count(); ++u) {
      double sub = (c.node_sub(g1, u, g2, v) + hed_edges(g1, u, g2, v, c) / 2.0) / 2.0;
      best = std::min(best, sub);
    }
    total += best;
  }
  return total;
}

double hausdorff_sum(const std::vector<std::vector<double>>& a,
                     const std::vector<std::vector<double>>& b, const AttrMetric& metric) {
  double total = 0.0;
  if (!b.empty())
    for (const auto& x : a) {
      double best = metric(x, b[0]);
      for (std::size_t j = 1; j < b.size(); ++j) best = std::min(best, metric(x, b[j]));
      total += best;
    }
  if (!a.empty())
    for (const auto& y : b) {
      double best = metric(a[0], y);
      for (std::size_t i = 1; i < a.size(); ++i) best = std::min(best, metric(a[i], y));
      total += best;
    }
  return total;
}

}  // namespace ged
