#pragma once

#include <functional>
#include <vector>

#include "ged/graph.hpp"

namespace ged {

/// Sentinel for forbidden assignment entries; preserved through the solver.
inline constexpr double kInfCost = 1e30;

using AttrMetric = std::function<double(const std::vector<double>&, const std::vector<double>&)>;

double euclidean(const std::vector<double>& a, const std::vector<double>& b);

/// Classical per-operation edit costs: node substitution alpha*|mu1-mu2|,
/// node deletion/insertion alpha*tau_node, edge substitution
/// (1-alpha)*|nu1-nu2| (0 for unlabelled edges), edge deletion/insertion
/// (1-alpha)*tau_edge.
struct CostModel {
  double alpha = 0.5;
  double tau_node = 1.0;
  double tau_edge = 1.0;
  AttrMetric node_dist = euclidean;
  AttrMetric edge_dist = euclidean;

  void validate() const;
  double node_sub(const Graph& g1, int u, const Graph& g2, int v) const;
  double node_del() const { return alpha * tau_node; }
  double node_ins() const { return alpha * tau_node; }
  double edge_sub(const Graph& g1, int e1, const Graph& g2, int e2) const;
  double edge_del() const { return (1.0 - alpha) * tau_edge; }
  double edge_ins() const { return (1.0 - alpha) * tau_edge; }
};

struct Assignment {
  std::vector<int> row_to_col;
  double total_cost = 0.0;
};

/// Optimal linear assignment on a square matrix (shortest augmenting path,
/// O(n^3)). Entries >= kInfCost are forbidden; throws if no finite perfect
/// assignment exists. Ties resolved toward lower indices.
Assignment solve_assignment(const std::vector<std::vector<double>>& cost);

/// Edit cost of the path induced by a full node map: map[u] in [0,n2) or -1
/// for deletion; unmapped nodes of g2 are insertions. Edge costs follow.
double cost_of_node_map(const Graph& g1, const Graph& g2, const std::vector<int>& map,
                        const CostModel& c);

/// Exact GED by branch-and-bound over node maps; exponential, guarded by
/// node_limit.
double exact_ged(const Graph& g1, const Graph& g2, const CostModel& c, int node_limit = 7);

enum class AedLocalStructure { NodeOnly, NodeAndIncidentEdges };

/// The (n1+n2)x(n1+n2) assignment matrix: substitutions top-left,
/// diagonal-only deletion/insertion blocks with kInfCost off-diagonal, zero
/// bottom-right block.
std::vector<std::vector<double>> build_aed_cost_matrix(
    const Graph& g1, const Graph& g2, const CostModel& c,
    AedLocalStructure local = AedLocalStructure::NodeAndIncidentEdges);

/// Upper bound on GED: cost of the edit path induced by the optimal
/// assignment on the AED matrix.
double aed(const Graph& g1, const Graph& g2, const CostModel& c,
           AedLocalStructure local = AedLocalStructure::NodeAndIncidentEdges);

/// Lower bound on GED: per-node cheapest unidirectional match with halved
/// substitution costs; incident edge sets matched by the same scheme.
double hed(const Graph& g1, const Graph& g2, const CostModel& c);

/// Summed-min variant of the Hausdorff distance between two vector sets.
double hausdorff_sum(const std::vector<std::vector<double>>& a,
                     const std::vector<std::vector<double>>& b, const AttrMetric& metric);

}  // namespace ged
