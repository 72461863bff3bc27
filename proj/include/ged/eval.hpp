#pragma once

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ged/graph.hpp"

namespace ged {

/// Gallery order for one query: indices sorted by ascending distance, ties
/// broken by gallery index.
struct RankedList {
  std::vector<int> indices;
  std::vector<bool> relevant;    // aligned with indices
  std::vector<double> distances;  // non-decreasing
};

RankedList make_ranking(const std::vector<double>& distances,
                        const std::vector<bool>& relevant);

/// AP = sum over relevant ranks n of P@n, divided by the number of relevant
/// items. Throws on zero relevant items (AP undefined).
double average_precision(const RankedList& ranking);

enum class Protocol { Individual, Combined };

struct EvalReport {
  std::string protocol;
  std::vector<std::string> ap_keys;  // query id (individual) or keyword (combined)
  std::vector<double> per_query_ap;
  double map = 0.0;
  int skipped = 0;  // queries with no relevant gallery item
  std::optional<double> pair_auc;
  std::optional<double> triplet_accuracy;

  std::string to_json() const;
  std::string to_table() const;
};

/// distances is [queries x gallery]. `query_in_gallery`, when nonempty, maps
/// each query to its own gallery position (or -1) so it can be excluded from
/// its ranking. Combined protocol groups queries by label and ranks the
/// gallery by the minimum distance over the group.
EvalReport mean_average_precision(const std::vector<std::vector<double>>& distances,
                                  const std::vector<std::string>& query_labels,
                                  const std::vector<std::string>& gallery_labels,
                                  Protocol protocol,
                                  const std::vector<int>& query_in_gallery = {});

/// Mann-Whitney AUC: fraction of (positive, negative) pairs where the
/// positive score is higher, ties counted 0.5. Labels are 1/0. Throws if a
/// class is missing. Pass similarity scores (use -distance).
double pair_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Fraction of triplets with d_pos strictly below d_neg; ties fail.
double triplet_accuracy(const std::vector<std::pair<double, double>>& distances);

struct EvalPair {
  int a = 0, b = 0;
  bool same = false;
};

/// Class-balanced pair sample: half same-label, half different-label.
std::vector<EvalPair> sample_evaluation_pairs(const std::vector<std::string>& labels,
                                              int count, std::mt19937_64& rng);

}  // namespace ged
