#include "ged/eval.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ged/error.hpp"

namespace ged {

RankedList make_ranking(const std::vector<double>& distances,
                        const std::vector<bool>& relevant) {
  if (distances.size() != relevant.size())
    throw Error(ErrorCode::Dimension, "ranking: distances/relevance size mismatch");
  std::vector<int> order(distances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return distances[a] < distances[b]; });
  RankedList out;
  for (int i : order) {
    out.indices.push_back(i);
    out.relevant.push_back(relevant[i]);
    out.distances.push_back(distances[i]);
  }
  return out;
}

double average_precision(const RankedList& ranking) {
  int total_relevant = 0;
  for (bool r : ranking.relevant) total_relevant += r;
  if (total_relevant == 0)
    throw Error(ErrorCode::Domain, "average_precision undefined: no relevant items");
  double sum = 0.0;
  int hits = 0;
  for (std::size_t n = 0; n < ranking.relevant.size(); ++n)
    if (ranking.relevant[n]) {
      hits += 1;
      sum += static_cast<double>(hits) / static_cast<double>(n + 1);
    }
  return sum / total_relevant;
}

namespace {

double ap_for_query(const std::vector<double>& distances,
                    const std::vector<std::string>& gallery_labels,
                    const std::string& label, const std::vector<bool>& excluded,
                    bool& undefined) {
  std::vector<double> d;
  std::vector<bool> rel;
  for (std::size_t j = 0; j < distances.size(); ++j) {
    if (excluded[j]) continue;
    d.push_back(distances[j]);
    rel.push_back(gallery_labels[j] == label);
  }
  if (std::find(rel.begin(), rel.end(), true) == rel.end()) {
    undefined = true;
    return 0.0;
  }
  undefined = false;
  return average_precision(make_ranking(d, rel));
}

}  // namespace

EvalReport mean_average_precision(const std::vector<std::vector<double>>& distances,
                                  const std::vector<std::string>& query_labels,
                                  const std::vector<std::string>& gallery_labels,
                                  Protocol protocol,
                                  const std::vector<int>& query_in_gallery) {
  if (distances.empty()) throw Error(ErrorCode::Domain, "mAP: no queries");
  if (distances.size() != query_labels.size())
    throw Error(ErrorCode::Dimension, "mAP: query label count mismatch");
  for (const auto& row : distances)
    if (row.size() != gallery_labels.size())
      throw Error(ErrorCode::Dimension, "mAP: distance matrix shape mismatch");
  if (!query_in_gallery.empty() && query_in_gallery.size() != query_labels.size())
    throw Error(ErrorCode::Dimension, "mAP: query_in_gallery size mismatch");

  EvalReport report;
  const std::size_t g = gallery_labels.size();

  if (protocol == Protocol::Individual) {
    report.protocol = "individual";
    for (std::size_t q = 0; q < distances.size(); ++q) {
      std::vector<bool> excluded(g, false);
      if (!query_in_gallery.empty() && query_in_gallery[q] >= 0)
        excluded[query_in_gallery[q]] = true;
      bool undefined = false;
      double ap = ap_for_query(distances[q], gallery_labels, query_labels[q], excluded,
                               undefined);
      if (undefined) {
        report.skipped += 1;
        continue;
      }
      report.ap_keys.push_back("q" + std::to_string(q));
      report.per_query_ap.push_back(ap);
    }
  } else {
    report.protocol = "combined";
    std::map<std::string, std::vector<std::size_t>> groups;  // keyword -> query rows
    for (std::size_t q = 0; q < query_labels.size(); ++q)
      groups[query_labels[q]].push_back(q);
    for (const auto& [keyword, members] : groups) {
      std::vector<double> combined(g, 0.0);
      std::vector<bool> excluded(g, false);
      for (std::size_t j = 0; j < g; ++j) {
        double best = distances[members[0]][j];
        for (std::size_t m = 1; m < members.size(); ++m)
          best = std::min(best, distances[members[m]][j]);
        combined[j] = best;
      }
      if (!query_in_gallery.empty())
        for (std::size_t q : members)
          if (query_in_gallery[q] >= 0) excluded[query_in_gallery[q]] = true;
      bool undefined = false;
      double ap = ap_for_query(combined, gallery_labels, keyword, excluded, undefined);
      if (undefined) {
        report.skipped += 1;
        continue;
      }
      report.ap_keys.push_back(keyword);
      report.per_query_ap.push_back(ap);
    }
  }

  if (report.per_query_ap.empty())
    throw Error(ErrorCode::Domain, "mAP: every query had zero relevant gallery items");
  report.map = std::accumulate(report.per_query_ap.begin(), report.per_query_ap.end(), 0.0) /
               report.per_query_ap.size();
  return report;
}

double pair_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw Error(ErrorCode::Dimension, "pair_auc: scores/labels size mismatch");
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i)
    (labels[i] ? pos : neg).push_back(scores[i]);
  if (pos.empty() || neg.empty())
    throw Error(ErrorCode::Domain, "pair_auc: both classes required");
  double sum = 0.0;
  for (double p : pos)
    for (double n : neg) {
      if (p > n)
        sum += 1.0;
      else if (p == n)
        sum += 0.5;
    }
  return sum / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double triplet_accuracy(const std::vector<std::pair<double, double>>& distances) {
  if (distances.empty()) throw Error(ErrorCode::Domain, "triplet_accuracy: empty input");
  int correct = 0;
  for (const auto& [d_pos, d_neg] : distances)
    if (d_pos < d_neg) ++correct;
  return static_cast<double>(correct) / distances.size();
}

std::vector<EvalPair> sample_evaluation_pairs(const std::vector<std::string>& labels,
                                              int count, std::mt19937_64& rng) {
  std::unordered_map<std::string, std::vector<int>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_label[labels[i]].push_back(static_cast<int>(i));
  std::vector<std::string> rich;  // labels with two or more members
  for (const auto& [label, members] : by_label)
    if (members.size() >= 2) rich.push_back(label);
  std::sort(rich.begin(), rich.end());
  if (rich.empty() || by_label.size() < 2)
    throw Error(ErrorCode::Domain,
                "sample_evaluation_pairs: need two labels and one label with two members");

  std::vector<EvalPair> out;
  out.reserve(count);
  std::uniform_int_distribution<std::size_t> pick_label(0, rich.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_any(0, labels.size() - 1);
  for (int i = 0; i < count; ++i) {
    EvalPair pair;
    pair.same = i % 2 == 0;
    if (pair.same) {
      const auto& members = by_label[rich[pick_label(rng)]];
      std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
      pair.a = members[pick(rng)];
      pair.b = pair.a;
      while (pair.b == pair.a) pair.b = members[pick(rng)];
    } else {
      pair.a = static_cast<int>(pick_any(rng));
      pair.b = pair.a;
      while (labels[pair.b] == labels[pair.a]) pair.b = static_cast<int>(pick_any(rng));
    }
    out.push_back(pair);
  }
  return out;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["protocol"] = protocol;
  j["map"] = map;
  j["skipped_queries"] = skipped;
  j["per_query_ap"] = nlohmann::json::array();
  for (std::size_t i = 0; i < per_query_ap.size(); ++i)
    j["per_query_ap"].push_back({{"query", ap_keys[i]}, {"ap", per_query_ap[i]}});
  if (pair_auc) j["pair_auc"] = *pair_auc;
  if (triplet_accuracy) j["triplet_accuracy"] = *triplet_accuracy;
  return j.dump(2);
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed;
  out << "metric                 value\n";
  out << "---------------------  ------\n";
  out << "mAP (" << protocol << ")" << std::string(protocol == "combined" ? 6 : 4, ' ')
      << "  " << map << '\n';
  if (pair_auc) out << "pair AUC               " << *pair_auc << '\n';
  if (triplet_accuracy) out << "triplet accuracy       " << *triplet_accuracy << '\n';
  if (skipped > 0) out << "skipped queries        " << skipped << '\n';
  return out.str();
}

}  // namespace ged
