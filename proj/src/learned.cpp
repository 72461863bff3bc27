#include "ged/learned.hpp"

#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>

namespace ged {

using ad::Tensor;

std::string correspondence_to_json(const Correspondence& corr) {
  nlohmann::json j;
  j["forward"] = nlohmann::json::array();
  for (std::size_t u = 0; u < corr.forward.size(); ++u) {
    nlohmann::json m;
    m["source"] = u;
    if (corr.forward[u] < 0)
      m["target"] = "eps";
    else
      m["target"] = corr.forward[u];
    j["forward"].push_back(m);
  }
  j["backward"] = nlohmann::json::array();
  for (std::size_t v = 0; v < corr.backward.size(); ++v) {
    nlohmann::json m;
    m["source"] = v;
    if (corr.backward[v] < 0)
      m["target"] = "eps";
    else
      m["target"] = corr.backward[v];
    j["backward"].push_back(m);
  }
  return j.dump(2);
}

namespace {

// Argmin per row/column of the epsilon-augmented matrix; ties to lowest
// index, matching reduce_min.
Correspondence correspondence_from_matrix(const std::vector<double>& c, int n1, int n2) {
  Correspondence corr;
  const int cols = n2 + 1;
  for (int u = 0; u < n1; ++u) {
    int best = 0;
    for (int j = 1; j <= n2; ++j)
      if (c[u * cols + j] < c[u * cols + best]) best = j;
    corr.forward.push_back(best == n2 ? -1 : best);
  }
  for (int v = 0; v < n2; ++v) {
    int best = 0;
    for (int i = 1; i <= n1; ++i)
      if (c[i * cols + v] < c[best * cols + v]) best = i;
    corr.backward.push_back(best == n1 ? -1 : best);
  }
  return corr;
}

std::vector<double> raw_attr_matrix(const Graph& g) {
  std::vector<double> flat;
  for (const auto& a : g.nodes) flat.insert(flat.end(), a.begin(), a.end());
  return flat;
}

}  // namespace

Tensor learned_hed(ad::Tape& tape, Tensor emb1, Tensor emb2, const Graph& g1, const Graph& g2,
                   ModelParams& params, const DistanceConfig& cfg, Correspondence* corr) {
  cfg.validate();
  const int n1 = emb1.shape()[0], n2 = emb2.shape()[0];
  if (n1 + n2 == 0)
    throw Error(ErrorCode::Domain, "learned_hed undefined for two empty graphs");

  // Substitution block: half the embedding distance, optionally blended
  // with the raw-attribute distance.
  Tensor subs;
  {
    Tensor d_emb = ad::pairwise_euclidean(emb1, emb2);
    if (cfg.spatial_blend) {
      Tensor raw1 = tape.constant({n1, g1.attr_dim()}, raw_attr_matrix(g1));
      Tensor raw2 = tape.constant({n2, g2.attr_dim()}, raw_attr_matrix(g2));
      subs = ad::scale(ad::add(d_emb, ad::pairwise_euclidean(raw1, raw2)), 0.5);
    } else {
      subs = ad::scale(d_emb, 0.5);
    }
  }
  // Shared cost head: insertion and deletion use the same network.
  Tensor del = ad::abs_(mlp_forward(tape, params.cost_head, emb1));  // [n1,1]
  Tensor ins = ad::abs_(mlp_forward(tape, params.cost_head, emb2));  // [n2,1]
  if (cfg.spatial_blend) {
    del = ad::add(del, tape.scalar_constant(cfg.tau_d));
    ins = ad::add(ins, tape.scalar_constant(cfg.tau_i));
  }

  Tensor top = ad::concat({subs, del}, 1);                               // [n1, n2+1]
  Tensor eps_row = ad::concat({ad::reshape(ins, {1, n2}), tape.constant({1, 1}, {0.0})}, 1);
  Tensor c = ad::concat({top, eps_row}, 0);                              // [n1+1, n2+1]

  if (corr) *corr = correspondence_from_matrix(c.value(), n1, n2);

  Tensor row_sum = ad::reduce_sum(ad::reduce_min(c, 1));
  Tensor col_sum = ad::reduce_sum(ad::reduce_min(c, 0));
  return ad::scale(ad::add(row_sum, col_sum), 1.0 / (n1 + n2));
}

double learned_distance(const Graph& g1, const Graph& g2, ModelParams& params,
                        const DistanceConfig& cfg, Correspondence* corr) {
  ad::Tape tape;
  Tensor e1 = embed(tape, g1, params, ad::Mode::Eval);
  Tensor e2 = embed(tape, g2, params, ad::Mode::Eval);
  return learned_hed(tape, e1, e2, g1, g2, params, cfg, corr).scalar();
}

namespace {

// y = tanh(x W1 + b1) W2 + b2, row-major; matches the tape evaluation
// bit-for-bit (same accumulation order).
std::vector<double> mlp_numeric(const MlpParams& p, const std::vector<double>& x, int rows) {
  const int in = p.W1.shape[0], mid = p.W1.shape[1], out = p.W2.shape[1];
  std::vector<double> h(static_cast<std::size_t>(rows) * mid, 0.0);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < mid; ++j) {
      double s = 0.0;
      for (int k = 0; k < in; ++k) s += x[i * in + k] * p.W1.value[k * mid + j];
      h[i * mid + j] = std::tanh(s + p.b1.value[j]);
    }
  std::vector<double> y(static_cast<std::size_t>(rows) * out, 0.0);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < out; ++j) {
      double s = 0.0;
      for (int k = 0; k < mid; ++k) s += h[i * mid + k] * p.W2.value[k * out + j];
      y[i * out + j] = s + p.b2.value[j];
    }
  return y;
}

}  // namespace

GraphEmbedding precompute_embedding(const Graph& g, ModelParams& params) {
  GraphEmbedding ge;
  ge.graph = &g;
  ge.emb = embed_values(g, params);
  std::vector<double> phi = mlp_numeric(params.cost_head, ge.emb.values, ge.emb.rows);
  for (double& v : phi) v = std::fabs(v);
  ge.phi = std::move(phi);
  return ge;
}

double learned_hed_numeric(const GraphEmbedding& a, const GraphEmbedding& b,
                           const DistanceConfig& cfg, Correspondence* corr) {
  cfg.validate();
  const int n1 = a.emb.rows, n2 = b.emb.rows, d = a.emb.cols;
  if (n1 + n2 == 0)
    throw Error(ErrorCode::Domain, "learned_hed undefined for two empty graphs");
  const int cols = n2 + 1;
  std::vector<double> c(static_cast<std::size_t>(n1 + 1) * cols, 0.0);
  const int rd = a.graph->attr_dim();
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        double diff = a.emb.values[i * d + k] - b.emb.values[j * d + k];
        s += diff * diff;
      }
      double dist = std::sqrt(s);
      if (cfg.spatial_blend) {
        double sr = 0.0;
        for (int k = 0; k < rd; ++k) {
          double diff = a.graph->nodes[i][k] - b.graph->nodes[j][k];
          sr += diff * diff;
        }
        dist = dist + std::sqrt(sr);
      }
      c[i * cols + j] = dist * 0.5;
    }
  for (int i = 0; i < n1; ++i)
    c[i * cols + n2] = cfg.spatial_blend ? a.phi[i] + cfg.tau_d : a.phi[i];
  for (int j = 0; j < n2; ++j)
    c[n1 * cols + j] = cfg.spatial_blend ? b.phi[j] + cfg.tau_i : b.phi[j];
  c[n1 * cols + n2] = 0.0;

  if (corr) *corr = correspondence_from_matrix(c, n1, n2);

  double row_sum = 0.0;
  for (int i = 0; i <= n1; ++i) {
    double best = c[i * cols];
    for (int j = 1; j <= n2; ++j) best = std::min(best, c[i * cols + j]);
    row_sum += best;
  }
  double col_sum = 0.0;
  for (int j = 0; j <= n2; ++j) {
    double best = c[j];
    for (int i = 1; i <= n1; ++i) best = std::min(best, c[i * cols + j]);
    col_sum += best;
  }
  return (row_sum + col_sum) * (1.0 / (n1 + n2));
}

std::vector<std::vector<double>> pairwise_distance_matrix(const std::vector<Graph>& queries,
                                                          const std::vector<Graph>& gallery,
                                                          ModelParams& params,
                                                          const DistanceConfig& cfg, int jobs) {
  std::vector<GraphEmbedding> qe, ge;
  qe.reserve(queries.size());
  ge.reserve(gallery.size());
  for (const auto& g : queries) qe.push_back(precompute_embedding(g, params));
  for (const auto& g : gallery) ge.push_back(precompute_embedding(g, params));

  std::vector<std::vector<double>> out(queries.size(),
                                       std::vector<double>(gallery.size(), 0.0));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t j = 0; j < gallery.size(); ++j)
        out[i][j] = learned_hed_numeric(qe[i], ge[j], cfg);
  };
  if (jobs <= 1 || queries.size() < 2) {
    work(0, queries.size());
  } else {
    int n_threads = std::min<int>(jobs, static_cast<int>(queries.size()));
    std::vector<std::thread> threads;
    std::size_t chunk = (queries.size() + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      std::size_t begin = t * chunk;
      std::size_t end = std::min(queries.size(), begin + chunk);
      if (begin < end) threads.emplace_back(work, begin, end);
    }
    for (auto& th : threads) th.join();
  }
  return out;
}

}  // namespace ged
