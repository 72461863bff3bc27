#include "ged/ged_c.h"

#include <cstdlib>
#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ged/classic.hpp"
#include "ged/eval.hpp"
#include "ged/io.hpp"
#include "ged/learned.hpp"
#include "ged/synthetic.hpp"
#include "ged/train.hpp"

struct ged_graph {
  ged::Graph g;
};

struct ged_dataset {
  ged::DatasetSplit split;
};

struct ged_model {
  ged::ModelParams params;
  std::map<std::string, std::string> metadata;
};

namespace {

thread_local std::string g_last_error;

int to_code(ged::ErrorCode c) { return static_cast<int>(c); }

template <typename Fn>
int wrap(Fn&& fn) {
  try {
    fn();
    return GED_OK;
  } catch (const ged::Error& e) {
    g_last_error = e.what();
    return to_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GED_ERR_UNKNOWN;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw ged::Error(ged::ErrorCode::Usage, what);
}

ged::CostModel to_cost_model(const ged_cost_model* cm) {
  require(cm != nullptr, "cost model is null");
  ged::CostModel out;
  out.alpha = cm->alpha;
  out.tau_node = cm->tau_node;
  out.tau_edge = cm->tau_edge;
  out.validate();
  return out;
}

ged::DistanceConfig to_distance_config(const ged_distance_config* cfg) {
  ged::DistanceConfig out;
  if (cfg) {
    out.spatial_blend = cfg->spatial_blend != 0;
    out.tau_d = cfg->tau_d;
    out.tau_i = cfg->tau_i;
  }
  out.validate();
  return out;
}

}  // namespace

extern "C" {

const char* ged_last_error(void) { return g_last_error.c_str(); }

void ged_string_free(char* s) { std::free(s); }

/* ---- graphs ---- */

int ged_graph_load(const char* path, ged_graph** out) {
  return wrap([&] {
    require(path && out, "null argument");
    *out = new ged_graph{ged::load_graph_file(path)};
  });
}

int ged_graph_from_json(const char* json, ged_graph** out) {
  return wrap([&] {
    require(json && out, "null argument");
    *out = new ged_graph{ged::parse_graph_json(json)};
  });
}

int ged_graph_to_json(const ged_graph* g, char** json_out) {
  return wrap([&] {
    require(g && json_out, "null argument");
    *json_out = dup_string(ged::serialize_graph_json(g->g));
  });
}

int ged_graph_node_count(const ged_graph* g, int* out) {
  return wrap([&] {
    require(g && out, "null argument");
    *out = g->g.node_count();
  });
}

int ged_graph_edge_count(const ged_graph* g, int* out) {
  return wrap([&] {
    require(g && out, "null argument");
    *out = g->g.edge_count();
  });
}

void ged_graph_free(ged_graph* g) { delete g; }

/* ---- datasets ---- */

void ged_synthetic_config_defaults(ged_synthetic_config* cfg) {
  ged::SyntheticConfig d;
  cfg->classes = d.classes;
  cfg->graphs_per_class = d.graphs_per_class;
  cfg->min_nodes = d.min_nodes;
  cfg->max_nodes = d.max_nodes;
  cfg->jitter = d.jitter;
  cfg->insert_delete = d.insert_delete;
  cfg->knn = d.knn;
  cfg->distractor_dims = d.distractor_dims;
  cfg->distractor_scale = d.distractor_scale;
  cfg->seed = d.seed;
}

int ged_dataset_load(const char* train_manifest, const char* val_manifest,
                     const char* test_manifest, ged_dataset** out) {
  return wrap([&] {
    require(train_manifest && out, "train manifest required");
    auto d = std::make_unique<ged_dataset>();
    d->split.train = ged::load_manifest(train_manifest);
    if (val_manifest) d->split.validation = ged::load_manifest(val_manifest);
    if (test_manifest) d->split.test = ged::load_manifest(test_manifest);
    for (const auto& lg : d->split.train) {
      auto& kw = d->split.keywords;
      if (std::find(kw.begin(), kw.end(), lg.label) == kw.end()) kw.push_back(lg.label);
    }
    *out = d.release();
  });
}

int ged_dataset_synthetic(const ged_synthetic_config* cfg, ged_dataset** out) {
  return wrap([&] {
    require(out, "null argument");
    ged::SyntheticConfig sc;
    if (cfg) {
      sc.classes = cfg->classes;
      sc.graphs_per_class = cfg->graphs_per_class;
      sc.min_nodes = cfg->min_nodes;
      sc.max_nodes = cfg->max_nodes;
      sc.jitter = cfg->jitter;
      sc.insert_delete = cfg->insert_delete;
      sc.knn = cfg->knn;
      sc.distractor_dims = cfg->distractor_dims;
      sc.distractor_scale = cfg->distractor_scale;
      sc.seed = cfg->seed;
    }
    *out = new ged_dataset{ged::generate_synthetic_dataset(sc)};
  });
}

int ged_dataset_counts(const ged_dataset* d, int* train, int* val, int* test) {
  return wrap([&] {
    require(d != nullptr, "null dataset");
    if (train) *train = static_cast<int>(d->split.train.size());
    if (val) *val = static_cast<int>(d->split.validation.size());
    if (test) *test = static_cast<int>(d->split.test.size());
  });
}

int ged_dataset_summary(const ged_dataset* d, char** json_out) {
  return wrap([&] {
    require(d && json_out, "null argument");
    nlohmann::json j;
    auto describe = [](const std::vector<ged::LabeledGraph>& set) {
      nlohmann::json s;
      s["graphs"] = set.size();
      double nodes = 0.0, edges = 0.0;
      for (const auto& lg : set) {
        nodes += lg.graph.node_count();
        edges += lg.graph.edge_count();
      }
      s["mean_nodes"] = set.empty() ? 0.0 : nodes / set.size();
      s["mean_edges"] = set.empty() ? 0.0 : edges / set.size();
      return s;
    };
    j["train"] = describe(d->split.train);
    j["validation"] = describe(d->split.validation);
    j["test"] = describe(d->split.test);
    j["keywords"] = d->split.keywords;
    *json_out = dup_string(j.dump(2));
  });
}

void ged_dataset_free(ged_dataset* d) { delete d; }

/* ---- classical distances ---- */

void ged_cost_model_defaults(ged_cost_model* cm) {
  ged::CostModel d;
  cm->alpha = d.alpha;
  cm->tau_node = d.tau_node;
  cm->tau_edge = d.tau_edge;
}

int ged_exact(const ged_graph* a, const ged_graph* b, const ged_cost_model* cm,
              int node_limit, double* out) {
  return wrap([&] {
    require(a && b && out, "null argument");
    *out = ged::exact_ged(a->g, b->g, to_cost_model(cm), node_limit);
  });
}

int ged_aed(const ged_graph* a, const ged_graph* b, const ged_cost_model* cm, double* out) {
  return wrap([&] {
    require(a && b && out, "null argument");
    *out = ged::aed(a->g, b->g, to_cost_model(cm));
  });
}

int ged_hed(const ged_graph* a, const ged_graph* b, const ged_cost_model* cm, double* out) {
  return wrap([&] {
    require(a && b && out, "null argument");
    *out = ged::hed(a->g, b->g, to_cost_model(cm));
  });
}

/* ---- learned model ---- */

void ged_model_config_defaults(ged_model_config* cfg) {
  ged::ModelConfig d;
  cfg->use_gat = d.variant == ged::GnnVariant::GAT ? 1 : 0;
  cfg->layers = d.layers;
  cfg->hidden_dim = d.hidden_dim;
  cfg->heads = d.heads;
  cfg->input_dim = d.input_dim;
  cfg->edge_dim = d.edge_dim;
}

void ged_distance_config_defaults(ged_distance_config* cfg) {
  ged::DistanceConfig d;
  cfg->spatial_blend = d.spatial_blend ? 1 : 0;
  cfg->tau_d = d.tau_d;
  cfg->tau_i = d.tau_i;
}

int ged_model_create(const ged_model_config* cfg, uint64_t seed, ged_model** out) {
  return wrap([&] {
    require(cfg && out, "null argument");
    ged::ModelConfig mc;
    mc.variant = cfg->use_gat ? ged::GnnVariant::GAT : ged::GnnVariant::GRU;
    mc.layers = cfg->layers;
    mc.hidden_dim = cfg->hidden_dim;
    mc.heads = cfg->heads;
    mc.input_dim = cfg->input_dim;
    mc.edge_dim = cfg->edge_dim;
    auto m = std::make_unique<ged_model>();
    m->params = ged::init_params(mc, seed);
    *out = m.release();
  });
}

int ged_model_load(const char* path, ged_model** out) {
  return wrap([&] {
    require(path && out, "null argument");
    ged::Checkpoint ckpt = ged::load_checkpoint(path);
    auto m = std::make_unique<ged_model>();
    m->params = ged::from_checkpoint(ckpt);
    m->metadata = ckpt.metadata;
    *out = m.release();
  });
}

int ged_model_save(ged_model* m, const char* path) {
  return wrap([&] {
    require(m && path, "null argument");
    ged::Checkpoint ckpt = ged::to_checkpoint(m->params);
    for (const auto& [k, v] : m->metadata) ckpt.metadata.emplace(k, v);
    ged::save_checkpoint(path, ckpt);
  });
}

int ged_model_set_metadata(ged_model* m, const char* key, const char* value) {
  return wrap([&] {
    require(m && key && value, "null argument");
    m->metadata[key] = value;
  });
}

void ged_model_free(ged_model* m) { delete m; }

int ged_learned_distance(ged_model* m, const ged_graph* a, const ged_graph* b,
                         const ged_distance_config* cfg, double* out,
                         char** correspondence_json) {
  return wrap([&] {
    require(m && a && b && out, "null argument");
    ged::Correspondence corr;
    *out = ged::learned_distance(a->g, b->g, m->params, to_distance_config(cfg),
                                 correspondence_json ? &corr : nullptr);
    if (correspondence_json)
      *correspondence_json = dup_string(ged::correspondence_to_json(corr));
  });
}

int ged_pairwise_distances(ged_model* m, const ged_graph* const* queries, size_t n_queries,
                           const ged_graph* const* gallery, size_t n_gallery,
                           const ged_distance_config* cfg, int jobs, double* out) {
  return wrap([&] {
    require(m && queries && gallery && out, "null argument");
    std::vector<ged::Graph> q, g;
    for (size_t i = 0; i < n_queries; ++i) q.push_back(queries[i]->g);
    for (size_t i = 0; i < n_gallery; ++i) g.push_back(gallery[i]->g);
    auto d = ged::pairwise_distance_matrix(q, g, m->params, to_distance_config(cfg), jobs);
    for (size_t i = 0; i < n_queries; ++i)
      for (size_t j = 0; j < n_gallery; ++j) out[i * n_gallery + j] = d[i][j];
  });
}

/* ---- training ---- */

void ged_train_config_defaults(ged_train_config* cfg) {
  ged::TrainConfig d;
  cfg->margin = d.margin;
  cfg->lr = d.lr;
  cfg->lr_decay = d.lr_decay;
  cfg->lr_decay_every = d.lr_decay_every;
  cfg->weight_decay = d.weight_decay;
  cfg->batch_size = d.batch_size;
  cfg->max_epochs = d.max_epochs;
  cfg->patience = d.patience;
  cfg->triplets_per_epoch = d.triplets_per_epoch;
  cfg->val_triplets = d.val_triplets;
  cfg->seed = d.seed;
}

int ged_train(ged_model* m, const ged_dataset* d, const ged_train_config* tc,
              const ged_distance_config* dc, ged_progress_fn progress, void* user,
              char** history_csv_out) {
  return wrap([&] {
    require(m && d && tc, "null argument");
    ged::TrainConfig cfg;
    cfg.margin = tc->margin;
    cfg.lr = tc->lr;
    cfg.lr_decay = tc->lr_decay;
    cfg.lr_decay_every = tc->lr_decay_every;
    cfg.weight_decay = tc->weight_decay;
    cfg.batch_size = tc->batch_size;
    cfg.max_epochs = tc->max_epochs;
    cfg.patience = tc->patience;
    cfg.triplets_per_epoch = tc->triplets_per_epoch;
    cfg.val_triplets = tc->val_triplets;
    cfg.seed = tc->seed;
    cfg.distance = to_distance_config(dc);
    ged::ProgressFn cb;
    if (progress)
      cb = [progress, user](const ged::EpochRecord& r) {
        progress(r.epoch, r.lr, r.train_loss, r.val_accuracy, user);
      };
    ged::TrainResult result =
        ged::train(d->split.train, d->split.validation, m->params, cfg, cb);
    m->metadata["train_seed"] = std::to_string(cfg.seed);
    m->metadata["best_epoch"] = std::to_string(result.best_epoch);
    m->metadata["best_val_accuracy"] = std::to_string(result.best_val_accuracy);
    if (history_csv_out) *history_csv_out = dup_string(ged::history_csv(result.history));
  });
}

/* ---- evaluation ---- */

int ged_evaluate(ged_model* m, const ged_dataset* d, const ged_distance_config* cfg,
                 int protocol, int n_pairs, int n_triplets, uint64_t seed, int jobs,
                 char** report_json, char** report_table) {
  return wrap([&] {
    require(m && d, "null argument");
    const auto& test = d->split.test;
    require(!test.empty(), "dataset has no test split");
    ged::DistanceConfig dc = to_distance_config(cfg);

    std::vector<ged::Graph> graphs;
    std::vector<std::string> labels;
    for (const auto& lg : test) {
      graphs.push_back(lg.graph);
      labels.push_back(lg.label);
    }
    auto dist = ged::pairwise_distance_matrix(graphs, graphs, m->params, dc, jobs);
    std::vector<int> self(test.size());
    for (std::size_t i = 0; i < self.size(); ++i) self[i] = static_cast<int>(i);
    ged::EvalReport report = ged::mean_average_precision(
        dist, labels, labels,
        protocol == GED_PROTOCOL_COMBINED ? ged::Protocol::Combined
                                          : ged::Protocol::Individual,
        self);

    if (n_pairs > 0) {
      std::mt19937_64 rng(seed);
      auto pairs = ged::sample_evaluation_pairs(labels, n_pairs, rng);
      std::vector<double> scores;
      std::vector<int> pair_labels;
      for (const auto& p : pairs) {
        scores.push_back(-dist[p.a][p.b]);
        pair_labels.push_back(p.same ? 1 : 0);
      }
      report.pair_auc = ged::pair_auc(scores, pair_labels);
    }
    if (n_triplets > 0) {
      std::mt19937_64 rng(seed + 1);
      auto triplets = ged::sample_triplets(labels, n_triplets, rng);
      std::vector<std::pair<double, double>> td;
      for (const auto& t : triplets)
        td.emplace_back(dist[t.anchor][t.positive], dist[t.anchor][t.negative]);
      report.triplet_accuracy = ged::triplet_accuracy(td);
    }

    if (report_json) *report_json = dup_string(report.to_json());
    if (report_table) *report_table = dup_string(report.to_table());
  });
}

/* ---- self-checks ---- */

int ged_verify(int corrupt_hook, char** report_out, int* failures) {
  return wrap([&] {
    std::ostringstream report;
    int failed = 0;
    auto check = [&](const std::string& name, bool ok, const std::string& detail) {
      report << (ok ? "pass" : "FAIL") << "  " << name;
      if (!detail.empty()) report << "  (" << detail << ")";
      report << '\n';
      if (!ok) ++failed;
    };

    // Small graphs to exercise every op with realistic shapes.
    ged::SyntheticConfig sc;
    sc.classes = 2;
    sc.graphs_per_class = 4;
    sc.min_nodes = 4;
    sc.max_nodes = 6;
    sc.seed = 7;
    ged::DatasetSplit data = ged::generate_synthetic_dataset(sc);
    std::vector<ged::Graph> graphs;
    for (const auto& lg : data.train) graphs.push_back(lg.graph);
    for (const auto& lg : data.validation) graphs.push_back(lg.graph);

    // Gradients of the full learned distance, both propagation variants.
    for (int use_gat = 0; use_gat <= 1; ++use_gat) {
      ged::ModelConfig mc;
      mc.variant = use_gat ? ged::GnnVariant::GAT : ged::GnnVariant::GRU;
      mc.layers = 2;
      mc.hidden_dim = 8;
      mc.heads = 2;
      mc.edge_dim = 4;
      double worst = 0.0;
      std::string worst_name;
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        ged::ModelParams params = ged::init_params(mc, seed);
        const ged::Graph& g1 = graphs[seed % graphs.size()];
        const ged::Graph& g2 = graphs[(seed + 3) % graphs.size()];
        ged::DistanceConfig dc;
        for (ged::ad::Param* p : params.all()) {
          double err = ged::ad::finite_difference_check(
              {p}, [&](bool compute_grad) {
                p->zero_grad();
                ged::ad::Tape tape;
                auto e1 = ged::embed(tape, g1, params, ged::ad::Mode::Eval);
                auto e2 = ged::embed(tape, g2, params, ged::ad::Mode::Eval);
                auto dist = ged::learned_hed(tape, e1, e2, g1, g2, params, dc);
                if (compute_grad) {
                  tape.backward(dist);
                  if (corrupt_hook && p->name == "cost.W2") p->grad[0] += 1.0;
                }
                return dist.scalar();
              });
          if (err > worst) {
            worst = err;
            worst_name = p->name;
          }
        }
      }
      std::ostringstream detail;
      detail << "max rel err " << worst << " at " << worst_name;
      check(std::string("gradients, ") + (use_gat ? "attention" : "gated") + " variant",
            worst < 1e-4, detail.str());
    }

    // Classical bound ordering on random pairs.
    {
      std::mt19937_64 rng(11);
      std::uniform_real_distribution<double> ua(0.2, 0.8), ut(0.3, 1.5);
      bool ok = true;
      std::string detail;
      for (int i = 0; i < 30 && ok; ++i) {
        ged::CostModel cm;
        cm.alpha = ua(rng);
        cm.tau_node = ut(rng);
        cm.tau_edge = ut(rng);
        const ged::Graph& g1 = graphs[rng() % graphs.size()];
        const ged::Graph& g2 = graphs[rng() % graphs.size()];
        if (g1.node_count() > 7 || g2.node_count() > 7) continue;
        double lo = ged::hed(g1, g2, cm);
        double ex = ged::exact_ged(g1, g2, cm);
        double hi = ged::aed(g1, g2, cm);
        if (!(lo <= ex + 1e-9 && ex <= hi + 1e-9)) {
          ok = false;
          std::ostringstream d;
          d << "hed=" << lo << " exact=" << ex << " aed=" << hi;
          detail = d.str();
        }
      }
      check("bound ordering hed <= exact <= aed", ok, detail);
    }

    // Learned metric identities.
    {
      ged::ModelConfig mc;
      mc.layers = 2;
      mc.hidden_dim = 8;
      mc.edge_dim = 4;
      ged::ModelParams params = ged::init_params(mc, 5);
      ged::DistanceConfig dc;
      bool ok = true;
      std::string detail;
      for (std::size_t i = 0; i < graphs.size() && ok; ++i) {
        const ged::Graph& g1 = graphs[i];
        const ged::Graph& g2 = graphs[(i + 1) % graphs.size()];
        double d12 = ged::learned_distance(g1, g2, params, dc);
        double d21 = ged::learned_distance(g2, g1, params, dc);
        double dself = ged::learned_distance(g1, g1, params, dc);
        ged::Graph gp = ged::permute(g1, ged::random_permutation(g1.node_count(), i));
        double dperm = ged::learned_distance(gp, g2, params, dc);
        if (d12 < 0.0 || dself != 0.0 || std::abs(d12 - d21) > 1e-12 ||
            std::abs(d12 - dperm) > 1e-9) {
          ok = false;
          std::ostringstream d;
          d << "d12=" << d12 << " d21=" << d21 << " dself=" << dself << " dperm=" << dperm;
          detail = d.str();
        }
      }
      check("learned metric identities", ok, detail);
    }

    // Assignment solver against exhaustive enumeration.
    {
      std::mt19937_64 rng(13);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      bool ok = true;
      std::string detail;
      for (int trial = 0; trial < 50 && ok; ++trial) {
        int n = 2 + static_cast<int>(rng() % 4);
        std::vector<std::vector<double>> cost(n, std::vector<double>(n));
        for (auto& row : cost)
          for (auto& v : row) v = u(rng);
        ged::Assignment got = ged::solve_assignment(cost);
        std::vector<int> perm(n);
        for (int i = 0; i < n; ++i) perm[i] = i;
        double best = 1e300;
        do {
          double c = 0.0;
          for (int i = 0; i < n; ++i) c += cost[i][perm[i]];
          best = std::min(best, c);
        } while (std::next_permutation(perm.begin(), perm.end()));
        if (std::abs(got.total_cost - best) > 1e-12) {
          ok = false;
          std::ostringstream d;
          d << "solver " << got.total_cost << " vs brute force " << best;
          detail = d.str();
        }
      }
      check("assignment solver matches enumeration", ok, detail);
    }

    report << (failed == 0 ? "all checks passed" : "checks failed") << '\n';
    if (report_out) *report_out = dup_string(report.str());
    if (failures) *failures = failed;
  });
}

} /* extern "C" */
