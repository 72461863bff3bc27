// Command line front end; talks to the library through the C interface only.

#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ged/ged_c.h"

namespace fs = std::filesystem;

namespace {

struct CliError {
  int exit_code;
  std::string message;
};

[[noreturn]] void fail(int exit_code, const std::string& message) {
  throw CliError{exit_code, message};
}

void require_ok(int rc, const std::string& context) {
  if (rc == GED_OK) return;
  fail(rc == GED_ERR_USAGE ? 2 : 1, context + ": " + ged_last_error());
}

std::string owned(char* s) {
  std::string out = s ? s : "";
  ged_string_free(s);
  return out;
}

// Dataset root env var applies to relative manifest paths.
std::string resolve_path(const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  const char* root = std::getenv("GED_DATA_ROOT");
  if (root && *root && !fs::exists(path)) return (fs::path(root) / path).string();
  return path;
}

struct DatasetFlags {
  bool synthetic = false;
  ged_synthetic_config synth{};
  std::string train_manifest, val_manifest, test_manifest;

  void add_to(CLI::App* cmd) {
    ged_synthetic_config_defaults(&synth);
    cmd->add_flag("--synthetic", synthetic, "Generate a synthetic dataset instead of loading manifests");
    cmd->add_option("--classes", synth.classes, "Synthetic: number of classes");
    cmd->add_option("--graphs-per-class", synth.graphs_per_class, "Synthetic: graphs per class");
    cmd->add_option("--min-nodes", synth.min_nodes, "Synthetic: minimum node count");
    cmd->add_option("--max-nodes", synth.max_nodes, "Synthetic: maximum node count");
    cmd->add_option("--data-seed", synth.seed, "Synthetic: generator seed");
    cmd->add_option("--distractor-dims", synth.distractor_dims,
                    "Synthetic: extra noise attribute dimensions");
    cmd->add_option("--distractor-scale", synth.distractor_scale,
                    "Synthetic: range of the noise dimensions");
    cmd->add_option("--train-manifest", train_manifest, "Training split manifest (TSV or CXL)");
    cmd->add_option("--val-manifest", val_manifest, "Validation split manifest");
    cmd->add_option("--test-manifest", test_manifest, "Test split manifest");
  }

  ged_dataset* open() const {
    ged_dataset* d = nullptr;
    if (synthetic) {
      require_ok(ged_dataset_synthetic(&synth, &d), "synthetic dataset");
      return d;
    }
    if (train_manifest.empty())
      fail(2, "either --synthetic or --train-manifest is required");
    std::string train = resolve_path(train_manifest);
    std::string val = resolve_path(val_manifest);
    std::string test = resolve_path(test_manifest);
    require_ok(ged_dataset_load(train.c_str(), val.empty() ? nullptr : val.c_str(),
                                test.empty() ? nullptr : test.c_str(), &d),
               "load dataset");
    return d;
  }
};

fs::path make_run_dir(const std::string& out_root, uint64_t seed) {
  std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", std::localtime(&now));
  std::string base = std::string(stamp) + "-seed" + std::to_string(seed);
  fs::path dir = fs::path(out_root) / base;
  for (int suffix = 1; fs::exists(dir); ++suffix)
    dir = fs::path(out_root) / (base + "-" + std::to_string(suffix));
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) fail(1, "cannot write " + path.string());
  out << content;
}

int cmd_ingest(const DatasetFlags& data) {
  ged_dataset* d = data.open();
  char* json = nullptr;
  require_ok(ged_dataset_summary(d, &json), "dataset summary");
  std::cout << owned(json) << '\n';
  int train = 0, val = 0, test = 0;
  ged_dataset_counts(d, &train, &val, &test);
  ged_dataset_free(d);
  if (train + val + test == 0) fail(1, "dataset is empty");
  return 0;
}

struct ModelFlags {
  std::string variant = "gru";
  ged_model_config config{};

  void add_to(CLI::App* cmd) {
    ged_model_config_defaults(&config);
    cmd->add_option("--variant", variant, "Propagation variant: gat or gru")
        ->check(CLI::IsMember({"gat", "gru"}));
    cmd->add_option("--layers", config.layers, "Propagation layers K");
    cmd->add_option("--hidden", config.hidden_dim, "Hidden embedding width");
    cmd->add_option("--heads", config.heads, "Attention heads (gat)");
    cmd->add_option("--edge-dim", config.edge_dim, "Edge feature width (gru)");
  }
};

struct DistanceFlags {
  ged_distance_config config{};

  void add_to(CLI::App* cmd) {
    ged_distance_config_defaults(&config);
    cmd->add_option("--tau", [this](const std::vector<std::string>& vals) {
          double v = std::stod(vals.front());
          config.tau_d = v;
          config.tau_i = v;
          return true;
        },
        "Minimum insertion and deletion cost (spatial blend)");
    cmd->add_flag("--spatial-blend", config.spatial_blend,
                  "Blend raw position distance into substitution costs");
  }
};

int cmd_train(const DatasetFlags& data, const ModelFlags& model, const DistanceFlags& dist,
              const ged_train_config& tc, const std::string& out_root) {
  ged_dataset* d = data.open();
  ged_model_config mc = model.config;
  mc.use_gat = model.variant == "gat" ? 1 : 0;
  ged_model* m = nullptr;
  require_ok(ged_model_create(&mc, tc.seed, &m), "create model");

  fs::path run_dir = make_run_dir(out_root, tc.seed);
  std::cout << "run directory: " << run_dir.string() << '\n';

  char* history = nullptr;
  auto progress = [](int epoch, double lr, double loss, double acc, void*) {
    std::cout << "epoch " << epoch << "  lr " << lr << "  loss " << loss
              << "  val acc " << acc << '\n';
  };
  int rc = ged_train(m, d, &tc, &dist.config, progress, nullptr, &history);
  ged_dataset_free(d);
  if (rc != GED_OK) {
    ged_model_free(m);
    require_ok(rc, "train");
  }

  write_text(run_dir / "history.csv", owned(history));
  ged_model_set_metadata(m, "seed", std::to_string(tc.seed).c_str());
  ged_model_set_metadata(m, "variant", model.variant.c_str());
  require_ok(ged_model_save(m, (run_dir / "model.ckpt").string().c_str()), "save model");
  ged_model_free(m);
  std::cout << "saved " << (run_dir / "model.ckpt").string() << '\n';
  return 0;
}

int cmd_eval(const DatasetFlags& data, const std::string& checkpoint,
             const std::string& protocol, const std::vector<std::string>& metrics,
             int pairs, int triplets, uint64_t seed, int jobs,
             const DistanceFlags& dist, const std::string& out_root) {
  bool want_map = false, want_auc = false, want_triplet = false;
  for (const auto& m : metrics) {
    if (m == "map")
      want_map = true;
    else if (m == "pair-auc")
      want_auc = true;
    else if (m == "triplet-acc")
      want_triplet = true;
    else
      fail(2, "unknown metric: " + m + " (expected map, pair-auc, triplet-acc)");
  }
  if (metrics.empty()) want_map = want_auc = want_triplet = true;

  ged_model* m = nullptr;
  require_ok(ged_model_load(resolve_path(checkpoint).c_str(), &m), "load checkpoint");
  ged_dataset* d = data.open();

  char* json = nullptr;
  char* table = nullptr;
  int rc = ged_evaluate(m, d, &dist.config,
                        protocol == "combined" ? GED_PROTOCOL_COMBINED
                                               : GED_PROTOCOL_INDIVIDUAL,
                        want_auc ? pairs : 0, want_triplet ? triplets : 0, seed, jobs,
                        &json, &table);
  ged_dataset_free(d);
  ged_model_free(m);
  require_ok(rc, "evaluate");

  fs::path run_dir = make_run_dir(out_root, seed);
  write_text(run_dir / "report.json", owned(json));
  std::string table_text = owned(table);
  write_text(run_dir / "report.txt", table_text);
  std::cout << table_text;
  std::cout << "reports written to " << run_dir.string() << '\n';
  return 0;
}

int cmd_dist(const std::string& path_a, const std::string& path_b, const std::string& method,
             const std::string& checkpoint, const ged_cost_model& cm, int node_limit,
             const DistanceFlags& dist, bool correspondence) {
  ged_graph* a = nullptr;
  ged_graph* b = nullptr;
  require_ok(ged_graph_load(resolve_path(path_a).c_str(), &a), "load " + path_a);
  require_ok(ged_graph_load(resolve_path(path_b).c_str(), &b), "load " + path_b);

  double value = 0.0;
  std::string corr_json;
  if (method == "exact") {
    require_ok(ged_exact(a, b, &cm, node_limit, &value), "exact distance");
  } else if (method == "aed") {
    require_ok(ged_aed(a, b, &cm, &value), "assignment distance");
  } else if (method == "hed") {
    require_ok(ged_hed(a, b, &cm, &value), "hausdorff distance");
  } else if (method == "learned") {
    if (checkpoint.empty()) fail(2, "--method learned requires --checkpoint");
    ged_model* m = nullptr;
    require_ok(ged_model_load(resolve_path(checkpoint).c_str(), &m), "load checkpoint");
    char* json = nullptr;
    int rc = ged_learned_distance(m, a, b, &dist.config, &value,
                                  correspondence ? &json : nullptr);
    ged_model_free(m);
    require_ok(rc, "learned distance");
    if (correspondence) corr_json = owned(json);
  } else {
    fail(2, "unknown method: " + method + " (expected exact, aed, hed, learned)");
  }
  ged_graph_free(a);
  ged_graph_free(b);

  std::cout.precision(12);
  std::cout << value << '\n';
  if (!corr_json.empty()) std::cout << corr_json << '\n';
  return 0;
}

int cmd_verify(bool corrupt) {
  char* report = nullptr;
  int failures = 0;
  require_ok(ged_verify(corrupt ? 1 : 0, &report, &failures), "verify");
  std::cout << owned(report);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph edit distance toolkit: classical bounds and a learned metric"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key=value config file; flags override file values");

  DatasetFlags ingest_data;
  auto* ingest = app.add_subcommand("ingest", "Parse a dataset and print summary statistics");
  ingest_data.add_to(ingest);

  DatasetFlags train_data;
  ModelFlags train_model;
  DistanceFlags train_dist;
  ged_train_config tc{};
  ged_train_config_defaults(&tc);
  std::string train_out = "runs";
  auto* train = app.add_subcommand("train", "Train the metric on graph triplets");
  train_data.add_to(train);
  train_model.add_to(train);
  train_dist.add_to(train);
  train->add_option("--margin", tc.margin, "Triplet loss margin");
  train->add_option("--lr", tc.lr, "Initial learning rate");
  train->add_option("--weight-decay", tc.weight_decay, "L2 decay on weight matrices");
  train->add_option("--batch", tc.batch_size, "Triplets per update");
  train->add_option("--epochs", tc.max_epochs, "Maximum epochs");
  train->add_option("--patience", tc.patience, "Early stopping patience");
  train->add_option("--triplets-per-epoch", tc.triplets_per_epoch, "Training triplets per epoch");
  train->add_option("--seed", tc.seed, "Training seed");
  train->add_option("--out", train_out, "Output root; a run directory is created inside");

  DatasetFlags eval_data;
  DistanceFlags eval_dist;
  std::string eval_ckpt, eval_protocol = "individual", eval_out = "runs";
  std::vector<std::string> eval_metrics;
  int eval_pairs = 1000, eval_triplets = 1000, eval_jobs = 1;
  uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "Retrieval and classification metrics on the test split");
  eval_data.add_to(eval);
  eval_dist.add_to(eval);
  eval->add_option("--checkpoint", eval_ckpt, "Trained model checkpoint")->required();
  eval->add_option("--protocol", eval_protocol, "Retrieval protocol")
      ->check(CLI::IsMember({"individual", "combined"}));
  eval->add_option("--metric", eval_metrics, "Metrics: map, pair-auc, triplet-acc (default all)");
  eval->add_option("--pairs", eval_pairs, "Evaluation pairs for AUC");
  eval->add_option("--triplets", eval_triplets, "Evaluation triplets for accuracy");
  eval->add_option("--seed", eval_seed, "Sampling seed for pairs/triplets");
  eval->add_option("--jobs", eval_jobs, "Parallel workers for the distance matrix");
  eval->add_option("--out", eval_out, "Output root for reports");

  DistanceFlags dist_dist;
  std::string dist_a, dist_b, dist_method = "hed", dist_ckpt;
  ged_cost_model cm{};
  ged_cost_model_defaults(&cm);
  int node_limit = 12;
  bool dist_corr = false;
  auto* dist = app.add_subcommand("dist", "Distance between two graph files");
  dist_dist.add_to(dist);
  dist->add_option("graphA", dist_a, "First graph (.gxl or .json)")->required();
  dist->add_option("graphB", dist_b, "Second graph")->required();
  dist->add_option("--method", dist_method, "exact, aed, hed or learned");
  dist->add_option("--checkpoint", dist_ckpt, "Checkpoint for --method learned");
  dist->add_option("--alpha", cm.alpha, "Node/edge cost trade-off");
  dist->add_option("--tau-node", cm.tau_node, "Node deletion/insertion magnitude");
  dist->add_option("--tau-edge", cm.tau_edge, "Edge deletion/insertion magnitude");
  dist->add_option("--node-limit", node_limit, "Size cap for --method exact");
  dist->add_flag("--correspondence", dist_corr, "Print the node correspondence (learned)");

  bool verify_corrupt = false;
  auto* verify = app.add_subcommand("verify", "Run the built-in self-check suites");
  verify->add_flag("--corrupt-gradient", verify_corrupt,
                   "Deliberately corrupt one gradient (tests the failure path)")
      ->group("");  // hidden test hook

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(ingest_data);
    if (train->parsed()) return cmd_train(train_data, train_model, train_dist, tc, train_out);
    if (eval->parsed())
      return cmd_eval(eval_data, eval_ckpt, eval_protocol, eval_metrics, eval_pairs,
                      eval_triplets, eval_seed, eval_jobs, eval_dist, eval_out);
    if (dist->parsed())
      return cmd_dist(dist_a, dist_b, dist_method, dist_ckpt, cm, node_limit, dist_dist,
                      dist_corr);
    if (verify->parsed()) return cmd_verify(verify_corrupt);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.exit_code;
  }
  return 2;
}
