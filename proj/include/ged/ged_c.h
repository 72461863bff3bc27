#ifndef GED_C_H
#define GED_C_H

/* C interface to the graph edit distance library. All functions return 0 on
 * success or a GED_ERR_* code; ged_last_error() describes the most recent
 * failure on the calling thread. Objects returned through out-parameters are
 * owned by the caller and released with the matching _free function. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  GED_OK = 0,
  GED_ERR_PARSE = 1,
  GED_ERR_INTEGRITY = 2,
  GED_ERR_DIMENSION = 3,
  GED_ERR_DOMAIN = 4,
  GED_ERR_SIZE_LIMIT = 5,
  GED_ERR_INFEASIBLE = 6,
  GED_ERR_IO = 7,
  GED_ERR_USAGE = 8,
  GED_ERR_UNKNOWN = 100
};

typedef struct ged_graph ged_graph;
typedef struct ged_dataset ged_dataset;
typedef struct ged_model ged_model;

const char* ged_last_error(void);
void ged_string_free(char* s);

/* ---- graphs ---- */

int ged_graph_load(const char* path, ged_graph** out); /* .gxl or .json */
int ged_graph_from_json(const char* json, ged_graph** out);
int ged_graph_to_json(const ged_graph* g, char** json_out);
int ged_graph_node_count(const ged_graph* g, int* out);
int ged_graph_edge_count(const ged_graph* g, int* out);
void ged_graph_free(ged_graph* g);

/* ---- datasets ---- */

typedef struct {
  int classes;
  int graphs_per_class;
  int min_nodes;
  int max_nodes;
  double jitter;
  double insert_delete;
  int knn;
  int distractor_dims;
  double distractor_scale;
  uint64_t seed;
} ged_synthetic_config;

void ged_synthetic_config_defaults(ged_synthetic_config* cfg);

/* Manifest files are TSV (path<TAB>label) or IAM CXL. val/test may be NULL. */
int ged_dataset_load(const char* train_manifest, const char* val_manifest,
                     const char* test_manifest, ged_dataset** out);
int ged_dataset_synthetic(const ged_synthetic_config* cfg, ged_dataset** out);
int ged_dataset_counts(const ged_dataset* d, int* train, int* val, int* test);
/* Counts plus mean node/edge statistics per split, as JSON. */
int ged_dataset_summary(const ged_dataset* d, char** json_out);
void ged_dataset_free(ged_dataset* d);

/* ---- classical distances ---- */

typedef struct {
  double alpha;    /* node/edge trade-off in [0,1] */
  double tau_node; /* node deletion/insertion magnitude, > 0 */
  double tau_edge; /* edge deletion/insertion magnitude, > 0 */
} ged_cost_model;

void ged_cost_model_defaults(ged_cost_model* cm);

int ged_exact(const ged_graph* a, const ged_graph* b, const ged_cost_model* cm,
              int node_limit, double* out);
int ged_aed(const ged_graph* a, const ged_graph* b, const ged_cost_model* cm, double* out);
int ged_hed(const ged_graph* a, const ged_graph* b, const ged_cost_model* cm, double* out);

/* ---- learned model ---- */

typedef struct {
  int use_gat;  /* 0 = gated (GRU) propagation, 1 = attention (GAT) */
  int layers;
  int hidden_dim;
  int heads;
  int input_dim;
  int edge_dim;
} ged_model_config;

typedef struct {
  int spatial_blend;
  double tau_d;
  double tau_i;
} ged_distance_config;

void ged_model_config_defaults(ged_model_config* cfg);
void ged_distance_config_defaults(ged_distance_config* cfg);

int ged_model_create(const ged_model_config* cfg, uint64_t seed, ged_model** out);
int ged_model_load(const char* path, ged_model** out);
int ged_model_save(ged_model* m, const char* path);
/* Extra metadata strings stored in saved checkpoints (seed, config echo). */
int ged_model_set_metadata(ged_model* m, const char* key, const char* value);
void ged_model_free(ged_model* m);

int ged_learned_distance(ged_model* m, const ged_graph* a, const ged_graph* b,
                         const ged_distance_config* cfg, double* out,
                         char** correspondence_json /* nullable */);

/* Row-major [n_queries x n_gallery] into caller-provided storage. */
int ged_pairwise_distances(ged_model* m, const ged_graph* const* queries, size_t n_queries,
                           const ged_graph* const* gallery, size_t n_gallery,
                           const ged_distance_config* cfg, int jobs, double* out);

/* ---- training ---- */

typedef struct {
  double margin;
  double lr;
  double lr_decay;
  int lr_decay_every;
  double weight_decay;
  int batch_size;
  int max_epochs;
  int patience;
  int triplets_per_epoch;
  int val_triplets;
  uint64_t seed;
} ged_train_config;

void ged_train_config_defaults(ged_train_config* cfg);

typedef void (*ged_progress_fn)(int epoch, double lr, double train_loss,
                                double val_accuracy, void* user);

/* Trains on the dataset's train/validation splits; on success the model
 * holds the best-validation weights and *history_csv_out (if non-NULL) the
 * per-epoch log. */
int ged_train(ged_model* m, const ged_dataset* d, const ged_train_config* tc,
              const ged_distance_config* dc, ged_progress_fn progress, void* user,
              char** history_csv_out);

/* ---- evaluation ---- */

enum { GED_PROTOCOL_INDIVIDUAL = 0, GED_PROTOCOL_COMBINED = 1 };

/* Retrieval on the test split (queries = gallery, self excluded): mAP under
 * the chosen protocol plus pair AUC / triplet accuracy on fixed seeded
 * class-balanced samples. Either output may be NULL. */
int ged_evaluate(ged_model* m, const ged_dataset* d, const ged_distance_config* cfg,
                 int protocol, int n_pairs, int n_triplets, uint64_t seed, int jobs,
                 char** report_json, char** report_table);

/* ---- self-checks ---- */

/* Gradient finite-difference checks, classical bound ordering, learned
 * metric identities, assignment oracle. Writes a text report and the number
 * of failed checks. corrupt_hook != 0 deliberately perturbs one gradient so
 * the failure path itself can be exercised. */
int ged_verify(int corrupt_hook, char** report_out, int* failures);

#ifdef __cplusplus
}
#endif

#endif /* GED_C_H */
