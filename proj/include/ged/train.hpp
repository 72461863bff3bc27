#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ged/learned.hpp"

namespace ged {

struct TrainConfig {
  double margin = 1.0;
  double lr = 0.001;
  double lr_decay = 0.95;
  int lr_decay_every = 5;  // epochs between decays
  double weight_decay = 5e-4;
  int batch_size = 16;
  int max_epochs = 50;
  int patience = 10;            // epochs without validation improvement
  int triplets_per_epoch = 200;
  int val_triplets = 200;       // fixed set, sampled once
  std::uint64_t seed = 0;
  DistanceConfig distance;

  void validate() const;
};

struct Triplet {
  int anchor, positive, negative;
};

/// Anchor and positive share a label, the negative does not. Needs at least
/// two labels and one label with two members.
std::vector<Triplet> sample_triplets(const std::vector<std::string>& labels, int count,
                                     std::mt19937_64& rng);

/// max(0, margin + d_pos - min(d_neg, d_neg_swap)); d_neg_swap is the
/// positive-to-negative distance, letting either end of the positive pair
/// serve as the anchor.
double triplet_loss_value(double d_pos, double d_neg, double d_neg_swap, double margin);

ad::Tensor triplet_loss(ad::Tape& tape, ad::Tensor d_pos, ad::Tensor d_neg,
                        ad::Tensor d_neg_swap, double margin);

struct AdamState {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int step = 0;
  std::map<std::string, std::vector<double>> m, v;
};

/// One update from the accumulated gradients. L2 decay is added to the
/// gradient, but only for params listed in `decayed`.
void adam_step(AdamState& state, const std::vector<ad::Param*>& params,
               const std::vector<ad::Param*>& decayed, double lr, double weight_decay);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val_accuracy = 0.0;
  bool stopped_early = false;
};

std::string history_csv(const std::vector<EpochRecord>& history);

using ProgressFn = std::function<void(const EpochRecord&)>;

/// Full loop: triplet sampling, batched Adam updates, stepped lr decay,
/// early stopping on validation triplet accuracy. On return `params` holds
/// the best-validation weights.
TrainResult train(const std::vector<LabeledGraph>& train_set,
                  const std::vector<LabeledGraph>& val_set, ModelParams& params,
                  const TrainConfig& cfg, const ProgressFn& progress = nullptr);

}  // namespace ged
