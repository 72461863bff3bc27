#include "ged/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace ged {

using ad::Tensor;

void TrainConfig::validate() const {
  if (margin <= 0.0) throw Error(ErrorCode::Domain, "train: margin must be > 0");
  if (lr <= 0.0 || lr_decay <= 0.0 || lr_decay > 1.0)
    throw Error(ErrorCode::Domain, "train: bad learning rate schedule");
  if (lr_decay_every < 1 || batch_size < 1 || max_epochs < 1 || patience < 1 ||
      triplets_per_epoch < 1 || val_triplets < 1)
    throw Error(ErrorCode::Domain, "train: counts must be >= 1");
  if (weight_decay < 0.0) throw Error(ErrorCode::Domain, "train: weight_decay must be >= 0");
  distance.validate();
}

std::vector<Triplet> sample_triplets(const std::vector<std::string>& labels, int count,
                                     std::mt19937_64& rng) {
  std::unordered_map<std::string, std::vector<int>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_label[labels[i]].push_back(static_cast<int>(i));

  std::vector<std::string> anchor_labels;  // labels with at least two members
  for (const auto& [label, members] : by_label)
    if (members.size() >= 2) anchor_labels.push_back(label);
  std::sort(anchor_labels.begin(), anchor_labels.end());
  if (anchor_labels.empty() || by_label.size() < 2)
    throw Error(ErrorCode::Domain,
                "sample_triplets: need two labels and one label with two members");

  std::vector<Triplet> out;
  out.reserve(count);
  std::uniform_int_distribution<std::size_t> pick_label(0, anchor_labels.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_any(0, labels.size() - 1);
  while (static_cast<int>(out.size()) < count) {
    const std::string& label = anchor_labels[pick_label(rng)];
    const auto& members = by_label[label];
    std::uniform_int_distribution<std::size_t> pick_member(0, members.size() - 1);
    int a = members[pick_member(rng)];
    int p = a;
    while (p == a) p = members[pick_member(rng)];
    int n = a;
    while (labels[n] == label) n = static_cast<int>(pick_any(rng));
    out.push_back({a, p, n});
  }
  return out;
}

double triplet_loss_value(double d_pos, double d_neg, double d_neg_swap, double margin) {
  return std::max(0.0, margin + d_pos - std::min(d_neg, d_neg_swap));
}

Tensor triplet_loss(ad::Tape& tape, Tensor d_pos, Tensor d_neg, Tensor d_neg_swap,
                    double margin) {
  Tensor closest_neg = ad::reduce_min(ad::concat({d_neg, d_neg_swap}, 0), 0);
  Tensor hinge = ad::add(ad::sub(d_pos, closest_neg), tape.scalar_constant(margin));
  return ad::leaky_relu(hinge, 0.0);
}

void adam_step(AdamState& state, const std::vector<ad::Param*>& params,
               const std::vector<ad::Param*>& decayed, double lr, double weight_decay) {
  std::unordered_set<const ad::Param*> decay_set(decayed.begin(), decayed.end());
  state.step += 1;
  double bc1 = 1.0 - std::pow(state.beta1, state.step);
  double bc2 = 1.0 - std::pow(state.beta2, state.step);
  for (ad::Param* p : params) {
    auto& m = state.m[p->name];
    auto& v = state.v[p->name];
    if (m.size() != p->value.size()) m.assign(p->value.size(), 0.0);
    if (v.size() != p->value.size()) v.assign(p->value.size(), 0.0);
    bool decay = weight_decay > 0.0 && decay_set.count(p) > 0;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double g = p->grad[i];
      if (decay) g += weight_decay * p->value[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      double m_hat = m[i] / bc1;
      double v_hat = v[i] / bc2;
      p->value[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out << "epoch,lr,train_loss,val_triplet_accuracy\n";
  out.precision(12);
  for (const auto& r : history)
    out << r.epoch << ',' << r.lr << ',' << r.train_loss << ',' << r.val_accuracy << '\n';
  return out.str();
}

namespace {

double validation_accuracy(const std::vector<LabeledGraph>& val_set,
                           const std::vector<Triplet>& triplets, ModelParams& params,
                           const DistanceConfig& dist) {
  std::vector<GraphEmbedding> emb;
  emb.reserve(val_set.size());
  for (const auto& lg : val_set) emb.push_back(precompute_embedding(lg.graph, params));
  int correct = 0;
  for (const auto& t : triplets) {
    double d_pos = learned_hed_numeric(emb[t.anchor], emb[t.positive], dist);
    double d_neg = learned_hed_numeric(emb[t.anchor], emb[t.negative], dist);
    if (d_pos < d_neg) ++correct;  // ties count as failures
  }
  return static_cast<double>(correct) / triplets.size();
}

}  // namespace

TrainResult train(const std::vector<LabeledGraph>& train_set,
                  const std::vector<LabeledGraph>& val_set, ModelParams& params,
                  const TrainConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  if (train_set.empty() || val_set.empty())
    throw Error(ErrorCode::Domain, "train: empty split");

  std::vector<std::string> train_labels, val_labels;
  for (const auto& lg : train_set) train_labels.push_back(lg.label);
  for (const auto& lg : val_set) val_labels.push_back(lg.label);

  std::mt19937_64 rng(cfg.seed);
  std::mt19937_64 val_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::vector<Triplet> val_triplets =
      sample_triplets(val_labels, cfg.val_triplets, val_rng);

  std::vector<ad::Param*> all = params.all();
  std::vector<ad::Param*> decayed = params.decay_weights();
  AdamState adam;

  TrainResult result;
  ModelParams best = params;
  int epochs_without_improvement = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double lr = cfg.lr * std::pow(cfg.lr_decay, (epoch - 1) / cfg.lr_decay_every);
    std::vector<Triplet> triplets = sample_triplets(train_labels, cfg.triplets_per_epoch, rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < triplets.size(); start += cfg.batch_size) {
      std::size_t end = std::min(triplets.size(), start + cfg.batch_size);
      double inv = 1.0 / static_cast<double>(end - start);
      for (ad::Param* p : all) p->zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const Triplet& t = triplets[i];
        ad::Tape tape;
        Tensor ea = embed(tape, train_set[t.anchor].graph, params, ad::Mode::Train);
        Tensor ep = embed(tape, train_set[t.positive].graph, params, ad::Mode::Train);
        Tensor en = embed(tape, train_set[t.negative].graph, params, ad::Mode::Train);
        Tensor d_pos = learned_hed(tape, ea, ep, train_set[t.anchor].graph,
                                   train_set[t.positive].graph, params, cfg.distance);
        Tensor d_neg = learned_hed(tape, ea, en, train_set[t.anchor].graph,
                                   train_set[t.negative].graph, params, cfg.distance);
        Tensor d_swap = learned_hed(tape, ep, en, train_set[t.positive].graph,
                                    train_set[t.negative].graph, params, cfg.distance);
        Tensor loss = triplet_loss(tape, d_pos, d_neg, d_swap, cfg.margin);
        epoch_loss += loss.scalar();
        tape.backward(ad::scale(loss, inv));
      }
      adam_step(adam, all, decayed, lr, cfg.weight_decay);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.lr = lr;
    record.train_loss = epoch_loss / triplets.size();
    record.val_accuracy = validation_accuracy(val_set, val_triplets, params, cfg.distance);
    result.history.push_back(record);
    if (progress) progress(record);

    if (record.val_accuracy > result.best_val_accuracy || result.best_epoch < 0) {
      result.best_val_accuracy = record.val_accuracy;
      result.best_epoch = epoch;
      best = params;
      epochs_without_improvement = 0;
    } else {
      epochs_without_improvement += 1;
      if (epochs_without_improvement >= cfg.patience) {
        result.stopped_early = true;
        break;
      }
    }
  }

  params = best;
  return result;
}

}  // namespace ged
