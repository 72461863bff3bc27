#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ged/synthetic.hpp"
#include "ged/train.hpp"

using namespace ged;

namespace {

double tape_loss(double d_pos, double d_neg, double d_swap, double margin) {
  ad::Tape tape;
  return triplet_loss(tape, tape.scalar_constant(d_pos), tape.scalar_constant(d_neg),
                      tape.scalar_constant(d_swap), margin)
      .scalar();
}

}  // namespace

TEST_CASE("triplet loss worked examples") {
  // Margin satisfied: negative is far enough, loss vanishes.
  CHECK(triplet_loss_value(0.2, 1.5, 1.4, 1.0) == 0.0);
  // Violation: loss = margin + d_pos - closest negative.
  CHECK(triplet_loss_value(0.8, 1.2, 1.6, 1.0) == doctest::Approx(1.0 + 0.8 - 1.2));
  // Anchor swap: the positive-negative distance can be the binding one.
  CHECK(triplet_loss_value(0.8, 1.6, 1.2, 1.0) == doctest::Approx(1.0 + 0.8 - 1.2));
}

TEST_CASE("tape loss matches the scalar formula including gradients") {
  for (auto [dp, dn, ds] : {std::tuple{0.2, 1.5, 1.4}, {0.8, 1.2, 1.6}, {0.8, 1.6, 1.2}})
    CHECK(tape_loss(dp, dn, ds, 1.0) == triplet_loss_value(dp, dn, ds, 1.0));

  // Gradient flows to d_pos and only the smaller negative distance.
  ad::Param p_pos("dp", {1}), p_neg("dn", {1}), p_swap("ds", {1});
  p_pos.value = {0.8};
  p_neg.value = {1.6};
  p_swap.value = {1.2};
  ad::Tape tape;
  ad::Tensor loss = triplet_loss(tape, tape.param(p_pos), tape.param(p_neg),
                                 tape.param(p_swap), 1.0);
  tape.backward(loss);
  CHECK(p_pos.grad[0] == doctest::Approx(1.0));
  CHECK(p_neg.grad[0] == doctest::Approx(0.0));
  CHECK(p_swap.grad[0] == doctest::Approx(-1.0));
}

TEST_CASE("triplet sampling respects labels") {
  std::vector<std::string> labels{"a", "a", "a", "b", "b", "c"};
  std::mt19937_64 rng(4);
  auto triplets = sample_triplets(labels, 100, rng);
  REQUIRE(triplets.size() == 100);
  for (const auto& t : triplets) {
    CHECK(labels[t.anchor] == labels[t.positive]);
    CHECK(t.anchor != t.positive);
    CHECK(labels[t.anchor] != labels[t.negative]);
  }
  std::mt19937_64 rng2(4);
  auto again = sample_triplets(labels, 100, rng2);
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    CHECK(triplets[i].anchor == again[i].anchor);
    CHECK(triplets[i].positive == again[i].positive);
    CHECK(triplets[i].negative == again[i].negative);
  }
  CHECK_THROWS_AS(sample_triplets({"a", "a"}, 1, rng), Error);
  CHECK_THROWS_AS(sample_triplets({"a", "b"}, 1, rng), Error);
}

TEST_CASE("adam first step moves by roughly the learning rate") {
  ad::Param p("p", {1});
  p.value = {1.0};
  p.grad = {0.5};
  AdamState state;
  adam_step(state, {&p}, {}, 0.01, 0.0);
  // Bias correction makes the first step lr * sign(grad) up to epsilon.
  CHECK(p.value[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-4));
}

TEST_CASE("adam minimizes a quadratic") {
  ad::Param p("p", {2});
  p.value = {3.0, -2.0};
  AdamState state;
  for (int i = 0; i < 2000; ++i) {
    p.grad = {2.0 * p.value[0], 2.0 * p.value[1]};
    adam_step(state, {&p}, {}, 0.05, 0.0);
  }
  CHECK(std::abs(p.value[0]) < 1e-3);
  CHECK(std::abs(p.value[1]) < 1e-3);
}

TEST_CASE("weight decay only touches the listed params") {
  ad::Param w("w", {1}), b("b", {1});
  w.value = {1.0};
  b.value = {1.0};
  w.grad = {0.0};
  b.grad = {0.0};
  AdamState state;
  adam_step(state, {&w, &b}, {&w}, 0.01, 0.1);
  CHECK(w.value[0] < 1.0);        // decayed toward zero
  CHECK(b.value[0] == 1.0);       // zero gradient, no decay
}

TEST_CASE("history csv layout") {
  std::vector<EpochRecord> history{{1, 0.001, 0.5, 0.7}, {2, 0.001, 0.4, 0.8}};
  std::istringstream in(history_csv(history));
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,lr,train_loss,val_triplet_accuracy");
  std::getline(in, line);
  CHECK(line.substr(0, 2) == "1,");
  std::getline(in, line);
  CHECK(line.substr(0, 2) == "2,");
}

TEST_CASE("training runs deterministically and improves validation accuracy") {
  SyntheticConfig data_cfg;
  data_cfg.classes = 3;
  data_cfg.graphs_per_class = 10;
  data_cfg.min_nodes = 5;
  data_cfg.max_nodes = 8;
  data_cfg.seed = 12;
  DatasetSplit data = generate_synthetic_dataset(data_cfg);

  ModelConfig mc;
  mc.variant = GnnVariant::GRU;
  mc.layers = 2;
  mc.hidden_dim = 8;
  mc.edge_dim = 4;

  TrainConfig tc;
  tc.max_epochs = 3;
  tc.triplets_per_epoch = 30;
  tc.val_triplets = 40;
  tc.batch_size = 10;
  tc.seed = 1;

  ModelParams params_a = init_params(mc, 5);
  TrainResult a = train(data.train, data.validation, params_a, tc);
  ModelParams params_b = init_params(mc, 5);
  TrainResult b = train(data.train, data.validation, params_b, tc);

  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].val_accuracy == b.history[i].val_accuracy);
  }
  auto pa = params_a.all(), pb = params_b.all();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);

  CHECK(a.best_epoch >= 1);
  CHECK(a.best_val_accuracy >= 0.0);
  CHECK(a.history[0].lr == doctest::Approx(0.001));
}

TEST_CASE("learning rate decays every fifth epoch") {
  // Schedule check through the recorded history of a short run.
  SyntheticConfig data_cfg;
  data_cfg.classes = 2;
  data_cfg.graphs_per_class = 10;
  data_cfg.min_nodes = 4;
  data_cfg.max_nodes = 5;
  data_cfg.seed = 3;
  DatasetSplit data = generate_synthetic_dataset(data_cfg);

  ModelConfig mc;
  mc.layers = 1;
  mc.hidden_dim = 4;
  mc.edge_dim = 2;
  ModelParams params = init_params(mc, 1);

  TrainConfig tc;
  tc.max_epochs = 6;
  tc.patience = 100;
  tc.triplets_per_epoch = 4;
  tc.val_triplets = 4;
  tc.batch_size = 4;
  TrainResult r = train(data.train, data.validation, params, tc);
  REQUIRE(r.history.size() == 6);
  CHECK(r.history[4].lr == doctest::Approx(0.001));          // epochs 1-5
  CHECK(r.history[5].lr == doctest::Approx(0.001 * 0.95));   // decayed at epoch 6
}

TEST_CASE("train config validation") {
  TrainConfig tc;
  tc.margin = 0.0;
  CHECK_THROWS_AS(tc.validate(), Error);
  tc = TrainConfig{};
  tc.lr_decay = 1.5;
  CHECK_THROWS_AS(tc.validate(), Error);
}
