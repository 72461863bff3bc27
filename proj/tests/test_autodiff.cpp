#include <doctest.h>

#include <cmath>
#include <random>

#include "ged/autodiff.hpp"

using namespace ged;
using ad::Param;
using ad::Tape;
using ad::Tensor;

namespace {

std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                  double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> out(n);
  for (auto& v : out) v = u(rng);
  return out;
}

// Contracts an arbitrary tensor to a scalar with fixed random weights so the
// finite-difference check sees a non-uniform output gradient.
Tensor contract(Tape& tape, Tensor x, std::mt19937_64& rng) {
  std::vector<double> w = random_values(x.value().size(), rng);
  Tensor weights = tape.constant(x.shape(), std::move(w));
  return ad::reduce_sum(ad::mul(x, weights));
}

// Runs the check for a unary tensor function of one parameter.
double check_op(const ad::Shape& shape, const std::function<Tensor(Tape&, Tensor)>& op,
                std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  Param p("p", shape);
  p.value = random_values(p.value.size(), rng, lo, hi);
  std::mt19937_64 wrng(seed + 1);
  return ad::finite_difference_check({&p}, [&](bool compute_grad) {
    p.zero_grad();
    Tape tape;
    std::mt19937_64 local = wrng;
    Tensor out = contract(tape, op(tape, tape.param(p)), local);
    if (compute_grad) tape.backward(out);
    return out.scalar();
  });
}

}  // namespace

TEST_CASE("elementwise op values") {
  Tape tape;
  Tensor a = tape.constant({2, 2}, {1.0, -2.0, 3.0, -4.0});
  Tensor b = tape.constant({2, 2}, {0.5, 0.5, 0.5, 0.5});
  CHECK(ad::add(a, b).value() == std::vector<double>{1.5, -1.5, 3.5, -3.5});
  CHECK(ad::sub(a, b).value() == std::vector<double>{0.5, -2.5, 2.5, -4.5});
  CHECK(ad::mul(a, b).value() == std::vector<double>{0.5, -1.0, 1.5, -2.0});
  CHECK(ad::scale(a, 2.0).value() == std::vector<double>{2.0, -4.0, 6.0, -8.0});
  CHECK(ad::abs_(a).value() == std::vector<double>{1.0, 2.0, 3.0, 4.0});
  CHECK(ad::leaky_relu(a, 0.1).value() == std::vector<double>{1.0, -0.2, 3.0, -0.4});
}

TEST_CASE("broadcasting adds a row bias") {
  Tape tape;
  Tensor x = tape.constant({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = tape.constant({1, 3}, {10, 20, 30});
  CHECK(ad::add(x, b).value() == std::vector<double>{11, 22, 33, 14, 25, 36});

  Tensor empty = tape.constant({0, 3}, {});
  CHECK(ad::add(empty, b).value().empty());
  CHECK(ad::add(empty, b).shape() == ad::Shape{0, 3});
}

TEST_CASE("matmul value") {
  Tape tape;
  Tensor a = tape.constant({2, 2}, {1, 2, 3, 4});
  Tensor b = tape.constant({2, 1}, {5, 6});
  CHECK(ad::matmul(a, b).value() == std::vector<double>{17, 39});
}

TEST_CASE("reduce_min routes ties to the lowest index") {
  Param p("p", {1, 3});
  p.value = {2.0, 1.0, 1.0};
  Tape tape;
  Tensor out = ad::reduce_min(tape.param(p), 1);
  CHECK(out.value() == std::vector<double>{1.0});
  tape.backward(ad::reduce_sum(out));
  CHECK(p.grad == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("segment softmax sums to one per segment") {
  Tape tape;
  Tensor logits = tape.constant({4}, {1.0, 2.0, 3.0, 100.0});
  Tensor alpha = ad::segment_softmax(logits, {0, 0, 1, 1}, 2);
  auto v = alpha.value();
  CHECK(v[0] + v[1] == doctest::Approx(1.0));
  CHECK(v[2] + v[3] == doctest::Approx(1.0));
  CHECK(v[3] == doctest::Approx(1.0));  // large logit dominates without overflow
}

TEST_CASE("segment_sum with an empty segment") {
  Tape tape;
  Tensor v = tape.constant({2, 2}, {1, 2, 3, 4});
  Tensor out = ad::segment_sum(v, {0, 0}, 3);
  CHECK(out.value() == std::vector<double>{4, 6, 0, 0, 0, 0});
}

TEST_CASE("pairwise_euclidean is exactly zero on identical rows") {
  Tape tape;
  Tensor a = tape.constant({2, 2}, {0.3, 0.7, 1.0, -1.0});
  Tensor d = ad::pairwise_euclidean(a, a);
  CHECK(d.value()[0] == 0.0);
  CHECK(d.value()[3] == 0.0);
  CHECK(d.value()[1] == doctest::Approx(std::sqrt(0.49 + 2.89)));
}

TEST_CASE("backward accumulates into params across uses") {
  Param p("p", {1});
  p.value = {3.0};
  Tape tape;
  Tensor x = tape.param(p);
  Tensor y = ad::mul(x, x);  // y = p^2, dy/dp = 2p
  tape.backward(y);
  CHECK(p.grad[0] == doctest::Approx(6.0));
  Tape tape2;  // second pass accumulates
  tape2.backward(tape2.param(p));
  CHECK(p.grad[0] == doctest::Approx(7.0));
}

TEST_CASE("batch_norm train vs eval") {
  Param gamma("g", {1, 2}), beta("b", {1, 2});
  gamma.value = {1.0, 2.0};
  beta.value = {0.5, -0.5};
  ad::BatchNormStats stats;

  Tape tape;
  Tensor x = tape.constant({4, 2}, {1, 10, 2, 20, 3, 30, 4, 40});
  Tensor out = ad::batch_norm(x, tape.param(gamma), tape.param(beta), stats, ad::Mode::Train);
  auto v = out.value();
  double col0_mean = (v[0] + v[2] + v[4] + v[6]) / 4.0;
  CHECK(col0_mean == doctest::Approx(0.5));  // normalized then shifted by beta
  CHECK(stats.initialized);
  CHECK(stats.running_mean[0] == doctest::Approx(0.1 * 2.5));  // momentum 0.1 from zero

  // Eval mode is an affine map using running stats, independent of the batch.
  Tape tape2;
  Tensor single = tape2.constant({1, 2}, {2.5, 25.0});
  Tensor e1 = ad::batch_norm(single, tape2.param(gamma), tape2.param(beta), stats,
                             ad::Mode::Eval);
  Tape tape3;
  Tensor batch = tape3.constant({2, 2}, {2.5, 25.0, 100.0, 100.0});
  Tensor e2 = ad::batch_norm(batch, tape3.param(gamma), tape3.param(beta), stats,
                             ad::Mode::Eval);
  CHECK(e1.value()[0] == e2.value()[0]);
  CHECK(e1.value()[1] == e2.value()[1]);
}

TEST_CASE("finite differences across every op") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed * 1000);

    CHECK(check_op({2, 3}, [](Tape&, Tensor x) { return x; }, seed) < 1e-6);
    CHECK(check_op({2, 3}, [](Tape&, Tensor x) { return ad::scale(x, -1.7); }, seed) < 1e-6);
    CHECK(check_op({2, 3}, [](Tape&, Tensor x) { return ad::tanh_(x); }, seed) < 1e-6);
    CHECK(check_op({2, 3}, [](Tape&, Tensor x) { return ad::sigmoid(x); }, seed) < 1e-6);
    // Kinked ops evaluated away from the kink.
    CHECK(check_op({2, 3}, [](Tape&, Tensor x) { return ad::leaky_relu(x, 0.2); }, seed, 0.2,
                   1.0) < 1e-6);
    CHECK(check_op({2, 3}, [](Tape&, Tensor x) { return ad::abs_(x); }, seed, 0.2, 1.0) < 1e-6);
    CHECK(check_op({2, 3}, [](Tape&, Tensor x) { return ad::reshape(x, {3, 2}); }, seed) <
          1e-6);
    CHECK(check_op({2, 3}, [](Tape&, Tensor x) { return ad::reduce_mean(x); }, seed) < 1e-6);
    CHECK(check_op({2, 3}, [](Tape&, Tensor x) { return ad::reduce_sum(x, 1); }, seed) < 1e-6);
    CHECK(check_op({2, 3}, [](Tape&, Tensor x) { return ad::reduce_min(x, 0); }, seed) < 1e-6);
    CHECK(check_op({4, 2}, [](Tape&, Tensor x) { return ad::gather_rows(x, {2, 0, 0, 3}); },
                   seed) < 1e-6);
    CHECK(check_op({4, 2},
                   [](Tape&, Tensor x) { return ad::segment_sum(x, {0, 1, 1, 2}, 3); },
                   seed) < 1e-6);
    CHECK(check_op({5},
                   [](Tape&, Tensor x) { return ad::segment_softmax(x, {0, 0, 1, 1, 1}, 2); },
                   seed) < 1e-6);

    // Binary ops: two params.
    {
      Param a("a", {2, 3}), b("b", {1, 3});
      a.value = random_values(6, rng);
      b.value = random_values(3, rng);
      for (auto combine : {0, 1, 2}) {
        double err = ad::finite_difference_check({&a, &b}, [&](bool compute_grad) {
          a.zero_grad();
          b.zero_grad();
          Tape tape;
          Tensor ta = tape.param(a), tb = tape.param(b);
          Tensor out = combine == 0 ? ad::add(ta, tb)
                       : combine == 1 ? ad::sub(ta, tb)
                                      : ad::mul(ta, tb);
          std::mt19937_64 wrng(seed);
          Tensor s = contract(tape, out, wrng);
          if (compute_grad) tape.backward(s);
          return s.scalar();
        });
        CHECK(err < 1e-6);
      }
    }
    {
      Param a("a", {2, 3}), b("b", {3, 2});
      a.value = random_values(6, rng);
      b.value = random_values(6, rng);
      double err = ad::finite_difference_check({&a, &b}, [&](bool compute_grad) {
        a.zero_grad();
        b.zero_grad();
        Tape tape;
        Tensor out = ad::matmul(tape.param(a), tape.param(b));
        std::mt19937_64 wrng(seed);
        Tensor s = contract(tape, out, wrng);
        if (compute_grad) tape.backward(s);
        return s.scalar();
      });
      CHECK(err < 1e-6);
    }
    {
      Param a("a", {2, 2}), b("b", {1, 2});
      a.value = random_values(4, rng);
      b.value = random_values(2, rng);
      double err = ad::finite_difference_check({&a, &b}, [&](bool compute_grad) {
        a.zero_grad();
        b.zero_grad();
        Tape tape;
        Tensor out = ad::concat({tape.param(a), tape.param(b)}, 0);
        std::mt19937_64 wrng(seed);
        Tensor s = contract(tape, out, wrng);
        if (compute_grad) tape.backward(s);
        return s.scalar();
      });
      CHECK(err < 1e-6);
    }
    {
      Param mats("m", {3, 4}), vecs("v", {3, 2});
      mats.value = random_values(12, rng);
      vecs.value = random_values(6, rng);
      double err = ad::finite_difference_check({&mats, &vecs}, [&](bool compute_grad) {
        mats.zero_grad();
        vecs.zero_grad();
        Tape tape;
        Tensor out = ad::edge_matvec(tape.param(mats), tape.param(vecs));
        std::mt19937_64 wrng(seed);
        Tensor s = contract(tape, out, wrng);
        if (compute_grad) tape.backward(s);
        return s.scalar();
      });
      CHECK(err < 1e-6);
    }
    {
      Param a("a", {3, 2}), b("b", {2, 2});
      a.value = random_values(6, rng);
      b.value = random_values(4, rng, 2.0, 3.0);  // keep the rows apart
      double err = ad::finite_difference_check({&a, &b}, [&](bool compute_grad) {
        a.zero_grad();
        b.zero_grad();
        Tape tape;
        Tensor out = ad::pairwise_euclidean(tape.param(a), tape.param(b));
        std::mt19937_64 wrng(seed);
        Tensor s = contract(tape, out, wrng);
        if (compute_grad) tape.backward(s);
        return s.scalar();
      });
      CHECK(err < 1e-6);
    }
    {
      Param x("x", {4, 2}), gamma("g", {1, 2}), beta("b", {1, 2});
      x.value = random_values(8, rng);
      gamma.value = random_values(2, rng, 0.5, 1.5);
      beta.value = random_values(2, rng);
      double err =
          ad::finite_difference_check({&x, &gamma, &beta}, [&](bool compute_grad) {
            x.zero_grad();
            gamma.zero_grad();
            beta.zero_grad();
            ad::BatchNormStats stats;  // fresh stats per evaluation
            Tape tape;
            Tensor out = ad::batch_norm(tape.param(x), tape.param(gamma), tape.param(beta),
                                        stats, ad::Mode::Train);
            std::mt19937_64 wrng(seed);
            Tensor s = contract(tape, out, wrng);
            if (compute_grad) tape.backward(s);
            return s.scalar();
          });
      CHECK(err < 1e-6);
    }
  }
}
