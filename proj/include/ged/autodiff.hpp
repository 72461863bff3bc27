#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ged/error.hpp"

namespace ged::ad {

using Shape = std::vector<int>;

std::int64_t numel(const Shape& s);

/// Named learnable tensor living outside any tape. Gradients accumulate
/// across backward passes until zero_grad().
struct Param {
  std::string name;
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;

  Param() = default;
  Param(std::string n, Shape s)
      : name(std::move(n)), shape(std::move(s)), value(numel(shape), 0.0),
        grad(numel(shape), 0.0) {}
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

class Tape;

/// Handle into a tape; cheap to copy.
struct Tensor {
  Tape* tape = nullptr;
  int id = -1;

  const Shape& shape() const;
  const std::vector<double>& value() const;
  const std::vector<double>& grad() const;
  double scalar() const;  // value of a 1-element tensor
};

/// Dynamic computation graph: ops append nodes in execution order; backward
/// walks them once in reverse, accumulating gradients additively.
class Tape {
 public:
  Tensor constant(Shape shape, std::vector<double> data);
  Tensor scalar_constant(double v) { return constant({1}, {v}); }
  Tensor variable(Shape shape, std::vector<double> data);  // requires-grad leaf
  Tensor param(Param& p);  // leaf bound to an external Param

  /// Reverse-mode pass from a scalar root; bound Params receive their
  /// gradient contributions.
  void backward(Tensor root);

  int size() const { return static_cast<int>(nodes_.size()); }

  // Internal node storage; exposed for the op implementations.
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<int> parents;
    std::function<void(Tape&, int)> backprop;  // adds into parents' grads
    Param* bound = nullptr;
  };

  Node& node(int id) { return nodes_[id]; }
  const Node& node(int id) const { return nodes_[id]; }

 private:
  int emplace(Node n);
  std::vector<Node> nodes_;
};

// ---- elementwise / linear algebra (all differentiable) ----
Tensor add(Tensor a, Tensor b);  // broadcasting on size-1 axes
Tensor sub(Tensor a, Tensor b);
Tensor mul(Tensor a, Tensor b);
Tensor scale(Tensor a, double k);
Tensor matmul(Tensor a, Tensor b);                 // [n,k]x[k,m]
Tensor concat(const std::vector<Tensor>& ts, int axis);
Tensor reshape(Tensor x, Shape shape);  // same numel, identity gradient
Tensor leaky_relu(Tensor x, double slope = 0.2);
Tensor sigmoid(Tensor x);
Tensor tanh_(Tensor x);
Tensor abs_(Tensor x);

// ---- reductions ----
Tensor reduce_sum(Tensor x);             // all elements -> [1]
Tensor reduce_sum(Tensor x, int axis);   // rank-2 only
Tensor reduce_mean(Tensor x);
Tensor reduce_mean(Tensor x, int axis);
/// Min along an axis of a rank-2 tensor (or of a rank-1 tensor with
/// axis=0). Gradient routes to the argmin element; ties to the lowest index.
Tensor reduce_min(Tensor x, int axis);

// ---- graph / segment ops ----
Tensor gather_rows(Tensor x, std::vector<int> rows);
Tensor segment_sum(Tensor values, std::vector<int> segment_ids, int n_segments);
/// Softmax within each segment of a rank-1 logits tensor (max-subtracted).
Tensor segment_softmax(Tensor logits, std::vector<int> segment_ids, int n_segments);

/// Per-row matrix-vector product: mats [E,d*d] (row-major d x d), vecs [E,d].
Tensor edge_matvec(Tensor mats, Tensor vecs);

/// D[i][j] = ||A_i - B_j||_2, exact zero for identical rows; the gradient at
/// a zero distance is taken as 0.
Tensor pairwise_euclidean(Tensor a, Tensor b);

// ---- batch normalization ----
struct BatchNormStats {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;
  bool initialized = false;
};

enum class Mode { Train, Eval };

/// Normalizes over the row (node) axis per feature. Train mode uses batch
/// statistics and updates the running stats; eval mode is a fixed affine map.
Tensor batch_norm(Tensor x, Tensor gamma, Tensor beta, BatchNormStats& stats, Mode mode);

/// Max over coordinates of |analytic - central difference| / max(1,|analytic|).
/// f(true) must run forward+backward and return the scalar loss with params'
/// grads filled; f(false) only needs the value.
double finite_difference_check(const std::vector<Param*>& params,
                               const std::function<double(bool compute_grad)>& f,
                               double h = 1e-5);

}  // namespace ged::ad
