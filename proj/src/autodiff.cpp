#include "ged/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace ged::ad {

std::int64_t numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

const Shape& Tensor::shape() const { return tape->node(id).shape; }
const std::vector<double>& Tensor::value() const { return tape->node(id).value; }
const std::vector<double>& Tensor::grad() const { return tape->node(id).grad; }

double Tensor::scalar() const {
  const auto& v = value();
  if (v.size() != 1) throw Error(ErrorCode::Dimension, "scalar() on non-scalar tensor");
  return v[0];
}

int Tape::emplace(Node n) {
  n.grad.assign(n.value.size(), 0.0);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::constant(Shape shape, std::vector<double> data) {
  if (static_cast<std::int64_t>(data.size()) != numel(shape))
    throw Error(ErrorCode::Dimension, "constant: data size does not match shape");
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(data);
  return {this, emplace(std::move(n))};
}

Tensor Tape::variable(Shape shape, std::vector<double> data) {
  Tensor t = constant(std::move(shape), std::move(data));
  nodes_[t.id].requires_grad = true;
  return t;
}

Tensor Tape::param(Param& p) {
  Tensor t = variable(p.shape, p.value);
  nodes_[t.id].bound = &p;
  return t;
}

void Tape::backward(Tensor root) {
  if (root.tape != this) throw Error(ErrorCode::Usage, "backward: tensor from another tape");
  if (numel(node(root.id).shape) != 1)
    throw Error(ErrorCode::Dimension, "backward: root must be scalar");

  // Mark nodes reachable from the root so unrelated subgraphs are skipped.
  std::vector<bool> reach(nodes_.size(), false);
  std::vector<int> stack = {root.id};
  reach[root.id] = true;
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    for (int p : nodes_[id].parents)
      if (!reach[p]) {
        reach[p] = true;
        stack.push_back(p);
      }
  }

  node(root.id).grad[0] += 1.0;
  for (int id = root.id; id >= 0; --id) {
    if (!reach[id]) continue;
    if (nodes_[id].backprop) nodes_[id].backprop(*this, id);
    if (nodes_[id].bound) {
      auto& g = nodes_[id].bound->grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += nodes_[id].grad[i];
    }
  }
}

namespace {

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const int ra = static_cast<int>(a.size()), rb = static_cast<int>(b.size());
  const int r = std::max(ra, rb);
  Shape out(r);
  for (int i = 0; i < r; ++i) {
    int da = (i < r - ra) ? 1 : a[i - (r - ra)];
    int db = (i < r - rb) ? 1 : b[i - (r - rb)];
    if (da != db && da != 1 && db != 1)
      throw Error(ErrorCode::Dimension, "broadcast: incompatible shapes");
    out[i] = (da == 1) ? db : da;
  }
  return out;
}

// Flat index into `shape` (right-aligned, size-1 axes pinned) for the
// multi-index of flat position `pos` in `out_shape`.
std::int64_t map_index(std::int64_t pos, const Shape& out_shape, const Shape& shape) {
  const int r = static_cast<int>(out_shape.size());
  const int rs = static_cast<int>(shape.size());
  std::int64_t idx = 0;
  for (int i = r - 1, stride = 1; i >= 0; --i) {
    std::int64_t coord = pos % out_shape[i];
    pos /= out_shape[i];
    int si = i - (r - rs);
    if (si >= 0) {
      std::int64_t c = (shape[si] == 1) ? 0 : coord;
      idx += c * stride;
      stride *= shape[si];
    }
  }
  return idx;
}

}  // namespace

// Generic elementwise binary op with broadcasting. dfa/dfb give the local
// partials as a function of the two operand values.
static Tensor binary_op(Tensor a, Tensor b, const std::function<double(double, double)>& f,
                        const std::function<double(double, double)>& dfa,
                        const std::function<double(double, double)>& dfb) {
  if (a.tape != b.tape) throw Error(ErrorCode::Usage, "operands from different tapes");
  Tape& tape = *a.tape;
  Shape sa = a.shape(), sb = b.shape();
  Shape so = broadcast_shape(sa, sb);
  const std::int64_t n = numel(so);
  std::vector<double> out(n);
  const auto& va = a.value();
  const auto& vb = b.value();
  for (std::int64_t i = 0; i < n; ++i)
    out[i] = f(va[map_index(i, so, sa)], vb[map_index(i, so, sb)]);

  Tensor t = tape.constant(so, std::move(out));
  struct Closure {
    int ia, ib;
    Shape sa, sb, so;
    std::function<double(double, double)> dfa, dfb;
  };
  auto cl = std::make_shared<Closure>(Closure{a.id, b.id, sa, sb, so, dfa, dfb});
  Tape::Node& out_node = tape.node(t.id);
  out_node.parents = {a.id, b.id};
  out_node.requires_grad = true;
  out_node.backprop = [cl](Tape& tp, int id) {
    const auto& g = tp.node(id).grad;
    auto& ga = tp.node(cl->ia).grad;
    auto& gb = tp.node(cl->ib).grad;
    const auto& va = tp.node(cl->ia).value;
    const auto& vb = tp.node(cl->ib).value;
    const std::int64_t n = numel(cl->so);
    for (std::int64_t i = 0; i < n; ++i) {
      std::int64_t ai = map_index(i, cl->so, cl->sa);
      std::int64_t bi = map_index(i, cl->so, cl->sb);
      ga[ai] += g[i] * cl->dfa(va[ai], vb[bi]);
      gb[bi] += g[i] * cl->dfb(va[ai], vb[bi]);
    }
  };
  return t;
}

static Tensor unary_op(Tensor x, const std::function<double(double)>& f,
                       const std::function<double(double, double)>& df /* (x, y) -> dy/dx */) {
  Tape& tape = *x.tape;
  const auto& vx = x.value();
  std::vector<double> out(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i) out[i] = f(vx[i]);
  Tensor t = tape.constant(x.shape(), std::move(out));
  Tape::Node& nd = tape.node(t.id);
  nd.parents = {x.id};
  nd.requires_grad = true;
  int xid = x.id;
  nd.backprop = [xid, df](Tape& tp, int id) {
    const auto& g = tp.node(id).grad;
    const auto& y = tp.node(id).value;
    const auto& vx = tp.node(xid).value;
    auto& gx = tp.node(xid).grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(vx[i], y[i]);
  };
  return t;
}

Tensor add(Tensor a, Tensor b) {
  return binary_op(a, b, [](double x, double y) { return x + y; },
                   [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(Tensor a, Tensor b) {
  return binary_op(a, b, [](double x, double y) { return x - y; },
                   [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(Tensor a, Tensor b) {
  return binary_op(a, b, [](double x, double y) { return x * y; },
                   [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor scale(Tensor a, double k) {
  return unary_op(a, [k](double x) { return k * x; }, [k](double, double) { return k; });
}

Tensor leaky_relu(Tensor x, double slope) {
  return unary_op(x, [slope](double v) { return v >= 0.0 ? v : slope * v; },
                  [slope](double v, double) { return v >= 0.0 ? 1.0 : slope; });
}

Tensor sigmoid(Tensor x) {
  return unary_op(x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_(Tensor x) {
  return unary_op(x, [](double v) { return std::tanh(v); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor abs_(Tensor x) {
  return unary_op(x, [](double v) { return std::fabs(v); },
                  [](double v, double) { return v >= 0.0 ? 1.0 : -1.0; });
}

Tensor matmul(Tensor a, Tensor b) {
  if (a.tape != b.tape) throw Error(ErrorCode::Usage, "operands from different tapes");
  Tape& tape = *a.tape;
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
    throw Error(ErrorCode::Dimension, "matmul: shape mismatch");
  const int n = sa[0], k = sa[1], m = sb[1];
  std::vector<double> out(static_cast<std::size_t>(n) * m, 0.0);
  const auto& va = a.value();
  const auto& vb = b.value();
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < k; ++t) {
      double av = va[i * k + t];
      if (av == 0.0) continue;
      for (int j = 0; j < m; ++j) out[i * m + j] += av * vb[t * m + j];
    }
  Tensor r = tape.constant({n, m}, std::move(out));
  Tape::Node& nd = tape.node(r.id);
  nd.parents = {a.id, b.id};
  nd.requires_grad = true;
  int ia = a.id, ib = b.id;
  nd.backprop = [ia, ib, n, k, m](Tape& tp, int id) {
    const auto& g = tp.node(id).grad;
    const auto& va = tp.node(ia).value;
    const auto& vb = tp.node(ib).value;
    auto& ga = tp.node(ia).grad;
    auto& gb = tp.node(ib).grad;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        double gij = g[i * m + j];
        if (gij == 0.0) continue;
        for (int t = 0; t < k; ++t) {
          ga[i * k + t] += gij * vb[t * m + j];
          gb[t * m + j] += gij * va[i * k + t];
        }
      }
  };
  return r;
}

Tensor concat(const std::vector<Tensor>& ts, int axis) {
  if (ts.empty()) throw Error(ErrorCode::Usage, "concat: empty input");
  Tape& tape = *ts[0].tape;
  Shape s0 = ts[0].shape();
  if (axis < 0 || axis >= static_cast<int>(s0.size()))
    throw Error(ErrorCode::Dimension, "concat: bad axis");
  Shape so = s0;
  so[axis] = 0;
  for (const Tensor& t : ts) {
    Shape s = t.shape();
    for (std::size_t i = 0; i < s.size(); ++i)
      if (static_cast<int>(i) != axis && s[i] != s0[i])
        throw Error(ErrorCode::Dimension, "concat: shape mismatch");
    so[axis] += s[axis];
  }
  // outer x axis x inner layout
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= so[i];
  for (std::size_t i = axis + 1; i < so.size(); ++i) inner *= so[i];

  std::vector<double> out(numel(so));
  std::int64_t offset = 0;
  for (const Tensor& t : ts) {
    const auto& v = t.value();
    std::int64_t ax = t.shape()[axis];
    for (std::int64_t o = 0; o < outer; ++o)
      for (std::int64_t a = 0; a < ax; ++a)
        for (std::int64_t i = 0; i < inner; ++i)
          out[(o * so[axis] + offset + a) * inner + i] = v[(o * ax + a) * inner + i];
    offset += ax;
  }
  Tensor r = tape.constant(so, std::move(out));
  Tape::Node& nd = tape.node(r.id);
  nd.requires_grad = true;
  std::vector<int> axes;
  for (const Tensor& t : ts) {
    nd.parents.push_back(t.id);
    axes.push_back(t.shape()[axis]);
  }
  int total_axis = so[axis];
  nd.backprop = [axes, outer, inner, total_axis](Tape& tp, int id) {
    const auto& g = tp.node(id).grad;
    std::int64_t offset = 0;
    for (std::size_t p = 0; p < axes.size(); ++p) {
      auto& gp = tp.node(tp.node(id).parents[p]).grad;
      std::int64_t ax = axes[p];
      for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t a = 0; a < ax; ++a)
          for (std::int64_t i = 0; i < inner; ++i)
            gp[(o * ax + a) * inner + i] += g[(o * total_axis + offset + a) * inner + i];
      offset += ax;
    }
  };
  return r;
}

Tensor reshape(Tensor x, Shape shape) {
  if (numel(shape) != numel(x.shape()))
    throw Error(ErrorCode::Dimension, "reshape: element count mismatch");
  Tape& tape = *x.tape;
  Tensor r = tape.constant(std::move(shape), x.value());
  Tape::Node& nd = tape.node(r.id);
  nd.parents = {x.id};
  nd.requires_grad = true;
  int xid = x.id;
  nd.backprop = [xid](Tape& tp, int id) {
    const auto& g = tp.node(id).grad;
    auto& gx = tp.node(xid).grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  };
  return r;
}

Tensor reduce_sum(Tensor x) {
  Tape& tape = *x.tape;
  double s = 0.0;
  for (double v : x.value()) s += v;
  Tensor r = tape.constant({1}, {s});
  Tape::Node& nd = tape.node(r.id);
  nd.parents = {x.id};
  nd.requires_grad = true;
  int xid = x.id;
  nd.backprop = [xid](Tape& tp, int id) {
    double g = tp.node(id).grad[0];
    for (auto& gx : tp.node(xid).grad) gx += g;
  };
  return r;
}

Tensor reduce_mean(Tensor x) {
  std::int64_t n = numel(x.shape());
  if (n == 0) throw Error(ErrorCode::Dimension, "reduce_mean of empty tensor");
  return scale(reduce_sum(x), 1.0 / static_cast<double>(n));
}

static Tensor reduce_axis(Tensor x, int axis, bool mean) {
  const Shape& s = x.shape();
  if (s.size() != 2 || (axis != 0 && axis != 1))
    throw Error(ErrorCode::Dimension, "axis reduction expects a rank-2 tensor, axis 0 or 1");
  Tape& tape = *x.tape;
  const int n = s[0], m = s[1];
  const int keep = (axis == 0) ? m : n;
  const int red = (axis == 0) ? n : m;
  std::vector<double> out(keep, 0.0);
  const auto& v = x.value();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out[axis == 0 ? j : i] += v[i * m + j];
  double k = mean ? 1.0 / red : 1.0;
  for (auto& o : out) o *= k;
  Tensor r = tape.constant({keep}, std::move(out));
  Tape::Node& nd = tape.node(r.id);
  nd.parents = {x.id};
  nd.requires_grad = true;
  int xid = x.id;
  nd.backprop = [xid, n, m, axis, k](Tape& tp, int id) {
    const auto& g = tp.node(id).grad;
    auto& gx = tp.node(xid).grad;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) gx[i * m + j] += k * g[axis == 0 ? j : i];
  };
  return r;
}

Tensor reduce_sum(Tensor x, int axis) { return reduce_axis(x, axis, false); }
Tensor reduce_mean(Tensor x, int axis) { return reduce_axis(x, axis, true); }

Tensor reduce_min(Tensor x, int axis) {
  const Shape& s = x.shape();
  Tape& tape = *x.tape;
  int n, m;
  if (s.size() == 1) {
    if (axis != 0) throw Error(ErrorCode::Dimension, "reduce_min: bad axis for rank-1");
    n = 1;
    m = s[0];
    axis = 1;
  } else if (s.size() == 2) {
    n = s[0];
    m = s[1];
  } else {
    throw Error(ErrorCode::Dimension, "reduce_min expects rank 1 or 2");
  }
  const int keep = (axis == 0) ? m : n;
  const int red = (axis == 0) ? n : m;
  if (red == 0) throw Error(ErrorCode::Dimension, "reduce_min over empty axis");
  std::vector<double> out(keep);
  std::vector<int> argmin(keep);
  const auto& v = x.value();
  for (int o = 0; o < keep; ++o) {
    double best = 0.0;
    int bi = -1;
    for (int r = 0; r < red; ++r) {
      double val = (axis == 0) ? v[r * m + o] : v[o * m + r];
      if (bi < 0 || val < best) {  // strict: ties keep the lowest index
        best = val;
        bi = r;
      }
    }
    out[o] = best;
    argmin[o] = bi;
  }
  Tensor r = tape.constant({keep}, std::move(out));
  Tape::Node& nd = tape.node(r.id);
  nd.parents = {x.id};
  nd.requires_grad = true;
  int xid = x.id;
  nd.backprop = [xid, argmin, m, axis](Tape& tp, int id) {
    const auto& g = tp.node(id).grad;
    auto& gx = tp.node(xid).grad;
    for (std::size_t o = 0; o < g.size(); ++o) {
      int r = argmin[o];
      std::size_t idx = (axis == 0) ? r * m + o : o * m + r;
      gx[idx] += g[o];
    }
  };
  return r;
}

Tensor gather_rows(Tensor x, std::vector<int> rows) {
  const Shape& s = x.shape();
  if (s.size() != 2) throw Error(ErrorCode::Dimension, "gather_rows expects rank-2");
  Tape& tape = *x.tape;
  const int m = s[1];
  for (int r : rows)
    if (r < 0 || r >= s[0]) throw Error(ErrorCode::Domain, "gather_rows: index out of range");
  std::vector<double> out(rows.size() * m);
  const auto& v = x.value();
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(v.begin() + static_cast<std::int64_t>(rows[i]) * m, m, out.begin() + i * m);
  Tensor r = tape.constant({static_cast<int>(rows.size()), m}, std::move(out));
  Tape::Node& nd = tape.node(r.id);
  nd.parents = {x.id};
  nd.requires_grad = true;
  int xid = x.id;
  nd.backprop = [xid, rows, m](Tape& tp, int id) {
    const auto& g = tp.node(id).grad;
    auto& gx = tp.node(xid).grad;
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (int j = 0; j < m; ++j) gx[rows[i] * m + j] += g[i * m + j];
  };
  return r;
}

Tensor segment_sum(Tensor values, std::vector<int> segment_ids, int n_segments) {
  const Shape& s = values.shape();
  if (s.size() != 2) throw Error(ErrorCode::Dimension, "segment_sum expects rank-2 values");
  if (static_cast<int>(segment_ids.size()) != s[0])
    throw Error(ErrorCode::Dimension, "segment_sum: ids size mismatch");
  for (int id : segment_ids)
    if (id < 0 || id >= n_segments)
      throw Error(ErrorCode::Domain, "segment_sum: segment id out of range");
  Tape& tape = *values.tape;
  const int m = s[1];
  std::vector<double> out(static_cast<std::size_t>(n_segments) * m, 0.0);
  const auto& v = values.value();
  for (int e = 0; e < s[0]; ++e)
    for (int j = 0; j < m; ++j) out[segment_ids[e] * m + j] += v[e * m + j];
  Tensor r = tape.constant({n_segments, m}, std::move(out));
  Tape::Node& nd = tape.node(r.id);
  nd.parents = {values.id};
  nd.requires_grad = true;
  int xid = values.id;
  nd.backprop = [xid, segment_ids, m](Tape& tp, int id) {
    const auto& g = tp.node(id).grad;
    auto& gx = tp.node(xid).grad;
    for (std::size_t e = 0; e < segment_ids.size(); ++e)
      for (int j = 0; j < m; ++j) gx[e * m + j] += g[segment_ids[e] * m + j];
  };
  return r;
}

Tensor segment_softmax(Tensor logits, std::vector<int> segment_ids, int n_segments) {
  const Shape& s = logits.shape();
  if (s.size() != 1) throw Error(ErrorCode::Dimension, "segment_softmax expects rank-1 logits");
  if (static_cast<int>(segment_ids.size()) != s[0])
    throw Error(ErrorCode::Dimension, "segment_softmax: ids size mismatch");
  for (int id : segment_ids)
    if (id < 0 || id >= n_segments)
      throw Error(ErrorCode::Domain, "segment_softmax: segment id out of range");
  Tape& tape = *logits.tape;
  const int e = s[0];
  const auto& v = logits.value();
  std::vector<double> segmax(n_segments, -1e300);
  for (int i = 0; i < e; ++i) segmax[segment_ids[i]] = std::max(segmax[segment_ids[i]], v[i]);
  std::vector<double> out(e), segsum(n_segments, 0.0);
  for (int i = 0; i < e; ++i) {
    out[i] = std::exp(v[i] - segmax[segment_ids[i]]);
    segsum[segment_ids[i]] += out[i];
  }
  for (int i = 0; i < e; ++i) out[i] /= segsum[segment_ids[i]];
  Tensor r = tape.constant({e}, std::move(out));
  Tape::Node& nd = tape.node(r.id);
  nd.parents = {logits.id};
  nd.requires_grad = true;
  int xid = logits.id;
  nd.backprop = [xid, segment_ids, n_segments](Tape& tp, int id) {
    const auto& g = tp.node(id).grad;
    const auto& y = tp.node(id).value;
    auto& gx = tp.node(xid).grad;
    std::vector<double> dot(n_segments, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) dot[segment_ids[i]] += g[i] * y[i];
    for (std::size_t i = 0; i < g.size(); ++i)
      gx[i] += y[i] * (g[i] - dot[segment_ids[i]]);
  };
  return r;
}

Tensor edge_matvec(Tensor mats, Tensor vecs) {
  if (mats.tape != vecs.tape) throw Error(ErrorCode::Usage, "operands from different tapes");
  const Shape& sm = mats.shape();
  const Shape& sv = vecs.shape();
  if (sm.size() != 2 || sv.size() != 2 || sm[0] != sv[0] || sm[1] != sv[1] * sv[1])
    throw Error(ErrorCode::Dimension, "edge_matvec: mats must be [E,d*d], vecs [E,d]");
  Tape& tape = *mats.tape;
  const int e = sv[0], d = sv[1];
  std::vector<double> out(static_cast<std::size_t>(e) * d, 0.0);
  const auto& vm = mats.value();
  const auto& vv = vecs.value();
  for (int i = 0; i < e; ++i)
    for (int r = 0; r < d; ++r) {
      double s = 0.0;
      for (int c = 0; c < d; ++c) s += vm[i * d * d + r * d + c] * vv[i * d + c];
      out[i * d + r] = s;
    }
  Tensor r = tape.constant({e, d}, std::move(out));
  Tape::Node& nd = tape.node(r.id);
  nd.parents = {mats.id, vecs.id};
  nd.requires_grad = true;
  int im = mats.id, iv = vecs.id;
  nd.backprop = [im, iv, e, d](Tape& tp, int id) {
    const auto& g = tp.node(id).grad;
    const auto& vm = tp.node(im).value;
    const auto& vv = tp.node(iv).value;
    auto& gm = tp.node(im).grad;
    auto& gv = tp.node(iv).grad;
    for (int i = 0; i < e; ++i)
      for (int r = 0; r < d; ++r) {
        double gr = g[i * d + r];
        if (gr == 0.0) continue;
        for (int c = 0; c < d; ++c) {
          gm[i * d * d + r * d + c] += gr * vv[i * d + c];
          gv[i * d + c] += gr * vm[i * d * d + r * d + c];
        }
      }
  };
  return r;
}

Tensor pairwise_euclidean(Tensor a, Tensor b) {
  if (a.tape != b.tape) throw Error(ErrorCode::Usage, "operands from different tapes");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[1])
    throw Error(ErrorCode::Dimension, "pairwise_euclidean: feature dims differ");
  Tape& tape = *a.tape;
  const int n = sa[0], m = sb[0], d = sa[1];
  std::vector<double> out(static_cast<std::size_t>(n) * m);
  const auto& va = a.value();
  const auto& vb = b.value();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        double diff = va[i * d + k] - vb[j * d + k];
        s += diff * diff;
      }
      out[i * m + j] = std::sqrt(s);
    }
  Tensor r = tape.constant({n, m}, std::move(out));
  Tape::Node& nd = tape.node(r.id);
  nd.parents = {a.id, b.id};
  nd.requires_grad = true;
  int ia = a.id, ib = b.id;
  nd.backprop = [ia, ib, n, m, d](Tape& tp, int id) {
    const auto& g = tp.node(id).grad;
    const auto& y = tp.node(id).value;
    const auto& va = tp.node(ia).value;
    const auto& vb = tp.node(ib).value;
    auto& ga = tp.node(ia).grad;
    auto& gb = tp.node(ib).grad;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        double gij = g[i * m + j];
        double dist = y[i * m + j];
        if (gij == 0.0 || dist == 0.0) continue;  // subgradient 0 at coincident points
        for (int k = 0; k < d; ++k) {
          double diff = (va[i * d + k] - vb[j * d + k]) / dist;
          ga[i * d + k] += gij * diff;
          gb[j * d + k] -= gij * diff;
        }
      }
  };
  return r;
}

Tensor batch_norm(Tensor x, Tensor gamma, Tensor beta, BatchNormStats& stats, Mode mode) {
  const Shape& s = x.shape();
  if (s.size() != 2) throw Error(ErrorCode::Dimension, "batch_norm expects rank-2");
  const int n = s[0], m = s[1];
  if (n < 1) throw Error(ErrorCode::Dimension, "batch_norm: empty batch");
  if (gamma.shape() != Shape{1, m} || beta.shape() != Shape{1, m})
    throw Error(ErrorCode::Dimension, "batch_norm: gamma/beta must be [1,d]");
  if (!stats.initialized) {
    stats.running_mean.assign(m, 0.0);
    stats.running_var.assign(m, 1.0);
    stats.initialized = true;
  }
  Tape& tape = *x.tape;
  const auto& v = x.value();
  std::vector<double> mean(m, 0.0), var(m, 0.0);
  if (mode == Mode::Train) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) mean[j] += v[i * m + j];
    for (int j = 0; j < m; ++j) mean[j] /= n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        double c = v[i * m + j] - mean[j];
        var[j] += c * c;
      }
    for (int j = 0; j < m; ++j) var[j] /= n;
    for (int j = 0; j < m; ++j) {
      stats.running_mean[j] = (1.0 - stats.momentum) * stats.running_mean[j] + stats.momentum * mean[j];
      stats.running_var[j] = (1.0 - stats.momentum) * stats.running_var[j] + stats.momentum * var[j];
    }
  } else {
    mean = stats.running_mean;
    var = stats.running_var;
  }
  const double eps = stats.eps;
  std::vector<double> xhat(static_cast<std::size_t>(n) * m), out(xhat.size());
  const auto& vg = gamma.value();
  const auto& vb = beta.value();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      xhat[i * m + j] = (v[i * m + j] - mean[j]) / std::sqrt(var[j] + eps);
      out[i * m + j] = vg[j] * xhat[i * m + j] + vb[j];
    }
  Tensor r = tape.constant({n, m}, std::move(out));
  Tape::Node& nd = tape.node(r.id);
  nd.parents = {x.id, gamma.id, beta.id};
  nd.requires_grad = true;
  int ix = x.id, ig = gamma.id, ibta = beta.id;
  bool train = mode == Mode::Train;
  nd.backprop = [ix, ig, ibta, n, m, mean, var, eps, xhat, train](Tape& tp, int id) {
    const auto& g = tp.node(id).grad;
    const auto& vg = tp.node(ig).value;
    auto& gx = tp.node(ix).grad;
    auto& gg = tp.node(ig).grad;
    auto& gb = tp.node(ibta).grad;
    for (int j = 0; j < m; ++j) {
      double inv_std = 1.0 / std::sqrt(var[j] + eps);
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int i = 0; i < n; ++i) {
        sum_dy += g[i * m + j];
        sum_dy_xhat += g[i * m + j] * xhat[i * m + j];
      }
      gg[j] += sum_dy_xhat;
      gb[j] += sum_dy;
      for (int i = 0; i < n; ++i) {
        double dxhat = g[i * m + j] * vg[j];
        if (train) {
          gx[i * m + j] += inv_std * (dxhat - (vg[j] / n) * (sum_dy + xhat[i * m + j] * sum_dy_xhat));
        } else {
          gx[i * m + j] += dxhat * inv_std;
        }
      }
    }
  };
  return r;
}

double finite_difference_check(const std::vector<Param*>& params,
                               const std::function<double(bool)>& f, double h) {
  for (Param* p : params) p->zero_grad();
  f(true);
  std::vector<std::vector<double>> analytic;
  for (Param* p : params) analytic.push_back(p->grad);
  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param* p = params[pi];
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double saved = p->value[i];
      p->value[i] = saved + h;
      double fp = f(false);
      p->value[i] = saved - h;
      double fm = f(false);
      p->value[i] = saved;
      double fd = (fp - fm) / (2.0 * h);
      double a = analytic[pi][i];
      double rel = std::fabs(a - fd) / std::max(1.0, std::fabs(a));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace ged::ad
