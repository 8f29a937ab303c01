#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "reassert/error.h"
#include "reassert/numcore/tensor.h"

namespace reassert::nn {

template <typename T>
class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; valid while the tape
/// lives.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape<T>& tape() const { return *tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Shape& shape() const;
  std::size_t rows() const { return shape().rows; }
  std::size_t cols() const { return shape().cols; }
  std::size_t size() const { return shape().size(); }
  bool needs_grad() const;

  std::span<T> value() const;
  std::span<T> grad() const;
  T item() const { return value()[0]; }

 private:
  Tape<T>* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Records a computation for reverse-mode differentiation. One tape per
/// example; single-threaded. With gradients disabled only values are kept.
template <typename T>
class Tape {
 public:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Map = Eigen::Map<Mat>;

  struct Node {
    Shape shape;
    T* val = nullptr;
    T* grad = nullptr;
    std::vector<T> own_val;
    std::vector<T> own_grad;
    bool needs_grad = false;
    std::function<void()> backward;
  };

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t num_nodes() const { return nodes_.size(); }

  Node& node(std::uint32_t id) { return nodes_[id]; }
  const Node& node(std::uint32_t id) const { return nodes_[id]; }

  /// Leaf sharing the parameter's storage; gradients accumulate into
  /// `p.grad` when the parameter is trainable.
  Var<T> param(Tensor<T>& p) {
    Node& n = nodes_.emplace_back();
    n.shape = p.shape;
    n.val = p.value.data();
    if (grad_enabled_ && p.requires_grad) {
      n.needs_grad = true;
      n.grad = p.grad.data();
    }
    return {this, last_id()};
  }

  Var<T> constant(Shape shape, std::vector<T> values) {
    if (values.size() != shape.size()) {
      throw ShapeError("constant: " + std::to_string(values.size()) +
                       " values for shape " + shape.str());
    }
    Node& n = nodes_.emplace_back();
    n.shape = shape;
    n.own_val = std::move(values);
    n.val = n.own_val.data();
    return {this, last_id()};
  }

  Var<T> zeros(Shape shape) { return constant(shape, std::vector<T>(shape.size(), T(0))); }

  /// New intermediate node; it needs a gradient when any input does.
  Var<T> make(Shape shape, std::initializer_list<Var<T>> inputs) {
    bool needs = false;
    if (grad_enabled_) {
      for (const auto& v : inputs) needs = needs || v.needs_grad();
    }
    return make(shape, needs);
  }

  Var<T> make(Shape shape, bool needs) {
    Node& n = nodes_.emplace_back();
    n.shape = shape;
    n.own_val.assign(shape.size(), T(0));
    n.val = n.own_val.data();
    if (needs) {
      n.needs_grad = true;
      n.own_grad.assign(shape.size(), T(0));
      n.grad = n.own_grad.data();
    }
    return {this, last_id()};
  }

  void set_backward(Var<T> v, std::function<void()> fn) {
    Node& n = nodes_[v.id()];
    if (n.needs_grad) n.backward = std::move(fn);
  }

  /// Seeds d(root)/d(root) = seed and runs every recorded backward rule in
  /// reverse order. `root` must be a scalar.
  void backward(Var<T> root, T seed = T(1)) {
    if (root.size() != 1) {
      throw ShapeError("backward: root must be 1x1, got " + root.shape().str());
    }
    Node& r = nodes_[root.id()];
    if (!r.needs_grad) return;
    r.grad[0] += seed;
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      if (nodes_[i].backward) nodes_[i].backward();
    }
  }

  Map val(Var<T> v) {
    Node& n = nodes_[v.id()];
    return Map(n.val, Eigen::Index(n.shape.rows), Eigen::Index(n.shape.cols));
  }
  Map grad(Var<T> v) {
    Node& n = nodes_[v.id()];
    return Map(n.grad, Eigen::Index(n.shape.rows), Eigen::Index(n.shape.cols));
  }

 private:
  std::uint32_t last_id() const { return static_cast<std::uint32_t>(nodes_.size() - 1); }

  bool grad_enabled_;
  std::deque<Node> nodes_;
};

template <typename T>
const Shape& Var<T>::shape() const { return tape_->node(id_).shape; }
template <typename T>
bool Var<T>::needs_grad() const { return tape_ && tape_->node(id_).needs_grad; }
template <typename T>
std::span<T> Var<T>::value() const {
  auto& n = tape_->node(id_);
  return {n.val, n.shape.size()};
}
template <typename T>
std::span<T> Var<T>::grad() const {
  auto& n = tape_->node(id_);
  return {n.grad, n.grad ? n.shape.size() : 0};
}

namespace detail {

inline void require(bool ok, const char* op, const Shape& a, const Shape& b) {
  if (!ok) throw ShapeError(std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str());
}

template <typename T>
void same_tape(const Var<T>& a, const Var<T>& b) {
  if (&a.tape() != &b.tape()) throw Error("operands recorded on different tapes");
}

}  // namespace detail

// ---- linear algebra -------------------------------------------------------

/// a (m x k) * b (k x n)
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  detail::same_tape(a, b);
  detail::require(a.cols() == b.rows(), "matmul", a.shape(), b.shape());
  auto& t = a.tape();
  auto out = t.make({a.rows(), b.cols()}, {a, b});
  t.val(out).noalias() = t.val(a) * t.val(b);
  t.set_backward(out, [&t, a, b, out] {
    if (a.needs_grad()) t.grad(a).noalias() += t.grad(out) * t.val(b).transpose();
    if (b.needs_grad()) t.grad(b).noalias() += t.val(a).transpose() * t.grad(out);
  });
  return out;
}

/// a (m x k) * b^T where b is (n x k)
template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  detail::same_tape(a, b);
  detail::require(a.cols() == b.cols(), "matmul_nt", a.shape(), b.shape());
  auto& t = a.tape();
  auto out = t.make({a.rows(), b.rows()}, {a, b});
  t.val(out).noalias() = t.val(a) * t.val(b).transpose();
  t.set_backward(out, [&t, a, b, out] {
    if (a.needs_grad()) t.grad(a).noalias() += t.grad(out) * t.val(b);
    if (b.needs_grad()) t.grad(b).noalias() += t.grad(out).transpose() * t.val(a);
  });
  return out;
}

/// a^T * b where a is (k x m), b is (k x n)
template <typename T>
Var<T> matmul_tn(Var<T> a, Var<T> b) {
  detail::same_tape(a, b);
  detail::require(a.rows() == b.rows(), "matmul_tn", a.shape(), b.shape());
  auto& t = a.tape();
  auto out = t.make({a.cols(), b.cols()}, {a, b});
  t.val(out).noalias() = t.val(a).transpose() * t.val(b);
  t.set_backward(out, [&t, a, b, out] {
    if (a.needs_grad()) t.grad(a).noalias() += t.val(b) * t.grad(out).transpose();
    if (b.needs_grad()) t.grad(b).noalias() += t.val(a) * t.grad(out);
  });
  return out;
}

template <typename T>
Var<T> transpose(Var<T> a) {
  auto& t = a.tape();
  auto out = t.make({a.cols(), a.rows()}, {a});
  t.val(out) = t.val(a).transpose();
  t.set_backward(out, [&t, a, out] { t.grad(a) += t.grad(out).transpose(); });
  return out;
}

// ---- elementwise ----------------------------------------------------------

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  detail::same_tape(a, b);
  detail::require(a.shape() == b.shape(), "add", a.shape(), b.shape());
  auto& t = a.tape();
  auto out = t.make(a.shape(), {a, b});
  t.val(out) = t.val(a) + t.val(b);
  t.set_backward(out, [&t, a, b, out] {
    if (a.needs_grad()) t.grad(a) += t.grad(out);
    if (b.needs_grad()) t.grad(b) += t.grad(out);
  });
  return out;
}

/// Adds the column vector `bias` (n x 1) to every row of m (L x n).
template <typename T>
Var<T> add_bias_rows(Var<T> m, Var<T> bias) {
  detail::same_tape(m, bias);
  detail::require(bias.cols() == 1 && bias.rows() == m.cols(), "add_bias_rows",
                  m.shape(), bias.shape());
  auto& t = m.tape();
  auto out = t.make(m.shape(), {m, bias});
  t.val(out) = t.val(m).rowwise() + t.val(bias).col(0).transpose();
  t.set_backward(out, [&t, m, bias, out] {
    if (m.needs_grad()) t.grad(m) += t.grad(out);
    if (bias.needs_grad()) t.grad(bias).col(0) += t.grad(out).colwise().sum().transpose();
  });
  return out;
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  detail::same_tape(a, b);
  detail::require(a.shape() == b.shape(), "mul", a.shape(), b.shape());
  auto& t = a.tape();
  auto out = t.make(a.shape(), {a, b});
  t.val(out) = t.val(a).cwiseProduct(t.val(b));
  t.set_backward(out, [&t, a, b, out] {
    if (a.needs_grad()) t.grad(a) += t.grad(out).cwiseProduct(t.val(b));
    if (b.needs_grad()) t.grad(b) += t.grad(out).cwiseProduct(t.val(a));
  });
  return out;
}

/// alpha * a + beta
template <typename T>
Var<T> affine(Var<T> a, T alpha, T beta) {
  auto& t = a.tape();
  auto out = t.make(a.shape(), {a});
  t.val(out) = (t.val(a).array() * alpha + beta).matrix();
  t.set_backward(out, [&t, a, out, alpha] { t.grad(a) += t.grad(out) * alpha; });
  return out;
}

/// Scalar s (1 x 1) times every element of v.
template <typename T>
Var<T> scale(Var<T> s, Var<T> v) {
  detail::same_tape(s, v);
  detail::require(s.size() == 1, "scale", s.shape(), v.shape());
  auto& t = s.tape();
  auto out = t.make(v.shape(), {s, v});
  const T k = s.item();
  t.val(out) = t.val(v) * k;
  t.set_backward(out, [&t, s, v, out] {
    if (s.needs_grad()) s.grad()[0] += t.grad(out).cwiseProduct(t.val(v)).sum();
    if (v.needs_grad()) t.grad(v) += t.grad(out) * s.item();
  });
  return out;
}

template <typename T>
Var<T> tanh(Var<T> a) {
  auto& t = a.tape();
  auto out = t.make(a.shape(), {a});
  t.val(out) = t.val(a).array().tanh().matrix();
  t.set_backward(out, [&t, a, out] {
    auto y = t.val(out).array();
    t.grad(a).array() += t.grad(out).array() * (T(1) - y * y);
  });
  return out;
}

namespace detail {
template <typename T>
T sigmoid(T x) {
  return x >= 0 ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}
}  // namespace detail

template <typename T>
Var<T> sigmoid(Var<T> a) {
  auto& t = a.tape();
  auto out = t.make(a.shape(), {a});
  auto x = a.value();
  auto y = out.value();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = detail::sigmoid(x[i]);
  t.set_backward(out, [&t, a, out] {
    auto y = t.val(out).array();
    t.grad(a).array() += t.grad(out).array() * y * (T(1) - y);
  });
  return out;
}

/// LSTM gate activation over a (4h x 1) pre-activation laid out [i, f, g, o]:
/// sigmoid on i, f, o and tanh on g.
template <typename T>
Var<T> lstm_gate_activation(Var<T> pre) {
  if (pre.cols() != 1 || pre.rows() % 4 != 0) {
    throw ShapeError("lstm_gate_activation: expected (4h x 1), got " + pre.shape().str());
  }
  auto& t = pre.tape();
  auto out = t.make(pre.shape(), {pre});
  const std::size_t h = pre.rows() / 4;
  auto x = pre.value();
  auto y = out.value();
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = (i >= 2 * h && i < 3 * h) ? std::tanh(x[i]) : detail::sigmoid(x[i]);
  }
  t.set_backward(out, [pre, out, h] {
    auto y = out.value();
    auto gy = out.grad();
    auto gx = pre.grad();
    for (std::size_t i = 0; i < y.size(); ++i) {
      T d = (i >= 2 * h && i < 3 * h) ? T(1) - y[i] * y[i] : y[i] * (T(1) - y[i]);
      gx[i] += gy[i] * d;
    }
  });
  return out;
}

// ---- structure ------------------------------------------------------------

/// Stacks operands vertically; all must have the same column count.
template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  auto& t = parts[0].tape();
  std::size_t rows = 0;
  bool needs = false;
  for (const auto& p : parts) {
    detail::same_tape(parts[0], p);
    detail::require(p.cols() == parts[0].cols(), "concat", parts[0].shape(), p.shape());
    rows += p.rows();
    needs = needs || (t.grad_enabled() && p.needs_grad());
  }
  auto out = t.make({rows, parts[0].cols()}, needs);
  std::size_t off = 0;
  for (const auto& p : parts) {
    t.val(out).middleRows(Eigen::Index(off), Eigen::Index(p.rows())) = t.val(p);
    off += p.rows();
  }
  t.set_backward(out, [&t, parts, out] {
    std::size_t off = 0;
    for (const auto& p : parts) {
      if (p.needs_grad()) t.grad(p) += t.grad(out).middleRows(Eigen::Index(off), Eigen::Index(p.rows()));
      off += p.rows();
    }
  });
  return out;
}

/// Horizontal concatenation of two matrices with equal row counts.
template <typename T>
Var<T> concat_cols(Var<T> a, Var<T> b) {
  detail::same_tape(a, b);
  detail::require(a.rows() == b.rows(), "concat_cols", a.shape(), b.shape());
  auto& t = a.tape();
  auto out = t.make({a.rows(), a.cols() + b.cols()}, {a, b});
  t.val(out).leftCols(Eigen::Index(a.cols())) = t.val(a);
  t.val(out).rightCols(Eigen::Index(b.cols())) = t.val(b);
  t.set_backward(out, [&t, a, b, out] {
    if (a.needs_grad()) t.grad(a) += t.grad(out).leftCols(Eigen::Index(a.cols()));
    if (b.needs_grad()) t.grad(b) += t.grad(out).rightCols(Eigen::Index(b.cols()));
  });
  return out;
}

template <typename T>
Var<T> slice_rows(Var<T> a, std::size_t begin, std::size_t count) {
  if (begin + count > a.rows()) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of " + a.shape().str());
  }
  auto& t = a.tape();
  auto out = t.make({count, a.cols()}, {a});
  t.val(out) = t.val(a).middleRows(Eigen::Index(begin), Eigen::Index(count));
  t.set_backward(out, [&t, a, out, begin, count] {
    t.grad(a).middleRows(Eigen::Index(begin), Eigen::Index(count)) += t.grad(out);
  });
  return out;
}

/// Row i of m (L x d) as a column vector (d x 1).
template <typename T>
Var<T> row(Var<T> m, std::size_t i) {
  if (i >= m.rows()) throw ShapeError("row: index " + std::to_string(i) + " out of " + m.shape().str());
  auto& t = m.tape();
  auto out = t.make({m.cols(), 1}, {m});
  t.val(out).col(0) = t.val(m).row(Eigen::Index(i)).transpose();
  t.set_backward(out, [&t, m, out, i] {
    t.grad(m).row(Eigen::Index(i)) += t.grad(out).col(0).transpose();
  });
  return out;
}

/// Column vectors (d x 1) stacked as the rows of an (L x d) matrix.
template <typename T>
Var<T> stack_rows(const std::vector<Var<T>>& vecs) {
  if (vecs.empty()) throw ShapeError("stack_rows: no operands");
  auto& t = vecs[0].tape();
  const std::size_t d = vecs[0].rows();
  bool needs = false;
  for (const auto& v : vecs) {
    detail::same_tape(vecs[0], v);
    detail::require(v.cols() == 1 && v.rows() == d, "stack_rows", vecs[0].shape(), v.shape());
    needs = needs || (t.grad_enabled() && v.needs_grad());
  }
  auto out = t.make({vecs.size(), d}, needs);
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    t.val(out).row(Eigen::Index(i)) = t.val(vecs[i]).col(0).transpose();
  }
  t.set_backward(out, [&t, vecs, out] {
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      if (vecs[i].needs_grad()) t.grad(vecs[i]).col(0) += t.grad(out).row(Eigen::Index(i)).transpose();
    }
  });
  return out;
}

/// Rows `ids` of an embedding table (V x d), as an (L x d) matrix.
template <typename T>
Var<T> lookup(Var<T> table, const std::vector<int>& ids) {
  auto& t = table.tape();
  for (int id : ids) {
    if (id < 0 || std::size_t(id) >= table.rows()) {
      throw ShapeError("lookup: id " + std::to_string(id) + " out of " + table.shape().str());
    }
  }
  auto out = t.make({ids.size(), table.cols()}, {table});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    t.val(out).row(Eigen::Index(i)) = t.val(table).row(ids[i]);
  }
  t.set_backward(out, [&t, table, ids, out] {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      t.grad(table).row(ids[i]) += t.grad(out).row(Eigen::Index(i));
    }
  });
  return out;
}

// ---- distributions and losses --------------------------------------------

namespace detail {
template <typename T>
void softmax_span(std::span<const T> x, std::span<T> y, const std::vector<std::uint8_t>* mask) {
  T hi = -std::numeric_limits<T>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    hi = std::max(hi, x[i]);
    any = true;
  }
  if (!any) throw Error("softmax: every position is masked");
  T sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask && !(*mask)[i]) {
      y[i] = 0;
      continue;
    }
    y[i] = std::exp(x[i] - hi);
    sum += y[i];
  }
  for (auto& v : y) v /= sum;
}

template <typename T>
void softmax_backward_span(std::span<const T> y, std::span<const T> gy, std::span<T> gx) {
  T dot = 0;
  for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * gy[i];
  for (std::size_t i = 0; i < y.size(); ++i) gx[i] += y[i] * (gy[i] - dot);
}
}  // namespace detail

/// Softmax of a column vector; positions with mask 0 get probability exactly
/// 0. An empty mask means no masking.
template <typename T>
Var<T> softmax(Var<T> logits, const std::vector<std::uint8_t>& mask = {}) {
  if (logits.cols() != 1) throw ShapeError("softmax: expected a column vector, got " + logits.shape().str());
  if (!mask.empty() && mask.size() != logits.rows()) {
    throw ShapeError("softmax: mask of " + std::to_string(mask.size()) + " for " + logits.shape().str());
  }
  auto& t = logits.tape();
  auto out = t.make(logits.shape(), {logits});
  detail::softmax_span<T>(logits.value(), out.value(), mask.empty() ? nullptr : &mask);
  t.set_backward(out, [logits, out] {
    detail::softmax_backward_span<T>(out.value(), out.grad(), logits.grad());
  });
  return out;
}

/// Row-wise softmax of an (L x K) matrix; `col_mask` (size K, may be empty)
/// masks the same columns in every row.
template <typename T>
Var<T> softmax_rows(Var<T> m, const std::vector<std::uint8_t>& col_mask = {}) {
  if (!col_mask.empty() && col_mask.size() != m.cols()) {
    throw ShapeError("softmax_rows: mask of " + std::to_string(col_mask.size()) + " for " + m.shape().str());
  }
  auto& t = m.tape();
  auto out = t.make(m.shape(), {m});
  const std::size_t k = m.cols();
  const auto* mask = col_mask.empty() ? nullptr : &col_mask;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    detail::softmax_span<T>(m.value().subspan(r * k, k), out.value().subspan(r * k, k), mask);
  }
  t.set_backward(out, [m, out, k] {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      detail::softmax_backward_span<T>(out.value().subspan(r * k, k), out.grad().subspan(r * k, k),
                                       m.grad().subspan(r * k, k));
    }
  });
  return out;
}

/// out[index[k]] += v[k]; out has `size` rows.
template <typename T>
Var<T> scatter_add(Var<T> v, const std::vector<int>& index, std::size_t size) {
  if (v.cols() != 1 || index.size() != v.rows()) {
    throw ShapeError("scatter_add: " + std::to_string(index.size()) + " indices for " + v.shape().str());
  }
  for (int i : index) {
    if (i < 0 || std::size_t(i) >= size) throw ShapeError("scatter_add: index out of range");
  }
  auto& t = v.tape();
  auto out = t.make({size, 1}, {v});
  auto src = v.value();
  auto dst = out.value();
  for (std::size_t k = 0; k < index.size(); ++k) dst[index[k]] += src[k];
  t.set_backward(out, [v, index, out] {
    auto gv = v.grad();
    auto go = out.grad();
    for (std::size_t k = 0; k < index.size(); ++k) gv[k] += go[index[k]];
  });
  return out;
}

/// Appends zero rows up to `size` rows.
template <typename T>
Var<T> pad_rows(Var<T> v, std::size_t size) {
  if (size < v.rows()) throw ShapeError("pad_rows: target smaller than " + v.shape().str());
  if (size == v.rows()) return v;
  auto& t = v.tape();
  auto out = t.make({size, v.cols()}, {v});
  t.val(out).topRows(Eigen::Index(v.rows())) = t.val(v);
  t.set_backward(out, [&t, v, out] { t.grad(v) += t.grad(out).topRows(Eigen::Index(v.rows())); });
  return out;
}

/// Element i of a column vector, as a 1 x 1.
template <typename T>
Var<T> pick(Var<T> v, std::size_t i) {
  if (i >= v.size()) throw ShapeError("pick: index " + std::to_string(i) + " out of " + v.shape().str());
  auto& t = v.tape();
  auto out = t.make({1, 1}, {v});
  out.value()[0] = v.value()[i];
  t.set_backward(out, [v, out, i] { v.grad()[i] += out.grad()[0]; });
  return out;
}

/// -log(max(p, eps)) for a scalar p; the clamp has zero gradient.
template <typename T>
Var<T> neg_log(Var<T> p, T eps = T(1e-10)) {
  if (p.size() != 1) throw ShapeError("neg_log: expected a scalar, got " + p.shape().str());
  auto& t = p.tape();
  auto out = t.make({1, 1}, {p});
  const T x = p.item();
  out.value()[0] = -std::log(std::max(x, eps));
  t.set_backward(out, [p, out, eps] {
    const T x = p.item();
    if (x > eps) p.grad()[0] -= out.grad()[0] / x;
  });
  return out;
}

template <typename T>
Var<T> sum(Var<T> v) {
  auto& t = v.tape();
  auto out = t.make({1, 1}, {v});
  out.value()[0] = t.val(v).sum();
  t.set_backward(out, [&t, v, out] { t.grad(v).array() += out.grad()[0]; });
  return out;
}

/// Sum of same-shape operands.
template <typename T>
Var<T> add_n(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("add_n: no operands");
  auto& t = parts[0].tape();
  bool needs = false;
  for (const auto& p : parts) {
    detail::require(p.shape() == parts[0].shape(), "add_n", parts[0].shape(), p.shape());
    needs = needs || (t.grad_enabled() && p.needs_grad());
  }
  auto out = t.make(parts[0].shape(), needs);
  for (const auto& p : parts) t.val(out) += t.val(p);
  t.set_backward(out, [&t, parts, out] {
    for (const auto& p : parts) {
      if (p.needs_grad()) t.grad(p) += t.grad(out);
    }
  });
  return out;
}

/// Inverted dropout: in training, each element is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate). Identity otherwise.
template <typename T>
Var<T> dropout(Var<T> x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw Error("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  const T keep_scale = T(1.0 / (1.0 - rate));
  std::vector<T> mask(x.size());
  for (auto& m : mask) m = rng.uniform() >= rate ? keep_scale : T(0);
  auto& t = x.tape();
  return mul(x, t.constant(x.shape(), std::move(mask)));
}

}  // namespace reassert::nn
