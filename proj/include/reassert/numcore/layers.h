#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reassert/numcore/tape.h"

namespace reassert::nn {

/// LSTM weights. Gate rows are laid out [input, forget, candidate, output].
template <typename T>
struct LstmParams {
  Tensor<T> w_x;  // 4h x in
  Tensor<T> w_h;  // 4h x h
  Tensor<T> b;    // 4h x 1

  LstmParams() = default;
  LstmParams(const std::string& name, std::size_t input, std::size_t hidden)
      : w_x(name + ".w_x", {4 * hidden, input}),
        w_h(name + ".w_h", {4 * hidden, hidden}),
        b(name + ".b", {4 * hidden, 1}) {}

  std::size_t input() const { return w_x.shape.cols; }
  std::size_t hidden() const { return w_h.shape.cols; }

  std::vector<Tensor<T>*> tensors() { return {&w_x, &w_h, &b}; }

  /// uniform(-r, r) weights, zero biases, forget-gate bias 1.
  void init(Rng& rng, double r) {
    fill_uniform(w_x, rng, -r, r);
    fill_uniform(w_h, rng, -r, r);
    std::fill(b.value.begin(), b.value.end(), T(0));
    const std::size_t h = hidden();
    for (std::size_t i = h; i < 2 * h; ++i) b.value[i] = T(1);
  }
};

template <typename T>
struct LstmState {
  Var<T> h;
  Var<T> c;
};

template <typename T>
struct BoundLstm {
  Var<T> w_x, w_h, b;
  std::size_t hidden = 0;
};

template <typename T>
BoundLstm<T> bind(Tape<T>& tape, LstmParams<T>& p) {
  return {tape.param(p.w_x), tape.param(p.w_h), tape.param(p.b), p.hidden()};
}

template <typename T>
LstmState<T> zero_state(Tape<T>& tape, std::size_t hidden) {
  return {tape.zeros({hidden, 1}), tape.zeros({hidden, 1})};
}

/// One step given the input-side pre-activation W_x x + b (4h x 1).
template <typename T>
LstmState<T> lstm_step_from_input_gates(Var<T> input_gates, const LstmState<T>& prev,
                                        const BoundLstm<T>& w) {
  const std::size_t h = w.hidden;
  auto gates = lstm_gate_activation(add(input_gates, matmul(w.w_h, prev.h)));
  auto i = slice_rows(gates, 0, h);
  auto f = slice_rows(gates, h, h);
  auto g = slice_rows(gates, 2 * h, h);
  auto o = slice_rows(gates, 3 * h, h);
  auto c = add(mul(f, prev.c), mul(i, g));
  return {mul(o, tanh(c)), c};
}

/// c_t = f*c_prev + i*g, h_t = o*tanh(c_t); i, f, o sigmoid and g tanh.
template <typename T>
LstmState<T> lstm_cell_step(Var<T> x, const LstmState<T>& prev, const BoundLstm<T>& w) {
  if (x.cols() != 1 || x.rows() != w.w_x.cols()) {
    throw ShapeError("lstm_cell_step: input " + x.shape().str() + " for weights " + w.w_x.shape().str());
  }
  if (prev.h.rows() != w.hidden || prev.c.rows() != w.hidden) {
    throw ShapeError("lstm_cell_step: state " + prev.h.shape().str() + " for hidden " + std::to_string(w.hidden));
  }
  return lstm_step_from_input_gates(add(matmul(w.w_x, x), w.b), prev, w);
}

template <typename T>
struct LstmRun {
  Var<T> states;       // L x h, row i = hidden state at position i
  LstmState<T> final;  // state after the last processed step
};

/// Runs over the rows of x (L x in), forward or reversed. Row i of `states`
/// always corresponds to input position i.
template <typename T>
LstmRun<T> lstm_run(Var<T> x, const BoundLstm<T>& w, bool reverse,
                    std::optional<LstmState<T>> init = std::nullopt) {
  if (x.rows() == 0) throw Error("lstm_run: empty sequence");
  if (x.cols() != w.w_x.cols()) {
    throw ShapeError("lstm_run: input " + x.shape().str() + " for weights " + w.w_x.shape().str());
  }
  auto& t = x.tape();
  // Input projections for every position in one product.
  auto input_gates = add_bias_rows(matmul_nt(x, w.w_x), w.b);
  const std::size_t n = x.rows();
  std::vector<Var<T>> hs(n);
  LstmState<T> state = init ? *init : zero_state(t, w.hidden);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t pos = reverse ? n - 1 - step : step;
    state = lstm_step_from_input_gates(row(input_gates, pos), state, w);
    hs[pos] = state.h;
  }
  return {stack_rows(hs), state};
}

template <typename T>
struct BiLstmRun {
  Var<T> states;  // L x 2h, row i = [forward_i ; backward_i]
  LstmState<T> forward_final;
  LstmState<T> backward_final;
};

template <typename T>
BiLstmRun<T> bilstm_run(Var<T> x, const BoundLstm<T>& fwd, const BoundLstm<T>& bwd) {
  auto f = lstm_run(x, fwd, false);
  auto b = lstm_run(x, bwd, true);
  return {concat_cols(f.states, b.states), f.final, b.final};
}

/// Sequence given as a list of column vectors.
template <typename T>
BiLstmRun<T> bilstm_run(const std::vector<Var<T>>& seq, const BoundLstm<T>& fwd,
                        const BoundLstm<T>& bwd) {
  if (seq.empty()) throw Error("bilstm_run: empty sequence");
  return bilstm_run(stack_rows(seq), fwd, bwd);
}

/// Dense layer y = W x + b.
template <typename T>
struct LinearParams {
  Tensor<T> w;
  Tensor<T> b;

  LinearParams() = default;
  LinearParams(const std::string& name, std::size_t input, std::size_t output, bool bias = true)
      : w(name + ".w", {output, input}), b(name + ".b", {bias ? output : 0, 1}) {}

  bool has_bias() const { return b.shape.rows > 0; }
  std::vector<Tensor<T>*> tensors() {
    if (has_bias()) return {&w, &b};
    return {&w};
  }
  void init(Rng& rng, double r) {
    fill_uniform(w, rng, -r, r);
    std::fill(b.value.begin(), b.value.end(), T(0));
  }
};

template <typename T>
struct BoundLinear {
  Var<T> w;
  std::optional<Var<T>> b;

  Var<T> operator()(Var<T> x) const {
    auto y = matmul(w, x);
    return b ? add(y, *b) : y;
  }
};

template <typename T>
BoundLinear<T> bind(Tape<T>& tape, LinearParams<T>& p) {
  BoundLinear<T> out{tape.param(p.w), std::nullopt};
  if (p.has_bias()) out.b = tape.param(p.b);
  return out;
}

/// Masked token cross-entropy: -log(dist[target]) (dist clamped at eps), or a
/// constant 0 when the position is masked out.
template <typename T>
Var<T> cross_entropy_masked(Var<T> dist, std::size_t target, bool masked, T eps = T(1e-10)) {
  if (masked) return dist.tape().zeros({1, 1});
  return neg_log(pick(dist, target), eps);
}

}  // namespace reassert::nn
