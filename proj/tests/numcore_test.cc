#include <cmath>
#include <functional>

#include "doctest.h"
#include "reassert/error.h"
#include "reassert/numcore/gradcheck.h"
#include "reassert/numcore/layers.h"
#include "reassert/numcore/optim.h"

using namespace reassert;
using namespace reassert::nn;
using doctest::Approx;

namespace {

Tensor<double> random_tensor(const std::string& name, Shape s, Rng& rng, double r = 1.0) {
  Tensor<double> t(name, s);
  fill_uniform(t, rng, -r, r);
  return t;
}

/// Random fixed linear functional so every output element affects the loss.
Var<double> probe(Var<double> v, std::uint64_t seed = 99) {
  Rng rng(seed);
  std::vector<double> w(v.size());
  for (auto& x : w) x = rng.uniform(-1, 1);
  return sum(mul(v, v.tape().constant(v.shape(), w)));
}

void check_grad(const std::vector<Tensor<double>*>& params,
                const std::function<Var<double>(Tape<double>&)>& f) {
  auto r = grad_check(params, f);
  CAPTURE(r.worst_param);
  CAPTURE(r.worst_index);
  CHECK(r.checked > 0);
  CHECK(r.max_rel_error < 1e-4);
}

}  // namespace

TEST_CASE("shapes") {
  Tape<double> t;
  auto a = t.constant({2, 3}, {1, 2, 3, 4, 5, 6});
  auto x = t.constant({3, 1}, {1, 0, -1});
  auto y = matmul(a, x);
  CHECK(y.shape() == Shape{2, 1});
  CHECK(y.value()[0] == -2);
  CHECK(y.value()[1] == -2);
  CHECK_THROWS_AS(matmul(x, a), ShapeError);
  try {
    add(a, x);
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[3x1]") != std::string::npos);
  }
  auto c = concat<double>({t.constant({2, 1}, {1, 2}), t.constant({3, 1}, {3, 4, 5})});
  CHECK(c.shape() == Shape{5, 1});
  CHECK(c.value()[4] == 5);
  CHECK(matmul_nt(a, a).shape() == Shape{2, 2});
  CHECK(matmul_tn(a, a).shape() == Shape{3, 3});
  CHECK(transpose(a).value()[1] == 4);
}

TEST_CASE("elementwise values") {
  Tape<double> t;
  auto z = t.constant({2, 1}, {0, 0});
  CHECK(tanh(z).value()[0] == 0.0);
  CHECK(sigmoid(z).value()[0] == 0.5);
  auto big = t.constant({2, 1}, {-800, 800});
  CHECK(sigmoid(big).value()[0] == Approx(0.0));
  CHECK(sigmoid(big).value()[1] == Approx(1.0));
}

TEST_CASE("softmax") {
  Tape<double> t;
  auto p = softmax(t.constant({2, 1}, {0, 0}));
  CHECK(p.value()[0] == 0.5);
  CHECK(p.value()[1] == 0.5);
  auto q = softmax(t.constant({2, 1}, {3.0, 1e30}), {1, 0});
  CHECK(q.value()[0] == 1.0);
  CHECK(q.value()[1] == 0.0);
  auto r = softmax(t.constant({3, 1}, {1, 2, 3}));
  CHECK(r.value()[0] == Approx(0.0900).epsilon(1e-3));
  CHECK(r.value()[1] == Approx(0.2447).epsilon(1e-3));
  CHECK(r.value()[2] == Approx(0.6652).epsilon(1e-3));
  double e1 = std::exp(1.0), e2 = std::exp(2.0), e3 = std::exp(3.0);
  CHECK(std::abs(r.value()[0] - e1 / (e1 + e2 + e3)) < 1e-12);
  CHECK_THROWS_AS(softmax(t.constant({2, 1}, {1, 2}), {0, 0}), Error);
  auto huge = softmax(t.constant({2, 1}, {1000, 1000}));
  CHECK(huge.value()[0] == Approx(0.5));

  auto rows = softmax_rows(t.constant({2, 3}, {1, 2, 3, 0, 0, 0}), {1, 1, 0});
  CHECK(rows.value()[2] == 0.0);
  CHECK(rows.value()[3] == 0.5);
  CHECK(rows.value()[0] + rows.value()[1] == Approx(1.0));
}

TEST_CASE("property: softmax sums to one and is non-negative") {
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    std::size_t n = 1 + rng.below(30);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-50, 50);
    std::vector<std::uint8_t> mask(n);
    for (auto& m : mask) m = rng.uniform() < 0.7;
    mask[rng.below(n)] = 1;
    Tape<double> t;
    auto p = softmax(t.constant({n, 1}, x), mask);
    double s = 0;
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(p.value()[k] >= 0.0);
      if (!mask[k]) CHECK(p.value()[k] == 0.0);
      s += p.value()[k];
    }
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
}

TEST_CASE("gradients accumulate additively") {
  Tensor<double> w("w", {2, 1});
  w.value = {1.0, 2.0};
  Tape<double> t;
  auto v = t.param(w);
  auto loss = add(sum(mul(v, v)), sum(v));
  t.backward(loss);
  CHECK(w.grad[0] == 3.0);
  CHECK(w.grad[1] == 5.0);
  Tape<double> t2;
  t2.backward(sum(t2.param(w)));
  CHECK(w.grad[0] == 4.0);
}

TEST_CASE("gradient check: core ops") {
  Rng rng(1);
  auto a = random_tensor("a", {3, 4}, rng);
  auto b = random_tensor("b", {4, 2}, rng);
  auto c = random_tensor("c", {3, 4}, rng);
  auto v = random_tensor("v", {4, 1}, rng);
  auto s = random_tensor("s", {1, 1}, rng);
  auto p = [](Tape<double>& t, Tensor<double>& x) { return t.param(x); };

  check_grad({&a, &b}, [&](Tape<double>& t) { return probe(matmul(p(t, a), p(t, b))); });
  check_grad({&a, &c}, [&](Tape<double>& t) { return probe(matmul_nt(p(t, a), p(t, c))); });
  check_grad({&a, &c}, [&](Tape<double>& t) { return probe(matmul_tn(p(t, a), p(t, c))); });
  check_grad({&a}, [&](Tape<double>& t) { return probe(transpose(p(t, a))); });
  check_grad({&a, &c}, [&](Tape<double>& t) { return probe(add(p(t, a), p(t, c))); });
  check_grad({&a, &c}, [&](Tape<double>& t) { return probe(mul(p(t, a), p(t, c))); });
  check_grad({&a, &v}, [&](Tape<double>& t) {
    return probe(add_bias_rows(p(t, a), slice_rows(p(t, v), 0, 4)));
  });
  check_grad({&a}, [&](Tape<double>& t) { return probe(affine(p(t, a), 2.5, -1.0)); });
  check_grad({&s, &v}, [&](Tape<double>& t) { return probe(scale(p(t, s), p(t, v))); });
  check_grad({&a}, [&](Tape<double>& t) { return probe(tanh(p(t, a))); });
  check_grad({&a}, [&](Tape<double>& t) { return probe(sigmoid(p(t, a))); });
  check_grad({&v}, [&](Tape<double>& t) { return probe(lstm_gate_activation(p(t, v))); });
  check_grad({&a, &c}, [&](Tape<double>& t) { return probe(concat<double>({p(t, a), p(t, c)})); });
  check_grad({&a, &c}, [&](Tape<double>& t) { return probe(concat_cols(p(t, a), p(t, c))); });
  check_grad({&a}, [&](Tape<double>& t) { return probe(slice_rows(p(t, a), 1, 2)); });
  check_grad({&a}, [&](Tape<double>& t) { return probe(row(p(t, a), 2)); });
  check_grad({&v, &s}, [&](Tape<double>& t) {
    return probe(stack_rows<double>({p(t, v), p(t, v), slice_rows(p(t, v), 0, 4)}));
  });
  check_grad({&a}, [&](Tape<double>& t) { return probe(lookup(p(t, a), {2, 0, 2})); });
  check_grad({&v}, [&](Tape<double>& t) { return probe(softmax(p(t, v))); });
  check_grad({&v}, [&](Tape<double>& t) { return probe(softmax(p(t, v), {1, 0, 1, 1})); });
  check_grad({&a}, [&](Tape<double>& t) { return probe(softmax_rows(p(t, a), {1, 1, 0, 1})); });
  check_grad({&v}, [&](Tape<double>& t) { return probe(scatter_add(p(t, v), {2, 0, 2, 5}, 6)); });
  check_grad({&a}, [&](Tape<double>& t) { return probe(pad_rows(p(t, a), 5)); });
  check_grad({&v}, [&](Tape<double>& t) { return neg_log(pick(softmax(p(t, v)), 1)); });
  check_grad({&a, &c}, [&](Tape<double>& t) { return probe(add_n<double>({p(t, a), p(t, c), p(t, a)})); });
}

TEST_CASE("neg_log clamps at eps") {
  Tensor<double> x("x", {1, 1});
  Tape<double> t;
  auto out = neg_log(t.param(x));
  CHECK(out.item() == Approx(-std::log(1e-10)));
  t.backward(out);
  CHECK(x.grad[0] == 0.0);
}

TEST_CASE("cross_entropy_masked") {
  Tape<double> t;
  auto onehot = t.constant({3, 1}, {0, 1, 0});
  CHECK(cross_entropy_masked(onehot, 1, false).item() == 0.0);
  auto uniform = t.constant({4, 1}, {0.25, 0.25, 0.25, 0.25});
  CHECK(cross_entropy_masked(uniform, 3, false).item() == Approx(1.3863).epsilon(1e-4));
  CHECK(cross_entropy_masked(uniform, 3, true).item() == 0.0);
}

TEST_CASE("gradient check: linear layer with cross entropy") {
  Rng rng(2);
  LinearParams<double> lin("lin", 5, 4);
  lin.init(rng, 0.5);
  fill_uniform(lin.b, rng, -0.5, 0.5);
  auto x = random_tensor("x", {5, 1}, rng);
  std::vector<Tensor<double>*> params = {&lin.w, &lin.b, &x};
  check_grad(params, [&](Tape<double>& t) {
    auto l = bind(t, lin);
    return cross_entropy_masked(softmax(l(t.param(x))), 2, false);
  });
}

TEST_CASE("lstm cell: zero weights") {
  LstmParams<double> p("cell", 3, 2);
  Tape<double> t;
  auto w = bind(t, p);
  auto x = t.constant({3, 1}, {1, -2, 3});
  auto s = lstm_cell_step(x, zero_state(t, 2), w);
  for (double v : s.h.value()) CHECK(v == 0.0);
  for (double v : s.c.value()) CHECK(v == 0.0);
  CHECK_THROWS_AS(lstm_cell_step(t.constant({2, 1}, {1, 2}), zero_state(t, 2), w), ShapeError);
}

TEST_CASE("lstm cell: scalar gate oracle") {
  Rng rng(3);
  const std::size_t in = 3, h = 2;
  LstmParams<double> p("cell", in, h);
  p.init(rng, 0.8);
  fill_uniform(p.b, rng, -0.5, 0.5);
  std::vector<double> x = {0.3, -0.7, 0.2}, h0 = {0.1, -0.4}, c0 = {0.5, 0.25};

  Tape<double> t;
  auto w = bind(t, p);
  auto s = lstm_cell_step(t.constant({in, 1}, x),
                          LstmState<double>{t.constant({h, 1}, h0), t.constant({h, 1}, c0)}, w);
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  for (std::size_t k = 0; k < h; ++k) {
    double pre[4];
    for (std::size_t g = 0; g < 4; ++g) {
      std::size_t r = g * h + k;
      pre[g] = p.b.value[r];
      for (std::size_t j = 0; j < in; ++j) pre[g] += p.w_x.value[r * in + j] * x[j];
      for (std::size_t j = 0; j < h; ++j) pre[g] += p.w_h.value[r * h + j] * h0[j];
    }
    double c = sig(pre[1]) * c0[k] + sig(pre[0]) * std::tanh(pre[2]);
    double hh = sig(pre[3]) * std::tanh(c);
    CHECK(s.c.value()[k] == Approx(c).epsilon(1e-12));
    CHECK(s.h.value()[k] == Approx(hh).epsilon(1e-12));
  }
}

TEST_CASE("lstm init sets forget bias") {
  Rng rng(0);
  LstmParams<float> p("l", 4, 3);
  p.init(rng, 0.1);
  for (std::size_t i = 0; i < 12; ++i) CHECK(p.b.value[i] == ((i >= 3 && i < 6) ? 1.0f : 0.0f));
  for (float v : p.w_x.value) CHECK(std::abs(v) <= 0.1f);
}

TEST_CASE("gradient check: lstm cell and bilstm") {
  Rng rng(5);
  LstmParams<double> f("fwd", 3, 2), b("bwd", 3, 2);
  f.init(rng, 0.5);
  b.init(rng, 0.5);
  auto x = random_tensor("x", {4, 3}, rng);
  auto h0 = random_tensor("h0", {2, 1}, rng);
  auto c0 = random_tensor("c0", {2, 1}, rng);
  std::vector<Tensor<double>*> cell_params = {&f.w_x, &f.w_h, &f.b, &h0, &c0, &x};
  check_grad(cell_params, [&](Tape<double>& t) {
    auto w = bind(t, f);
    auto s = lstm_cell_step(row(t.param(x), 1), {t.param(h0), t.param(c0)}, w);
    return add(probe(s.h), probe(s.c, 7));
  });
  std::vector<Tensor<double>*> bi_params = {&f.w_x, &f.w_h, &f.b, &b.w_x, &b.w_h, &b.b, &x};
  check_grad(bi_params, [&](Tape<double>& t) {
    auto run = bilstm_run(t.param(x), bind(t, f), bind(t, b));
    return add(probe(run.states), probe(run.backward_final.c, 3));
  });
}

TEST_CASE("bilstm layout") {
  Rng rng(6);
  LstmParams<double> f("f", 3, 4);
  f.init(rng, 0.5);
  SUBCASE("length one: both directions see one step") {
    Tape<double> t;
    auto w = bind(t, f);
    auto x = t.constant({1, 3}, {0.1, 0.2, 0.3});
    auto run = bilstm_run(x, w, w);
    REQUIRE(run.states.shape() == Shape{1, 8});
    auto step = lstm_cell_step(row(x, 0), zero_state(t, 4), w);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(run.states.value()[k] == step.h.value()[k]);
      CHECK(run.states.value()[4 + k] == step.h.value()[k]);
    }
  }
  SUBCASE("palindrome with tied weights mirrors states") {
    Tape<double> t;
    auto w = bind(t, f);
    std::vector<double> v = {0.1, 0.2, 0.3, -0.5, 0.4, 0.9, 0.1, 0.2, 0.3};
    auto run = bilstm_run(t.constant({3, 3}, v), w, w);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t k = 0; k < 4; ++k) {
        CHECK(run.states.value()[i * 8 + k] == Approx(run.states.value()[(2 - i) * 8 + 4 + k]).epsilon(1e-14));
      }
    }
  }
  SUBCASE("hidden 256 gives width 512") {
    LstmParams<float> big("big", 8, 256);
    Rng r(0);
    big.init(r, 0.1);
    Tape<float> t;
    auto w = bind(t, big);
    auto run = bilstm_run(t.zeros({5, 8}), w, w);
    CHECK(run.states.cols() == 512);
  }
  SUBCASE("empty sequence") {
    Tape<double> t;
    auto w = bind(t, f);
    CHECK_THROWS_AS(bilstm_run(std::vector<Var<double>>{}, w, w), Error);
  }
}

TEST_CASE("clip_global_norm") {
  Tensor<double> g("g", {2, 1});
  g.grad = {3, 4};
  std::vector<Tensor<double>*> ps = {&g};
  CHECK(clip_global_norm(ps, 5.0) == 5.0);
  CHECK(g.grad == std::vector<double>{3, 4});
  clip_global_norm(ps, 1.0);
  CHECK(g.grad[0] == Approx(0.6));
  CHECK(g.grad[1] == Approx(0.8));

  Tensor<double> small("s", {2, 1});
  small.grad = {1, 2};
  std::vector<Tensor<double>*> sp = {&small};
  clip_global_norm(sp, 5.0);
  CHECK(small.grad == std::vector<double>{1, 2});

  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor<float> a("a", {7, 3}), b("b", {5, 1});
    for (auto& x : a.grad) x = float(rng.uniform(-10, 10));
    for (auto& x : b.grad) x = float(rng.uniform(-10, 10));
    std::vector<Tensor<float>*> p = {&a, &b};
    double before = global_grad_norm(p);
    clip_global_norm(p, 5.0);
    double after = global_grad_norm(p);
    CHECK(after <= 5.0 + 1e-6 * 5.0 + 1e-5);
    CHECK(after <= before + 1e-9);
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters") {
    Tensor<double> w("w", {3, 1});
    w.value = {1, -2, 3};
    Adam<double> opt({&w});
    opt.step();
    CHECK(w.value == std::vector<double>{1, -2, 3});
  }
  SUBCASE("scalar oracle over two steps") {
    Tensor<double> w("w", {2, 1});
    w.value = {0.5, -0.5};
    Adam<double> opt({&w});
    const double lr = 0.001, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double m[2] = {0, 0}, v[2] = {0, 0}, x[2] = {0.5, -0.5};
    const double g[2] = {0.3, -2.0};
    for (int step = 1; step <= 2; ++step) {
      w.grad = {g[0], g[1]};
      opt.step();
      for (int k = 0; k < 2; ++k) {
        m[k] = b1 * m[k] + (1 - b1) * g[k];
        v[k] = b2 * v[k] + (1 - b2) * g[k] * g[k];
        double mh = m[k] / (1 - std::pow(b1, step)), vh = v[k] / (1 - std::pow(b2, step));
        x[k] -= lr * mh / (std::sqrt(vh) + eps);
        CHECK(opt.first_moment(0)[k] == Approx(m[k]).epsilon(1e-14));
        CHECK(opt.second_moment(0)[k] == Approx(v[k]).epsilon(1e-14));
        CHECK(w.value[k] == Approx(x[k]).epsilon(1e-14));
      }
      if (step == 1) {
        CHECK(w.value[0] == Approx(0.5 - lr).epsilon(1e-6));
        CHECK(w.value[1] == Approx(-0.5 + lr).epsilon(1e-6));
      }
    }
    CHECK(opt.step_count() == 2);
  }
  SUBCASE("frozen tensors are skipped") {
    Tensor<double> w("w", {1, 1}, false);
    w.value = {2};
    w.grad = {1};
    Adam<double> opt({&w});
    opt.step();
    CHECK(w.value[0] == 2);
  }
}

TEST_CASE("dropout") {
  Rng rng(9);
  Tape<double> t;
  std::vector<double> ones(20000, 1.0);
  auto x = t.constant({20000, 1}, ones);
  CHECK(dropout(x, 0.0, true, rng).id() == x.id());
  CHECK(dropout(x, 0.2, false, rng).id() == x.id());
  auto y = dropout(x, 0.2, true, rng);
  double mean = 0;
  std::size_t zeros = 0;
  for (double v : y.value()) {
    mean += v;
    zeros += v == 0.0;
    if (v != 0.0) CHECK(v == Approx(1.25));
  }
  mean /= 20000;
  CHECK(std::abs(mean - 1.0) < 0.02);
  CHECK(std::abs(double(zeros) / 20000 - 0.2) < 0.02);
  CHECK_THROWS_AS(dropout(x, 1.0, true, rng), Error);
}

TEST_CASE("fixed seed makes a training step bit-reproducible") {
  auto run = [] {
    Rng rng(12);
    LstmParams<float> p("l", 4, 3);
    p.init(rng, 0.1);
    Tape<float> t;
    auto w = bind(t, p);
    std::vector<float> xs(20);
    for (auto& v : xs) v = float(rng.uniform(-1, 1));
    auto x = dropout(t.constant({5, 4}, xs), 0.2, true, rng);
    auto run = lstm_run(x, w, false);
    t.backward(sum(run.states));
    Adam<float> opt(p.tensors());
    clip_global_norm(p.tensors(), 5.0);
    opt.step();
    return p.w_x.value;
  };
  CHECK(run() == run());
}

TEST_CASE("relative error scale") {
  CHECK(nn::relative_error(1.0, 1.1) == Approx(0.1 / 1.1));
  CHECK(nn::relative_error(-2e-3, 2e-3) == Approx(2.0));
  CHECK(nn::relative_error(1e-9, 2e-9) == Approx(1e-3));
  CHECK(nn::relative_error(0.0, 0.0) == 0.0);
}
