#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace reassert::nn {

/// 2-D row-major shape. Vectors are columns (rows x 1).
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 1;

  std::size_t size() const { return rows * cols; }
  std::string str() const {
    return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Named trainable (or frozen) array with a gradient accumulator.
template <typename T>
struct Tensor {
  std::string name;
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = true;

  Tensor() = default;
  Tensor(std::string n, Shape s, bool trainable = true)
      : name(std::move(n)),
        shape(s),
        value(s.size(), T(0)),
        grad(s.size(), T(0)),
        requires_grad(trainable) {}

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

/// Seeded source for initialization, shuffling and dropout. Draws come from
/// raw mt19937_64 bits, identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

template <typename T>
void fill_uniform(Tensor<T>& t, Rng& rng, double lo, double hi) {
  for (auto& v : t.value) v = static_cast<T>(rng.uniform(lo, hi));
}

}  // namespace reassert::nn
