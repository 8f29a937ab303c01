#pragma once

#include <cmath>
#include <vector>

#include "reassert/numcore/tensor.h"

namespace reassert::nn {

/// L2 norm over every gradient of every tensor.
template <typename T>
double global_grad_norm(const std::vector<Tensor<T>*>& params) {
  double sq = 0.0;
  for (const auto* p : params) {
    for (T g : p->grad) sq += double(g) * double(g);
  }
  return std::sqrt(sq);
}

/// Rescales all gradients by threshold/norm when the global norm exceeds the
/// threshold. Returns the norm before clipping.
template <typename T>
double clip_global_norm(const std::vector<Tensor<T>*>& params, double threshold) {
  const double norm = global_grad_norm(params);
  if (norm > threshold && norm > 0.0) {
    const T k = T(threshold / norm);
    for (auto* p : params) {
      for (auto& g : p->grad) g *= k;
    }
  }
  return norm;
}

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Frozen tensors (requires_grad false) are skipped.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>*> params, AdamConfig config = {})
      : params_(std::move(params)), config_(config) {
    for (auto* p : params_) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }

  const AdamConfig& config() const { return config_; }
  long step_count() const { return t_; }
  const std::vector<double>& first_moment(std::size_t i) const { return m_[i]; }
  const std::vector<double>& second_moment(std::size_t i) const { return v_[i]; }

  void step() {
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, double(t_));
    const double c2 = 1.0 - std::pow(b2, double(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto* p = params_[k];
      if (!p->requires_grad) continue;
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p->size(); ++i) {
        const double g = double(p->grad[i]);
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        p->value[i] -= T(config_.lr * mhat / (std::sqrt(vhat) + config_.eps));
      }
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

 private:
  std::vector<Tensor<T>*> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

}  // namespace reassert::nn
