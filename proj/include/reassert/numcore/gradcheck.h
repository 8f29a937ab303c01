#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "reassert/numcore/tape.h"

namespace reassert::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// |a - n| / max(|a|, |n|, floor): gradients below `floor` are compared on
/// an absolute scale, where finite differences are dominated by rounding.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

/// Compares reverse-mode gradients of the scalar built by `loss` against
/// fourth-order central differences with step h, over every element of every tensor in
/// `params`. `loss` must be deterministic (reseed any dropout inside it).
inline GradCheckResult grad_check(const std::vector<Tensor<double>*>& params,
                                  const std::function<Var<double>(Tape<double>&)>& loss,
                                  double h = 1e-4) {
  for (auto* p : params) p->zero_grad();
  {
    Tape<double> tape;
    auto out = loss(tape);
    tape.backward(out);
  }
  auto eval = [&] {
    Tape<double> tape(false);
    return loss(tape).item();
  };
  GradCheckResult result;
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double saved = p->value[i];
      auto at = [&](double offset) {
        p->value[i] = saved + offset;
        return eval();
      };
      const double numeric = (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h);
      p->value[i] = saved;
      const double err = relative_error(p->grad[i], numeric);
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = p->name;
        result.worst_index = i;
        result.worst_analytic = p->grad[i];
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace reassert::nn
