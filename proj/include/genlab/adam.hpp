#pragma once

#include <cstdint>
#include <vector>

#include "genlab/tensor.hpp"

namespace genlab {

struct AdamState {
  std::int64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  double learning_rate = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(double lr = 3e-3) : learning_rate(lr) {}
};

/// Bias-corrected Adam update applied in place. Moments are allocated on the
/// first call. Throws std::invalid_argument on shape mismatch and
/// std::domain_error on a non-finite gradient (parameters are left untouched).
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state);

}  // namespace genlab
