#pragma once

#include <functional>
#include <vector>

#include "genlab/tensor.hpp"

namespace genlab {

using LossFn = std::function<double(const std::vector<Tensor>&)>;

/// Central-difference estimate (f(p+h) - f(p-h)) / 2h for every coordinate of
/// every tensor in `params`. Throws std::invalid_argument unless step > 0.
std::vector<Tensor> finite_diff_grad(const LossFn& loss, std::vector<Tensor> params, double step);

/// |a - b| / max(|a|, |b|, floor). The floor keeps near-zero gradients from
/// turning difference-quotient rounding into a large relative error.
double relative_error(double a, double b, double floor = 1e-3);

/// Largest relative_error over all coordinates; tensors must match in shape.
double max_relative_error(const std::vector<Tensor>& a, const std::vector<Tensor>& b,
                          double floor = 1e-3);

}  // namespace genlab
