#include "genlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace genlab {

std::vector<Tensor> finite_diff_grad(const LossFn& loss, std::vector<Tensor> params, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (auto& p : params) grads.emplace_back(p.shape(), 0.0);
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double orig = params[t][i];
      params[t][i] = orig + step;
      const double up = loss(params);
      params[t][i] = orig - step;
      const double down = loss(params);
      params[t][i] = orig;
      grads[t][i] = (up - down) / (2.0 * step);
    }
  }
  return grads;
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double max_relative_error(const std::vector<Tensor>& a, const std::vector<Tensor>& b,
                          double floor) {
  if (a.size() != b.size()) throw std::invalid_argument("max_relative_error: count mismatch");
  double worst = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].shape() != b[t].shape()) throw std::invalid_argument("max_relative_error: shape");
    for (std::size_t i = 0; i < a[t].size(); ++i) {
      worst = std::max(worst, relative_error(a[t][i], b[t][i], floor));
    }
  }
  return worst;
}

}  // namespace genlab
