#include "genlab/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace genlab {

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam: params/grads count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape()) {
      throw std::invalid_argument("adam: gradient shape mismatch for parameter " +
                                  std::to_string(i));
    }
    if (!grads[i].all_finite()) throw std::domain_error("adam: non-finite gradient");
  }
  if (state.step < 0) throw std::invalid_argument("adam: negative step count");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.shape(), 0.0);
      state.second_moment.emplace_back(p.shape(), 0.0);
    }
  } else if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam: state does not match parameter list");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    auto m = state.first_moment[i].data();
    auto v = state.second_moment[i].data();
    if (m.size() != p.size()) throw std::invalid_argument("adam: moment shape mismatch");
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace genlab
