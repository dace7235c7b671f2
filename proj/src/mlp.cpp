#include "genlab/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace genlab {

namespace {
void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("an MLP needs input and output dims");
  for (auto d : dims) {
    if (d == 0) throw std::invalid_argument("MLP layer dims must be positive");
  }
}
}  // namespace

Mlp::Mlp(const std::string& name, std::vector<std::size_t> layer_dims, ParamStore& store,
         Rng& rng)
    : dims_(std::move(layer_dims)) {
  check_dims(dims_);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const std::size_t in = dims_[l], out = dims_[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Tensor w = Tensor::zeros(in, out);
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    weight_ids_.push_back(store.add(name + ".w" + std::to_string(l), std::move(w)));
    bias_ids_.push_back(store.add(name + ".b" + std::to_string(l), Tensor::zeros(1, out)));
  }
}

Mlp Mlp::attach(const std::string& name, std::vector<std::size_t> layer_dims,
                const ParamStore& store) {
  Mlp m;
  m.dims_ = std::move(layer_dims);
  check_dims(m.dims_);
  for (std::size_t l = 0; l + 1 < m.dims_.size(); ++l) {
    const auto wi = store.index_of(name + ".w" + std::to_string(l));
    const auto bi = store.index_of(name + ".b" + std::to_string(l));
    if (store.value(wi).shape() != Tensor::Shape{m.dims_[l], m.dims_[l + 1]} ||
        store.value(bi).shape() != Tensor::Shape{1, m.dims_[l + 1]}) {
      throw std::invalid_argument("parameter shapes for " + name + " do not match layer dims");
    }
    m.weight_ids_.push_back(wi);
    m.bias_ids_.push_back(bi);
  }
  return m;
}

ad::Var Mlp::forward(const BoundParams& params, ad::Var x) const {
  if (x.cols() != dims_.front()) {
    throw std::invalid_argument("MLP input has " + std::to_string(x.cols()) +
                                " columns, expected " + std::to_string(dims_.front()));
  }
  ad::Var h = x;
  for (std::size_t l = 0; l < weight_ids_.size(); ++l) {
    h = ad::add_row(ad::matmul(h, params[weight_ids_[l]]), params[bias_ids_[l]]);
    if (l + 1 < weight_ids_.size()) h = ad::relu(h);
  }
  return h;
}

std::size_t Mlp::param_count(const std::vector<std::size_t>& layer_dims) noexcept {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    n += (layer_dims[l] + 1) * layer_dims[l + 1];
  }
  return n;
}

}  // namespace genlab
