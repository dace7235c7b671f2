#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "genlab/autodiff.hpp"
#include "genlab/params.hpp"
#include "genlab/rng.hpp"

namespace genlab {

/// Feed-forward network: rectifier on hidden layers, identity on the output.
/// Weights are (d_in x d_out) so a batch of row vectors maps as X·W + b.
class Mlp {
 public:
  Mlp() = default;
  /// Registers "<name>.w<i>" / "<name>.b<i>" in `store`; weights uniform in
  /// ±sqrt(6/(fan_in+fan_out)), biases zero.
  Mlp(const std::string& name, std::vector<std::size_t> layer_dims, ParamStore& store, Rng& rng);

  /// Rebinds to parameters already present in `store` (e.g. a loaded
  /// checkpoint). Throws if names or shapes do not match.
  static Mlp attach(const std::string& name, std::vector<std::size_t> layer_dims,
                    const ParamStore& store);

  ad::Var forward(const BoundParams& params, ad::Var x) const;

  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  std::size_t param_count() const noexcept { return param_count(dims_); }

  static std::size_t param_count(const std::vector<std::size_t>& layer_dims) noexcept;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> weight_ids_;
  std::vector<std::size_t> bias_ids_;
};

}  // namespace genlab
