#pragma once

// Neural Process baseline: a permutation-invariant set encoder. Each sample
// (x, one-hot channel, value) is embedded, embeddings are summed, and the sum
// is decoded together with the query location.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "genlab/gen_model.hpp"

namespace genlab {

struct NpSpec {
  std::size_t location_dim = 2;
  std::vector<std::size_t> input_dims{3, 3};
  std::vector<std::size_t> output_dims{1};
  std::vector<std::size_t> encoder_hidden{56, 56};
  std::size_t latent_dim = 56;
  std::vector<std::size_t> decoder_hidden{56, 56};
  /// When false the decoder sees only the aggregate (the single-node GEN form).
  bool concat_query = true;

  std::size_t encoder_input_dim() const;
  std::size_t param_count() const;

  /// Uniform width w for every hidden layer and the latent, chosen so the
  /// parameter count is as close as possible to `target_params`.
  static NpSpec matched(std::size_t location_dim, std::vector<std::size_t> input_dims,
                        std::vector<std::size_t> output_dims, std::size_t target_params);

  nlohmann::json to_json() const;
  static NpSpec from_json(const nlohmann::json& j);
  bool operator==(const NpSpec&) const = default;
};

class NpBaseline {
 public:
  NpBaseline(NpSpec spec, std::uint64_t seed);
  NpBaseline(NpSpec spec, ParamStore params);

  const NpSpec& spec() const noexcept { return spec_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  std::size_t param_count() const noexcept { return params_.scalar_count(); }

  /// Sum of encoder outputs over all input samples (1 x latent).
  ad::Var aggregate(const BoundParams& p, const ScenarioBatch& batch) const;
  /// One prediction tensor per output channel.
  std::vector<ad::Var> forward(const BoundParams& p, const ScenarioBatch& batch) const;

  const Mlp& encoder() const noexcept { return encoder_; }
  const std::vector<Mlp>& decoders() const noexcept { return decoders_; }

 private:
  void build(Rng* rng);

  NpSpec spec_;
  ParamStore params_;
  Mlp encoder_;
  std::vector<Mlp> decoders_;
};

std::vector<ad::Var> np_baseline_forward(const NpBaseline& model, const BoundParams& p,
                                         const ScenarioBatch& batch);
std::vector<Tensor> np_predict(const NpBaseline& model, const ScenarioBatch& batch);

}  // namespace genlab
