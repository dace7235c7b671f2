#pragma once

// Graph Element Network: input samples are scattered onto mesh nodes through
// a representation function, propagated by T rounds of message passing, and
// read back out at query locations by interpolating node states and decoding.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "genlab/autodiff.hpp"
#include "genlab/geometry.hpp"
#include "genlab/mlp.hpp"
#include "genlab/params.hpp"
#include "genlab/representation.hpp"

namespace genlab {

/// (x, i, s): value s of input channel i observed at location x.
struct InputSample {
  std::vector<double> x;
  std::size_t channel = 0;
  std::vector<double> value;
  bool operator==(const InputSample&) const = default;
};

/// Location x where output channel j is queried; target is empty at inference.
struct QuerySample {
  std::vector<double> x;
  std::size_t channel = 0;
  std::vector<double> target;
  bool operator==(const QuerySample&) const = default;
};

/// Samples of one channel stacked row-wise.
struct ChannelBatch {
  Tensor locations;  // count x space dim
  Tensor values;     // count x channel dim (inputs: values, queries: targets)
  std::size_t count() const { return locations.empty() ? 0 : locations.rows(); }
};

/// A scenario grouped by channel, ready for batched evaluation.
struct ScenarioBatch {
  std::vector<ChannelBatch> inputs;   // one per input channel
  std::vector<ChannelBatch> queries;  // one per output channel
  std::size_t query_count() const;
};

/// Groups samples by channel. Throws std::invalid_argument for an invalid
/// channel, a value/target of the wrong dimension, or a location of the wrong
/// dimension. Queries without targets get zero targets. Input rows are put
/// in a canonical order; query rows keep their order.
ScenarioBatch make_batch(std::span<const InputSample> inputs,
                         std::span<const QuerySample> queries,
                         std::span<const std::size_t> input_dims,
                         std::span<const std::size_t> output_dims, std::size_t location_dim);

struct GenSpec {
  std::size_t latent_dim = 32;
  std::size_t message_dim = 16;
  std::vector<std::size_t> input_dims{3, 3};
  std::vector<std::size_t> output_dims{1};
  std::size_t encoder_hidden = 48;
  std::size_t decoder_hidden = 32;
  std::size_t edge_hidden = 48;
  std::size_t node_hidden = 64;
  RepresentationFn representation;

  nlohmann::json to_json() const;
  static GenSpec from_json(const nlohmann::json& j);
  bool operator==(const GenSpec&) const = default;
};

/// Batched module signatures: rows are edges (edge module) or nodes (node module).
using EdgeModule = std::function<ad::Var(ad::Var source_states, ad::Var target_states)>;
using NodeModule = std::function<ad::Var(ad::Var states, ad::Var aggregated)>;

/// One round: m_ij = edge(h_i, h_j) per directed edge (i, j), u_j = Σ_i m_ij,
/// h_j' = node(h_j, u_j). A graph without edges aggregates zeros of the
/// message width `message_dim`.
ad::Var message_passing_step(ad::Var states, const geometry::SpatialMesh& mesh,
                             const EdgeModule& edge, const NodeModule& node,
                             std::size_t message_dim);

/// Per-channel representation weight matrices for one scenario on one mesh.
struct RepWeights {
  std::vector<ad::Var> inputs;   // m_c x n per input channel
  std::vector<ad::Var> queries;  // q_c x n per output channel
};

/// Constant weight matrices (no gradient w.r.t. positions).
RepWeights constant_rep_weights(ad::Tape& tape, const ScenarioBatch& batch,
                                const geometry::SpatialMesh& mesh, const RepresentationFn& rep);
/// Soft-nearest weights that differentiate through `positions` (n x dim).
RepWeights positional_rep_weights(ad::Tape& tape, const ScenarioBatch& batch, ad::Var positions,
                                  geometry::MetricSpace space, double temperature);

class GenModel {
 public:
  /// Fresh parameters drawn from `seed`.
  GenModel(GenSpec spec, std::uint64_t seed);
  /// Wraps existing parameters (e.g. a checkpoint); validates names and shapes.
  GenModel(GenSpec spec, ParamStore params);

  const GenSpec& spec() const noexcept { return spec_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  std::size_t param_count() const noexcept { return params_.scalar_count(); }

  /// z⁰ = Σ_c R_cᵀ e_c(S_c), an n x latent matrix.
  ad::Var encode(const BoundParams& p, const ScenarioBatch& batch, const RepWeights& w,
                 std::size_t node_count) const;
  ad::Var propagate(const BoundParams& p, ad::Var states, const geometry::SpatialMesh& mesh,
                    std::size_t steps) const;
  /// d_j(R_q z) for output channel j.
  ad::Var decode(const BoundParams& p, ad::Var states, ad::Var query_weights,
                 std::size_t channel) const;
  /// d_j applied to the sum of all node states (1 x output dim).
  ad::Var decode_global(const BoundParams& p, ad::Var states, std::size_t channel) const;

  EdgeModule edge_module(const BoundParams& p) const;
  NodeModule node_module(const BoundParams& p) const;

  const std::vector<Mlp>& encoders() const noexcept { return encoders_; }
  const std::vector<Mlp>& decoders() const noexcept { return decoders_; }
  const Mlp& edge_mlp() const noexcept { return edge_; }
  const Mlp& node_mlp() const noexcept { return node_; }

 private:
  void build(Rng* rng);

  GenSpec spec_;
  ParamStore params_;
  std::vector<Mlp> encoders_;
  std::vector<Mlp> decoders_;
  Mlp edge_;
  Mlp node_;
};

/// Encode, T message-passing rounds, decode every query channel.
std::vector<ad::Var> gen_forward(const GenModel& model, const BoundParams& p,
                                 const ScenarioBatch& batch, const RepWeights& w,
                                 const geometry::SpatialMesh& mesh, std::size_t steps);

/// Encode, propagate, then decode the summed node states (one row per output channel).
std::vector<ad::Var> gen_global_forward(const GenModel& model, const BoundParams& p,
                                        const ScenarioBatch& batch, const RepWeights& w,
                                        const geometry::SpatialMesh& mesh, std::size_t steps);

/// Mean squared error over all queries of all channels.
ad::Var scenario_loss(std::span<const ad::Var> predictions, const ScenarioBatch& batch);

/// Tape-free inference helpers; return one tensor per output channel.
std::vector<Tensor> gen_predict(const GenModel& model, const ScenarioBatch& batch,
                                const geometry::SpatialMesh& mesh, std::size_t steps);
std::vector<Tensor> gen_global_predict(const GenModel& model, const ScenarioBatch& batch,
                                       const geometry::SpatialMesh& mesh, std::size_t steps);

/// Message-passing rounds for an order-k mesh: the grid diameter 2(k-1).
std::size_t default_steps(std::size_t k);

}  // namespace genlab
