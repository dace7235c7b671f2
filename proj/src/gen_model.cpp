#include "genlab/gen_model.hpp"

#include <algorithm>
#include <stdexcept>

namespace genlab {

std::size_t ScenarioBatch::query_count() const {
  std::size_t n = 0;
  for (const auto& q : queries) n += q.count();
  return n;
}

namespace {

template <typename Sample, typename ValueOf>
std::vector<ChannelBatch> group(std::span<const Sample> samples, std::span<const std::size_t> dims,
                                std::size_t location_dim, ValueOf value_of, bool allow_empty,
                                bool canonical, const char* what) {
  std::vector<std::size_t> counts(dims.size(), 0);
  for (const auto& s : samples) {
    if (s.channel >= dims.size()) {
      throw std::invalid_argument(std::string(what) + " channel " + std::to_string(s.channel) +
                                  " out of range");
    }
    if (s.x.size() != location_dim) {
      throw std::invalid_argument(std::string(what) + " location has wrong dimension");
    }
    const auto& v = value_of(s);
    if (!(allow_empty && v.empty()) && v.size() != dims[s.channel]) {
      throw std::invalid_argument(std::string(what) + " value dimension does not match channel " +
                                  std::to_string(s.channel));
    }
    ++counts[s.channel];
  }
  std::vector<ChannelBatch> out(dims.size());
  std::vector<std::size_t> fill(dims.size(), 0);
  for (std::size_t c = 0; c < dims.size(); ++c) {
    out[c].locations = Tensor::zeros(counts[c], location_dim);
    out[c].values = Tensor::zeros(counts[c], dims[c]);
  }
  std::vector<const Sample*> order;
  for (const auto& s : samples) order.push_back(&s);
  if (canonical) {
    // Rows sorted by (location, value) so sums over inputs do not depend on
    // the order the samples arrived in.
    std::stable_sort(order.begin(), order.end(), [&](const Sample* a, const Sample* b) {
      if (a->x != b->x) return a->x < b->x;
      return value_of(*a) < value_of(*b);
    });
  }
  for (const Sample* sp : order) {
    const Sample& s = *sp;
    const std::size_t c = s.channel, r = fill[c]++;
    for (std::size_t d = 0; d < location_dim; ++d) out[c].locations(r, d) = s.x[d];
    const auto& v = value_of(s);
    for (std::size_t d = 0; d < v.size(); ++d) out[c].values(r, d) = v[d];
  }
  return out;
}

}  // namespace

ScenarioBatch make_batch(std::span<const InputSample> inputs,
                         std::span<const QuerySample> queries,
                         std::span<const std::size_t> input_dims,
                         std::span<const std::size_t> output_dims, std::size_t location_dim) {
  ScenarioBatch b;
  b.inputs = group(inputs, input_dims, location_dim,
                   [](const InputSample& s) -> const std::vector<double>& { return s.value; },
                   false, true, "input");
  b.queries = group(queries, output_dims, location_dim,
                    [](const QuerySample& s) -> const std::vector<double>& { return s.target; },
                    true, false, "query");
  return b;
}

nlohmann::json GenSpec::to_json() const {
  return {{"latent_dim", latent_dim},
          {"message_dim", message_dim},
          {"input_dims", input_dims},
          {"output_dims", output_dims},
          {"encoder_hidden", encoder_hidden},
          {"decoder_hidden", decoder_hidden},
          {"edge_hidden", edge_hidden},
          {"node_hidden", node_hidden},
          {"representation", representation_name(representation.kind)},
          {"temperature", representation.temperature}};
}

GenSpec GenSpec::from_json(const nlohmann::json& j) {
  GenSpec s;
  s.latent_dim = j.value("latent_dim", s.latent_dim);
  s.message_dim = j.value("message_dim", s.message_dim);
  s.input_dims = j.value("input_dims", s.input_dims);
  s.output_dims = j.value("output_dims", s.output_dims);
  s.encoder_hidden = j.value("encoder_hidden", s.encoder_hidden);
  s.decoder_hidden = j.value("decoder_hidden", s.decoder_hidden);
  s.edge_hidden = j.value("edge_hidden", s.edge_hidden);
  s.node_hidden = j.value("node_hidden", s.node_hidden);
  s.representation.kind =
      representation_from_name(j.value("representation", std::string("soft_nearest")));
  s.representation.temperature = j.value("temperature", 1.0);
  return s;
}

ad::Var message_passing_step(ad::Var states, const geometry::SpatialMesh& mesh,
                             const EdgeModule& edge, const NodeModule& node,
                             std::size_t message_dim) {
  const std::size_t n = mesh.node_count();
  if (states.rows() != n) {
    throw std::invalid_argument("message_passing_step: state rows != mesh node count");
  }
  ad::Tape& tape = *states.tape();
  ad::Var aggregated;
  if (mesh.edges.empty()) {
    aggregated = tape.constant(Tensor::zeros(n, message_dim));
  } else {
    const auto src = mesh.sources();
    const auto dst = mesh.targets();
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (src[i] >= n || dst[i] >= n) throw std::out_of_range("edge index out of range");
    }
    ad::Var messages = edge(ad::gather_rows(states, src), ad::gather_rows(states, dst));
    aggregated = ad::scatter_add_rows(messages, dst, n);
  }
  return node(states, aggregated);
}

RepWeights constant_rep_weights(ad::Tape& tape, const ScenarioBatch& batch,
                                const geometry::SpatialMesh& mesh, const RepresentationFn& rep) {
  RepWeights w;
  for (const auto& c : batch.inputs) {
    w.inputs.push_back(tape.constant(weight_matrix(c.locations, mesh, rep)));
  }
  for (const auto& c : batch.queries) {
    w.queries.push_back(tape.constant(weight_matrix(c.locations, mesh, rep)));
  }
  return w;
}

RepWeights positional_rep_weights(ad::Tape& tape, const ScenarioBatch& batch, ad::Var positions,
                                  geometry::MetricSpace space, double temperature) {
  RepWeights w;
  const std::size_t n = positions.rows();
  auto one = [&](const ChannelBatch& c) {
    if (c.count() == 0) return tape.constant(Tensor::zeros(0, n));
    return soft_nearest_weight_matrix(tape.constant(c.locations), positions, space, temperature);
  };
  for (const auto& c : batch.inputs) w.inputs.push_back(one(c));
  for (const auto& c : batch.queries) w.queries.push_back(one(c));
  return w;
}

GenModel::GenModel(GenSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  Rng rng(derive_seed(seed, 0x6e6e));
  build(&rng);
}

GenModel::GenModel(GenSpec spec, ParamStore params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  build(nullptr);
}

void GenModel::build(Rng* rng) {
  const auto& s = spec_;
  if (s.latent_dim == 0 || s.message_dim == 0) throw std::invalid_argument("empty latent space");
  auto make = [&](const std::string& name, std::vector<std::size_t> dims) {
    return rng ? Mlp(name, std::move(dims), params_, *rng)
               : Mlp::attach(name, std::move(dims), params_);
  };
  encoders_.clear();
  decoders_.clear();
  for (std::size_t c = 0; c < s.input_dims.size(); ++c) {
    encoders_.push_back(make("encoder" + std::to_string(c),
                             {s.input_dims[c], s.encoder_hidden, s.latent_dim}));
  }
  for (std::size_t c = 0; c < s.output_dims.size(); ++c) {
    decoders_.push_back(make("decoder" + std::to_string(c),
                             {s.latent_dim, s.decoder_hidden, s.output_dims[c]}));
  }
  edge_ = make("edge", {2 * s.latent_dim, s.edge_hidden, s.message_dim});
  node_ = make("node", {s.latent_dim + s.message_dim, s.node_hidden, s.latent_dim});
}

ad::Var GenModel::encode(const BoundParams& p, const ScenarioBatch& batch, const RepWeights& w,
                         std::size_t node_count) const {
  if (batch.inputs.size() != encoders_.size() || w.inputs.size() != encoders_.size()) {
    throw std::invalid_argument("encode: input channel count does not match the model");
  }
  ad::Tape* tape = p.vars.empty() ? nullptr : p.vars.front().tape();
  if (!tape) throw std::invalid_argument("encode: parameters are not bound to a tape");
  ad::Var z = tape->constant(Tensor::zeros(node_count, spec_.latent_dim));
  bool any = false;
  for (std::size_t c = 0; c < encoders_.size(); ++c) {
    if (batch.inputs[c].count() == 0) continue;
    ad::Var enc = encoders_[c].forward(p, tape->constant(batch.inputs[c].values));
    ad::Var contrib = ad::matmul_tn(w.inputs[c], enc);
    z = any ? ad::add(z, contrib) : contrib;
    any = true;
  }
  return z;
}

EdgeModule GenModel::edge_module(const BoundParams& p) const {
  return [this, &p](ad::Var src, ad::Var dst) { return edge_.forward(p, ad::concat_cols(src, dst)); };
}

NodeModule GenModel::node_module(const BoundParams& p) const {
  return [this, &p](ad::Var h, ad::Var u) { return node_.forward(p, ad::concat_cols(h, u)); };
}

ad::Var GenModel::propagate(const BoundParams& p, ad::Var states,
                            const geometry::SpatialMesh& mesh, std::size_t steps) const {
  const auto edge = edge_module(p);
  const auto node = node_module(p);
  for (std::size_t t = 0; t < steps; ++t) {
    states = message_passing_step(states, mesh, edge, node, spec_.message_dim);
  }
  return states;
}

ad::Var GenModel::decode(const BoundParams& p, ad::Var states, ad::Var query_weights,
                         std::size_t channel) const {
  if (channel >= decoders_.size()) throw std::invalid_argument("decode: invalid output channel");
  return decoders_[channel].forward(p, ad::matmul(query_weights, states));
}

ad::Var GenModel::decode_global(const BoundParams& p, ad::Var states, std::size_t channel) const {
  if (channel >= decoders_.size()) throw std::invalid_argument("decode: invalid output channel");
  return decoders_[channel].forward(p, ad::sum_rows(states));
}

std::vector<ad::Var> gen_forward(const GenModel& model, const BoundParams& p,
                                 const ScenarioBatch& batch, const RepWeights& w,
                                 const geometry::SpatialMesh& mesh, std::size_t steps) {
  ad::Var z = model.encode(p, batch, w, mesh.node_count());
  z = model.propagate(p, z, mesh, steps);
  std::vector<ad::Var> out;
  for (std::size_t c = 0; c < batch.queries.size(); ++c) {
    out.push_back(model.decode(p, z, w.queries.at(c), c));
  }
  return out;
}

std::vector<ad::Var> gen_global_forward(const GenModel& model, const BoundParams& p,
                                        const ScenarioBatch& batch, const RepWeights& w,
                                        const geometry::SpatialMesh& mesh, std::size_t steps) {
  ad::Var z = model.encode(p, batch, w, mesh.node_count());
  z = model.propagate(p, z, mesh, steps);
  std::vector<ad::Var> out;
  for (std::size_t c = 0; c < model.decoders().size(); ++c) {
    out.push_back(model.decode_global(p, z, c));
  }
  return out;
}

ad::Var scenario_loss(std::span<const ad::Var> predictions, const ScenarioBatch& batch) {
  if (predictions.size() != batch.queries.size()) {
    throw std::invalid_argument("scenario_loss: prediction/channel count mismatch");
  }
  const std::size_t total = batch.query_count();
  if (total == 0) throw std::invalid_argument("scenario_loss: empty query set");
  ad::Var loss;
  bool any = false;
  for (std::size_t c = 0; c < predictions.size(); ++c) {
    const std::size_t n = batch.queries[c].count();
    if (n == 0) continue;
    ad::Var term = ad::mse_loss(predictions[c], batch.queries[c].values);
    if (n != total) term = ad::scale(term, static_cast<double>(n) / static_cast<double>(total));
    loss = any ? ad::add(loss, term) : term;
    any = true;
  }
  return loss;
}

std::vector<Tensor> gen_predict(const GenModel& model, const ScenarioBatch& batch,
                                const geometry::SpatialMesh& mesh, std::size_t steps) {
  ad::Tape tape;
  const auto p = bind(tape, model.params(), false);
  const auto w = constant_rep_weights(tape, batch, mesh, model.spec().representation);
  std::vector<Tensor> out;
  for (auto v : gen_forward(model, p, batch, w, mesh, steps)) out.push_back(v.value());
  return out;
}

std::vector<Tensor> gen_global_predict(const GenModel& model, const ScenarioBatch& batch,
                                       const geometry::SpatialMesh& mesh, std::size_t steps) {
  ad::Tape tape;
  const auto p = bind(tape, model.params(), false);
  const auto w = constant_rep_weights(tape, batch, mesh, model.spec().representation);
  std::vector<Tensor> out;
  for (auto v : gen_global_forward(model, p, batch, w, mesh, steps)) out.push_back(v.value());
  return out;
}

std::size_t default_steps(std::size_t k) { return k >= 1 ? 2 * (k - 1) : 0; }

}  // namespace genlab
