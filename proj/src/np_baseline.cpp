#include "genlab/np_baseline.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace genlab {

std::size_t NpSpec::encoder_input_dim() const {
  const std::size_t max_value =
      input_dims.empty() ? 0 : *std::max_element(input_dims.begin(), input_dims.end());
  return location_dim + input_dims.size() + max_value;
}

namespace {
std::vector<std::size_t> encoder_dims(const NpSpec& s) {
  std::vector<std::size_t> d{s.encoder_input_dim()};
  d.insert(d.end(), s.encoder_hidden.begin(), s.encoder_hidden.end());
  d.push_back(s.latent_dim);
  return d;
}

std::vector<std::size_t> decoder_dims(const NpSpec& s, std::size_t out) {
  std::vector<std::size_t> d{s.latent_dim + (s.concat_query ? s.location_dim : 0)};
  d.insert(d.end(), s.decoder_hidden.begin(), s.decoder_hidden.end());
  d.push_back(out);
  return d;
}
}  // namespace

std::size_t NpSpec::param_count() const {
  std::size_t n = Mlp::param_count(encoder_dims(*this));
  for (auto o : output_dims) n += Mlp::param_count(decoder_dims(*this, o));
  return n;
}

NpSpec NpSpec::matched(std::size_t location_dim, std::vector<std::size_t> input_dims,
                       std::vector<std::size_t> output_dims, std::size_t target_params) {
  NpSpec best;
  std::size_t best_gap = SIZE_MAX;
  for (std::size_t w = 4; w <= 512; ++w) {
    NpSpec s;
    s.location_dim = location_dim;
    s.input_dims = input_dims;
    s.output_dims = output_dims;
    s.encoder_hidden = {w, w};
    s.latent_dim = w;
    s.decoder_hidden = {w, w};
    const std::size_t n = s.param_count();
    const std::size_t gap = n > target_params ? n - target_params : target_params - n;
    if (gap < best_gap) {
      best_gap = gap;
      best = s;
    }
  }
  return best;
}

nlohmann::json NpSpec::to_json() const {
  return {{"location_dim", location_dim},   {"input_dims", input_dims},
          {"output_dims", output_dims},     {"encoder_hidden", encoder_hidden},
          {"latent_dim", latent_dim},       {"decoder_hidden", decoder_hidden},
          {"concat_query", concat_query}};
}

NpSpec NpSpec::from_json(const nlohmann::json& j) {
  NpSpec s;
  s.location_dim = j.value("location_dim", s.location_dim);
  s.input_dims = j.value("input_dims", s.input_dims);
  s.output_dims = j.value("output_dims", s.output_dims);
  s.encoder_hidden = j.value("encoder_hidden", s.encoder_hidden);
  s.latent_dim = j.value("latent_dim", s.latent_dim);
  s.decoder_hidden = j.value("decoder_hidden", s.decoder_hidden);
  s.concat_query = j.value("concat_query", s.concat_query);
  return s;
}

NpBaseline::NpBaseline(NpSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  Rng rng(derive_seed(seed, 0x6e70));
  build(&rng);
}

NpBaseline::NpBaseline(NpSpec spec, ParamStore params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  build(nullptr);
}

void NpBaseline::build(Rng* rng) {
  auto make = [&](const std::string& name, std::vector<std::size_t> dims) {
    return rng ? Mlp(name, std::move(dims), params_, *rng)
               : Mlp::attach(name, std::move(dims), params_);
  };
  encoder_ = make("np_encoder", encoder_dims(spec_));
  decoders_.clear();
  for (std::size_t c = 0; c < spec_.output_dims.size(); ++c) {
    decoders_.push_back(make("np_decoder" + std::to_string(c), decoder_dims(spec_, spec_.output_dims[c])));
  }
}

ad::Var NpBaseline::aggregate(const BoundParams& p, const ScenarioBatch& batch) const {
  if (batch.inputs.size() != spec_.input_dims.size()) {
    throw std::invalid_argument("np: input channel count does not match the model");
  }
  ad::Tape* tape = p.vars.front().tape();
  std::size_t total = 0;
  for (const auto& c : batch.inputs) total += c.count();
  if (total == 0) return tape->constant(Tensor::zeros(1, spec_.latent_dim));
  const std::size_t width = spec_.encoder_input_dim();
  const std::size_t nch = spec_.input_dims.size();
  Tensor features = Tensor::zeros(total, width);
  std::size_t row = 0;
  for (std::size_t c = 0; c < nch; ++c) {
    const auto& cb = batch.inputs[c];
    for (std::size_t i = 0; i < cb.count(); ++i, ++row) {
      for (std::size_t d = 0; d < spec_.location_dim; ++d) features(row, d) = cb.locations(i, d);
      features(row, spec_.location_dim + c) = 1.0;
      for (std::size_t d = 0; d < cb.values.cols(); ++d) {
        features(row, spec_.location_dim + nch + d) = cb.values(i, d);
      }
    }
  }
  return ad::sum_rows(encoder_.forward(p, tape->constant(std::move(features))));
}

std::vector<ad::Var> NpBaseline::forward(const BoundParams& p, const ScenarioBatch& batch) const {
  ad::Tape* tape = p.vars.front().tape();
  ad::Var r = aggregate(p, batch);
  std::vector<ad::Var> out;
  for (std::size_t c = 0; c < batch.queries.size(); ++c) {
    const auto& q = batch.queries[c];
    const std::size_t m = q.count();
    Tensor ones = Tensor::zeros(m, 1);
    for (double& v : ones.data()) v = 1.0;
    ad::Var tiled = ad::matmul(tape->constant(std::move(ones)), r);
    ad::Var in = spec_.concat_query ? ad::concat_cols(tape->constant(q.locations), tiled) : tiled;
    out.push_back(decoders_.at(c).forward(p, in));
  }
  return out;
}

std::vector<ad::Var> np_baseline_forward(const NpBaseline& model, const BoundParams& p,
                                         const ScenarioBatch& batch) {
  return model.forward(p, batch);
}

std::vector<Tensor> np_predict(const NpBaseline& model, const ScenarioBatch& batch) {
  ad::Tape tape;
  const auto p = bind(tape, model.params(), false);
  std::vector<Tensor> out;
  for (auto v : model.forward(p, batch)) out.push_back(v.value());
  return out;
}

}  // namespace genlab
