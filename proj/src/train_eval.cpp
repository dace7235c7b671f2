#include "genlab/train_eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "genlab/adam.hpp"
#include "genlab/gradcheck.hpp"
#include "genlab/rng.hpp"

namespace genlab::train {

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Constant representation weights per (scenario, mesh), computed on first use.
class WeightCache {
 public:
  WeightCache(const std::vector<ScenarioBatch>& scenarios, const std::vector<MeshConfig>& meshes,
              RepresentationFn rep, bool queries)
      : scenarios_(scenarios), meshes_(meshes), rep_(rep), queries_(queries),
        slots_(scenarios.size() * meshes.size()) {}

  RepWeights get(ad::Tape& tape, std::size_t scenario, std::size_t mesh) {
    auto& slot = slots_[scenario * meshes_.size() + mesh];
    if (!slot) {
      Entry e;
      const auto& b = scenarios_[scenario];
      const auto& m = meshes_[mesh].mesh;
      for (const auto& c : b.inputs) e.inputs.push_back(weight_matrix(c.locations, m, rep_));
      if (queries_) {
        for (const auto& c : b.queries) e.queries.push_back(weight_matrix(c.locations, m, rep_));
      }
      slot = std::move(e);
    }
    RepWeights w;
    for (const auto& t : slot->inputs) w.inputs.push_back(tape.constant(t));
    for (const auto& t : slot->queries) w.queries.push_back(tape.constant(t));
    return w;
  }

 private:
  struct Entry {
    std::vector<Tensor> inputs, queries;
  };
  const std::vector<ScenarioBatch>& scenarios_;
  const std::vector<MeshConfig>& meshes_;
  RepresentationFn rep_;
  bool queries_;
  std::vector<std::optional<Entry>> slots_;
};

double scheduled_lr(const TrainConfig& c, std::size_t step, std::size_t total) {
  if (c.final_lr_fraction == 1.0 || total < 2) return c.learning_rate;
  const double t = static_cast<double>(step) / static_cast<double>(total - 1);
  const double f = c.final_lr_fraction + (1.0 - c.final_lr_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  return c.learning_rate * f;
}

void clip_gradients(std::vector<Tensor>& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto& g : grads)
    for (double v : g.values()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!(norm > max_norm)) return;
  const double s = max_norm / norm;
  for (auto& g : grads)
    for (double& v : g.data()) v *= s;
}

/// Shared epoch loop: `step_loss` builds the loss of one scenario on the tape.
template <class StepLoss>
void run_training(ParamStore& params, std::size_t n, const TrainConfig& config,
                  std::size_t mesh_count, TrainHistory* history, const EpochCallback& on_epoch,
                  StepLoss&& step_loss) {
  config.validate();
  if (n == 0) throw std::invalid_argument("training needs at least one scenario");
  AdamState adam(config.learning_rate);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(config.seed, 0x7472));
  std::size_t step = 0;
  const std::size_t total_steps = config.epochs * ((n + config.batch_size - 1) / config.batch_size);
  const auto t0 = Clock::now();
  TrainHistory local;
  TrainHistory& h = history ? *history : local;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    double total = 0.0;
    for (std::size_t b = 0; b < n; b += config.batch_size) {
      const std::size_t e = std::min(n, b + config.batch_size);
      const std::size_t mesh = mesh_count ? step % mesh_count : 0;
      ad::Tape tape;
      const BoundParams p = bind(tape, params, true);
      double value = 0.0;
      try {
        ad::Var loss;
        for (std::size_t i = b; i < e; ++i) {
          ad::Var l = step_loss(tape, p, order[i], mesh);
          loss = i == b ? l : ad::add(loss, l);
        }
        if (e - b > 1) loss = ad::scale(loss, 1.0 / static_cast<double>(e - b));
        value = loss.value()(0, 0);
        if (!std::isfinite(value)) throw std::domain_error("non-finite loss");
        tape.backward(loss);
        auto grads = collect_gradients(tape, p);
        clip_gradients(grads, config.grad_clip);
        adam.learning_rate = scheduled_lr(config, step, total_steps);
        adam_step(params.values(), grads, adam);
      } catch (const std::domain_error& err) {
        throw TrainingError("training diverged at epoch " + std::to_string(epoch + 1) +
                            ", step " + std::to_string(step) + ", mesh config " +
                            std::to_string(mesh) + ": " + err.what());
      }
      total += value * static_cast<double>(e - b);
      ++step;
    }
    h.epochs.push_back({epoch + 1, total / static_cast<double>(n), seconds_since(t0)});
    if (on_epoch) on_epoch(epoch + 1, h);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !(position_learning_rate >= 0.0)) {
    throw std::invalid_argument("learning rates must be non-negative");
  }
  for (std::size_t k : mesh_sizes)
    if (k < 2) throw std::invalid_argument("mesh sizes must be >= 2");
  if (!(final_lr_fraction >= 0.0 && final_lr_fraction <= 1.0)) {
    throw std::invalid_argument("final_lr_fraction must lie in [0, 1]");
  }
  if (!(grad_clip >= 0.0)) throw std::invalid_argument("grad_clip must be non-negative");
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j{{"epochs", epochs},
                   {"batch_size", batch_size},
                   {"learning_rate", learning_rate},
                   {"position_learning_rate", position_learning_rate},
                   {"mesh_sizes", mesh_sizes},
                   {"seed", seed},
                   {"final_lr_fraction", final_lr_fraction},
                   {"grad_clip", grad_clip},
                   {"position_steps", position_steps},
                   {"position_scenarios", position_scenarios},
                   {"mesh_cycling", "per_batch"}};
  j["message_steps"] = message_steps ? nlohmann::json(*message_steps) : nlohmann::json("2(k-1)");
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.position_learning_rate = j.value("position_learning_rate", c.position_learning_rate);
  c.mesh_sizes = j.value("mesh_sizes", c.mesh_sizes);
  c.seed = j.value("seed", c.seed);
  c.final_lr_fraction = j.value("final_lr_fraction", c.final_lr_fraction);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  c.position_steps = j.value("position_steps", c.position_steps);
  c.position_scenarios = j.value("position_scenarios", c.position_scenarios);
  if (j.contains("message_steps") && j["message_steps"].is_number_unsigned()) {
    c.message_steps = j["message_steps"].get<std::size_t>();
  }
  c.validate();
  return c;
}

double sft_loss(const Tensor& predictions, const Tensor& targets) {
  if (predictions.shape() != targets.shape()) throw std::invalid_argument("sft_loss: shape mismatch");
  if (predictions.empty()) throw std::invalid_argument("sft_loss: empty query set");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    s += d * d;
  }
  return s / static_cast<double>(predictions.rows());
}

MeshConfig mesh_config(geometry::SpatialMesh mesh, std::optional<std::size_t> steps) {
  const std::size_t t = steps ? *steps : default_steps(mesh.order);
  return {std::move(mesh), t};
}

std::vector<MeshConfig> grid_mesh_configs(geometry::MetricSpace space,
                                          const std::vector<std::size_t>& sizes,
                                          std::optional<std::size_t> steps) {
  std::vector<MeshConfig> out;
  for (std::size_t k : sizes) out.push_back(mesh_config(geometry::grid_mesh(space, k), steps));
  return out;
}

geometry::SpatialMesh halton_mesh(std::size_t n, std::uint64_t seed) {
  auto mesh = geometry::delaunay(geometry::halton_points(n, 2, seed));
  mesh.order = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n))));
  return mesh;
}

ScenarioBatch to_batch(const data::Scenario& s, const data::DatasetManifest& m) {
  return make_batch(s.inputs, s.queries, m.input_dims, m.output_dims, m.space.dim());
}

std::vector<ScenarioBatch> house_batches(const data::Dataset& d, const data::House& house) {
  std::vector<ScenarioBatch> out;
  for (const auto& s : house.scenarios) out.push_back(to_batch(s, d.manifest));
  return out;
}

std::vector<ScenarioBatch> split_batches(const data::Dataset& d, const std::string& split) {
  std::vector<ScenarioBatch> out;
  for (const auto* h : d.split(split)) {
    auto b = house_batches(d, *h);
    std::move(b.begin(), b.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<GlobalSample> global_samples(const data::Dataset& d, const std::string& split) {
  if (d.manifest.kind != data::DatasetKind::GlobalIntegral) {
    throw std::invalid_argument("global_samples needs a global-task dataset");
  }
  std::vector<GlobalSample> out;
  for (const auto* h : d.split(split)) {
    for (const auto& s : h->scenarios) {
      GlobalSample g;
      g.batch = make_batch(s.inputs, {}, d.manifest.input_dims, d.manifest.output_dims,
                           d.manifest.space.dim());
      g.targets.resize(d.manifest.output_dims.size());
      for (const auto& q : s.queries) g.targets.at(q.channel) = Tensor::matrix(1, q.target.size(), q.target);
      out.push_back(std::move(g));
    }
  }
  return out;
}

std::string TrainHistory::to_csv() const {
  std::string out = "epoch,loss,wall_s\n";
  for (const auto& p : epochs) out += std::to_string(p.epoch) + "," + fmt(p.loss) + "," + fmt(p.wall_s) + "\n";
  return out;
}

void train_gen(GenModel& model, const std::vector<ScenarioBatch>& scenarios,
               const std::vector<MeshConfig>& meshes, const TrainConfig& config,
               TrainHistory* history, const EpochCallback& on_epoch) {
  if (meshes.empty()) throw std::invalid_argument("train_gen needs at least one mesh");
  WeightCache cache(scenarios, meshes, model.spec().representation, true);
  run_training(model.params(), scenarios.size(), config, meshes.size(), history, on_epoch,
               [&](ad::Tape& tape, const BoundParams& p, std::size_t i, std::size_t m) {
                 const auto w = cache.get(tape, i, m);
                 const auto pred = gen_forward(model, p, scenarios[i], w, meshes[m].mesh, meshes[m].steps);
                 return scenario_loss(pred, scenarios[i]);
               });
}

void train_np(NpBaseline& model, const std::vector<ScenarioBatch>& scenarios,
              const TrainConfig& config, TrainHistory* history, const EpochCallback& on_epoch) {
  run_training(model.params(), scenarios.size(), config, 0, history, on_epoch,
               [&](ad::Tape&, const BoundParams& p, std::size_t i, std::size_t) {
                 return scenario_loss(np_baseline_forward(model, p, scenarios[i]), scenarios[i]);
               });
}

namespace {

ad::Var global_loss(std::span<const ad::Var> pred, const std::vector<Tensor>& targets) {
  ad::Var loss;
  for (std::size_t c = 0; c < pred.size(); ++c) {
    ad::Var l = ad::mse_loss(pred[c], targets.at(c));
    loss = c == 0 ? l : ad::add(loss, l);
  }
  if (pred.size() > 1) loss = ad::scale(loss, 1.0 / static_cast<double>(pred.size()));
  return loss;
}

std::vector<ScenarioBatch> batches_of(const std::vector<GlobalSample>& samples) {
  std::vector<ScenarioBatch> out;
  for (const auto& s : samples) out.push_back(s.batch);
  return out;
}

}  // namespace

void train_gen_global(GenModel& model, const std::vector<GlobalSample>& samples,
                      const std::vector<MeshConfig>& meshes, const TrainConfig& config,
                      TrainHistory* history) {
  if (meshes.empty()) throw std::invalid_argument("train_gen_global needs at least one mesh");
  const auto batches = batches_of(samples);
  WeightCache cache(batches, meshes, model.spec().representation, false);
  run_training(model.params(), samples.size(), config, meshes.size(), history, {},
               [&](ad::Tape& tape, const BoundParams& p, std::size_t i, std::size_t m) {
                 const auto w = cache.get(tape, i, m);
                 const auto pred =
                     gen_global_forward(model, p, batches[i], w, meshes[m].mesh, meshes[m].steps);
                 return global_loss(pred, samples[i].targets);
               });
}

namespace {

/// Per-scenario (squared error sum, count), combined serially for determinism.
template <class Fn>
double pooled_mse(std::size_t n, Fn&& per_scenario) {
  std::vector<std::pair<double, std::size_t>> parts(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    try {
      parts[static_cast<std::size_t>(i)] = per_scenario(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  double s = 0.0;
  std::size_t c = 0;
  for (const auto& [v, k] : parts) {
    s += v;
    c += k;
  }
  if (c == 0) throw std::invalid_argument("no queries to evaluate");
  return s / static_cast<double>(c);
}

std::pair<double, std::size_t> squared_errors(const std::vector<Tensor>& pred,
                                              const ScenarioBatch& b) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < pred.size(); ++c) {
    const auto& t = b.queries[c].values;
    if (b.queries[c].count() == 0) continue;
    s += sft_loss(pred[c], t) * static_cast<double>(t.rows());
    n += t.rows();
  }
  return {s, n};
}

}  // namespace

double gen_mse(const GenModel& model, const std::vector<ScenarioBatch>& scenarios,
               const MeshConfig& mesh) {
  return pooled_mse(scenarios.size(), [&](std::size_t i) {
    return squared_errors(gen_predict(model, scenarios[i], mesh.mesh, mesh.steps), scenarios[i]);
  });
}

double np_mse(const NpBaseline& model, const std::vector<ScenarioBatch>& scenarios) {
  return pooled_mse(scenarios.size(), [&](std::size_t i) {
    return squared_errors(np_predict(model, scenarios[i]), scenarios[i]);
  });
}

double gen_global_mse(const GenModel& model, const std::vector<GlobalSample>& samples,
                      const MeshConfig& mesh) {
  return pooled_mse(samples.size(), [&](std::size_t i) {
    const auto pred = gen_global_predict(model, samples[i].batch, mesh.mesh, mesh.steps);
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < pred.size(); ++c) {
      s += sft_loss(pred[c], samples[i].targets.at(c));
      ++n;
    }
    return std::pair{s, n};
  });
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<EvalSummary> EvalReport::summary() const {
  std::vector<EvalSummary> out;
  std::vector<std::vector<double>> values;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const EvalSummary& s) {
      return s.model == r.model && s.mesh_k == r.mesh_k && s.split == r.split;
    });
    if (it == out.end()) {
      out.push_back({r.model, r.mesh_k, r.split, 0.0, 0.0, 0.0, 0});
      values.emplace_back();
      it = out.end() - 1;
    }
    values[static_cast<std::size_t>(it - out.begin())].push_back(r.mse);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = values[i];
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    out[i].mean = mean;
    out[i].std = std::sqrt(var / static_cast<double>(v.size()));
    out[i].median = median(v);
    out[i].seeds = v.size();
  }
  return out;
}

std::string EvalReport::to_csv() const {
  std::string out = "model,mesh_k,seed,split,mse,n_params,wall_s\n";
  for (const auto& r : rows) {
    out += r.model + "," + std::to_string(r.mesh_k) + "," + std::to_string(r.seed) + "," + r.split +
           "," + fmt(r.mse) + "," + std::to_string(r.n_params) + "," + fmt(r.wall_s) + "\n";
  }
  return out;
}

EvalReport EvalReport::from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "model,mesh_k,seed,split,mse,n_params,wall_s") {
    throw std::invalid_argument("eval CSV: unexpected header");
  }
  EvalReport rep;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw std::invalid_argument("eval CSV line " + std::to_string(lineno) + ": expected 7 fields");
    try {
      std::size_t pos = 0;
      EvalRow r;
      r.model = f[0];
      r.mesh_k = std::stoul(f[1], &pos);
      if (pos != f[1].size()) throw std::invalid_argument("mesh_k");
      r.seed = std::stoull(f[2], &pos);
      if (pos != f[2].size()) throw std::invalid_argument("seed");
      r.split = f[3];
      r.mse = std::stod(f[4], &pos);
      if (pos != f[4].size()) throw std::invalid_argument("mse");
      r.n_params = std::stoul(f[5], &pos);
      if (pos != f[5].size()) throw std::invalid_argument("n_params");
      r.wall_s = std::stod(f[6], &pos);
      if (pos != f[6].size()) throw std::invalid_argument("wall_s");
      if (r.model.empty() || r.split.empty() || !(r.mse >= 0.0)) throw std::invalid_argument("value");
      rep.rows.push_back(r);
    } catch (const std::exception&) {
      throw std::invalid_argument("eval CSV line " + std::to_string(lineno) + ": malformed field");
    }
  }
  return rep;
}

void EvalReport::append(const EvalReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

EvalReport evaluate_gen(const GenModel& model, const std::vector<ScenarioBatch>& scenarios,
                        const std::vector<MeshConfig>& meshes, std::uint64_t seed,
                        const std::string& split) {
  EvalReport rep;
  for (const auto& m : meshes) {
    const auto t0 = Clock::now();
    const double mse = gen_mse(model, scenarios, m);
    rep.rows.push_back({"gen", m.mesh.order, seed, split, mse, model.param_count(), seconds_since(t0)});
  }
  return rep;
}

EvalReport evaluate_np(const NpBaseline& model, const std::vector<ScenarioBatch>& scenarios,
                       std::uint64_t seed, const std::string& split) {
  const auto t0 = Clock::now();
  const double mse = np_mse(model, scenarios);
  EvalReport rep;
  rep.rows.push_back({"np", 0, seed, split, mse, model.param_count(), seconds_since(t0)});
  return rep;
}

EvalReport generalization_probe(const GenModel& model, const std::vector<ScenarioBatch>& scenarios,
                                geometry::MetricSpace space,
                                const std::vector<std::size_t>& trained_sizes,
                                const std::vector<std::size_t>& probe_sizes, std::uint64_t seed,
                                std::optional<std::size_t> steps) {
  EvalReport rep = evaluate_gen(model, scenarios, grid_mesh_configs(space, trained_sizes, steps),
                                seed, "test");
  rep.append(evaluate_gen(model, scenarios, grid_mesh_configs(space, probe_sizes, steps), seed,
                          "extrapolation"));
  return rep;
}

namespace {

geometry::SpatialMesh retriangulate(Tensor& positions, std::size_t order, Rng& rng,
                                    std::size_t& retries) {
  for (int attempt = 0;; ++attempt) {
    try {
      auto mesh = geometry::delaunay(positions);
      mesh.order = order;
      return mesh;
    } catch (const std::invalid_argument&) {
      if (attempt >= 16) throw;
      ++retries;
      for (std::size_t i = 0; i < positions.size(); ++i) {
        positions[i] = std::clamp(positions[i] + 1e-9 * rng.uniform(-1.0, 1.0), 0.0, 1.0);
      }
    }
  }
}

}  // namespace

double positional_mse(const GenModel& model, const std::vector<ScenarioBatch>& scenarios,
                      const geometry::SpatialMesh& mesh, std::size_t steps) {
  return gen_mse(model, scenarios, {mesh, steps});
}

PositionOptResult optimize_node_positions(const GenModel& model,
                                          const std::vector<ScenarioBatch>& fit,
                                          const std::vector<ScenarioBatch>& held_out,
                                          const geometry::SpatialMesh& initial,
                                          const TrainConfig& config) {
  config.validate();
  const auto& rep = model.spec().representation;
  if (rep.kind != RepresentationKind::SoftNearest) {
    throw std::invalid_argument("node positions can only be optimized with soft-nearest weights");
  }
  if (initial.space != geometry::kUnitSquare) {
    throw std::invalid_argument("node position optimization is implemented on the unit square");
  }
  if (fit.empty()) throw std::invalid_argument("optimize_node_positions needs fit scenarios");
  const std::size_t steps = config.message_steps ? *config.message_steps : default_steps(initial.order);

  PositionOptResult res;
  res.initial = initial;
  res.mse_before = held_out.empty() ? 0.0 : positional_mse(model, held_out, initial, steps);

  geometry::SpatialMesh mesh = initial;
  Tensor positions = initial.positions;
  AdamState adam(config.position_learning_rate);
  Rng rng(derive_seed(config.seed, 0x706f73));
  double best = std::numeric_limits<double>::infinity();
  res.final = initial;
  for (std::size_t s = 0;; ++s) {
    ad::Tape tape;
    const BoundParams p = bind(tape, model.params(), false);
    ad::Var pos = tape.variable(positions);
    ad::Var loss;
    for (std::size_t i = 0; i < fit.size(); ++i) {
      const auto w = positional_rep_weights(tape, fit[i], pos, mesh.space, rep.temperature);
      ad::Var l = scenario_loss(gen_forward(model, p, fit[i], w, mesh, steps), fit[i]);
      loss = i == 0 ? l : ad::add(loss, l);
    }
    loss = ad::scale(loss, 1.0 / static_cast<double>(fit.size()));
    const double value = loss.value()(0, 0);
    res.loss_history.push_back(value);
    // Connectivity changes make the fit loss jump; keep the best iterate.
    if (value < best) {
      best = value;
      res.final = mesh;
      res.best_step = s;
    }
    if (s == config.position_steps) break;
    tape.backward(loss);
    std::vector<Tensor> values{positions};
    adam_step(values, {tape.grad(pos)}, adam);
    positions = geometry::clamp_to_space(values[0], mesh.space);
    mesh = retriangulate(positions, initial.order, rng, res.jitter_retries);
  }
  mesh = res.final;
  res.mse_after = held_out.empty() ? 0.0 : positional_mse(model, held_out, mesh, steps);
  return res;
}


GradCheckResult gen_gradient_check(std::uint64_t seed, double step, std::size_t samples,
                                   std::size_t queries) {
  GenSpec spec;
  spec.latent_dim = 8;
  spec.message_dim = 4;
  spec.representation = {RepresentationKind::SoftNearest, 1.0};
  const GenModel model(spec, seed);
  Rng rng(derive_seed(seed, 0x6763));
  std::vector<InputSample> in;
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t c = i % 2;
    std::vector<double> v = c == 0 ? std::vector<double>{rng.uniform(-2, 2), 0.0, 0.0}
                                   : std::vector<double>{0.0, rng.uniform(-2, 2), 1.0};
    in.push_back({{rng.uniform(), rng.uniform()}, c, v});
  }
  std::vector<QuerySample> qs;
  for (std::size_t i = 0; i < queries; ++i) qs.push_back({{rng.uniform(), rng.uniform()}, 0, {rng.uniform(-2, 2)}});
  const ScenarioBatch batch = make_batch(in, qs, spec.input_dims, spec.output_dims, 2);
  geometry::SpatialMesh mesh = geometry::square_grid_mesh(2);
  // Move the nodes off the lattice so distances are generic.
  for (std::size_t i = 0; i < mesh.positions.size(); ++i) {
    mesh.positions[i] = std::clamp(mesh.positions[i] + rng.uniform(-0.1, 0.1), 0.0, 1.0);
  }
  const std::size_t steps = default_steps(2);
  const std::size_t np = model.params().size();

  auto build = [&](ad::Tape& tape, const std::vector<Tensor>& values, bool grad,
                   BoundParams& p, ad::Var& pos) {
    for (std::size_t i = 0; i < np; ++i) p.vars.push_back(grad ? tape.variable(values[i]) : tape.constant(values[i]));
    pos = grad ? tape.variable(values[np]) : tape.constant(values[np]);
    const auto w = positional_rep_weights(tape, batch, pos, geometry::kUnitSquare, spec.representation.temperature);
    return scenario_loss(gen_forward(model, p, batch, w, mesh, steps), batch);
  };

  std::vector<Tensor> values = model.params().values();
  values.push_back(mesh.positions);
  ad::Tape tape;
  BoundParams p;
  ad::Var pos;
  ad::Var loss = build(tape, values, true, p, pos);
  tape.backward(loss);
  std::vector<Tensor> analytic = collect_gradients(tape, p);
  analytic.push_back(tape.grad(pos));

  const LossFn f = [&](const std::vector<Tensor>& v) {
    ad::Tape t;
    BoundParams bp;
    ad::Var ps;
    return build(t, v, false, bp, ps).value()(0, 0);
  };
  const auto numeric = finite_diff_grad(f, values, step);

  GradCheckResult r;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double e = max_relative_error({analytic[i]}, {numeric[i]});
    if (i < np) {
      r.max_param_error = std::max(r.max_param_error, e);
      r.param_coords += analytic[i].size();
    } else {
      r.max_position_error = e;
      r.position_coords = analytic[i].size();
    }
  }
  return r;
}

}  // namespace genlab::train
