#pragma once

// Training loops, evaluation reports and gradient-based node placement.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "genlab/datasets.hpp"
#include "genlab/gen_model.hpp"
#include "genlab/geometry.hpp"
#include "genlab/np_baseline.hpp"

namespace genlab::train {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 1;  // scenarios per gradient step
  double learning_rate = 3e-3;
  double position_learning_rate = 3e-4;
  std::vector<std::size_t> mesh_sizes{2, 3, 4, 5};
  std::uint64_t seed = 0;
  /// Fixed message-passing rounds; unset means T = 2(k-1).
  std::optional<std::size_t> message_steps;
  /// Cosine decay of the weight learning rate down to this fraction of
  /// `learning_rate` at the last step; 1 keeps it constant.
  double final_lr_fraction = 1.0;
  /// Rescale the gradient when its global L2 norm exceeds this; 0 disables.
  double grad_clip = 0.0;
  std::size_t position_steps = 200;
  std::size_t position_scenarios = 4;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean over rows of the squared Euclidean distance between prediction and
/// target rows. Throws std::invalid_argument on an empty or mismatched set.
double sft_loss(const Tensor& predictions, const Tensor& targets);

struct MeshConfig {
  geometry::SpatialMesh mesh;
  std::size_t steps = 0;
};

MeshConfig mesh_config(geometry::SpatialMesh mesh, std::optional<std::size_t> steps = {});
std::vector<MeshConfig> grid_mesh_configs(geometry::MetricSpace space,
                                          const std::vector<std::size_t>& sizes,
                                          std::optional<std::size_t> steps = {});

/// Delaunay mesh over n Halton points; order set to round(sqrt(n)).
geometry::SpatialMesh halton_mesh(std::size_t n, std::uint64_t seed);

ScenarioBatch to_batch(const data::Scenario& s, const data::DatasetManifest& m);
std::vector<ScenarioBatch> split_batches(const data::Dataset& d, const std::string& split);
std::vector<ScenarioBatch> house_batches(const data::Dataset& d, const data::House& house);

/// A global-output scenario: inputs plus one target row per output channel.
struct GlobalSample {
  ScenarioBatch batch;
  std::vector<Tensor> targets;
};
std::vector<GlobalSample> global_samples(const data::Dataset& d, const std::string& split);

struct LossPoint {
  std::size_t epoch = 0;
  double loss = 0.0;
  double wall_s = 0.0;
};

struct TrainHistory {
  std::vector<LossPoint> epochs;
  std::string to_csv() const;
};

using EpochCallback = std::function<void(std::size_t epoch, const TrainHistory&)>;

/// Adam on all weights, one shuffled pass over `scenarios` per epoch, mesh
/// configuration advanced every gradient step. Throws TrainingError on a
/// non-finite loss or gradient.
void train_gen(GenModel& model, const std::vector<ScenarioBatch>& scenarios,
               const std::vector<MeshConfig>& meshes, const TrainConfig& config,
               TrainHistory* history = nullptr, const EpochCallback& on_epoch = {});
void train_np(NpBaseline& model, const std::vector<ScenarioBatch>& scenarios,
              const TrainConfig& config, TrainHistory* history = nullptr,
              const EpochCallback& on_epoch = {});
void train_gen_global(GenModel& model, const std::vector<GlobalSample>& samples,
                      const std::vector<MeshConfig>& meshes, const TrainConfig& config,
                      TrainHistory* history = nullptr);

/// Pooled MSE over every query of every scenario.
double gen_mse(const GenModel& model, const std::vector<ScenarioBatch>& scenarios,
               const MeshConfig& mesh);
double np_mse(const NpBaseline& model, const std::vector<ScenarioBatch>& scenarios);
double gen_global_mse(const GenModel& model, const std::vector<GlobalSample>& samples,
                      const MeshConfig& mesh);

struct EvalRow {
  std::string model;      // "gen" or "np"
  std::size_t mesh_k = 0; // 0 for the baseline
  std::uint64_t seed = 0;
  std::string split;      // "train", "test" or "extrapolation"
  double mse = 0.0;
  std::size_t n_params = 0;
  double wall_s = 0.0;
  bool operator==(const EvalRow&) const = default;
};

struct EvalSummary {
  std::string model;
  std::size_t mesh_k = 0;
  std::string split;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over seeds
  double median = 0.0;
  std::size_t seeds = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;

  /// One entry per (model, mesh_k, split), in first-appearance order.
  std::vector<EvalSummary> summary() const;
  std::string to_csv() const;
  /// Throws std::invalid_argument on a malformed CSV.
  static EvalReport from_csv(const std::string& text);
  void append(const EvalReport& other);
};

EvalReport evaluate_gen(const GenModel& model, const std::vector<ScenarioBatch>& scenarios,
                        const std::vector<MeshConfig>& meshes, std::uint64_t seed,
                        const std::string& split);
EvalReport evaluate_np(const NpBaseline& model, const std::vector<ScenarioBatch>& scenarios,
                       std::uint64_t seed, const std::string& split);

/// Evaluates on the trained sizes (split "test") and on larger sizes (split
/// "extrapolation").
EvalReport generalization_probe(const GenModel& model, const std::vector<ScenarioBatch>& scenarios,
                                geometry::MetricSpace space,
                                const std::vector<std::size_t>& trained_sizes,
                                const std::vector<std::size_t>& probe_sizes, std::uint64_t seed,
                                std::optional<std::size_t> steps = {});

struct PositionOptResult {
  geometry::SpatialMesh initial;
  geometry::SpatialMesh final;
  double mse_before = 0.0;  // on the held-out scenarios
  double mse_after = 0.0;
  std::vector<double> loss_history;  // fit loss at every iterate, initial first
  std::size_t best_step = 0;         // iterate returned as `final`
  std::size_t jitter_retries = 0;
};

/// Moves node positions by Adam on the mean loss over `fit` with the model
/// weights frozen. After every step positions are clamped to [0,1]² and the
/// Delaunay connectivity is recomputed (degenerate input is jittered by 1e-9
/// and retried). `final` is the iterate with the lowest fit loss. Requires a
/// square soft-nearest model.
PositionOptResult optimize_node_positions(const GenModel& model,
                                          const std::vector<ScenarioBatch>& fit,
                                          const std::vector<ScenarioBatch>& held_out,
                                          const geometry::SpatialMesh& initial,
                                          const TrainConfig& config);

/// Soft-nearest MSE with positions as given (connectivity from the mesh).
double positional_mse(const GenModel& model, const std::vector<ScenarioBatch>& scenarios,
                      const geometry::SpatialMesh& mesh, std::size_t steps);

double median(std::vector<double> v);

struct GradCheckResult {
  double max_param_error = 0.0;     // over every module weight and bias
  double max_position_error = 0.0;  // over every node coordinate
  std::size_t param_coords = 0;
  std::size_t position_coords = 0;
};

/// Tape gradients of the scenario MSE against central differences for a
/// k = 2 soft-nearest GEN (latent 8, message 4) on random samples, with the
/// mesh connectivity frozen.
GradCheckResult gen_gradient_check(std::uint64_t seed, double step = 1e-6,
                                   std::size_t samples = 8, std::size_t queries = 8);

}  // namespace genlab::train
