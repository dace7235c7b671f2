#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "genlab/autodiff.hpp"
#include "genlab/tensor.hpp"

namespace genlab {

/// Named trainable tensors in insertion order.
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor init);

  std::size_t size() const noexcept { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  Tensor& value(std::size_t i) { return values_.at(i); }
  const Tensor& value(std::size_t i) const { return values_.at(i); }
  std::vector<Tensor>& values() noexcept { return values_; }
  const std::vector<Tensor>& values() const noexcept { return values_; }

  /// Index of `name`; throws std::out_of_range if absent.
  std::size_t index_of(const std::string& name) const;
  /// Total number of scalar parameters.
  std::size_t scalar_count() const noexcept;

  bool operator==(const ParamStore&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

/// Tape leaves for every tensor of a ParamStore.
struct BoundParams {
  std::vector<ad::Var> vars;
  ad::Var operator[](std::size_t i) const { return vars.at(i); }
};

BoundParams bind(ad::Tape& tape, const ParamStore& store, bool requires_grad = true);

/// Gradients after tape.backward(), one per bound parameter.
std::vector<Tensor> collect_gradients(const ad::Tape& tape, const BoundParams& bound);

// Checkpoint format (JSON):
//   {"format": "genlab-params", "version": 1, "header": {...},
//    "params": [{"name": str, "shape": [int...], "data": [float...]}, ...]}
// `header` is free-form metadata, e.g. the model spec.
inline constexpr int kCheckpointVersion = 1;

nlohmann::json params_to_json(const ParamStore& store, const nlohmann::json& header = {});
/// Returns the store and writes the header into `header` when non-null.
ParamStore params_from_json(const nlohmann::json& j, nlohmann::json* header = nullptr);

/// Writes through a temporary file and rename, so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace genlab
