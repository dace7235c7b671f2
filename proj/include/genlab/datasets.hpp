#pragma once

// Experiment datasets and their on-disk format.
//
// A dataset directory holds manifest.json and houses/house_NNN.jsonl. Each
// house file starts with a header line
//   {"house": id, "sources": [{"rect": [x0, y0, x1, y1]}...], "directions": [[x, y, z]...]}
// followed by one line per scenario
//   {"scenario": s, "parameters": [...],
//    "inputs":  [{"x": [...], "channel": i, "value":  [...]}...],
//    "queries": [{"x": [...], "channel": j, "target": [...]}...]}
// Channels are 0-based. Square parameters are [T_ext, C_1, ..., C_h]; sphere
// parameters are the field coefficients; global-task parameters are the
// source strengths and its single query has an empty location.
//
// Randomness: std::mt19937_64 seeded per house with derive_seed(seed, house)
// and per scenario with derive_seed(house_seed, 1 + scenario).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "genlab/gen_model.hpp"
#include "genlab/geometry.hpp"
#include "genlab/pde_oracle.hpp"

namespace genlab::data {

inline constexpr int kDatasetVersion = 1;

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DatasetKind { SquarePoisson, SpherePoisson, GlobalIntegral };
std::string kind_name(DatasetKind k);
DatasetKind kind_from_name(const std::string& name);

struct Scenario {
  std::vector<double> parameters;
  std::vector<InputSample> inputs;
  std::vector<QuerySample> queries;
  bool operator==(const Scenario&) const = default;
};

struct House {
  std::size_t id = 0;
  std::vector<pde::Rect> sources;       // square and global kinds
  std::vector<pde::Vec3> directions;    // sphere kind
  std::vector<Scenario> scenarios;
};

struct SquareDatasetConfig {
  std::size_t houses = 20;
  std::size_t scenarios = 16;
  std::size_t train_houses = 16;
  std::size_t interior_inputs = 64;   // channel 0 at uniform interior points
  std::size_t source_inputs = 32;     // channel 0 inside the sources
  std::size_t boundary_inputs = 32;   // channel 1 on the walls
  std::size_t train_queries = 128;
  std::size_t test_queries = 256;
  std::size_t oracle_resolution = 64;
  double strength_min = -10.0, strength_max = 10.0;
  double boundary_min = -5.0, boundary_max = 5.0;
  std::size_t min_sources = 1, max_sources = 3;
  double side_min = 0.05, side_max = 0.3;

  nlohmann::json to_json() const;
  static SquareDatasetConfig from_json(const nlohmann::json& j);
};

struct SphereDatasetConfig {
  std::size_t houses = 20;
  std::size_t scenarios = 16;
  std::size_t train_houses = 16;
  std::size_t directions = 8;
  std::size_t inputs = 128;
  std::size_t queries = 128;
  double laplacian_eps = 3e-5;

  nlohmann::json to_json() const;
  static SphereDatasetConfig from_json(const nlohmann::json& j);
};

struct GlobalTaskConfig {
  std::size_t houses = 20;
  std::size_t scenarios = 16;
  std::size_t train_houses = 16;
  std::size_t uniform_inputs = 96;
  std::size_t source_inputs = 32;
  std::size_t oracle_resolution = 64;
  double strength_min = -10.0, strength_max = 10.0;
  std::size_t min_sources = 1, max_sources = 3;
  double side_min = 0.05, side_max = 0.3;

  nlohmann::json to_json() const;
  static GlobalTaskConfig from_json(const nlohmann::json& j);
};

struct DatasetManifest {
  DatasetKind kind = DatasetKind::SquarePoisson;
  geometry::MetricSpace space;
  std::size_t house_count = 0;
  std::size_t scenarios_per_house = 0;
  std::vector<std::size_t> train_houses;
  std::vector<std::size_t> test_houses;
  std::size_t oracle_resolution = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> input_dims;
  std::vector<std::size_t> output_dims;
  nlohmann::json config;       // generator config
  nlohmann::json full_scale;  // the full-size experiment this one scales down

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<House> houses;

  std::vector<const House*> split(const std::string& name) const;  // "train" / "test"
};

Dataset generate_square_dataset(const SquareDatasetConfig& config, std::uint64_t seed);
Dataset generate_sphere_dataset(const SphereDatasetConfig& config, std::uint64_t seed);
Dataset generate_global_task(const GlobalTaskConfig& config, std::uint64_t seed);

/// One square scenario for a fixed house geometry.
Scenario make_square_scenario(const std::vector<pde::Rect>& sources, const SquareDatasetConfig& c,
                              std::size_t query_count, std::uint64_t seed);

/// Midpoint Riemann sum of ψ over the m x m cell centres of [0,1]².
double grid_integral(const std::function<double(double, double)>& psi, std::size_t m);

/// Random axis-aligned rectangles inside (0,1)².
std::vector<pde::Rect> random_rectangles(Rng& rng, std::size_t min_count, std::size_t max_count,
                                         double side_min, double side_max);

/// Throws DatasetError if any sample location is outside the space.
void validate_scenario(const Scenario& s, const DatasetManifest& m);

/// Writes manifest.json and houses/*.jsonl, each file atomically.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
/// Throws DatasetError for a missing or malformed manifest, a version
/// mismatch, count mismatches, or out-of-space sample locations.
Dataset load_dataset(const std::filesystem::path& dir);

std::string house_filename(std::size_t id);
std::string house_to_jsonl(const House& house);
House house_from_jsonl(const std::string& text);

}  // namespace genlab::data
