#include "genlab/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "genlab/params.hpp"
#include "genlab/rng.hpp"

namespace genlab::data {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    SquareDatasetConfig, houses, scenarios, train_houses, interior_inputs, source_inputs,
    boundary_inputs, train_queries, test_queries, oracle_resolution, strength_min, strength_max,
    boundary_min, boundary_max, min_sources, max_sources, side_min, side_max)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SphereDatasetConfig, houses, scenarios,
                                                train_houses, directions, inputs, queries,
                                                laplacian_eps)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GlobalTaskConfig, houses, scenarios, train_houses,
                                                uniform_inputs, source_inputs, oracle_resolution,
                                                strength_min, strength_max, min_sources,
                                                max_sources, side_min, side_max)

nlohmann::json SquareDatasetConfig::to_json() const { return nlohmann::json(*this); }
SquareDatasetConfig SquareDatasetConfig::from_json(const nlohmann::json& j) {
  return j.get<SquareDatasetConfig>();
}
nlohmann::json SphereDatasetConfig::to_json() const { return nlohmann::json(*this); }
SphereDatasetConfig SphereDatasetConfig::from_json(const nlohmann::json& j) {
  return j.get<SphereDatasetConfig>();
}
nlohmann::json GlobalTaskConfig::to_json() const { return nlohmann::json(*this); }
GlobalTaskConfig GlobalTaskConfig::from_json(const nlohmann::json& j) {
  return j.get<GlobalTaskConfig>();
}

std::string kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::SquarePoisson: return "square_poisson";
    case DatasetKind::SpherePoisson: return "sphere_poisson";
    case DatasetKind::GlobalIntegral: return "global_integral";
  }
  return "unknown";
}

DatasetKind kind_from_name(const std::string& name) {
  if (name == "square_poisson") return DatasetKind::SquarePoisson;
  if (name == "sphere_poisson") return DatasetKind::SpherePoisson;
  if (name == "global_integral") return DatasetKind::GlobalIntegral;
  throw std::invalid_argument("unknown dataset kind '" + name + "'");
}

nlohmann::json DatasetManifest::to_json() const {
  return {{"format", "genlab-dataset"},
          {"version", kDatasetVersion},
          {"kind", kind_name(kind)},
          {"space", space.name()},
          {"house_count", house_count},
          {"scenarios_per_house", scenarios_per_house},
          {"train_houses", train_houses},
          {"test_houses", test_houses},
          {"oracle_resolution", oracle_resolution},
          {"seed", seed},
          {"input_dims", input_dims},
          {"output_dims", output_dims},
          {"rng", "mt19937_64; house seed derive_seed(seed, house), scenario seed "
                  "derive_seed(house_seed, 1 + scenario); derive_seed is splitmix64-based"},
          {"config", config},
          {"full_scale", full_scale}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "genlab-dataset") {
      throw DatasetError("manifest: not a genlab dataset");
    }
    const int version = j.at("version").get<int>();
    if (version != kDatasetVersion) {
      throw DatasetError("manifest: unsupported dataset version " + std::to_string(version));
    }
    DatasetManifest m;
    m.kind = kind_from_name(j.at("kind").get<std::string>());
    m.space = geometry::MetricSpace::from_name(j.at("space").get<std::string>());
    m.house_count = j.at("house_count").get<std::size_t>();
    m.scenarios_per_house = j.at("scenarios_per_house").get<std::size_t>();
    m.train_houses = j.at("train_houses").get<std::vector<std::size_t>>();
    m.test_houses = j.at("test_houses").get<std::vector<std::size_t>>();
    m.oracle_resolution = j.at("oracle_resolution").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.input_dims = j.at("input_dims").get<std::vector<std::size_t>>();
    m.output_dims = j.at("output_dims").get<std::vector<std::size_t>>();
    m.config = j.value("config", nlohmann::json::object());
    m.full_scale = j.value("full_scale", nlohmann::json::object());

    std::vector<std::size_t> all = m.train_houses;
    all.insert(all.end(), m.test_houses.begin(), m.test_houses.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i] != i) throw DatasetError("manifest: train/test split is not a partition");
    }
    if (all.size() != m.house_count) throw DatasetError("manifest: split does not cover houses");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("manifest: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DatasetError(std::string("manifest: ") + e.what());
  }
}

std::vector<const House*> Dataset::split(const std::string& name) const {
  const std::vector<std::size_t>* ids = nullptr;
  if (name == "train") ids = &manifest.train_houses;
  else if (name == "test") ids = &manifest.test_houses;
  else throw std::invalid_argument("unknown split '" + name + "'");
  std::vector<const House*> out;
  for (std::size_t id : *ids) out.push_back(&houses.at(id));
  return out;
}

std::vector<pde::Rect> random_rectangles(Rng& rng, std::size_t min_count, std::size_t max_count,
                                         double side_min, double side_max) {
  if (min_count > max_count || side_max >= 0.98 || side_min <= 0.0 || side_min > side_max) {
    throw std::invalid_argument("random_rectangles: invalid configuration");
  }
  const std::size_t count = min_count + rng.index(max_count - min_count + 1);
  constexpr double margin = 0.01;
  std::vector<pde::Rect> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double w = rng.uniform(side_min, side_max);
    const double h = rng.uniform(side_min, side_max);
    const double x0 = rng.uniform(margin, 1.0 - margin - w);
    const double y0 = rng.uniform(margin, 1.0 - margin - h);
    out.push_back({x0, y0, x0 + w, y0 + h});
  }
  return out;
}

double grid_integral(const std::function<double(double, double)>& psi, std::size_t m) {
  if (m == 0) throw std::invalid_argument("grid_integral: m must be positive");
  const double h = 1.0 / static_cast<double>(m);
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      s += psi((static_cast<double>(i) + 0.5) * h, (static_cast<double>(j) + 0.5) * h);
  return s * h * h;
}

namespace {

std::vector<double> point_in(Rng& rng, const pde::Rect& r) {
  return {rng.uniform(r.x0, r.x1), rng.uniform(r.y0, r.y1)};
}

std::vector<double> boundary_point(Rng& rng) {
  const double t = rng.uniform();
  switch (rng.index(4)) {
    case 0: return {t, 0.0};
    case 1: return {t, 1.0};
    case 2: return {0.0, t};
    default: return {1.0, t};
  }
}

std::vector<std::size_t> iota(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> v;
  for (std::size_t i = lo; i < hi; ++i) v.push_back(i);
  return v;
}

DatasetManifest base_manifest(DatasetKind kind, geometry::MetricSpace space, std::size_t houses,
                              std::size_t scenarios, std::size_t train, std::uint64_t seed) {
  if (houses == 0 || scenarios == 0) throw std::invalid_argument("dataset needs houses and scenarios");
  if (train > houses) throw std::invalid_argument("train_houses exceeds house count");
  DatasetManifest m;
  m.kind = kind;
  m.space = space;
  m.house_count = houses;
  m.scenarios_per_house = scenarios;
  m.train_houses = iota(0, train);
  m.test_houses = iota(train, houses);
  m.seed = seed;
  return m;
}

template <class Fn>
void for_each_house(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (long h = 0; h < static_cast<long>(n); ++h) {
    try {
      fn(static_cast<std::size_t>(h));
    } catch (...) {
      errors[static_cast<std::size_t>(h)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

Scenario make_square_scenario(const std::vector<pde::Rect>& sources, const SquareDatasetConfig& c,
                              std::size_t query_count, std::uint64_t seed) {
  Rng rng(seed);
  Scenario s;
  const double boundary = rng.uniform(c.boundary_min, c.boundary_max);
  std::vector<pde::HeatSource> heat;
  s.parameters.push_back(boundary);
  for (const auto& r : sources) {
    const double strength = rng.uniform(c.strength_min, c.strength_max);
    heat.push_back({r, strength});
    s.parameters.push_back(strength);
  }
  const auto problem = pde::SquarePoissonProblem::from_sources(heat, boundary);

  for (std::size_t i = 0; i < c.interior_inputs; ++i) {
    std::vector<double> x{rng.uniform(), rng.uniform()};
    const double psi = problem.source(x[0], x[1]);
    s.inputs.push_back({std::move(x), 0, {psi, 0.0, 0.0}});
  }
  if (!sources.empty()) {
    for (std::size_t i = 0; i < c.source_inputs; ++i) {
      auto x = point_in(rng, sources[rng.index(sources.size())]);
      const double psi = problem.source(x[0], x[1]);
      s.inputs.push_back({std::move(x), 0, {psi, 0.0, 0.0}});
    }
  }
  for (std::size_t i = 0; i < c.boundary_inputs; ++i) {
    s.inputs.push_back({boundary_point(rng), 1, {0.0, boundary, 1.0}});
  }

  const pde::GridField field = pde::solve_square_poisson(problem, c.oracle_resolution, nullptr, false);
  for (std::size_t i = 0; i < query_count; ++i) {
    std::vector<double> x{rng.uniform(), rng.uniform()};
    const double phi = field.interpolate(x[0], x[1]);
    s.queries.push_back({std::move(x), 0, {phi}});
  }
  return s;
}

Dataset generate_square_dataset(const SquareDatasetConfig& c, std::uint64_t seed) {
  Dataset d;
  d.manifest = base_manifest(DatasetKind::SquarePoisson, geometry::kUnitSquare, c.houses,
                             c.scenarios, c.train_houses, seed);
  d.manifest.oracle_resolution = c.oracle_resolution;
  d.manifest.input_dims = {3, 3};
  d.manifest.output_dims = {1};
  d.manifest.config = c.to_json();
  d.manifest.full_scale = {{"houses", 250}, {"scenarios_per_house", 32},
                            {"train_houses", 200}, {"test_houses", 50},
                            {"test_queries", 256}, {"oracle", "FEM, 250x250 mesh"}};
  d.houses.resize(c.houses);
  for_each_house(c.houses, [&](std::size_t h) {
    const std::uint64_t house_seed = derive_seed(seed, h);
    Rng rng(house_seed);
    House house;
    house.id = h;
    house.sources = random_rectangles(rng, c.min_sources, c.max_sources, c.side_min, c.side_max);
    const bool train = h < c.train_houses;
    for (std::size_t s = 0; s < c.scenarios; ++s) {
      house.scenarios.push_back(make_square_scenario(
          house.sources, c, train ? c.train_queries : c.test_queries, derive_seed(house_seed, 1 + s)));
    }
    d.houses[h] = std::move(house);
  });
  return d;
}

Dataset generate_sphere_dataset(const SphereDatasetConfig& c, std::uint64_t seed) {
  Dataset d;
  d.manifest = base_manifest(DatasetKind::SpherePoisson, geometry::kUnitSphere, c.houses,
                             c.scenarios, c.train_houses, seed);
  d.manifest.input_dims = {1};
  d.manifest.output_dims = {1};
  d.manifest.config = c.to_json();
  d.manifest.full_scale = {{"houses", 250}, {"scenarios_per_house", 32},
                            {"train_houses", 200}, {"test_houses", 50},
                            {"inputs", 128}, {"queries", 128}};
  d.houses.resize(c.houses);
  for_each_house(c.houses, [&](std::size_t h) {
    const std::uint64_t house_seed = derive_seed(seed, h);
    Rng rng(house_seed);
    House house;
    house.id = h;
    for (std::size_t i = 0; i < c.directions; ++i) house.directions.push_back(pde::random_unit_vector(rng));
    for (std::size_t s = 0; s < c.scenarios; ++s) {
      auto sc = pde::generate_sphere_scenario(house.directions, derive_seed(house_seed, 1 + s),
                                              c.inputs, c.queries, c.laplacian_eps);
      house.scenarios.push_back({sc.field.coefficients, std::move(sc.inputs), std::move(sc.queries)});
    }
    d.houses[h] = std::move(house);
  });
  return d;
}

Dataset generate_global_task(const GlobalTaskConfig& c, std::uint64_t seed) {
  Dataset d;
  d.manifest = base_manifest(DatasetKind::GlobalIntegral, geometry::kUnitSquare, c.houses,
                             c.scenarios, c.train_houses, seed);
  d.manifest.oracle_resolution = c.oracle_resolution;
  d.manifest.input_dims = {1};
  d.manifest.output_dims = {1};
  d.manifest.config = c.to_json();
  d.manifest.full_scale = nlohmann::json::object();
  d.houses.resize(c.houses);
  for_each_house(c.houses, [&](std::size_t h) {
    const std::uint64_t house_seed = derive_seed(seed, h);
    Rng rng(house_seed);
    House house;
    house.id = h;
    house.sources = random_rectangles(rng, c.min_sources, c.max_sources, c.side_min, c.side_max);
    for (std::size_t s = 0; s < c.scenarios; ++s) {
      Rng srng(derive_seed(house_seed, 1 + s));
      Scenario sc;
      std::vector<pde::HeatSource> heat;
      for (const auto& r : house.sources) {
        heat.push_back({r, srng.uniform(c.strength_min, c.strength_max)});
        sc.parameters.push_back(heat.back().strength);
      }
      const auto problem = pde::SquarePoissonProblem::from_sources(heat, 0.0);
      for (std::size_t i = 0; i < c.uniform_inputs; ++i) {
        std::vector<double> x{srng.uniform(), srng.uniform()};
        const double v = problem.source(x[0], x[1]);
        sc.inputs.push_back({std::move(x), 0, {v}});
      }
      for (std::size_t i = 0; i < c.source_inputs; ++i) {
        auto x = point_in(srng, house.sources[srng.index(house.sources.size())]);
        const double v = problem.source(x[0], x[1]);
        sc.inputs.push_back({std::move(x), 0, {v}});
      }
      sc.queries.push_back({{}, 0, {grid_integral(problem.source, c.oracle_resolution)}});
      house.scenarios.push_back(std::move(sc));
    }
    d.houses[h] = std::move(house);
  });
  return d;
}

void validate_scenario(const Scenario& s, const DatasetManifest& m) {
  const std::size_t dim = m.space.dim();
  auto check = [&](const std::vector<double>& x, std::size_t channel, std::size_t value_dim,
                   const std::vector<std::size_t>& dims, const char* what) {
    if (channel >= dims.size()) throw DatasetError(std::string(what) + ": invalid channel");
    if (value_dim != dims[channel]) throw DatasetError(std::string(what) + ": wrong value dimension");
    if (x.size() != dim || !m.space.contains(x)) {
      throw DatasetError(std::string(what) + ": location outside the " + m.space.name());
    }
  };
  for (const auto& in : s.inputs) check(in.x, in.channel, in.value.size(), m.input_dims, "input");
  for (const auto& q : s.queries) {
    if (m.kind == DatasetKind::GlobalIntegral) {
      if (!q.x.empty()) throw DatasetError("global query must not have a location");
      if (q.channel >= m.output_dims.size() || q.target.size() != m.output_dims[q.channel]) {
        throw DatasetError("global query: invalid channel or target");
      }
      continue;
    }
    check(q.x, q.channel, q.target.size(), m.output_dims, "query");
  }
}

std::string house_filename(std::size_t id) {
  std::ostringstream os;
  os << "house_";
  os.width(3);
  os.fill('0');
  os << id << ".jsonl";
  return os.str();
}

std::string house_to_jsonl(const House& house) {
  nlohmann::json header{{"house", house.id}};
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& r : house.sources) sources.push_back({{"rect", {r.x0, r.y0, r.x1, r.y1}}});
  header["sources"] = sources;
  nlohmann::json dirs = nlohmann::json::array();
  for (const auto& v : house.directions) dirs.push_back({v[0], v[1], v[2]});
  header["directions"] = dirs;
  std::string out = header.dump() + "\n";
  for (std::size_t s = 0; s < house.scenarios.size(); ++s) {
    const Scenario& sc = house.scenarios[s];
    nlohmann::json inputs = nlohmann::json::array(), queries = nlohmann::json::array();
    for (const auto& in : sc.inputs)
      inputs.push_back({{"x", in.x}, {"channel", in.channel}, {"value", in.value}});
    for (const auto& q : sc.queries)
      queries.push_back({{"x", q.x}, {"channel", q.channel}, {"target", q.target}});
    nlohmann::json line{{"scenario", s}, {"parameters", sc.parameters}, {"inputs", inputs},
                        {"queries", queries}};
    out += line.dump() + "\n";
  }
  return out;
}

House house_from_jsonl(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw DatasetError("house file is empty");
  try {
    const auto header = nlohmann::json::parse(line);
    House house;
    house.id = header.at("house").get<std::size_t>();
    for (const auto& r : header.at("sources")) {
      const auto v = r.at("rect").get<std::vector<double>>();
      if (v.size() != 4) throw DatasetError("source rect needs 4 numbers");
      house.sources.push_back({v[0], v[1], v[2], v[3]});
    }
    for (const auto& d : header.at("directions")) {
      const auto v = d.get<std::vector<double>>();
      if (v.size() != 3) throw DatasetError("direction needs 3 numbers");
      house.directions.push_back({v[0], v[1], v[2]});
    }
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      if (j.at("scenario").get<std::size_t>() != house.scenarios.size()) {
        throw DatasetError("scenarios out of order");
      }
      Scenario sc;
      sc.parameters = j.at("parameters").get<std::vector<double>>();
      for (const auto& in : j.at("inputs")) {
        sc.inputs.push_back({in.at("x").get<std::vector<double>>(), in.at("channel").get<std::size_t>(),
                             in.at("value").get<std::vector<double>>()});
      }
      for (const auto& q : j.at("queries")) {
        sc.queries.push_back({q.at("x").get<std::vector<double>>(), q.at("channel").get<std::size_t>(),
                              q.at("target").get<std::vector<double>>()});
      }
      house.scenarios.push_back(std::move(sc));
    }
    return house;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("malformed house file: ") + e.what());
  }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  write_file_atomic(dir / "manifest.json", dataset.manifest.to_json().dump(2) + "\n");
  std::vector<std::exception_ptr> errors(dataset.houses.size());
#pragma omp parallel for schedule(dynamic)
  for (long h = 0; h < static_cast<long>(dataset.houses.size()); ++h) {
    try {
      const House& house = dataset.houses[static_cast<std::size_t>(h)];
      write_file_atomic(dir / "houses" / house_filename(house.id), house_to_jsonl(house));
    } catch (...) {
      errors[static_cast<std::size_t>(h)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw DatasetError("missing manifest: " + manifest_path.string());
  }
  Dataset d;
  try {
    d.manifest = DatasetManifest::from_json(nlohmann::json::parse(read_file(manifest_path)));
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("malformed manifest: ") + e.what());
  }
  for (std::size_t h = 0; h < d.manifest.house_count; ++h) {
    const auto path = dir / "houses" / house_filename(h);
    if (!std::filesystem::exists(path)) throw DatasetError("missing house file: " + path.string());
    House house = house_from_jsonl(read_file(path));
    if (house.id != h) throw DatasetError("house id mismatch in " + path.string());
    if (house.scenarios.size() != d.manifest.scenarios_per_house) {
      throw DatasetError("scenario count mismatch in " + path.string());
    }
    for (const auto& sc : house.scenarios) validate_scenario(sc, d.manifest);
    d.houses.push_back(std::move(house));
  }
  return d;
}

}  // namespace genlab::data
