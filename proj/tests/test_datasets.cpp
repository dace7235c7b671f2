#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "genlab/datasets.hpp"
#include "genlab/params.hpp"

using namespace genlab;
using namespace genlab::data;
namespace fs = std::filesystem;

namespace {

SquareDatasetConfig tiny_square() {
  SquareDatasetConfig c;
  c.houses = 4;
  c.scenarios = 3;
  c.train_houses = 3;
  c.interior_inputs = 10;
  c.source_inputs = 5;
  c.boundary_inputs = 6;
  c.train_queries = 7;
  c.test_queries = 9;
  c.oracle_resolution = 24;
  return c;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("genlab_test_" + name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string tree_bytes(const fs::path& dir) {
  std::string all;
  std::set<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.insert(fs::relative(e.path(), dir));
  for (const auto& f : files) all += f.string() + "\n" + read_file(dir / f);
  return all;
}

}  // namespace

TEST_CASE("without sources the field equals the wall value") {
  auto c = tiny_square();
  c.strength_min = c.strength_max = 0.0;
  const auto d = generate_square_dataset(c, 3);
  for (const auto& h : d.houses)
    for (const auto& s : h.scenarios) {
      const double t = s.parameters[0];
      for (const auto& q : s.queries) CHECK(std::abs(q.target[0] - t) < 1e-9);
    }
}

TEST_CASE("square dataset shape") {
  const auto c = tiny_square();
  const auto d = generate_square_dataset(c, 1);
  CHECK(d.houses.size() == 4);
  CHECK(d.manifest.train_houses.size() == 3);
  CHECK(d.manifest.test_houses.size() == 1);
  CHECK(d.manifest.input_dims == std::vector<std::size_t>{3, 3});
  CHECK(d.manifest.full_scale.contains("houses"));
  std::set<std::size_t> train(d.manifest.train_houses.begin(), d.manifest.train_houses.end());
  for (auto t : d.manifest.test_houses) CHECK(train.count(t) == 0);
  CHECK(d.split("train").size() == 3);
  CHECK(d.split("test").size() == 1);
  CHECK_THROWS(d.split("validation"));
  for (const auto& h : d.houses) {
    CHECK(h.scenarios.size() == 3);
    CHECK(!h.sources.empty());
    for (const auto& r : h.sources) {
      CHECK(r.x0 > 0.0);
      CHECK(r.x1 < 1.0);
      CHECK(r.y0 > 0.0);
      CHECK(r.y1 < 1.0);
    }
    const bool is_train = train.count(h.id) > 0;
    for (const auto& s : h.scenarios) {
      CHECK(s.queries.size() == (is_train ? 7u : 9u));
      CHECK(s.inputs.size() == 21);
      CHECK(s.parameters.size() == 1 + h.sources.size());
      std::size_t walls = 0;
      for (const auto& in : s.inputs) {
        if (in.channel == 1) {
          ++walls;
          CHECK(in.value == std::vector<double>{0.0, s.parameters[0], 1.0});
          const bool on_wall = in.x[0] == 0.0 || in.x[0] == 1.0 || in.x[1] == 0.0 || in.x[1] == 1.0;
          CHECK(on_wall);
        } else {
          CHECK(in.value[1] == 0.0);
          CHECK(in.value[2] == 0.0);
        }
      }
      CHECK(walls == 6);
      // all scenarios of a house share the geometry
      CHECK_NOTHROW(validate_scenario(s, d.manifest));
    }
  }
}

TEST_CASE("generation is deterministic and round trips byte for byte") {
  const auto c = tiny_square();
  TempDir a("a"), b("b"), r("r");
  save_dataset(generate_square_dataset(c, 42), a.path);
  save_dataset(generate_square_dataset(c, 42), b.path);
  CHECK(tree_bytes(a.path) == tree_bytes(b.path));
  const auto loaded = load_dataset(a.path);
  save_dataset(loaded, r.path);
  CHECK(tree_bytes(a.path) == tree_bytes(r.path));
  const auto fresh = generate_square_dataset(c, 42);
  CHECK(loaded.houses[2].scenarios == fresh.houses[2].scenarios);
  CHECK(loaded.houses[2].sources == fresh.houses[2].sources);
  CHECK_FALSE(generate_square_dataset(c, 43).houses[0].scenarios == fresh.houses[0].scenarios);

  SphereDatasetConfig sc;
  sc.houses = 3;
  sc.scenarios = 2;
  sc.train_houses = 2;
  sc.inputs = 5;
  sc.queries = 4;
  TempDir s1("s1"), s2("s2");
  save_dataset(generate_sphere_dataset(sc, 9), s1.path);
  save_dataset(load_dataset(s1.path), s2.path);
  CHECK(tree_bytes(s1.path) == tree_bytes(s2.path));
}

TEST_CASE("house jsonl") {
  const auto d = generate_square_dataset(tiny_square(), 8);
  const auto text = house_to_jsonl(d.houses[1]);
  std::istringstream lines(text);
  std::string first;
  std::getline(lines, first);
  const auto header = nlohmann::json::parse(first);
  CHECK(header.at("house") == 1);
  const auto back = house_from_jsonl(text);
  CHECK(back.id == 1);
  CHECK(back.scenarios == d.houses[1].scenarios);
  CHECK(house_to_jsonl(back) == text);
  CHECK(house_filename(7) == "house_007.jsonl");
  CHECK_THROWS(house_from_jsonl("{not json"));
}

TEST_CASE("load errors") {
  TempDir t("err");
  CHECK_THROWS_AS(load_dataset(t.path), DatasetError);

  save_dataset(generate_square_dataset(tiny_square(), 2), t.path);
  const auto manifest = t.path / "manifest.json";
  const std::string original = read_file(manifest);

  auto j = nlohmann::json::parse(original);
  j["version"] = kDatasetVersion + 1;
  write_file_atomic(manifest, j.dump(2));
  CHECK_THROWS_AS(load_dataset(t.path), DatasetError);

  j = nlohmann::json::parse(original);
  j["test_houses"] = std::vector<std::size_t>{};
  write_file_atomic(manifest, j.dump(2));
  CHECK_THROWS_AS(load_dataset(t.path), DatasetError);

  j = nlohmann::json::parse(original);
  j["house_count"] = 5;
  write_file_atomic(manifest, j.dump(2));
  CHECK_THROWS_AS(load_dataset(t.path), DatasetError);

  write_file_atomic(manifest, original);
  CHECK_NOTHROW(load_dataset(t.path));

  // a sample moved outside the unit square
  const auto house = t.path / "houses" / house_filename(0);
  auto h = house_from_jsonl(read_file(house));
  h.scenarios[0].inputs[0].x = {1.5, 0.5};
  write_file_atomic(house, house_to_jsonl(h));
  CHECK_THROWS_AS(load_dataset(t.path), DatasetError);

  fs::remove(house);
  CHECK_THROWS_AS(load_dataset(t.path), DatasetError);
}

TEST_CASE("sphere dataset targets are centred") {
  SphereDatasetConfig c;
  c.houses = 6;
  c.scenarios = 8;
  c.train_houses = 4;
  const auto d = generate_sphere_dataset(c, 5);
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& h : d.houses) {
    CHECK(h.directions.size() == 8);
    for (const auto& v : h.directions) CHECK(std::abs(std::hypot(v[0], v[1], v[2]) - 1.0) < 1e-12);
    for (const auto& s : h.scenarios)
      for (const auto& q : s.queries) {
        sum += q.target[0];
        sq += q.target[0] * q.target[0];
        ++n;
        CHECK(std::abs(std::hypot(q.x[0], q.x[1], q.x[2]) - 1.0) < 1e-9);
      }
  }
  const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / n);
  MESSAGE("sphere target mean " << mean << " stderr " << se);
  CHECK(std::abs(mean) < 3 * se);
  CHECK(d.manifest.space == geometry::kUnitSphere);
}

TEST_CASE("global integral task") {
  CHECK(grid_integral([](double x, double y) { return x <= 0.5 && y <= 0.5 ? 1.0 : 0.0; }, 64) == 0.25);
  CHECK(grid_integral([](double x, double) { return x; }, 10) == doctest::Approx(0.5));

  GlobalTaskConfig c;
  c.houses = 3;
  c.scenarios = 4;
  c.train_houses = 2;
  c.oracle_resolution = 128;
  const auto d = generate_global_task(c, 11);
  for (const auto& h : d.houses)
    for (const auto& s : h.scenarios) {
      REQUIRE(s.queries.size() == 1);
      CHECK(s.queries[0].x.empty());
      // the target approximates Σ strength × area up to a boundary-cell error
      double exact = 0.0, perimeter = 0.0;
      for (std::size_t i = 0; i < h.sources.size(); ++i) {
        exact += s.parameters[i] * h.sources[i].area();
        perimeter += std::abs(s.parameters[i]) * 2 *
                     ((h.sources[i].x1 - h.sources[i].x0) + (h.sources[i].y1 - h.sources[i].y0));
      }
      // overlapping rectangles add, which the piecewise ψ reproduces
      CHECK(std::abs(s.queries[0].target[0] - exact) <= perimeter / 128.0 + 1e-12);
    }

  // scaling every strength scales the target
  auto scaled = c;
  scaled.strength_min = 3 * c.strength_min;
  scaled.strength_max = 3 * c.strength_max;
  const auto d3 = generate_global_task(scaled, 11);
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t s = 0; s < 4; ++s)
      CHECK(d3.houses[h].scenarios[s].queries[0].target[0] ==
            doctest::Approx(3 * d.houses[h].scenarios[s].queries[0].target[0]).epsilon(1e-12));
}

TEST_CASE("configs round trip through json") {
  auto c = tiny_square();
  c.side_max = 0.25;
  CHECK(SquareDatasetConfig::from_json(c.to_json()).side_max == 0.25);
  CHECK(SquareDatasetConfig::from_json(c.to_json()).houses == 4);
  CHECK(SphereDatasetConfig::from_json(nlohmann::json::object()).directions == 8);
  CHECK(GlobalTaskConfig::from_json({{"uniform_inputs", 5}}).uniform_inputs == 5);
  CHECK(kind_from_name(kind_name(DatasetKind::GlobalIntegral)) == DatasetKind::GlobalIntegral);
  CHECK_THROWS(kind_from_name("wave"));
}
