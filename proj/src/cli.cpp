#include "genlab/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef GENLAB_HAVE_OPENMP
#include <omp.h>
#endif

#include "genlab/datasets.hpp"
#include "genlab/gen_model.hpp"
#include "genlab/np_baseline.hpp"
#include "genlab/params.hpp"
#include "genlab/rng.hpp"
#include "genlab/svg.hpp"
#include "genlab/train_eval.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace genlab::cli {

std::vector<std::size_t> parse_sizes(const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(s, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (s.empty() || pos != s.size()) throw std::invalid_argument("invalid size list '" + text + "'");
    return static_cast<std::size_t>(v);
  };
  std::vector<std::size_t> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const std::size_t lo = number(text.substr(0, dots)), hi = number(text.substr(dots + 2));
    if (lo > hi) throw std::invalid_argument("empty size range '" + text + "'");
    for (std::size_t k = lo; k <= hi; ++k) out.push_back(k);
    return out;
  }
  std::istringstream is(text);
  std::string part;
  while (std::getline(is, part, ',')) out.push_back(number(part));
  if (out.empty()) throw std::invalid_argument("empty size list");
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (std::size_t v : parse_sizes(text)) out.push_back(v);
  return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Merges flags over an optional JSON config file and records the result.
class Resolver {
 public:
  Resolver(CLI::App* app, const std::string& config_path) : app_(app) {
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw UsageError("config file not found: " + config_path);
      try {
        file_ = json::parse(read_file(config_path));
      } catch (const json::exception& e) {
        throw UsageError("malformed config file: " + std::string(e.what()));
      }
      if (!file_.is_object()) throw UsageError("config file must hold a JSON object");
    }
  }

  template <class T>
  T get(const std::string& key, const T& flag, const T& fallback) {
    T v = fallback;
    if (file_.contains(key)) {
      try {
        v = file_[key].get<T>();
      } catch (const json::exception&) {
        throw UsageError("config key '" + key + "' has the wrong type");
      }
    }
    if (app_->count("--" + key) > 0) v = flag;
    resolved_[key] = v;
    return v;
  }

  bool has(const std::string& key) const { return file_.contains(key) || app_->count("--" + key) > 0; }

  std::uint64_t seed(std::uint64_t flag) {
    std::uint64_t fallback = 0;
    if (const char* env = std::getenv("GEN_LAB_SEED"); env && *env) {
      try {
        std::size_t pos = 0;
        fallback = std::stoull(env, &pos);
        if (pos != std::string(env).size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw UsageError("GEN_LAB_SEED must be a non-negative integer");
      }
    }
    return get<std::uint64_t>("seed", flag, fallback);
  }

  json& resolved() { return resolved_; }

 private:
  CLI::App* app_;
  json file_ = json::object();
  json resolved_ = json::object();
};

void set_threads(std::size_t jobs) {
#ifdef GENLAB_HAVE_OPENMP
  if (jobs > 0) omp_set_num_threads(static_cast<int>(jobs));
#else
  (void)jobs;
#endif
}

/// Refuses to reuse a non-empty directory unless forced; with force, removes
/// only the entries this tool writes.
void prepare_output(const fs::path& dir, bool force, std::initializer_list<const char*> owned) {
  if (fs::exists(dir) && !fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw std::runtime_error("output directory " + dir.string() + " is not empty (use --force)");
    for (const char* name : owned) fs::remove_all(dir / name);
  }
  fs::create_directories(dir);
}

void save_config(const fs::path& dir, const std::string& command, json resolved) {
  resolved["command"] = command;
  write_file_atomic(dir / "config.json", resolved.dump(2) + "\n");
}

struct LoadedCheckpoint {
  json header;
  ParamStore params;
};

LoadedCheckpoint load_checkpoint(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("checkpoint not found: " + path);
  LoadedCheckpoint c;
  c.params = params_from_json(json::parse(read_file(path)), &c.header);
  return c;
}

GenSpec base_gen_spec(const data::DatasetManifest& m, const std::string& rep, double temperature,
                      std::size_t latent) {
  GenSpec spec;
  spec.input_dims = m.input_dims;
  spec.output_dims = m.output_dims;
  spec.latent_dim = latent;
  spec.representation.kind = representation_from_name(rep);
  spec.representation.temperature = temperature;
  return spec;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string config, space = "square", out;
  std::size_t houses = 20, scenarios = 16, train_houses = 16, oracle_m = 64, jobs = 0;
  std::uint64_t seed = 0;
  bool force = false;
};

void add_common(CLI::App* c, std::string& config, std::uint64_t* seed, std::size_t* jobs) {
  c->add_option("--config", config, "JSON config file; flags override its values");
  if (seed) c->add_option("--seed", *seed, "Seed (falls back to GEN_LAB_SEED, then 0)");
  if (jobs) c->add_option("--jobs", *jobs, "Worker threads (0 = default)");
}

int cmd_generate(CLI::App* app, const GenerateArgs& a, std::ostream& out) {
  Resolver r(app, a.config);
  const auto space = r.get("space", a.space, std::string("square"));
  if (space != "square" && space != "sphere" && space != "global") {
    throw UsageError("unknown space '" + space + "' (square, sphere, global)");
  }
  const auto houses = r.get("houses", a.houses, std::size_t{20});
  const auto scenarios = r.get("scenarios", a.scenarios, std::size_t{16});
  const auto train_houses =
      r.get("train-houses", a.train_houses, std::min<std::size_t>(houses, houses * 4 / 5));
  const auto oracle_m = r.get("oracle-m", a.oracle_m, std::size_t{64});
  const auto seed = r.seed(a.seed);
  const auto dir = r.get("out", a.out, std::string());
  if (dir.empty()) throw UsageError("--out is required");
  set_threads(r.get("jobs", a.jobs, std::size_t{0}));

  prepare_output(dir, a.force, {"manifest.json", "houses", "config.json"});
  data::Dataset d;
  if (space == "square") {
    data::SquareDatasetConfig c;
    c.houses = houses;
    c.scenarios = scenarios;
    c.train_houses = train_houses;
    c.oracle_resolution = oracle_m;
    d = data::generate_square_dataset(c, seed);
  } else if (space == "sphere") {
    data::SphereDatasetConfig c;
    c.houses = houses;
    c.scenarios = scenarios;
    c.train_houses = train_houses;
    d = data::generate_sphere_dataset(c, seed);
  } else {
    data::GlobalTaskConfig c;
    c.houses = houses;
    c.scenarios = scenarios;
    c.train_houses = train_houses;
    c.oracle_resolution = oracle_m;
    d = data::generate_global_task(c, seed);
  }
  data::save_dataset(d, dir);
  save_config(dir, "generate", r.resolved());
  const std::string manifest = read_file(fs::path(dir) / "manifest.json");
  out << "dataset " << dir << "\n"
      << "  kind " << data::kind_name(d.manifest.kind) << ", space " << d.manifest.space.name() << "\n"
      << "  houses " << d.manifest.house_count << " (train " << d.manifest.train_houses.size()
      << ", test " << d.manifest.test_houses.size() << "), scenarios per house "
      << d.manifest.scenarios_per_house << "\n"
      << "  seed " << seed << ", manifest hash " << hex(fnv1a(manifest)) << "\n";
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config, data, model = "gen", mesh = "2..5", seeds, out, representation = "soft_nearest";
  std::size_t epochs = 0, batch_size = 1, latent = 32, jobs = 1, steps = 0;
  double lr = 3e-3, temperature = 1.0, final_lr_fraction = 0.01, grad_clip = 1.0;
  std::uint64_t seed = 0;
  bool force = false;
};

struct SeedOutcome {
  train::EvalReport report;
  std::string log;
  std::exception_ptr error;
};

int cmd_train(CLI::App* app, const TrainArgs& a, std::ostream& out) {
  Resolver r(app, a.config);
  const auto data_dir = r.get("data", a.data, std::string());
  if (data_dir.empty()) throw UsageError("--data is required");
  const auto model_kind = r.get("model", a.model, std::string("gen"));
  if (model_kind != "gen" && model_kind != "np") throw UsageError("--model must be gen or np");
  const auto sizes = parse_sizes(r.get("mesh", a.mesh, std::string("2..5")));
  const auto epochs = r.get("epochs", a.epochs, model_kind == "gen" ? std::size_t{50} : std::size_t{300});
  const auto batch = r.get("batch-size", a.batch_size, std::size_t{1});
  const auto lr = r.get("lr", a.lr, 3e-3);
  const auto final_lr = r.get("final-lr-fraction", a.final_lr_fraction, 0.01);
  const auto clip = r.get("grad-clip", a.grad_clip, 1.0);
  const auto rep = r.get("representation", a.representation, std::string("soft_nearest"));
  const auto temperature = r.get("temperature", a.temperature, 1.0);
  const auto latent = r.get("latent", a.latent, std::size_t{32});
  const auto jobs = std::max<std::size_t>(1, r.get("jobs", a.jobs, std::size_t{1}));
  const auto fixed_steps = r.get("steps", a.steps, std::size_t{0});
  const auto seed = r.seed(a.seed);
  std::vector<std::uint64_t> seeds{seed};
  if (r.has("seeds")) seeds = parse_seeds(r.get("seeds", a.seeds, std::string()));
  const auto dir = r.get("out", a.out, std::string());
  if (dir.empty()) throw UsageError("--out is required");

  const data::Dataset d = data::load_dataset(data_dir);
  const bool global = d.manifest.kind == data::DatasetKind::GlobalIntegral;
  if (global && model_kind == "np") throw UsageError("the baseline is not defined for the global task");
  const GenSpec spec = base_gen_spec(d.manifest, rep, temperature, latent);
  const std::optional<std::size_t> steps =
      fixed_steps > 0 ? std::optional<std::size_t>(fixed_steps) : std::nullopt;
  const auto meshes = train::grid_mesh_configs(d.manifest.space, sizes, steps);
  const NpSpec np_spec = NpSpec::matched(d.manifest.space.dim(), d.manifest.input_dims,
                                         d.manifest.output_dims, GenModel(spec, 0).param_count());

  prepare_output(dir, a.force, {"config.json", "eval.csv"});
  json resolved = r.resolved();
  std::string seed_list;
  for (auto s : seeds) seed_list += (seed_list.empty() ? "" : ",") + std::to_string(s);
  resolved["seeds"] = seed_list;
  save_config(dir, "train", resolved);

  std::vector<ScenarioBatch> train_b, test_b;
  std::vector<train::GlobalSample> train_g, test_g;
  if (global) {
    train_g = train::global_samples(d, "train");
    test_g = train::global_samples(d, "test");
  } else {
    train_b = train::split_batches(d, "train");
    test_b = train::split_batches(d, "test");
  }

  std::vector<SeedOutcome> results(seeds.size());
  auto run_seed = [&](std::size_t i) {
    const std::uint64_t s = seeds[i];
    const fs::path sdir = fs::path(dir) / ("seed_" + std::to_string(s));
    fs::create_directories(sdir);
    train::TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch;
    tc.learning_rate = lr;
    tc.final_lr_fraction = final_lr;
    tc.grad_clip = clip;
    tc.mesh_sizes = sizes;
    tc.seed = s;
    tc.message_steps = steps;
    json header{{"model", model_kind}, {"dataset_kind", data::kind_name(d.manifest.kind)},
                {"space", d.manifest.space.name()}, {"seed", s}, {"train", tc.to_json()}};
    train::TrainHistory hist;
    std::ostringstream log;
    if (model_kind == "gen") {
      GenModel model(spec, s);
      header["spec"] = spec.to_json();
      header["trained_sizes"] = sizes;
      auto checkpoint = [&](std::size_t epoch, const train::TrainHistory& h) {
        json hd = header;
        hd["epoch"] = epoch;
        write_file_atomic(sdir / "checkpoint.json", params_to_json(model.params(), hd).dump() + "\n");
        write_file_atomic(sdir / "loss.csv", h.to_csv());
      };
      if (global) {
        train::train_gen_global(model, train_g, meshes, tc, &hist);
        checkpoint(epochs, hist);
        for (const auto& m : meshes) {
          results[i].report.rows.push_back({"gen", m.mesh.order, s, "test",
                                            train::gen_global_mse(model, test_g, m),
                                            model.param_count(), hist.epochs.empty() ? 0.0 : hist.epochs.back().wall_s});
        }
      } else {
        train::train_gen(model, train_b, meshes, tc, &hist, checkpoint);
        results[i].report = train::evaluate_gen(model, test_b, meshes, s, "test");
      }
    } else {
      NpBaseline model(np_spec, s);
      header["spec"] = np_spec.to_json();
      auto checkpoint = [&](std::size_t epoch, const train::TrainHistory& h) {
        json hd = header;
        hd["epoch"] = epoch;
        write_file_atomic(sdir / "checkpoint.json", params_to_json(model.params(), hd).dump() + "\n");
        write_file_atomic(sdir / "loss.csv", h.to_csv());
      };
      train::train_np(model, train_b, tc, &hist, checkpoint);
      results[i].report = train::evaluate_np(model, test_b, s, "test");
    }
    write_file_atomic(sdir / "eval.csv", results[i].report.to_csv());
    log << "seed " << s << ": final train loss "
        << (hist.epochs.empty() ? 0.0 : hist.epochs.back().loss) << ", "
        << (hist.epochs.empty() ? 0.0 : hist.epochs.back().wall_s) << " s\n";
    results[i].log = log.str();
  };

  std::vector<std::thread> workers;
  std::mutex mu;
  std::size_t next = 0;
  for (std::size_t w = 0; w < std::min(jobs, seeds.size()); ++w) {
    workers.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lock(mu);
          if (next >= seeds.size()) return;
          i = next++;
        }
        try {
          run_seed(i);
        } catch (...) {
          results[i].error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();

  train::EvalReport all;
  for (auto& res : results) {
    if (res.error) std::rethrow_exception(res.error);
    out << res.log;
    all.append(res.report);
  }
  write_file_atomic(fs::path(dir) / "eval.csv", all.to_csv());
  for (const auto& s : all.summary()) {
    out << s.model << " k=" << s.mesh_k << " " << s.split << " mse mean " << s.mean << " std " << s.std
        << " (" << s.seeds << " seeds)\n";
  }
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string config, checkpoint, data, split = "test", mesh, probe, out;
  std::uint64_t seed = 0;
};

int cmd_evaluate(CLI::App* app, const EvaluateArgs& a, std::ostream& out) {
  Resolver r(app, a.config);
  const auto ckpt = r.get("checkpoint", a.checkpoint, std::string());
  const auto data_dir = r.get("data", a.data, std::string());
  if (ckpt.empty() || data_dir.empty()) throw UsageError("--checkpoint and --data are required");
  const auto split = r.get("split", a.split, std::string("test"));
  const auto path = r.get("out", a.out, std::string());
  if (path.empty()) throw UsageError("--out is required");
  const auto c = load_checkpoint(ckpt);
  const auto seed = r.get<std::uint64_t>("seed", a.seed, c.header.value("seed", std::uint64_t{0}));
  const data::Dataset d = data::load_dataset(data_dir);
  const auto batches = train::split_batches(d, split);
  train::EvalReport rep;
  const std::string kind = c.header.at("model").get<std::string>();
  std::optional<std::size_t> steps;
  if (c.header.contains("train") && c.header["train"]["message_steps"].is_number_unsigned()) {
    steps = c.header["train"]["message_steps"].get<std::size_t>();
  }
  if (kind == "gen") {
    const GenModel model(GenSpec::from_json(c.header.at("spec")), c.params);
    std::string default_mesh = "2..5";
    if (c.header.contains("trained_sizes")) {
      std::string s;
      for (std::size_t k : c.header["trained_sizes"].get<std::vector<std::size_t>>()) {
        s += (s.empty() ? "" : ",") + std::to_string(k);
      }
      default_mesh = s;
    }
    const auto sizes = parse_sizes(r.get("mesh", a.mesh, default_mesh));
    rep = train::evaluate_gen(model, batches, train::grid_mesh_configs(d.manifest.space, sizes, steps),
                              seed, split);
    const auto probe = r.get("probe", a.probe, std::string());
    if (!probe.empty()) {
      rep.append(train::evaluate_gen(model, batches,
                                     train::grid_mesh_configs(d.manifest.space, parse_sizes(probe), steps),
                                     seed, "extrapolation"));
    }
  } else if (kind == "np") {
    const NpBaseline model(NpSpec::from_json(c.header.at("spec")), c.params);
    rep = train::evaluate_np(model, batches, seed, split);
  } else {
    throw std::runtime_error("checkpoint has unknown model kind '" + kind + "'");
  }
  write_file_atomic(path, rep.to_csv());
  json resolved = r.resolved();
  resolved["command"] = "evaluate";
  write_file_atomic(fs::path(path).replace_extension(".config.json"), resolved.dump(2) + "\n");
  for (const auto& row : rep.rows) {
    out << row.model << " k=" << row.mesh_k << " " << row.split << " mse " << row.mse << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- optimize-mesh

struct OptimizeArgs {
  std::string config, checkpoint, data, houses, mesh = "3,4", out;
  std::size_t fit = 4, steps = 200;
  double lr = 3e-4;
  std::uint64_t seed = 0;
  bool force = false;
};

int cmd_optimize(CLI::App* app, const OptimizeArgs& a, std::ostream& out) {
  Resolver r(app, a.config);
  const auto ckpt = r.get("checkpoint", a.checkpoint, std::string());
  const auto data_dir = r.get("data", a.data, std::string());
  if (ckpt.empty() || data_dir.empty()) throw UsageError("--checkpoint and --data are required");
  const auto sizes = parse_sizes(r.get("mesh", a.mesh, std::string("3,4")));
  const auto fit = r.get("fit-scenarios", a.fit, std::size_t{4});
  const auto steps = r.get("steps", a.steps, std::size_t{200});
  const auto lr = r.get("lr", a.lr, 3e-4);
  const auto seed = r.seed(a.seed);
  const auto dir = r.get("out", a.out, std::string());
  if (dir.empty()) throw UsageError("--out is required");

  const auto c = load_checkpoint(ckpt);
  if (c.header.value("model", std::string()) != "gen") throw std::runtime_error("optimize-mesh needs a GEN checkpoint");
  const GenModel model(GenSpec::from_json(c.header.at("spec")), c.params);
  const data::Dataset d = data::load_dataset(data_dir);
  std::vector<std::size_t> house_ids = d.manifest.test_houses;
  if (r.has("houses")) house_ids = parse_sizes(r.get("houses", a.houses, std::string()));

  prepare_output(dir, a.force, {"config.json", "optimize.csv", "meshes"});
  save_config(dir, "optimize-mesh", r.resolved());
  train::TrainConfig tc;
  tc.position_learning_rate = lr;
  tc.position_steps = steps;
  tc.seed = seed;
  std::string csv = "house,mesh_k,init,mse_before,mse_after,jitter_retries\n";
  for (std::size_t h : house_ids) {
    const auto batches = train::house_batches(d, d.houses.at(h));
    if (batches.size() <= fit) throw std::runtime_error("house has too few scenarios for the fit/held-out split");
    const std::vector<ScenarioBatch> fit_b(batches.begin(), batches.begin() + static_cast<long>(fit));
    const std::vector<ScenarioBatch> held(batches.begin() + static_cast<long>(fit), batches.end());
    for (std::size_t k : sizes) {
      for (std::size_t init = 0; init < 2; ++init) {
        const std::uint64_t hseed = 1 + derive_seed(seed, (h * 64 + k) * 2 + init) % 1000000;
        const auto mesh = train::halton_mesh(k * k, hseed);
        const auto res = train::optimize_node_positions(model, fit_b, held, mesh, tc);
        const std::string stem = "house_" + std::to_string(h) + "_k" + std::to_string(k) + "_init" + std::to_string(init);
        write_file_atomic(fs::path(dir) / "meshes" / (stem + "_initial.json"), geometry::mesh_to_json(res.initial).dump() + "\n");
        write_file_atomic(fs::path(dir) / "meshes" / (stem + ".json"), geometry::mesh_to_json(res.final).dump() + "\n");
        write_file_atomic(fs::path(dir) / "meshes" / (stem + ".svg"),
                          svg::mesh_svg(res.final, "house " + std::to_string(h) + ", k=" + std::to_string(k)));
        char line[256];
        std::snprintf(line, sizeof line, "%zu,%zu,%zu,%.17g,%.17g,%zu\n", h, k, init, res.mse_before,
                      res.mse_after, res.jitter_retries);
        csv += line;
        out << "house " << h << " k=" << k << " init " << init << ": mse " << res.mse_before << " -> "
            << res.mse_after << "\n";
      }
    }
  }
  write_file_atomic(fs::path(dir) / "optimize.csv", csv);
  return 0;
}

// ---------------------------------------------------------------- plot

struct PlotArgs {
  std::string config, split = "test", out, title;
  std::vector<std::string> reports;
};

int cmd_plot(CLI::App* app, const PlotArgs& a, std::ostream& out) {
  Resolver r(app, a.config);
  const auto reports = r.get("report", a.reports, std::vector<std::string>{});
  if (reports.empty()) throw UsageError("at least one --report is required");
  const auto split = r.get("split", a.split, std::string("test"));
  const auto path = r.get("out", a.out, std::string());
  if (path.empty()) throw UsageError("--out is required");
  const auto title = r.get("title", a.title, std::string());
  train::EvalReport all;
  for (const auto& f : reports) {
    if (!fs::exists(f)) throw std::runtime_error("report not found: " + f);
    all.append(train::EvalReport::from_csv(read_file(f)));
  }
  write_file_atomic(path, svg::mse_plot_svg(all, split, title));
  out << "wrote " << path << "\n";
  return 0;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::string config;
  double step = 1e-6, tol = 1e-5;
  std::uint64_t seed = 0;
};

int cmd_gradcheck(CLI::App* app, const GradcheckArgs& a, std::ostream& out) {
  Resolver r(app, a.config);
  const auto seed = r.seed(a.seed);
  const auto step = r.get("step", a.step, 1e-6);
  const auto tol = r.get("tol", a.tol, 1e-5);
  const auto res = train::gen_gradient_check(seed, step);
  out << "parameters: " << res.param_coords << " coords, max relative error " << res.max_param_error << "\n"
      << "positions:  " << res.position_coords << " coords, max relative error " << res.max_position_error
      << "\n";
  const bool ok = res.max_param_error < tol && res.max_position_error < tol;
  out << (ok ? "PASS" : "FAIL") << " (tolerance " << tol << ")\n";
  return ok ? 0 : 1;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph Element Network experiments", "gen-lab"};
  app.require_subcommand(1);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Generate a dataset");
  add_common(gen, ga.config, &ga.seed, &ga.jobs);
  gen->add_option("--space", ga.space, "square, sphere or global");
  gen->add_option("--houses", ga.houses);
  gen->add_option("--scenarios", ga.scenarios, "Scenarios per house");
  gen->add_option("--train-houses", ga.train_houses);
  gen->add_option("--oracle-m", ga.oracle_m, "Poisson oracle grid size");
  gen->add_option("--out", ga.out, "Output directory");
  gen->add_flag("--force", ga.force, "Replace an existing dataset");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train a GEN or the baseline");
  add_common(tr, ta.config, &ta.seed, &ta.jobs);
  tr->add_option("--data", ta.data, "Dataset directory");
  tr->add_option("--model", ta.model, "gen or np");
  tr->add_option("--mesh", ta.mesh, "Mesh sizes, e.g. 2..7 or 2,4");
  tr->add_option("--epochs", ta.epochs);
  tr->add_option("--seeds", ta.seeds, "Seed list, e.g. 0,1,2 or 0..2");
  tr->add_option("--batch-size", ta.batch_size);
  tr->add_option("--lr", ta.lr);
  tr->add_option("--final-lr-fraction", ta.final_lr_fraction, "Cosine decay to this fraction of --lr (1 = constant)");
  tr->add_option("--grad-clip", ta.grad_clip, "Global gradient norm limit (0 = off)");
  tr->add_option("--representation", ta.representation, "soft_nearest or bilinear_grid");
  tr->add_option("--temperature", ta.temperature, "Soft-nearest temperature");
  tr->add_option("--latent", ta.latent, "Latent dimension");
  tr->add_option("--steps", ta.steps, "Fixed message-passing rounds (default 2(k-1))");
  tr->add_option("--out", ta.out, "Run directory");
  tr->add_flag("--force", ta.force);

  OptimizeArgs oa;
  auto* opt = app.add_subcommand("optimize-mesh", "Optimize node positions with frozen weights");
  add_common(opt, oa.config, &oa.seed, nullptr);
  opt->add_option("--checkpoint", oa.checkpoint);
  opt->add_option("--data", oa.data);
  opt->add_option("--houses", oa.houses, "House ids (default: test houses)");
  opt->add_option("--mesh", oa.mesh, "Node counts k*k to optimize");
  opt->add_option("--fit-scenarios", oa.fit);
  opt->add_option("--steps", oa.steps);
  opt->add_option("--lr", oa.lr);
  opt->add_option("--out", oa.out);
  opt->add_flag("--force", oa.force);

  EvaluateArgs ea;
  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  add_common(ev, ea.config, &ea.seed, nullptr);
  ev->add_option("--checkpoint", ea.checkpoint);
  ev->add_option("--data", ea.data);
  ev->add_option("--split", ea.split, "train or test");
  ev->add_option("--mesh", ea.mesh, "Mesh sizes (default: trained sizes)");
  ev->add_option("--probe", ea.probe, "Extra sizes reported as extrapolation rows");
  ev->add_option("--out", ea.out, "CSV path");

  PlotArgs pa;
  auto* pl = app.add_subcommand("plot", "MSE versus mesh size figure");
  add_common(pl, pa.config, nullptr, nullptr);
  pl->add_option("--report", pa.reports, "Eval CSV (repeatable)");
  pl->add_option("--split", pa.split);
  pl->add_option("--title", pa.title);
  pl->add_option("--out", pa.out, "SVG path");

  GradcheckArgs ca;
  auto* gc = app.add_subcommand("gradcheck", "Check GEN gradients against finite differences");
  add_common(gc, ca.config, &ca.seed, nullptr);
  gc->add_option("--step", ca.step);
  gc->add_option("--tol", ca.tol);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*gen) return cmd_generate(gen, ga, out);
    if (*tr) return cmd_train(tr, ta, out);
    if (*opt) return cmd_optimize(opt, oa, out);
    if (*ev) return cmd_evaluate(ev, ea, out);
    if (*pl) return cmd_plot(pl, pa, out);
    if (*gc) return cmd_gradcheck(gc, ca, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace genlab::cli
