#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "genlab/adam.hpp"
#include "genlab/autodiff.hpp"
#include "genlab/gradcheck.hpp"
#include "genlab/mlp.hpp"
#include "genlab/params.hpp"
#include "genlab/rng.hpp"

using namespace genlab;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

using OpFn = std::function<ad::Var(const std::vector<ad::Var>&)>;

/// Compares tape gradients of sum(op(inputs) ⊙ R) with central differences.
double op_gradient_error(const OpFn& op, const std::vector<Tensor>& inputs, Rng& rng) {
  Tensor weights;
  auto build = [&](ad::Tape& tape, const std::vector<Tensor>& values, bool grad,
                   std::vector<ad::Var>& vars) {
    vars.clear();
    for (const auto& v : values) vars.push_back(grad ? tape.variable(v) : tape.constant(v));
    ad::Var out = op(vars);
    if (weights.empty()) weights = random_tensor(out.rows(), out.cols(), rng);
    return ad::sum(ad::hadamard(out, tape.constant(weights)));
  };
  ad::Tape tape;
  std::vector<ad::Var> vars;
  ad::Var loss = build(tape, inputs, true, vars);
  tape.backward(loss);
  std::vector<Tensor> analytic;
  for (auto v : vars) analytic.push_back(tape.grad(v));
  const auto numeric = finite_diff_grad(
      [&](const std::vector<Tensor>& v) {
        ad::Tape t;
        std::vector<ad::Var> vs;
        return build(t, v, false, vs).value()(0, 0);
      },
      inputs, 1e-6);
  return max_relative_error(analytic, numeric);
}

struct OpCase {
  std::string name;
  std::function<std::vector<Tensor>(Rng&)> make_inputs;
  OpFn op;
};

Tensor away_from_zero(Tensor t) {
  for (std::size_t i = 0; i < t.size(); ++i)
    if (std::abs(t[i]) < 1e-2) t[i] = t[i] < 0 ? -0.5 : 0.5;
  return t;
}

std::vector<OpCase> op_cases() {
  auto dims = [](Rng& rng) { return std::pair{1 + rng.index(5), 1 + rng.index(5)}; };
  std::vector<OpCase> cases;
  cases.push_back({"matmul",
                   [&](Rng& rng) {
                     const std::size_t m = 1 + rng.index(5), k = 1 + rng.index(5), n = 1 + rng.index(5);
                     return std::vector<Tensor>{random_tensor(m, k, rng), random_tensor(k, n, rng)};
                   },
                   [](const auto& v) { return ad::matmul(v[0], v[1]); }});
  cases.push_back({"matmul_tn",
                   [&](Rng& rng) {
                     const std::size_t m = 1 + rng.index(5), k = 1 + rng.index(5), n = 1 + rng.index(5);
                     return std::vector<Tensor>{random_tensor(k, m, rng), random_tensor(k, n, rng)};
                   },
                   [](const auto& v) { return ad::matmul_tn(v[0], v[1]); }});
  cases.push_back({"transpose",
                   [&](Rng& rng) {
                     auto [r, c] = dims(rng);
                     return std::vector<Tensor>{random_tensor(r, c, rng)};
                   },
                   [](const auto& v) { return ad::transpose(v[0]); }});
  auto binary = [&](std::string name, std::function<ad::Var(ad::Var, ad::Var)> f) {
    cases.push_back({name,
                     [=](Rng& rng) {
                       auto [r, c] = dims(rng);
                       return std::vector<Tensor>{random_tensor(r, c, rng), random_tensor(r, c, rng)};
                     },
                     [f](const auto& v) { return f(v[0], v[1]); }});
  };
  binary("add", ad::add);
  binary("sub", ad::sub);
  binary("hadamard", ad::hadamard);
  auto unary = [&](std::string name, std::function<ad::Var(ad::Var)> f, bool kink = false) {
    cases.push_back({name,
                     [=](Rng& rng) {
                       auto [r, c] = dims(rng);
                       Tensor t = random_tensor(r, c, rng);
                       return std::vector<Tensor>{kink ? away_from_zero(t) : t};
                     },
                     [f](const auto& v) { return f(v[0]); }});
  };
  unary("scale", [](ad::Var a) { return ad::scale(a, -1.7); });
  unary("square", ad::square);
  unary("relu", ad::relu, true);
  unary("sum_rows", ad::sum_rows);
  unary("sum", ad::sum);
  unary("mean", ad::mean);
  unary("softmax_rows", ad::softmax_rows);
  cases.push_back({"add_row",
                   [&](Rng& rng) {
                     auto [r, c] = dims(rng);
                     return std::vector<Tensor>{random_tensor(r, c, rng), random_tensor(1, c, rng)};
                   },
                   [](const auto& v) { return ad::add_row(v[0], v[1]); }});
  cases.push_back({"concat_cols",
                   [&](Rng& rng) {
                     auto [r, c] = dims(rng);
                     return std::vector<Tensor>{random_tensor(r, c, rng), random_tensor(r, 1 + rng.index(3), rng)};
                   },
                   [](const auto& v) { return ad::concat_cols(v[0], v[1]); }});
  cases.push_back({"gather_rows",
                   [&](Rng& rng) {
                     auto [r, c] = dims(rng);
                     return std::vector<Tensor>{random_tensor(r, c, rng)};
                   },
                   [](const auto& v) {
                     std::vector<std::size_t> idx;
                     for (std::size_t i = 0; i < 7; ++i) idx.push_back((i * 5 + 3) % v[0].rows());
                     return ad::gather_rows(v[0], idx);
                   }});
  cases.push_back({"scatter_add_rows",
                   [&](Rng& rng) {
                     return std::vector<Tensor>{random_tensor(7, 1 + rng.index(4), rng)};
                   },
                   [](const auto& v) {
                     const std::vector<std::size_t> idx{0, 2, 2, 1, 0, 3, 2};
                     return ad::scatter_add_rows(v[0], idx, 5);
                   }});
  cases.push_back({"pairwise_distance_euclidean",
                   [&](Rng& rng) {
                     return std::vector<Tensor>{random_tensor(1 + rng.index(5), 2, rng),
                                                random_tensor(1 + rng.index(5), 2, rng)};
                   },
                   [](const auto& v) { return ad::pairwise_distance(v[0], v[1], kernels::Metric::Euclidean); }});
  cases.push_back({"pairwise_distance_geodesic",
                   [&](Rng& rng) {
                     auto unit_rows = [&](std::size_t n) {
                       Tensor t = random_tensor(n, 3, rng);
                       for (std::size_t i = 0; i < n; ++i) {
                         double s = 0;
                         for (std::size_t d = 0; d < 3; ++d) s += t(i, d) * t(i, d);
                         for (std::size_t d = 0; d < 3; ++d) t(i, d) *= 0.9 / std::sqrt(s);
                       }
                       return t;
                     };
                     return std::vector<Tensor>{unit_rows(1 + rng.index(5)), unit_rows(1 + rng.index(5))};
                   },
                   [](const auto& v) { return ad::pairwise_distance(v[0], v[1], kernels::Metric::Geodesic); }});
  cases.push_back({"mse_loss",
                   [&](Rng& rng) {
                     auto [r, c] = dims(rng);
                     return std::vector<Tensor>{random_tensor(r, c, rng)};
                   },
                   [](const auto& v) {
                     Tensor target = Tensor::zeros(v[0].rows(), v[0].cols());
                     for (std::size_t i = 0; i < target.size(); ++i) target[i] = 0.3 * static_cast<double>(i % 3);
                     return ad::mse_loss(v[0], target);
                   }});
  return cases;
}

}  // namespace

TEST_CASE("forward examples") {
  ad::Tape t;
  auto r = ad::relu(t.constant(Tensor::matrix(1, 3, {-1, 0, 2})));
  CHECK(r.value() == Tensor::matrix(1, 3, {0, 0, 2}));

  Rng rng(1);
  const Tensor v = random_tensor(3, 1, rng);
  Tensor eye = Tensor::zeros(3, 3);
  for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
  CHECK(ad::matmul(t.constant(eye), t.constant(v)).value() == v);

  auto s = ad::softmax_rows(t.constant(Tensor::matrix(1, 2, {0, 0})));
  CHECK(s.value()(0, 0) == 0.5);
  CHECK(s.value()(0, 1) == 0.5);
}

TEST_CASE("softmax is stable for large logits") {
  ad::Tape t;
  auto s = ad::softmax_rows(t.constant(Tensor::matrix(1, 2, {1000.0, 1000.0})));
  CHECK(s.value()(0, 0) == 0.5);
}

TEST_CASE("backward examples") {
  ad::Tape t;
  auto x = t.variable(Tensor::matrix(1, 2, {1, 2}));
  t.backward(ad::sum(ad::square(x)));
  CHECK(t.grad(x) == Tensor::matrix(1, 2, {2, 4}));

  ad::Tape t2;
  auto c = t2.constant(Tensor::matrix(1, 2, {1, 2}));
  auto y = t2.variable(Tensor::matrix(1, 2, {3, 4}));
  t2.backward(ad::sum(ad::add(ad::square(c), y)));
  CHECK(t2.grad(c) == Tensor::zeros(1, 2));
  CHECK(t2.grad(y) == Tensor::matrix(1, 2, {1, 1}));
}

TEST_CASE("backward errors") {
  ad::Tape t;
  auto x = t.variable(Tensor::matrix(1, 2, {1, 2}));
  CHECK_THROWS(t.backward(x));             // not scalar
  CHECK_THROWS(t.backward(ad::Var{}));     // detached
  ad::Tape other;
  auto y = other.variable(Tensor::scalar(1.0));
  CHECK_THROWS(t.backward(y));             // another tape
}

TEST_CASE("shape mismatch and non-finite values are errors") {
  ad::Tape t;
  auto a = t.variable(Tensor::zeros(2, 3));
  auto b = t.variable(Tensor::zeros(2, 2));
  CHECK_THROWS_AS(ad::matmul(a, b), std::invalid_argument);
  CHECK_THROWS_AS(ad::add(a, b), std::invalid_argument);
  auto big = t.variable(Tensor::matrix(1, 1, {1e200}));
  CHECK_THROWS_AS(ad::square(big), std::domain_error);
  CHECK_THROWS_AS(t.variable(Tensor::matrix(1, 1, {NAN})), std::domain_error);
}

TEST_CASE("every differentiable op matches central differences on 100 random instances") {
  for (const auto& c : op_cases()) {
    Rng rng(derive_seed(2024, std::hash<std::string>{}(c.name) & 0xffff));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      worst = std::max(worst, op_gradient_error(c.op, c.make_inputs(rng), rng));
    }
    INFO(c.name);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("finite differences") {
  const LossFn square = [](const std::vector<Tensor>& p) { return p[0][0] * p[0][0]; };
  auto g = finite_diff_grad(square, {Tensor::scalar(3.0)}, 1e-6);
  CHECK(std::abs(g[0][0] - 6.0) < 1e-6);

  const LossFn linear = [](const std::vector<Tensor>& p) { return 2.0 * p[0][0] - 0.5 * p[0][1]; };
  for (double step : {1e-3, 1e-1, 1.0}) {
    auto gl = finite_diff_grad(linear, {Tensor::matrix(1, 2, {0.25, -4.0})}, step);
    CHECK(gl[0][0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(gl[0][1] == doctest::Approx(-0.5).epsilon(1e-12));
  }
  CHECK_THROWS_AS(finite_diff_grad(square, {Tensor::scalar(1.0)}, 0.0), std::invalid_argument);
}

TEST_CASE("random two-layer MLP gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    ParamStore store;
    Mlp mlp("net", {4, 7, 3}, store, rng);
    const Tensor x = random_tensor(5, 4, rng);
    const Tensor target = random_tensor(5, 3, rng);
    auto loss_of = [&](ad::Tape& tape, const BoundParams& p) {
      return ad::mse_loss(mlp.forward(p, tape.constant(x)), target);
    };
    ad::Tape tape;
    auto p = bind(tape, store, true);
    tape.backward(loss_of(tape, p));
    const auto analytic = collect_gradients(tape, p);
    const auto numeric = finite_diff_grad(
        [&](const std::vector<Tensor>& values) {
          ParamStore s2 = store;
          s2.values() = values;
          ad::Tape t;
          return loss_of(t, bind(t, s2, false)).value()(0, 0);
        },
        store.values(), 1e-6);
    CHECK(max_relative_error(analytic, numeric) < 1e-6);
  }
}

TEST_CASE("MLP parameter count and shapes") {
  Rng rng(3);
  ParamStore store;
  Mlp mlp("m", {3, 48, 32}, store, rng);
  CHECK(mlp.param_count() == (3 + 1) * 48 + (48 + 1) * 32);
  CHECK(store.scalar_count() == mlp.param_count());
  CHECK(store.value(store.index_of("m.w0")).shape() == Tensor::Shape{3, 48});
  CHECK(store.value(store.index_of("m.b1")).shape() == Tensor::Shape{1, 32});
  const double bound = std::sqrt(6.0 / (3 + 48));
  for (double w : store.value(0).values()) CHECK(std::abs(w) <= bound);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> dims;
    const std::size_t layers = 2 + rng.index(4);
    for (std::size_t i = 0; i < layers; ++i) dims.push_back(1 + rng.index(20));
    std::size_t expect = 0;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) expect += (dims[i] + 1) * dims[i + 1];
    CHECK(Mlp::param_count(dims) == expect);
  }
  CHECK_THROWS(Mlp::attach("m", {3, 40, 32}, store));
}

TEST_CASE("forward pass is deterministic") {
  auto run = [] {
    Rng rng(99);
    ParamStore store;
    Mlp mlp("m", {3, 16, 2}, store, rng);
    ad::Tape t;
    return mlp.forward(bind(t, store, false), t.constant(random_tensor(4, 3, rng))).value();
  };
  CHECK(run() == run());
}

TEST_CASE("adam examples") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    std::vector<Tensor> p{Tensor::matrix(1, 2, {0.5, -1.0})};
    const auto before = p;
    AdamState s(0.1);
    adam_step(p, {Tensor::zeros(1, 2)}, s);
    CHECK(p == before);
  }
  SUBCASE("first bias-corrected step moves by the learning rate") {
    std::vector<Tensor> p{Tensor::scalar(2.0)};
    AdamState s(0.1);
    adam_step(p, {Tensor::scalar(1.0)}, s);
    // m̂ = 1, v̂ = 1, step = 0.1 · 1 / (1 + 1e-8)
    CHECK(p[0][0] == doctest::Approx(2.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));
    CHECK(s.step == 1);
  }
  SUBCASE("identical parameters get identical updates") {
    std::vector<Tensor> p{Tensor::scalar(1.0), Tensor::scalar(1.0)};
    AdamState s(0.01);
    for (int i = 0; i < 5; ++i) adam_step(p, {Tensor::scalar(0.3 * i), Tensor::scalar(0.3 * i)}, s);
    CHECK(p[0] == p[1]);
  }
  SUBCASE("errors") {
    std::vector<Tensor> p{Tensor::scalar(1.0)};
    AdamState s(0.01);
    CHECK_THROWS_AS(adam_step(p, {Tensor::zeros(1, 2)}, s), std::invalid_argument);
    CHECK_THROWS_AS(adam_step(p, {Tensor::scalar(INFINITY)}, s), std::domain_error);
    CHECK(p[0][0] == 1.0);
  }
}

TEST_CASE("parameter checkpoints round-trip") {
  Rng rng(5);
  ParamStore store;
  Mlp mlp("enc", {3, 5, 2}, store, rng);
  const nlohmann::json header{{"note", "x"}};
  const auto j = params_to_json(store, header);
  CHECK(j["format"] == "genlab-params");
  nlohmann::json back_header;
  const ParamStore back = params_from_json(nlohmann::json::parse(j.dump()), &back_header);
  CHECK(back == store);
  CHECK(back_header == header);
  auto bad = j;
  bad["version"] = 99;
  CHECK_THROWS(params_from_json(bad));
}
