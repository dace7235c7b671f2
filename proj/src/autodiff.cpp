#include "genlab/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace genlab::ad {

using kernels::GemmShape;
using kernels::Trans;

const Tensor& Var::value() const {
  if (!tape_) throw std::invalid_argument("detached Var has no value");
  return tape_->value(*this);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(*this); }

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw std::domain_error("non-finite value in a tape leaf");
  nodes_.push_back(Node{std::move(value), {}, false, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  if (!value.all_finite()) throw std::domain_error("non-finite value in a tape leaf");
  nodes_.push_back(Node{std::move(value), {}, true, false, {}});
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(Var v) const {
  if (v.tape_ != this) throw std::invalid_argument("Var is detached or belongs to another tape");
}

Var Tape::record(const char* op, Tensor value, std::initializer_list<Var> inputs, Backward fn) {
  bool needs = false;
  for (Var in : inputs) {
    check_owned(in);
    needs = needs || nodes_[in.id_].requires_grad;
  }
  if (!value.all_finite()) {
    throw std::domain_error(std::string("non-finite value produced by ") + op);
  }
  nodes_.push_back(Node{std::move(value), {}, needs, false, needs ? std::move(fn) : Backward{}});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = nodes_.at(v.id_);
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape(), 0.0);
    n.has_grad = true;
  }
  return n.grad;
}

Tensor Tape::grad(Var v) const {
  check_owned(v);
  const Node& n = nodes_[v.id_];
  return n.has_grad ? n.grad : Tensor(n.value.shape(), 0.0);
}

void Tape::backward(Var output) {
  check_owned(output);
  if (nodes_[output.id_].value.size() != 1) {
    throw std::invalid_argument("backward() needs a scalar output, got shape " +
                                nodes_[output.id_].value.shape_string());
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  grad_buffer(output)[0] = 1.0;
  for (std::size_t i = output.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backward) n.backward(*this, n.grad);
  }
}

namespace {

void require_rank2(Var v, const char* op) {
  if (v.value().rank() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected a matrix, got shape " +
                                v.value().shape_string());
  }
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.value().shape() != b.value().shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                a.value().shape_string() + " vs " + b.value().shape_string());
  }
}

Tape& common_tape(Var a, Var b) {
  if (!a.attached() || a.tape() != b.tape()) {
    throw std::invalid_argument("operands are detached or on different tapes");
  }
  return *a.tape();
}

void accumulate(Tape& t, Var v, const Tensor& g) {
  if (!v.requires_grad()) return;
  auto dst = t.grad_buffer(v).data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw std::invalid_argument("matmul: inner dimensions differ " + a.value().shape_string() +
                                " x " + b.value().shape_string());
  }
  Tensor out = Tensor::zeros(m, n);
  kernels::gemm(Trans::No, Trans::No, {m, n, k}, a.value().data(), b.value().data(), out.data(),
                false);
  return t.record("matmul", std::move(out), {a, b}, [a, b, m, n, k](Tape& tp, const Tensor& g) {
    if (a.requires_grad()) {
      kernels::gemm(Trans::No, Trans::Yes, {m, k, n}, g.data(), b.value().data(),
                    tp.grad_buffer(a).data(), true);
    }
    if (b.requires_grad()) {
      kernels::gemm(Trans::Yes, Trans::No, {k, n, m}, a.value().data(), g.data(),
                    tp.grad_buffer(b).data(), true);
    }
  });
}

Var matmul_tn(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_rank2(a, "matmul_tn");
  require_rank2(b, "matmul_tn");
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw std::invalid_argument("matmul_tn: row counts differ " + a.value().shape_string() +
                                " vs " + b.value().shape_string());
  }
  Tensor out = Tensor::zeros(m, n);
  kernels::gemm(Trans::Yes, Trans::No, {m, n, k}, a.value().data(), b.value().data(), out.data(),
                false);
  return t.record("matmul_tn", std::move(out), {a, b},
                  [a, b, m, n, k](Tape& tp, const Tensor& g) {
                    // out = aᵀb: da = b gᵀ (k x m), db = a g (k x n)
                    if (a.requires_grad()) {
                      kernels::gemm(Trans::No, Trans::Yes, {k, m, n}, b.value().data(), g.data(),
                                    tp.grad_buffer(a).data(), true);
                    }
                    if (b.requires_grad()) {
                      kernels::gemm(Trans::No, Trans::No, {k, n, m}, a.value().data(), g.data(),
                                    tp.grad_buffer(b).data(), true);
                    }
                  });
}

Var transpose(Var a) {
  require_rank2(a, "transpose");
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out = Tensor::zeros(c, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(j, i) = a.value()(i, j);
  return a.tape()->record("transpose", std::move(out), {a}, [a, r, c](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga(i, j) += g(j, i);
  });
}

Var add(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  return t.record("add", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    accumulate(tp, a, g);
    accumulate(tp, b, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] -= bd[i];
  return t.record("sub", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    accumulate(tp, a, g);
    if (b.requires_grad()) {
      auto gb = tp.grad_buffer(b).data();
      auto gd = g.data();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= gd[i];
    }
  });
}

Var hadamard(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a, b, "hadamard");
  Tensor out = a.value();
  auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  return t.record("hadamard", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    auto gd = g.data();
    if (a.requires_grad()) {
      auto ga = tp.grad_buffer(a).data();
      auto bv = b.value().data();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gd[i] * bv[i];
    }
    if (b.requires_grad()) {
      auto gb = tp.grad_buffer(b).data();
      auto av = a.value().data();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gd[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  if (!a.attached()) throw std::invalid_argument("scale: detached Var");
  Tensor out = a.value();
  for (double& v : out.data()) v *= s;
  return a.tape()->record("scale", std::move(out), {a}, [a, s](Tape& tp, const Tensor& g) {
    auto ga = tp.grad_buffer(a).data();
    auto gd = g.data();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * gd[i];
  });
}

Var square(Var a) {
  if (!a.attached()) throw std::invalid_argument("square: detached Var");
  Tensor out = a.value();
  for (double& v : out.data()) v *= v;
  return a.tape()->record("square", std::move(out), {a}, [a](Tape& tp, const Tensor& g) {
    auto ga = tp.grad_buffer(a).data();
    auto av = a.value().data();
    auto gd = g.data();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * av[i] * gd[i];
  });
}

Var relu(Var a) {
  if (!a.attached()) throw std::invalid_argument("relu: detached Var");
  Tensor out = a.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return a.tape()->record("relu", std::move(out), {a}, [a](Tape& tp, const Tensor& g) {
    auto ga = tp.grad_buffer(a).data();
    auto av = a.value().data();
    auto gd = g.data();
    for (std::size_t i = 0; i < ga.size(); ++i) {
      if (av[i] > 0.0) ga[i] += gd[i];
    }
  });
}

Var add_row(Var a, Var row) {
  Tape& t = common_tape(a, row);
  require_rank2(a, "add_row");
  require_rank2(row, "add_row");
  const std::size_t r = a.rows(), c = a.cols();
  if (row.rows() != 1 || row.cols() != c) {
    throw std::invalid_argument("add_row: row shape " + row.value().shape_string() +
                                " does not broadcast over " + a.value().shape_string());
  }
  Tensor out = a.value();
  const auto rv = row.value().data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(i, j) += rv[j];
  return t.record("add_row", std::move(out), {a, row}, [a, row, r, c](Tape& tp, const Tensor& g) {
    accumulate(tp, a, g);
    if (row.requires_grad()) {
      auto gr = tp.grad_buffer(row).data();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gr[j] += g(i, j);
    }
  });
}

Var concat_cols(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_rank2(a, "concat_cols");
  require_rank2(b, "concat_cols");
  const std::size_t r = a.rows(), ca = a.cols(), cb = b.cols();
  if (b.rows() != r) throw std::invalid_argument("concat_cols: row counts differ");
  Tensor out = Tensor::zeros(r, ca + cb);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < ca; ++j) out(i, j) = a.value()(i, j);
    for (std::size_t j = 0; j < cb; ++j) out(i, ca + j) = b.value()(i, j);
  }
  return t.record("concat_cols", std::move(out), {a, b},
                  [a, b, r, ca, cb](Tape& tp, const Tensor& g) {
                    if (a.requires_grad()) {
                      Tensor& ga = tp.grad_buffer(a);
                      for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < ca; ++j) ga(i, j) += g(i, j);
                    }
                    if (b.requires_grad()) {
                      Tensor& gb = tp.grad_buffer(b);
                      for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < cb; ++j) gb(i, j) += g(i, ca + j);
                    }
                  });
}

Var gather_rows(Var a, std::span<const std::size_t> index) {
  if (!a.attached()) throw std::invalid_argument("gather_rows: detached Var");
  require_rank2(a, "gather_rows");
  const std::size_t n = a.rows(), c = a.cols();
  std::vector<std::size_t> idx(index.begin(), index.end());
  Tensor out = Tensor::zeros(idx.size(), c);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n) throw std::out_of_range("gather_rows: index out of range");
    std::copy_n(a.value().data().data() + idx[i] * c, c, out.data().data() + i * c);
  }
  return a.tape()->record("gather_rows", std::move(out), {a},
                          [a, idx = std::move(idx), c](Tape& tp, const Tensor& g) {
                            Tensor& ga = tp.grad_buffer(a);
                            for (std::size_t i = 0; i < idx.size(); ++i)
                              for (std::size_t j = 0; j < c; ++j) ga(idx[i], j) += g(i, j);
                          });
}

Var scatter_add_rows(Var a, std::span<const std::size_t> index, std::size_t n_rows) {
  if (!a.attached()) throw std::invalid_argument("scatter_add_rows: detached Var");
  require_rank2(a, "scatter_add_rows");
  const std::size_t c = a.cols();
  if (index.size() != a.rows()) throw std::invalid_argument("scatter_add_rows: index length");
  std::vector<std::size_t> idx(index.begin(), index.end());
  Tensor out = Tensor::zeros(n_rows, c);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n_rows) throw std::out_of_range("scatter_add_rows: index out of range");
    for (std::size_t j = 0; j < c; ++j) out(idx[i], j) += a.value()(i, j);
  }
  return a.tape()->record("scatter_add_rows", std::move(out), {a},
                          [a, idx = std::move(idx), c](Tape& tp, const Tensor& g) {
                            Tensor& ga = tp.grad_buffer(a);
                            for (std::size_t i = 0; i < idx.size(); ++i)
                              for (std::size_t j = 0; j < c; ++j) ga(i, j) += g(idx[i], j);
                          });
}

Var sum_rows(Var a) {
  if (!a.attached()) throw std::invalid_argument("sum_rows: detached Var");
  require_rank2(a, "sum_rows");
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out = Tensor::zeros(1, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(0, j) += a.value()(i, j);
  return a.tape()->record("sum_rows", std::move(out), {a}, [a, r, c](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga(i, j) += g(0, j);
  });
}

Var sum(Var a) {
  if (!a.attached()) throw std::invalid_argument("sum: detached Var");
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape()->record("sum", Tensor::scalar(s), {a}, [a](Tape& tp, const Tensor& g) {
    for (double& v : tp.grad_buffer(a).data()) v += g[0];
  });
}

Var mean(Var a) {
  if (!a.attached()) throw std::invalid_argument("mean: detached Var");
  const std::size_t n = a.value().size();
  if (n == 0) throw std::invalid_argument("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var softmax_rows(Var a) {
  if (!a.attached()) throw std::invalid_argument("softmax_rows: detached Var");
  require_rank2(a, "softmax_rows");
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out = a.value();
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, out(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      out(i, j) = std::exp(out(i, j) - mx);
      z += out(i, j);
    }
    for (std::size_t j = 0; j < c; ++j) out(i, j) /= z;
  }
  Tape& t = *a.tape();
  const Tensor probs = out;
  return t.record("softmax_rows", std::move(out), {a},
                  [a, probs, r, c](Tape& tp, const Tensor& g) {
                    Tensor& ga = tp.grad_buffer(a);
                    for (std::size_t i = 0; i < r; ++i) {
                      double dotgp = 0.0;
                      for (std::size_t j = 0; j < c; ++j) dotgp += g(i, j) * probs(i, j);
                      for (std::size_t j = 0; j < c; ++j)
                        ga(i, j) += probs(i, j) * (g(i, j) - dotgp);
                    }
                  });
}

Var pairwise_distance(Var q, Var p, kernels::Metric metric) {
  Tape& t = common_tape(q, p);
  require_rank2(q, "pairwise_distance");
  require_rank2(p, "pairwise_distance");
  const std::size_t nq = q.rows(), np = p.rows(), dim = q.cols();
  if (p.cols() != dim) throw std::invalid_argument("pairwise_distance: dimension mismatch");
  Tensor out = Tensor::zeros(nq, np);
  kernels::pairwise_distance_serial(metric, dim, q.value().data(), p.value().data(), out.data());
  const Tensor dist = out;
  return t.record(
      "pairwise_distance", std::move(out), {q, p},
      [q, p, dist, nq, np, dim, metric](Tape& tp, const Tensor& g) {
        const Tensor& qv = q.value();
        const Tensor& pv = p.value();
        Tensor* gq = q.requires_grad() ? &tp.grad_buffer(q) : nullptr;
        Tensor* gp = p.requires_grad() ? &tp.grad_buffer(p) : nullptr;
        for (std::size_t i = 0; i < nq; ++i) {
          for (std::size_t j = 0; j < np; ++j) {
            const double gij = g(i, j);
            if (gij == 0.0) continue;
            if (metric == kernels::Metric::Euclidean) {
              const double d = dist(i, j);
              if (d == 0.0) continue;
              for (std::size_t k = 0; k < dim; ++k) {
                const double dd = gij * (qv(i, k) - pv(j, k)) / d;
                if (gq) (*gq)(i, k) += dd;
                if (gp) (*gp)(j, k) -= dd;
              }
            } else {
              double c = 0.0;
              for (std::size_t k = 0; k < dim; ++k) c += qv(i, k) * pv(j, k);
              if (std::abs(c) >= 1.0) continue;
              const double factor = -gij / std::sqrt(1.0 - c * c);
              for (std::size_t k = 0; k < dim; ++k) {
                if (gq) (*gq)(i, k) += factor * pv(j, k);
                if (gp) (*gp)(j, k) += factor * qv(i, k);
              }
            }
          }
        }
      });
}

Var mse_loss(Var pred, const Tensor& target) {
  if (!pred.attached()) throw std::invalid_argument("mse_loss: detached Var");
  if (pred.value().shape() != target.shape()) {
    throw std::invalid_argument("mse_loss: prediction shape " + pred.value().shape_string() +
                                " vs target " + target.shape_string());
  }
  if (pred.value().rank() != 2 || pred.rows() == 0) {
    throw std::invalid_argument("mse_loss: empty query set");
  }
  const std::size_t n = pred.rows();
  double s = 0.0;
  auto pv = pred.value().data();
  auto tv = target.data();
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double d = pv[i] - tv[i];
    s += d * d;
  }
  return pred.tape()->record(
      "mse_loss", Tensor::scalar(s / static_cast<double>(n)), {pred},
      [pred, target, n](Tape& tp, const Tensor& g) {
        auto gp = tp.grad_buffer(pred).data();
        auto pv2 = pred.value().data();
        auto tv2 = target.data();
        const double f = 2.0 * g[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += f * (pv2[i] - tv2[i]);
      });
}

}  // namespace genlab::ad
