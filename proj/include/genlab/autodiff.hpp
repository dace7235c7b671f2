#pragma once

// Reverse-mode automatic differentiation over rank-2 tensors.
//
// A Tape records every operation applied to its Vars. Values are computed
// eagerly; backward() walks the recording in reverse and accumulates
// gradients into every node that depends on a variable leaf. Nodes built only
// from constants carry no backward closure.

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "genlab/kernels.hpp"
#include "genlab/tensor.hpp"

namespace genlab::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;
  bool attached() const noexcept { return tape_ != nullptr; }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient. Leaves must be finite (std::domain_error).
  Var constant(Tensor value);
  /// Leaf whose gradient is collected by backward().
  Var variable(Tensor value);

  /// Records an op output. `inputs` decide whether the node needs a gradient;
  /// `fn` runs during backward with the node's accumulated gradient.
  /// Throws std::domain_error when `value` has non-finite entries.
  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs, Backward fn);

  /// Seeds d(output)/d(output) = 1 and propagates. Throws if `output` is not a
  /// scalar (1 x 1) or belongs to another tape.
  void backward(Var output);

  /// Gradient of the last backward() output w.r.t. `v`; zeros when `v` did not
  /// influence the output.
  Tensor grad(Var v) const;

  /// Mutable zero-initialized gradient buffer, used by backward closures.
  Tensor& grad_buffer(Var v);

  const Tensor& value(Var v) const { return nodes_.at(v.id_).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id_).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Throws std::invalid_argument unless `v` was recorded on this tape.
  void check_owned(Var v) const;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    Backward backward;
  };

  std::deque<Node> nodes_;
};

// Linear algebra.
Var matmul(Var a, Var b);
/// aᵀ · b without materializing the transpose.
Var matmul_tn(Var a, Var b);
Var transpose(Var a);

// Elementwise.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
Var square(Var a);
Var relu(Var a);
/// a + row, broadcasting a 1 x cols row over every row of a.
Var add_row(Var a, Var row);

// Structural.
Var concat_cols(Var a, Var b);
Var gather_rows(Var a, std::span<const std::size_t> index);
/// out[index[i]] += a[i] over an n_rows-row output.
Var scatter_add_rows(Var a, std::span<const std::size_t> index, std::size_t n_rows);

// Reductions.
Var sum_rows(Var a);
Var sum(Var a);
Var mean(Var a);

/// Row-wise softmax with max subtraction.
Var softmax_rows(Var a);

/// D[i][j] = dist(q_i, p_j). Euclidean gradients vanish where q_i == p_j.
/// Geodesic uses arccos(clamp(q·p)); its gradient is zeroed where |q·p| ≥ 1.
Var pairwise_distance(Var q, Var p, kernels::Metric metric);

/// Mean over rows of the squared Euclidean distance between prediction and
/// target rows. Throws std::invalid_argument for empty input.
Var mse_loss(Var pred, const Tensor& target);

}  // namespace genlab::ad
