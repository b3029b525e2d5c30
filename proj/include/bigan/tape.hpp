// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bigan/array.hpp"

namespace bigan {

using ParamMap = std::map<std::string, Array>;

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Array& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records array operations for one forward pass and replays them in reverse.
///
/// Node ids are assigned in creation order, so reverse id order is a valid
/// topological order for the backward sweep. Gradients accumulate by
/// summation. A tape is not thread-safe; use one tape per thread.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Array value);
  Var leaf(Array value);  // differentiable input

  /// Registers every entry of `params` as a differentiable leaf.
  std::map<std::string, Var> bind(const ParamMap& params);
  /// Registers every entry of `params` as a constant (frozen network).
  std::map<std::string, Var> bind_frozen(const ParamMap& params);

  Var record(Array value, std::vector<std::size_t> inputs, BackwardFn backward);

  /// Reverse sweep from a scalar root. Throws std::invalid_argument when the
  /// root holds more than one element.
  void backward(Var root);

  /// Gradient of the last backward() root w.r.t. `v`; zeros if `v` was not
  /// on a path to the root.
  Array grad(Var v) const;
  ParamMap grads(const std::map<std::string, Var>& bound) const;

  const Array& value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  std::size_t input(std::size_t id, std::size_t k) const { return nodes_[id].inputs[k]; }
  std::span<const std::size_t> inputs(std::size_t id) const { return nodes_[id].inputs; }
  const Array& upstream(std::size_t id) const { return nodes_[id].grad; }

  /// Gradient buffer of node `id`, zero-initialised on first access.
  Array& grad_buffer(std::size_t id);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Array value;
    Array grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
};

// Primitive operations. Binary elementwise ops require identical shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var add_bias(Var a, Var bias);          // a: r x c, bias: c (row broadcast)
Var affine(Var a, double scale, double shift);  // scale * a + shift
Var negate(Var a);
Var matmul(Var a, Var b);               // (r x k) (k x c)
Var matmul_nt(Var a, Var b);            // (r x k) (c x k)^T
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var relu(Var a);                        // subgradient 0 at exactly 0
Var abs(Var a);                         // subgradient 0 at exactly 0
Var clamp(Var a, double lo, double hi); // zero gradient where clamped
Var mul_const(Var a, const Array& c);   // elementwise by a constant
Var sum(Var a);
Var mean(Var a);
Var mean_abs(Var a);
Var weighted_sum(Var a, const Array& weights);  // sum(weights * a)
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return negate(a); }

}  // namespace bigan
