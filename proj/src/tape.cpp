// SPDX-License-Identifier: Apache-2.0
#include "bigan/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bigan {

const Array& Var::value() const {
  if (!tape_) throw std::logic_error("value() on an unbound Var");
  return tape_->value(id_);
}

Var Tape::constant(Array value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Array value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, true});
  return Var(this, nodes_.size() - 1);
}

std::map<std::string, Var> Tape::bind(const ParamMap& params) {
  std::map<std::string, Var> out;
  for (const auto& [name, value] : params) out.emplace(name, leaf(value));
  return out;
}

std::map<std::string, Var> Tape::bind_frozen(const ParamMap& params) {
  std::map<std::string, Var> out;
  for (const auto& [name, value] : params) out.emplace(name, constant(value));
  return out;
}

Var Tape::record(Array value, std::vector<std::size_t> inputs, BackwardFn backward) {
  bool needs = false;
  for (std::size_t in : inputs) needs = needs || nodes_[in].needs_grad;
  if (!needs) backward = nullptr;
  nodes_.push_back(Node{std::move(value), {}, std::move(inputs), std::move(backward), needs});
  return Var(this, nodes_.size() - 1);
}

Array& Tape::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.size() != node.value.size() || node.grad.shape() != node.value.shape()) {
    node.grad = Array(node.value.shape(), 0.0);
  }
  return node.grad;
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw std::invalid_argument("backward: root belongs to another tape");
  if (value(root.id()).size() != 1) {
    throw std::invalid_argument("backward: root must be scalar, got shape " +
                                shape_string(value(root.id()).shape()));
  }
  for (auto& node : nodes_) node.grad = Array();
  grad_buffer(root.id()).fill(1.0);
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.backward || node.grad.empty()) continue;
    node.backward(*this, id);
  }
}

Array Tape::grad(Var v) const {
  const Node& node = nodes_[v.id()];
  if (node.grad.empty() && !node.value.empty()) return Array(node.value.shape(), 0.0);
  return node.grad;
}

ParamMap Tape::grads(const std::map<std::string, Var>& bound) const {
  ParamMap out;
  for (const auto& [name, v] : bound) out.emplace(name, grad(v));
  return out;
}

namespace {

void require_same(const char* op, const Array& a, const Array& b) {
  if (a.shape() != b.shape()) throw ShapeError(op, a.shape(), b.shape());
}

void require_matrix(const char* op, const Array& a) {
  if (a.rank() > 2) throw ShapeError(std::string(op) + ": rank > 2 operand " + shape_string(a.shape()));
}

// Accumulates g (elementwise) into the gradient buffer of input k.
template <typename F>
void accumulate(Tape& t, std::size_t self, std::size_t k, F&& local) {
  const std::size_t in = t.input(self, k);
  if (!t.needs_grad(in)) return;
  Array& dst = t.grad_buffer(in);
  const Array& g = t.upstream(self);
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * local(i);
}

template <typename F, typename D>
Var unary(Var a, F&& forward, D&& derivative) {
  const Array& av = a.value();
  Array out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = forward(av[i]);
  return a.tape()->record(std::move(out), {a.id()}, [derivative](Tape& t, std::size_t self) {
    const Array& x = t.value(t.input(self, 0));
    const Array& y = t.value(self);
    accumulate(t, self, 0, [&](std::size_t i) { return derivative(x[i], y[i]); });
  });
}

Tape* same_tape(Var a, Var b) {
  if (a.tape() != b.tape() || !a.tape()) throw std::invalid_argument("operands on different tapes");
  return a.tape();
}

}  // namespace

Var add(Var a, Var b) {
  Tape* t = same_tape(a, b);
  require_same("add", a.value(), b.value());
  Array out = a.value();
  const Array& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return t->record(std::move(out), {a.id(), b.id()}, [](Tape& t, std::size_t self) {
    accumulate(t, self, 0, [](std::size_t) { return 1.0; });
    accumulate(t, self, 1, [](std::size_t) { return 1.0; });
  });
}

Var sub(Var a, Var b) {
  Tape* t = same_tape(a, b);
  require_same("sub", a.value(), b.value());
  Array out = a.value();
  const Array& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return t->record(std::move(out), {a.id(), b.id()}, [](Tape& t, std::size_t self) {
    accumulate(t, self, 0, [](std::size_t) { return 1.0; });
    accumulate(t, self, 1, [](std::size_t) { return -1.0; });
  });
}

Var mul(Var a, Var b) {
  Tape* t = same_tape(a, b);
  require_same("mul", a.value(), b.value());
  Array out = a.value();
  const Array& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return t->record(std::move(out), {a.id(), b.id()}, [](Tape& t, std::size_t self) {
    const Array& x = t.value(t.input(self, 0));
    const Array& y = t.value(t.input(self, 1));
    accumulate(t, self, 0, [&](std::size_t i) { return y[i]; });
    accumulate(t, self, 1, [&](std::size_t i) { return x[i]; });
  });
}

Var div(Var a, Var b) {
  Tape* t = same_tape(a, b);
  require_same("div", a.value(), b.value());
  Array out = a.value();
  const Array& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= bv[i];
  return t->record(std::move(out), {a.id(), b.id()}, [](Tape& t, std::size_t self) {
    const Array& x = t.value(t.input(self, 0));
    const Array& y = t.value(t.input(self, 1));
    accumulate(t, self, 0, [&](std::size_t i) { return 1.0 / y[i]; });
    accumulate(t, self, 1, [&](std::size_t i) { return -x[i] / (y[i] * y[i]); });
  });
}

Var add_bias(Var a, Var bias) {
  Tape* t = same_tape(a, bias);
  const Array& av = a.value();
  const Array& bv = bias.value();
  require_matrix("add_bias", av);
  if (bv.size() != av.cols() || bv.rows() != 1) throw ShapeError("add_bias", av.shape(), bv.shape());
  Array out = av;
  const std::size_t rows = av.rows(), cols = av.cols();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
  return t->record(std::move(out), {a.id(), bias.id()}, [rows, cols](Tape& t, std::size_t self) {
    accumulate(t, self, 0, [](std::size_t) { return 1.0; });
    const std::size_t in = t.input(self, 1);
    if (!t.needs_grad(in)) return;
    Array& dst = t.grad_buffer(in);
    const Array& g = t.upstream(self);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) dst[c] += g[r * cols + c];
  });
}

Var affine(Var a, double scale, double shift) {
  return unary(
      a, [scale, shift](double x) { return scale * x + shift; },
      [scale](double, double) { return scale; });
}

Var negate(Var a) { return affine(a, -1.0, 0.0); }

Var matmul(Var a, Var b) {
  Tape* t = same_tape(a, b);
  const Array& av = a.value();
  const Array& bv = b.value();
  require_matrix("matmul", av);
  require_matrix("matmul", bv);
  const std::size_t r = av.rows(), k = av.cols(), c = bv.cols();
  if (bv.rows() != k) throw ShapeError("matmul", av.shape(), bv.shape());
  Array out = Array::matrix(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av[i * k + p];
      if (x == 0.0) continue;
      const double* brow = &bv.data()[p * c];
      double* orow = &out.data()[i * c];
      for (std::size_t j = 0; j < c; ++j) orow[j] += x * brow[j];
    }
  return t->record(std::move(out), {a.id(), b.id()}, [r, k, c](Tape& t, std::size_t self) {
    const Array& g = t.upstream(self);
    const std::size_t ia = t.input(self, 0), ib = t.input(self, 1);
    if (t.needs_grad(ia)) {
      const Array& bv = t.value(ib);
      Array& da = t.grad_buffer(ia);  // g (r x c) * b^T
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < c; ++j) s += g[i * c + j] * bv[p * c + j];
          da[i * k + p] += s;
        }
    }
    if (t.needs_grad(ib)) {
      const Array& av = t.value(ia);
      Array& db = t.grad_buffer(ib);  // a^T * g
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double x = av[i * k + p];
          if (x == 0.0) continue;
          for (std::size_t j = 0; j < c; ++j) db[p * c + j] += x * g[i * c + j];
        }
    }
  });
}

Var matmul_nt(Var a, Var b) {
  Tape* t = same_tape(a, b);
  const Array& av = a.value();
  const Array& bv = b.value();
  require_matrix("matmul_nt", av);
  require_matrix("matmul_nt", bv);
  const std::size_t r = av.rows(), k = av.cols(), c = bv.rows();
  if (bv.cols() != k) throw ShapeError("matmul_nt", av.shape(), bv.shape());
  Array out = Array::matrix(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    const double* arow = &av.data()[i * k];
    for (std::size_t j = 0; j < c; ++j) {
      const double* brow = &bv.data()[j * k];
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      out[i * c + j] = s;
    }
  }
  return t->record(std::move(out), {a.id(), b.id()}, [r, k, c](Tape& t, std::size_t self) {
    const Array& g = t.upstream(self);
    const std::size_t ia = t.input(self, 0), ib = t.input(self, 1);
    if (t.needs_grad(ia)) {
      const Array& bv = t.value(ib);
      Array& da = t.grad_buffer(ia);  // g (r x c) * b (c x k)
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          const double gij = g[i * c + j];
          if (gij == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) da[i * k + p] += gij * bv[j * k + p];
        }
    }
    if (t.needs_grad(ib)) {
      const Array& av = t.value(ia);
      Array& db = t.grad_buffer(ib);  // g^T (c x r) * a (r x k)
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          const double gij = g[i * c + j];
          if (gij == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) db[j * k + p] += gij * av[i * k + p];
        }
    }
  });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var abs(Var a) {
  return unary(
      a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var mul_const(Var a, const Array& c) {
  require_same("mul_const", a.value(), c);
  Array out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c[i];
  return a.tape()->record(std::move(out), {a.id()}, [c](Tape& t, std::size_t self) {
    accumulate(t, self, 0, [&](std::size_t i) { return c[i]; });
  });
}

Var sum(Var a) {
  const Array& av = a.value();
  double s = 0.0;
  for (double v : av.data()) s += v;
  return a.tape()->record(Array::scalar(s), {a.id()}, [](Tape& t, std::size_t self) {
    const double g = t.upstream(self)[0];
    const std::size_t in = t.input(self, 0);
    if (!t.needs_grad(in)) return;
    Array& dst = t.grad_buffer(in);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean of empty array");
  return affine(sum(a), 1.0 / static_cast<double>(n), 0.0);
}

Var mean_abs(Var a) { return mean(abs(a)); }

Var weighted_sum(Var a, const Array& weights) {
  require_same("weighted_sum", a.value(), weights);
  const Array& av = a.value();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += weights[i] * av[i];
  return a.tape()->record(Array::scalar(s), {a.id()}, [weights](Tape& t, std::size_t self) {
    const double g = t.upstream(self)[0];
    const std::size_t in = t.input(self, 0);
    if (!t.needs_grad(in)) return;
    Array& dst = t.grad_buffer(in);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g * weights[i];
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of zero arrays");
  Tape* t = parts.front().tape();
  const std::size_t rows = parts.front().value().rows();
  std::vector<std::size_t> ids, widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.tape() != t) throw std::invalid_argument("concat_cols: operands on different tapes");
    require_matrix("concat_cols", p.value());
    if (p.value().rows() != rows) throw ShapeError("concat_cols", parts.front().shape(), p.shape());
    ids.push_back(p.id());
    widths.push_back(p.value().cols());
    total += widths.back();
  }
  Array out = Array::matrix(rows, total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Array& pv = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < widths[k]; ++c) out[r * total + offset + c] = pv[r * widths[k] + c];
    offset += widths[k];
  }
  return t->record(std::move(out), std::move(ids), [rows, total, widths](Tape& t, std::size_t self) {
    const Array& g = t.upstream(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      const std::size_t in = t.input(self, k);
      if (t.needs_grad(in)) {
        Array& dst = t.grad_buffer(in);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < widths[k]; ++c) dst[r * widths[k] + c] += g[r * total + offset + c];
      }
      offset += widths[k];
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Array& av = a.value();
  require_matrix("slice_cols", av);
  const std::size_t rows = av.rows(), cols = av.cols();
  if (begin + count > cols) {
    throw ShapeError("slice_cols [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + shape_string(av.shape()));
  }
  Array out = Array::matrix(rows, count);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < count; ++c) out[r * count + c] = av[r * cols + begin + c];
  return a.tape()->record(std::move(out), {a.id()}, [rows, cols, begin, count](Tape& t, std::size_t self) {
    const std::size_t in = t.input(self, 0);
    if (!t.needs_grad(in)) return;
    Array& dst = t.grad_buffer(in);
    const Array& g = t.upstream(self);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < count; ++c) dst[r * cols + begin + c] += g[r * count + c];
  });
}

}  // namespace bigan
