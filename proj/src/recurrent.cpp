// SPDX-License-Identifier: Apache-2.0
#include "bigan/recurrent.hpp"

#include <cmath>
#include <stdexcept>

#include "bigan/errors.hpp"

namespace bigan {

CellKind parse_cell_kind(const std::string& name) {
  if (name == "simple") return CellKind::simple;
  if (name == "lstm") return CellKind::lstm;
  throw ConfigError("unknown cell '" + name + "' (expected simple|lstm)");
}

std::string cell_kind_name(CellKind kind) { return kind == CellKind::lstm ? "lstm" : "simple"; }

Array uniform_array(Shape shape, double bound, Rng& rng) {
  Array a(std::move(shape));
  for (auto& v : a.data()) v = rng.uniform(-bound, bound);
  return a;
}

void init_cell(ParamMap& params, const std::string& prefix, CellKind kind, std::size_t hidden,
               std::size_t input, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto add_gate = [&](const std::string& gate) {
    params[prefix + "W_" + gate] = uniform_array({hidden, hidden}, bound, rng);
    params[prefix + "U_" + gate] = uniform_array({hidden, input}, bound, rng);
    params[prefix + "b_" + gate] = uniform_array({hidden}, bound, rng);
  };
  if (kind == CellKind::simple) {
    add_gate("h");
  } else {
    for (const char* gate : {"i", "f", "o", "g"}) add_gate(gate);
  }
}

Var param(const BoundParams& p, const std::string& name) {
  const auto it = p.find(name);
  if (it == p.end()) throw std::invalid_argument("missing parameter '" + name + "'");
  return it->second;
}

namespace {

Var gate_preactivation(const BoundParams& p, const std::string& prefix, const std::string& gate, Var carried,
                       Var input) {
  return add_bias(add(matmul_nt(carried, param(p, prefix + "W_" + gate)), matmul_nt(input, param(p, prefix + "U_" + gate))),
                  param(p, prefix + "b_" + gate));
}

}  // namespace

CellState cell_step(const BoundParams& p, const std::string& prefix, CellKind kind, Var carried, Var c_prev,
                    Var input) {
  if (kind == CellKind::simple) return {sigmoid(gate_preactivation(p, prefix, "h", carried, input)), Var()};
  const Var i = sigmoid(gate_preactivation(p, prefix, "i", carried, input));
  const Var f = sigmoid(gate_preactivation(p, prefix, "f", carried, input));
  const Var o = sigmoid(gate_preactivation(p, prefix, "o", carried, input));
  const Var g = tanh(gate_preactivation(p, prefix, "g", carried, input));
  const Var c = add(mul(f, c_prev), mul(i, g));
  return {mul(o, tanh(c)), c};
}

}  // namespace bigan
