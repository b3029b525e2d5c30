// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "bigan/rng.hpp"
#include "bigan/tape.hpp"

namespace bigan {

enum class CellKind { simple, lstm };

CellKind parse_cell_kind(const std::string& name);
std::string cell_kind_name(CellKind kind);

using BoundParams = std::map<std::string, Var>;

struct CellState {
  Var h;
  Var c;  // lstm only
};

/// Adds the weights of one recurrent cell under `prefix`:
///   simple: W_h (H x H), U_h (H x in), b_h (H)
///   lstm:   W_k, U_k, b_k for k in {i, f, o, g}
/// drawn uniformly from [-1/sqrt(H), 1/sqrt(H)].
void init_cell(ParamMap& params, const std::string& prefix, CellKind kind, std::size_t hidden,
               std::size_t input, Rng& rng);

/// One cell update. `carried` is the (possibly decayed) previous hidden state.
///   simple: h = sigmoid(carried W_h^T + x U_h^T + b_h)
///   lstm:   standard gates on (carried, x); c = f * c_prev + i * g; h = o * tanh(c)
CellState cell_step(const BoundParams& p, const std::string& prefix, CellKind kind, Var carried,
                    Var c_prev, Var input);

/// Looks up a bound parameter, naming it in the error when absent.
Var param(const BoundParams& p, const std::string& name);

/// Uniform [-bound, bound] matrix.
Array uniform_array(Shape shape, double bound, Rng& rng);

}  // namespace bigan
