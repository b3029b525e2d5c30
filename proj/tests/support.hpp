// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>

#include "bigan/recurrent.hpp"
#include "bigan/tape.hpp"

namespace bigan::testing {

struct GradCheck {
  double worst = 0.0;  // largest relative error seen
  std::string where;   // parameter[element] of the worst error
  std::size_t checked = 0;
  std::size_t below_floor = 0;  // entries with |g| and |fd| under the floor
  double worst_abs = 0.0;       // largest |g - fd| among those entries
};

using LossFn = std::function<Var(Tape&, const BoundParams&)>;

/// Compares reverse-mode gradients of `loss` against central differences
/// with step `h`. Relative error is |g - fd| / max(|g|, 1e-8). Entries where
/// both |g| and |fd| are under `floor` are compared absolutely instead.
inline GradCheck check_gradients(ParamMap params, const LossFn& loss, double h = 1e-6, double floor = 0.0) {
  Tape tape;
  const BoundParams bound = tape.bind(params);
  tape.backward(loss(tape, bound));
  const ParamMap grads = tape.grads(bound);

  auto evaluate = [&](const ParamMap& p) {
    Tape t;
    return loss(t, t.bind_frozen(p)).value()[0];
  };
  GradCheck out;
  for (auto& [name, value] : params) {
    const Array& g = grads.at(name);
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double saved = value[k];
      value[k] = saved + h;
      const double up = evaluate(params);
      value[k] = saved - h;
      const double down = evaluate(params);
      value[k] = saved;
      const double fd = (up - down) / (2.0 * h);
      ++out.checked;
      if (std::max(std::fabs(g[k]), std::fabs(fd)) < floor) {
        ++out.below_floor;
        out.worst_abs = std::max(out.worst_abs, std::fabs(g[k] - fd));
        continue;
      }
      const double rel = std::fabs(g[k] - fd) / std::max(std::fabs(g[k]), 1e-8);
      if (rel > out.worst) {
        out.worst = rel;
        std::ostringstream where;
        where << name << '[' << k << "] autodiff " << g[k] << " vs fd " << fd;
        out.where = where.str();
      }
    }
  }
  return out;
}

/// "Time since the last observation" by scanning left, one cell at a time.
inline double brute_force_delta(const Array& mask, const std::vector<double>& times, std::size_t i, std::size_t j) {
  if (i == 0) return 0.0;
  std::size_t k = i - 1;
  while (k > 0 && mask(k, j) != 1.0) --k;
  return times[i] - times[k];
}

}  // namespace bigan::testing
