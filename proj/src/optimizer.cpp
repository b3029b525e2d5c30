// SPDX-License-Identifier: Apache-2.0
#include "bigan/optimizer.hpp"

#include <cmath>

#include "bigan/errors.hpp"

namespace bigan {

void Adam::step(ParamMap& params, const ParamMap& grads, const std::function<bool(const std::string&)>& include) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  for (auto& [name, value] : params) {
    if (include && !include(name)) continue;
    const auto g = grads.find(name);
    if (g == grads.end()) continue;
    if (g->second.shape() != value.shape()) throw ShapeError("adam step '" + name + "'", value.shape(), g->second.shape());
    auto [m_it, m_new] = first_.try_emplace(name, value.shape());
    auto [v_it, v_new] = second_.try_emplace(name, value.shape());
    Array& m = m_it->second;
    Array& v = v_it->second;
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double gk = g->second[k];
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * gk;
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * gk * gk;
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      value[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
    if (!value.all_finite()) {
      throw DivergenceError("parameter '" + name + "' became non-finite at optimiser step " + std::to_string(steps_));
    }
  }
}

}  // namespace bigan
