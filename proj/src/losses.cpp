// SPDX-License-Identifier: Apache-2.0
#include "bigan/losses.hpp"

namespace bigan {

Var loss_reconstruction(Var estimate, const Array& target, const Array& mask) {
  if (target.shape() != estimate.shape()) throw ShapeError("loss_reconstruction", estimate.shape(), target.shape());
  Array weights(mask.shape());
  double count = 0.0;
  for (double m : mask.data()) count += m;
  if (count > 0.0)
    for (std::size_t k = 0; k < mask.size(); ++k) weights[k] = mask[k] / count;
  Tape& tape = *estimate.tape();
  return weighted_sum(abs(sub(estimate, tape.constant(target))), weights);
}

Var loss_consistency(Var est_fwd, Var est_bwd) { return mean_abs(sub(est_fwd, est_bwd)); }

}  // namespace bigan
