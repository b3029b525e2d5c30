// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "bigan/tape.hpp"

namespace bigan {

/// Masked reconstruction: sum over m=1 of |x - x~| divided by count(m=1);
/// zero when nothing is observed.
Var loss_reconstruction(Var estimate, const Array& target, const Array& mask);

/// Mean over every cell of |x~f - x~b|.
Var loss_consistency(Var est_fwd, Var est_bwd);

}  // namespace bigan
