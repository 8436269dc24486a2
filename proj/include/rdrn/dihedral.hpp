#pragma once

#include "rdrn/tensor.hpp"

namespace rdrn {

// The 8 elements of the dihedral group acting on the spatial axes, encoded as
// bits: 1 = flip width, 2 = flip height, 4 = transpose (applied last).
inline constexpr int kDihedralCount = 8;

Tensor dihedral_apply(const Tensor& x, int transform);
Tensor dihedral_inverse(const Tensor& x, int transform);

}  // namespace rdrn
