#pragma once

#include <filesystem>

#include "rdrn/tensor.hpp"

namespace rdrn {

// Decodes an 8- or 16-bit PNG into a (1, 3, H, W) tensor in [0, 1]. Gray is
// replicated to three channels; alpha is dropped.
Tensor read_png(const std::filesystem::path& path);

// Encodes a (1, 3, H, W) or (1, 1, H, W) tensor, clamped to [0, 1] and
// rounded to the nearest code of the requested bit depth (8 or 16).
void write_png(const std::filesystem::path& path, const Tensor& image, int bit_depth = 8);

// Rounds to the 8-bit grid and back, as an 8-bit PNG round trip would.
Tensor quantize8(const Tensor& image);

}  // namespace rdrn
