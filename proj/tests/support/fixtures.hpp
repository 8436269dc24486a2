#pragma once

#include <cmath>
#include <algorithm>

#include "rdrn/degradation.hpp"
#include "rdrn/tensor.hpp"
#include "rdrn/training.hpp"

namespace fixtures {

// Deterministic RGB test card in [0, 1]: smooth gradients, a few sinusoids
// and hard-edged blocks. `phase` shifts the pattern.
inline rdrn::Tensor test_card(int h, int w, int phase = 0) {
  rdrn::Tensor t({1, 3, h, w});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float fy = static_cast<float>(y) / h, fx = static_cast<float>(x) / w;
        float v = 0.25f + 0.3f * fx * (c + 1) / 3.0f + 0.2f * fy;
        v += 0.12f * std::sin(6.28f * (2.0f + c) * fx) * std::cos(6.28f * 1.5f * fy);
        if (((x + phase) / 8 + y / 8) % 3 == c) v += 0.15f;
        t.at(0, c, y, x) = std::clamp(v, 0.0f, 1.0f);
      }
    }
  }
  return t;
}

inline rdrn::TrainingPair bicubic_pair(const rdrn::Tensor& hr, int scale) {
  rdrn::DegradationSpec spec;
  spec.scale = scale;
  return {hr, rdrn::degrade(hr, spec)};
}

}  // namespace fixtures
