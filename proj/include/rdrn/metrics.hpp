#pragma once

#include <string>

#include "rdrn/tensor.hpp"

namespace rdrn {

enum class ChannelMode { Y, RGB };

std::string to_string(ChannelMode mode);

struct MetricResult {
  double psnr_db = 0.0;  // +inf for identical regions
  double ssim = 0.0;
  ChannelMode channel_mode = ChannelMode::Y;
  int shave = 0;
};

// ITU-R BT.601 studio-swing luma of an RGB image in [0, 1]:
// Y = (65.481 R + 128.553 G + 24.966 B + 16) / 255. Output (N, 1, H, W).
Tensor rgb_to_y(const Tensor& rgb);

// PSNR in dB with data range 1 on the region left after removing `shave`
// pixels from every border. Identical regions give +infinity.
double psnr(const Tensor& a, const Tensor& b, int shave, ChannelMode mode);

// Mean SSIM (11x11 Gaussian window, sigma 1.5, K1 = 0.01, K2 = 0.03, data
// range 1) over all valid window positions; RGB mode averages the channels.
double ssim(const Tensor& a, const Tensor& b, int shave, ChannelMode mode);

MetricResult evaluate(const Tensor& sr, const Tensor& hr, int shave, ChannelMode mode);

// "inf" for the infinite sentinel, fixed-point text otherwise.
std::string format_psnr(double db, int precision = 4);

}  // namespace rdrn
