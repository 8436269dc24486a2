#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rdrn/tensor.hpp"

namespace rdrn {

enum class DegradationKind { BI, BD, DN };

std::string to_string(DegradationKind kind);
DegradationKind parse_degradation_kind(const std::string& s);

// Declarative LR-generation pipeline.
//   BI: bicubic downscale by `scale`
//   BD: Gaussian blur (blur_kernel_size, blur_sigma), then bicubic downscale
//   DN: bicubic downscale, then N(0, noise_sigma / 255) noise, clipped to [0, 1]
struct DegradationSpec {
  DegradationKind kind = DegradationKind::BI;
  int scale = 4;
  int blur_kernel_size = 7;
  double blur_sigma = 1.6;
  double noise_sigma = 30.0;  // 8-bit units
  std::uint64_t rng_seed = 0;

  void validate() const;
  // Canonical text form; equal specs give equal strings.
  std::string canonical() const;
  std::string hash_hex() const;

  static DegradationSpec bd_default(int scale = 3);
  static DegradationSpec dn_default(int scale = 3);
};

// Bicubic (a = -0.5) resize by `scale_factor` with antialiasing when
// downscaling and symmetric border handling. Output extent round(in * factor).
Tensor bicubic_resize(const Tensor& img, double scale_factor);

// Keys cubic convolution kernel with a = -0.5.
double cubic_kernel(double x);

// Normalised k x k Gaussian (row-major, sums to 1).
std::vector<double> gaussian_kernel(int size, double sigma);
// Same-size Gaussian filtering with replicated borders.
Tensor gaussian_blur(const Tensor& img, int size, double sigma);

// Crops the bottom/right so both extents are multiples of `scale`.
Tensor crop_to_multiple(const Tensor& img, int scale);

Tensor degrade(const Tensor& hr, const DegradationSpec& spec);

}  // namespace rdrn
