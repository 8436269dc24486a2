#include "rdrn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdrn/error.hpp"

namespace rdrn {

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << n << ", " << c << ", " << h << ", " << w << ")";
  return os.str();
}

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ShapeError("negative tensor extent " + shape.str());
  }
  data_.assign(shape.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> values) : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape.numel()) {
    throw ShapeError("value count does not match shape " + shape.str());
  }
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
  if (shape.numel() != numel()) {
    throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
  }
  return Tensor(shape, data_);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

Tensor slice_sample(const Tensor& src, int n) {
  Shape s = src.shape();
  s.n = 1;
  Tensor out(s);
  std::copy_n(src.sample(n), s.numel(), out.data());
  return out;
}

Tensor stack_samples(const std::vector<Tensor>& samples) {
  if (samples.empty()) throw ShapeError("stack_samples: empty batch");
  Shape s = samples.front().shape();
  for (const auto& t : samples) {
    if (t.n() != 1 || t.c() != s.c || t.h() != s.h || t.w() != s.w) {
      throw ShapeError("stack_samples: inconsistent sample shape " + t.shape().str());
    }
  }
  s.n = static_cast<int>(samples.size());
  Tensor out(s);
  for (int i = 0; i < s.n; ++i) {
    std::copy_n(samples[i].data(), samples[i].numel(), out.sample(i));
  }
  return out;
}

Tensor crop(const Tensor& src, int y, int x, int h, int w) {
  if (y < 0 || x < 0 || h < 1 || w < 1 || y + h > src.h() || x + w > src.w()) {
    throw ShapeError("crop window out of bounds for " + src.shape().str());
  }
  Tensor out({src.n(), src.c(), h, w});
  for (int n = 0; n < src.n(); ++n) {
    for (int c = 0; c < src.c(); ++c) {
      const float* in = src.plane(n, c);
      float* o = out.plane(n, c);
      for (int r = 0; r < h; ++r) {
        std::copy_n(in + static_cast<std::size_t>(y + r) * src.w() + x, w,
                    o + static_cast<std::size_t>(r) * w);
      }
    }
  }
  return out;
}

}  // namespace rdrn
