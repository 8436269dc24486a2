#include "rdrn/dihedral.hpp"

#include "rdrn/error.hpp"

namespace rdrn {

namespace {

Tensor flip_w(const Tensor& x) {
  Tensor out(x.shape());
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int y = 0; y < x.h(); ++y)
        for (int i = 0; i < x.w(); ++i) out.at(n, c, y, i) = x.at(n, c, y, x.w() - 1 - i);
  return out;
}

Tensor flip_h(const Tensor& x) {
  Tensor out(x.shape());
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int y = 0; y < x.h(); ++y)
        for (int i = 0; i < x.w(); ++i) out.at(n, c, y, i) = x.at(n, c, x.h() - 1 - y, i);
  return out;
}

Tensor transpose_hw(const Tensor& x) {
  Tensor out({x.n(), x.c(), x.w(), x.h()});
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int y = 0; y < x.h(); ++y)
        for (int i = 0; i < x.w(); ++i) out.at(n, c, i, y) = x.at(n, c, y, i);
  return out;
}

void check(int t) {
  if (t < 0 || t >= kDihedralCount) throw InputError("dihedral transform index out of range");
}

}  // namespace

Tensor dihedral_apply(const Tensor& x, int t) {
  check(t);
  Tensor out = x;
  if (t & 1) out = flip_w(out);
  if (t & 2) out = flip_h(out);
  if (t & 4) out = transpose_hw(out);
  return out;
}

Tensor dihedral_inverse(const Tensor& x, int t) {
  check(t);
  Tensor out = x;
  if (t & 4) out = transpose_hw(out);
  if (t & 2) out = flip_h(out);
  if (t & 1) out = flip_w(out);
  return out;
}

}  // namespace rdrn
