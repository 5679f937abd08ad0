#include "ifan/warp.hpp"

#include <cmath>

#include "ifan/error.hpp"
#include "ifan/kernels/parallel.hpp"

namespace ifan {

namespace {

void check_warp(const Tensor4& img, const Tensor4& d) {
  if (d.c() != 1) throw ShapeError("disparity map must have one channel, got " + d.shape().str());
  if (d.n() != img.n() || d.h() != img.h() || d.w() != img.w()) {
    throw ShapeError("warp: image " + img.shape().str() + " and disparity " + d.shape().str() + " differ in size");
  }
}

}  // namespace

Tensor4 warp_horizontal(const Tensor4& img, const Tensor4& disparity) {
  check_warp(img, disparity);
  return kernels::warp_forward(img, disparity);
}

Var warp_horizontal(Var img, Var disparity) {
  check_warp(img.value(), disparity.value());
  Tensor4 out = kernels::warp_forward(img.value(), disparity.value());
  return img.tape->record(std::move(out), {img, disparity}, [img, disparity](Tape& t, const Tensor4& g) {
    Tensor4 gi, gd;
    kernels::warp_backward(t.value(img), t.value(disparity), g, t.requires_grad(img) ? &gi : nullptr,
                           t.requires_grad(disparity) ? &gd : nullptr);
    if (t.requires_grad(img)) t.accumulate(img, std::move(gi));
    if (t.requires_grad(disparity)) t.accumulate(disparity, std::move(gd));
  });
}

std::size_t count_out_of_range(const Tensor4& disparity) {
  std::size_t n = 0;
  const double limit = static_cast<double>(disparity.w());
  for (double v : disparity.values())
    if (std::abs(v) > limit) ++n;
  return n;
}

}  // namespace ifan
