#pragma once

#include "ifan/autodiff.hpp"
#include "ifan/tensor.hpp"

namespace ifan {

// Per-pixel horizontal disparity, (n, 1, h, w), in pixels of its own grid.
// Positive values sample to the right: out(x, y) = img(x + d(x, y), y).
struct DisparityMap {
  Tensor4 data;
};

// Bilinear horizontal warp with sampling coordinates clamped to [0, w-1].
Tensor4 warp_horizontal(const Tensor4& img, const Tensor4& disparity);
Var warp_horizontal(Var img, Var disparity);

// Count of entries with |d| > w. Such values are legal but usually a bug upstream.
std::size_t count_out_of_range(const Tensor4& disparity);

}  // namespace ifan
