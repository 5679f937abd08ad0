#pragma once

#include "ifan/autodiff.hpp"
#include "ifan/tensor.hpp"

namespace ifan {

inline constexpr double kDefaultSlope = 0.1;

// Eager (tape-free) forms.
Tensor4 conv2d(const Tensor4& x, const Tensor4& weight, const Tensor4& bias, int stride);
Tensor4 lrelu(const Tensor4& x, double slope);
Tensor4 area_downsample(const Tensor4& x, int factor);
Tensor4 upsample_nearest(const Tensor4& x, int factor);
double mse(const Tensor4& a, const Tensor4& b, int border = 0);

// Differentiable forms. conv2d weights are (c_out, c_in, k, k) with odd k and
// "same" zero padding; bias is (c_out, 1, 1, 1).
Var conv2d(Var x, Var weight, Var bias, int stride);
Var lrelu(Var x, double slope);
Var area_downsample(Var x, int factor);
Var upsample_nearest(Var x, int factor);
Var add(Var a, Var b);
Var scale(Var a, double alpha);
Var concat_channels(Var a, Var b);
// Mean squared difference, excluding `border` pixels on each side.
Var mse(Var a, Var b, int border = 0);

}  // namespace ifan
