#pragma once

#include <limits>

#include "ifan/autodiff.hpp"
#include "ifan/tensor.hpp"

namespace ifan {

// Pixels excluded on each side of the disparity loss, where clamped warping
// would otherwise dominate the photometric error.
inline constexpr int kDispLossBorder = 2;

struct LossReport {
  double l_deblur = 0.0;
  double l_disp = 0.0;
  double l_reblur = 0.0;
  double l_total = 0.0;
};

double loss_deblur(const Tensor4& restored, const Tensor4& sharp);
double loss_disp(const Tensor4& left_down, const Tensor4& right_down, const Tensor4& disparity);
double loss_reblur(const Tensor4& reblurred_down, const Tensor4& blurred_down);

Var loss_deblur(Var restored, Var sharp);
Var loss_disp(Var left_down, Var right_down, Var disparity);
Var loss_reblur(Var reblurred_down, Var blurred_down);

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

// 10 log10(peak^2 / mse); kInfinitePsnr for identical inputs.
double psnr(const Tensor4& a, const Tensor4& b, double peak = 1.0);
// Mean local SSIM of the channel-mean grayscale images over valid 11x11
// Gaussian (sigma 1.5) windows, averaged across the batch.
double ssim(const Tensor4& a, const Tensor4& b);
double mae(const Tensor4& a, const Tensor4& b);

}  // namespace ifan
