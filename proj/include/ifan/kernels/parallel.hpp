#pragma once

// OpenMP kernels used by the training and inference paths. Work is split
// over independent output planes (or rows), so every output element is
// accumulated by one thread in a fixed order and results are bit-identical
// for any thread count.

#include <vector>

#include "ifan/kernels/layout.hpp"
#include "ifan/tensor.hpp"

namespace ifan::kernels {

void set_num_threads(int threads);
int max_threads();

Tensor4 conv2d_forward(const Tensor4& x, const Tensor4& weight, const Tensor4& bias, int stride);
// Any of the gradient outputs may be null. Outputs are overwritten.
void conv2d_backward(const Tensor4& x, const Tensor4& weight, int stride, const Tensor4& grad_out,
                     Tensor4* grad_x, Tensor4* grad_w, Tensor4* grad_b);

Tensor4 fac_forward(const Tensor4& e, const Tensor4& filters, int64_t k);
void fac_backward(const Tensor4& e, const Tensor4& filters, int64_t k, const Tensor4& grad_out,
                  Tensor4* grad_e, Tensor4* grad_filters);

// Intermediates kept by iac_forward for the adjoint pass.
struct IacTrace {
  std::vector<Tensor4> inputs;    // e^(n-1)
  std::vector<Tensor4> vertical;  // after the f1 pass
  std::vector<Tensor4> preact;    // after the f2 pass plus bias
};

Tensor4 iac_forward(const Tensor4& e, const Tensor4& filters, int64_t sets, int64_t k, double slope,
                    IacTrace* trace = nullptr);
void iac_backward(const IacTrace& trace, const Tensor4& filters, int64_t sets, int64_t k, double slope,
                  const Tensor4& grad_out, Tensor4* grad_e, Tensor4* grad_filters);

// Horizontal bilinear sampling at x + d(x, y) with coordinates clamped to
// [0, w-1]. Disparity has a single channel shared by all image channels.
Tensor4 warp_forward(const Tensor4& img, const Tensor4& disparity);
void warp_backward(const Tensor4& img, const Tensor4& disparity, const Tensor4& grad_out, Tensor4* grad_img,
                   Tensor4* grad_disparity);

}  // namespace ifan::kernels
