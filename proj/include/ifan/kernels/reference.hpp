#pragma once

// Serial reference kernels. They evaluate every filter tap, including taps
// that land on zero padding, so a MulCounter sees the exact multiply count.
// The OpenMP kernels in parallel.hpp must reproduce these bit-for-bit.

#include <algorithm>

#include "ifan/kernels/layout.hpp"
#include "ifan/tensor.hpp"

namespace ifan::kernels::reference {

namespace detail {
inline double padded(const double* plane, int64_t h, int64_t w, int64_t y, int64_t x) {
  return (y < 0 || y >= h || x < 0 || x >= w) ? 0.0 : plane[y * w + x];
}
}  // namespace detail

// "same" zero-padded convolution with square odd kernels, stride 1 or 2.
template <class Counter = NoCount>
Tensor4 conv2d_forward(const Tensor4& x, const Tensor4& weight, const Tensor4& bias, int stride,
                       Counter&& counter = Counter{}) {
  const int64_t c_out = weight.n(), c_in = weight.c(), k = weight.h();
  const int64_t pad = (k - 1) / 2;
  const int64_t h = x.h(), w = x.w();
  const int64_t oh = (h + stride - 1) / stride, ow = (w + stride - 1) / stride;
  Tensor4 out(Shape{x.n(), c_out, oh, ow});
  for (int64_t b = 0; b < x.n(); ++b)
    for (int64_t co = 0; co < c_out; ++co)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          double acc = 0.0;
          for (int64_t ci = 0; ci < c_in; ++ci) {
            const double* src = x.plane(b, ci);
            for (int64_t ky = 0; ky < k; ++ky)
              for (int64_t kx = 0; kx < k; ++kx) {
                const int64_t iy = oy * stride + ky - pad, ix = ox * stride + kx - pad;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                acc += weight.at(co, ci, ky, kx) * src[iy * w + ix];
                counter.add(1);
              }
          }
          out.at(b, co, oy, ox) = acc + bias[static_cast<std::size_t>(co)];
        }
  return out;
}

// Dense per-pixel channel-wise convolution.
template <class Counter = NoCount>
Tensor4 fac_forward(const Tensor4& e, const Tensor4& filters, int64_t k, Counter&& counter = Counter{}) {
  const DenseLayout lay{e.c(), k};
  const int64_t h = e.h(), w = e.w(), r = k / 2;
  Tensor4 out(e.shape());
  for (int64_t b = 0; b < e.n(); ++b)
    for (int64_t ch = 0; ch < e.c(); ++ch) {
      const double* src = e.plane(b, ch);
      for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
          double acc = 0.0;
          for (int64_t i = 0; i < k; ++i)
            for (int64_t j = 0; j < k; ++j) {
              acc += filters.at(b, lay.tap(ch, i, j), y, x) * detail::padded(src, h, w, y + i - r, x + j - r);
              counter.add(1);
            }
          out.at(b, ch, y, x) = acc;
        }
    }
  return out;
}

// Iterative separable adaptive convolution: for each set, a per-pixel
// vertical k-tap pass, a per-pixel horizontal k-tap pass, bias, then LReLU.
template <class Counter = NoCount>
Tensor4 iac_forward(const Tensor4& e, const Tensor4& filters, int64_t sets, int64_t k, double slope,
                    Counter&& counter = Counter{}) {
  const SeparableLayout lay{sets, e.c(), k};
  const int64_t h = e.h(), w = e.w(), r = k / 2;
  Tensor4 cur = e;
  Tensor4 vert(e.shape());
  for (int64_t set = 0; set < sets; ++set) {
    for (int64_t b = 0; b < e.n(); ++b)
      for (int64_t ch = 0; ch < e.c(); ++ch) {
        const double* src = cur.plane(b, ch);
        for (int64_t y = 0; y < h; ++y)
          for (int64_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int64_t t = 0; t < k; ++t) {
              acc += filters.at(b, lay.f1(set, ch, t), y, x) * detail::padded(src, h, w, y + t - r, x);
              counter.add(1);
            }
            vert.at(b, ch, y, x) = acc;
          }
      }
    for (int64_t b = 0; b < e.n(); ++b)
      for (int64_t ch = 0; ch < e.c(); ++ch) {
        const double* src = vert.plane(b, ch);
        for (int64_t y = 0; y < h; ++y)
          for (int64_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int64_t t = 0; t < k; ++t) {
              acc += filters.at(b, lay.f2(set, ch, t), y, x) * detail::padded(src, h, w, y, x + t - r);
              counter.add(1);
            }
            const double z = acc + filters.at(b, lay.bias(set, ch), y, x);
            cur.at(b, ch, y, x) = z >= 0.0 ? z : slope * z;
          }
      }
  }
  return cur;
}

}  // namespace ifan::kernels::reference
