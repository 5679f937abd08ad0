#pragma once

// Brute-force loop references and finite differences used as test oracles.
// Deliberately independent of the library's kernels and layout helpers.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "ifan/tensor.hpp"

namespace oracle {

using ifan::Shape;
using ifan::Tensor4;

inline double get0(const Tensor4& t, int64_t b, int64_t c, int64_t y, int64_t x) {
  if (y < 0 || y >= t.h() || x < 0 || x >= t.w()) return 0.0;
  return t.data()[((b * t.c() + c) * t.h() + y) * t.w() + x];
}

// Filter channel ch*k*k + i*k + j weights e(y+i-k/2, x+j-k/2).
inline Tensor4 fac(const Tensor4& e, const Tensor4& f, int64_t k) {
  Tensor4 out(e.shape());
  const int64_t r = k / 2;
  for (int64_t b = 0; b < e.n(); ++b)
    for (int64_t c = 0; c < e.c(); ++c)
      for (int64_t y = 0; y < e.h(); ++y)
        for (int64_t x = 0; x < e.w(); ++x) {
          long double acc = 0;
          for (int64_t i = 0; i < k; ++i)
            for (int64_t j = 0; j < k; ++j) acc += get0(f, b, c * k * k + i * k + j, y, x) * get0(e, b, c, y + i - r, x + j - r);
          out.at(b, c, y, x) = static_cast<double>(acc);
        }
  return out;
}

// Per set n: vertical pass with f1 at the output pixel, horizontal pass with
// f2, bias, leaky ReLU. Set n occupies channels [n*c*(2k+1), (n+1)*c*(2k+1)).
inline Tensor4 iac(const Tensor4& e, const Tensor4& f, int64_t sets, int64_t k, double slope) {
  const int64_t c = e.c(), r = k / 2;
  Tensor4 cur = e;
  for (int64_t n = 0; n < sets; ++n) {
    const int64_t base = n * c * (2 * k + 1);
    Tensor4 vert(e.shape());
    for (int64_t b = 0; b < e.n(); ++b)
      for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t y = 0; y < e.h(); ++y)
          for (int64_t x = 0; x < e.w(); ++x) {
            long double acc = 0;
            for (int64_t t = 0; t < k; ++t) acc += get0(f, b, base + ch * k + t, y, x) * get0(cur, b, ch, y + t - r, x);
            vert.at(b, ch, y, x) = static_cast<double>(acc);
          }
    Tensor4 next(e.shape());
    for (int64_t b = 0; b < e.n(); ++b)
      for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t y = 0; y < e.h(); ++y)
          for (int64_t x = 0; x < e.w(); ++x) {
            long double acc = 0;
            for (int64_t t = 0; t < k; ++t) acc += get0(f, b, base + c * k + ch * k + t, y, x) * get0(vert, b, ch, y, x + t - r);
            const double z = static_cast<double>(acc) + get0(f, b, base + 2 * c * k + ch, y, x);
            next.at(b, ch, y, x) = z >= 0 ? z : slope * z;
          }
    cur = next;
  }
  return cur;
}

// Zero-padded "same" convolution (cross-correlation), stride 1 or 2.
inline Tensor4 conv2d(const Tensor4& x, const Tensor4& w, const Tensor4& bias, int stride) {
  const int64_t k = w.h(), p = k / 2;
  const int64_t oh = (x.h() + stride - 1) / stride, ow = (x.w() + stride - 1) / stride;
  Tensor4 out(Shape{x.n(), w.n(), oh, ow});
  for (int64_t b = 0; b < x.n(); ++b)
    for (int64_t co = 0; co < w.n(); ++co)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          long double acc = bias.data()[co];
          for (int64_t ci = 0; ci < w.c(); ++ci)
            for (int64_t i = 0; i < k; ++i)
              for (int64_t j = 0; j < k; ++j) acc += w.at(co, ci, i, j) * get0(x, b, ci, oy * stride + i - p, ox * stride + j - p);
          out.at(b, co, oy, ox) = static_cast<double>(acc);
        }
  return out;
}

// Bilinear sample along x at x + d, coordinate clamped to [0, w-1].
inline Tensor4 warp(const Tensor4& img, const Tensor4& d) {
  Tensor4 out(img.shape());
  for (int64_t b = 0; b < img.n(); ++b)
    for (int64_t c = 0; c < img.c(); ++c)
      for (int64_t y = 0; y < img.h(); ++y)
        for (int64_t x = 0; x < img.w(); ++x) {
          double p = static_cast<double>(x) + d.at(b, 0, y, x);
          p = std::fmin(std::fmax(p, 0.0), static_cast<double>(img.w() - 1));
          const auto x0 = static_cast<int64_t>(std::floor(p));
          const int64_t x1 = std::min<int64_t>(x0 + 1, img.w() - 1);
          const double a = p - static_cast<double>(x0);
          out.at(b, c, y, x) = (1 - a) * img.at(b, c, y, x0) + a * img.at(b, c, y, x1);
        }
  return out;
}

inline double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::fmax(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

// Central-difference gradient of a scalar function of one tensor.
inline Tensor4 numeric_grad(const std::function<double(const Tensor4&)>& f, Tensor4 x, double h = 1e-5) {
  Tensor4 g(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double s = x.data()[i];
    x.data()[i] = s + h;
    const double fp = f(x);
    x.data()[i] = s - h;
    const double fm = f(x);
    x.data()[i] = s;
    g.data()[i] = (fp - fm) / (2 * h);
  }
  return g;
}

inline double rel_err(const Tensor4& a, const Tensor4& n) {
  double num = 0, den = 1e-8;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    num = std::fmax(num, std::fabs(a.data()[i] - n.data()[i]));
    den = std::fmax(den, std::fmax(std::fabs(a.data()[i]), std::fabs(n.data()[i])));
  }
  return num / den;
}

}  // namespace oracle
