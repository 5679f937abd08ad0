#include "ifan/kernels/parallel.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ifan::kernels {

void set_num_threads(int threads) {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, threads));
#else
  (void)threads;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

// Valid [lo, hi) range of outputs o such that o + off lands in [0, n).
inline void valid_range(int64_t n, int64_t off, int64_t& lo, int64_t& hi) {
  lo = std::max<int64_t>(0, -off);
  hi = std::min<int64_t>(n, n - off);
}

}  // namespace

Tensor4 conv2d_forward(const Tensor4& x, const Tensor4& weight, const Tensor4& bias, int stride) {
  const int64_t c_out = weight.n(), c_in = weight.c(), k = weight.h();
  const int64_t pad = (k - 1) / 2;
  const int64_t h = x.h(), w = x.w();
  const int64_t oh = (h + stride - 1) / stride, ow = (w + stride - 1) / stride;
  const int64_t batch = x.n();
  Tensor4 out(Shape{batch, c_out, oh, ow});

#pragma omp parallel for schedule(static)
  for (int64_t plane = 0; plane < batch * c_out; ++plane) {
    const int64_t b = plane / c_out, co = plane % c_out;
    double* dst = out.plane(b, co);
    for (int64_t ci = 0; ci < c_in; ++ci) {
      const double* src = x.plane(b, ci);
      for (int64_t ky = 0; ky < k; ++ky)
        for (int64_t kx = 0; kx < k; ++kx) {
          const double wv = weight.at(co, ci, ky, kx);
          for (int64_t oy = 0; oy < oh; ++oy) {
            const int64_t iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            const double* row = src + iy * w;
            double* orow = dst + oy * ow;
            if (stride == 1) {
              int64_t lo, hi;
              valid_range(w, kx - pad, lo, hi);
              const double* shifted = row + (kx - pad);
              for (int64_t ox = lo; ox < hi; ++ox) orow[ox] += wv * shifted[ox];
            } else {
              for (int64_t ox = 0; ox < ow; ++ox) {
                const int64_t ix = ox * stride + kx - pad;
                if (ix < 0 || ix >= w) continue;
                orow[ox] += wv * row[ix];
              }
            }
          }
        }
    }
    const double bv = bias[static_cast<std::size_t>(co)];
    for (int64_t i = 0; i < oh * ow; ++i) dst[i] += bv;
  }
  return out;
}

void conv2d_backward(const Tensor4& x, const Tensor4& weight, int stride, const Tensor4& grad_out,
                     Tensor4* grad_x, Tensor4* grad_w, Tensor4* grad_b) {
  const int64_t c_out = weight.n(), c_in = weight.c(), k = weight.h();
  const int64_t pad = (k - 1) / 2;
  const int64_t h = x.h(), w = x.w();
  const int64_t oh = grad_out.h(), ow = grad_out.w();
  const int64_t batch = x.n();

  if (grad_b) {
    *grad_b = Tensor4(Shape{c_out, 1, 1, 1});
    for (int64_t co = 0; co < c_out; ++co) {
      double s = 0.0;
      for (int64_t b = 0; b < batch; ++b) {
        const double* g = grad_out.plane(b, co);
        for (int64_t i = 0; i < oh * ow; ++i) s += g[i];
      }
      (*grad_b)[static_cast<std::size_t>(co)] = s;
    }
  }

  if (grad_w) {
    *grad_w = Tensor4(weight.shape());
#pragma omp parallel for schedule(static)
    for (int64_t co = 0; co < c_out; ++co) {
      for (int64_t ci = 0; ci < c_in; ++ci)
        for (int64_t ky = 0; ky < k; ++ky)
          for (int64_t kx = 0; kx < k; ++kx) {
            double s = 0.0;
            for (int64_t b = 0; b < batch; ++b) {
              const double* g = grad_out.plane(b, co);
              const double* src = x.plane(b, ci);
              for (int64_t oy = 0; oy < oh; ++oy) {
                const int64_t iy = oy * stride + ky - pad;
                if (iy < 0 || iy >= h) continue;
                const double* row = src + iy * w;
                const double* grow = g + oy * ow;
                if (stride == 1) {
                  int64_t lo, hi;
                  valid_range(w, kx - pad, lo, hi);
                  const double* shifted = row + (kx - pad);
                  for (int64_t ox = lo; ox < hi; ++ox) s += grow[ox] * shifted[ox];
                } else {
                  for (int64_t ox = 0; ox < ow; ++ox) {
                    const int64_t ix = ox * stride + kx - pad;
                    if (ix < 0 || ix >= w) continue;
                    s += grow[ox] * row[ix];
                  }
                }
              }
            }
            grad_w->at(co, ci, ky, kx) = s;
          }
    }
  }

  if (grad_x) {
    *grad_x = Tensor4(x.shape());
#pragma omp parallel for schedule(static)
    for (int64_t plane = 0; plane < batch * c_in; ++plane) {
      const int64_t b = plane / c_in, ci = plane % c_in;
      double* dst = grad_x->plane(b, ci);
      for (int64_t co = 0; co < c_out; ++co) {
        const double* g = grad_out.plane(b, co);
        for (int64_t ky = 0; ky < k; ++ky)
          for (int64_t kx = 0; kx < k; ++kx) {
            const double wv = weight.at(co, ci, ky, kx);
            for (int64_t oy = 0; oy < oh; ++oy) {
              const int64_t iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= h) continue;
              double* row = dst + iy * w;
              const double* grow = g + oy * ow;
              if (stride == 1) {
                int64_t lo, hi;
                valid_range(w, kx - pad, lo, hi);
                double* shifted = row + (kx - pad);
                for (int64_t ox = lo; ox < hi; ++ox) shifted[ox] += wv * grow[ox];
              } else {
                for (int64_t ox = 0; ox < ow; ++ox) {
                  const int64_t ix = ox * stride + kx - pad;
                  if (ix < 0 || ix >= w) continue;
                  row[ix] += wv * grow[ox];
                }
              }
            }
          }
      }
    }
  }
}

Tensor4 fac_forward(const Tensor4& e, const Tensor4& filters, int64_t k) {
  const DenseLayout lay{e.c(), k};
  const int64_t h = e.h(), w = e.w(), r = k / 2, c = e.c();
  Tensor4 out(e.shape());
#pragma omp parallel for schedule(static)
  for (int64_t plane = 0; plane < e.n() * c; ++plane) {
    const int64_t b = plane / c, ch = plane % c;
    const double* src = e.plane(b, ch);
    double* dst = out.plane(b, ch);
    for (int64_t i = 0; i < k; ++i)
      for (int64_t j = 0; j < k; ++j) {
        const double* f = filters.plane(b, lay.tap(ch, i, j));
        int64_t ylo, yhi, xlo, xhi;
        valid_range(h, i - r, ylo, yhi);
        valid_range(w, j - r, xlo, xhi);
        for (int64_t y = ylo; y < yhi; ++y) {
          const double* srow = src + (y + i - r) * w + (j - r);
          const double* frow = f + y * w;
          double* drow = dst + y * w;
          for (int64_t x = xlo; x < xhi; ++x) drow[x] += frow[x] * srow[x];
        }
      }
  }
  return out;
}

void fac_backward(const Tensor4& e, const Tensor4& filters, int64_t k, const Tensor4& grad_out, Tensor4* grad_e,
                  Tensor4* grad_filters) {
  const DenseLayout lay{e.c(), k};
  const int64_t h = e.h(), w = e.w(), r = k / 2, c = e.c();
  if (grad_e) *grad_e = Tensor4(e.shape());
  if (grad_filters) *grad_filters = Tensor4(filters.shape());
#pragma omp parallel for schedule(static)
  for (int64_t plane = 0; plane < e.n() * c; ++plane) {
    const int64_t b = plane / c, ch = plane % c;
    const double* src = e.plane(b, ch);
    const double* g = grad_out.plane(b, ch);
    for (int64_t i = 0; i < k; ++i)
      for (int64_t j = 0; j < k; ++j) {
        const int64_t tap = lay.tap(ch, i, j);
        const double* f = filters.plane(b, tap);
        int64_t ylo, yhi, xlo, xhi;
        valid_range(h, i - r, ylo, yhi);
        valid_range(w, j - r, xlo, xhi);
        for (int64_t y = ylo; y < yhi; ++y) {
          const int64_t off = (y + i - r) * w + (j - r);
          const double* grow = g + y * w;
          if (grad_filters) {
            const double* srow = src + off;
            double* gf = grad_filters->plane(b, tap) + y * w;
            for (int64_t x = xlo; x < xhi; ++x) gf[x] = grow[x] * srow[x];
          }
          if (grad_e) {
            double* gerow = grad_e->plane(b, ch) + off;
            const double* frow = f + y * w;
            for (int64_t x = xlo; x < xhi; ++x) gerow[x] += grow[x] * frow[x];
          }
        }
      }
  }
}

namespace {

// One separable pass over a plane: out[y][x] = sum_t f_t[y][x] * in[y+dy*(t-r)][x+dx*(t-r)].
void adaptive_pass(const double* in, const Tensor4& filters, int64_t b, const int64_t* taps, int64_t k,
                   int64_t h, int64_t w, bool vertical, double* out) {
  const int64_t r = k / 2;
  std::fill(out, out + h * w, 0.0);
  for (int64_t t = 0; t < k; ++t) {
    const double* f = filters.plane(b, taps[t]);
    const int64_t dy = vertical ? t - r : 0, dx = vertical ? 0 : t - r;
    int64_t ylo, yhi, xlo, xhi;
    valid_range(h, dy, ylo, yhi);
    valid_range(w, dx, xlo, xhi);
    for (int64_t y = ylo; y < yhi; ++y) {
      const double* srow = in + (y + dy) * w + dx;
      const double* frow = f + y * w;
      double* orow = out + y * w;
      for (int64_t x = xlo; x < xhi; ++x) orow[x] += frow[x] * srow[x];
    }
  }
}

// Adjoint of adaptive_pass. grad_in accumulates, grad_f taps are overwritten.
void adaptive_pass_adjoint(const double* in, const Tensor4& filters, int64_t b, const int64_t* taps, int64_t k,
                           int64_t h, int64_t w, bool vertical, const double* grad_out, double* grad_in,
                           Tensor4* grad_filters) {
  const int64_t r = k / 2;
  for (int64_t t = 0; t < k; ++t) {
    const double* f = filters.plane(b, taps[t]);
    double* gf = grad_filters ? grad_filters->plane(b, taps[t]) : nullptr;
    const int64_t dy = vertical ? t - r : 0, dx = vertical ? 0 : t - r;
    int64_t ylo, yhi, xlo, xhi;
    valid_range(h, dy, ylo, yhi);
    valid_range(w, dx, xlo, xhi);
    for (int64_t y = ylo; y < yhi; ++y) {
      const int64_t off = (y + dy) * w + dx;
      const double* grow = grad_out + y * w;
      const double* frow = f + y * w;
      double* girow = grad_in + off;
      for (int64_t x = xlo; x < xhi; ++x) girow[x] += grow[x] * frow[x];
      if (gf) {
        const double* srow = in + off;
        double* gfrow = gf + y * w;
        for (int64_t x = xlo; x < xhi; ++x) gfrow[x] = grow[x] * srow[x];
      }
    }
  }
}

}  // namespace

Tensor4 iac_forward(const Tensor4& e, const Tensor4& filters, int64_t sets, int64_t k, double slope,
                    IacTrace* trace) {
  const SeparableLayout lay{sets, e.c(), k};
  const int64_t h = e.h(), w = e.w(), c = e.c();
  if (trace) {
    trace->inputs.assign(static_cast<std::size_t>(sets), Tensor4(e.shape()));
    trace->vertical.assign(static_cast<std::size_t>(sets), Tensor4(e.shape()));
    trace->preact.assign(static_cast<std::size_t>(sets), Tensor4(e.shape()));
  }
  Tensor4 out = e;
#pragma omp parallel for schedule(static)
  for (int64_t plane = 0; plane < e.n() * c; ++plane) {
    const int64_t b = plane / c, ch = plane % c;
    std::vector<double> vert(static_cast<std::size_t>(h * w));
    std::vector<int64_t> taps1(static_cast<std::size_t>(k)), taps2(static_cast<std::size_t>(k));
    double* cur = out.plane(b, ch);
    for (int64_t set = 0; set < sets; ++set) {
      for (int64_t t = 0; t < k; ++t) {
        taps1[static_cast<std::size_t>(t)] = lay.f1(set, ch, t);
        taps2[static_cast<std::size_t>(t)] = lay.f2(set, ch, t);
      }
      if (trace) std::copy(cur, cur + h * w, trace->inputs[static_cast<std::size_t>(set)].plane(b, ch));
      adaptive_pass(cur, filters, b, taps1.data(), k, h, w, true, vert.data());
      if (trace) std::copy(vert.begin(), vert.end(), trace->vertical[static_cast<std::size_t>(set)].plane(b, ch));
      adaptive_pass(vert.data(), filters, b, taps2.data(), k, h, w, false, cur);
      const double* bias = filters.plane(b, lay.bias(set, ch));
      double* pre = trace ? trace->preact[static_cast<std::size_t>(set)].plane(b, ch) : nullptr;
      for (int64_t i = 0; i < h * w; ++i) {
        const double z = cur[i] + bias[i];
        if (pre) pre[i] = z;
        cur[i] = z >= 0.0 ? z : slope * z;
      }
    }
  }
  return out;
}

void iac_backward(const IacTrace& trace, const Tensor4& filters, int64_t sets, int64_t k, double slope,
                  const Tensor4& grad_out, Tensor4* grad_e, Tensor4* grad_filters) {
  const Shape shape = grad_out.shape();
  const SeparableLayout lay{sets, shape.c, k};
  const int64_t h = shape.h, w = shape.w, c = shape.c;
  if (grad_e) *grad_e = Tensor4(shape);
  if (grad_filters) *grad_filters = Tensor4(filters.shape());
#pragma omp parallel for schedule(static)
  for (int64_t plane = 0; plane < shape.n * c; ++plane) {
    const int64_t b = plane / c, ch = plane % c;
    const std::size_t area = static_cast<std::size_t>(h * w);
    std::vector<double> g(grad_out.plane(b, ch), grad_out.plane(b, ch) + area);
    std::vector<double> gvert(area), gin(area);
    std::vector<int64_t> taps1(static_cast<std::size_t>(k)), taps2(static_cast<std::size_t>(k));
    for (int64_t set = sets - 1; set >= 0; --set) {
      const std::size_t s = static_cast<std::size_t>(set);
      for (int64_t t = 0; t < k; ++t) {
        taps1[static_cast<std::size_t>(t)] = lay.f1(set, ch, t);
        taps2[static_cast<std::size_t>(t)] = lay.f2(set, ch, t);
      }
      const double* pre = trace.preact[s].plane(b, ch);
      for (std::size_t i = 0; i < area; ++i) g[i] *= pre[i] >= 0.0 ? 1.0 : slope;
      if (grad_filters) {
        double* gb = grad_filters->plane(b, lay.bias(set, ch));
        std::copy(g.begin(), g.end(), gb);
      }
      std::fill(gvert.begin(), gvert.end(), 0.0);
      adaptive_pass_adjoint(trace.vertical[s].plane(b, ch), filters, b, taps2.data(), k, h, w, false, g.data(),
                            gvert.data(), grad_filters);
      std::fill(gin.begin(), gin.end(), 0.0);
      adaptive_pass_adjoint(trace.inputs[s].plane(b, ch), filters, b, taps1.data(), k, h, w, true, gvert.data(),
                            gin.data(), grad_filters);
      g.swap(gin);
    }
    if (grad_e) std::copy(g.begin(), g.end(), grad_e->plane(b, ch));
  }
}

Tensor4 warp_forward(const Tensor4& img, const Tensor4& disparity) {
  const int64_t h = img.h(), w = img.w(), c = img.c();
  Tensor4 out(img.shape());
#pragma omp parallel for schedule(static)
  for (int64_t row = 0; row < img.n() * h; ++row) {
    const int64_t b = row / h, y = row % h;
    const double* d = disparity.plane(b, 0) + y * w;
    for (int64_t x = 0; x < w; ++x) {
      const double sx = std::clamp(static_cast<double>(x) + d[x], 0.0, static_cast<double>(w - 1));
      const int64_t x0 = static_cast<int64_t>(std::floor(sx));
      const int64_t x1 = std::min(x0 + 1, w - 1);
      const double a = sx - static_cast<double>(x0);
      for (int64_t ch = 0; ch < c; ++ch) {
        const double* src = img.plane(b, ch) + y * w;
        out.at(b, ch, y, x) = (1.0 - a) * src[x0] + a * src[x1];
      }
    }
  }
  return out;
}

void warp_backward(const Tensor4& img, const Tensor4& disparity, const Tensor4& grad_out, Tensor4* grad_img,
                   Tensor4* grad_disparity) {
  const int64_t h = img.h(), w = img.w(), c = img.c();
  if (grad_img) *grad_img = Tensor4(img.shape());
  if (grad_disparity) *grad_disparity = Tensor4(disparity.shape());
#pragma omp parallel for schedule(static)
  for (int64_t row = 0; row < img.n() * h; ++row) {
    const int64_t b = row / h, y = row % h;
    const double* d = disparity.plane(b, 0) + y * w;
    for (int64_t x = 0; x < w; ++x) {
      const double raw = static_cast<double>(x) + d[x];
      const double sx = std::clamp(raw, 0.0, static_cast<double>(w - 1));
      const bool inside = raw > 0.0 && raw < static_cast<double>(w - 1);
      const int64_t x0 = static_cast<int64_t>(std::floor(sx));
      const int64_t x1 = std::min(x0 + 1, w - 1);
      const double a = sx - static_cast<double>(x0);
      double gd = 0.0;
      for (int64_t ch = 0; ch < c; ++ch) {
        const double* src = img.plane(b, ch) + y * w;
        const double g = grad_out.at(b, ch, y, x);
        if (grad_img) {
          double* gi = grad_img->plane(b, ch) + y * w;
          gi[x0] += (1.0 - a) * g;
          gi[x1] += a * g;
        }
        if (inside) gd += g * (src[x1] - src[x0]);
      }
      if (grad_disparity) grad_disparity->at(b, 0, y, x) = gd;
    }
  }
}

}  // namespace ifan::kernels
