#include "ifan/ops.hpp"

#include <algorithm>

#include "ifan/error.hpp"
#include "ifan/kernels/parallel.hpp"

namespace ifan {

namespace {

void check_conv_args(const Tensor4& x, const Tensor4& weight, const Tensor4& bias, int stride) {
  if (weight.c() != x.c()) {
    throw ShapeError("conv2d: input has " + std::to_string(x.c()) + " channels, weights expect " +
                     std::to_string(weight.c()));
  }
  if (weight.h() != weight.w() || weight.h() % 2 == 0) throw ShapeError("conv2d: kernel must be square and odd");
  if (bias.numel() != static_cast<std::size_t>(weight.n())) throw ShapeError("conv2d: bias length mismatch");
  if (stride != 1 && stride != 2) throw ContractError("conv2d: stride must be 1 or 2");
}

void check_divisible(const Tensor4& x, int factor) {
  if (factor < 1) throw ContractError("factor must be >= 1");
  if (x.h() % factor != 0 || x.w() % factor != 0) {
    throw ShapeError("spatial size " + std::to_string(x.h()) + "x" + std::to_string(x.w()) +
                     " not divisible by " + std::to_string(factor));
  }
}

void check_border(const Tensor4& a, int border) {
  if (border < 0 || 2 * border >= a.h() || 2 * border >= a.w()) {
    throw ShapeError("mse border " + std::to_string(border) + " leaves no pixels in " + a.shape().str());
  }
}

}  // namespace

Tensor4 conv2d(const Tensor4& x, const Tensor4& weight, const Tensor4& bias, int stride) {
  check_conv_args(x, weight, bias, stride);
  return kernels::conv2d_forward(x, weight, bias, stride);
}

Tensor4 lrelu(const Tensor4& x, double slope) {
  if (!(slope >= 0.0 && slope < 1.0) && slope != 1.0) throw ContractError("lrelu slope must be in [0, 1)");
  Tensor4 y = x;
  for (double& v : y.values()) v = v >= 0.0 ? v : slope * v;
  return y;
}

Tensor4 area_downsample(const Tensor4& x, int factor) {
  check_divisible(x, factor);
  const int64_t oh = x.h() / factor, ow = x.w() / factor;
  Tensor4 out(Shape{x.n(), x.c(), oh, ow});
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (int64_t b = 0; b < x.n(); ++b)
    for (int64_t ch = 0; ch < x.c(); ++ch)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          double s = 0.0;
          for (int dy = 0; dy < factor; ++dy)
            for (int dx = 0; dx < factor; ++dx) s += x.at(b, ch, oy * factor + dy, ox * factor + dx);
          out.at(b, ch, oy, ox) = s * inv;
        }
  return out;
}

Tensor4 upsample_nearest(const Tensor4& x, int factor) {
  if (factor < 1) throw ContractError("upsample factor must be >= 1");
  Tensor4 out(Shape{x.n(), x.c(), x.h() * factor, x.w() * factor});
  for (int64_t b = 0; b < x.n(); ++b)
    for (int64_t ch = 0; ch < x.c(); ++ch)
      for (int64_t y = 0; y < out.h(); ++y)
        for (int64_t xx = 0; xx < out.w(); ++xx) out.at(b, ch, y, xx) = x.at(b, ch, y / factor, xx / factor);
  return out;
}

double mse(const Tensor4& a, const Tensor4& b, int border) {
  require_same_shape(a, b, "mse");
  check_border(a, border);
  double s = 0.0;
  std::size_t count = 0;
  for (int64_t n = 0; n < a.n(); ++n)
    for (int64_t ch = 0; ch < a.c(); ++ch)
      for (int64_t y = border; y < a.h() - border; ++y)
        for (int64_t x = border; x < a.w() - border; ++x) {
          const double d = a.at(n, ch, y, x) - b.at(n, ch, y, x);
          s += d * d;
          ++count;
        }
  return s / static_cast<double>(count);
}

Var conv2d(Var x, Var weight, Var bias, int stride) {
  Tensor4 out = conv2d(x.value(), weight.value(), bias.value(), stride);
  return x.tape->record(std::move(out), {x, weight, bias}, [x, weight, bias, stride](Tape& t, const Tensor4& g) {
    Tensor4 gx, gw, gb;
    kernels::conv2d_backward(t.value(x), t.value(weight), stride, g, t.requires_grad(x) ? &gx : nullptr,
                             t.requires_grad(weight) ? &gw : nullptr, t.requires_grad(bias) ? &gb : nullptr);
    if (t.requires_grad(x)) t.accumulate(x, std::move(gx));
    if (t.requires_grad(weight)) t.accumulate(weight, std::move(gw));
    if (t.requires_grad(bias)) {
      gb = Tensor4(t.value(bias).shape(), std::vector<double>(gb.values().begin(), gb.values().end()));
      t.accumulate(bias, std::move(gb));
    }
  });
}

Var lrelu(Var x, double slope) {
  Tensor4 out = lrelu(x.value(), slope);
  return x.tape->record(std::move(out), {x}, [x, slope](Tape& t, const Tensor4& g) {
    const Tensor4& in = t.value(x);
    Tensor4 gx = g;
    for (std::size_t i = 0; i < gx.numel(); ++i)
      if (in[i] < 0.0) gx[i] *= slope;
    t.accumulate(x, std::move(gx));
  });
}

Var area_downsample(Var x, int factor) {
  Tensor4 out = area_downsample(x.value(), factor);
  return x.tape->record(std::move(out), {x}, [x, factor](Tape& t, const Tensor4& g) {
    Tensor4 gx = upsample_nearest(g, factor);
    gx.scale(1.0 / static_cast<double>(factor * factor));
    t.accumulate(x, std::move(gx));
  });
}

Var upsample_nearest(Var x, int factor) {
  Tensor4 out = upsample_nearest(x.value(), factor);
  return x.tape->record(std::move(out), {x}, [x, factor](Tape& t, const Tensor4& g) {
    Tensor4 gx = area_downsample(g, factor);
    gx.scale(static_cast<double>(factor * factor));
    t.accumulate(x, std::move(gx));
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor4 out = a.value();
  out.axpy(1.0, b.value());
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor4& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var scale(Var a, double alpha) {
  Tensor4 out = a.value();
  out.scale(alpha);
  return a.tape->record(std::move(out), {a}, [a, alpha](Tape& t, const Tensor4& g) {
    Tensor4 ga = g;
    ga.scale(alpha);
    t.accumulate(a, std::move(ga));
  });
}

Var concat_channels(Var a, Var b) {
  const Tensor4& va = a.value();
  const Tensor4& vb = b.value();
  if (va.n() != vb.n() || va.h() != vb.h() || va.w() != vb.w()) {
    throw ShapeError("concat_channels: " + va.shape().str() + " vs " + vb.shape().str());
  }
  const int64_t ca = va.c(), cb = vb.c(), area = va.h() * va.w();
  Tensor4 out(Shape{va.n(), ca + cb, va.h(), va.w()});
  for (int64_t n = 0; n < va.n(); ++n) {
    std::copy(va.plane(n, 0), va.plane(n, 0) + ca * area, out.plane(n, 0));
    std::copy(vb.plane(n, 0), vb.plane(n, 0) + cb * area, out.plane(n, ca));
  }
  return a.tape->record(std::move(out), {a, b}, [a, b, ca, cb, area](Tape& t, const Tensor4& g) {
    Tensor4 ga(t.value(a).shape()), gb(t.value(b).shape());
    for (int64_t n = 0; n < g.n(); ++n) {
      std::copy(g.plane(n, 0), g.plane(n, 0) + ca * area, ga.plane(n, 0));
      std::copy(g.plane(n, ca), g.plane(n, ca) + cb * area, gb.plane(n, 0));
    }
    t.accumulate(a, std::move(ga));
    t.accumulate(b, std::move(gb));
  });
}

Var mse(Var a, Var b, int border) {
  const double v = mse(a.value(), b.value(), border);
  return a.tape->record(Tensor4(Shape{}, v), {a, b}, [a, b, border](Tape& t, const Tensor4& g) {
    const Tensor4& va = t.value(a);
    const Tensor4& vb = t.value(b);
    const double count = static_cast<double>(va.n() * va.c() * (va.h() - 2 * border) * (va.w() - 2 * border));
    const double coef = 2.0 * g[0] / count;
    Tensor4 ga(va.shape());
    for (int64_t n = 0; n < va.n(); ++n)
      for (int64_t ch = 0; ch < va.c(); ++ch)
        for (int64_t y = border; y < va.h() - border; ++y)
          for (int64_t x = border; x < va.w() - border; ++x)
            ga.at(n, ch, y, x) = coef * (va.at(n, ch, y, x) - vb.at(n, ch, y, x));
    if (t.requires_grad(b)) {
      Tensor4 gb = ga;
      gb.scale(-1.0);
      t.accumulate(b, std::move(gb));
    }
    t.accumulate(a, std::move(ga));
  });
}

}  // namespace ifan
