#include <doctest.h>

#include "ifan/error.hpp"
#include "ifan/ops.hpp"
#include "oracles.hpp"

using namespace ifan;

TEST_CASE("conv2d matches the brute-force loop") {
  const Tensor4 x = Tensor4::uniform({2, 3, 7, 6}, -1, 1, 1);
  const Tensor4 w = Tensor4::uniform({4, 3, 3, 3}, -1, 1, 2);
  const Tensor4 b = Tensor4::uniform({4, 1, 1, 1}, -1, 1, 3);
  for (int stride : {1, 2}) {
    const Tensor4 y = conv2d(x, w, b, stride);
    CHECK(y.shape() == Shape{2, 4, stride == 1 ? 7 : 4, stride == 1 ? 6 : 3});
    CHECK(oracle::max_abs_diff(y, oracle::conv2d(x, w, b, stride)) < 1e-12);
  }
  CHECK_THROWS_AS(conv2d(x, w, b, 3), ContractError);
  CHECK_THROWS_AS(conv2d(x, Tensor4({4, 2, 3, 3}), b, 1), ShapeError);
  CHECK_THROWS_AS(conv2d(x, Tensor4({4, 3, 2, 2}), b, 1), ContractError);
}

TEST_CASE("lrelu, area downsample and nearest upsample") {
  const Tensor4 x(Shape{1, 1, 2, 2}, {-2, 1, 0, -0.5});
  CHECK(lrelu(x, 0.1) == Tensor4(Shape{1, 1, 2, 2}, {-0.2, 1, 0, -0.05}));
  CHECK_THROWS_AS(lrelu(x, 1.5), ContractError);

  const Tensor4 img = Tensor4::uniform({2, 3, 8, 12}, 0, 1, 4);
  const Tensor4 d = area_downsample(img, 4);
  CHECK(d.shape() == Shape{2, 3, 2, 3});
  double s = 0;
  for (int y = 4; y < 8; ++y)
    for (int xx = 8; xx < 12; ++xx) s += img.at(1, 2, y, xx);
  CHECK(d.at(1, 2, 1, 2) == doctest::Approx(s / 16).epsilon(1e-14));
  CHECK(d.sum() * 16 == doctest::Approx(img.sum()));
  CHECK_THROWS_AS(area_downsample(img, 5), ShapeError);

  const Tensor4 u = upsample_nearest(d, 4);
  CHECK(u.shape() == img.shape());
  CHECK(u.at(0, 1, 5, 3) == d.at(0, 1, 1, 0));
  CHECK(oracle::max_abs_diff(area_downsample(u, 4), d) < 1e-15);
}

TEST_CASE("mse with border") {
  Tensor4 a({1, 1, 5, 5}), b({1, 1, 5, 5});
  a.at(0, 0, 0, 0) = 10;  // outside the border-1 window
  a.at(0, 0, 2, 2) = 3;
  CHECK(mse(a, b, 1) == doctest::Approx(1.0));
  CHECK(mse(a, b) == doctest::Approx(109.0 / 25));
  CHECK_THROWS_AS(mse(a, b, 3), ContractError);
}

TEST_CASE("differentiable ops match finite differences") {
  const Tensor4 target = Tensor4::uniform({2, 4, 4, 3}, -1, 1, 9);
  const Tensor4 x = Tensor4::uniform({2, 3, 8, 6}, -1, 1, 10);
  const Tensor4 w = Tensor4::uniform({4, 3, 3, 3}, -1, 1, 11);
  const Tensor4 b = Tensor4::uniform({4, 1, 1, 1}, -1, 1, 12);
  auto f = [&](const Tensor4& xx, const Tensor4& ww, const Tensor4& bb) {
    Tape t;
    Var y = lrelu(conv2d(t.constant(xx), t.constant(ww), t.constant(bb), 2), 0.2);
    return mse(y, t.constant(target)).value()[0];
  };
  Tape tape;
  Var vx = tape.leaf(x), vw = tape.leaf(w), vb = tape.leaf(b);
  tape.backward(mse(lrelu(conv2d(vx, vw, vb, 2), 0.2), tape.constant(target)));
  CHECK(oracle::rel_err(tape.grad(vx), oracle::numeric_grad([&](const Tensor4& v) { return f(v, w, b); }, x)) < 1e-6);
  CHECK(oracle::rel_err(tape.grad(vw), oracle::numeric_grad([&](const Tensor4& v) { return f(x, v, b); }, w)) < 1e-6);
  CHECK(oracle::rel_err(tape.grad(vb), oracle::numeric_grad([&](const Tensor4& v) { return f(x, w, v); }, b)) < 1e-6);

  const Tensor4 t2 = Tensor4::uniform({2, 3, 8, 6}, -1, 1, 13);
  auto g = [&](const Tensor4& xx) {
    Tape t;
    return mse(upsample_nearest(area_downsample(t.constant(xx), 2), 2), t.constant(t2)).value()[0];
  };
  Tape t3;
  Var v = t3.leaf(x);
  t3.backward(mse(upsample_nearest(area_downsample(v, 2), 2), t3.constant(t2)));
  CHECK(oracle::rel_err(t3.grad(v), oracle::numeric_grad(g, x)) < 1e-6);
}
