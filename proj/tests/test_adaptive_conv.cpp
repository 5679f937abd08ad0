#include <doctest.h>

#include "ifan/adaptive_conv.hpp"
#include "ifan/error.hpp"
#include "ifan/ops.hpp"
#include "oracles.hpp"

using namespace ifan;

TEST_CASE("identity filter map is a no-op for non-negative input") {
  const Tensor4 e = Tensor4::uniform({2, 3, 6, 5}, 0, 1, 1);
  const FilterMap id = FilterMap::identity(2, 4, 3, 5, 6, 5);
  CHECK(iac_forward(e, id, 0.1) == e);
}

TEST_CASE("filter map validation") {
  CHECK_THROWS_AS(FilterMap(Tensor4({1, 20, 4, 4}), 1, 3, 3), ShapeError);
  CHECK_NOTHROW(FilterMap(Tensor4({1, 21, 4, 4}), 1, 3, 3));
  CHECK_THROWS_AS(FilterMap(Tensor4({1, 2 * 10, 4, 4}), 2, 2, 2), ContractError);
  CHECK_THROWS_AS(DenseFilterMap(Tensor4({1, 17, 4, 4}), 2, 3), ShapeError);
  const FilterMap m(Tensor4({1, 21, 4, 4}), 1, 3, 3);
  CHECK_THROWS_AS(iac_forward(Tensor4({1, 2, 4, 4}), m, 0.1), ShapeError);
  CHECK_THROWS_AS(iac_forward(Tensor4({1, 3, 4, 5}), m, 0.1), ShapeError);
}

TEST_CASE("decompose and pack round trip") {
  FilterMap m(Tensor4::uniform({2, 2 * 3 * 7, 4, 5}, -1, 1, 3), 2, 3, 3);
  const SeparableFilters f = decompose_filter_map(m, 1, 2, 3, 1);
  CHECK(f.f1.size() == 9);
  CHECK(f.bias.size() == 3);
  CHECK(f.f2[2 * 3 + 1] == m.data.at(1, 21 + 9 + 7, 2, 3));
  CHECK(f.bias[2] == m.data.at(1, 21 + 18 + 2, 2, 3));
  SeparableFilters g = f;
  g.f1[0] = 42.0;
  pack_filter_set(m, 1, 2, 3, 1, g);
  CHECK(decompose_filter_map(m, 1, 2, 3, 1) == g);
  CHECK_THROWS_AS(decompose_filter_map(m, 2, 0, 0, 0), BoundsError);
  CHECK_THROWS_AS(decompose_filter_map(m, 0, 0, 0, 2), BoundsError);
  g.f2.pop_back();
  CHECK_THROWS_AS(pack_filter_set(m, 0, 0, 0, 0, g), ShapeError);
}

TEST_CASE("one IAC pass equals FAC with the outer-product kernel when f1 is row-constant") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const int64_t c = 2, k = 3, h = 7, w = 6;
    const Tensor4 e = Tensor4::uniform({1, c, h, w}, 0, 1, seed);
    Tensor4 fs({1, c * (2 * k + 1), h, w});
    Tensor4 fd({1, c * k * k, h, w});
    const Tensor4 rows = Tensor4::uniform({1, c * k, h, 1}, 0, 1, seed + 50);
    const Tensor4 f2 = Tensor4::uniform({1, c * k, h, w}, 0, 1, seed + 60);
    for (int64_t ch = 0; ch < c; ++ch)
      for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
          for (int64_t i = 0; i < k; ++i) {
            fs.at(0, ch * k + i, y, x) = rows.at(0, ch * k + i, y, 0);
            fs.at(0, c * k + ch * k + i, y, x) = f2.at(0, ch * k + i, y, x);
            for (int64_t j = 0; j < k; ++j)
              fd.at(0, ch * k * k + i * k + j, y, x) = rows.at(0, ch * k + i, y, 0) * f2.at(0, ch * k + j, y, x);
          }
    const Tensor4 a = iac_forward(e, FilterMap(fs, 1, c, k), 0.1);
    const Tensor4 b = fac_forward(e, DenseFilterMap(fd, c, k));
    CHECK(oracle::max_abs_diff(a, b) < 1e-12);
  }
}

TEST_CASE("impulse support grows as N(k-1)+1") {
  for (int64_t sets : {1, 2, 3, 5}) {
    for (int64_t k : {3, 5}) {
      const int64_t side = receptive_field(sets, k) + 6, mid = side / 2;
      Tensor4 e({1, 1, side, side});
      e.at(0, 0, mid, mid) = 1.0;
      Tensor4 f = Tensor4::uniform({1, sets * (2 * k + 1), side, side}, 0.1, 1.0, static_cast<uint64_t>(sets * 10 + k));
      for (int64_t s = 0; s < sets; ++s)
        for (int64_t y = 0; y < side; ++y)
          for (int64_t x = 0; x < side; ++x) f.at(0, s * (2 * k + 1) + 2 * k, y, x) = 0.0;
      const Tensor4 out = iac_forward(e, FilterMap(f, sets, 1, k), 0.1);
      int64_t xmin = side, xmax = -1, ymin = side, ymax = -1;
      for (int64_t y = 0; y < side; ++y)
        for (int64_t x = 0; x < side; ++x)
          if (out.at(0, 0, y, x) != 0.0) {
            xmin = std::min(xmin, x), xmax = std::max(xmax, x);
            ymin = std::min(ymin, y), ymax = std::max(ymax, y);
          }
      CHECK(xmax - xmin + 1 == receptive_field(sets, k));
      CHECK(ymax - ymin + 1 == receptive_field(sets, k));
    }
  }
  CHECK(receptive_field(17, 3) == 35);
  CHECK_THROWS_AS(receptive_field(0, 3), ContractError);
}

TEST_CASE("differentiable forms agree with eager forms and finite differences") {
  const int64_t c = 2, k = 3, sets = 2;
  const Tensor4 e = Tensor4::uniform({1, c, 5, 5}, -1, 1, 1);
  const Tensor4 fs = Tensor4::uniform({1, sets * c * (2 * k + 1), 5, 5}, -0.7, 0.7, 2);
  const Tensor4 fd = Tensor4::uniform({1, c * k * k, 5, 5}, -1, 1, 3);
  const Tensor4 target = Tensor4::uniform({1, c, 5, 5}, -1, 1, 4);

  Tape tape;
  Var ve = tape.leaf(e), vs = tape.leaf(fs), vd = tape.leaf(fd);
  Var yi = iac(ve, vs, sets, k, 0.1);
  Var yf = fac(ve, vd, k);
  CHECK(yi.value() == iac_forward(e, FilterMap(fs, sets, c, k), 0.1));
  CHECK(yf.value() == fac_forward(e, DenseFilterMap(fd, c, k)));
  tape.backward(add(mse(yi, tape.constant(target)), mse(yf, tape.constant(target))));

  auto loss = [&](const Tensor4& ee, const Tensor4& ss, const Tensor4& dd) {
    return mse(iac_forward(ee, FilterMap(ss, sets, c, k), 0.1), target) +
           mse(fac_forward(ee, DenseFilterMap(dd, c, k)), target);
  };
  CHECK(oracle::rel_err(tape.grad(ve), oracle::numeric_grad([&](const Tensor4& x) { return loss(x, fs, fd); }, e)) < 1e-6);
  CHECK(oracle::rel_err(tape.grad(vs), oracle::numeric_grad([&](const Tensor4& x) { return loss(e, x, fd); }, fs)) < 1e-6);
  CHECK(oracle::rel_err(tape.grad(vd), oracle::numeric_grad([&](const Tensor4& x) { return loss(e, fs, x); }, fd)) < 1e-6);
}
