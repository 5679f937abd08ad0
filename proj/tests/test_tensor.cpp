#include <doctest.h>

#include <cmath>
#include <limits>

#include "ifan/error.hpp"
#include "ifan/tensor.hpp"

using namespace ifan;

TEST_CASE("shape basics") {
  const Shape s{2, 3, 4, 5};
  CHECK(s.numel() == 120);
  CHECK(s.plane() == 20);
  CHECK(s.str() == "(2,3,4,5)");
  CHECK_THROWS_AS(check_shape(Shape{0, 1, 1, 1}), ShapeError);
  CHECK_THROWS_AS(Tensor4(Shape{1, -1, 2, 2}), ShapeError);
}

TEST_CASE("indexing is row-major NCHW") {
  Tensor4 t(Shape{2, 3, 4, 5});
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<double>(i);
  CHECK(t.at(1, 2, 3, 4) == 119.0);
  CHECK(t.at(1, 0, 0, 0) == 60.0);
  CHECK(t.plane(0, 1)[0] == 20.0);
}

TEST_CASE("random constructors are seeded") {
  const Shape s{1, 2, 3, 4};
  CHECK(Tensor4::normal(s, 0, 1, 5) == Tensor4::normal(s, 0, 1, 5));
  CHECK_FALSE(Tensor4::normal(s, 0, 1, 5) == Tensor4::normal(s, 0, 1, 6));
  const Tensor4 u = Tensor4::uniform(s, -2, 3, 9);
  for (double v : u.values()) {
    CHECK(v >= -2.0);
    CHECK(v < 3.0);
  }
}

TEST_CASE("arithmetic helpers") {
  Tensor4 a(Shape{1, 1, 2, 2}, {1, -2, 3, -4});
  const Tensor4 b(Shape{1, 1, 2, 2}, 1.0);
  CHECK(a.sum() == -2.0);
  CHECK(a.max_abs() == 4.0);
  a.axpy(2.0, b);
  CHECK(a == Tensor4(Shape{1, 1, 2, 2}, {3, 0, 5, -2}));
  a.scale(0.5);
  CHECK(a.at(0, 0, 1, 0) == 2.5);
  CHECK(max_abs_diff(a, b) == 2.0);
  CHECK(a.all_finite());
  a[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(a.all_finite());
  CHECK_THROWS_AS(a.axpy(1.0, Tensor4(Shape{1, 1, 1, 4})), ShapeError);
  CHECK_THROWS_AS(Tensor4(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}
