#include <doctest.h>

#include "ifan/autodiff.hpp"
#include "ifan/error.hpp"
#include "ifan/ops.hpp"
#include "oracles.hpp"

using namespace ifan;

TEST_CASE("gradient of a shared subexpression accumulates") {
  Tape tape;
  Var x = tape.leaf(Tensor4(Shape{1, 1, 1, 3}, {1, 2, 3}));
  Var y = add(x, scale(x, 3.0));  // 4x
  Var loss = mse(y, tape.constant(Tensor4(Shape{1, 1, 1, 3})));
  tape.backward(loss);
  // d/dx mean((4x)^2) = 32x/3
  const Tensor4 g = tape.grad(x);
  for (int i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(32.0 * (i + 1) / 3.0));
}

TEST_CASE("constants get no gradient and unreached leaves get zeros") {
  Tape tape;
  Var c = tape.constant(Tensor4(Shape{1, 1, 1, 2}, 1.0));
  Var x = tape.leaf(Tensor4(Shape{1, 1, 1, 2}, 2.0));
  Var unused = tape.leaf(Tensor4(Shape{1, 1, 2, 2}, 5.0));
  CHECK_FALSE(tape.requires_grad(c));
  CHECK(tape.requires_grad(x));
  tape.backward(mse(x, c));
  CHECK(tape.grad(x) == Tensor4(Shape{1, 1, 1, 2}, 1.0));
  CHECK(tape.grad(unused) == Tensor4(Shape{1, 1, 2, 2}));
  CHECK(tape.grad(c) == Tensor4(Shape{1, 1, 1, 2}));
}

TEST_CASE("backward contract") {
  Tape tape;
  Var x = tape.leaf(Tensor4(Shape{1, 1, 1, 2}, 1.0));
  CHECK_THROWS_AS(tape.backward(x), ContractError);
  Var l = mse(x, tape.constant(Tensor4(Shape{1, 1, 1, 2})));
  tape.backward(l);
  CHECK_THROWS_AS(tape.backward(l), ContractError);
}

TEST_CASE("concat_channels routes gradients to both inputs") {
  Tape tape;
  const Tensor4 av = Tensor4::uniform(Shape{2, 2, 3, 3}, -1, 1, 1);
  const Tensor4 bv = Tensor4::uniform(Shape{2, 1, 3, 3}, -1, 1, 2);
  const Tensor4 target = Tensor4::uniform(Shape{2, 3, 3, 3}, -1, 1, 3);
  Var a = tape.leaf(av), b = tape.leaf(bv);
  Var cat = concat_channels(a, b);
  CHECK(cat.value().at(1, 2, 2, 1) == bv.at(1, 0, 2, 1));
  CHECK(cat.value().at(1, 1, 0, 2) == av.at(1, 1, 0, 2));
  tape.backward(mse(cat, tape.constant(target)));
  auto f_a = [&](const Tensor4& x) {
    Tape t;
    return mse(concat_channels(t.constant(x), t.constant(bv)), t.constant(target)).value()[0];
  };
  auto f_b = [&](const Tensor4& x) {
    Tape t;
    return mse(concat_channels(t.constant(av), t.constant(x)), t.constant(target)).value()[0];
  };
  CHECK(oracle::rel_err(tape.grad(a), oracle::numeric_grad(f_a, av)) < 1e-8);
  CHECK(oracle::rel_err(tape.grad(b), oracle::numeric_grad(f_b, bv)) < 1e-8);
}
