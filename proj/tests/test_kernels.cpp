#include <doctest.h>

#include <random>

#include "ifan/kernels/layout.hpp"
#include "ifan/kernels/parallel.hpp"
#include "ifan/kernels/reference.hpp"
#include "oracles.hpp"

using namespace ifan;
namespace ref = ifan::kernels::reference;

namespace {

struct Config {
  int64_t n, c, h, w, sets, k;
};

std::vector<Config> random_configs(int count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int64_t lo, int64_t hi) { return std::uniform_int_distribution<int64_t>(lo, hi)(rng); };
  std::vector<Config> out;
  for (int i = 0; i < count; ++i) out.push_back({pick(1, 2), pick(1, 4), pick(1, 8), pick(1, 8), pick(1, 4), 2 * pick(0, 3) + 1});
  return out;
}

}  // namespace

TEST_CASE("reference kernels match brute-force loops") {
  int idx = 0;
  for (const auto& cf : random_configs(30, 11)) {
    CAPTURE(idx++);
    const Tensor4 e = Tensor4::uniform({cf.n, cf.c, cf.h, cf.w}, -1, 1, 100 + idx);
    const Tensor4 fd = Tensor4::uniform({cf.n, cf.c * cf.k * cf.k, cf.h, cf.w}, -1, 1, 200 + idx);
    const Tensor4 fs = Tensor4::uniform({cf.n, cf.sets * cf.c * (2 * cf.k + 1), cf.h, cf.w}, -1, 1, 300 + idx);
    CHECK(oracle::max_abs_diff(ref::fac_forward(e, fd, cf.k), oracle::fac(e, fd, cf.k)) < 1e-12);
    CHECK(oracle::max_abs_diff(ref::iac_forward(e, fs, cf.sets, cf.k, 0.1), oracle::iac(e, fs, cf.sets, cf.k, 0.1)) < 1e-12);
  }
}

TEST_CASE("parallel kernels equal the serial reference bit for bit") {
  int idx = 0;
  for (const auto& cf : random_configs(20, 12)) {
    CAPTURE(idx++);
    const Tensor4 e = Tensor4::uniform({cf.n, cf.c, cf.h, cf.w}, -1, 1, 400 + idx);
    const Tensor4 fd = Tensor4::uniform({cf.n, cf.c * cf.k * cf.k, cf.h, cf.w}, -1, 1, 500 + idx);
    const Tensor4 fs = Tensor4::uniform({cf.n, cf.sets * cf.c * (2 * cf.k + 1), cf.h, cf.w}, -1, 1, 600 + idx);
    CHECK(kernels::fac_forward(e, fd, cf.k) == ref::fac_forward(e, fd, cf.k));
    CHECK(kernels::iac_forward(e, fs, cf.sets, cf.k, 0.2, nullptr) == ref::iac_forward(e, fs, cf.sets, cf.k, 0.2));
    const int64_t co = cf.c + 1;
    const Tensor4 wt = Tensor4::uniform({co, cf.c, cf.k, cf.k}, -1, 1, 700 + idx);
    const Tensor4 b = Tensor4::uniform({co, 1, 1, 1}, -1, 1, 800 + idx);
    for (int stride : {1, 2}) {
      const Tensor4 p = kernels::conv2d_forward(e, wt, b, stride);
      CHECK(p == ref::conv2d_forward(e, wt, b, stride));
      CHECK(oracle::max_abs_diff(p, oracle::conv2d(e, wt, b, stride)) < 1e-12);
    }
  }
}

TEST_CASE("thread count does not change results") {
  const Tensor4 e = Tensor4::uniform({2, 3, 9, 7}, -1, 1, 1);
  const Tensor4 fs = Tensor4::uniform({2, 2 * 3 * 7, 9, 7}, -1, 1, 2);
  const int saved = kernels::max_threads();
  kernels::set_num_threads(1);
  const Tensor4 one = kernels::iac_forward(e, fs, 2, 3, 0.1, nullptr);
  kernels::set_num_threads(4);
  const Tensor4 four = kernels::iac_forward(e, fs, 2, 3, 0.1, nullptr);
  kernels::set_num_threads(saved);
  CHECK(one == four);
}

TEST_CASE("instrumented reference counts every tap multiply") {
  for (const auto& cf : random_configs(10, 13)) {
    const Tensor4 e = Tensor4::uniform({1, cf.c, cf.h, cf.w}, -1, 1, 1);
    kernels::MulCounter fc, ic;
    ref::fac_forward(e, Tensor4({1, cf.c * cf.k * cf.k, cf.h, cf.w}, 0.5), cf.k, fc);
    ref::iac_forward(e, Tensor4({1, cf.sets * cf.c * (2 * cf.k + 1), cf.h, cf.w}, 0.5), cf.sets, cf.k, 0.1, ic);
    CHECK(fc.count == static_cast<uint64_t>(cf.h * cf.w * cf.c * cf.k * cf.k));
    CHECK(ic.count == static_cast<uint64_t>(cf.h * cf.w * cf.c * cf.sets * 2 * cf.k));
  }
}

TEST_CASE("layout arithmetic") {
  const kernels::SeparableLayout l{3, 4, 5};
  CHECK(l.total_channels() == 3 * 4 * 11);
  CHECK(l.f1(1, 2, 3) == 44 + 2 * 5 + 3);
  CHECK(l.f2(1, 2, 3) == 44 + 20 + 2 * 5 + 3);
  CHECK(l.bias(1, 2) == 44 + 40 + 2);
  CHECK(kernels::DenseLayout{2, 3}.tap(1, 2, 0) == 9 + 6);
  CHECK_THROWS(kernels::require_odd_taps(4));
}
