#include <doctest.h>

#include <cmath>

#include "ifan/error.hpp"
#include "ifan/ops.hpp"
#include "ifan/synth.hpp"
#include "oracles.hpp"

using namespace ifan;
using namespace ifan::synth;

namespace {

double centroid_x(const Tensor4& img) {
  double s = 0, sx = 0;
  for (int64_t y = 0; y < img.h(); ++y)
    for (int64_t x = 0; x < img.w(); ++x) {
      s += img.at(0, 0, y, x);
      sx += img.at(0, 0, y, x) * static_cast<double>(x);
    }
  return sx / s;
}

}  // namespace

TEST_CASE("disc PSFs") {
  for (double r : {0.0, 0.3, 1.0, 2.5, 7.0}) {
    CAPTURE(r);
    const Psf d = disc_psf(r);
    CHECK(d.sum() == doctest::Approx(1.0));
    CHECK(d.centroid_x() == doctest::Approx(0.0).epsilon(1e-12));
    for (Side s : {Side::left, Side::right}) CHECK(half_disc_psf(r, s).sum() == doctest::Approx(1.0));
  }
  const Psf delta = disc_psf(0.4);
  CHECK(delta.radius == 0);
  CHECK(delta.at(0, 0) == 1.0);
  CHECK(half_disc_psf(4.0, Side::left).centroid_x() < 0);
  CHECK(half_disc_psf(4.0, Side::right).centroid_x() > 0);
  CHECK(half_disc_psf(4.0, Side::left).centroid_x() == doctest::Approx(-half_disc_psf(4.0, Side::right).centroid_x()));
  CHECK_THROWS_AS(disc_psf(-1.0), ContractError);
}

TEST_CASE("constant-radius rendering is a convolution with the disc") {
  const Tensor4 sharp = Tensor4::uniform({1, 3, 20, 20}, 0, 1, 1);
  const double r = 2.3;
  const Tensor4 out = render_defocus(sharp, Tensor4({1, 1, 20, 20}, r));
  const Psf k = disc_psf(r);
  for (int64_t y = k.radius; y < 20 - k.radius; ++y)
    for (int64_t x = k.radius; x < 20 - k.radius; ++x) {
      double acc = 0;
      for (int64_t dy = -k.radius; dy <= k.radius; ++dy)
        for (int64_t dx = -k.radius; dx <= k.radius; ++dx) acc += k.at(dy, dx) * sharp.at(0, 1, y + dy, x + dx);
      CHECK(out.at(0, 1, y, x) == doctest::Approx(acc).epsilon(1e-12));
    }
  CHECK(render_defocus(sharp, Tensor4({1, 1, 20, 20})) == sharp);
}

TEST_CASE("dual-pixel views average to the blurred image and split by disparity") {
  const Tensor4 sharp = Tensor4::uniform({1, 3, 24, 24}, 0, 1, 2);
  const Tensor4 radius = gen_radius_map(3, 24, 24, 5.0);
  auto [l, r] = render_dual_pixel(sharp, radius);
  Tensor4 avg = l;
  avg.axpy(1.0, r);
  avg.scale(0.5);
  CHECK(oracle::max_abs_diff(avg, render_defocus(sharp, radius)) < 1e-12);

  // A point source in front of the focal plane lands left of center in the left view.
  Tensor4 point({1, 1, 31, 31});
  point.at(0, 0, 15, 15) = 1.0;
  auto [pl, pr] = render_dual_pixel(point, Tensor4({1, 1, 31, 31}, 6.0));
  CHECK(centroid_x(pl) < 15.0);
  CHECK(centroid_x(pr) > 15.0);
  // Right view warped by d = gamma * r reproduces the left view's centroid.
  CHECK(centroid_x(pr) - centroid_x(pl) == doctest::Approx(kDisparityPerRadius * 6.0).epsilon(0.1));
  auto [nl, nr] = render_dual_pixel(point, Tensor4({1, 1, 31, 31}, -6.0));
  CHECK(centroid_x(nr) - centroid_x(nl) == doctest::Approx(-(centroid_x(pr) - centroid_x(pl))));
}

TEST_CASE("ground-truth disparity") {
  const Tensor4 radius({1, 1, 16, 16}, 4.0);
  const Tensor4 d = derive_gt_disparity(radius, 8);
  CHECK(d.shape() == Shape{1, 1, 2, 2});
  CHECK(d[0] == doctest::Approx(kDisparityPerRadius * 4.0 / 8.0));
  CHECK(kDisparityPerRadius == doctest::Approx(8.0 / (3.0 * M_PI)));
}

TEST_CASE("generated samples") {
  const SynthConfig cfg{32, 40, 4.0, 8};
  const Sample a = make_sample(7, cfg), b = make_sample(7, cfg), c = make_sample(8, cfg);
  CHECK(a.sharp == b.sharp);
  CHECK(a.blurred == b.blurred);
  CHECK_FALSE(a.sharp == c.sharp);
  CHECK(a.sharp.shape() == Shape{1, 3, 32, 40});
  REQUIRE(a.left);
  REQUIRE(a.radius);
  REQUIRE(a.disparity);
  CHECK(a.disparity->shape() == Shape{1, 1, 4, 5});
  CHECK(a.radius->max_abs() <= 4.0);
  for (double v : a.sharp.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(make_sample(1, SynthConfig{30, 32, 4.0, 8}), ContractError);
}
