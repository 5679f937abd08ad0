#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ifan/tensor.hpp"

namespace ifan::synth {

// Half-disc centroid separation per unit blur radius: 2 * 4r/(3 pi) / r.
inline constexpr double kDisparityPerRadius = 8.0 / (3.0 * std::numbers::pi);

struct Sample {
  Tensor4 sharp;    // I_S, (1,3,H,W)
  Tensor4 blurred;  // I_B
  std::optional<Tensor4> left;   // I_B^l
  std::optional<Tensor4> right;  // I_B^r
  std::optional<Tensor4> radius;     // signed blur radius, (1,1,H,W)
  std::optional<Tensor4> disparity;  // d_gt, (1,1,H/s,W/s)
  std::string name;
};

// Odd-sized square kernel centered at (radius, radius), normalized to sum 1.
struct Psf {
  int64_t radius = 0;
  std::vector<double> weights;

  int64_t size() const { return 2 * radius + 1; }
  double at(int64_t dy, int64_t dx) const {
    return weights[static_cast<std::size_t>((dy + radius) * size() + dx + radius)];
  }
  double sum() const;
  double centroid_x() const;
};

enum class Side { left, right };

Tensor4 gen_sharp(uint64_t seed, int64_t height, int64_t width);
Tensor4 gen_radius_map(uint64_t seed, int64_t height, int64_t width, double r_max);

Psf disc_psf(double r);
// Keeps the x<0 (left) or x>0 (right) half of the disc plus half of the center column.
Psf half_disc_psf(double r, Side side);

// Gather rendering: out(p) = sum_q psf_{r(p)}(q) * sharp(p + q), border samples replicate.
Tensor4 render_defocus(const Tensor4& sharp, const Tensor4& radius);
// Left view uses the x>0 half-disc where r > 0 and the x<0 half where r < 0;
// the right view mirrors it. The resulting right->left disparity is
// kDisparityPerRadius * r (positive d samples to the right).
std::pair<Tensor4, Tensor4> render_dual_pixel(const Tensor4& sharp, const Tensor4& radius);

// area_downsample(kDisparityPerRadius * r, s) / s, in pixels of the 1/s grid.
Tensor4 derive_gt_disparity(const Tensor4& radius, int64_t s);

struct SynthConfig {
  int64_t height = 64;
  int64_t width = 64;
  double r_max = 6.0;
  int64_t downsample = 8;
};

Sample make_sample(uint64_t seed, const SynthConfig& cfg);

// DPDD-style layout: source/ and target/ (plus optional left/ and right/) of
// same-named 8-bit PNGs, iterated in lexicographic order.
class PairedDataset {
 public:
  explicit PairedDataset(const std::filesystem::path& root);
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  bool has_dual_pixel() const { return dual_pixel_; }
  Sample load(std::size_t i) const;

 private:
  std::filesystem::path root_;
  std::vector<std::string> names_;
  bool dual_pixel_ = false;
};

}  // namespace ifan::synth
