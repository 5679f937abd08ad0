#include "ifan/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

#include "ifan/error.hpp"
#include "ifan/io.hpp"
#include "ifan/ops.hpp"

namespace ifan::synth {

namespace fs = std::filesystem;

double Psf::sum() const {
  double s = 0.0;
  for (double v : weights) s += v;
  return s;
}

double Psf::centroid_x() const {
  double s = 0.0, m = 0.0;
  for (int64_t dy = -radius; dy <= radius; ++dy)
    for (int64_t dx = -radius; dx <= radius; ++dx) {
      s += at(dy, dx) * static_cast<double>(dx);
      m += at(dy, dx);
    }
  return s / m;
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int64_t uniform_int(Rng& rng, int64_t lo, int64_t hi) { return std::uniform_int_distribution<int64_t>(lo, hi)(rng); }

struct Color {
  std::array<double, 3> v;
};

Color random_color(Rng& rng) { return {{uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)}}; }

struct Point {
  double x, y;
};

// Convex polygon: vertices at sorted random angles around a center.
std::vector<Point> random_convex(Rng& rng, double cx, double cy, double radius) {
  const int64_t count = uniform_int(rng, 3, 6);
  std::vector<double> angles;
  for (int64_t i = 0; i < count; ++i) angles.push_back(uniform(rng, 0.0, 2.0 * std::numbers::pi));
  std::sort(angles.begin(), angles.end());
  std::vector<Point> poly;
  for (double a : angles) {
    const double r = radius * uniform(rng, 0.6, 1.0);
    poly.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
  }
  return poly;
}

bool inside_convex(const std::vector<Point>& poly, double x, double y) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    if ((b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x) < 0.0) return false;
  }
  return true;
}

// 4x4 supersampled coverage of pixel (x, y) by a predicate.
template <class Pred>
double coverage(int64_t x, int64_t y, Pred&& pred) {
  int hits = 0;
  for (int sy = 0; sy < 4; ++sy)
    for (int sx = 0; sx < 4; ++sx)
      if (pred(static_cast<double>(x) + (sx + 0.5) / 4.0, static_cast<double>(y) + (sy + 0.5) / 4.0)) ++hits;
  return hits / 16.0;
}

void blend(Tensor4& img, int64_t x, int64_t y, const Color& c, double alpha) {
  if (alpha <= 0.0) return;
  for (int64_t ch = 0; ch < 3; ++ch) {
    double& v = img.at(0, ch, y, x);
    v = (1.0 - alpha) * v + alpha * c.v[static_cast<std::size_t>(ch)];
  }
}

double ramp(double x, double y, double ax, double ay, double lo, double hi, int64_t h, int64_t w) {
  // Project onto a unit direction and map the image extent to [lo, hi].
  const double extent = std::abs(ax) * static_cast<double>(w) + std::abs(ay) * static_cast<double>(h);
  const double t0 = std::min(0.0, ax * static_cast<double>(w)) + std::min(0.0, ay * static_cast<double>(h));
  const double t = extent > 0.0 ? (ax * x + ay * y - t0) / extent : 0.5;
  return lo + (hi - lo) * t;
}

Psf delta_psf() { return Psf{0, {1.0}}; }

// Unnormalized disc: pixel weight = clamp(r + 0.5 - |q|, 0, 1).
Psf raw_disc(double r) {
  Psf k;
  k.radius = static_cast<int64_t>(std::ceil(r));
  k.weights.assign(static_cast<std::size_t>(k.size() * k.size()), 0.0);
  for (int64_t dy = -k.radius; dy <= k.radius; ++dy)
    for (int64_t dx = -k.radius; dx <= k.radius; ++dx) {
      const double dist = std::sqrt(static_cast<double>(dx * dx + dy * dy));
      k.weights[static_cast<std::size_t>((dy + k.radius) * k.size() + dx + k.radius)] =
          std::clamp(r + 0.5 - dist, 0.0, 1.0);
    }
  return k;
}

void normalize(Psf& k) {
  const double s = k.sum();
  for (double& v : k.weights) v /= s;
}

Tensor4 render_with(const Tensor4& sharp, const Tensor4& radius, int view) {
  if (radius.n() != 1 || radius.c() != 1 || radius.h() != sharp.h() || radius.w() != sharp.w() || sharp.n() != 1) {
    throw ShapeError("render: radius map " + radius.shape().str() + " does not match image " + sharp.shape().str());
  }
  const int64_t h = sharp.h(), w = sharp.w();
  Tensor4 out(sharp.shape());
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      const double r = radius.at(0, 0, y, x);
      Psf k;
      if (view == 0) {
        k = disc_psf(std::abs(r));
      } else {
        // view 1 = left, view 2 = right
        const bool positive = r >= 0.0;
        const Side side = (view == 1) == positive ? Side::right : Side::left;
        k = half_disc_psf(std::abs(r), side);
      }
      for (int64_t ch = 0; ch < sharp.c(); ++ch) {
        const double* src = sharp.plane(0, ch);
        double acc = 0.0;
        for (int64_t dy = -k.radius; dy <= k.radius; ++dy) {
          const int64_t sy = std::clamp<int64_t>(y + dy, 0, h - 1);
          for (int64_t dx = -k.radius; dx <= k.radius; ++dx) {
            const double wt = k.at(dy, dx);
            if (wt == 0.0) continue;
            const int64_t sx = std::clamp<int64_t>(x + dx, 0, w - 1);
            acc += wt * src[sy * w + sx];
          }
        }
        out.at(0, ch, y, x) = acc;
      }
    }
  return out;
}

}  // namespace

Tensor4 gen_sharp(uint64_t seed, int64_t height, int64_t width) {
  if (height < 32 || width < 32) throw ContractError("gen_sharp requires H, W >= 32");
  Rng rng(seed);
  Tensor4 img(Shape{1, 3, height, width});
  const double h = static_cast<double>(height), w = static_cast<double>(width);

  // Background: per-channel linear gradient.
  const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const Color c0 = random_color(rng), c1 = random_color(rng);
  for (int64_t y = 0; y < height; ++y)
    for (int64_t x = 0; x < width; ++x)
      for (int64_t ch = 0; ch < 3; ++ch) {
        const std::size_t i = static_cast<std::size_t>(ch);
        img.at(0, ch, y, x) = ramp(x + 0.5, y + 0.5, std::cos(angle), std::sin(angle), c0.v[i], c1.v[i], height, width);
      }

  // One or two rotated checkerboard patches.
  const int64_t boards = uniform_int(rng, 1, 2);
  for (int64_t b = 0; b < boards; ++b) {
    const double period = uniform(rng, 4.0, 12.0);
    const double rot = uniform(rng, 0.0, std::numbers::pi);
    const double x0 = uniform(rng, 0.0, 0.6 * w), y0 = uniform(rng, 0.0, 0.6 * h);
    const double x1 = x0 + uniform(rng, 0.3 * w, 0.6 * w), y1 = y0 + uniform(rng, 0.3 * h, 0.6 * h);
    const Color ca = random_color(rng), cb = random_color(rng);
    const double cr = std::cos(rot), sr = std::sin(rot);
    for (int64_t y = 0; y < height; ++y)
      for (int64_t x = 0; x < width; ++x) {
        const double in_rect = coverage(x, y, [&](double px, double py) {
          return px >= x0 && px < x1 && py >= y0 && py < y1;
        });
        if (in_rect == 0.0) continue;
        const double a = coverage(x, y, [&](double px, double py) {
          if (!(px >= x0 && px < x1 && py >= y0 && py < y1)) return false;
          const double u = cr * px + sr * py, v = -sr * px + cr * py;
          return ((static_cast<int64_t>(std::floor(u / period)) + static_cast<int64_t>(std::floor(v / period))) & 1) == 0;
        });
        blend(img, x, y, cb, in_rect);
        blend(img, x, y, ca, in_rect > 0.0 ? a / in_rect : 0.0);
      }
  }

  // Anti-aliased convex polygons.
  const int64_t polys = uniform_int(rng, 3, 6);
  for (int64_t p = 0; p < polys; ++p) {
    const auto poly = random_convex(rng, uniform(rng, 0.0, w), uniform(rng, 0.0, h), uniform(rng, 0.1, 0.35) * std::min(h, w));
    const Color c = random_color(rng);
    for (int64_t y = 0; y < height; ++y)
      for (int64_t x = 0; x < width; ++x)
        blend(img, x, y, c, coverage(x, y, [&](double px, double py) { return inside_convex(poly, px, py); }));
  }
  for (double& v : img.values()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

Tensor4 gen_radius_map(uint64_t seed, int64_t height, int64_t width, double r_max) {
  if (!(r_max >= 0.0)) throw ContractError("r_max must be >= 0");
  Tensor4 map(Shape{1, 1, height, width});
  if (r_max == 0.0) return map;
  Rng rng(seed);
  const double h = static_cast<double>(height), w = static_cast<double>(width);
  const int64_t layers = uniform_int(rng, 2, 4);
  for (int64_t layer = 0; layer < layers; ++layer) {
    const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double base = uniform(rng, -r_max, r_max);
    const double lo = std::clamp(base - uniform(rng, 0.0, 0.3 * r_max), -r_max, r_max);
    const double hi = std::clamp(base + uniform(rng, 0.0, 0.3 * r_max), -r_max, r_max);
    // Layer 0 covers the frame; the rest are ellipses composited on top.
    const double cx = uniform(rng, 0.0, w), cy = uniform(rng, 0.0, h);
    const double ax = uniform(rng, 0.2, 0.5) * w, ay = uniform(rng, 0.2, 0.5) * h;
    for (int64_t y = 0; y < height; ++y)
      for (int64_t x = 0; x < width; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        if (layer > 0) {
          const double u = (px - cx) / ax, v = (py - cy) / ay;
          if (u * u + v * v > 1.0) continue;
        }
        map.at(0, 0, y, x) = ramp(px, py, std::cos(angle), std::sin(angle), lo, hi, height, width);
      }
  }
  return map;
}

Psf disc_psf(double r) {
  if (!(r >= 0.0)) throw ContractError("disc_psf requires r >= 0");
  if (r < 0.5) return delta_psf();
  Psf k = raw_disc(r);
  normalize(k);
  return k;
}

Psf half_disc_psf(double r, Side side) {
  if (!(r >= 0.0)) throw ContractError("half_disc_psf requires r >= 0");
  if (r < 0.5) return delta_psf();
  Psf k = raw_disc(r);
  for (int64_t dy = -k.radius; dy <= k.radius; ++dy)
    for (int64_t dx = -k.radius; dx <= k.radius; ++dx) {
      double& v = k.weights[static_cast<std::size_t>((dy + k.radius) * k.size() + dx + k.radius)];
      if (dx == 0) {
        v *= 0.5;
      } else if ((side == Side::left) != (dx < 0)) {
        v = 0.0;
      }
    }
  normalize(k);
  return k;
}

Tensor4 render_defocus(const Tensor4& sharp, const Tensor4& radius) { return render_with(sharp, radius, 0); }

std::pair<Tensor4, Tensor4> render_dual_pixel(const Tensor4& sharp, const Tensor4& radius) {
  return {render_with(sharp, radius, 1), render_with(sharp, radius, 2)};
}

Tensor4 derive_gt_disparity(const Tensor4& radius, int64_t s) {
  Tensor4 scaled = radius;
  scaled.scale(kDisparityPerRadius);
  Tensor4 d = area_downsample(scaled, static_cast<int>(s));
  d.scale(1.0 / static_cast<double>(s));
  return d;
}

Sample make_sample(uint64_t seed, const SynthConfig& cfg) {
  Rng rng(seed);
  const uint64_t image_seed = rng(), radius_seed = rng();
  Sample s;
  s.sharp = gen_sharp(image_seed, cfg.height, cfg.width);
  s.radius = gen_radius_map(radius_seed, cfg.height, cfg.width, cfg.r_max);
  auto [left, right] = render_dual_pixel(s.sharp, *s.radius);
  s.blurred = left;
  s.blurred.axpy(1.0, right);
  s.blurred.scale(0.5);
  s.left = std::move(left);
  s.right = std::move(right);
  s.disparity = derive_gt_disparity(*s.radius, cfg.downsample);
  s.name = "synth_" + std::to_string(seed);
  return s;
}

namespace {

std::set<std::string> png_names(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") names.insert(entry.path().filename().string());
  }
  return names;
}

}  // namespace

PairedDataset::PairedDataset(const fs::path& root) : root_(root) {
  const fs::path source = root / "source", target = root / "target";
  if (!fs::is_directory(source)) throw IoError(source.string() + ": missing directory");
  if (!fs::is_directory(target)) throw IoError(target.string() + ": missing directory");
  const auto src = png_names(source);
  const auto tgt = png_names(target);
  std::vector<std::string> missing;
  for (const auto& n : src)
    if (!tgt.contains(n)) missing.push_back("target/" + n);
  for (const auto& n : tgt)
    if (!src.contains(n)) missing.push_back("source/" + n);

  dual_pixel_ = fs::is_directory(root / "left") && fs::is_directory(root / "right");
  if (dual_pixel_) {
    const auto l = png_names(root / "left");
    const auto r = png_names(root / "right");
    for (const auto& n : src) {
      if (!l.contains(n)) missing.push_back("left/" + n);
      if (!r.contains(n)) missing.push_back("right/" + n);
    }
  }
  if (!missing.empty()) {
    std::string msg = root.string() + ": unmatched files:";
    for (const auto& m : missing) msg += " " + m;
    throw ManifestError(msg);
  }
  names_.assign(src.begin(), src.end());
}

Sample PairedDataset::load(std::size_t i) const {
  if (i >= names_.size()) throw BoundsError("dataset index out of range");
  const std::string& n = names_[i];
  Sample s;
  s.name = n;
  s.blurred = io::read_png(root_ / "source" / n);
  s.sharp = io::read_png(root_ / "target" / n);
  require_same_shape(s.blurred, s.sharp, ("pair " + n).c_str());
  if (dual_pixel_) {
    s.left = io::read_png(root_ / "left" / n);
    s.right = io::read_png(root_ / "right" / n);
  }
  // Optional maps written by the synth command.
  const std::string stem = fs::path(n).stem().string() + ".pfm";
  if (fs::exists(root_ / "radius" / stem)) s.radius = io::read_pfm(root_ / "radius" / stem);
  if (fs::exists(root_ / "disparity" / stem)) s.disparity = io::read_pfm(root_ / "disparity" / stem);
  return s;
}

}  // namespace ifan::synth
