#include "ifan/losses.hpp"

#include <array>
#include <cmath>

#include "ifan/error.hpp"
#include "ifan/ops.hpp"
#include "ifan/warp.hpp"

namespace ifan {

double loss_deblur(const Tensor4& restored, const Tensor4& sharp) { return mse(restored, sharp); }

double loss_disp(const Tensor4& left_down, const Tensor4& right_down, const Tensor4& disparity) {
  return mse(warp_horizontal(right_down, disparity), left_down, kDispLossBorder);
}

double loss_reblur(const Tensor4& reblurred_down, const Tensor4& blurred_down) {
  return mse(reblurred_down, blurred_down);
}

Var loss_deblur(Var restored, Var sharp) { return mse(restored, sharp); }

Var loss_disp(Var left_down, Var right_down, Var disparity) {
  return mse(warp_horizontal(right_down, disparity), left_down, kDispLossBorder);
}

Var loss_reblur(Var reblurred_down, Var blurred_down) { return mse(reblurred_down, blurred_down); }

double psnr(const Tensor4& a, const Tensor4& b, double peak) {
  const double m = mse(a, b);
  if (m == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / m);
}

double mae(const Tensor4& a, const Tensor4& b) {
  require_same_shape(a, b, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.numel());
}

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;

std::array<double, kWin * kWin> gaussian_window() {
  std::array<double, kWin * kWin> win{};
  double total = 0.0;
  for (int i = 0; i < kWin; ++i)
    for (int j = 0; j < kWin; ++j) {
      const double dy = i - kWin / 2, dx = j - kWin / 2;
      win[static_cast<std::size_t>(i * kWin + j)] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
      total += win[static_cast<std::size_t>(i * kWin + j)];
    }
  for (double& v : win) v /= total;
  return win;
}

std::vector<double> grayscale(const Tensor4& t, int64_t b) {
  std::vector<double> g(static_cast<std::size_t>(t.h() * t.w()), 0.0);
  for (int64_t ch = 0; ch < t.c(); ++ch) {
    const double* p = t.plane(b, ch);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += p[i];
  }
  for (double& v : g) v /= static_cast<double>(t.c());
  return g;
}

}  // namespace

double ssim(const Tensor4& a, const Tensor4& b) {
  require_same_shape(a, b, "ssim");
  if (a.h() < kWin || a.w() < kWin) {
    throw ContractError("ssim: image " + std::to_string(a.h()) + "x" + std::to_string(a.w()) +
                        " is smaller than the 11x11 window");
  }
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  static const auto win = gaussian_window();
  const int64_t h = a.h(), w = a.w();
  double total = 0.0;
  for (int64_t b_idx = 0; b_idx < a.n(); ++b_idx) {
    const auto ga = grayscale(a, b_idx);
    const auto gb = grayscale(b, b_idx);
    double acc = 0.0;
    for (int64_t y = 0; y + kWin <= h; ++y)
      for (int64_t x = 0; x + kWin <= w; ++x) {
        double mu_a = 0, mu_b = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < kWin; ++i)
          for (int j = 0; j < kWin; ++j) {
            const double wt = win[static_cast<std::size_t>(i * kWin + j)];
            const double va = ga[static_cast<std::size_t>((y + i) * w + x + j)];
            const double vb = gb[static_cast<std::size_t>((y + i) * w + x + j)];
            mu_a += wt * va;
            mu_b += wt * vb;
            saa += wt * va * va;
            sbb += wt * vb * vb;
            sab += wt * va * vb;
          }
        const double var_a = saa - mu_a * mu_a, var_b = sbb - mu_b * mu_b, cov = sab - mu_a * mu_b;
        acc += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      }
    total += acc / static_cast<double>((h - kWin + 1) * (w - kWin + 1));
  }
  return total / static_cast<double>(a.n());
}

}  // namespace ifan
