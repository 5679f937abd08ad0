#include "ifan/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "ifan/adaptive_conv.hpp"
#include "ifan/autodiff.hpp"
#include "ifan/error.hpp"
#include "ifan/kernels/layout.hpp"
#include "ifan/losses.hpp"
#include "ifan/ops.hpp"
#include "ifan/warp.hpp"

namespace ifan {

namespace {

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

struct Case {
  std::vector<Tensor4> inputs;
  Builder build;
};

// Pushes values away from zero so LReLU kinks stay outside the +-h stencil.
Tensor4 off_zero(Shape s, uint64_t seed) {
  Tensor4 t = Tensor4::uniform(s, -1.0, 1.0, seed);
  for (double& v : t.values()) v = v < 0 ? v - 0.05 : v + 0.05;
  return t;
}

// Disparity whose sample positions x+d stay strictly inside the row and off
// integer coordinates.
Tensor4 safe_disparity(Shape s, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> frac(0.1, 0.9);
  Tensor4 d(s);
  for (int64_t b = 0; b < s.n; ++b)
    for (int64_t y = 0; y < s.h; ++y)
      for (int64_t x = 0; x < s.w; ++x) {
        const int64_t base = std::uniform_int_distribution<int64_t>(0, s.w - 2)(rng);
        d.at(b, 0, y, x) = static_cast<double>(base) + frac(rng) - static_cast<double>(x);
      }
  return d;
}

Case make_case(const std::string& op, uint64_t seed) {
  if (op == "conv2d") {
    return {{Tensor4::uniform({2, 3, 6, 7}, -1, 1, seed), Tensor4::uniform({4, 3, 3, 3}, -0.5, 0.5, seed + 1),
             Tensor4::uniform({4, 1, 1, 1}, -0.5, 0.5, seed + 2)},
            [](Tape&, const std::vector<Var>& v) { return conv2d(v[0], v[1], v[2], 1); }};
  }
  if (op == "conv2d_stride2") {
    return {{Tensor4::uniform({1, 2, 8, 6}, -1, 1, seed), Tensor4::uniform({3, 2, 3, 3}, -0.5, 0.5, seed + 1),
             Tensor4::uniform({3, 1, 1, 1}, -0.5, 0.5, seed + 2)},
            [](Tape&, const std::vector<Var>& v) { return conv2d(v[0], v[1], v[2], 2); }};
  }
  if (op == "lrelu") {
    return {{off_zero({2, 3, 5, 5}, seed)}, [](Tape&, const std::vector<Var>& v) { return lrelu(v[0], 0.1); }};
  }
  if (op == "area_downsample") {
    return {{Tensor4::uniform({2, 2, 8, 8}, -1, 1, seed)},
            [](Tape&, const std::vector<Var>& v) { return area_downsample(v[0], 4); }};
  }
  if (op == "upsample_nearest") {
    return {{Tensor4::uniform({1, 2, 3, 4}, -1, 1, seed)},
            [](Tape&, const std::vector<Var>& v) { return upsample_nearest(v[0], 2); }};
  }
  if (op == "fac") {
    const int64_t c = 3, k = 3;
    return {{Tensor4::uniform({2, c, 5, 6}, -1, 1, seed), Tensor4::uniform({2, c * k * k, 5, 6}, -0.5, 0.5, seed + 1)},
            [](Tape&, const std::vector<Var>& v) { return fac(v[0], v[1], 3); }};
  }
  if (op == "iac") {
    const int64_t c = 2, sets = 2, k = 3;
    const kernels::SeparableLayout l{sets, c, k};
    // A bias offset keeps most pre-activations away from zero; the check
    // below re-draws the rare stragglers.
    Tensor4 f = Tensor4::uniform({1, l.total_channels(), 6, 6}, -0.6, 0.6, seed + 1);
    return {{Tensor4::uniform({1, c, 6, 6}, -1, 1, seed), f},
            [](Tape&, const std::vector<Var>& v) { return iac(v[0], v[1], 2, 3, 0.1); }};
  }
  if (op == "warp_horizontal") {
    return {{Tensor4::uniform({1, 3, 4, 9}, -1, 1, seed), safe_disparity({1, 1, 4, 9}, seed + 1)},
            [](Tape&, const std::vector<Var>& v) { return warp_horizontal(v[0], v[1]); }};
  }
  if (op == "loss_deblur") {
    return {{Tensor4::uniform({2, 3, 5, 5}, 0, 1, seed), Tensor4::uniform({2, 3, 5, 5}, 0, 1, seed + 1)},
            [](Tape&, const std::vector<Var>& v) { return loss_deblur(v[0], v[1]); }};
  }
  if (op == "loss_disp") {
    return {{Tensor4::uniform({1, 3, 7, 9}, 0, 1, seed), Tensor4::uniform({1, 3, 7, 9}, 0, 1, seed + 1),
             safe_disparity({1, 1, 7, 9}, seed + 2)},
            [](Tape&, const std::vector<Var>& v) { return loss_disp(v[0], v[1], v[2]); }};
  }
  if (op == "loss_reblur") {
    return {{Tensor4::uniform({2, 3, 4, 4}, 0, 1, seed), Tensor4::uniform({2, 3, 4, 4}, 0, 1, seed + 1)},
            [](Tape&, const std::vector<Var>& v) { return loss_reblur(v[0], v[1]); }};
  }
  throw ContractError("gradcheck: unknown op '" + op + "'");
}

bool is_loss(const std::string& op) { return op.rfind("loss_", 0) == 0; }

double evaluate(const Case& c, const std::vector<Tensor4>& inputs, const Tensor4* target) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  Var out = c.build(tape, vars);
  if (target) out = mse(out, tape.constant(*target));
  return out.value()[0];
}

bool near_kink(const std::string& op, const Case& c, double h) {
  if (op != "iac") return false;
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : c.inputs) vars.push_back(tape.constant(t));
  // Linear slope: the output then equals the pre-activation.
  const Tensor4 pre = iac(vars[0], vars[1], 2, 3, 1.0).value();
  for (double v : pre.values())
    if (std::abs(v) < 1e3 * h) return true;
  return false;
}

}  // namespace

const std::vector<std::string>& gradcheck_ops() {
  static const std::vector<std::string> ops = {"conv2d",        "conv2d_stride2", "lrelu",
                                               "area_downsample", "upsample_nearest", "fac",
                                               "iac",           "warp_horizontal", "loss_deblur",
                                               "loss_disp",     "loss_reblur"};
  return ops;
}

GradcheckResult finite_diff_check(const std::string& op, uint64_t seed, double h, double tol) {
  Case c = make_case(op, seed);
  for (uint64_t retry = 1; near_kink(op, c, h); ++retry) {
    if (retry > 64) throw NumericError("gradcheck: could not draw kink-free inputs for " + op);
    c = make_case(op, seed + 1000 * retry);
  }

  std::optional<Tensor4> target;
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : c.inputs) vars.push_back(tape.leaf(t));
  Var out = c.build(tape, vars);
  if (!is_loss(op)) {
    target = Tensor4::normal(out.shape(), 0.0, 1.0, seed + 99);
    out = mse(out, tape.constant(*target));
  }
  tape.backward(out);

  GradcheckResult res{op, 0.0, 0, true};
  std::vector<Tensor4> inputs = c.inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor4 analytic = tape.grad(vars[i]);
    Tensor4 numeric(inputs[i].shape());
    for (std::size_t j = 0; j < inputs[i].numel(); ++j) {
      const double saved = inputs[i].data()[j];
      inputs[i].data()[j] = saved + h;
      const double fp = evaluate(c, inputs, target ? &*target : nullptr);
      inputs[i].data()[j] = saved - h;
      const double fm = evaluate(c, inputs, target ? &*target : nullptr);
      inputs[i].data()[j] = saved;
      numeric.data()[j] = (fp - fm) / (2.0 * h);
    }
    const double denom = std::max({analytic.max_abs(), numeric.max_abs(), 1e-8});
    res.max_rel_error = std::max(res.max_rel_error, max_abs_diff(analytic, numeric) / denom);
    res.entries += static_cast<int64_t>(numeric.numel());
  }
  res.passed = res.max_rel_error < tol;
  return res;
}

std::vector<GradcheckResult> gradcheck_suite(uint64_t seed) {
  std::vector<GradcheckResult> out;
  for (const auto& op : gradcheck_ops()) out.push_back(finite_diff_check(op, seed));
  return out;
}

}  // namespace ifan
