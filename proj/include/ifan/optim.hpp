#pragma once

#include <cstdint>
#include <vector>

#include "ifan/net.hpp"
#include "ifan/tensor.hpp"

namespace ifan {

struct RAdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double weight_decay = 0.01;  // decoupled: p -= lr * wd * p
  double eps = 1e-8;
};

// Rectified Adam. While the variance-rectification length rho_t is <= 4 the
// update is momentum-only; afterwards the adaptive step is scaled by r_t.
class RAdam {
 public:
  RAdam(const Params& params, RAdamOptions opts = {});

  void step(Params& params, const std::vector<Tensor4>& grads, double lr);

  int64_t steps() const { return t_; }
  const RAdamOptions& options() const { return opts_; }
  const std::vector<Tensor4>& first_moments() const { return m_; }
  const std::vector<Tensor4>& second_moments() const { return v_; }

  static double rho_infinity(double beta2) { return 2.0 / (1.0 - beta2) - 1.0; }
  static double rho(double beta2, int64_t t);
  // Whether step t (1-based) uses the adaptive denominator.
  static bool is_adaptive(double beta2, int64_t t) { return rho(beta2, t) > 4.0; }

 private:
  RAdamOptions opts_;
  int64_t t_ = 0;
  std::vector<Tensor4> m_;
  std::vector<Tensor4> v_;
};

// Scales all gradients by max_norm / norm when the global L2 norm exceeds
// max_norm. Returns the norm before clipping.
double clip_grad_norm(std::vector<Tensor4>& grads, double max_norm);
double global_norm(const std::vector<Tensor4>& grads);

// lr0 * factor^(number of decay steps <= step).
double lr_at(double lr0, const std::vector<int64_t>& decay_steps, double factor, int64_t step);

}  // namespace ifan
