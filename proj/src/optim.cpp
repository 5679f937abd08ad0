#include "ifan/optim.hpp"

#include <cmath>

#include "ifan/error.hpp"

namespace ifan {

RAdam::RAdam(const Params& params, RAdamOptions opts) : opts_(opts) {
  for (const auto& e : params.entries()) {
    m_.emplace_back(e.value.shape());
    v_.emplace_back(e.value.shape());
  }
}

double RAdam::rho(double beta2, int64_t t) {
  const double bt = std::pow(beta2, static_cast<double>(t));
  return rho_infinity(beta2) - 2.0 * static_cast<double>(t) * bt / (1.0 - bt);
}

void RAdam::step(Params& params, const std::vector<Tensor4>& grads, double lr) {
  if (grads.size() != params.size() || m_.size() != params.size()) {
    throw ContractError("radam: gradient count does not match parameter count");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    require_same_shape(params.entries()[i].value, grads[i], "radam gradient");
  }
  ++t_;
  const double b1 = opts_.beta1, b2 = opts_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double rho_inf = rho_infinity(b2);
  const double rho_t = rho(b2, t_);
  const bool adaptive = rho_t > 4.0;
  const double rect =
      adaptive ? std::sqrt((rho_t - 4.0) * (rho_t - 2.0) * rho_inf / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t)) : 0.0;

  for (std::size_t i = 0; i < grads.size(); ++i) {
    double* p = params.entries()[i].value.data();
    const double* g = grads[i].data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    const std::size_t n = grads[i].numel();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      p[j] -= lr * opts_.weight_decay * p[j];
      const double m_hat = m[j] / bias1;
      if (adaptive) {
        const double v_hat = std::sqrt(v[j] / bias2);
        p[j] -= lr * rect * m_hat / (v_hat + opts_.eps);
      } else {
        p[j] -= lr * m_hat;
      }
    }
  }
}

double global_norm(const std::vector<Tensor4>& grads) {
  double s = 0.0;
  for (const auto& g : grads)
    for (double v : g.values()) s += v * v;
  return std::sqrt(s);
}

double clip_grad_norm(std::vector<Tensor4>& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ContractError("clip_grad_norm requires max_norm > 0");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads) g.scale(scale);
  }
  return norm;
}

double lr_at(double lr0, const std::vector<int64_t>& decay_steps, double factor, int64_t step) {
  if (step < 0) throw ContractError("lr_at requires step >= 0");
  double lr = lr0;
  for (int64_t d : decay_steps)
    if (d <= step) lr *= factor;
  return lr;
}

}  // namespace ifan
