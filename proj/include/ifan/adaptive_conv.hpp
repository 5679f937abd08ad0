#pragma once

#include <vector>

#include "ifan/autodiff.hpp"
#include "ifan/kernels/layout.hpp"
#include "ifan/tensor.hpp"

namespace ifan {

// Per-pixel stack of `sets` separable filter triples (f1, f2, b) acting on
// `channels` channels. Backing tensor is (n, sets*channels*(2k+1), h, w).
struct FilterMap {
  Tensor4 data;
  int64_t sets = 1;
  int64_t channels = 1;
  int64_t taps = 3;

  FilterMap() = default;
  FilterMap(Tensor4 backing, int64_t sets, int64_t channels, int64_t taps);

  kernels::SeparableLayout layout() const { return {sets, channels, taps}; }
  static int64_t channel_count(int64_t sets, int64_t channels, int64_t taps) {
    return sets * channels * (2 * taps + 1);
  }
  // Every set: f1 = f2 = centered delta, b = 0.
  static FilterMap identity(int64_t batch, int64_t sets, int64_t channels, int64_t taps, int64_t h, int64_t w);
};

// Per-pixel dense k x k channel-wise kernels. Backing tensor is (n, c*k*k, h, w).
struct DenseFilterMap {
  Tensor4 data;
  int64_t channels = 1;
  int64_t taps = 3;

  DenseFilterMap() = default;
  DenseFilterMap(Tensor4 backing, int64_t channels, int64_t taps);
};

// One decoded filter set at one location. f1/f2 are channel-major: entry
// ch*k + t is tap t of channel ch.
struct SeparableFilters {
  std::vector<double> f1;
  std::vector<double> f2;
  std::vector<double> bias;

  friend bool operator==(const SeparableFilters&, const SeparableFilters&) = default;
};

SeparableFilters decompose_filter_map(const FilterMap& map, int64_t batch, int64_t y, int64_t x, int64_t set);
void pack_filter_set(FilterMap& map, int64_t batch, int64_t y, int64_t x, int64_t set,
                     const SeparableFilters& filters);

Tensor4 fac_forward(const Tensor4& e, const DenseFilterMap& filters);
Tensor4 iac_forward(const Tensor4& e, const FilterMap& filters, double slope);

// Differentiable forms; `filters` is the backing tensor of the respective map.
Var fac(Var e, Var filters, int64_t taps);
Var iac(Var e, Var filters, int64_t sets, int64_t taps, double slope);

// Input extent seen by one output pixel after `sets` passes of k-tap filters.
int64_t receptive_field(int64_t sets, int64_t taps);

}  // namespace ifan
