#pragma once

#include <cstdint>
#include <string>

#include "ifan/error.hpp"

namespace ifan::kernels {

// Channel index arithmetic for a separable filter map. For set n0 the
// per-location vector holds f1 (c*k taps, channel-major), then f2 (c*k),
// then the bias (c).
struct SeparableLayout {
  int64_t sets = 1;      // N
  int64_t channels = 1;  // c
  int64_t taps = 3;      // k

  int64_t set_stride() const { return channels * (2 * taps + 1); }
  int64_t total_channels() const { return sets * set_stride(); }
  int64_t f1(int64_t set, int64_t ch, int64_t t) const { return set * set_stride() + ch * taps + t; }
  int64_t f2(int64_t set, int64_t ch, int64_t t) const {
    return set * set_stride() + channels * taps + ch * taps + t;
  }
  int64_t bias(int64_t set, int64_t ch) const { return set * set_stride() + 2 * channels * taps + ch; }
};

// Dense filter map: per location c kernels of k*k taps, channel-major then row-major.
struct DenseLayout {
  int64_t channels = 1;
  int64_t taps = 3;

  int64_t total_channels() const { return channels * taps * taps; }
  int64_t tap(int64_t ch, int64_t i, int64_t j) const { return ch * taps * taps + i * taps + j; }
};

inline void require_odd_taps(int64_t k) {
  if (k < 1 || k % 2 == 0) throw ContractError("filter length must be odd and >= 1, got " + std::to_string(k));
}

// Multiply counters for the instrumented reference kernels.
struct NoCount {
  void add(uint64_t) {}
};

struct MulCounter {
  uint64_t count = 0;
  void add(uint64_t n) { count += n; }
};

}  // namespace ifan::kernels
