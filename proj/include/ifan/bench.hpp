#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ifan::bench {

// Filter-tap multiplies only. Bias adds and the activation are not counted.
int64_t macs_fac(int64_t h, int64_t w, int64_t c, int64_t k);
int64_t macs_iac(int64_t h, int64_t w, int64_t c, int64_t sets, int64_t k);

struct CostReport {
  std::string kind;  // "fac" or "iac"
  int64_t h = 0, w = 0, c = 0;
  int64_t sets = 1;
  int64_t taps = 0;
  int64_t macs = 0;
  // Predicted filter coefficients per pixel (the filter map's channel count).
  int64_t params = 0;
  double wall_ns_per_call = 0.0;
  int reps = 0;
};

struct CostPair {
  CostReport iac, fac;
  double mac_ratio() const { return static_cast<double>(iac.macs) / static_cast<double>(fac.macs); }
  double time_ratio() const { return iac.wall_ns_per_call / fac.wall_ns_per_call; }
};

// Median wall time over `reps` timed calls on one thread, after one warm-up call.
CostPair bench_pair(int64_t h, int64_t w, int64_t c, int64_t sets, int64_t k_iac, int64_t k_fac, int reps,
                    uint64_t seed = 1);

struct RfRow {
  int64_t sets = 0, rf = 0, macs = 0;
};
std::vector<RfRow> rf_sweep(const std::vector<int64_t>& sets, int64_t k, int64_t h = 64, int64_t w = 64,
                            int64_t c = 32);

std::string format_pair(const CostPair& p);
std::string format_pair_csv(const std::vector<CostPair>& pairs);
std::string format_rf_table(const std::vector<RfRow>& rows, int64_t k);
std::string format_rf_csv(const std::vector<RfRow>& rows, int64_t k);

}  // namespace ifan::bench
