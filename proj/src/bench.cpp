#include "ifan/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "ifan/adaptive_conv.hpp"
#include "ifan/error.hpp"
#include "ifan/kernels/layout.hpp"
#include "ifan/kernels/parallel.hpp"
#include "ifan/tensor.hpp"

namespace ifan::bench {

namespace {

void require_positive(std::initializer_list<int64_t> v) {
  for (int64_t x : v)
    if (x <= 0) throw ContractError("benchmark dimensions must be positive");
}

template <class F>
double median_ns(F&& fn, int reps) {
  fn();
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(reps));
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    t.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count());
  }
  std::sort(t.begin(), t.end());
  const std::size_t m = t.size() / 2;
  return t.size() % 2 ? t[m] : 0.5 * (t[m - 1] + t[m]);
}

class ThreadPin {
 public:
  ThreadPin() : saved_(kernels::max_threads()) { kernels::set_num_threads(1); }
  ~ThreadPin() { kernels::set_num_threads(saved_); }

 private:
  int saved_;
};

}  // namespace

int64_t macs_fac(int64_t h, int64_t w, int64_t c, int64_t k) {
  require_positive({h, w, c, k});
  return h * w * c * k * k;
}

int64_t macs_iac(int64_t h, int64_t w, int64_t c, int64_t sets, int64_t k) {
  require_positive({h, w, c, sets, k});
  return h * w * c * sets * 2 * k;
}

CostPair bench_pair(int64_t h, int64_t w, int64_t c, int64_t sets, int64_t k_iac, int64_t k_fac, int reps,
                    uint64_t seed) {
  if (reps < 10) throw ContractError("bench_pair needs reps >= 10");
  require_positive({h, w, c, sets, k_iac, k_fac});
  kernels::require_odd_taps(k_iac);
  kernels::require_odd_taps(k_fac);
  ThreadPin pin;

  const Tensor4 e = Tensor4::uniform(Shape{1, c, h, w}, -1.0, 1.0, seed);
  const kernels::SeparableLayout sl{sets, c, k_iac};
  const Tensor4 fi = Tensor4::uniform(Shape{1, sl.total_channels(), h, w}, -0.5, 0.5, seed + 1);
  const Tensor4 ff = Tensor4::uniform(Shape{1, c * k_fac * k_fac, h, w}, -0.1, 0.1, seed + 2);

  CostPair p;
  p.iac = {"iac", h, w, c, sets, k_iac, macs_iac(h, w, c, sets, k_iac), sl.total_channels(), 0.0, reps};
  p.fac = {"fac", h, w, c, 1, k_fac, macs_fac(h, w, c, k_fac), c * k_fac * k_fac, 0.0, reps};
  p.iac.wall_ns_per_call =
      median_ns([&] { (void)kernels::iac_forward(e, fi, sets, k_iac, 0.1, nullptr); }, reps);
  p.fac.wall_ns_per_call = median_ns([&] { (void)kernels::fac_forward(e, ff, k_fac); }, reps);
  return p;
}

std::vector<RfRow> rf_sweep(const std::vector<int64_t>& sets, int64_t k, int64_t h, int64_t w, int64_t c) {
  if (sets.empty()) throw ContractError("rf_sweep needs at least one N");
  kernels::require_odd_taps(k);
  std::vector<RfRow> rows;
  for (int64_t n : sets) {
    if (n < 1) throw ContractError("rf_sweep: N must be >= 1");
    rows.push_back({n, receptive_field(n, k), macs_iac(h, w, c, n, k)});
  }
  return rows;
}

std::string format_pair(const CostPair& p) {
  char buf[512];
  std::ostringstream os;
  os << "IAC vs FAC at " << p.iac.h << "x" << p.iac.w << "x" << p.iac.c << ", median of " << p.iac.reps
     << " single-thread calls\n";
  std::snprintf(buf, sizeof buf, "%-6s %4s %4s %14s %10s %16s\n", "layer", "N", "k", "MACs", "filt/px", "ns/call");
  os << buf;
  for (const CostReport* r : {&p.iac, &p.fac}) {
    std::snprintf(buf, sizeof buf, "%-6s %4lld %4lld %14lld %10lld %16.0f\n", r->kind.c_str(),
                  static_cast<long long>(r->sets), static_cast<long long>(r->taps), static_cast<long long>(r->macs),
                  static_cast<long long>(r->params), r->wall_ns_per_call);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "ratio iac/fac: MACs %.4f (%lld/%lld), time %.4f\n", p.mac_ratio(),
                static_cast<long long>(p.iac.macs), static_cast<long long>(p.fac.macs), p.time_ratio());
  os << buf << "MACs count filter-tap multiplies; bias and activation excluded.\n";
  return os.str();
}

std::string format_pair_csv(const std::vector<CostPair>& pairs) {
  std::ostringstream os;
  os << "layer,h,w,c,N,k,macs,filters_per_pixel,ns_per_call,reps\n";
  for (const auto& p : pairs)
    for (const CostReport* r : {&p.iac, &p.fac})
      os << r->kind << "," << r->h << "," << r->w << "," << r->c << "," << r->sets << "," << r->taps << ","
         << r->macs << "," << r->params << "," << r->wall_ns_per_call << "," << r->reps << "\n";
  return os.str();
}

std::string format_rf_table(const std::vector<RfRow>& rows, int64_t k) {
  char buf[128];
  std::ostringstream os;
  os << "Receptive field of iterated IAC, k=" << k << "\n";
  std::snprintf(buf, sizeof buf, "%6s %6s %14s\n", "N", "RF", "MACs");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%6lld %6lld %14lld\n", static_cast<long long>(r.sets),
                  static_cast<long long>(r.rf), static_cast<long long>(r.macs));
    os << buf;
  }
  os << "MACs count filter-tap multiplies only.\n";
  return os.str();
}

std::string format_rf_csv(const std::vector<RfRow>& rows, int64_t k) {
  std::ostringstream os;
  os << "N,k,rf,macs\n";
  for (const auto& r : rows) os << r.sets << "," << k << "," << r.rf << "," << r.macs << "\n";
  return os.str();
}

}  // namespace ifan::bench
