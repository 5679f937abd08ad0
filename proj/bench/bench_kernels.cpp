// Serial reference kernels against the OpenMP kernels, same inputs.
#include <benchmark/benchmark.h>

#include "ifan/kernels/layout.hpp"
#include "ifan/kernels/parallel.hpp"
#include "ifan/kernels/reference.hpp"
#include "ifan/tensor.hpp"

using namespace ifan;

namespace {

struct Inputs {
  Tensor4 e, iac_filters, fac_filters;
};

Inputs make_inputs(int64_t side, int64_t c, int64_t sets, int64_t k_iac, int64_t k_fac) {
  const kernels::SeparableLayout l{sets, c, k_iac};
  return {Tensor4::uniform(Shape{1, c, side, side}, -1, 1, 1),
          Tensor4::uniform(Shape{1, l.total_channels(), side, side}, -0.5, 0.5, 2),
          Tensor4::uniform(Shape{1, c * k_fac * k_fac, side, side}, -0.1, 0.1, 3)};
}

void BM_IacReference(benchmark::State& st) {
  const auto in = make_inputs(st.range(0), 16, 17, 3, 11);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::reference::iac_forward(in.e, in.iac_filters, 17, 3, 0.1));
}
void BM_IacParallel(benchmark::State& st) {
  const auto in = make_inputs(st.range(0), 16, 17, 3, 11);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::iac_forward(in.e, in.iac_filters, 17, 3, 0.1, nullptr));
}
void BM_FacReference(benchmark::State& st) {
  const auto in = make_inputs(st.range(0), 16, 17, 3, 11);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::reference::fac_forward(in.e, in.fac_filters, 11));
}
void BM_FacParallel(benchmark::State& st) {
  const auto in = make_inputs(st.range(0), 16, 17, 3, 11);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::fac_forward(in.e, in.fac_filters, 11));
}

}  // namespace

BENCHMARK(BM_IacReference)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IacParallel)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FacReference)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FacParallel)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
