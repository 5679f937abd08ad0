#include "ifan/adaptive_conv.hpp"

#include <algorithm>
#include <memory>

#include "ifan/error.hpp"
#include "ifan/kernels/parallel.hpp"

namespace ifan {

namespace {

void check_separable(const Tensor4& e, const Tensor4& filters, int64_t sets, int64_t taps) {
  kernels::require_odd_taps(taps);
  if (sets < 1) throw ContractError("filter map needs at least one set");
  if (filters.n() != e.n() || filters.h() != e.h() || filters.w() != e.w()) {
    throw ShapeError("iac: feature " + e.shape().str() + " and filter map " + filters.shape().str() +
                     " differ in batch or spatial size");
  }
  if (filters.c() != FilterMap::channel_count(sets, e.c(), taps)) {
    throw ShapeError("iac: filter map has " + std::to_string(filters.c()) + " channels, expected N*c*(2k+1) = " +
                     std::to_string(FilterMap::channel_count(sets, e.c(), taps)));
  }
}

void check_dense(const Tensor4& e, const Tensor4& filters, int64_t taps) {
  kernels::require_odd_taps(taps);
  if (filters.n() != e.n() || filters.h() != e.h() || filters.w() != e.w()) {
    throw ShapeError("fac: feature " + e.shape().str() + " and filter map " + filters.shape().str() +
                     " differ in batch or spatial size");
  }
  if (filters.c() != e.c() * taps * taps) {
    throw ShapeError("fac: filter map has " + std::to_string(filters.c()) + " channels, expected c*k*k = " +
                     std::to_string(e.c() * taps * taps));
  }
}

void check_location(const FilterMap& map, int64_t batch, int64_t y, int64_t x, int64_t set) {
  const Tensor4& d = map.data;
  if (batch < 0 || batch >= d.n() || y < 0 || y >= d.h() || x < 0 || x >= d.w() || set < 0 || set >= map.sets) {
    throw BoundsError("filter map index out of range: batch " + std::to_string(batch) + ", (" + std::to_string(x) +
                      "," + std::to_string(y) + "), set " + std::to_string(set));
  }
}

}  // namespace

FilterMap::FilterMap(Tensor4 backing, int64_t sets_, int64_t channels_, int64_t taps_)
    : data(std::move(backing)), sets(sets_), channels(channels_), taps(taps_) {
  kernels::require_odd_taps(taps);
  if (sets < 1 || channels < 1) throw ContractError("filter map needs sets >= 1 and channels >= 1");
  if (data.c() != channel_count(sets, channels, taps)) {
    throw ShapeError("filter map backing has " + std::to_string(data.c()) + " channels, expected " +
                     std::to_string(channel_count(sets, channels, taps)));
  }
}

FilterMap FilterMap::identity(int64_t batch, int64_t sets, int64_t channels, int64_t taps, int64_t h, int64_t w) {
  Tensor4 t(Shape{batch, channel_count(sets, channels, taps), h, w});
  const kernels::SeparableLayout lay{sets, channels, taps};
  for (int64_t b = 0; b < batch; ++b)
    for (int64_t s = 0; s < sets; ++s)
      for (int64_t ch = 0; ch < channels; ++ch) {
        std::fill(t.plane(b, lay.f1(s, ch, taps / 2)), t.plane(b, lay.f1(s, ch, taps / 2)) + h * w, 1.0);
        std::fill(t.plane(b, lay.f2(s, ch, taps / 2)), t.plane(b, lay.f2(s, ch, taps / 2)) + h * w, 1.0);
      }
  return FilterMap(std::move(t), sets, channels, taps);
}

DenseFilterMap::DenseFilterMap(Tensor4 backing, int64_t channels_, int64_t taps_)
    : data(std::move(backing)), channels(channels_), taps(taps_) {
  kernels::require_odd_taps(taps);
  if (data.c() != channels * taps * taps) {
    throw ShapeError("dense filter map backing has " + std::to_string(data.c()) + " channels, expected " +
                     std::to_string(channels * taps * taps));
  }
}

SeparableFilters decompose_filter_map(const FilterMap& map, int64_t batch, int64_t y, int64_t x, int64_t set) {
  check_location(map, batch, y, x, set);
  const auto lay = map.layout();
  SeparableFilters out;
  out.f1.reserve(static_cast<std::size_t>(map.channels * map.taps));
  out.f2.reserve(static_cast<std::size_t>(map.channels * map.taps));
  for (int64_t ch = 0; ch < map.channels; ++ch)
    for (int64_t t = 0; t < map.taps; ++t) {
      out.f1.push_back(map.data.at(batch, lay.f1(set, ch, t), y, x));
      out.f2.push_back(map.data.at(batch, lay.f2(set, ch, t), y, x));
    }
  for (int64_t ch = 0; ch < map.channels; ++ch) out.bias.push_back(map.data.at(batch, lay.bias(set, ch), y, x));
  return out;
}

void pack_filter_set(FilterMap& map, int64_t batch, int64_t y, int64_t x, int64_t set,
                     const SeparableFilters& filters) {
  check_location(map, batch, y, x, set);
  const std::size_t ck = static_cast<std::size_t>(map.channels * map.taps);
  if (filters.f1.size() != ck || filters.f2.size() != ck ||
      filters.bias.size() != static_cast<std::size_t>(map.channels)) {
    throw ShapeError("pack_filter_set: filter set sizes do not match the map");
  }
  const auto lay = map.layout();
  for (int64_t ch = 0; ch < map.channels; ++ch) {
    for (int64_t t = 0; t < map.taps; ++t) {
      const std::size_t i = static_cast<std::size_t>(ch * map.taps + t);
      map.data.at(batch, lay.f1(set, ch, t), y, x) = filters.f1[i];
      map.data.at(batch, lay.f2(set, ch, t), y, x) = filters.f2[i];
    }
    map.data.at(batch, lay.bias(set, ch), y, x) = filters.bias[static_cast<std::size_t>(ch)];
  }
}

Tensor4 fac_forward(const Tensor4& e, const DenseFilterMap& filters) {
  if (filters.channels != e.c()) throw ShapeError("fac: filter map acts on a different channel count");
  check_dense(e, filters.data, filters.taps);
  return kernels::fac_forward(e, filters.data, filters.taps);
}

Tensor4 iac_forward(const Tensor4& e, const FilterMap& filters, double slope) {
  if (filters.channels != e.c()) {
    throw ShapeError("iac: filter map acts on " + std::to_string(filters.channels) + " channels, features have " +
                     std::to_string(e.c()));
  }
  check_separable(e, filters.data, filters.sets, filters.taps);
  return kernels::iac_forward(e, filters.data, filters.sets, filters.taps, slope);
}

Var fac(Var e, Var filters, int64_t taps) {
  check_dense(e.value(), filters.value(), taps);
  Tensor4 out = kernels::fac_forward(e.value(), filters.value(), taps);
  return e.tape->record(std::move(out), {e, filters}, [e, filters, taps](Tape& t, const Tensor4& g) {
    Tensor4 ge, gf;
    kernels::fac_backward(t.value(e), t.value(filters), taps, g, t.requires_grad(e) ? &ge : nullptr,
                          t.requires_grad(filters) ? &gf : nullptr);
    if (t.requires_grad(e)) t.accumulate(e, std::move(ge));
    if (t.requires_grad(filters)) t.accumulate(filters, std::move(gf));
  });
}

Var iac(Var e, Var filters, int64_t sets, int64_t taps, double slope) {
  check_separable(e.value(), filters.value(), sets, taps);
  const bool needs = e.tape->requires_grad(e) || e.tape->requires_grad(filters);
  auto trace = std::make_shared<kernels::IacTrace>();
  Tensor4 out = kernels::iac_forward(e.value(), filters.value(), sets, taps, slope, needs ? trace.get() : nullptr);
  return e.tape->record(std::move(out), {e, filters}, [e, filters, sets, taps, slope, trace](Tape& t,
                                                                                             const Tensor4& g) {
    Tensor4 ge, gf;
    kernels::iac_backward(*trace, t.value(filters), sets, taps, slope, g, t.requires_grad(e) ? &ge : nullptr,
                          t.requires_grad(filters) ? &gf : nullptr);
    if (t.requires_grad(e)) t.accumulate(e, std::move(ge));
    if (t.requires_grad(filters)) t.accumulate(filters, std::move(gf));
  });
}

int64_t receptive_field(int64_t sets, int64_t taps) {
  if (sets < 1) throw ContractError("receptive_field: N must be >= 1");
  kernels::require_odd_taps(taps);
  return sets * (taps - 1) + 1;
}

}  // namespace ifan
