#include "ifan/net.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "ifan/error.hpp"
#include "ifan/kernels/layout.hpp"
#include "ifan/ops.hpp"

namespace ifan {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

int64_t stage_width(const NetworkConfig& cfg, int64_t stage) {
  return std::max<int64_t>(1, cfg.feature_channels >> (cfg.stages() - 1 - stage));
}

int64_t resblock_params(int64_t c) { return 2 * (c * c * 9 + c); }

// Residual blocks that stand in for the IAC layer when filter prediction is off.
int64_t mixing_blocks(const NetworkConfig& cfg) {
  const int64_t c = cfg.feature_channels;
  const int64_t head = c * cfg.deblur_filter_channels() + cfg.deblur_filter_channels();
  const int64_t fusion = 2 * c * c * 9 + c;
  const double r = static_cast<double>(head - fusion) / static_cast<double>(resblock_params(c));
  return std::max<int64_t>(1, std::llround(r));
}

void push_resblocks(std::vector<LayerSpec>& out, const std::string& prefix, Group g, int64_t c, int64_t count,
                    int64_t scale) {
  for (int64_t j = 0; j < count; ++j) {
    const std::string base = prefix + ".rb" + std::to_string(j);
    out.push_back({base + ".c1", g, c, c, 3, 1, scale});
    out.push_back({base + ".c2", g, c, c, 3, 1, scale});
  }
}

void push_encoder(std::vector<LayerSpec>& out, const NetworkConfig& cfg, const std::string& prefix, Group g) {
  for (int64_t i = 0; i < cfg.stages(); ++i) {
    const int64_t c_in = i == 0 ? 3 : stage_width(cfg, i - 1);
    const int64_t c_out = stage_width(cfg, i);
    const int64_t scale = int64_t{1} << (i + 1);
    const std::string base = prefix + ".s" + std::to_string(i);
    out.push_back({base + ".down", g, c_in, c_out, 3, 2, scale});
    push_resblocks(out, base, g, c_out, cfg.blocks_per_stage, scale);
  }
}

void set_delta_bias(Tensor4& bias, int64_t sets, int64_t channels, int64_t taps) {
  const kernels::SeparableLayout lay{sets, channels, taps};
  for (int64_t s = 0; s < sets; ++s)
    for (int64_t ch = 0; ch < channels; ++ch) {
      bias[static_cast<std::size_t>(lay.f1(s, ch, taps / 2))] = 1.0;
      bias[static_cast<std::size_t>(lay.f2(s, ch, taps / 2))] = 1.0;
    }
}

Var conv(const BoundParams& p, const std::string& name, Var x, int stride) {
  return conv2d(x, p[name + ".w"], p[name + ".b"], stride);
}

Var resblocks(const NetworkConfig& cfg, const BoundParams& p, const std::string& prefix, int64_t count, Var x) {
  for (int64_t j = 0; j < count; ++j) {
    const std::string base = prefix + ".rb" + std::to_string(j);
    Var y = lrelu(conv(p, base + ".c1", x, 1), cfg.lrelu_slope);
    x = add(x, conv(p, base + ".c2", y, 1));
  }
  return x;
}

Var encoder(const NetworkConfig& cfg, const BoundParams& p, const std::string& prefix, Var x) {
  for (int64_t i = 0; i < cfg.stages(); ++i) {
    const std::string base = prefix + ".s" + std::to_string(i);
    x = lrelu(conv(p, base + ".down", x, 2), cfg.lrelu_slope);
    x = resblocks(cfg, p, base, cfg.blocks_per_stage, x);
  }
  return x;
}

void check_input(const NetworkConfig& cfg, const Tensor4& image) {
  if (image.c() != 3) throw ShapeError("network input must have 3 channels, got " + image.shape().str());
  if (image.h() % cfg.downsample != 0 || image.w() % cfg.downsample != 0) {
    throw ShapeError("input " + std::to_string(image.h()) + "x" + std::to_string(image.w()) +
                     " is not divisible by s = " + std::to_string(cfg.downsample));
  }
}

}  // namespace

int64_t NetworkConfig::stages() const {
  int64_t n = 0;
  for (int64_t v = downsample; v > 1; v >>= 1) ++n;
  return n;
}

void NetworkConfig::validate() const {
  if (downsample < 2 || (downsample & (downsample - 1)) != 0) {
    throw ContractError("downsample factor s must be a power of two >= 2, got " + std::to_string(downsample));
  }
  kernels::require_odd_taps(filter_taps);
  if (filter_sets < 1) throw ContractError("filter sets N must be >= 1");
  if (feature_channels < 1) throw ContractError("feature channels c_e must be >= 1");
  if (blocks_per_stage < 0) throw ContractError("blocks_per_stage must be >= 0");
  if (!(lrelu_slope >= 0.0 && lrelu_slope < 1.0)) throw ContractError("lrelu_slope must be in [0, 1)");
  if (use_reblur && !use_filter_prediction) {
    throw ContractError("use_reblur requires use_filter_prediction: the reblurring network consumes F_deblur");
  }
}

std::string_view group_name(Group g) {
  switch (g) {
    case Group::extractor: return "extractor";
    case Group::filter_encoder: return "filter_encoder";
    case Group::dme: return "dme";
    case Group::filter_predictor: return "filter_predictor";
    case Group::reconstructor: return "reconstructor";
    case Group::reblur_net: return "reblur_net";
    case Group::disparity_head: return "disparity_head";
  }
  return "?";
}

bool is_ifan_group(Group g) {
  return g == Group::filter_encoder || g == Group::dme || g == Group::filter_predictor || g == Group::disparity_head;
}

std::vector<LayerSpec> architecture(const NetworkConfig& cfg) {
  cfg.validate();
  const int64_t ce = cfg.feature_channels, s = cfg.downsample, blocks = cfg.blocks_per_stage;
  std::vector<LayerSpec> out;
  push_encoder(out, cfg, "extractor", Group::extractor);
  push_encoder(out, cfg, "filter_encoder", Group::filter_encoder);
  push_resblocks(out, "dme", Group::dme, ce, blocks, s);
  if (cfg.use_dme) out.push_back({"disparity_head.conv", Group::disparity_head, ce, 1, 3, 1, s});
  push_resblocks(out, "filter_predictor", Group::filter_predictor, ce, blocks, s);
  if (cfg.use_filter_prediction) {
    out.push_back({"filter_predictor.head", Group::filter_predictor, ce, cfg.deblur_filter_channels(), 1, 1, s});
  } else {
    out.push_back({"filter_predictor.fusion", Group::filter_predictor, 2 * ce, ce, 3, 1, s});
    push_resblocks(out, "filter_predictor.mix", Group::filter_predictor, ce, mixing_blocks(cfg), s);
  }
  int64_t c_in = ce;
  for (int64_t i = 0; i < cfg.stages(); ++i) {
    const bool last = i == cfg.stages() - 1;
    const int64_t c_out = last ? 3 : ce;
    out.push_back({"reconstructor.s" + std::to_string(i), Group::reconstructor, c_in, c_out, 3, 1, s >> (i + 1)});
    c_in = c_out;
  }
  if (cfg.use_reblur) {
    out.push_back({"reblur_net.c1", Group::reblur_net, cfg.deblur_filter_channels(), cfg.reblur_filter_channels(),
                   1, 1, s});
    out.push_back({"reblur_net.c2", Group::reblur_net, cfg.reblur_filter_channels(), cfg.reblur_filter_channels(),
                   1, 1, s});
  }
  return out;
}

void Params::add(std::string name, Group group, Tensor4 value) {
  if (index_.contains(name)) throw ContractError("duplicate parameter name " + name);
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), group, std::move(value)});
}

std::optional<std::size_t> Params::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const ParamEntry& Params::at(std::string_view name) const {
  auto i = find(name);
  if (!i) throw ContractError("unknown parameter " + std::string(name));
  return entries_[*i];
}

ParamEntry& Params::at(std::string_view name) {
  auto i = find(name);
  if (!i) throw ContractError("unknown parameter " + std::string(name));
  return entries_[*i];
}

std::size_t Params::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.numel();
  return n;
}

bool operator==(const Params& a, const Params& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    const auto& x = a.entries_[i];
    const auto& y = b.entries_[i];
    if (x.name != y.name || x.group != y.group || !(x.value == y.value)) return false;
  }
  return true;
}

Params init_params(const NetworkConfig& cfg, uint64_t seed) {
  Params params;
  uint64_t stream = seed;
  for (const LayerSpec& layer : architecture(cfg)) {
    stream = splitmix64(stream);
    const Shape wshape{layer.c_out, layer.c_in, layer.kernel, layer.kernel};
    Tensor4 bias(Shape{layer.c_out, 1, 1, 1});
    Tensor4 weight;
    if (layer.name == "filter_predictor.head") {
      weight = Tensor4(wshape);
      set_delta_bias(bias, cfg.filter_sets, cfg.feature_channels, cfg.filter_taps);
    } else if (layer.name == "disparity_head.conv") {
      // Start at d = 0, where the warp is away from its clamped, gradient-free region.
      weight = Tensor4(wshape);
    } else if (layer.name.ends_with(".c2") && layer.name.find(".rb") != std::string::npos) {
      // Residual branches start closed so each block is the identity.
      weight = Tensor4(wshape);
    } else if (layer.name == "reblur_net.c2") {
      weight = Tensor4(wshape);
      set_delta_bias(bias, cfg.filter_sets, 3, cfg.filter_taps);
    } else {
      const double fan_in = static_cast<double>(layer.c_in * layer.kernel * layer.kernel);
      weight = Tensor4::normal(wshape, 0.0, std::sqrt(2.0 / fan_in), stream);
    }
    params.add(layer.name + ".w", layer.group, std::move(weight));
    params.add(layer.name + ".b", layer.group, std::move(bias));
  }
  return params;
}

BoundParams::BoundParams(Tape& tape, const Params& params, bool trainable) : tape_(&tape), params_(&params) {
  vars_.reserve(params.size());
  for (const auto& e : params.entries()) vars_.push_back(trainable ? tape.leaf(e.value) : tape.constant(e.value));
}

Var BoundParams::operator[](std::string_view name) const {
  auto i = params_->find(name);
  if (!i) throw ContractError("unknown parameter " + std::string(name));
  return vars_[*i];
}

Var feature_extract(const NetworkConfig& cfg, const BoundParams& p, Var image) {
  check_input(cfg, image.value());
  return encoder(cfg, p, "extractor", image);
}

std::pair<Var, Var> encode_disparity(const NetworkConfig& cfg, const BoundParams& p, Var image) {
  check_input(cfg, image.value());
  Var ef = encoder(cfg, p, "filter_encoder", image);
  Var ed = resblocks(cfg, p, "dme", cfg.blocks_per_stage, ef);
  Var d = cfg.use_dme ? conv(p, "disparity_head.conv", ed, 1)
                      : p.tape().constant(Tensor4(Shape{ef.shape().n, 1, ef.shape().h, ef.shape().w}));
  return {ed, d};
}

IfanVars ifan_forward(const NetworkConfig& cfg, const BoundParams& p, Var image) {
  auto [ed, d] = encode_disparity(cfg, p, image);
  Var trunk = resblocks(cfg, p, "filter_predictor", cfg.blocks_per_stage, ed);
  Var filters = cfg.use_filter_prediction ? conv(p, "filter_predictor.head", trunk, 1) : trunk;
  return {filters, d};
}

DeblurVars deblur_forward(const NetworkConfig& cfg, const BoundParams& p, Var image) {
  Var eb = feature_extract(cfg, p, image);
  IfanVars ifan = ifan_forward(cfg, p, image);
  Var ebs;
  if (cfg.use_filter_prediction) {
    ebs = iac(eb, ifan.filters, cfg.filter_sets, cfg.filter_taps, cfg.lrelu_slope);
  } else {
    ebs = lrelu(conv(p, "filter_predictor.fusion", concat_channels(eb, ifan.filters), 1), cfg.lrelu_slope);
    ebs = resblocks(cfg, p, "filter_predictor.mix", mixing_blocks(cfg), ebs);
  }
  Var x = ebs;
  for (int64_t i = 0; i < cfg.stages(); ++i) {
    x = upsample_nearest(x, 2);
    x = lrelu(conv(p, "reconstructor.s" + std::to_string(i), x, 1), cfg.lrelu_slope);
  }
  return {x, eb, ebs, ifan};
}

Var reblur_forward(const NetworkConfig& cfg, const BoundParams& p, Var deblur_filters, Var sharp_down) {
  if (!cfg.use_reblur) throw ContractError("reblur_forward called with use_reblur = false");
  if (sharp_down.shape().c != 3) throw ShapeError("reblur input must have 3 channels");
  Var hidden = lrelu(conv(p, "reblur_net.c1", deblur_filters, 1), cfg.lrelu_slope);
  Var reblur_filters = conv(p, "reblur_net.c2", hidden, 1);
  return iac(sharp_down, reblur_filters, cfg.filter_sets, cfg.filter_taps, cfg.lrelu_slope);
}

Tensor4 feature_extract(const NetworkConfig& cfg, const Params& p, const Tensor4& image) {
  Tape tape;
  BoundParams bp(tape, p, false);
  return feature_extract(cfg, bp, tape.constant(image)).value();
}

DeblurOutput deblur_forward(const NetworkConfig& cfg, const Params& p, const Tensor4& image) {
  Tape tape;
  BoundParams bp(tape, p, false);
  DeblurVars v = deblur_forward(cfg, bp, tape.constant(image));
  DeblurOutput out{v.restored.value(), v.deblurred.value(), v.features.value(), std::nullopt,
                   DisparityMap{v.ifan.disparity.value()}};
  if (cfg.use_filter_prediction) {
    out.filters = FilterMap(v.ifan.filters.value(), cfg.filter_sets, cfg.feature_channels, cfg.filter_taps);
  }
  return out;
}

Tensor4 reblur_forward(const NetworkConfig& cfg, const Params& p, const FilterMap& deblur_filters,
                       const Tensor4& sharp_down) {
  Tape tape;
  BoundParams bp(tape, p, false);
  return reblur_forward(cfg, bp, tape.constant(deblur_filters.data), tape.constant(sharp_down)).value();
}

ArchitectureReport describe(const NetworkConfig& cfg, int64_t height, int64_t width) {
  const auto layers = architecture(cfg);
  ArchitectureReport rep;
  std::ostringstream os;
  os << "network: c_e=" << cfg.feature_channels << " N=" << cfg.filter_sets << " k=" << cfg.filter_taps
     << " s=" << cfg.downsample << " blocks=" << cfg.blocks_per_stage << " FP+IAC=" << cfg.use_filter_prediction
     << " DME=" << cfg.use_dme << " RBN=" << cfg.use_reblur << "\n";
  os << "input: 3x" << height << "x" << width << "\n";
  os << std::left << std::setw(36) << "layer" << std::setw(18) << "group" << std::setw(22) << "weight"
     << std::setw(12) << "output" << std::right << std::setw(10) << "params" << std::setw(14) << "MACs" << "\n";
  uint64_t iac_macs_total = 0;
  bool iac_row_done = false;
  for (const LayerSpec& l : layers) {
    // The IAC layer sits between the filter predictor and the reconstructor.
    if (!iac_row_done && l.group == Group::reconstructor && cfg.use_filter_prediction) {
      const int64_t h = height / cfg.downsample, w = width / cfg.downsample;
      iac_macs_total = static_cast<uint64_t>(h * w * cfg.feature_channels * cfg.filter_sets * 2 * cfg.filter_taps);
      std::ostringstream shape;
      shape << cfg.feature_channels << "x" << h << "x" << w;
      os << std::left << std::setw(36) << "iac" << std::setw(18) << "-" << std::setw(22) << "-" << std::setw(12)
         << shape.str() << std::right << std::setw(10) << 0 << std::setw(14) << iac_macs_total << "\n";
      rep.macs += iac_macs_total;
      iac_row_done = true;
    }
    const int64_t oh = height / l.scale, ow = width / l.scale;
    const uint64_t macs = static_cast<uint64_t>(oh * ow * l.c_out * l.c_in * l.kernel * l.kernel);
    std::ostringstream wshape, oshape;
    wshape << l.c_out << "x" << l.c_in << "x" << l.kernel << "x" << l.kernel << "/s" << l.stride;
    oshape << l.c_out << "x" << oh << "x" << ow;
    os << std::left << std::setw(36) << l.name << std::setw(18) << group_name(l.group) << std::setw(22)
       << wshape.str() << std::setw(12) << oshape.str() << std::right << std::setw(10) << l.params()
       << std::setw(14) << macs << "\n";
    rep.total_params += l.params();
    if (l.group != Group::reblur_net) {
      rep.inference_params += l.params();
      rep.macs += macs;
    }
  }
  os << "parameter tensors: " << 2 * layers.size() << "\n";
  os << "total params: " << rep.total_params << "\n";
  os << "inference params (without reblurring network): " << rep.inference_params << "\n";
  os << "inference MACs: " << rep.macs << " (filter-tap multiplies; bias and activation excluded)\n";
  rep.text = os.str();
  return rep;
}

}  // namespace ifan
