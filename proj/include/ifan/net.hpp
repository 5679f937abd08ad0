#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ifan/adaptive_conv.hpp"
#include "ifan/autodiff.hpp"
#include "ifan/tensor.hpp"
#include "ifan/warp.hpp"

namespace ifan {

struct NetworkConfig {
  int64_t feature_channels = 16;  // c_e
  int64_t filter_sets = 4;        // N
  int64_t filter_taps = 3;        // k
  int64_t downsample = 8;         // s
  int64_t blocks_per_stage = 1;
  double lrelu_slope = 0.1;
  bool use_filter_prediction = true;
  bool use_dme = true;
  bool use_reblur = true;

  int64_t deblur_filter_channels() const { return filter_sets * feature_channels * (2 * filter_taps + 1); }
  int64_t reblur_filter_channels() const { return filter_sets * 3 * (2 * filter_taps + 1); }
  int64_t stages() const;
  void validate() const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

enum class Group { extractor, filter_encoder, dme, filter_predictor, reconstructor, reblur_net, disparity_head };

inline constexpr Group kAllGroups[] = {Group::extractor,       Group::filter_encoder, Group::dme,
                                       Group::filter_predictor, Group::reconstructor,  Group::reblur_net,
                                       Group::disparity_head};

std::string_view group_name(Group g);
// Sub-networks that make up the IFAN block.
bool is_ifan_group(Group g);

// One convolution of the architecture. Each layer owns "<name>.w" and "<name>.b".
struct LayerSpec {
  std::string name;
  Group group;
  int64_t c_in;
  int64_t c_out;
  int64_t kernel;
  int64_t stride;
  int64_t scale;  // output resolution divisor relative to the input image
  std::size_t params() const { return static_cast<std::size_t>(c_out * c_in * kernel * kernel + c_out); }
};

std::vector<LayerSpec> architecture(const NetworkConfig& cfg);

struct ParamEntry {
  std::string name;
  Group group;
  Tensor4 value;
};

// Named weight tensors in deterministic (architecture) order.
class Params {
 public:
  void add(std::string name, Group group, Tensor4 value);
  const ParamEntry& at(std::string_view name) const;
  ParamEntry& at(std::string_view name);
  std::optional<std::size_t> find(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  std::vector<ParamEntry>& entries() { return entries_; }
  const std::vector<ParamEntry>& entries() const { return entries_; }

  friend bool operator==(const Params& a, const Params& b);

 private:
  std::vector<ParamEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

Params init_params(const NetworkConfig& cfg, uint64_t seed);

// Params registered on a tape, either as gradient leaves or as constants.
class BoundParams {
 public:
  BoundParams(Tape& tape, const Params& params, bool trainable);
  Var operator[](std::string_view name) const;
  Var operator[](std::size_t i) const { return vars_[i]; }
  const Params& params() const { return *params_; }
  Tape& tape() const { return *tape_; }

 private:
  Tape* tape_;
  const Params* params_;
  std::vector<Var> vars_;
};

struct IfanVars {
  Var filters;      // F_deblur backing tensor (or predictor features when filter prediction is off)
  Var disparity;    // (n,1,H/s,W/s)
};

struct DeblurVars {
  Var restored;   // I_BS
  Var features;   // e_B
  Var deblurred;  // e_BS
  IfanVars ifan;
};

Var feature_extract(const NetworkConfig& cfg, const BoundParams& p, Var image);
// Filter encoder followed by the disparity map estimator; returns (e_D, d).
std::pair<Var, Var> encode_disparity(const NetworkConfig& cfg, const BoundParams& p, Var image);
IfanVars ifan_forward(const NetworkConfig& cfg, const BoundParams& p, Var image);
DeblurVars deblur_forward(const NetworkConfig& cfg, const BoundParams& p, Var image);
Var reblur_forward(const NetworkConfig& cfg, const BoundParams& p, Var deblur_filters, Var sharp_down);

// Tape-free inference.
struct DeblurOutput {
  Tensor4 restored;   // I_BS
  Tensor4 deblurred;  // e_BS
  Tensor4 features;   // e_B
  std::optional<FilterMap> filters;  // F_deblur; absent when filter prediction is off
  DisparityMap disparity;
};

Tensor4 feature_extract(const NetworkConfig& cfg, const Params& p, const Tensor4& image);
DeblurOutput deblur_forward(const NetworkConfig& cfg, const Params& p, const Tensor4& image);
Tensor4 reblur_forward(const NetworkConfig& cfg, const Params& p, const FilterMap& deblur_filters,
                       const Tensor4& sharp_down);

struct ArchitectureReport {
  std::string text;
  std::size_t total_params = 0;
  std::size_t inference_params = 0;  // excludes the training-only reblurring network
  uint64_t macs = 0;                 // filter-tap multiplies for one (H, W) image
};

ArchitectureReport describe(const NetworkConfig& cfg, int64_t height = 64, int64_t width = 64);

}  // namespace ifan
