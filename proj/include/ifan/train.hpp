#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ifan/losses.hpp"
#include "ifan/net.hpp"
#include "ifan/synth.hpp"

namespace ifan {

struct TrainConfig {
  NetworkConfig network;

  int64_t total_iters = 2000;
  double lr0 = 1e-3;
  std::vector<int64_t> decay_steps{1500, 1800};
  double decay_factor = 0.5;
  double clip_norm = 0.5;
  double weight_decay = 0.01;

  int64_t batch_size = 4;
  int64_t crop_size = 64;
  double noise_sigma_max = 0.07;
  double grayscale_prob = 0.0;
  double scale_min = 1.0;
  double scale_max = 1.0;

  uint64_t seed = 1;

  // Synthetic data (used unless data_dir is set).
  double r_max = 6.0;
  int64_t sample_size = 80;
  int64_t pool_size = 128;
  std::string data_dir;

  int64_t eval_count = 16;
  int64_t eval_size = 64;
  int64_t report_every = 100;
  int64_t eval_every = 0;        // 0: only at the end
  int64_t checkpoint_every = 0;  // 0: only the final checkpoint

  void validate() const;
};

// "toy" or "paperish".
TrainConfig preset(const std::string& name);
// Applies `key = value` overrides; "preset" (if present) is applied first.
// Unknown keys and malformed values raise ContractError.
TrainConfig config_from_keys(const std::map<std::string, std::string>& kv);
// Keys accepted by config_from_keys with a one-line description each.
std::string config_help();

// Random rescale, shared crop, optional grayscale, then independent Gaussian
// noise on the three defocused views (the sharp image stays clean).
synth::Sample augment(const synth::Sample& sample, const TrainConfig& cfg, uint64_t seed);

struct IterRecord {
  int64_t iter = 0;
  double lr = 0.0;
  LossReport losses;
  double grad_norm = 0.0;
};

struct EvalReport {
  int64_t iter = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double mae = 0.0;
  double l_deblur = 0.0;
  double input_psnr = 0.0;
  double input_ssim = 0.0;
  double input_mae = 0.0;
  // Synthetic eval sets only.
  std::optional<double> mean_disparity;
  std::optional<double> mean_gt_disparity;
};

struct TrainReport {
  std::vector<IterRecord> curve;
  std::vector<EvalReport> evals;
  Params params;
  std::filesystem::path final_checkpoint;
};

// Per-term gradients of one training step. Each entry is aligned with Params.
struct StepGrads {
  LossReport losses;
  std::vector<Tensor4> grads;
};

struct Batch {
  Tensor4 blurred, sharp;
  std::optional<Tensor4> left, right;
};

Batch stack(const std::vector<synth::Sample>& samples);

// Forward and backward of one step. The three terms can be switched off
// individually (the network toggles still apply on top).
struct TermMask {
  bool deblur = true;
  bool disp = true;
  bool reblur = true;
};
StepGrads compute_step(const NetworkConfig& cfg, const Params& params, const Batch& batch, TermMask terms = {});

std::vector<synth::Sample> make_eval_set(const TrainConfig& cfg);
EvalReport evaluate(const NetworkConfig& cfg, const Params& params, const std::vector<synth::Sample>& samples);

// Deblurs one (1,3,H,W) image of any size: reflect-pads to a multiple of s
// and crops the result back.
Tensor4 restore_image(const NetworkConfig& cfg, const Params& params, const Tensor4& image,
                      Tensor4* disparity = nullptr);

using ProgressFn = std::function<void(const IterRecord&)>;

// Writes train_log.txt, summary.json and checkpoints into out_dir when it is non-empty.
TrainReport train(const TrainConfig& cfg, const std::filesystem::path& out_dir = {}, ProgressFn progress = {});

}  // namespace ifan
