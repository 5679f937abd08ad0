#include "ifan/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ifan/error.hpp"
#include "ifan/io.hpp"
#include "ifan/ops.hpp"
#include "ifan/optim.hpp"

namespace ifan {

namespace fs = std::filesystem;

namespace {

uint64_t mix(uint64_t a, uint64_t b) {
  uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr uint64_t kPoolStream = 0x504f4f4c;   // "POOL"
constexpr uint64_t kEvalStream = 0x4556414c;   // "EVAL"
constexpr uint64_t kBatchStream = 0x42415443;  // "BATC"

int64_t parse_int(const std::string& key, const std::string& v) {
  int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ContractError("config: " + key + " expects an integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ContractError("config: " + key + " expects a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ContractError("config: " + key + " expects true/false, got '" + v + "'");
}

std::vector<int64_t> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(parse_int(key, item));
  }
  return out;
}

struct KeyInfo {
  const char* key;
  const char* help;
  std::function<void(TrainConfig&, const std::string&, const std::string&)> apply;
};

const std::vector<KeyInfo>& key_table() {
  static const std::vector<KeyInfo> table = {
      {"preset", "toy | paperish; applied before every other key", nullptr},
      {"c_e", "feature channels", [](TrainConfig& c, const std::string& k, const std::string& v) { c.network.feature_channels = parse_int(k, v); }},
      {"n_filters", "filter sets N of the IAC layer", [](TrainConfig& c, const std::string& k, const std::string& v) { c.network.filter_sets = parse_int(k, v); }},
      {"k", "separable filter length (odd)", [](TrainConfig& c, const std::string& k, const std::string& v) { c.network.filter_taps = parse_int(k, v); }},
      {"s", "downsample factor (power of two)", [](TrainConfig& c, const std::string& k, const std::string& v) { c.network.downsample = parse_int(k, v); }},
      {"blocks_per_stage", "residual blocks per stage", [](TrainConfig& c, const std::string& k, const std::string& v) { c.network.blocks_per_stage = parse_int(k, v); }},
      {"lrelu_slope", "leaky ReLU negative slope", [](TrainConfig& c, const std::string& k, const std::string& v) { c.network.lrelu_slope = parse_double(k, v); }},
      {"use_filter_prediction", "filter predictor + IAC (else residual blocks)", [](TrainConfig& c, const std::string& k, const std::string& v) { c.network.use_filter_prediction = parse_bool(k, v); }},
      {"use_dme", "disparity map estimator and disparity loss", [](TrainConfig& c, const std::string& k, const std::string& v) { c.network.use_dme = parse_bool(k, v); }},
      {"use_reblur", "reblurring network and reblurring loss", [](TrainConfig& c, const std::string& k, const std::string& v) { c.network.use_reblur = parse_bool(k, v); }},
      {"total_iters", "training iterations", [](TrainConfig& c, const std::string& k, const std::string& v) { c.total_iters = parse_int(k, v); }},
      {"lr0", "initial learning rate", [](TrainConfig& c, const std::string& k, const std::string& v) { c.lr0 = parse_double(k, v); }},
      {"decay_steps", "comma-separated iterations where lr is multiplied by decay_factor", [](TrainConfig& c, const std::string& k, const std::string& v) { c.decay_steps = parse_int_list(k, v); }},
      {"decay_factor", "learning-rate decay factor", [](TrainConfig& c, const std::string& k, const std::string& v) { c.decay_factor = parse_double(k, v); }},
      {"clip_norm", "global gradient-norm clip", [](TrainConfig& c, const std::string& k, const std::string& v) { c.clip_norm = parse_double(k, v); }},
      {"weight_decay", "decoupled weight decay", [](TrainConfig& c, const std::string& k, const std::string& v) { c.weight_decay = parse_double(k, v); }},
      {"batch_size", "samples per iteration", [](TrainConfig& c, const std::string& k, const std::string& v) { c.batch_size = parse_int(k, v); }},
      {"crop_size", "training crop (multiple of s)", [](TrainConfig& c, const std::string& k, const std::string& v) { c.crop_size = parse_int(k, v); }},
      {"noise_sigma_max", "upper bound of the augmentation noise sigma", [](TrainConfig& c, const std::string& k, const std::string& v) { c.noise_sigma_max = parse_double(k, v); }},
      {"grayscale_prob", "probability of grayscale conversion", [](TrainConfig& c, const std::string& k, const std::string& v) { c.grayscale_prob = parse_double(k, v); }},
      {"scale_min", "lower bound of the random rescale factor", [](TrainConfig& c, const std::string& k, const std::string& v) { c.scale_min = parse_double(k, v); }},
      {"scale_max", "upper bound of the random rescale factor", [](TrainConfig& c, const std::string& k, const std::string& v) { c.scale_max = parse_double(k, v); }},
      {"seed", "master seed", [](TrainConfig& c, const std::string& k, const std::string& v) { c.seed = static_cast<uint64_t>(parse_int(k, v)); }},
      {"r_max", "maximum synthetic blur radius (pixels)", [](TrainConfig& c, const std::string& k, const std::string& v) { c.r_max = parse_double(k, v); }},
      {"sample_size", "side of pooled synthetic samples", [](TrainConfig& c, const std::string& k, const std::string& v) { c.sample_size = parse_int(k, v); }},
      {"pool_size", "number of pooled synthetic samples", [](TrainConfig& c, const std::string& k, const std::string& v) { c.pool_size = parse_int(k, v); }},
      {"data_dir", "DPDD-layout directory; replaces synthetic data", [](TrainConfig& c, const std::string&, const std::string& v) { c.data_dir = v; }},
      {"eval_count", "held-out evaluation samples", [](TrainConfig& c, const std::string& k, const std::string& v) { c.eval_count = parse_int(k, v); }},
      {"eval_size", "side of evaluation samples", [](TrainConfig& c, const std::string& k, const std::string& v) { c.eval_size = parse_int(k, v); }},
      {"report_every", "iterations between progress lines", [](TrainConfig& c, const std::string& k, const std::string& v) { c.report_every = parse_int(k, v); }},
      {"eval_every", "iterations between evaluations (0: end only)", [](TrainConfig& c, const std::string& k, const std::string& v) { c.eval_every = parse_int(k, v); }},
      {"checkpoint_every", "iterations between checkpoints (0: final only)", [](TrainConfig& c, const std::string& k, const std::string& v) { c.checkpoint_every = parse_int(k, v); }},
  };
  return table;
}

Tensor4 resize_bilinear(const Tensor4& src, int64_t oh, int64_t ow) {
  Tensor4 out(Shape{src.n(), src.c(), oh, ow});
  const double sy = static_cast<double>(src.h()) / static_cast<double>(oh);
  const double sx = static_cast<double>(src.w()) / static_cast<double>(ow);
  for (int64_t b = 0; b < src.n(); ++b)
    for (int64_t ch = 0; ch < src.c(); ++ch)
      for (int64_t y = 0; y < oh; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.h() - 1));
        const int64_t y0 = static_cast<int64_t>(fy), y1 = std::min(y0 + 1, src.h() - 1);
        const double ay = fy - static_cast<double>(y0);
        for (int64_t x = 0; x < ow; ++x) {
          const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.w() - 1));
          const int64_t x0 = static_cast<int64_t>(fx), x1 = std::min(x0 + 1, src.w() - 1);
          const double ax = fx - static_cast<double>(x0);
          const double top = (1 - ax) * src.at(b, ch, y0, x0) + ax * src.at(b, ch, y0, x1);
          const double bot = (1 - ax) * src.at(b, ch, y1, x0) + ax * src.at(b, ch, y1, x1);
          out.at(b, ch, y, x) = (1 - ay) * top + ay * bot;
        }
      }
  return out;
}

Tensor4 crop(const Tensor4& src, int64_t y0, int64_t x0, int64_t h, int64_t w) {
  Tensor4 out(Shape{src.n(), src.c(), h, w});
  for (int64_t b = 0; b < src.n(); ++b)
    for (int64_t ch = 0; ch < src.c(); ++ch)
      for (int64_t y = 0; y < h; ++y)
        std::copy(src.plane(b, ch) + (y0 + y) * src.w() + x0, src.plane(b, ch) + (y0 + y) * src.w() + x0 + w,
                  out.plane(b, ch) + y * w);
  return out;
}

void to_grayscale(Tensor4& t) {
  for (int64_t b = 0; b < t.n(); ++b)
    for (std::size_t i = 0; i < t.shape().plane(); ++i) {
      double s = 0.0;
      for (int64_t ch = 0; ch < t.c(); ++ch) s += t.plane(b, ch)[i];
      s /= static_cast<double>(t.c());
      for (int64_t ch = 0; ch < t.c(); ++ch) t.plane(b, ch)[i] = s;
    }
}

void add_noise(Tensor4& t, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, sigma);
  for (double& v : t.values()) v += dist(rng);
}

int64_t reflect(int64_t i, int64_t n) {
  if (n == 1) return 0;
  const int64_t period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

Tensor4 stack_tensors(const std::vector<const Tensor4*>& items) {
  const Shape s = items.front()->shape();
  Tensor4 out(Shape{static_cast<int64_t>(items.size()), s.c, s.h, s.w});
  for (std::size_t i = 0; i < items.size(); ++i) {
    require_same_shape(*items[i], *items.front(), "batch stacking");
    std::copy(items[i]->data(), items[i]->data() + items[i]->numel(), out.data() + i * s.numel());
  }
  return out;
}

void check_finite(const Tensor4& t, const std::string& what, int64_t iter) {
  if (!t.all_finite()) throw NumericError("non-finite values in " + what + " at iteration " + std::to_string(iter));
}

nlohmann::json to_json(const EvalReport& e) {
  nlohmann::json j = {{"iter", e.iter},           {"psnr", e.psnr},       {"ssim", e.ssim},
                      {"mae", e.mae},             {"l_deblur", e.l_deblur}, {"input_psnr", e.input_psnr},
                      {"input_ssim", e.input_ssim}, {"input_mae", e.input_mae}};
  if (e.mean_disparity) j["mean_disparity"] = *e.mean_disparity;
  if (e.mean_gt_disparity) j["mean_gt_disparity"] = *e.mean_gt_disparity;
  return j;
}

std::string log_line(const IterRecord& r) {
  std::ostringstream os;
  os << r.iter << " " << std::setprecision(10) << std::scientific << r.lr << " " << r.losses.l_deblur << " "
     << r.losses.l_disp << " " << r.losses.l_reblur << " " << r.losses.l_total;
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  network.validate();
  if (total_iters < 1) throw ContractError("total_iters must be >= 1");
  if (!(lr0 > 0.0)) throw ContractError("lr0 must be > 0");
  for (std::size_t i = 0; i < decay_steps.size(); ++i) {
    if (i > 0 && decay_steps[i] <= decay_steps[i - 1]) throw ContractError("decay_steps must be strictly increasing");
    if (decay_steps[i] >= total_iters) throw ContractError("decay_steps must be < total_iters");
  }
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  if (crop_size < network.downsample || crop_size % network.downsample != 0) {
    throw ContractError("crop_size must be a positive multiple of s");
  }
  if (eval_size % network.downsample != 0 || eval_size < 16) {
    throw ContractError("eval_size must be a multiple of s and >= 16");
  }
  if (noise_sigma_max < 0.0) throw ContractError("noise_sigma_max must be >= 0");
  if (grayscale_prob < 0.0 || grayscale_prob > 1.0) throw ContractError("grayscale_prob must be in [0, 1]");
  if (!(scale_min > 0.0) || scale_max < scale_min) throw ContractError("scale range must satisfy 0 < scale_min <= scale_max");
  if (!(clip_norm > 0.0)) throw ContractError("clip_norm must be > 0");
  if (data_dir.empty()) {
    if (pool_size < 1) throw ContractError("pool_size must be >= 1");
    if (static_cast<double>(sample_size) * scale_min < static_cast<double>(crop_size)) {
      throw ContractError("sample_size * scale_min must be at least crop_size");
    }
  }
}

TrainConfig preset(const std::string& name) {
  TrainConfig c;
  if (name == "toy") {
    // A 64x64 input through three stride-2 stages leaves 8x8x16 features,
    // too few to carry the image; two stages keep 16x16x16.
    c.network.downsample = 4;
    c.r_max = 12.0;
    return c;
  }
  if (name == "paperish") {
    c.network.feature_channels = 32;
    c.network.filter_sets = 17;
    c.network.blocks_per_stage = 2;
    c.total_iters = 600000;
    c.lr0 = 1e-4;
    c.decay_steps = {500000, 550000};
    c.batch_size = 8;
    c.crop_size = 256;
    c.grayscale_prob = 0.1;
    c.scale_min = 0.8;
    c.scale_max = 1.2;
    c.r_max = 12.0;
    c.sample_size = 320;
    c.pool_size = 512;
    c.eval_size = 256;
    c.report_every = 1000;
    c.eval_every = 50000;
    c.checkpoint_every = 50000;
    return c;
  }
  throw ContractError("unknown preset '" + name + "' (expected toy or paperish)");
}

TrainConfig config_from_keys(const std::map<std::string, std::string>& kv) {
  TrainConfig c = preset(kv.contains("preset") ? kv.at("preset") : "toy");
  for (const auto& [key, value] : kv) {
    if (key == "preset") continue;
    const auto& table = key_table();
    auto it = std::find_if(table.begin(), table.end(), [&](const KeyInfo& k) { return key == k.key; });
    if (it == table.end()) throw ContractError("config: unknown key '" + key + "'");
    it->apply(c, key, value);
  }
  c.validate();
  return c;
}

std::string config_help() {
  std::ostringstream os;
  os << "Config file: one `key = value` per line, '#' comments. Unknown keys are errors.\n";
  for (const auto& k : key_table()) os << "  " << std::left << std::setw(24) << k.key << k.help << "\n";
  return os.str();
}

synth::Sample augment(const synth::Sample& sample, const TrainConfig& cfg, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double factor = cfg.scale_min + (cfg.scale_max - cfg.scale_min) * unit(rng);
  const double coin = unit(rng);
  const double sigma = cfg.noise_sigma_max * unit(rng);

  synth::Sample out = sample;
  if (factor != 1.0) {
    const int64_t oh = std::llround(static_cast<double>(sample.sharp.h()) * factor);
    const int64_t ow = std::llround(static_cast<double>(sample.sharp.w()) * factor);
    out.sharp = resize_bilinear(sample.sharp, oh, ow);
    out.blurred = resize_bilinear(sample.blurred, oh, ow);
    if (sample.left) out.left = resize_bilinear(*sample.left, oh, ow);
    if (sample.right) out.right = resize_bilinear(*sample.right, oh, ow);
    if (sample.radius) {
      out.radius = resize_bilinear(*sample.radius, oh, ow);
      out.radius->scale(factor);
    }
  }
  const int64_t h = out.sharp.h(), w = out.sharp.w(), cs = cfg.crop_size;
  if (cs > h || cs > w) {
    throw ContractError("crop " + std::to_string(cs) + " larger than image " + std::to_string(h) + "x" + std::to_string(w));
  }
  const int64_t y0 = std::uniform_int_distribution<int64_t>(0, h - cs)(rng);
  const int64_t x0 = std::uniform_int_distribution<int64_t>(0, w - cs)(rng);
  out.sharp = crop(out.sharp, y0, x0, cs, cs);
  out.blurred = crop(out.blurred, y0, x0, cs, cs);
  if (out.left) out.left = crop(*out.left, y0, x0, cs, cs);
  if (out.right) out.right = crop(*out.right, y0, x0, cs, cs);
  out.disparity.reset();
  if (out.radius) {
    out.radius = crop(*out.radius, y0, x0, cs, cs);
    out.disparity = synth::derive_gt_disparity(*out.radius, cfg.network.downsample);
  }
  if (coin < cfg.grayscale_prob) {
    to_grayscale(out.sharp);
    to_grayscale(out.blurred);
    if (out.left) to_grayscale(*out.left);
    if (out.right) to_grayscale(*out.right);
  }
  if (sigma > 0.0) {
    add_noise(out.blurred, sigma, rng);
    if (out.left) add_noise(*out.left, sigma, rng);
    if (out.right) add_noise(*out.right, sigma, rng);
  }
  return out;
}

Batch stack(const std::vector<synth::Sample>& samples) {
  if (samples.empty()) throw ContractError("empty batch");
  std::vector<const Tensor4*> b, s, l, r;
  for (const auto& smp : samples) {
    b.push_back(&smp.blurred);
    s.push_back(&smp.sharp);
    if (smp.left && smp.right) {
      l.push_back(&*smp.left);
      r.push_back(&*smp.right);
    }
  }
  Batch out{stack_tensors(b), stack_tensors(s), std::nullopt, std::nullopt};
  if (l.size() == samples.size()) {
    out.left = stack_tensors(l);
    out.right = stack_tensors(r);
  }
  return out;
}

StepGrads compute_step(const NetworkConfig& cfg, const Params& params, const Batch& batch, TermMask terms) {
  Tape tape;
  BoundParams bp(tape, params, true);
  const int s = static_cast<int>(cfg.downsample);
  Var blurred = tape.constant(batch.blurred);
  Var sharp = tape.constant(batch.sharp);

  StepGrads out;
  std::vector<Var> parts;
  IfanVars ifan;
  if (terms.deblur) {
    DeblurVars d = deblur_forward(cfg, bp, blurred);
    ifan = d.ifan;
    Var l = loss_deblur(d.restored, sharp);
    out.losses.l_deblur = l.value()[0];
    parts.push_back(l);
  }
  if (cfg.use_dme && terms.disp) {
    if (!batch.left || !batch.right) throw ContractError("disparity loss needs left/right dual-pixel views");
    // The disparity branch sees the right view, matching the training forward.
    Var right = tape.constant(*batch.right);
    Var d = encode_disparity(cfg, bp, right).second;
    Var l = loss_disp(tape.constant(area_downsample(*batch.left, s)), tape.constant(area_downsample(*batch.right, s)), d);
    out.losses.l_disp = l.value()[0];
    parts.push_back(l);
  }
  if (cfg.use_reblur && terms.reblur) {
    if (!terms.deblur) ifan = ifan_forward(cfg, bp, blurred);
    Var reblurred = reblur_forward(cfg, bp, ifan.filters, tape.constant(area_downsample(batch.sharp, s)));
    Var l = loss_reblur(reblurred, tape.constant(area_downsample(batch.blurred, s)));
    out.losses.l_reblur = l.value()[0];
    parts.push_back(l);
  }
  out.losses.l_total = out.losses.l_deblur + out.losses.l_disp + out.losses.l_reblur;

  if (!parts.empty()) {
    Var total = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) total = add(total, parts[i]);
    tape.backward(total);
  }
  out.grads.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out.grads.push_back(tape.grad(bp[i]));
  return out;
}

std::vector<synth::Sample> make_eval_set(const TrainConfig& cfg) {
  std::vector<synth::Sample> out;
  if (!cfg.data_dir.empty()) {
    synth::PairedDataset ds(cfg.data_dir);
    const std::size_t count = std::min<std::size_t>(ds.size(), static_cast<std::size_t>(cfg.eval_count));
    for (std::size_t i = 0; i < count; ++i) out.push_back(ds.load(ds.size() - 1 - i));
    return out;
  }
  const synth::SynthConfig sc{cfg.eval_size, cfg.eval_size, cfg.r_max, cfg.network.downsample};
  for (int64_t i = 0; i < cfg.eval_count; ++i) out.push_back(synth::make_sample(mix(cfg.seed ^ kEvalStream, static_cast<uint64_t>(i)), sc));
  return out;
}

Tensor4 restore_image(const NetworkConfig& cfg, const Params& params, const Tensor4& image, Tensor4* disparity) {
  if (image.n() != 1 || image.c() != 3) throw ShapeError("restore_image expects (1,3,H,W), got " + image.shape().str());
  const int64_t s = cfg.downsample, h = image.h(), w = image.w();
  const int64_t ph = (h + s - 1) / s * s, pw = (w + s - 1) / s * s;
  Tensor4 padded(Shape{1, 3, ph, pw});
  for (int64_t ch = 0; ch < 3; ++ch)
    for (int64_t y = 0; y < ph; ++y)
      for (int64_t x = 0; x < pw; ++x) padded.at(0, ch, y, x) = image.at(0, ch, reflect(y, h), reflect(x, w));
  DeblurOutput out = deblur_forward(cfg, params, padded);
  if (disparity) *disparity = out.disparity.data;
  if (ph == h && pw == w) return out.restored;
  return crop(out.restored, 0, 0, h, w);
}

EvalReport evaluate(const NetworkConfig& cfg, const Params& params, const std::vector<synth::Sample>& samples) {
  EvalReport rep;
  if (samples.empty()) return rep;
  double md = 0.0, mgt = 0.0;
  bool have_disp = cfg.use_dme;
  for (const auto& smp : samples) {
    const Tensor4 restored = restore_image(cfg, params, smp.blurred);
    rep.psnr += psnr(restored, smp.sharp);
    rep.ssim += ssim(restored, smp.sharp);
    rep.mae += mae(restored, smp.sharp);
    rep.l_deblur += loss_deblur(restored, smp.sharp);
    rep.input_psnr += psnr(smp.blurred, smp.sharp);
    rep.input_ssim += ssim(smp.blurred, smp.sharp);
    rep.input_mae += mae(smp.blurred, smp.sharp);
    if (have_disp && smp.right && smp.disparity && smp.right->h() % cfg.downsample == 0 &&
        smp.right->w() % cfg.downsample == 0) {
      Tape tape;
      BoundParams bp(tape, params, false);
      const Tensor4 d = encode_disparity(cfg, bp, tape.constant(*smp.right)).second.value();
      md += d.sum() / static_cast<double>(d.numel());
      mgt += smp.disparity->sum() / static_cast<double>(smp.disparity->numel());
    } else {
      have_disp = false;
    }
  }
  const double n = static_cast<double>(samples.size());
  rep.psnr /= n;
  rep.ssim /= n;
  rep.mae /= n;
  rep.l_deblur /= n;
  rep.input_psnr /= n;
  rep.input_ssim /= n;
  rep.input_mae /= n;
  if (have_disp) {
    rep.mean_disparity = md / n;
    rep.mean_gt_disparity = mgt / n;
  }
  return rep;
}

TrainReport train(const TrainConfig& cfg, const fs::path& out_dir, ProgressFn progress) {
  cfg.validate();
  const NetworkConfig& net = cfg.network;

  std::vector<synth::Sample> pool;
  if (cfg.data_dir.empty()) {
    const synth::SynthConfig sc{cfg.sample_size, cfg.sample_size, cfg.r_max, net.downsample};
    for (int64_t i = 0; i < cfg.pool_size; ++i) pool.push_back(synth::make_sample(mix(cfg.seed ^ kPoolStream, static_cast<uint64_t>(i)), sc));
  } else {
    synth::PairedDataset ds(cfg.data_dir);
    if (net.use_dme && !ds.has_dual_pixel()) throw ContractError(cfg.data_dir + ": use_dme needs left/ and right/ views");
    for (std::size_t i = 0; i < ds.size(); ++i) pool.push_back(ds.load(i));
    if (pool.empty()) throw ContractError(cfg.data_dir + ": no training pairs");
  }
  const auto eval_set = make_eval_set(cfg);

  TrainReport report;
  report.params = init_params(net, cfg.seed);
  RAdamOptions ropts;
  ropts.weight_decay = cfg.weight_decay;
  RAdam opt(report.params, ropts);
  std::mt19937_64 rng(mix(cfg.seed, kBatchStream));

  std::ofstream log;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    log.open(out_dir / "train_log.txt");
    if (!log) throw IoError((out_dir / "train_log.txt").string() + ": cannot open");
    log << "# iter lr l_deblur l_disp l_reblur l_total\n";
  }
  auto write_checkpoint = [&](const std::string& name) {
    if (out_dir.empty()) return fs::path{};
    const fs::path p = out_dir / name;
    io::save_checkpoint(p, net, report.params);
    return p;
  };

  for (int64_t it = 0; it < cfg.total_iters; ++it) {
    std::vector<synth::Sample> batch_samples;
    for (int64_t b = 0; b < cfg.batch_size; ++b) {
      const auto idx = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
      batch_samples.push_back(augment(pool[idx], cfg, rng()));
    }
    const Batch batch = stack(batch_samples);
    StepGrads step = compute_step(net, report.params, batch);

    const LossReport& l = step.losses;
    for (auto [name, v] : {std::pair{"l_deblur", l.l_deblur}, {"l_disp", l.l_disp}, {"l_reblur", l.l_reblur}}) {
      if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + name + " at iteration " + std::to_string(it + 1));
    }
    for (std::size_t i = 0; i < step.grads.size(); ++i) {
      check_finite(step.grads[i], "gradient of " + report.params.entries()[i].name, it + 1);
    }
    IterRecord rec;
    rec.iter = it + 1;
    rec.lr = lr_at(cfg.lr0, cfg.decay_steps, cfg.decay_factor, it);
    rec.losses = l;
    rec.grad_norm = clip_grad_norm(step.grads, cfg.clip_norm);
    opt.step(report.params, step.grads, rec.lr);
    for (const auto& e : report.params.entries()) check_finite(e.value, "parameter " + e.name, it + 1);
    report.curve.push_back(rec);
    if (log.is_open()) log << log_line(rec) << "\n";
    if (progress) progress(rec);

    if (cfg.eval_every > 0 && rec.iter % cfg.eval_every == 0 && rec.iter != cfg.total_iters) {
      EvalReport e = evaluate(net, report.params, eval_set);
      e.iter = rec.iter;
      report.evals.push_back(e);
    }
    if (cfg.checkpoint_every > 0 && rec.iter % cfg.checkpoint_every == 0 && rec.iter != cfg.total_iters) {
      std::ostringstream name;
      name << "checkpoint_" << std::setw(7) << std::setfill('0') << rec.iter << ".ifan";
      write_checkpoint(name.str());
    }
  }
  EvalReport final_eval = evaluate(net, report.params, eval_set);
  final_eval.iter = cfg.total_iters;
  report.evals.push_back(final_eval);
  report.final_checkpoint = write_checkpoint("final.ifan");

  if (!out_dir.empty()) {
    nlohmann::json j;
    j["network"] = {{"c_e", net.feature_channels},
                    {"n_filters", net.filter_sets},
                    {"k", net.filter_taps},
                    {"s", net.downsample},
                    {"blocks_per_stage", net.blocks_per_stage},
                    {"lrelu_slope", net.lrelu_slope},
                    {"use_filter_prediction", net.use_filter_prediction},
                    {"use_dme", net.use_dme},
                    {"use_reblur", net.use_reblur}};
    j["seed"] = cfg.seed;
    j["total_iters"] = cfg.total_iters;
    const auto& last = report.curve.back().losses;
    j["final_losses"] = {{"l_deblur", last.l_deblur}, {"l_disp", last.l_disp}, {"l_reblur", last.l_reblur}, {"l_total", last.l_total}};
    j["evals"] = nlohmann::json::array();
    for (const auto& e : report.evals) j["evals"].push_back(to_json(e));
    j["checkpoint"] = report.final_checkpoint.filename().string();
    std::ofstream js(out_dir / "summary.json");
    js << j.dump(2) << "\n";
    if (!js) throw IoError((out_dir / "summary.json").string() + ": write failed");
  }
  return report;
}

}  // namespace ifan
