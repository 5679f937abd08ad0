// Command-line front end. Exit codes: 0 success, 1 contract or validation
// failure, 2 I/O failure.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include <CLI11.hpp>

#include "ifan/bench.hpp"
#include "ifan/error.hpp"
#include "ifan/gradcheck.hpp"
#include "ifan/io.hpp"
#include "ifan/kernels/parallel.hpp"
#include "ifan/losses.hpp"
#include "ifan/net.hpp"
#include "ifan/synth.hpp"
#include "ifan/train.hpp"

namespace fs = std::filesystem;
using namespace ifan;

namespace {

constexpr int kOk = 0, kContract = 1, kIo = 2;

std::string sample_name(int64_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05lld.png", static_cast<long long>(i));
  return buf;
}

int run_synth(uint64_t seed, int64_t count, const fs::path& out, double r_max, int64_t size, int64_t s) {
  if (count < 1) throw ContractError("--count must be >= 1");
  const synth::SynthConfig cfg{size, size, r_max, s};
  for (const char* d : {"source", "target", "left", "right", "radius", "disparity"}) fs::create_directories(out / d);
  for (int64_t i = 0; i < count; ++i) {
    const synth::Sample smp = synth::make_sample(seed + static_cast<uint64_t>(i), cfg);
    const std::string n = sample_name(i);
    const std::string m = fs::path(n).stem().string() + ".pfm";
    io::write_png(out / "source" / n, smp.blurred);
    io::write_png(out / "target" / n, smp.sharp);
    io::write_png(out / "left" / n, *smp.left);
    io::write_png(out / "right" / n, *smp.right);
    io::write_pfm(out / "radius" / m, *smp.radius);
    io::write_pfm(out / "disparity" / m, *smp.disparity);
  }
  std::cout << "wrote " << count << " samples to " << out.string() << "\n";
  return kOk;
}

int run_train(const fs::path& config, const std::vector<std::string>& overrides, const fs::path& out, bool quiet) {
  std::map<std::string, std::string> kv;
  if (!config.empty()) kv = io::read_key_values(config);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ContractError("--set expects key=value, got '" + o + "'");
    kv[o.substr(0, eq)] = o.substr(eq + 1);
  }
  const TrainConfig cfg = config_from_keys(kv);
  const TrainReport rep = train(cfg, out, [&](const IterRecord& r) {
    if (quiet || (r.iter % cfg.report_every != 0 && r.iter != 1)) return;
    std::printf("iter %7lld  lr %.3e  l_deblur %.6f  l_disp %.6f  l_reblur %.6f  l_total %.6f  |g| %.3f\n",
                static_cast<long long>(r.iter), r.lr, r.losses.l_deblur, r.losses.l_disp, r.losses.l_reblur,
                r.losses.l_total, r.grad_norm);
    std::fflush(stdout);
  });
  const EvalReport& e = rep.evals.back();
  std::printf("held-out: PSNR %.3f dB (input %.3f)  SSIM %.4f (input %.4f)  L_deblur %.6f\n", e.psnr, e.input_psnr,
              e.ssim, e.input_ssim, e.l_deblur);
  if (e.mean_disparity) std::printf("mean disparity %.4f (ground truth %.4f)\n", *e.mean_disparity, *e.mean_gt_disparity);
  std::printf("checkpoint %s\n", rep.final_checkpoint.string().c_str());
  return kOk;
}

int run_infer(const fs::path& ckpt, const fs::path& in, const fs::path& out, const fs::path& dump) {
  const NetworkConfig cfg = io::peek_checkpoint_config(ckpt);
  const Params params = io::load_checkpoint(ckpt, cfg);
  const Tensor4 image = io::read_png(in);
  Tensor4 disparity;
  const Tensor4 restored = restore_image(cfg, params, image, dump.empty() ? nullptr : &disparity);
  io::write_png(out, restored);
  if (!dump.empty()) {
    if (!cfg.use_dme) throw ContractError("--dump-disparity needs a checkpoint trained with use_dme");
    io::write_pfm(dump, disparity);
  }
  return kOk;
}

int run_eval(const fs::path& ckpt, const fs::path& data) {
  const NetworkConfig cfg = io::peek_checkpoint_config(ckpt);
  const Params params = io::load_checkpoint(ckpt, cfg);
  const synth::PairedDataset ds(data);
  if (ds.size() == 0) throw ContractError(data.string() + ": no image pairs");
  double p = 0, s = 0, m = 0, pi = 0, si = 0, mi = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const synth::Sample smp = ds.load(i);
    const Tensor4 r = restore_image(cfg, params, smp.blurred);
    p += psnr(r, smp.sharp);
    s += ssim(r, smp.sharp);
    m += mae(r, smp.sharp);
    pi += psnr(smp.blurred, smp.sharp);
    si += ssim(smp.blurred, smp.sharp);
    mi += mae(smp.blurred, smp.sharp);
  }
  const double n = static_cast<double>(ds.size());
  std::printf("%-10s %8s %8s %12s\n", "", "PSNR", "SSIM", "MAE(x1e-1)");
  std::printf("%-10s %8.2f %8.4f %12.4f\n", "input", pi / n, si / n, 10.0 * mi / n);
  std::printf("%-10s %8.2f %8.4f %12.4f\n", "restored", p / n, s / n, 10.0 * m / n);
  std::printf("%zu images\n", ds.size());
  return kOk;
}

int run_gradcheck(uint64_t seed) {
  bool ok = true;
  std::printf("%-18s %10s %14s  %s\n", "op", "entries", "max rel err", "result");
  for (const auto& r : gradcheck_suite(seed)) {
    std::printf("%-18s %10lld %14.3e  %s\n", r.op.c_str(), static_cast<long long>(r.entries), r.max_rel_error,
                r.passed ? "ok" : "FAIL");
    ok = ok && r.passed;
  }
  std::printf("tolerance %.0e, step %.0e\n", kGradcheckTolerance, kGradcheckStep);
  return ok ? kOk : kContract;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
  if (!f) throw IoError(path.string() + ": write failed");
}

int run_bench(int reps, int64_t size, int64_t channels, const fs::path& csv) {
  std::vector<bench::CostPair> pairs;
  pairs.push_back(bench::bench_pair(size, size, channels, 17, 3, 11, reps));
  pairs.push_back(bench::bench_pair(size, size, channels, 8, 3, 7, reps));
  for (const auto& p : pairs) std::cout << bench::format_pair(p) << "\n";
  const auto rows = bench::rf_sweep({8, 17, 26, 35, 44}, 3, size, size, channels);
  std::cout << bench::format_rf_table(rows, 3);
  if (!csv.empty()) {
    write_text(csv, bench::format_pair_csv(pairs));
    fs::path rf = csv;
    rf.replace_filename(csv.stem().string() + "_rf" + csv.extension().string());
    write_text(rf, bench::format_rf_csv(rows, 3));
    std::cout << "csv: " << csv.string() << ", " << rf.string() << "\n";
  }
  return kOk;
}

int run_describe(const fs::path& config, const std::vector<std::string>& overrides, int64_t h, int64_t w) {
  std::map<std::string, std::string> kv;
  if (!config.empty()) kv = io::read_key_values(config);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ContractError("--set expects key=value, got '" + o + "'");
    kv[o.substr(0, eq)] = o.substr(eq + 1);
  }
  const TrainConfig cfg = config_from_keys(kv);
  std::cout << describe(cfg.network, h, w).text;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative filter adaptive network for single-image defocus deblurring"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads for kernels (0: runtime default)");

  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic dual-pixel defocus samples");
  uint64_t seed = 1;
  int64_t count = 16, size = 64, s = 8;
  double r_max = 6.0;
  fs::path out;
  synth_cmd->add_option("--seed", seed, "first sample seed");
  synth_cmd->add_option("--count", count, "number of samples");
  synth_cmd->add_option("--out", out, "output directory")->required();
  synth_cmd->add_option("--r-max", r_max, "maximum blur radius in pixels");
  synth_cmd->add_option("--size", size, "image side");
  synth_cmd->add_option("--s", s, "downsample factor used for the disparity map");

  auto* train_cmd = app.add_subcommand("train", "Train a network");
  train_cmd->footer(config_help());
  fs::path config;
  std::vector<std::string> overrides;
  bool quiet = false;
  train_cmd->add_option("--config", config, "flat key = value config file")->check(CLI::ExistingFile);
  train_cmd->add_option("--set", overrides, "key=value override, repeatable");
  train_cmd->add_option("--out", out, "output directory")->required();
  train_cmd->add_flag("--quiet", quiet, "no progress lines");

  auto* infer_cmd = app.add_subcommand("infer", "Deblur one image");
  fs::path ckpt, in, dump;
  infer_cmd->add_option("--ckpt", ckpt, "checkpoint")->required();
  infer_cmd->add_option("--in", in, "input PNG")->required();
  infer_cmd->add_option("--out", out, "output PNG")->required();
  infer_cmd->add_option("--dump-disparity", dump, "write the predicted disparity map as PFM");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate on a source/target directory");
  fs::path data;
  eval_cmd->add_option("--ckpt", ckpt, "checkpoint")->required();
  eval_cmd->add_option("--data", data, "directory with source/ and target/")->required();

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  uint64_t gseed = 7;
  grad_cmd->add_option("--seed", gseed, "input seed");

  auto* bench_cmd = app.add_subcommand("bench", "IAC vs FAC cost and receptive-field sweep");
  int reps = 20;
  int64_t bsize = 64, bchannels = 32;
  fs::path csv;
  bench_cmd->add_option("--reps", reps, "timed calls per kernel (>= 10)");
  bench_cmd->add_option("--size", bsize, "feature map side");
  bench_cmd->add_option("--channels", bchannels, "feature channels");
  bench_cmd->add_option("--csv", csv, "also write CSV (pairs, plus <stem>_rf for the sweep)");

  auto* describe_cmd = app.add_subcommand("describe", "Print the architecture table");
  int64_t dh = 64, dw = 64;
  describe_cmd->add_option("--config", config, "flat key = value config file")->check(CLI::ExistingFile);
  describe_cmd->add_option("--set", overrides, "key=value override, repeatable");
  describe_cmd->add_option("--height", dh, "image height for MAC counts");
  describe_cmd->add_option("--width", dw, "image width for MAC counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kContract;
  }

  try {
    if (threads > 0) kernels::set_num_threads(threads);
    if (synth_cmd->parsed()) return run_synth(seed, count, out, r_max, size, s);
    if (train_cmd->parsed()) return run_train(config, overrides, out, quiet);
    if (infer_cmd->parsed()) return run_infer(ckpt, in, out, dump);
    if (eval_cmd->parsed()) return run_eval(ckpt, data);
    if (grad_cmd->parsed()) return run_gradcheck(gseed);
    if (bench_cmd->parsed()) return run_bench(reps, bsize, bchannels, csv);
    if (describe_cmd->parsed()) return run_describe(config, overrides, dh, dw);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kContract;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kContract;
  }
  return kContract;
}
