#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ifan/error.hpp"
#include "ifan/io.hpp"
#include "ifan/synth.hpp"

using namespace ifan;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ifan_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Tensor4 quantized(Shape s, uint64_t seed) {
  Tensor4 t = Tensor4::uniform(s, -0.1, 1.1, seed);
  for (double& v : t.values()) v = io::quantize8(v) / 255.0;
  return t;
}

NetworkConfig small_net() {
  NetworkConfig c;
  c.feature_channels = 8;
  c.filter_sets = 2;
  c.downsample = 4;
  return c;
}

}  // namespace

TEST_CASE("PNG round trip is lossless for quantized images") {
  const fs::path dir = scratch("png");
  const Tensor4 img = quantized({1, 3, 7, 9}, 1);
  io::write_png(dir / "a.png", img);
  CHECK(io::read_png(dir / "a.png") == img);
  CHECK(io::quantize8(0.5) == 128.0);
  CHECK(io::quantize8(-3.0) == 0.0);
  CHECK(io::quantize8(2.0) == 255.0);
  CHECK_THROWS_AS(io::write_png(dir / "b.png", Tensor4({2, 3, 4, 4})), ShapeError);
}

TEST_CASE("malformed PNG is an I/O error") {
  const fs::path dir = scratch("badpng");
  io::write_png(dir / "a.png", quantized({1, 3, 16, 16}, 2));
  const auto size = fs::file_size(dir / "a.png");
  fs::resize_file(dir / "a.png", size / 2);
  CHECK_THROWS_AS(io::read_png(dir / "a.png"), IoError);
  CHECK_THROWS_AS(io::read_png(dir / "missing.png"), IoError);
  std::ofstream(dir / "junk.png") << "not a png";
  CHECK_THROWS_AS(io::read_png(dir / "junk.png"), IoError);
}

TEST_CASE("PFM round trip at single precision") {
  const fs::path dir = scratch("pfm");
  Tensor4 m = Tensor4::normal({1, 1, 5, 6}, 0, 3, 3);
  for (double& v : m.values()) v = static_cast<float>(v);
  io::write_pfm(dir / "m.pfm", m);
  CHECK(io::read_pfm(dir / "m.pfm") == m);
  std::ofstream(dir / "bad.pfm") << "PF\n2 2\n-1\nxx";
  CHECK_THROWS_AS(io::read_pfm(dir / "bad.pfm"), IoError);
}

TEST_CASE("checkpoint round trip and validation") {
  const fs::path dir = scratch("ckpt");
  const NetworkConfig cfg = small_net();
  const Params p = init_params(cfg, 5);
  io::save_checkpoint(dir / "a.ifan", cfg, p);
  CHECK(io::peek_checkpoint_config(dir / "a.ifan") == cfg);
  CHECK(io::load_checkpoint(dir / "a.ifan", cfg) == p);

  NetworkConfig wider = cfg;
  wider.feature_channels = 16;
  try {
    io::load_checkpoint(dir / "a.ifan", wider);
    FAIL("expected a compatibility error");
  } catch (const CompatibilityError& e) {
    CHECK(std::string(e.what()).find("c_e") != std::string::npos);
  }
  NetworkConfig other = cfg;
  other.use_dme = false;
  CHECK_THROWS_AS(io::load_checkpoint(dir / "a.ifan", other), CompatibilityError);

  fs::copy_file(dir / "a.ifan", dir / "bad.ifan");
  {
    std::fstream f(dir / "bad.ifan", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XFAN", 4);
  }
  CHECK_THROWS_AS(io::load_checkpoint(dir / "bad.ifan", cfg), FormatError);
  fs::copy_file(dir / "a.ifan", dir / "ver.ifan");
  {
    std::fstream f(dir / "ver.ifan", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const char v[4] = {9, 0, 0, 0};
    f.write(v, 4);
  }
  CHECK_THROWS_AS(io::load_checkpoint(dir / "ver.ifan", cfg), FormatError);
  fs::copy_file(dir / "a.ifan", dir / "short.ifan");
  fs::resize_file(dir / "short.ifan", fs::file_size(dir / "a.ifan") - 9);
  CHECK_THROWS_AS(io::load_checkpoint(dir / "short.ifan", cfg), FormatError);
  CHECK_THROWS_AS(io::load_checkpoint(dir / "none.ifan", cfg), IoError);
}

TEST_CASE("key = value config files") {
  const fs::path dir = scratch("kv");
  std::ofstream(dir / "a.cfg") << "# comment\nc_e = 32\n\n  seed=4  # trailing\n";
  const auto kv = io::read_key_values(dir / "a.cfg");
  CHECK(kv.size() == 2);
  CHECK(kv.at("c_e") == "32");
  CHECK(kv.at("seed") == "4");
  std::ofstream(dir / "dup.cfg") << "a = 1\na = 2\n";
  CHECK_THROWS_AS(io::read_key_values(dir / "dup.cfg"), ContractError);
  std::ofstream(dir / "bad.cfg") << "no equals sign\n";
  CHECK_THROWS_AS(io::read_key_values(dir / "bad.cfg"), ContractError);
  CHECK_THROWS_AS(io::read_key_values(dir / "missing.cfg"), IoError);
}

TEST_CASE("paired dataset manifest") {
  const fs::path dir = scratch("dataset");
  fs::create_directories(dir / "source");
  fs::create_directories(dir / "target");
  const Tensor4 img = quantized({1, 3, 8, 8}, 4);
  for (const char* n : {"a.png", "b.png"}) {
    io::write_png(dir / "source" / n, img);
    io::write_png(dir / "target" / n, img);
  }
  const synth::PairedDataset ds(dir);
  CHECK(ds.size() == 2);
  CHECK_FALSE(ds.has_dual_pixel());
  CHECK(ds.load(1).sharp == img);
  CHECK_THROWS_AS(ds.load(2), BoundsError);

  io::write_png(dir / "source" / "c.png", img);
  try {
    synth::PairedDataset bad(dir);
    FAIL("expected a manifest error");
  } catch (const ManifestError& e) {
    CHECK(std::string(e.what()).find("target/c.png") != std::string::npos);
  }
  CHECK_THROWS_AS(synth::PairedDataset(dir / "nowhere"), IoError);
}
