#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "ifan/io.hpp"

using namespace ifan;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(IFAN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "ifan_test_cli";
  static bool fresh = [&] {
    fs::remove_all(p);
    fs::create_directories(p);
    return true;
  }();
  (void)fresh;
  return p;
}

const std::string kTinyNet =
    "--set c_e=8 --set n_filters=2 --set s=4 --set total_iters=3 --set decay_steps= --set batch_size=2 "
    "--set crop_size=32 --set sample_size=40 --set pool_size=4 --set eval_count=2 --set eval_size=32 --quiet";

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("infer --in x.png") == 1);
}

TEST_CASE("describe and gradcheck succeed") {
  CHECK(run("describe") == 0);
  CHECK(run("describe --set k=4") == 1);
  CHECK(run("gradcheck") == 0);
}

TEST_CASE("synth, train, infer and eval round trip") {
  const fs::path d = scratch();
  REQUIRE(run("synth --seed 3 --count 2 --size 32 --s 4 --out " + (d / "data").string()) == 0);
  for (const char* sub : {"source/00000.png", "target/00001.png", "left/00000.png", "right/00001.png",
                          "radius/00000.pfm", "disparity/00001.pfm"})
    CHECK(fs::exists(d / "data" / sub));

  REQUIRE(run("train " + kTinyNet + " --out " + (d / "run").string()) == 0);
  const std::string ckpt = (d / "run" / "final.ifan").string();
  REQUIRE(fs::exists(ckpt));

  io::write_png(d / "in.png", io::read_png(d / "data" / "source" / "00000.png"));
  CHECK(run("infer --ckpt " + ckpt + " --in " + (d / "in.png").string() + " --out " + (d / "out.png").string() +
            " --dump-disparity " + (d / "d.pfm").string()) == 0);
  CHECK(io::read_png(d / "out.png").shape() == Shape{1, 3, 32, 32});
  CHECK(io::read_pfm(d / "d.pfm").shape() == Shape{1, 1, 8, 8});

  // Sizes that are not multiples of s are reflect-padded and cropped back.
  io::write_png(d / "odd.png", Tensor4::uniform({1, 3, 30, 45}, 0, 1, 1));
  CHECK(run("infer --ckpt " + ckpt + " --in " + (d / "odd.png").string() + " --out " + (d / "odd_out.png").string()) == 0);
  CHECK(io::read_png(d / "odd_out.png").shape() == Shape{1, 3, 30, 45});

  CHECK(run("eval --ckpt " + ckpt + " --data " + (d / "data").string()) == 0);
  CHECK(run("train --data-dir x --out " + (d / "bad").string()) == 1);
  CHECK(run("train --set colour=red --out " + (d / "bad").string()) == 1);
}

TEST_CASE("I/O and manifest failures") {
  const fs::path d = scratch();
  CHECK(run("infer --ckpt " + (d / "none.ifan").string() + " --in a.png --out b.png") == 2);
  fs::create_directories(d / "mismatch" / "source");
  fs::create_directories(d / "mismatch" / "target");
  io::write_png(d / "mismatch" / "source" / "a.png", Tensor4({1, 3, 16, 16}, 0.5));
  REQUIRE(run("train " + kTinyNet + " --out " + (d / "run2").string()) == 0);
  const std::string ckpt = (d / "run2" / "final.ifan").string();
  CHECK(run("eval --ckpt " + ckpt + " --data " + (d / "mismatch").string()) == 1);
  CHECK(run("eval --ckpt " + ckpt + " --data " + (d / "nowhere").string()) == 2);
  std::ofstream(d / "junk.ifan") << "junk";
  CHECK(run("infer --ckpt " + (d / "junk.ifan").string() + " --in a.png --out b.png") == 2);
}
