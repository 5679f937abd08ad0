#include "ifan/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "ifan/error.hpp"

namespace ifan::io {

namespace fs = std::filesystem;

double quantize8(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return std::floor(255.0 * c + 0.5);
}

Tensor4 read_png(const fs::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    std::string msg = img.message;
    png_image_free(&img);
    throw IoError(path.string() + ": " + msg);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw IoError(path.string() + ": " + msg);
  }
  const int64_t h = img.height, w = img.width;
  Tensor4 t(Shape{1, 3, h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t ch = 0; ch < 3; ++ch) t.at(0, ch, y, x) = buf[static_cast<std::size_t>((y * w + x) * 3 + ch)] / 255.0;
  return t;
}

void write_png(const fs::path& path, const Tensor4& image) {
  if (image.n() != 1 || (image.c() != 3 && image.c() != 1)) {
    throw ShapeError("write_png expects (1,3,h,w) or (1,1,h,w), got " + image.shape().str());
  }
  const int64_t h = image.h(), w = image.w();
  std::vector<unsigned char> buf(static_cast<std::size_t>(h * w * 3));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t ch = 0; ch < 3; ++ch) {
        const double v = image.at(0, image.c() == 3 ? ch : 0, y, x);
        buf[static_cast<std::size_t>((y * w + x) * 3 + ch)] = static_cast<unsigned char>(quantize8(v));
      }
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw IoError(path.string() + ": " + msg);
  }
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& is, const fs::path& path) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw FormatError(path.string() + ": truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

constexpr uint8_t kDtypeF64 = 1;

std::string read_token(std::istream& is) {
  std::string tok;
  is >> tok;
  return tok;
}

}  // namespace

Tensor4 read_pfm(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path.string() + ": cannot open");
  const std::string magic = read_token(is);
  if (magic != "Pf") throw FormatError(path.string() + ": not a single-channel PFM (magic '" + magic + "')");
  int64_t w = 0, h = 0;
  double scale = 0.0;
  if (!(is >> w >> h >> scale) || w < 1 || h < 1) throw FormatError(path.string() + ": malformed PFM header");
  is.get();  // single whitespace before the raster
  const bool little = scale < 0.0;
  Tensor4 t(Shape{1, 1, h, w});
  for (int64_t row = 0; row < h; ++row) {
    for (int64_t x = 0; x < w; ++x) {
      unsigned char b[4];
      if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError(path.string() + ": truncated PFM raster");
      if (little != (std::endian::native == std::endian::little)) std::reverse(b, b + 4);
      float f;
      std::memcpy(&f, b, 4);
      t.at(0, 0, h - 1 - row, x) = f;  // PFM rows run bottom to top
    }
  }
  return t;
}

void write_pfm(const fs::path& path, const Tensor4& map) {
  if (map.n() != 1 || map.c() != 1) throw ShapeError("write_pfm expects (1,1,h,w), got " + map.shape().str());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os << "Pf\n" << map.w() << " " << map.h() << "\n-1.0\n";
  for (int64_t row = 0; row < map.h(); ++row)
    for (int64_t x = 0; x < map.w(); ++x) put<float>(os, static_cast<float>(map.at(0, 0, map.h() - 1 - row, x)));
  if (!os) throw IoError(path.string() + ": write failed");
}

namespace {

void write_config(std::ostream& os, const NetworkConfig& cfg) {
  put<uint32_t>(os, static_cast<uint32_t>(cfg.feature_channels));
  put<uint32_t>(os, static_cast<uint32_t>(cfg.filter_sets));
  put<uint32_t>(os, static_cast<uint32_t>(cfg.filter_taps));
  put<uint32_t>(os, static_cast<uint32_t>(cfg.downsample));
  put<uint32_t>(os, static_cast<uint32_t>(cfg.blocks_per_stage));
  put<double>(os, cfg.lrelu_slope);
  put<uint8_t>(os, cfg.use_filter_prediction);
  put<uint8_t>(os, cfg.use_dme);
  put<uint8_t>(os, cfg.use_reblur);
}

NetworkConfig read_config(std::istream& is, const fs::path& path) {
  NetworkConfig cfg;
  cfg.feature_channels = get<uint32_t>(is, path);
  cfg.filter_sets = get<uint32_t>(is, path);
  cfg.filter_taps = get<uint32_t>(is, path);
  cfg.downsample = get<uint32_t>(is, path);
  cfg.blocks_per_stage = get<uint32_t>(is, path);
  cfg.lrelu_slope = get<double>(is, path);
  cfg.use_filter_prediction = get<uint8_t>(is, path) != 0;
  cfg.use_dme = get<uint8_t>(is, path) != 0;
  cfg.use_reblur = get<uint8_t>(is, path) != 0;
  return cfg;
}

void read_header(std::istream& is, const fs::path& path) {
  char magic[4];
  if (!is.read(magic, 4)) throw FormatError(path.string() + ": truncated checkpoint");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw FormatError(path.string() + ": bad checkpoint magic");
  const uint32_t version = get<uint32_t>(is, path);
  if (version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
}

std::ifstream open_read(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path.string() + ": cannot open");
  return is;
}

void require_same_config(const NetworkConfig& stored, const NetworkConfig& expected, const fs::path& path) {
  auto fail = [&](const char* field, const std::string& a, const std::string& b) {
    throw CompatibilityError(path.string() + ": checkpoint " + field + " = " + a + " but config expects " + b);
  };
  auto num = [](auto v) { return std::to_string(v); };
  if (stored.feature_channels != expected.feature_channels)
    fail("c_e", num(stored.feature_channels), num(expected.feature_channels));
  if (stored.filter_sets != expected.filter_sets) fail("n_filters", num(stored.filter_sets), num(expected.filter_sets));
  if (stored.filter_taps != expected.filter_taps) fail("k", num(stored.filter_taps), num(expected.filter_taps));
  if (stored.downsample != expected.downsample) fail("s", num(stored.downsample), num(expected.downsample));
  if (stored.blocks_per_stage != expected.blocks_per_stage)
    fail("blocks_per_stage", num(stored.blocks_per_stage), num(expected.blocks_per_stage));
  if (stored.lrelu_slope != expected.lrelu_slope) fail("lrelu_slope", num(stored.lrelu_slope), num(expected.lrelu_slope));
  if (stored.use_filter_prediction != expected.use_filter_prediction)
    fail("use_filter_prediction", num(stored.use_filter_prediction), num(expected.use_filter_prediction));
  if (stored.use_dme != expected.use_dme) fail("use_dme", num(stored.use_dme), num(expected.use_dme));
  if (stored.use_reblur != expected.use_reblur) fail("use_reblur", num(stored.use_reblur), num(expected.use_reblur));
}

}  // namespace

void save_checkpoint(const fs::path& path, const NetworkConfig& cfg, const Params& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os.write(kCheckpointMagic, 4);
  put<uint32_t>(os, kCheckpointVersion);
  write_config(os, cfg);
  put<uint32_t>(os, static_cast<uint32_t>(params.size()));
  for (const auto& e : params.entries()) {
    put<uint32_t>(os, static_cast<uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<uint8_t>(os, kDtypeF64);
    const Shape s = e.value.shape();
    for (int64_t d : {s.n, s.c, s.h, s.w}) put<uint64_t>(os, static_cast<uint64_t>(d));
    for (double v : e.value.values()) put<double>(os, v);
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

NetworkConfig peek_checkpoint_config(const fs::path& path) {
  auto is = open_read(path);
  read_header(is, path);
  return read_config(is, path);
}

Params load_checkpoint(const fs::path& path, const NetworkConfig& expected) {
  auto is = open_read(path);
  read_header(is, path);
  const NetworkConfig stored = read_config(is, path);
  require_same_config(stored, expected, path);

  // Names, groups and shapes must line up with the architecture of `expected`.
  const Params layout = init_params(expected, 0);
  const uint32_t count = get<uint32_t>(is, path);
  if (count != layout.size()) {
    throw FormatError(path.string() + ": checkpoint holds " + std::to_string(count) + " tensors, expected " +
                      std::to_string(layout.size()));
  }
  Params params;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t len = get<uint32_t>(is, path);
    if (len > 4096) throw FormatError(path.string() + ": implausible tensor name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw FormatError(path.string() + ": truncated checkpoint");
    if (get<uint8_t>(is, path) != kDtypeF64) throw FormatError(path.string() + ": unsupported dtype for " + name);
    Shape s;
    s.n = static_cast<int64_t>(get<uint64_t>(is, path));
    s.c = static_cast<int64_t>(get<uint64_t>(is, path));
    s.h = static_cast<int64_t>(get<uint64_t>(is, path));
    s.w = static_cast<int64_t>(get<uint64_t>(is, path));
    const ParamEntry& ref = layout.entries()[i];
    if (name != ref.name || s != ref.value.shape()) {
      throw FormatError(path.string() + ": tensor " + std::to_string(i) + " is " + name + s.str() + ", expected " +
                        ref.name + ref.value.shape().str());
    }
    std::vector<double> data(s.numel());
    for (double& v : data) v = get<double>(is, path);
    params.add(name, ref.group, Tensor4(s, std::move(data)));
  }
  return params;
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError(path.string() + ": cannot open config");
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ContractError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ContractError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw ContractError(path.string() + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

}  // namespace ifan::io
