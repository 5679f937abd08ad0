#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "ifan/net.hpp"
#include "ifan/tensor.hpp"

namespace ifan::io {

// 8-bit RGB PNG <-> (1,3,h,w) tensor in [0,1]. Writing quantizes
// round-half-up(255 * clamp(v, 0, 1)).
Tensor4 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Tensor4& image);
double quantize8(double v);

// Single-channel little-endian PFM <-> (1,1,h,w) tensor (values pass through float).
Tensor4 read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const Tensor4& map);

inline constexpr char kCheckpointMagic[4] = {'I', 'F', 'A', 'N'};
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const NetworkConfig& cfg, const Params& params);
// Reads the stored config without checking it against anything.
NetworkConfig peek_checkpoint_config(const std::filesystem::path& path);
// Verifies magic, version and that the stored config equals `expected`.
Params load_checkpoint(const std::filesystem::path& path, const NetworkConfig& expected);

// Flat `key = value` text; '#' starts a comment. Duplicate keys are errors.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

}  // namespace ifan::io
