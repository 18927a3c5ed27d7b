#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gr/cnn/model.hpp"

namespace gr::cnn {

// Model file layout, all integers little-endian:
//   "GRCNN1\0"  7-byte magic
//   u8          format version (1)
//   u64         descriptor length L
//   L bytes     UTF-8 JSON descriptor
//   f32 * P     every parameter's values, in descriptor order
inline constexpr char kModelMagic[7] = {'G', 'R', 'C', 'N', 'N', '1', '\0'};
inline constexpr std::uint8_t kModelFormatVersion = 1;
inline constexpr std::size_t kModelHeaderSize = 7 + 1 + 8;

std::vector<std::uint8_t> serialize_model(const ModelState& model);
/// Throws kBadMagic, kVersionMismatch or kTruncated for malformed blobs.
ModelState deserialize_model(const std::vector<std::uint8_t>& blob);

void save_model(const ModelState& model, const std::filesystem::path& path);
ModelState load_model(const std::filesystem::path& path);

}  // namespace gr::cnn
