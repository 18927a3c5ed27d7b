#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "gr/cnn/dataset.hpp"

namespace gr::bench {

// IDX files: two zero bytes, a type byte, a rank byte, one big-endian u32 per
// dimension, then the raw big-endian elements.
inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;       // u8, rank 3 (N, H, W)
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;       // u8, rank 1
inline constexpr std::uint8_t kIdxTypeUbyte = 0x08;
inline constexpr std::uint8_t kIdxTypeFloat = 0x0D;

/// Reads an image/label pair. Images may be rank 3 (N, H, W) or rank 4
/// (N, H, W, C) of type u8 (scaled by 1/255) or float32 (taken as is).
/// Class count is max label + 1 unless given.
cnn::Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels,
                              std::optional<std::size_t> class_count = std::nullopt);

/// Writes float32 images (rank 4), which round-trips adversarial pixels
/// exactly; with `as_ubyte` pixels are quantized to u8 instead.
void write_idx_dataset(const cnn::Dataset& data, const std::filesystem::path& images,
                       const std::filesystem::path& labels, bool as_ubyte = false);

struct SyntheticSpec {
  std::size_t classes = 4;
  std::size_t per_class = 500;
  std::size_t image_size = 16;
  double noise = 1.0;   // Gaussian pixel noise sigma
  std::uint64_t seed = 1;
};

/// Procedural textures, one per class: horizontal stripes (even rows lit),
/// vertical stripes, checkerboard, centred disc. Gaussian noise from
/// PCG32(seed) is added and pixels clipped to [0, 1]. Row i has class
/// i % classes.
cnn::Dataset generate_synthetic(const SyntheticSpec& spec);

/// Noise-free pattern value of `cls` at (y, x).
float synthetic_pattern(std::size_t cls, std::size_t y, std::size_t x, std::size_t size);

}  // namespace gr::bench
