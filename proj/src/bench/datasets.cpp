#include "gr/bench/datasets.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>
#include <vector>

#include "gr/error.hpp"
#include "gr/pcg32.hpp"

namespace gr::bench {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

struct IdxHeader {
  std::uint8_t type = 0;
  std::vector<std::size_t> dims;
  std::size_t data_offset = 0;
};

IdxHeader parse_header(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
  if (bytes.size() < 4) fail(ErrorCode::kTruncated, "'" + path.string() + "' is shorter than an IDX magic");
  if (bytes[0] != 0 || bytes[1] != 0 || (bytes[2] != kIdxTypeUbyte && bytes[2] != kIdxTypeFloat) ||
      bytes[3] == 0) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08X", be32(bytes.data()));
    fail(ErrorCode::kBadMagic, "'" + path.string() + "' has unsupported IDX magic " + buf);
  }
  IdxHeader h;
  h.type = bytes[2];
  const std::size_t rank = bytes[3];
  h.data_offset = 4 + 4 * rank;
  if (bytes.size() < h.data_offset) fail(ErrorCode::kTruncated, "'" + path.string() + "' header cut short");
  for (std::size_t d = 0; d < rank; ++d) h.dims.push_back(be32(bytes.data() + 4 + 4 * d));
  std::size_t count = 1;
  for (std::size_t d : h.dims) count *= d;
  const std::size_t width = h.type == kIdxTypeFloat ? 4 : 1;
  if (bytes.size() - h.data_offset < count * width) {
    fail(ErrorCode::kTruncated, "'" + path.string() + "' holds fewer elements than its header declares");
  }
  return h;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

}  // namespace

cnn::Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels,
                              std::optional<std::size_t> class_count) {
  const auto img = read_file(images);
  const auto lab = read_file(labels);
  const IdxHeader ih = parse_header(img, images);
  const IdxHeader lh = parse_header(lab, labels);
  if (ih.dims.size() != 3 && ih.dims.size() != 4) {
    fail(ErrorCode::kBadMagic, "'" + images.string() + "' must have rank 3 or 4");
  }
  if (lh.type != kIdxTypeUbyte || lh.dims.size() != 1) {
    fail(ErrorCode::kBadMagic, "'" + labels.string() + "' must be a rank-1 u8 IDX file (0x00000801)");
  }
  const std::size_t n = ih.dims[0];
  if (lh.dims[0] != n) {
    fail(ErrorCode::kCountMismatch, std::to_string(n) + " images but " + std::to_string(lh.dims[0]) + " labels");
  }
  if (n == 0) fail(ErrorCode::kEmptyDataset, "'" + images.string() + "' holds no images");
  const std::size_t h = ih.dims[1], w = ih.dims[2], c = ih.dims.size() == 4 ? ih.dims[3] : 1;
  const std::size_t count = n * h * w * c;

  std::vector<float> values(count);
  if (ih.type == kIdxTypeUbyte) {
    for (std::size_t k = 0; k < count; ++k) values[k] = static_cast<float>(img[ih.data_offset + k]) / 255.0f;
  } else {
    for (std::size_t k = 0; k < count; ++k) values[k] = std::bit_cast<float>(be32(img.data() + ih.data_offset + 4 * k));
  }

  cnn::Dataset data;
  data.images = numgrad::Tensor({n, h, w, c}, std::move(values));
  data.labels.assign(lab.begin() + static_cast<std::ptrdiff_t>(lh.data_offset),
                     lab.begin() + static_cast<std::ptrdiff_t>(lh.data_offset + n));
  const std::size_t top = *std::max_element(data.labels.begin(), data.labels.end());
  data.class_count = class_count.value_or(std::max<std::size_t>(top + 1, 2));
  data.validate();
  return data;
}

void write_idx_dataset(const cnn::Dataset& data, const std::filesystem::path& images,
                       const std::filesystem::path& labels, bool as_ubyte) {
  data.validate();
  const auto& shape = data.images.shape();
  std::vector<std::uint8_t> img{0, 0, as_ubyte ? kIdxTypeUbyte : kIdxTypeFloat, 4};
  for (std::size_t d : shape) put_be32(img, static_cast<std::uint32_t>(d));
  for (float v : data.images.values()) {
    if (as_ubyte) {
      img.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
    } else {
      put_be32(img, std::bit_cast<std::uint32_t>(v));
    }
  }
  std::vector<std::uint8_t> lab{0, 0, kIdxTypeUbyte, 1};
  put_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (std::size_t l : data.labels) {
    if (l > 255) fail(ErrorCode::kInvalidArgument, "label " + std::to_string(l) + " does not fit a u8 IDX file");
    lab.push_back(static_cast<std::uint8_t>(l));
  }
  write_file(images, img);
  write_file(labels, lab);
}

float synthetic_pattern(std::size_t cls, std::size_t y, std::size_t x, std::size_t size) {
  switch (cls) {
    case 0: return y % 2 == 0 ? 1.0f : 0.0f;
    case 1: return x % 2 == 0 ? 1.0f : 0.0f;
    case 2: return (x + y) % 2 == 0 ? 1.0f : 0.0f;
    case 3: {
      const double c = (static_cast<double>(size) - 1.0) / 2.0;
      const double r = static_cast<double>(size) / 4.0;
      const double dy = static_cast<double>(y) - c, dx = static_cast<double>(x) - c;
      return dy * dy + dx * dx <= r * r ? 1.0f : 0.0f;
    }
    default: fail(ErrorCode::kInvalidArgument, "no synthetic pattern for class " + std::to_string(cls));
  }
}

cnn::Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2 || spec.classes > 4) fail(ErrorCode::kInvalidArgument, "synthetic data supports 2 to 4 classes");
  if (spec.per_class < 1) fail(ErrorCode::kInvalidArgument, "per-class count must be at least 1");
  if (spec.image_size < 4) fail(ErrorCode::kInvalidArgument, "image size must be at least 4");
  if (!(spec.noise >= 0.0)) fail(ErrorCode::kInvalidArgument, "noise sigma must be non-negative");
  const std::size_t n = spec.classes * spec.per_class;
  const std::size_t s = spec.image_size;
  Pcg32 rng(spec.seed);
  std::vector<float> values(n * s * s);
  cnn::Dataset data;
  data.class_count = spec.classes;
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i % spec.classes;
    data.labels[i] = cls;
    for (std::size_t y = 0; y < s; ++y) {
      for (std::size_t x = 0; x < s; ++x) {
        double v = synthetic_pattern(cls, y, x, s);
        if (spec.noise > 0.0) v += spec.noise * rng.normal();
        values[(i * s + y) * s + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  data.images = numgrad::Tensor({n, s, s, 1}, std::move(values));
  return data;
}

}  // namespace gr::bench
