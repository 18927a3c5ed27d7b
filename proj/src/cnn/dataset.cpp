#include "gr/cnn/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "gr/error.hpp"

namespace gr::cnn {

numgrad::Shape Dataset::sample_shape() const {
  const auto& s = images.shape();
  return numgrad::Shape(s.begin() + 1, s.end());
}

std::size_t Dataset::sample_size() const { return numgrad::element_count(sample_shape()); }

std::span<const float> Dataset::pixels(std::size_t i) const {
  const std::size_t n = sample_size();
  return images.values().subspan(i * n, n);
}

numgrad::Tensor Dataset::sample(std::size_t i) const {
  const auto p = pixels(i);
  return numgrad::Tensor(sample_shape(), std::vector<float>(p.begin(), p.end()));
}

void Dataset::validate() const {
  if (labels.empty()) fail(ErrorCode::kEmptyDataset, "dataset has no samples");
  if (images.rank() != 4 || images.shape()[0] != labels.size()) {
    fail(ErrorCode::kCountMismatch, "images " + numgrad::shape_string(images.shape()) + " vs " +
                                        std::to_string(labels.size()) + " labels");
  }
  if (class_count < 2) fail(ErrorCode::kInvalidArgument, "class count must be at least 2");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_count) {
      fail(ErrorCode::kInvalidArgument, "label " + std::to_string(labels[i]) + " at index " +
                                            std::to_string(i) + " exceeds class count");
    }
  }
  for (float v : images.values()) {
    if (!(v >= 0.0f && v <= 1.0f)) fail(ErrorCode::kInvalidArgument, "pixel outside [0, 1]");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  if (indices.empty()) fail(ErrorCode::kEmptyDataset, "empty subset");
  const std::size_t n = sample_size();
  std::vector<float> values;
  values.reserve(indices.size() * n);
  Dataset out;
  out.class_count = class_count;
  out.labels.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= size()) fail(ErrorCode::kInvalidArgument, "subset index out of range");
    const auto p = pixels(idx);
    values.insert(values.end(), p.begin(), p.end());
    out.labels.push_back(labels[idx]);
  }
  numgrad::Shape shape = images.shape();
  shape[0] = indices.size();
  out.images = numgrad::Tensor(std::move(shape), std::move(values));
  return out;
}

Dataset concat(const Dataset& first, const Dataset& second) {
  if (first.sample_shape() != second.sample_shape()) {
    fail(ErrorCode::kShapeMismatch, "cannot concatenate datasets with different sample shapes");
  }
  if (first.class_count != second.class_count) {
    fail(ErrorCode::kInvalidArgument, "cannot concatenate datasets with different class counts");
  }
  std::vector<float> values(first.images.values().begin(), first.images.values().end());
  values.insert(values.end(), second.images.values().begin(), second.images.values().end());
  Dataset out;
  out.class_count = first.class_count;
  out.labels = first.labels;
  out.labels.insert(out.labels.end(), second.labels.begin(), second.labels.end());
  numgrad::Shape shape = first.images.shape();
  shape[0] = out.labels.size();
  out.images = numgrad::Tensor(std::move(shape), std::move(values));
  return out;
}

}  // namespace gr::cnn
