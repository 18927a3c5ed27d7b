#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gr/numgrad/tensor.hpp"

namespace gr::cnn {

/// Images (N, H, W, C) with pixels in [0, 1] and one class index per image.
struct Dataset {
  numgrad::Tensor images;
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;

  std::size_t size() const noexcept { return labels.size(); }
  numgrad::Shape sample_shape() const;
  std::size_t sample_size() const;
  std::span<const float> pixels(std::size_t i) const;
  numgrad::Tensor sample(std::size_t i) const;

  /// Throws unless N >= 1, labels < class_count and pixels lie in [0, 1].
  void validate() const;

  /// Rows `indices` in the given order.
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// `first` followed by `second`; both must share sample shape and class count.
Dataset concat(const Dataset& first, const Dataset& second);

}  // namespace gr::cnn
