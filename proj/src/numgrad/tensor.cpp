#include "gr/numgrad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gr/error.hpp"

namespace gr::numgrad {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ')';
  return out.str();
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) fail(ErrorCode::kShapeMismatch, "tensor shape must have rank >= 1");
  for (std::size_t d : shape) {
    if (d == 0) fail(ErrorCode::kShapeMismatch, "zero extent in shape " + shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  values_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_shape(shape_);
  if (element_count(shape_) != values_.size()) {
    fail(ErrorCode::kShapeMismatch, "shape " + shape_string(shape_) + " holds " +
                                        std::to_string(element_count(shape_)) + " values, got " +
                                        std::to_string(values_.size()));
  }
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
}

void Tensor::fill(float value) { std::fill(values_.begin(), values_.end(), value); }

void Tensor::reshape(Shape shape) {
  check_shape(shape);
  if (element_count(shape) != values_.size()) {
    fail(ErrorCode::kShapeMismatch,
         "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
}

}  // namespace gr::numgrad
