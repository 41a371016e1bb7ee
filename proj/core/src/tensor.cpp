#include "hinge/tensor.hpp"

#include <cmath>
#include <cstring>

namespace hinge {

std::string Shape::str() const {
  std::string s = "[";
  for (int i = 0; i < rank; ++i) s += (i ? "," : "") + std::to_string(d[i]);
  return s + "]";
}

Tensor Tensor::from(Shape s, std::vector<float> values) {
  if (values.size() != s.numel())
    throw ShapeMismatchError("from(): " + std::to_string(values.size()) + " values for " +
                             s.str());
  Tensor t;
  t.shape_ = s;
  t.data_ = std::make_shared<std::vector<float>>(std::move(values));
  return t;
}

Tensor Tensor::glorot(Shape s, Rng& rng) {
  // fan_in/fan_out are the two outermost dims; a vector is treated as a
  // single-row matrix so biases initialized this way stay small.
  uint32_t fan_in = s.rank >= 2 ? s.d[s.rank - 2] : 1;
  uint32_t fan_out = s.d[s.rank - 1];
  if (s.rank == 3) fan_in *= s.d[0];
  float a = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
  Tensor t(s);
  for (size_t i = 0; i < t.size(); ++i) t.at(i) = rng.next_symmetric(a);
  return t;
}

Tensor Tensor::clone() const {
  Tensor t;
  t.shape_ = shape_;
  t.data_ = std::make_shared<std::vector<float>>(*data_);
  return t;
}

Tensor Tensor::reshaped(Shape s) const {
  if (s.numel() != size())
    throw ShapeMismatchError("reshape " + shape_.str() + " -> " + s.str());
  Tensor t;
  t.shape_ = s;
  t.data_ = data_;
  return t;
}

void Tensor::zero() {
  if (data_) std::memset(data_->data(), 0, data_->size() * sizeof(float));
}

void Tensor::add_in_place(const Tensor& other) {
  if (!(shape_ == other.shape_)) throw ShapeMismatchError(shape_.str() + " += " + other.shape_.str());
  float* a = data();
  const float* b = other.data();
  for (size_t i = 0; i < size(); ++i) a[i] += b[i];
}

}  // namespace hinge
