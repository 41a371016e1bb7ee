#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hinge/error.hpp"
#include "hinge/rng.hpp"

namespace hinge {

// Dense shapes up to rank 3, which covers everything the pipeline needs:
// scalars [1], vectors [n], matrices [r,c], and path stacks [L,I,E].
struct Shape {
  uint8_t rank = 1;
  uint32_t d[3] = {1, 1, 1};

  static Shape scalar() { return {1, {1, 1, 1}}; }
  static Shape vec(uint32_t n) { return {1, {n, 1, 1}}; }
  static Shape mat(uint32_t r, uint32_t c) { return {2, {r, c, 1}}; }
  static Shape cube(uint32_t a, uint32_t b, uint32_t c) { return {3, {a, b, c}}; }

  size_t numel() const {
    size_t n = 1;
    for (int i = 0; i < rank; ++i) n *= d[i];
    return n;
  }
  // Size of the last axis (the embedding axis for rank >= 2).
  uint32_t inner() const { return d[rank - 1]; }
  bool operator==(const Shape& o) const {
    if (rank != o.rank) return false;
    for (int i = 0; i < rank; ++i)
      if (d[i] != o.d[i]) return false;
    return true;
  }
  std::string str() const;
};

// Value container: 32-bit floats, row-major, cheap to copy (shared storage).
// Reductions that feed it accumulate in 64-bit; see tape.cpp and fft.cpp.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape s, float fill = 0.0f)
      : shape_(s), data_(std::make_shared<std::vector<float>>(s.numel(), fill)) {}

  static Tensor from(Shape s, std::vector<float> values);
  static Tensor glorot(Shape s, Rng& rng);  // uniform +-sqrt(6/(fan_in+fan_out))

  bool empty() const { return data_ == nullptr; }
  const Shape& shape() const { return shape_; }
  size_t size() const { return data_ ? data_->size() : 0; }
  float* data() { return data_->data(); }
  const float* data() const { return data_->data(); }

  float& at(size_t i) { return (*data_)[i]; }
  float at(size_t i) const { return (*data_)[i]; }
  float& at(size_t i, size_t j) { return (*data_)[i * shape_.d[1] + j]; }
  float at(size_t i, size_t j) const { return (*data_)[i * shape_.d[1] + j]; }
  float& at(size_t i, size_t j, size_t k) {
    return (*data_)[(i * shape_.d[1] + j) * shape_.d[2] + k];
  }
  float at(size_t i, size_t j, size_t k) const {
    return (*data_)[(i * shape_.d[1] + j) * shape_.d[2] + k];
  }

  Tensor clone() const;
  // Same storage, new shape (numel must match).
  Tensor reshaped(Shape s) const;
  void zero();
  // this += other (shapes must match).
  void add_in_place(const Tensor& other);

 private:
  Shape shape_ = Shape::scalar();
  std::shared_ptr<std::vector<float>> data_;
};

}  // namespace hinge
