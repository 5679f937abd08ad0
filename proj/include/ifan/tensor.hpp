#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ifan {

// (batch, channel, height, width); every dimension is at least 1.
struct Shape {
  int64_t n = 1;
  int64_t c = 1;
  int64_t h = 1;
  int64_t w = 1;

  std::size_t numel() const { return static_cast<std::size_t>(n * c * h * w); }
  std::size_t plane() const { return static_cast<std::size_t>(h * w); }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

// Dense row-major NCHW array of doubles.
class Tensor4 {
 public:
  Tensor4() : Tensor4(Shape{}) {}
  explicit Tensor4(Shape shape, double fill = 0.0);
  Tensor4(Shape shape, std::vector<double> values);

  static Tensor4 zeros(Shape shape) { return Tensor4(shape); }
  static Tensor4 constant(Shape shape, double v) { return Tensor4(shape, v); }
  // Same (shape, seed) always yields bit-identical data.
  static Tensor4 normal(Shape shape, double mean, double stddev, uint64_t seed);
  static Tensor4 uniform(Shape shape, double lo, double hi, uint64_t seed);

  const Shape& shape() const { return shape_; }
  int64_t n() const { return shape_.n; }
  int64_t c() const { return shape_.c; }
  int64_t h() const { return shape_.h; }
  int64_t w() const { return shape_.w; }
  std::size_t numel() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int64_t b, int64_t ch, int64_t y, int64_t x) const {
    return static_cast<std::size_t>(((b * shape_.c + ch) * shape_.h + y) * shape_.w + x);
  }
  double& at(int64_t b, int64_t ch, int64_t y, int64_t x) { return data_[index(b, ch, y, x)]; }
  double at(int64_t b, int64_t ch, int64_t y, int64_t x) const { return data_[index(b, ch, y, x)]; }

  double* plane(int64_t b, int64_t ch) { return data_.data() + index(b, ch, 0, 0); }
  const double* plane(int64_t b, int64_t ch) const { return data_.data() + index(b, ch, 0, 0); }

  void fill(double v);
  // this += alpha * other
  void axpy(double alpha, const Tensor4& other);
  void scale(double alpha);

  double sum() const;
  double max_abs() const;
  bool all_finite() const;

  friend bool operator==(const Tensor4& a, const Tensor4& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

void check_shape(const Shape& shape);
void require_same_shape(const Tensor4& a, const Tensor4& b, const char* what);
double max_abs_diff(const Tensor4& a, const Tensor4& b);

}  // namespace ifan
