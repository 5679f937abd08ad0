#include "ifan/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ifan/error.hpp"

namespace ifan {

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << n << "," << c << "," << h << "," << w << ")";
  return os.str();
}

void check_shape(const Shape& shape) {
  if (shape.n < 1 || shape.c < 1 || shape.h < 1 || shape.w < 1) {
    throw ShapeError("invalid shape " + shape.str() + ": every dimension must be >= 1");
  }
}

Tensor4::Tensor4(Shape shape, double fill) : shape_(shape) {
  check_shape(shape);
  data_.assign(shape.numel(), fill);
}

Tensor4::Tensor4(Shape shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
  check_shape(shape);
  if (data_.size() != shape.numel()) {
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape.str());
  }
}

Tensor4 Tensor4::normal(Shape shape, double mean, double stddev, uint64_t seed) {
  if (!(stddev >= 0.0)) throw ContractError("normal init requires stddev >= 0");
  Tensor4 t(shape);
  if (stddev == 0.0) {
    t.fill(mean);
    return t;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(mean, stddev);
  for (double& v : t.data_) v = dist(rng);
  return t;
}

Tensor4 Tensor4::uniform(Shape shape, double lo, double hi, uint64_t seed) {
  Tensor4 t(shape);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : t.data_) v = dist(rng);
  return t;
}

void Tensor4::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor4::axpy(double alpha, const Tensor4& other) {
  require_same_shape(*this, other, "axpy");
  const double* src = other.data();
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * src[i];
}

void Tensor4::scale(double alpha) {
  for (double& v : data_) v *= alpha;
}

double Tensor4::sum() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

double Tensor4::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Tensor4::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Tensor4& a, const Tensor4& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace ifan
