#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace psep {

/// Dense row-major array of doubles. Signals use (channels, time); conv
/// weights use (out, in, kernel); scalars are (1).
class Tensor {
 public:
  using Shape = std::vector<std::size_t>;

  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor signal(std::span<const double> samples);  // (1, n)

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  /// Rank-2 helpers.
  std::size_t channels() const { return shape_.at(0); }
  std::size_t length() const { return shape_.at(1); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t c, std::size_t t) { return data_[c * shape_[1] + t]; }
  double at(std::size_t c, std::size_t t) const { return data_[c * shape_[1] + t]; }

  /// Pointer to the start of a channel row of a rank-2 tensor.
  double* row(std::size_t c) { return data_.data() + c * shape_[1]; }
  const double* row(std::size_t c) const { return data_.data() + c * shape_[1]; }

  double item() const;
  bool all_finite() const;
  void fill(double value);

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t shape_size(const Tensor::Shape& shape);
std::string shape_string(const Tensor::Shape& shape);

}  // namespace psep
