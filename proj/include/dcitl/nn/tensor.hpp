#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dcitl::nn {

// Dense row-major array of doubles. Every extent is positive and
// data().size() == product of extents.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);
  static Tensor vector(std::initializer_list<double> values);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  // Slice along the leading axis.
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;
  std::size_t row_size() const noexcept;

  void fill(double v);
  bool all_finite() const noexcept;
  Tensor reshaped(std::vector<std::size_t> shape) const;

  // Copies rows [begin, begin + count) of the leading axis.
  Tensor slice_rows(std::size_t begin, std::size_t count) const;

  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Element count implied by a shape; rejects zero extents.
std::size_t shape_volume(const std::vector<std::size_t>& shape);

// Bitwise equality, distinguishing -0.0 from 0.0.
bool bit_equal(const Tensor& a, const Tensor& b);

// Stacks equally-shaped rows into a tensor with a new leading batch axis.
Tensor stack_rows(std::span<const Tensor> rows);

// Concatenates along the leading axis.
Tensor concat_rows(const Tensor& a, const Tensor& b);

}  // namespace dcitl::nn
