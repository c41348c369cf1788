#include "dcitl/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "dcitl/common/error.hpp"

namespace dcitl::nn {

std::size_t shape_volume(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one axis");
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive");
    n *= e;
  }
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_volume(shape_)) {
    throw ShapeError("data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string());
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) throw ShapeError("axis out of range for " + shape_string());
  return shape_[axis];
}

std::size_t Tensor::row_size() const noexcept {
  return shape_.empty() ? 0 : data_.size() / shape_[0];
}

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t n = row_size();
  return std::span<double>(data_).subspan(r * n, n);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t n = row_size();
  return std::span<const double>(data_).subspan(r * n, n);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t count) const {
  if (rank() == 0 || begin + count > shape_[0] || count == 0) {
    throw ShapeError("row slice out of range for " + shape_string());
  }
  std::vector<std::size_t> shape = shape_;
  shape[0] = count;
  const std::size_t n = row_size();
  std::vector<double> values(data_.begin() + static_cast<std::ptrdiff_t>(begin * n),
                             data_.begin() + static_cast<std::ptrdiff_t>((begin + count) * n));
  return Tensor(std::move(shape), std::move(values));
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  return a.size() == 0 ||
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw ShapeError("cannot stack an empty row list");
  std::vector<std::size_t> shape{rows.size()};
  shape.insert(shape.end(), rows[0].shape().begin(), rows[0].shape().end());
  std::vector<double> values;
  values.reserve(rows.size() * rows[0].size());
  for (const Tensor& r : rows) {
    if (r.shape() != rows[0].shape()) throw ShapeError("stack_rows: ragged rows");
    values.insert(values.end(), r.data().begin(), r.data().end());
  }
  return Tensor(std::move(shape), std::move(values));
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || a.row_size() != b.row_size()) {
    throw ShapeError("concat_rows: " + a.shape_string() + " vs " + b.shape_string());
  }
  std::vector<std::size_t> shape = a.shape();
  shape[0] += b.dim(0);
  std::vector<double> values(a.data().begin(), a.data().end());
  values.insert(values.end(), b.data().begin(), b.data().end());
  return Tensor(std::move(shape), std::move(values));
}

}  // namespace dcitl::nn
