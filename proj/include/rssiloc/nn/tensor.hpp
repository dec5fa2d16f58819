#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rssiloc::nn {

// Dense row-major tensor of 64-bit reals; the only value type the neural
// core traffics in.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<size_t> shape);
  Tensor(std::vector<size_t> shape, std::vector<double> values);

  const std::vector<size_t>& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t dim(size_t i) const { return shape_[i]; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](size_t i) { return data_[i]; }
  const double& operator[](size_t i) const { return data_[i]; }
  double& operator()(size_t i, size_t j) { return data_[i * shape_[1] + j]; }
  const double& operator()(size_t i, size_t j) const {
    return data_[i * shape_[1] + j];
  }
  double& operator()(size_t i, size_t j, size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const double& operator()(size_t i, size_t j, size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double& operator()(size_t i, size_t j, size_t k, size_t l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  const double& operator()(size_t i, size_t j, size_t k, size_t l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  // Same data, new shape; sizes must agree.
  Tensor reshaped(std::vector<size_t> shape) const;

  void fill(double v);
  bool all_finite() const;

 private:
  std::vector<size_t> shape_;
  std::vector<double> data_;
};

std::string shape_str(const std::vector<size_t>& shape);
std::string shape_str(const Tensor& t);

// C = A * B for 2-D tensors; throws std::invalid_argument naming both shapes
// on mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);
// transpose(A) * B with A [k, m], B [k, n] -> [m, n].
Tensor matmul_tn(const Tensor& a, const Tensor& b);
// A * transpose(B) with A [m, k], B [n, k] -> [m, n].
Tensor matmul_nt(const Tensor& a, const Tensor& b);

}  // namespace rssiloc::nn
