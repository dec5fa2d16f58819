#include "rssiloc/nn/tensor.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rssiloc::nn {

namespace {

size_t shape_product(const std::vector<size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), size_t{1},
                         std::multiplies<>());
}

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

void require_2d(const Tensor& t, const char* who) {
  if (t.rank() != 2)
    throw std::invalid_argument(std::string(who) + ": expected a 2-D tensor, got " +
                                shape_str(t));
}

[[noreturn]] void shape_error(const char* who, const Tensor& a,
                              const Tensor& b) {
  throw std::invalid_argument(std::string(who) + ": incompatible shapes " +
                              shape_str(a) + " and " + shape_str(b));
}

}  // namespace

Tensor::Tensor(std::vector<size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_product(shape_))
    throw std::invalid_argument("tensor: value count " +
                                std::to_string(data_.size()) +
                                " does not match shape " + shape_str(shape_));
}

Tensor Tensor::reshaped(std::vector<size_t> shape) const {
  if (shape_product(shape) != size())
    throw std::invalid_argument("reshape: size mismatch, " + shape_str(shape_) +
                                " -> " + shape_str(shape));
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = data_;
  return t;
}

void Tensor::fill(double v) {
  std::fill(data_.begin(), data_.end(), v);
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string shape_str(const std::vector<size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i)
    os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

std::string shape_str(const Tensor& t) {
  return shape_str(t.shape());
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.dim(1) != b.dim(0)) shape_error("matmul", a, b);
  Tensor c({a.dim(0), b.dim(1)});
  Map(c.data(), a.dim(0), b.dim(1)).noalias() =
      ConstMap(a.data(), a.dim(0), a.dim(1)) *
      ConstMap(b.data(), b.dim(0), b.dim(1));
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul_tn");
  require_2d(b, "matmul_tn");
  if (a.dim(0) != b.dim(0)) shape_error("matmul_tn", a, b);
  Tensor c({a.dim(1), b.dim(1)});
  Map(c.data(), a.dim(1), b.dim(1)).noalias() =
      ConstMap(a.data(), a.dim(0), a.dim(1)).transpose() *
      ConstMap(b.data(), b.dim(0), b.dim(1));
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul_nt");
  require_2d(b, "matmul_nt");
  if (a.dim(1) != b.dim(1)) shape_error("matmul_nt", a, b);
  Tensor c({a.dim(0), b.dim(0)});
  Map(c.data(), a.dim(0), b.dim(0)).noalias() =
      ConstMap(a.data(), a.dim(0), a.dim(1)) *
      ConstMap(b.data(), b.dim(0), b.dim(1)).transpose();
  return c;
}

}  // namespace rssiloc::nn
