#pragma once

#include <cassert>
#include <cstddef>
#include <string>
#include <vector>

namespace epicast {

// Dense row-major tensor of doubles. All numerics in the project run in
// 64-bit floats so gradient checks and byte-level determinism stay clean.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shp)
      : shape(std::move(shp)), data(numel_of(shape), 0.0) {}

  Tensor(std::vector<std::size_t> shp, std::vector<double> values)
      : shape(std::move(shp)), data(std::move(values)) {
    assert(numel_of(shape) == data.size());
  }

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  std::size_t numel() const { return data.size(); }
  std::size_t ndim() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape[i]; }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  double& at(std::size_t i, std::size_t j) {
    assert(ndim() == 2);
    return data[i * shape[1] + j];
  }
  double at(std::size_t i, std::size_t j) const {
    assert(ndim() == 2);
    return data[i * shape[1] + j];
  }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    assert(ndim() == 3);
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    assert(ndim() == 3);
    return data[(i * shape[1] + j) * shape[2] + k];
  }

  // Pointer to row i of a 2-D tensor.
  double* row(std::size_t i) { return data.data() + i * shape[1]; }
  const double* row(std::size_t i) const { return data.data() + i * shape[1]; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  std::string shape_str() const;
  bool all_finite() const;
};

// C = A * B for 2-D tensors, accumulating into a fresh tensor.
Tensor matmul(const Tensor& a, const Tensor& b);
// Transpose of a 2-D tensor.
Tensor transpose(const Tensor& a);
// C += A^T * B. A is [k x m], B is [k x n], C is [m x n].
void add_matmul_tn(const Tensor& a, const Tensor& b, Tensor& c);
// C += A * B^T. A is [m x k], B is [n x k], C is [m x n].
void add_matmul_nt(const Tensor& a, const Tensor& b, Tensor& c);
// C += A * B.
void add_matmul(const Tensor& a, const Tensor& b, Tensor& c);

}  // namespace epicast
