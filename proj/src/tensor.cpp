#include "epicast/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "epicast/errors.hpp"

namespace epicast {

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(),
                     [](double v) { return std::isfinite(v); });
}

static void check_2d(const Tensor& t, const char* name) {
  if (t.ndim() != 2)
    throw ValidationError(std::string("matmul: ") + name + " must be 2-D, got " +
                          t.shape_str());
}

void add_matmul(const Tensor& a, const Tensor& b, Tensor& c) {
  check_2d(a, "lhs");
  check_2d(b, "rhs");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw ValidationError("matmul: inner dimensions differ, lhs " + a.shape_str() +
                          " vs rhs " + b.shape_str());
  if (c.shape != std::vector<std::size_t>{m, n})
    throw ValidationError("matmul: output shape " + c.shape_str() + " != expected [" +
                          std::to_string(m) + " x " + std::to_string(n) + "]");
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.row(p);
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "lhs");
  check_2d(b, "rhs");
  Tensor c({a.dim(0), b.dim(1)});
  add_matmul(a, b, c);
  return c;
}

Tensor transpose(const Tensor& a) {
  check_2d(a, "transpose");
  Tensor t({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

void add_matmul_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  check_2d(a, "lhs");
  check_2d(b, "rhs");
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw ValidationError("matmul_tn: row counts differ, lhs " + a.shape_str() +
                          " vs rhs " + b.shape_str());
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a.row(p);
    const double* brow = b.row(p);
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c.row(i);
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void add_matmul_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  check_2d(a, "lhs");
  check_2d(b, "rhs");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k)
    throw ValidationError("matmul_nt: column counts differ, lhs " + a.shape_str() +
                          " vs rhs " + b.shape_str());
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

}  // namespace epicast
