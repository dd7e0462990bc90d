#pragma once

#include <vector>

#include "epicast/tensor.hpp"

namespace epicast::linalg {

// Least squares min ||A x - b|| via column-pivoted QR. Rank-deficient systems
// get the basic solution (dependent columns zeroed), so consistent degenerate
// designs still reproduce their data exactly.
std::vector<double> solve_least_squares(const Tensor& a,
                                        const std::vector<double>& rhs);

// Eigendecomposition of a symmetric matrix; eigenvalues descending,
// eigenvectors as the columns of `vectors` in matching order.
struct SymmetricEigen {
  std::vector<double> values;
  Tensor vectors;
};
SymmetricEigen symmetric_eigen(const Tensor& sym);

}  // namespace epicast::linalg
