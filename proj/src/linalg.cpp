#include "epicast/linalg.hpp"

#include <Eigen/Dense>

#include "epicast/errors.hpp"

namespace epicast::linalg {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<double> solve_least_squares(const Tensor& a,
                                        const std::vector<double>& rhs) {
  if (a.ndim() != 2)
    throw ValidationError("solve_least_squares: matrix must be 2-D, got " +
                          a.shape_str());
  if (a.dim(0) != rhs.size())
    throw ValidationError("solve_least_squares: " + std::to_string(a.dim(0)) +
                          " rows vs " + std::to_string(rhs.size()) + " rhs values");
  Eigen::Map<const RowMajorMatrix> am(a.data.data(),
                                      static_cast<Eigen::Index>(a.dim(0)),
                                      static_cast<Eigen::Index>(a.dim(1)));
  Eigen::Map<const Eigen::VectorXd> bm(rhs.data(),
                                       static_cast<Eigen::Index>(rhs.size()));
  Eigen::VectorXd x = am.colPivHouseholderQr().solve(bm);
  return {x.data(), x.data() + x.size()};
}

SymmetricEigen symmetric_eigen(const Tensor& sym) {
  if (sym.ndim() != 2 || sym.dim(0) != sym.dim(1))
    throw ValidationError("symmetric_eigen: matrix must be square, got " +
                          sym.shape_str());
  const auto n = static_cast<Eigen::Index>(sym.dim(0));
  Eigen::Map<const RowMajorMatrix> m(sym.data.data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("symmetric_eigen: eigensolver failed to converge");

  SymmetricEigen out;
  out.values.resize(static_cast<std::size_t>(n));
  out.vectors = Tensor({sym.dim(0), sym.dim(1)});
  // Eigen returns ascending order; flip to descending.
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = n - 1 - j;
    out.values[static_cast<std::size_t>(j)] = solver.eigenvalues()(src);
    for (Eigen::Index i = 0; i < n; ++i)
      out.vectors.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          solver.eigenvectors()(i, src);
  }
  return out;
}

}  // namespace epicast::linalg
