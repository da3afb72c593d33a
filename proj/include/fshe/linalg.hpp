#ifndef FSHE_LINALG_HPP
#define FSHE_LINALG_HPP

#include <Eigen/Dense>
#include <lapacke.h>

#include <string>
#include <vector>

#include "fshe/errors.hpp"

namespace fshe {

struct SymmetricEigenpairs {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // orthonormal columns
};

/// Lowest `count` eigenpairs of a dense symmetric matrix (LAPACK dsyevr, index range).
inline SymmetricEigenpairs lowest_eigenpairs(Eigen::MatrixXd a, int count) {
  const auto n = static_cast<lapack_int>(a.rows());
  if (a.cols() != a.rows()) throw DomainError("eigenproblem matrix must be square");
  if (count < 1 || count > n) throw DomainError("requested " + std::to_string(count) + " eigenpairs of a " + std::to_string(n) + "x" + std::to_string(n) + " problem");
  lapack_int found = 0;
  SymmetricEigenpairs out;
  Eigen::VectorXd w(n);
  out.vectors.resize(n, count);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(count));
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', count == n ? 'A' : 'I', 'L', n, a.data(), n, 0.0, 0.0, 1, count,
                                         0.0, &found, w.data(), out.vectors.data(), n, support.data());
  if (info != 0 || found != count) throw NumericalError("dsyevr failed with info " + std::to_string(info));
  out.values = w.head(count);
  return out;
}

}  // namespace fshe

#endif  // FSHE_LINALG_HPP
