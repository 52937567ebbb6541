#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

namespace vech {

using Vec = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Assembled sparse operator. Rows are test-function dofs, columns trial dofs.
using SparseOperator = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplets = std::vector<Eigen::Triplet<double>>;

inline SparseOperator from_triplets(int rows, int cols, const Triplets& t) {
  SparseOperator a(rows, cols);
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  return a;
}

}  // namespace vech
