#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "cbfed/fem.hpp"

namespace cbfed {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using SparseLu = Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>>;

/// Indices i with mask[i] == 0.
std::vector<int> free_indices(const std::vector<char>& mask);

/// The block of m with the given rows and columns, in the given order.
ColMatrix restrict_matrix(const SparseMatrix& m, const std::vector<int>& rows, const std::vector<int>& cols);

/// Replaces constrained rows and columns by the identity, in place.
void apply_dirichlet(SparseMatrix& m, const std::vector<char>& mask);

/// Factorizes m; throws LinearSolverError naming `what` on failure.
void factorize(SparseLu& lu, const ColMatrix& m, const char* what);

} // namespace cbfed
