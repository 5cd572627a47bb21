#include "cbfed/linalg.hpp"

#include <string>

#include "cbfed/errors.hpp"

namespace cbfed {

std::vector<int> free_indices(const std::vector<char>& mask)
{
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(mask.size()); ++i)
        if (!mask[i])
            out.push_back(i);
    return out;
}

ColMatrix restrict_matrix(const SparseMatrix& m, const std::vector<int>& rows, const std::vector<int>& cols)
{
    std::vector<int> col_map(m.cols(), -1);
    for (int k = 0; k < static_cast<int>(cols.size()); ++k)
        col_map[cols[k]] = k;
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < static_cast<int>(rows.size()); ++k)
        for (SparseMatrix::InnerIterator it(m, rows[k]); it; ++it)
            if (col_map[it.col()] >= 0)
                trip.emplace_back(k, col_map[it.col()], it.value());
    ColMatrix out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
    out.setFromTriplets(trip.begin(), trip.end());
    out.makeCompressed();
    return out;
}

void apply_dirichlet(SparseMatrix& m, const std::vector<char>& mask)
{
    for (int row = 0; row < m.outerSize(); ++row)
        for (SparseMatrix::InnerIterator it(m, row); it; ++it)
            if (mask[row] || mask[it.col()])
                it.valueRef() = (row == it.col()) ? 1.0 : 0.0;
}

void factorize(SparseLu& lu, const ColMatrix& m, const char* what)
{
    lu.compute(m);
    if (lu.info() != Eigen::Success)
        throw LinearSolverError(std::string(what) + ": sparse factorization failed: " + lu.lastErrorMessage());
}

} // namespace cbfed
