#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "dwell/errors.hpp"
#include "dwell/grid.hpp"

namespace dwell {

//! Symmetric sparse matrix in CSR form. Rows are built sorted by column so
//! assembly from the same inputs is reproducible bit for bit.
struct SparseOperator {
    std::size_t dim = 0;
    std::vector<std::size_t> row_ptr;  // dim + 1 entries
    std::vector<std::size_t> col;
    std::vector<double> val;

    void apply(const double* x, double* y) const {
        for (std::size_t i = 0; i < dim; ++i) {
            double s = 0.0;
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
            y[i] = s;
        }
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y(dim);
        apply(x.data(), y.data());
        return y;
    }

    GridFunction apply(const GridFunction& f) const {
        if (f.values.size() != dim) throw GridMismatch();
        GridFunction out(f.grid);
        apply(f.values.data(), out.values.data());
        return out;
    }

    double diagonal(std::size_t i) const {
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
            if (col[k] == i) return val[k];
        return 0.0;
    }

    //! Gershgorin bounds [lo, hi] enclosing the spectrum.
    std::pair<double, double> gershgorin() const {
        double lo = 0.0, hi = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            double diag = 0.0, off = 0.0;
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
                if (col[k] == i)
                    diag = val[k];
                else
                    off += std::abs(val[k]);
            }
            lo = i == 0 ? diag - off : std::min(lo, diag - off);
            hi = i == 0 ? diag + off : std::max(hi, diag + off);
        }
        return {lo, hi};
    }

    //! A + s * Identity, as a new operator.
    SparseOperator shifted(double s) const {
        SparseOperator out = *this;
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t k = out.row_ptr[i]; k < out.row_ptr[i + 1]; ++k)
                if (out.col[k] == i) out.val[k] += s;
        return out;
    }
};

//! Build from per-row (column, value) pairs; used by tests for small custom
//! operators. Entries within a row must be unique.
inline SparseOperator
operator_from_rows(const std::vector<std::vector<std::pair<std::size_t, double>>>& rows) {
    SparseOperator A;
    A.dim = rows.size();
    A.row_ptr.assign(A.dim + 1, 0);
    for (std::size_t i = 0; i < A.dim; ++i) A.row_ptr[i + 1] = A.row_ptr[i] + rows[i].size();
    A.col.resize(A.row_ptr.back());
    A.val.resize(A.row_ptr.back());
    for (std::size_t i = 0; i < A.dim; ++i) {
        auto sorted = rows[i];
        std::sort(sorted.begin(), sorted.end());
        std::size_t k = A.row_ptr[i];
        for (const auto& [c, v] : sorted) {
            A.col[k] = c;
            A.val[k] = v;
            ++k;
        }
    }
    return A;
}

//! Standard (2 nu + 1)-point second-order stencil for -Laplacian with
//! Dirichlet walls one spacing outside the stored nodes.
inline SparseOperator discrete_laplacian(const Grid& grid) {
    const double w = 1.0 / (grid.h * grid.h);
    const int n1 = grid.n[0], n2 = grid.n[1];
    SparseOperator A;
    A.dim = grid.size();
    A.row_ptr.reserve(A.dim + 1);
    A.row_ptr.push_back(0);
    A.col.reserve(A.dim * (2 * grid.nu + 1));
    A.val.reserve(A.dim * (2 * grid.nu + 1));
    for (int i1 = 0; i1 < n1; ++i1) {
        for (int i2 = 0; i2 < n2; ++i2) {
            const std::size_t row = grid.index(i1, i2);
            if (i1 > 0) {
                A.col.push_back(row - n2);
                A.val.push_back(-w);
            }
            if (grid.nu == 2 && i2 > 0) {
                A.col.push_back(row - 1);
                A.val.push_back(-w);
            }
            A.col.push_back(row);
            A.val.push_back(2.0 * grid.nu * w);
            if (grid.nu == 2 && i2 < n2 - 1) {
                A.col.push_back(row + 1);
                A.val.push_back(-w);
            }
            if (i1 < n1 - 1) {
                A.col.push_back(row + n2);
                A.val.push_back(-w);
            }
            A.row_ptr.push_back(A.col.size());
        }
    }
    return A;
}

//! H = -Laplacian + diag(pot). The potential samples already carry lambda_sq.
inline SparseOperator assemble_hamiltonian(const Grid& grid, const GridFunction& pot) {
    if (!pot.grid.same_as(grid)) throw GridMismatch();
    SparseOperator A = discrete_laplacian(grid);
    for (std::size_t i = 0; i < A.dim; ++i)
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            if (A.col[k] == i) A.val[k] += pot.values[i];
    return A;
}

}  // namespace dwell
