#pragma once

#include <string>

#include <Eigen/Sparse>

#include "uldg/assembly.hpp"

namespace uldg {

using ComplexSparse = Eigen::SparseMatrix<Complex>;

struct SolveReport {
    double residual = 0.0; ///< ||Ax - b|| / ||b||
    double factor_seconds = 0.0;
    double solve_seconds = 0.0;
    double peak_memory_bytes = 0.0; ///< factorization workspace reported by the LU
    double rcond = 0.0;             ///< reciprocal pivot-ratio estimate
    long lu_nonzeros = 0;
};

struct SolveResult {
    Eigen::VectorXcd x;
    SolveReport report;
};

/// Sparse LU with partial pivoting (UMFPACK). A real matrix with a complex
/// right-hand side is factored once and solved for both parts. Throws
/// SingularMatrix or ResidualTooLarge.
SolveResult solve(const RealSparse& matrix, const Eigen::VectorXcd& rhs, double tolerance = 1e-10);
SolveResult solve(const ComplexSparse& matrix, const Eigen::VectorXcd& rhs, double tolerance = 1e-10);
SolveResult solve(const AssembledSystem& system, double tolerance = 1e-10);

} // namespace uldg
