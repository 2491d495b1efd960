#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chase/dense_matrix.hpp"

namespace chase::core
{

enum class Op
{
    NoTrans,
    Trans
};

/// C <- alpha * op(A) * B + beta * C, written into the view.
///
/// Every output entry is accumulated over the inner index in ascending order,
/// so the result does not depend on how columns are split across threads.
/// When beta == 0 the previous contents of C are ignored (NaN-safe).
void gemm(double alpha, ConstMatrixView a, Op op_a, ConstMatrixView b, double beta, MatrixView c);

/// Value-returning form: alpha * op(A) * B + beta * C.
DenseMatrix local_gemm(double alpha, const DenseMatrix& a, bool transpose_a, const DenseMatrix& b, double beta,
                       DenseMatrix c);

/// Convenience: op(A) * B.
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b, Op op_a = Op::NoTrans);

/// Threads used by gemm for large products. Never changes results.
void set_num_threads(unsigned n);
unsigned num_threads();

struct QrResult
{
    DenseMatrix q;
    /// Columns whose Householder reflector norm fell under the rank threshold.
    std::vector<std::size_t> deficient;
};

/// Overwrites M with its thin Q factor; returns the rank-deficient columns
/// (their Q columns are still orthonormal, just unrelated to M).
std::vector<std::size_t> householder_qr_inplace(MatrixView m);

/// Thin Householder QR without throwing on rank deficiency; the caller inspects `deficient`.
QrResult householder_qr_checked(const DenseMatrix& m);

/// Thin Q factor of M (rows >= cols). Throws RankError on dependent columns.
DenseMatrix householder_qr(const DenseMatrix& m);

struct EigenPairs
{
    std::vector<double> values; // ascending
    DenseMatrix vectors;
};

/// Full eigendecomposition of a symmetric matrix: Householder tridiagonalization
/// followed by implicit QL with Wilkinson shifts. Input is symmetrized first.
EigenPairs small_symmetric_eig(const DenseMatrix& g);

/// Eigenvalues of the symmetric tridiagonal (diag, offdiag), ascending.
/// `offdiag` has length diag.size() - 1. Optionally returns eigenvectors of T.
EigenPairs tridiagonal_eig(std::span<const double> diag, std::span<const double> offdiag);

std::vector<double> column_norms(const DenseMatrix& m);
std::vector<double> column_norms(ConstMatrixView m);

double frobenius_norm(const DenseMatrix& m);
double max_abs(const DenseMatrix& m);
/// max |M^T M - I| over all entries.
double orthogonality_error(ConstMatrixView m);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);

} // namespace chase::core
