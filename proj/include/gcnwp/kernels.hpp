#pragma once

// Dense and sparse-dense products used by the GCN forward/backward passes.
//
// Every kernel exists twice: a serial reference and an OpenMP version that
// splits work by output row. Each output element is accumulated in the same
// order by both, so results are bitwise identical regardless of thread count.

#include "gcnwp/matrix.hpp"

namespace gcnwp::kernels {

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix spmm(const SparseMatrix& s, const Matrix& b);  // s * b
SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b);
}  // namespace serial

namespace parallel {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix spmm(const SparseMatrix& s, const Matrix& b);
}  // namespace parallel

/// Products used by the library; forwards to the OpenMP kernels when built
/// with OpenMP, otherwise to the serial reference.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix spmm(const SparseMatrix& s, const Matrix& b);

/// Threads used by the parallel kernels and grid searches. n == 0 keeps the
/// OpenMP default (all available cores).
void set_threads(int n);
int max_threads();

}  // namespace gcnwp::kernels
