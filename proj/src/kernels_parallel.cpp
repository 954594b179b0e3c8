#include "gcnwp/error.hpp"
#include "gcnwp/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gcnwp::kernels {

namespace parallel {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ContractError("matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        double* out = c.row(ui).data();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(ui, k);
            const double* brow = b.row(k).data();
            for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw ContractError("matmul_tn: row counts differ");
    Matrix c(a.cols(), b.cols());
    const auto rows = static_cast<std::ptrdiff_t>(a.cols());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        double* out = c.row(ui).data();
        for (std::size_t n = 0; n < a.rows(); ++n) {
            const double ani = a(n, ui);
            const double* brow = b.row(n).data();
            for (std::size_t j = 0; j < b.cols(); ++j) out[j] += ani * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw ContractError("matmul_nt: column counts differ");
    Matrix c(a.rows(), b.rows());
    const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double* arow = a.row(ui).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.row(j).data();
            double sum = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) sum += arow[k] * brow[k];
            c(ui, j) = sum;
        }
    }
    return c;
}

Matrix spmm(const SparseMatrix& s, const Matrix& b) {
    if (s.cols() != b.rows()) throw ContractError("spmm: inner dimensions differ");
    Matrix c(s.rows(), b.cols());
    const auto& ptr = s.row_ptr();
    const auto& idx = s.col_idx();
    const auto& val = s.values();
    const auto rows = static_cast<std::ptrdiff_t>(s.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        const auto ur = static_cast<std::size_t>(r);
        double* out = c.row(ur).data();
        for (std::size_t k = ptr[ur]; k < ptr[ur + 1]; ++k) {
            const double v = val[k];
            const double* brow = b.row(idx[k]).data();
            for (std::size_t j = 0; j < b.cols(); ++j) out[j] += v * brow[j];
        }
    }
    return c;
}

}  // namespace parallel

#ifdef _OPENMP
Matrix matmul(const Matrix& a, const Matrix& b) { return parallel::matmul(a, b); }
Matrix matmul_tn(const Matrix& a, const Matrix& b) { return parallel::matmul_tn(a, b); }
Matrix matmul_nt(const Matrix& a, const Matrix& b) { return parallel::matmul_nt(a, b); }
Matrix spmm(const SparseMatrix& s, const Matrix& b) { return parallel::spmm(s, b); }

void set_threads(int n) {
    if (n > 0) omp_set_num_threads(n);
}
int max_threads() { return omp_get_max_threads(); }
#else
Matrix matmul(const Matrix& a, const Matrix& b) { return serial::matmul(a, b); }
Matrix matmul_tn(const Matrix& a, const Matrix& b) { return serial::matmul_tn(a, b); }
Matrix matmul_nt(const Matrix& a, const Matrix& b) { return serial::matmul_nt(a, b); }
Matrix spmm(const SparseMatrix& s, const Matrix& b) { return serial::spmm(s, b); }

void set_threads(int) {}
int max_threads() { return 1; }
#endif

}  // namespace gcnwp::kernels
