#include <map>

#include "gcnwp/error.hpp"
#include "gcnwp/kernels.hpp"

namespace gcnwp::kernels::serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ContractError("matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* out = c.row(i).data();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            const double* brow = b.row(k).data();
            for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw ContractError("matmul_tn: row counts differ");
    Matrix c(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.cols(); ++i) {
        double* out = c.row(i).data();
        for (std::size_t n = 0; n < a.rows(); ++n) {
            const double ani = a(n, i);
            const double* brow = b.row(n).data();
            for (std::size_t j = 0; j < b.cols(); ++j) out[j] += ani * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw ContractError("matmul_nt: column counts differ");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.row(j).data();
            double sum = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) sum += arow[k] * brow[k];
            c(i, j) = sum;
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
    for (std::size_t r = 0; r < s.rows(); ++r) {
        double* out = c.row(r).data();
        for (std::size_t k = ptr[r]; k < ptr[r + 1]; ++k) {
            const double v = val[k];
            const double* brow = b.row(idx[k]).data();
            for (std::size_t j = 0; j < b.cols(); ++j) out[j] += v * brow[j];
        }
    }
    return c;
}

SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.cols() != b.rows()) throw ContractError("spgemm: inner dimensions differ");
    std::vector<SparseMatrix::Entry> entries;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        std::map<std::size_t, double> acc;
        for (std::size_t k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
            const std::size_t mid = a.col_idx()[k];
            const double av = a.values()[k];
            for (std::size_t q = b.row_ptr()[mid]; q < b.row_ptr()[mid + 1]; ++q)
                acc[b.col_idx()[q]] += av * b.values()[q];
        }
        for (const auto& [col, v] : acc) entries.push_back({r, col, v});
    }
    return SparseMatrix::from_entries(a.rows(), b.cols(), std::move(entries));
}

}  // namespace gcnwp::kernels::serial
