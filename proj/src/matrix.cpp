#include "gcnwp/matrix.hpp"

#include <algorithm>

#include "gcnwp/error.hpp"

namespace gcnwp {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols) {
        throw ContractError("Matrix: value count does not match shape");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

SparseMatrix SparseMatrix::from_entries(std::size_t rows, std::size_t cols,
                                        std::vector<Entry> entries) {
    for (const auto& e : entries) {
        if (e.row >= rows || e.col >= cols) {
            throw ContractError("SparseMatrix: entry out of range");
        }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });

    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.row_ptr_.assign(rows + 1, 0);
    for (std::size_t i = 0; i < entries.size();) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < entries.size() && entries[j].row == entries[i].row &&
               entries[j].col == entries[i].col) {
            sum += entries[j].value;
            ++j;
        }
        if (sum != 0.0) {
            m.col_idx_.push_back(entries[i].col);
            m.values_.push_back(sum);
            ++m.row_ptr_[entries[i].row + 1];
        }
        i = j;
    }
    for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
    return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    std::vector<Entry> entries;
    entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, 1.0});
    return from_entries(n, n, std::move(entries));
}

SparseMatrix SparseMatrix::from_dense(const Matrix& dense) {
    std::vector<Entry> entries;
    for (std::size_t r = 0; r < dense.rows(); ++r)
        for (std::size_t c = 0; c < dense.cols(); ++c)
            if (dense(r, c) != 0.0) entries.push_back({r, c, dense(r, c)});
    return from_entries(dense.rows(), dense.cols(), std::move(entries));
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
    const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
    const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
    const auto it = std::lower_bound(first, last, c);
    if (it == last || *it != c) return 0.0;
    return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

Matrix SparseMatrix::to_dense() const {
    Matrix d(rows_, cols_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d(r, col_idx_[k]) = values_[k];
    return d;
}

bool SparseMatrix::is_symmetric() const {
    if (rows_ != cols_) return false;
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            if (at(col_idx_[k], r) != values_[k]) return false;
    return true;
}

}  // namespace gcnwp
