#pragma once

#include <cstddef>
#include <span>
#include <tuple>
#include <vector>

namespace gcnwp {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::vector<double>& values() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    Matrix transposed() const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Compressed sparse row matrix. Column indices are sorted within each row.
class SparseMatrix {
public:
    struct Entry {
        std::size_t row;
        std::size_t col;
        double value;
    };

    SparseMatrix() = default;
    explicit SparseMatrix(std::size_t n) : rows_(n), cols_(n), row_ptr_(n + 1, 0) {}

    /// Duplicate (row, col) entries are summed; explicit zeros are dropped.
    static SparseMatrix from_entries(std::size_t rows, std::size_t cols, std::vector<Entry> entries);
    static SparseMatrix identity(std::size_t n);
    static SparseMatrix from_dense(const Matrix& dense);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
    const std::vector<std::size_t>& col_idx() const noexcept { return col_idx_; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Value at (r, c), zero when not stored.
    double at(std::size_t r, std::size_t c) const;

    Matrix to_dense() const;
    bool is_symmetric() const;

    bool operator==(const SparseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

}  // namespace gcnwp
