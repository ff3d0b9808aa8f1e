#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "esn/error.hpp"

namespace esn {

// Dense row-major matrix of doubles. Entries must stay finite; construction
// and the mutating entry points check this.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    Matrix transpose() const;
    Matrix column(std::size_t c) const;
    void set_column(std::size_t c, const Matrix& col);

    double frobenius_norm() const;
    double max_abs() const;

    // Throws NumericError if any entry is non-finite.
    void check_finite(const char* context) const;

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& m);

// a^T * b without materializing the transpose.
Matrix mul_at_b(const Matrix& a, const Matrix& b);
// a * b^T without materializing the transpose.
Matrix mul_a_bt(const Matrix& a, const Matrix& b);
// Element-wise product.
Matrix hadamard(const Matrix& a, const Matrix& b);

// Fixed nonzero layout of a sparse matrix: strictly sorted row-major list of
// (row, col) index pairs. Frozen for a model's lifetime.
class SparsePattern {
  public:
    SparsePattern() = default;
    SparsePattern(std::size_t rows, std::size_t cols,
                  std::vector<std::pair<std::size_t, std::size_t>> nonzeros);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return nonzeros_.size(); }
    const std::vector<std::pair<std::size_t, std::size_t>>& nonzeros() const { return nonzeros_; }

    friend bool operator==(const SparsePattern& a, const SparsePattern& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.nonzeros_ == b.nonzeros_;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::pair<std::size_t, std::size_t>> nonzeros_;
};

// Sparse matrix = shared pattern + aligned value vector.
class SparseMatrix {
  public:
    SparseMatrix() = default;
    SparseMatrix(SparsePattern pattern, std::vector<double> values);

    const SparsePattern& pattern() const { return pattern_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    std::size_t rows() const { return pattern_.rows(); }
    std::size_t cols() const { return pattern_.cols(); }

    void scale(double s);
    Matrix to_dense() const;

    // this * x for dense x.
    Matrix mul(const Matrix& x) const;
    // this^T * x for dense x.
    Matrix mul_transposed(const Matrix& x) const;

    friend bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
        return a.pattern_ == b.pattern_ && a.values_ == b.values_;
    }

  private:
    SparsePattern pattern_;
    std::vector<double> values_;
};

}  // namespace esn
