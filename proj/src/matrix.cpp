#include "esn/matrix.hpp"

#include <cmath>
#include <string>

namespace esn {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (!std::isfinite(fill)) throw NumericError("Matrix fill value is not finite");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows * cols)
        throw ShapeError("Matrix entry count " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    check_finite("Matrix construction");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t.at(c, r) = at(r, c);
    return t;
}

Matrix Matrix::column(std::size_t c) const {
    if (c >= cols_) throw ShapeError("column index out of range");
    Matrix col(rows_, 1);
    for (std::size_t r = 0; r < rows_; ++r) col.at(r, 0) = at(r, c);
    return col;
}

void Matrix::set_column(std::size_t c, const Matrix& col) {
    if (c >= cols_ || col.rows() != rows_ || col.cols() != 1)
        throw ShapeError("set_column shape mismatch");
    for (std::size_t r = 0; r < rows_; ++r) at(r, c) = col.at(r, 0);
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

void Matrix::check_finite(const char* context) const {
    for (double v : data_)
        if (!std::isfinite(v)) throw NumericError(std::string(context) + ": non-finite entry");
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeError("matrix add: shape mismatch");
    Matrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] = a.data()[i] + b.data()[i];
    return r;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeError("matrix sub: shape mismatch");
    Matrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] = a.data()[i] - b.data()[i];
    return r;
}

// ikj ordering keeps the inner loop contiguous in both operands.
Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ShapeError("matrix mul: inner dimension mismatch");
    Matrix r(a.rows(), b.cols());
    const std::size_t n = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* out = &r.data()[i * m];
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a.data()[i * n + k];
            if (aik == 0.0) continue;
            const double* brow = &b.data()[k * m];
            for (std::size_t j = 0; j < m; ++j) out[j] += aik * brow[j];
        }
    }
    return r;
}

Matrix operator*(double s, const Matrix& m) {
    Matrix r(m.rows(), m.cols());
    for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] = s * m.data()[i];
    return r;
}

Matrix mul_at_b(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw ShapeError("mul_at_b: row count mismatch");
    Matrix r(a.cols(), b.cols());
    const std::size_t n = a.cols(), m = b.cols();
    // Tile the output rows so a tall result stays cache-resident while the
    // (usually short) reduction over a's rows revisits it.
    const std::size_t tile = std::max<std::size_t>(1, 65536 / (m + 1));
    for (std::size_t i0 = 0; i0 < n; i0 += tile) {
        const std::size_t i1 = std::min(n, i0 + tile);
        for (std::size_t k = 0; k < a.rows(); ++k) {
            const double* arow = &a.data()[k * n];
            const double* brow = &b.data()[k * m];
            for (std::size_t i = i0; i < i1; ++i) {
                const double aki = arow[i];
                if (aki == 0.0) continue;
                double* out = &r.data()[i * m];
                for (std::size_t j = 0; j < m; ++j) out[j] += aki * brow[j];
            }
        }
    }
    return r;
}

Matrix mul_a_bt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw ShapeError("mul_a_bt: column count mismatch");
    const bool self = &a == &b;
    Matrix r(a.rows(), b.rows());
    const std::size_t n = a.cols();
    // Tile the shared (long) dimension so each pass reads rows that fit in
    // cache; a self product needs only the upper triangle.
    const std::size_t tile = 4096;
    for (std::size_t k0 = 0; k0 < n; k0 += tile) {
        const std::size_t k1 = std::min(n, k0 + tile);
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const double* arow = &a.data()[i * n];
            for (std::size_t j = self ? i : 0; j < b.rows(); ++j) {
                const double* brow = &b.data()[j * n];
                // Independent partial sums so the reduction can vectorize.
                double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
                std::size_t k = k0;
                for (; k + 4 <= k1; k += 4) {
                    s0 += arow[k] * brow[k];
                    s1 += arow[k + 1] * brow[k + 1];
                    s2 += arow[k + 2] * brow[k + 2];
                    s3 += arow[k + 3] * brow[k + 3];
                }
                double s = (s0 + s1) + (s2 + s3);
                for (; k < k1; ++k) s += arow[k] * brow[k];
                r.at(i, j) += s;
            }
        }
    }
    if (self)
        for (std::size_t i = 0; i < r.rows(); ++i)
            for (std::size_t j = i + 1; j < r.cols(); ++j) r.at(j, i) = r.at(i, j);
    return r;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeError("hadamard: shape mismatch");
    Matrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] = a.data()[i] * b.data()[i];
    return r;
}

SparsePattern::SparsePattern(std::size_t rows, std::size_t cols,
                             std::vector<std::pair<std::size_t, std::size_t>> nonzeros)
    : rows_(rows), cols_(cols), nonzeros_(std::move(nonzeros)) {
    for (std::size_t i = 0; i < nonzeros_.size(); ++i) {
        const auto& [r, c] = nonzeros_[i];
        if (r >= rows_ || c >= cols_) throw ShapeError("SparsePattern: index out of range");
        if (i > 0 && !(nonzeros_[i - 1] < nonzeros_[i]))
            throw ShapeError("SparsePattern: nonzeros not strictly sorted");
    }
}

SparseMatrix::SparseMatrix(SparsePattern pattern, std::vector<double> values)
    : pattern_(std::move(pattern)), values_(std::move(values)) {
    if (values_.size() != pattern_.nnz())
        throw ShapeError("SparseMatrix: value count does not match pattern");
    for (double v : values_)
        if (!std::isfinite(v)) throw NumericError("SparseMatrix: non-finite value");
}

void SparseMatrix::scale(double s) {
    if (!std::isfinite(s)) throw NumericError("SparseMatrix::scale: non-finite factor");
    for (double& v : values_) v *= s;
}

Matrix SparseMatrix::to_dense() const {
    Matrix d(rows(), cols());
    for (std::size_t i = 0; i < pattern_.nnz(); ++i) {
        const auto& [r, c] = pattern_.nonzeros()[i];
        d.at(r, c) = values_[i];
    }
    return d;
}

Matrix SparseMatrix::mul(const Matrix& x) const {
    if (cols() != x.rows()) throw ShapeError("SparseMatrix::mul: dimension mismatch");
    Matrix y(rows(), x.cols());
    const std::size_t m = x.cols();
    for (std::size_t i = 0; i < pattern_.nnz(); ++i) {
        const auto& [r, c] = pattern_.nonzeros()[i];
        const double v = values_[i];
        const double* xrow = &x.data()[c * m];
        double* yrow = &y.data()[r * m];
        for (std::size_t j = 0; j < m; ++j) yrow[j] += v * xrow[j];
    }
    return y;
}

Matrix SparseMatrix::mul_transposed(const Matrix& x) const {
    if (rows() != x.rows()) throw ShapeError("SparseMatrix::mul_transposed: dimension mismatch");
    Matrix y(cols(), x.cols());
    const std::size_t m = x.cols();
    for (std::size_t i = 0; i < pattern_.nnz(); ++i) {
        const auto& [r, c] = pattern_.nonzeros()[i];
        const double v = values_[i];
        const double* xrow = &x.data()[r * m];
        double* yrow = &y.data()[c * m];
        for (std::size_t j = 0; j < m; ++j) yrow[j] += v * xrow[j];
    }
    return y;
}

}  // namespace esn
