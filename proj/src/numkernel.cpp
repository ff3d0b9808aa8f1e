#include "esn/numkernel.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <string>

namespace esn {

// For x <= ~-745 the exp underflows and the result is exactly 0.0; above
// that the result is a strictly positive subnormal/normal in (0, 1).
Matrix sigmoid_map(const Matrix& m) {
    Matrix r(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double x = m.data()[i];
        if (x >= 0.0) {
            r.data()[i] = 1.0 / (1.0 + std::exp(-x));
        } else {
            const double e = std::exp(x);
            r.data()[i] = e / (1.0 + e);
        }
    }
    return r;
}

double spectral_radius_dense(const Matrix& m) {
    if (m.rows() != m.cols()) throw ShapeError("spectral_radius_dense: matrix not square");
    const auto n = static_cast<Eigen::Index>(m.rows());
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = m.at(i, j);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(a, /*computeEigenvectors=*/false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius(const SparseMatrix& m, double tol, std::size_t max_iter) {
    if (m.rows() != m.cols()) throw ShapeError("spectral_radius: matrix not square");
    const std::size_t h = m.rows();
    if (h == 0) return 0.0;

    bool all_zero = true;
    for (double v : m.values())
        if (v != 0.0) { all_zero = false; break; }
    if (m.pattern().nnz() == 0 || all_zero) return 0.0;

    // Fixed-seed start vector keeps runs bit-reproducible.
    std::mt19937_64 rng(0x5eed5eed ^ static_cast<std::uint64_t>(h));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Matrix v(h, 1);
    for (std::size_t i = 0; i < h; ++i) v.at(i, 0) = unit(rng);
    double vnorm = v.frobenius_norm();
    for (std::size_t i = 0; i < h; ++i) v.at(i, 0) /= vnorm;

    double estimate = 0.0;
    std::size_t steady = 0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        Matrix av = m.mul(v);
        const double norm = av.frobenius_norm();
        if (norm == 0.0) return 0.0;  // start vector landed in the kernel chain
        const double rel_change = std::abs(norm - estimate) / norm;
        estimate = norm;
        for (std::size_t i = 0; i < h; ++i) v.at(i, 0) = av.at(i, 0) / norm;
        if (rel_change < tol) {
            if (++steady >= 3) return estimate;
        } else {
            steady = 0;
        }
    }
    // Power iteration stalled: dominant eigenvalue complex or clustered.
    return spectral_radius_dense(m.to_dense());
}

Matrix solve_spd(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols()) throw ShapeError("solve_spd: matrix not square");
    if (a.rows() != b.rows()) throw ShapeError("solve_spd: right-hand side row mismatch");
    const std::size_t n = a.rows();

    const double scale = a.max_abs();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a.at(i, j) - a.at(j, i)) > 1e-12 * (scale > 0 ? scale : 1.0))
                throw NumericError("solve_spd: matrix not symmetric at (" + std::to_string(i) +
                                   "," + std::to_string(j) + ")");

    // In-place lower Cholesky factor.
    std::vector<double> l(a.data());
    for (std::size_t j = 0; j < n; ++j) {
        double d = l[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
        if (d <= 0.0)
            throw NumericError("solve_spd: non-positive pivot " + std::to_string(d) +
                               " at index " + std::to_string(j) +
                               " (matrix not positive definite; increase the ridge term)");
        const double ljj = std::sqrt(d);
        l[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = l[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
            l[i * n + j] = s / ljj;
        }
    }

    // Solve L y = b, then L^T x = y, column by column.
    Matrix x = b;
    const std::size_t m = b.cols();
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = x.at(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * x.at(k, c);
            x.at(i, c) = s / l[i * n + i];
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x.at(ii, c);
            for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * x.at(k, c);
            x.at(ii, c) = s / l[ii * n + ii];
        }
    }
    return x;
}

}  // namespace esn
