#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "doctest.h"
#include "esn/numkernel.hpp"

using namespace esn;

namespace {

SparseMatrix random_sparse(std::size_t n, double density, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<std::pair<std::size_t, std::size_t>> nz;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            if (coin(rng) < density) nz.emplace_back(r, c);
    if (nz.empty()) nz.emplace_back(0, 0);
    std::vector<double> vals(nz.size());
    for (double& v : vals) v = unit(rng);
    return SparseMatrix(SparsePattern(n, n, std::move(nz)), std::move(vals));
}

// Independent oracle: full dense eigen-decomposition.
double eig_oracle(const SparseMatrix& m) {
    const auto n = static_cast<Eigen::Index>(m.rows());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < m.pattern().nnz(); ++i) {
        const auto& [r, c] = m.pattern().nonzeros()[i];
        a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.values()[i];
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(a, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("sigmoid_map known values") {
    Matrix m(1, 3, {0.0, std::log(3.0), -40.0});
    Matrix s = sigmoid_map(m);
    CHECK(s.at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.at(0, 1) == doctest::Approx(0.75).epsilon(1e-15));
    // exp(-40) is representable, so the result stays strictly positive.
    CHECK(s.at(0, 2) > 0.0);
    CHECK(s.at(0, 2) < 1e-17);
    CHECK(s.at(0, 2) == doctest::Approx(1.0 / (1.0 + std::exp(40.0))).epsilon(1e-12));
}

TEST_CASE("sigmoid_map is monotone and symmetric around zero") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-700.0, 700.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng);
        Matrix m(1, 2, {x, -x});
        Matrix s = sigmoid_map(m);
        CHECK(s.at(0, 0) + s.at(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
        const double dx = 1e-3;
        Matrix m2(1, 1, {x + dx});
        CHECK(sigmoid_map(m2).at(0, 0) >= s.at(0, 0));
        CHECK(s.at(0, 0) > 0.0);
        CHECK(s.at(0, 0) <= 1.0);
        // Strict upper bound holds until 1/(1+exp(-x)) rounds to 1.
        if (x < 36.0) CHECK(s.at(0, 0) < 1.0);
    }
}

TEST_CASE("spectral_radius trivial matrices") {
    SparseMatrix eye(SparsePattern(2, 2, {{0, 0}, {1, 1}}), {1.0, 1.0});
    CHECK(spectral_radius(eye) == doctest::Approx(1.0).epsilon(1e-10));

    SparseMatrix nilpotent(SparsePattern(2, 2, {{0, 1}}), {2.0});
    CHECK(spectral_radius(nilpotent) == doctest::Approx(0.0));

    SparseMatrix zero(SparsePattern(3, 3, {{1, 2}}), {0.0});
    CHECK(spectral_radius(zero) == 0.0);

    SparseMatrix rect(SparsePattern(2, 3, {{0, 0}}), {1.0});
    CHECK_THROWS_AS(spectral_radius(rect), ShapeError);
}

TEST_CASE("spectral_radius matches the dense eigensolver oracle") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        SparseMatrix m = random_sparse(50, 0.1, seed);
        const double oracle = eig_oracle(m);
        CHECK(spectral_radius(m) == doctest::Approx(oracle).epsilon(1e-8));
    }
}

TEST_CASE("spectral_radius scales with |c|") {
    SparseMatrix m = random_sparse(30, 0.2, 42);
    const double r = spectral_radius(m);
    SparseMatrix scaled = m;
    scaled.scale(-2.5);
    CHECK(spectral_radius(scaled) == doctest::Approx(2.5 * r).epsilon(1e-8));
}

TEST_CASE("solve_spd trivial systems") {
    Matrix b(3, 2, {1, 2, 3, 4, 5, 6});
    CHECK(solve_spd(Matrix::identity(3), b) == b);

    Matrix x = solve_spd(2.0 * Matrix::identity(3), Matrix::identity(3));
    for (std::size_t i = 0; i < 3; ++i) CHECK(x.at(i, i) == doctest::Approx(0.5));
}

TEST_CASE("solve_spd residual and recovery on random SPD systems") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix g(5, 5);
        for (double& v : g.data()) v = u(rng);
        Matrix a = mul_a_bt(g, g) + Matrix::identity(5);
        Matrix b(5, 3);
        for (double& v : b.data()) v = u(rng);

        Matrix x = solve_spd(a, b);
        CHECK((a * x - b).frobenius_norm() <= 1e-10 * b.frobenius_norm());

        // solve_spd(a, a*x0) recovers x0.
        Matrix x0(5, 3);
        for (double& v : x0.data()) v = u(rng);
        Matrix rec = solve_spd(a, a * x0);
        CHECK((rec - x0).frobenius_norm() <= 1e-9 * x0.frobenius_norm());
    }
}

TEST_CASE("solve_spd rejects non-PD and asymmetric input") {
    Matrix neg = -1.0 * Matrix::identity(2) + Matrix::identity(2) + (-1.0 * Matrix::identity(2));
    CHECK_THROWS_AS(solve_spd(neg, Matrix::identity(2)), NumericError);

    Matrix asym(2, 2, {1.0, 0.5, -0.5, 1.0});
    CHECK_THROWS_AS(solve_spd(asym, Matrix::identity(2)), NumericError);

    // Pivot index is named in the message.
    Matrix indef(2, 2, {1.0, 2.0, 2.0, 1.0});
    try {
        solve_spd(indef, Matrix::identity(2));
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("index 1") != std::string::npos);
    }
}
