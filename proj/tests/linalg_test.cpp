#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <random>

#include "gearstab/linalg.hpp"

using namespace gearstab;

namespace {

// Greedy matching of two eigenvalue multisets; returns the largest pair distance.
double multiset_distance(std::vector<Complex> a, std::vector<Complex> b) {
    double worst = 0.0;
    for (const auto& x : a) {
        auto it = std::min_element(b.begin(), b.end(),
                                   [&](const Complex& u, const Complex& v) { return std::abs(u - x) < std::abs(v - x); });
        worst = std::max(worst, std::abs(*it - x));
        b.erase(it);
    }
    return worst;
}

Matrix random_matrix(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = u(rng);
    return m;
}

}  // namespace

TEST(LuSolve, Identity) {
    const auto x = lu_solve(Matrix::identity(2), std::vector<double>{3.0, -1.0});
    EXPECT_DOUBLE_EQ(x[0], 3.0);
    EXPECT_DOUBLE_EQ(x[1], -1.0);
}

TEST(LuSolve, Diagonal) {
    const auto x = lu_solve(Matrix{{2.0, 0.0}, {0.0, 4.0}}, std::vector<double>{2.0, 8.0});
    EXPECT_DOUBLE_EQ(x[0], 1.0);
    EXPECT_DOUBLE_EQ(x[1], 2.0);
}

TEST(LuSolve, TwoByTwoElimination) {
    const auto x = lu_solve(Matrix{{1.0, 1.0}, {1.0, -1.0}}, std::vector<double>{2.0, 0.0});
    EXPECT_NEAR(x[0], 1.0, 1e-15);
    EXPECT_NEAR(x[1], 1.0, 1e-15);
}

TEST(LuSolve, SingularMatrixRejected) {
    EXPECT_THROW(lu_solve(Matrix{{1.0, 2.0}, {2.0, 4.0}}, std::vector<double>{1.0, 1.0}), SingularMatrixError);
}

TEST(LuSolve, ShapeErrors) {
    EXPECT_THROW(lu_solve(Matrix(2, 3), std::vector<double>{1.0, 1.0}), DomainError);
    EXPECT_THROW(lu_solve(Matrix::identity(kMaxLuDimension + 1), std::vector<double>(kMaxLuDimension + 1, 1.0)),
                 DomainError);
}

TEST(LuSolve, ResidualBound) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix a = random_matrix(rng, 12, -1.0, 1.0);
        for (std::size_t i = 0; i < 12; ++i) a(i, i) += 6.0;
        std::vector<double> b(12);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        for (auto& v : b) v = u(rng);
        const auto x = lu_solve(a, b);
        const auto ax = a * std::span<const double>(x);
        double res = 0.0, bn = 0.0;
        for (std::size_t i = 0; i < 12; ++i) {
            res = std::max(res, std::abs(ax[i] - b[i]));
            bn = std::max(bn, std::abs(b[i]));
        }
        EXPECT_LE(res, 1e-10 * (1.0 + bn));
    }
}

// Solving A (A x) recovers x for random well-conditioned A.
TEST(LuSolve, RoundTripProperty) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> dim(1, 40);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<std::size_t>(dim(rng));
        Matrix a = random_matrix(rng, n, -1.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) a(i, i) += static_cast<double>(n);
        std::vector<double> x(n);
        std::uniform_real_distribution<double> u(-10.0, 10.0);
        for (auto& v : x) v = u(rng);
        const auto back = lu_solve(a, a * std::span<const double>(x));
        double err = 0.0, xn = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            err = std::max(err, std::abs(back[i] - x[i]));
            xn = std::max(xn, std::abs(x[i]));
        }
        EXPECT_LE(err, 1e-8 * xn);
    }
}

TEST(ComplexPolynomial, TrimsNearZeroLeadingCoefficients) {
    const ComplexPolynomial p{Complex(1.0), Complex(2.0), Complex(1e-16)};
    EXPECT_EQ(p.degree(), 1u);
    EXPECT_EQ(p(Complex(2.0)), Complex(5.0));
}

TEST(PolynomialRoots, DifferenceOfSquares) {
    auto r = polynomial_roots(ComplexPolynomial{Complex(-1.0), Complex(0.0), Complex(1.0)});
    EXPECT_LT(multiset_distance(r, {Complex(1.0), Complex(-1.0)}), 1e-12);
}

TEST(PolynomialRoots, FactoredQuadratic) {
    auto r = polynomial_roots(ComplexPolynomial{Complex(2.0), Complex(3.0), Complex(1.0)});
    EXPECT_LT(multiset_distance(r, {Complex(-1.0), Complex(-2.0)}), 1e-12);
}

TEST(PolynomialRoots, TripleRootCluster) {
    // (z - 0.5)^3 = z^3 - 1.5 z^2 + 0.75 z - 0.125
    auto r = polynomial_roots(ComplexPolynomial{Complex(-0.125), Complex(0.75), Complex(-1.5), Complex(1.0)});
    ASSERT_EQ(r.size(), 3u);
    // Residual 1e-12 allows a cluster of radius ~ (1e-12)^{1/3}.
    for (const auto& z : r) EXPECT_LT(std::abs(z - 0.5), 1e-4);
}

TEST(PolynomialRoots, ComplexCoefficients) {
    const std::vector<Complex> roots{Complex(0.3, -1.2), Complex(-2.0, 0.5), Complex(0.0, 1.0), Complex(4.0, 0.0)};
    const auto p = ComplexPolynomial::from_roots(roots);
    EXPECT_LT(multiset_distance(polynomial_roots(p), roots), 1e-10);
}

TEST(PolynomialRoots, DegreeErrors) {
    EXPECT_THROW(polynomial_roots(ComplexPolynomial{Complex(3.0)}), DomainError);
    EXPECT_THROW(polynomial_roots(ComplexPolynomial(std::vector<Complex>(18, Complex(1.0)))), DomainError);
}

// Reconstructing the monic polynomial from the roots reproduces the input.
TEST(PolynomialRoots, ReconstructionProperty) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> coeff(-5.0, 5.0);
    std::uniform_int_distribution<int> deg(1, 10);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = deg(rng);
        std::vector<Complex> c(static_cast<std::size_t>(d) + 1);
        for (auto& v : c) v = Complex(coeff(rng), 0.0);
        if (std::abs(c.back()) < 0.5) c.back() = Complex(c.back().real() < 0 ? -0.5 : 0.5, 0.0);
        const ComplexPolynomial p(c);
        const auto roots = polynomial_roots(p);
        const auto recon = ComplexPolynomial::from_roots(roots);
        double scale = 0.0;
        for (const auto& v : c) scale = std::max(scale, std::abs(v / c.back()));
        double err = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i)
            err = std::max(err, std::abs(recon.coefficients()[i] - c[i] / c.back()));
        EXPECT_LE(err, 1e-8 * scale) << "trial " << trial << " degree " << d;
    }
}

TEST(Eigenvalues, Diagonal) {
    const auto e = eigenvalues(Matrix{{-1000.0, 0.0}, {0.0, -1.0}});
    EXPECT_LT(multiset_distance(e, {Complex(-1000.0), Complex(-1.0)}), 1e-12);
}

TEST(Eigenvalues, Companion) {
    const auto e = eigenvalues(Matrix{{0.0, 1.0}, {-2.0, -3.0}});
    EXPECT_LT(multiset_distance(e, {Complex(-1.0), Complex(-2.0)}), 1e-12);
}

TEST(Eigenvalues, RotationGenerator) {
    const auto e = eigenvalues(Matrix{{0.0, 1.0}, {-1.0, 0.0}});
    EXPECT_LT(multiset_distance(e, {Complex(0.0, 1.0), Complex(0.0, -1.0)}), 1e-12);
}

TEST(Eigenvalues, Errors) {
    EXPECT_THROW(eigenvalues(Matrix(2, 3)), DomainError);
    EXPECT_THROW(eigenvalues(Matrix::identity(kMaxEigenDimension + 1)), DomainError);
}

TEST(Eigenvalues, UpperTriangularGivesDiagonal) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 9);
        Matrix a = random_matrix(rng, n, -4.0, 4.0);
        std::vector<Complex> diag;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < i; ++j) a(i, j) = 0.0;
            diag.emplace_back(a(i, i));
        }
        EXPECT_LT(multiset_distance(eigenvalues(a), diag), 1e-10);
    }
}

TEST(Eigenvalues, SimilarityInvariance) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 6);
        const Matrix a = random_matrix(rng, n, -3.0, 3.0);
        Matrix p = random_matrix(rng, n, -0.3, 0.3);
        for (std::size_t i = 0; i < n; ++i) p(i, i) += 1.0;
        // P^{-1} column by column.
        Matrix pinv(n, n);
        for (std::size_t c = 0; c < n; ++c) {
            std::vector<double> e(n, 0.0);
            e[c] = 1.0;
            const auto col = lu_solve(p, e);
            for (std::size_t r = 0; r < n; ++r) pinv(r, c) = col[r];
        }
        const Matrix b = p * a * pinv;
        EXPECT_LT(multiset_distance(eigenvalues(b), eigenvalues(a)), 1e-7) << "trial " << trial;
    }
}

// Independent reference: Eigen's real eigen solver.
TEST(Eigenvalues, AgreesWithEigen) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 12);
        const Matrix a = random_matrix(rng, n, -10.0, 10.0);
        Eigen::MatrixXd e(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
        const Eigen::VectorXcd ref = Eigen::EigenSolver<Eigen::MatrixXd>(e, false).eigenvalues();
        std::vector<Complex> expected(ref.data(), ref.data() + ref.size());
        EXPECT_LT(multiset_distance(eigenvalues(a), expected), 1e-8 * (1.0 + a.norm_inf())) << "trial " << trial;
    }
}

TEST(Eigendecompose, AlreadyDiagonal) {
    const auto d = eigendecompose(Matrix{{-2.0, 0.0}, {0.0, -1.0}});
    for (std::size_t c = 0; c < 2; ++c) {
        const std::size_t axis = std::abs(d.values[c] - Complex(-2.0)) < 1e-12 ? 0 : 1;
        EXPECT_NEAR(std::abs(d.vectors(axis, c)), 1.0, 1e-10);
        EXPECT_NEAR(std::abs(d.vectors(1 - axis, c)), 0.0, 1e-10);
    }
}

TEST(Eigendecompose, ResidualsAndUnitColumns) {
    const Matrix a{{0.0, 1.0}, {-2.0, -3.0}};
    const auto d = eigendecompose(a);
    for (std::size_t c = 0; c < 2; ++c) {
        double len = 0.0, res = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            Complex av{0.0};
            for (std::size_t j = 0; j < 2; ++j) av += a(i, j) * d.vectors(j, c);
            res += std::norm(av - d.values[c] * d.vectors(i, c));
            len += std::norm(d.vectors(i, c));
        }
        EXPECT_LT(std::sqrt(res), 1e-8 * a.norm_inf());
        EXPECT_NEAR(len, 1.0, 1e-12);
    }
}

TEST(Eigendecompose, ComplexPairAndRandomMatrices) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 7);
        const Matrix a = random_matrix(rng, n, -2.0, 2.0);
        const auto d = eigendecompose(a);
        for (std::size_t c = 0; c < n; ++c) {
            double res = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                Complex av{0.0};
                for (std::size_t j = 0; j < n; ++j) av += a(i, j) * d.vectors(j, c);
                res += std::norm(av - d.values[c] * d.vectors(i, c));
            }
            EXPECT_LT(std::sqrt(res), 1e-8 * a.norm_inf()) << "trial " << trial;
        }
    }
}

TEST(Eigendecompose, DefectiveMatrixRejected) {
    EXPECT_THROW(eigendecompose(Matrix{{1.0, 1.0}, {0.0, 1.0}}), ClusteredEigenvaluesError);
}
