#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "llae/eigen.hpp"
#include "llae/matrix.hpp"
#include "llae/schur.hpp"
#include "test_support.hpp"

using namespace llae;
using namespace llae::testing;

TEST(Matrix, RejectsNonFiniteEntries) {
    EXPECT_THROW(Matrix(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()}), InvalidArgument);
    EXPECT_THROW(Matrix(1, 1, {std::numeric_limits<double>::infinity()}), InvalidArgument);
    EXPECT_THROW(Matrix(2, 2, {1.0, 2.0, 3.0}), DimensionError);
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
    const Matrix m{{1.5, -2.0}, {0.25, 7.0}};
    EXPECT_EQ(matmul(Matrix::identity(2), m), m);
}

TEST(Matmul, SmallAnalyticProduct) {
    const Matrix a{{1, 2}, {3, 4}};
    const Matrix b{{0}, {1}};
    EXPECT_EQ(matmul(a, b), (Matrix{{2}, {4}}));
}

TEST(Matmul, MatchesTripleLoop) {
    std::mt19937_64 rng(11);
    const Matrix a = random_matrix(5, 7, rng);
    const Matrix b = random_matrix(7, 3, rng);
    EXPECT_LE(max_abs_difference(matmul(a, b), naive_matmul(a, b)), 1e-14);
    EXPECT_LE(max_abs_difference(matmul_transposed(a, naive_transpose(b)), naive_matmul(a, b)), 1e-14);
    EXPECT_LE(max_abs_difference(transposed_matmul(naive_transpose(a), b), naive_matmul(a, b)), 1e-14);
    EXPECT_LE(max_abs_difference(gram(a), naive_matmul(a, naive_transpose(a))), 1e-14);
}

TEST(Matmul, DimensionMismatchNamesBothShapes) {
    try {
        matmul(Matrix(2, 3), Matrix(2, 3));
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("2x3"), std::string::npos);
        EXPECT_NE(msg.find("by 2x3"), std::string::npos);
    }
}

TEST(Matmul, AssociativityProperty) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<std::size_t> dim(1, 9);
        const Matrix a = random_matrix(dim(rng), dim(rng), rng);
        const Matrix b = random_matrix(a.cols(), dim(rng), rng);
        const Matrix c = random_matrix(b.cols(), dim(rng), rng);
        const Matrix left = matmul(matmul(a, b), c);
        const Matrix right = matmul(a, matmul(b, c));
        EXPECT_LE(frobenius_norm(left - right), 1e-9 * std::max(1e-12, frobenius_norm(left)));
    }
}

TEST(Frobenius, ZeroAndPythagorean) {
    EXPECT_EQ(frobenius_norm(Matrix(3, 2)), 0.0);
    EXPECT_DOUBLE_EQ(frobenius_norm(Matrix{{3, 4}}), 5.0);
}

TEST(Frobenius, EqualsSqrtTraceOfGram) {
    std::mt19937_64 rng(7);
    const Matrix m = random_matrix(4, 4, rng);
    const double via_trace = std::sqrt(naive_trace(naive_matmul(naive_transpose(m), m)));
    EXPECT_NEAR(frobenius_norm(m), via_trace, 1e-12);
}

TEST(SymmetricEigen, DiagonalInput) {
    const auto r = symmetric_eigen(Matrix{{4, 0}, {0, 1}});
    ASSERT_EQ(r.eigenvalues.size(), 2u);
    EXPECT_DOUBLE_EQ(r.eigenvalues[0], 1.0);
    EXPECT_DOUBLE_EQ(r.eigenvalues[1], 4.0);
    EXPECT_EQ(r.eigenvectors, (Matrix{{0, 1}, {1, 0}}));
}

TEST(SymmetricEigen, Identity) {
    const auto r = symmetric_eigen(Matrix::identity(3));
    for (double v : r.eigenvalues) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(SymmetricEigen, ReconstructsRandomSymmetric) {
    std::mt19937_64 rng(3);
    const Matrix m = random_symmetric(6, rng);
    const auto r = symmetric_eigen(m);
    const Matrix rebuilt =
        naive_matmul(naive_matmul(r.eigenvectors, Matrix::diagonal(r.eigenvalues)), naive_transpose(r.eigenvectors));
    EXPECT_LE(max_abs_difference(rebuilt, m), 1e-9);
}

TEST(SymmetricEigen, PairsOrthonormalityAndOrdering) {
    std::mt19937_64 rng(19);
    for (std::size_t n : {1u, 2u, 5u, 17u, 40u}) {
        const Matrix m = random_symmetric(n, rng);
        const auto r = symmetric_eigen(m);
        EXPECT_TRUE(std::is_sorted(r.eigenvalues.begin(), r.eigenvalues.end()));
        const Matrix vtv = naive_matmul(naive_transpose(r.eigenvectors), r.eigenvectors);
        EXPECT_LE(max_abs_difference(vtv, Matrix::identity(n)), 1e-10);
        const double scale = frobenius_norm(m);
        for (std::size_t j = 0; j < n; ++j) {
            double worst = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double mv = 0.0;
                for (std::size_t p = 0; p < n; ++p) mv += m(i, p) * r.eigenvectors(p, j);
                worst = std::max(worst, std::abs(mv - r.eigenvalues[j] * r.eigenvectors(i, j)));
            }
            EXPECT_LE(worst, 1e-8 * scale);
        }
        double sum = 0.0;
        for (double v : r.eigenvalues) sum += v;
        EXPECT_NEAR(sum, naive_trace(m), 1e-9 * std::max(1.0, std::abs(naive_trace(m))));
        // sign convention
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                if (std::abs(r.eigenvectors(i, j)) > 1e-12) {
                    EXPECT_GT(r.eigenvectors(i, j), 0.0);
                    break;
                }
            }
        }
    }
}

TEST(SymmetricEigen, RejectsNonSquareAndAsymmetric) {
    EXPECT_THROW(symmetric_eigen(Matrix(2, 3)), DimensionError);
    EXPECT_THROW(symmetric_eigen(Matrix{{1, 2}, {0, 1}}), InvalidArgument);
    // Tiny asymmetry is tolerated and symmetrized away.
    EXPECT_NO_THROW(symmetric_eigen(Matrix{{1, 2}, {2 + 1e-12, 1}}));
}

TEST(RealSchur, UpperTriangularIsAlreadySchur) {
    const Matrix m{{1, 2, 3}, {0, 4, 5}, {0, 0, 6}};
    const auto s = real_schur(m);
    EXPECT_EQ(s.q, Matrix::identity(3));
    EXPECT_EQ(s.t, m);
}

TEST(RealSchur, SymmetricInputGivesDiagonalT) {
    std::mt19937_64 rng(23);
    const Matrix m = random_symmetric(7, rng);
    const auto s = real_schur(m);
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 7; ++j) {
            if (i != j) { EXPECT_LE(std::abs(s.t(i, j)), 1e-8); }
        }
}

TEST(RealSchur, ReconstructsRandomGeneral) {
    std::mt19937_64 rng(29);
    for (std::size_t n : {2u, 3u, 8u, 31u, 64u}) {
        const Matrix m = random_matrix(n, n, rng);
        const auto s = real_schur(m);
        const Matrix rebuilt = naive_matmul(naive_matmul(s.q, s.t), naive_transpose(s.q));
        EXPECT_LE(frobenius_norm(rebuilt - m), 1e-8 * frobenius_norm(m)) << "n=" << n;
        EXPECT_LE(max_abs_difference(naive_matmul(naive_transpose(s.q), s.q), Matrix::identity(n)), 1e-10);
        // quasi-triangular: nothing below the first subdiagonal, no two consecutive nonzero subdiagonals
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j + 1 < i; ++j) EXPECT_EQ(s.t(i, j), 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) EXPECT_FALSE(s.t(i, i - 1) != 0.0 && s.t(i + 1, i) != 0.0);
    }
}

TEST(RealSchur, PreservesSymmetricSpectrum) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix m = random_symmetric(9, rng);
        auto from_schur = schur_eigenvalues(real_schur(m).t);
        std::vector<double> re;
        for (auto [r, i] : from_schur) {
            EXPECT_LE(std::abs(i), 1e-7);
            re.push_back(r);
        }
        std::sort(re.begin(), re.end());
        const auto eig = symmetric_eigen(m);
        for (std::size_t i = 0; i < re.size(); ++i) EXPECT_NEAR(re[i], eig.eigenvalues[i], 1e-7);
    }
}

TEST(RealSchur, RotationHasComplexPair) {
    const auto s = real_schur(Matrix{{0, -1}, {1, 0}});
    const auto eig = schur_eigenvalues(s.t);
    ASSERT_EQ(eig.size(), 2u);
    EXPECT_NEAR(eig[0].first, 0.0, 1e-14);
    EXPECT_NEAR(std::abs(eig[0].second), 1.0, 1e-14);
}

TEST(RealSchur, RejectsNonSquare) { EXPECT_THROW(real_schur(Matrix(3, 2)), DimensionError); }
