#include <gtest/gtest.h>

#include <cmath>

#include "opmodel/numerics.hpp"
#include "test_support.hpp"

using namespace opmodel;
using opmodel::testing::dist;

TEST(Expm, ZeroGivesIdentity) {
    EXPECT_EQ(expm(ComplexMatrix(3, 3)), ComplexMatrix::identity(3));
}

TEST(Expm, DiagonalLog) {
    const ComplexMatrix e = expm(ComplexMatrix::diagonal({std::log(2.0), 0.0}));
    EXPECT_LT(dist(e, ComplexMatrix::diagonal({2.0, 1.0})), 1e-14);
}

TEST(Expm, NilpotentSeriesTruncates) {
    const ComplexMatrix n = {{0.0, 1.0}, {0.0, 0.0}};
    for (double a : {0.5, -3.0, 12.0}) {
        const ComplexMatrix expected = ComplexMatrix::identity(2) + n * Complex(a);
        EXPECT_LT(dist(expm(n * Complex(a)), expected), 1e-12 * (1.0 + a * a));
    }
}

TEST(Expm, RejectsNonSquare) { EXPECT_THROW(expm(ComplexMatrix(2, 3)), DimensionError); }

TEST(Expm, MatchesTaylorOracle) {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const ComplexMatrix a = random_with_norm(rng, 6, uniform(rng, 0.1, 2.0));
        EXPECT_LT(dist(expm(a), opmodel::testing::taylor_exp(a, 60)), 1e-12);
    }
}

TEST(ExpmProperty, InverseAndSemigroupLaw) {
    Rng rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = uniform_index(rng, 1, 16);
        const ComplexMatrix a = random_with_norm(rng, n, uniform(rng, 0.0, 5.0));
        const ComplexMatrix id = ComplexMatrix::identity(n);
        EXPECT_LT(dist(expm(a) * expm(-a), id), 1e-10) << "n=" << n;
        const double s = uniform(rng, 0.0, 2.0), t = uniform(rng, 0.0, 2.0);
        const ComplexMatrix lhs = expm(a * Complex(s + t));
        const ComplexMatrix rhs = expm(a * Complex(s)) * expm(a * Complex(t));
        EXPECT_LT(dist(lhs, rhs), 1e-10 * std::max(1.0, op_norm(lhs)));
    }
}

TEST(HermEig, Identity) {
    const auto e = herm_eig(ComplexMatrix::identity(4));
    for (double v : e.values) EXPECT_DOUBLE_EQ(v, 1.0);
    EXPECT_LT(dist(e.vectors, ComplexMatrix::identity(4)), 1e-15);
}

TEST(HermEig, DiagonalSortedAscending) {
    const auto e = herm_eig(ComplexMatrix::diagonal({3.0, 1.0}));
    EXPECT_DOUBLE_EQ(e.values[0], 1.0);
    EXPECT_DOUBLE_EQ(e.values[1], 3.0);
    EXPECT_NEAR(std::abs(e.vectors(1, 0)), 1.0, 1e-15);
}

TEST(HermEig, PauliX) {
    const ComplexMatrix x = {{0.0, 1.0}, {1.0, 0.0}};
    const auto e = herm_eig(x);
    EXPECT_NEAR(e.values[0], -1.0, 1e-15);
    EXPECT_NEAR(e.values[1], 1.0, 1e-15);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_NEAR(std::abs(e.vectors(0, k)), 1.0 / std::sqrt(2.0), 1e-14);
        EXPECT_NEAR(std::abs(e.vectors(1, k)), 1.0 / std::sqrt(2.0), 1e-14);
    }
}

TEST(HermEig, RejectsNonHermitian) {
    const ComplexMatrix a = {{0.0, 1.0}, {0.0, 0.0}};
    EXPECT_THROW(herm_eig(a), PreconditionError);
}

TEST(HermEigProperty, Reconstruction) {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = uniform_index(rng, 1, 24);
        const ComplexMatrix g = ginibre(rng, n, n);
        const ComplexMatrix h = (g + g.adjoint()) * Complex(0.5);
        const auto e = herm_eig(h);
        const ComplexMatrix rebuilt = hermitian_function(e, [](double x) { return Complex(x); });
        EXPECT_LE(dist(rebuilt, h), 1e-10 * op_norm(h));
        EXPECT_LE(unitarity_defect(e.vectors), 1e-12);
        EXPECT_TRUE(std::is_sorted(e.values.begin(), e.values.end()));
    }
}

TEST(PsdSqrt, Examples) {
    EXPECT_LT(dist(psd_sqrt(ComplexMatrix::identity(3)), ComplexMatrix::identity(3)), 1e-15);
    EXPECT_LT(dist(psd_sqrt(ComplexMatrix::diagonal({4.0, 9.0})), ComplexMatrix::diagonal({2.0, 3.0})), 1e-14);
    EXPECT_NEAR(psd_sqrt(ComplexMatrix::diagonal({0.75}))(0, 0).real(), 0.8660254037844386, 1e-15);
}

TEST(PsdSqrt, ClipsRoundoffButRejectsNegative) {
    const ComplexMatrix tiny = ComplexMatrix::diagonal({1.0, -1e-12});
    EXPECT_NO_THROW(psd_sqrt(tiny));
    EXPECT_EQ(psd_sqrt(tiny)(1, 1), Complex(0.0));
    EXPECT_THROW(psd_sqrt(ComplexMatrix::diagonal({1.0, -1e-3})), NotPsdError);
}

TEST(PsdSqrtProperty, SquaresBack) {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = uniform_index(rng, 1, 16);
        const ComplexMatrix g = ginibre(rng, n, n);
        const ComplexMatrix h = g * g.adjoint();
        const ComplexMatrix r = psd_sqrt(h);
        EXPECT_LE(dist(r * r, h), 1e-9 * op_norm(h));
        EXPECT_LE(hermiticity_defect(r), 1e-15 * op_norm(h));
    }
}

TEST(Svd, Examples) {
    EXPECT_EQ(min_singular(ComplexMatrix::identity(3) - ComplexMatrix::identity(3)), 0.0);
    EXPECT_DOUBLE_EQ(op_norm(ComplexMatrix::diagonal({0.3, 0.9})), 0.9);
    EXPECT_LT(dist(solve(ComplexMatrix::identity(3) * Complex(2.0), ComplexMatrix::identity(3)),
                   ComplexMatrix::identity(3) * Complex(0.5)),
              1e-16);
}

TEST(Svd, TinySingularValueResolvedToRelativePrecision) {
    // The one-sided Jacobi path keeps small singular values accurate; a Gram-based
    // route would floor this at ~1e-8.
    const ComplexMatrix a = ComplexMatrix::diagonal({-1e-15, -1.0});
    EXPECT_NEAR(min_singular(a), 1e-15, 1e-30);
    Rng rng(3);
    const ComplexMatrix u = random_unitary(rng, 4), v = random_unitary(rng, 4);
    const ComplexMatrix m = u * ComplexMatrix::diagonal({1.0, 0.5, 1e-11, 0.0}) * v.adjoint();
    const auto s = singular_values(m);
    EXPECT_NEAR(s[2], 1e-11, 1e-15);
    EXPECT_LT(s[3], 1e-15);
}

TEST(SvdProperty, ReconstructionAndOrdering) {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t m = uniform_index(rng, 1, 20), n = uniform_index(rng, 1, 20);
        ComplexMatrix a = ginibre(rng, m, n);
        if (trial % 3 == 0 && n > 1) {
            // force rank deficiency
            const std::size_t r = std::min(m, n) / 2;
            a = ginibre(rng, m, r) * ginibre(rng, r, n);
        }
        const Svd s = svd(a);
        ComplexMatrix us = s.U;
        for (std::size_t j = 0; j < s.singular_values.size(); ++j) {
            for (std::size_t i = 0; i < us.rows(); ++i) us(i, j) *= s.singular_values[j];
        }
        EXPECT_LE(dist(us * s.V.adjoint(), a), 1e-10 * std::max(1.0, op_norm(a)));
        EXPECT_TRUE(std::is_sorted(s.singular_values.rbegin(), s.singular_values.rend()));
        EXPECT_LE(unitarity_defect(s.U), 1e-10);
        EXPECT_LE(unitarity_defect(s.V), 1e-10);
        EXPECT_NEAR(op_norm(a), s.singular_values.front(), 1e-10 * s.singular_values.front());
    }
}

TEST(Kernel, BasisOfNullSpace) {
    const ComplexMatrix a = {{1.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
    const ComplexMatrix k = kernel_basis(a, 1e-12);
    ASSERT_EQ(k.cols(), 1U);
    EXPECT_LT(op_norm(a * k), 1e-14);
}

TEST(Qr, ThinFactorisation) {
    Rng rng(17);
    const ComplexMatrix a = ginibre(rng, 9, 5);
    const Qr f = qr(a);
    EXPECT_LT(dist(f.Q * f.R, a), 1e-12);
    EXPECT_LT(unitarity_defect(f.Q), 1e-13);
    for (std::size_t i = 0; i < f.R.rows(); ++i) {
        for (std::size_t j = 0; j < i; ++j) EXPECT_EQ(f.R(i, j), Complex(0.0));
    }
}

TEST(Qr, PivotedRevealsRank) {
    Rng rng(21);
    const ComplexMatrix a = ginibre(rng, 12, 3) * ginibre(rng, 3, 40);
    const Qr f = qr_pivoted(a, 1e-10);
    EXPECT_EQ(f.rank, 3U);
    // range captured
    const ComplexMatrix resid = a - f.Q * adjoint_times(f.Q, a);
    EXPECT_LT(op_norm(resid), 1e-10 * op_norm(a));
}

TEST(Solve, SingularReportsRank) {
    const ComplexMatrix a = {{1.0, 2.0}, {2.0, 4.0}};
    try {
        solve(a, ComplexMatrix::identity(2));
        FAIL() << "expected RankDeficiencyError";
    } catch (const RankDeficiencyError& e) {
        EXPECT_EQ(e.rank(), 1U);
    }
}

TEST(Solve, RandomSystems) {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const ComplexMatrix a = ginibre(rng, 8, 8), b = ginibre(rng, 8, 3);
        EXPECT_LT(dist(a * solve(a, b), b), 1e-10 * op_norm(b) * op_norm(a));
    }
}

TEST(LeastSquares, MinimumNormSolution) {
    // underdetermined: x1 + x2 = 2 -> min-norm solution (1, 1)
    const ComplexMatrix a = {{1.0, 1.0}};
    const ComplexMatrix b = {{2.0}};
    const ComplexMatrix x = least_squares(a, b, 1e-14);
    EXPECT_NEAR(x(0, 0).real(), 1.0, 1e-12);
    EXPECT_NEAR(x(1, 0).real(), 1.0, 1e-12);
}

TEST(MatrixJson, BitExactRoundTrip) {
    Rng rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        ComplexMatrix a = ginibre(rng, uniform_index(rng, 0, 5), uniform_index(rng, 1, 5));
        if (!a.empty()) a(0, 0) = {1.0 / 3.0, -std::ldexp(1.0, -1070)};
        const std::string text = matrix_to_json(a).dump();
        const ComplexMatrix b = matrix_from_json(nlohmann::json::parse(text));
        EXPECT_EQ(a, b);
    }
}

TEST(MatrixJson, RejectsMalformed) {
    EXPECT_THROW(matrix_from_json(nlohmann::json::parse(R"({"rows":2,"cols":1,"data":[[1,0]]})")), IoError);
    EXPECT_THROW(matrix_from_json(nlohmann::json::parse(R"({"rows":1,"cols":1,"data":[[1]]})")), IoError);
    EXPECT_THROW(matrix_from_json(nlohmann::json::parse(R"({"cols":1,"data":[]})")), IoError);
}

TEST(Matrix, KronAndBlocks) {
    const ComplexMatrix a = {{1.0, 2.0}, {3.0, 4.0}};
    const ComplexMatrix k = kron(a, ComplexMatrix::identity(2));
    EXPECT_EQ(k(2, 0), Complex(3.0));
    EXPECT_EQ(k(3, 1), Complex(3.0));
    EXPECT_EQ(k(2, 1), Complex(0.0));
    EXPECT_EQ(k.block(2, 2, 2, 2), ComplexMatrix::identity(2) * Complex(4.0));
    EXPECT_THROW(a * ComplexMatrix(3, 1), DimensionError);
}
