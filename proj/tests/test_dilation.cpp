#include <gtest/gtest.h>

#include <filesystem>

#include "opmodel/dilation.hpp"
#include "test_support.hpp"

using namespace opmodel;
using opmodel::testing::dist;
using opmodel::testing::lower_shift;

namespace {

ComplexMatrix scalar(Complex c) { return ComplexMatrix(1, 1, c); }

// Basis-free Gram block Omega[m]* Omega[m'] of the dilation of a tensor tuple, computed
// directly as T^m D^2 T*^{m'} leg by leg.
ComplexMatrix leg_gram(const ComplexMatrix& c, std::size_t a, std::size_t b) {
    const std::size_t d = c.rows();
    const ComplexMatrix d2 = ComplexMatrix::identity(d) - c * c.adjoint();
    return matrix_power(c, a) * d2 * matrix_power(c.adjoint(), b);
}

ComplexMatrix omega_block(const DilationResult& r, std::size_t block) {
    return r.omega.block(block * r.defect_dim, 0, r.defect_dim, r.h_dim);
}

SubspaceBasis monomial_span(const BoxLayout& lay, const std::vector<std::vector<std::size_t>>& ms) {
    ComplexMatrix f(lay.size(), ms.size());
    for (std::size_t c = 0; c < ms.size(); ++c) {
        std::size_t row = 0;
        for (std::size_t j = 0; j < ms[c].size(); ++j) row += ms[c][j] * lay.stride(j);
        f(row, c) = 1.0;
    }
    return SubspaceBasis(std::move(f));
}

} // namespace

TEST(Defect, ScalarPair) {
    const auto d = defect_operator({scalar(0.3), scalar(Complex(0.0, 0.6))});
    EXPECT_EQ(d.dim(), 1u);
    EXPECT_NEAR(d.d(0, 0).real(), std::sqrt((1 - 0.09) * (1 - 0.36)), 1e-14);
    const auto half = defect_operator({scalar(0.5), scalar(0.5)});
    EXPECT_NEAR(half.d(0, 0).real(), 0.75, 1e-14);
}

TEST(Defect, ZeroTupleHasFullDefect) {
    const ComplexMatrix z(3, 3);
    const auto d = defect_operator({z, z});
    EXPECT_EQ(d.dim(), 3u);
    EXPECT_LT(dist(d.d, ComplexMatrix::identity(3)), 1e-14);
}

TEST(Defect, RejectsTuplesThatAreNotDoublyCommuting) {
    const ComplexMatrix j = lower_shift(3);
    EXPECT_THROW(defect_operator({j, j}), PreconditionError);
    EXPECT_THROW(defect_operator({scalar(1.0)}), PreconditionError);
}

TEST(Dilation, ScalarHalfAtFortyDegrees) {
    DilationOptions opt;
    opt.truncation = {40};
    const auto r = dilation_isometry({scalar(0.5)}, opt);
    ASSERT_EQ(r.omega.rows(), 40u);
    for (std::size_t m = 0; m < 40; ++m) {
        EXPECT_NEAR(std::abs(r.omega(m, 0)), std::sqrt(0.75) * std::pow(0.5, static_cast<double>(m)), 1e-15);
    }
    EXPECT_LE(r.truncated_mass, 1e-20);
    EXPECT_NEAR(r.truncated_mass, std::pow(0.25, 40), 1e-30);
    EXPECT_LE(r.isometry_defect, 1e-15);
    const auto mr = minimality_defect(r, 39);
    EXPECT_LE(mr.defect, 1e-9);
}

TEST(Dilation, ZeroOperatorEmbedsAsConstants) {
    const auto r = dilation_isometry({ComplexMatrix(2, 2)});
    EXPECT_EQ(r.layout.degrees.front(), 1u);
    EXPECT_EQ(r.defect_dim, 2u);
    const auto d = defect_operator({ComplexMatrix(2, 2)});
    // constant coefficient, read back in H through the defect basis
    EXPECT_LT(dist(d.basis.frame * omega_block(r, 0), ComplexMatrix::identity(2)), 1e-14);
    EXPECT_LT(r.compression.front(), 1e-15);
    EXPECT_EQ(minimality_defect(r, 0).defect, 0.0);

    DilationOptions wide;
    wide.truncation = {5};
    const auto r5 = dilation_isometry({ComplexMatrix(2, 2)}, wide);
    for (std::size_t m = 1; m < 5; ++m) EXPECT_EQ(max_abs(omega_block(r5, m)), 0.0);
    EXPECT_LE(minimality_defect(r5, 4).defect, 1e-14);
    const auto checks = verify_semigroup_dilation(r5, {ComplexMatrix(2, 2)}, {0.0, 0.3, 1.0, 2.0});
    EXPECT_EQ(checks.front().residual, 0.0);
    for (const auto& c : checks) EXPECT_LE(c.residual, 1e-10);
}

TEST(Dilation, TensorExampleFactorizesLegwise) {
    Rng rng(17);
    const ComplexMatrix c1 = random_with_norm(rng, 2, 0.4);
    const ComplexMatrix v = random_unitary(rng, 3);
    const ComplexMatrix c2n = v * lower_shift(3) * v.adjoint();  // pure, nilpotent
    const auto ts = tensor_tuple({c1, c2n});
    DilationOptions opt;
    opt.truncation = {32, 32};
    const auto r = dilation_isometry(ts, opt);
    EXPECT_EQ(r.defect_dim, 2u);
    for (double x : r.intertwining) EXPECT_LE(x, 1e-9);
    EXPECT_LE(r.isometry_defect, 1e-12);

    for (auto [m1, m2, k1, k2] : std::vector<std::array<std::size_t, 4>>{{0, 0, 0, 0}, {1, 2, 0, 1}, {3, 0, 5, 2}, {7, 1, 2, 1}}) {
        const ComplexMatrix g = adjoint_times(omega_block(r, m1 * 32 + m2), omega_block(r, k1 * 32 + k2));
        const ComplexMatrix oracle = kron(leg_gram(c1, m1, k1), leg_gram(c2n, m2, k2));
        EXPECT_LT(dist(g, oracle), 1e-13);
    }
    const auto checks = verify_semigroup_dilation(r, ts, {0.5, 1.0});
    for (const auto& c : checks) EXPECT_LE(c.residual, 1e-7);
}

TEST(Dilation, RandomTuplesMeetResidualsAndTailBounds) {
    for (std::size_t n = 1; n <= 3; ++n) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            Rng rng(seed * 101 + n);
            const auto ts = random_pure_tuple(rng, n, n == 3 ? 250 : 600);
            const auto r = dilation_isometry(ts);
            SCOPED_TRACE("n=" + std::to_string(n) + " seed=" + std::to_string(seed));
            EXPECT_LE(r.tail_bound, 1e-9);
            EXPECT_LE(r.isometry_defect, 1e-8);
            EXPECT_LE(r.isometry_defect, r.bounds.isometry + roundoff_allowance);
            for (std::size_t j = 0; j < n; ++j) {
                EXPECT_LE(r.intertwining[j], 1e-7);
                EXPECT_LE(r.intertwining[j], r.bounds.intertwining[j] + roundoff_allowance);
                EXPECT_LE(r.compression[j], 1e-7);
                EXPECT_LE(r.compression[j], r.bounds.compression[j] + roundoff_allowance);
                EXPECT_LE(r.star_invariance[j], 1e-7);
            }
            for (const auto& c : verify_semigroup_dilation(r, ts, {0.1, 0.5, 1.0, 2.0})) {
                EXPECT_LE(c.residual, 1e-7);
                EXPECT_LE(c.residual, c.bound + roundoff_allowance);
            }
            std::size_t max_power = 0;
            for (auto d : r.layout.degrees) max_power = std::max(max_power, d - 1);
            EXPECT_LE(minimality_defect(r, max_power).defect, 1e-7);
            const auto ranks = power_vs_time_span_ranks(r);
            EXPECT_EQ(ranks.power_rank, ranks.time_rank);
        }
    }
}

TEST(Dilation, UnitaryConjugationIsCovariant) {
    Rng rng(5);
    const auto ts = random_pure_tuple(rng, 2, 400);
    const ComplexMatrix w = random_unitary(rng, ts.front().rows());
    std::vector<ComplexMatrix> conj;
    for (const auto& t : ts) conj.push_back(w * t * w.adjoint());
    const auto a = dilation_isometry(ts);
    const auto b = dilation_isometry(conj);
    ASSERT_EQ(a.layout.degrees, b.layout.degrees);
    EXPECT_NEAR(a.isometry_defect, b.isometry_defect, 1e-10);
    for (std::size_t j = 0; j < 2; ++j) {
        EXPECT_NEAR(a.intertwining[j], b.intertwining[j], 1e-10);
        EXPECT_NEAR(a.compression[j], b.compression[j], 1e-10);
    }
    // defect coordinates are fixed up to a unitary u on E
    const auto da = defect_operator(ts);
    const auto db = defect_operator(conj);
    const ComplexMatrix u = adjoint_times(db.basis.frame, w * da.basis.frame);
    EXPECT_LT(unitarity_defect(u), 1e-10);
    std::size_t boxes = 1;
    for (auto d : a.layout.degrees) boxes *= d;
    ComplexMatrix expect = kron(ComplexMatrix::identity(boxes), u) * a.omega * w.adjoint();
    EXPECT_LT(dist(b.omega, expect), 1e-10);
}

TEST(Dilation, TruncationErrors) {
    DilationOptions capped;
    capped.truncation_cap = 8;
    EXPECT_THROW(dilation_isometry({scalar(0.9), scalar(0.8)}, capped), TruncationError);
    DilationOptions small;
    small.truncation = {4};
    try {
        dilation_isometry({scalar(0.5)}, small);
        FAIL() << "expected a truncation error";
    } catch (const TruncationError& e) {
        EXPECT_NEAR(e.tail_bound(), 0.0625, 1e-15);
    }
}

TEST(Dilation, ShiftLegsDoublyCommuteUpstairs) {
    Rng rng(3);
    const BoxLayout lay{{4, 5, 3}, 2};
    const ComplexMatrix x = ginibre(rng, lay.size(), 3);
    const auto s = shift_coefficients();
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            if (i == j) continue;
            const ComplexMatrix a = apply_leg_toeplitz(lay, apply_leg_toeplitz(lay, x, j, s, false), i, s, true);
            const ComplexMatrix b = apply_leg_toeplitz(lay, apply_leg_toeplitz(lay, x, i, s, true), j, s, false);
            EXPECT_EQ(max_abs(a - b), 0.0);
        }
    }
}

TEST(Dilation, JsonInlinesSmallAndSidecarsLarge) {
    const auto small = dilation_isometry({scalar(0.2)});
    const auto j = dilation_to_json(small);
    EXPECT_TRUE(j.contains("omega"));
    EXPECT_EQ(matrix_from_json(j.at("omega")).rows(), small.omega.rows());

    DilationOptions opt;
    opt.truncation = {80};
    const auto big = dilation_isometry({ComplexMatrix(8, 8)}, opt);
    ASSERT_GT(big.omega.size(), inline_matrix_limit);
    const auto path = std::filesystem::temp_directory_path() / "opmodel_omega_sidecar.json";
    const auto jb = dilation_to_json(big, path);
    EXPECT_EQ(jb.at("omega_file").get<std::string>(), path.filename().string());
    EXPECT_LT(dist(matrix_from_json(read_json_file(path)), big.omega), 1e-15);
    std::filesystem::remove(path);
}

TEST(TensorSubspace, ProductOfPolynomialSpans) {
    const BoxLayout lay{{4, 4}, 1};
    const auto q = monomial_span(lay, {{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    const auto rep = tensor_invariant_subspace_check(q, {4, 4});
    EXPECT_TRUE(rep.doubly_commuting);
    ASSERT_EQ(rep.factors.size(), 2u);
    EXPECT_EQ(rep.factors[0].dim(), 2u);
    EXPECT_EQ(rep.factors[1].dim(), 2u);
    EXPECT_LE(rep.factorization_residual, 1e-12);
}

TEST(TensorSubspace, NonTensorSpanFailsDoubleCommutation) {
    const BoxLayout lay{{4, 4}, 1};
    const auto q = monomial_span(lay, {{0, 0}, {1, 0}, {0, 1}});
    const auto rep = tensor_invariant_subspace_check(q, {4, 4});
    EXPECT_FALSE(rep.doubly_commuting);
    EXPECT_GE(rep.double_commutation, 1e-2);
    EXPECT_NEAR(rep.double_commutation, 1.0, 1e-12);
    EXPECT_TRUE(rep.factors.empty());
}

TEST(TensorSubspace, BlaschkeModelSpaces) {
    const auto k1 = blaschke_model_space({Complex(0.3, 0.1), Complex(-0.2, 0.0)}, 32);
    const auto k2 = blaschke_model_space({Complex(0.0, 0.4), Complex(0.4, 0.0)}, 32);
    const auto q = tensor_subspace({k1.q, k2.q});
    const auto rep = tensor_invariant_subspace_check(q, {32, 32});
    EXPECT_TRUE(rep.doubly_commuting);
    ASSERT_EQ(rep.factors.size(), 2u);
    EXPECT_EQ(rep.factors[0].dim(), 2u);
    EXPECT_EQ(rep.factors[1].dim(), 2u);
    EXPECT_LE(rep.factorization_residual, 1e-8);
    EXPECT_LT(dist(rep.factors[0].projector(), k1.q.projector()), 1e-8);
}

TEST(TensorSubspace, RejectsSubspacesThatAreNotStarInvariant) {
    const BoxLayout lay{{3, 3}, 1};
    EXPECT_THROW(tensor_invariant_subspace_check(monomial_span(lay, {{1, 0}}), {3, 3}), PreconditionError);
}
