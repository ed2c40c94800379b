#include <gtest/gtest.h>

#include "opmodel/normal.hpp"
#include "opmodel/wold.hpp"
#include "test_support.hpp"

using namespace opmodel;
using opmodel::testing::dist;
using opmodel::testing::lower_shift;

namespace {

StructuredIsometryTuple single_shift(std::size_t n) {
    TensorBlock b;
    b.legs = {Leg::shift(n)};
    b.assignment = {0};
    return assemble(1, {b}, 0, false);
}

StructuredIsometryTuple shift_times_unitary(const ComplexMatrix& u, bool scrambled, std::uint64_t seed = 1) {
    TensorBlock b;
    b.legs = {Leg::shift(4), Leg::unitary({{1, u}})};
    b.assignment = {0, 1};
    return assemble(2, {b}, seed, scrambled);
}

double doubly_commuting_defect(const std::vector<ComplexMatrix>& vs, const SubspaceBasis& m) {
    double worst = 0.0;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        for (std::size_t j = 0; j < vs.size(); ++j) {
            if (i == j) continue;
            worst = std::max(worst, op_norm(commutator(vs[i], vs[j]) * m.frame));
            worst = std::max(worst, op_norm(commutator(vs[i].adjoint(), vs[j]) * m.frame));
        }
    }
    return worst;
}

} // namespace

TEST(Realize, SingleShiftLeg) {
    const auto s = single_shift(4);
    const auto v = realize(s);
    EXPECT_EQ(v[0], lower_shift(4));
}

TEST(Realize, ShiftTensorUnitary) {
    const ComplexMatrix u = ComplexMatrix::diagonal({Complex(0.0, 1.0)});
    const auto s = shift_times_unitary(u, false);
    const auto v = realize(s, {1, 1});
    EXPECT_EQ(v[0] * v[1], kron(lower_shift(4), u));
    EXPECT_EQ(v[0], kron(lower_shift(4), ComplexMatrix::identity(1)));
}

TEST(Realize, DoublyCommutingUnderScramble) {
    Rng rng(9);
    std::vector<TensorBlock> blocks;
    for (std::uint32_t mask : {0u, 3u, 5u, 7u}) blocks.push_back(pattern_block(3, mask, rng, 3, 2));
    const auto s = assemble(3, blocks, 99);
    const auto m = margin_basis(s, 1);
    const auto vs = realize(s);
    EXPECT_LT(doubly_commuting_defect(vs, m), 1e-12);
    for (const auto& v : vs) {
        const ComplexMatrix vf = v * m.frame;
        EXPECT_LT(op_norm(adjoint_times(vf, vf) - ComplexMatrix::identity(m.dim())), 1e-12);
    }
    const auto vt = realize_semigroup(s, 0.5);
    EXPECT_LT(doubly_commuting_defect(vt, m), 1e-12);
}

TEST(Realize, SemigroupLawOfRealizedTuple) {
    Rng rng(10);
    const auto s = assemble(2, {pattern_block(2, 1u, rng, 5, 2)}, 5);
    const auto a = realize_semigroup(s, 0.3), b = realize_semigroup(s, 0.9), ab = realize_semigroup(s, 1.2);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_LT(dist(ab[j], a[j] * b[j]), 1e-10);
}

TEST(AsymptoticProjection, Examples) {
    const auto s = single_shift(6);
    const auto m = margin_basis(s, 1);
    EXPECT_LT(max_abs(asymptotic_unitary_projection(realize(s)[0], 8, m)), 1e-15);

    Rng rng(3);
    const ComplexMatrix u = random_unitary(rng, 4);
    const SubspaceBasis whole(ComplexMatrix::identity(4));
    EXPECT_LT(dist(asymptotic_unitary_projection(u, 8, whole), ComplexMatrix::identity(4)), 1e-12);

    const ComplexMatrix v = direct_sum(lower_shift(5), u);
    ComplexMatrix f(9, 8);
    for (std::size_t i = 0; i < 4; ++i) f(i, i) = 1.0;
    for (std::size_t i = 0; i < 4; ++i) f(5 + i, 4 + i) = 1.0;
    const auto e = asymptotic_unitary_projection(v, 8, SubspaceBasis(f));
    EXPECT_LT(dist(e, direct_sum(ComplexMatrix(5, 5), ComplexMatrix::identity(4))), 1e-12);
}

TEST(AsymptoticProjection, InsufficientHeadroom) {
    const auto s = single_shift(12);
    EXPECT_THROW(asymptotic_unitary_projection(realize(s)[0], 8, margin_basis(s, 1)), HeadroomError);
    // the full truncation is not in the isometric margin
    EXPECT_THROW(asymptotic_unitary_projection(realize(s)[0], 16, SubspaceBasis(ComplexMatrix::identity(12))),
                 PreconditionError);
}

TEST(Slocinski, Examples) {
    const auto pure = slocinski_decompose(single_shift(6));
    EXPECT_EQ(pure.dimensions.at(0), 0u);
    EXPECT_EQ(pure.dimensions.at(1), 6u);
    EXPECT_LT(dist(pure.projections.at(1), ComplexMatrix::identity(6)), 1e-12);

    Rng rng(4);
    const auto su = shift_times_unitary(random_unitary_avoiding_one(rng, 3), true);
    const auto d = slocinski_decompose(su);
    EXPECT_EQ(d.dimensions.at(1), 12u);
    EXPECT_EQ(d.dimensions.at(0) + d.dimensions.at(2) + d.dimensions.at(3), 0u);
    EXPECT_TRUE(classification_consistent(d));

    const auto two = assemble(2, {pattern_block(2, 3u, rng, 4, 2), pattern_block(2, 0u, rng, 4, 3)}, 17);
    const auto d2 = slocinski_decompose(two);
    EXPECT_EQ(d2.dimensions.at(3), 16u);
    EXPECT_EQ(d2.dimensions.at(0), 3u);
    EXPECT_TRUE(classification_consistent(d2));
}

TEST(Slocinski, AllPatternsMatchGroundTruth) {
    for (std::size_t n : {2u, 3u}) {
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            for (std::uint64_t seed : {1u, 2u}) {
                Rng rng(seed * 100 + mask);
                const std::uint32_t other = static_cast<std::uint32_t>(uniform_index(rng, 0, (1u << n) - 1));
                const auto s = assemble(n, {pattern_block(n, mask, rng, 3, 2), pattern_block(n, other, rng, 3, 1, 2)}, seed);
                const auto d = slocinski_decompose(s);
                EXPECT_EQ(d.dimensions, s.ground_truth()) << "n=" << n << " mask=" << mask;
                EXPECT_LT(d.completeness_residual, 1e-8);
                EXPECT_LT(d.orthogonality_residual, 1e-8);
                EXPECT_LT(d.reducing_residual, 1e-8);
                EXPECT_TRUE(classification_consistent(d));
            }
        }
    }
}

TEST(Slocinski, ScrambleInvariance) {
    Rng rng(5);
    std::vector<TensorBlock> blocks{pattern_block(2, 1u, rng, 4, 2), pattern_block(2, 2u, rng, 4, 1)};
    const auto a = assemble(2, blocks, 1), b = assemble(2, blocks, 2);
    const auto da = slocinski_decompose(a), db = slocinski_decompose(b);
    EXPECT_EQ(da.dimensions, db.dimensions);
    EXPECT_EQ(da.classification, db.classification);
}

TEST(Multishift, Examples) {
    Rng rng(6);
    const auto pure = assemble(2, {pattern_block(2, 3u, rng, 4)}, 1);
    const auto c = classify_multishift(pure);
    EXPECT_TRUE(c.is_multishift);
    EXPECT_EQ(c.multiplicity, 1u);

    const auto mult = assemble(2, {pattern_block(2, 3u, rng, 4, 2, 3)}, 2);
    const auto c3 = classify_multishift(mult);
    EXPECT_TRUE(c3.is_multishift);
    EXPECT_EQ(c3.multiplicity, 3u);

    const auto mixed = assemble(2, {pattern_block(2, 1u, rng, 4, 2)}, 3);
    EXPECT_FALSE(classify_multishift(mixed).is_multishift);
}

TEST(Wold, MixedModelConsistency) {
    Rng rng(7);
    const std::size_t n = 3;
    const auto s = assemble(n, {pattern_block(n, 1u, rng, 4, 3)}, 0, false);
    const TensorBlock& b = s.blocks.front();
    const Leg& ul = b.legs[b.assignment[1]];
    std::vector<ComplexMatrix> us{ul.unitaries.at(1), ul.unitaries.at(2)};
    const auto model = normal_model(us);
    for (const auto& row : model.values) {
        for (Complex v : row) {
            EXPECT_NEAR(std::abs(v), 1.0, 1e-10);
            EXPECT_GT(std::abs(v - 1.0), 1e-8);
        }
    }
    const auto m = margin_basis(s, 1);
    for (double t : {0.5, 1.0}) {
        const auto vt = realize_semigroup(s, t);
        for (std::size_t j = 1; j < n; ++j) {
            const auto rebuilt = kron(ComplexMatrix::identity(4), model_semigroup_at(model, j - 1, t));
            EXPECT_LT(op_norm((rebuilt - vt[j]) * m.frame), 1e-8);
        }
    }
}

TEST(Wold, JsonRoundTrip) {
    Rng rng(8);
    const auto s = assemble(2, {pattern_block(2, 1u, rng, 3, 2), pattern_block(2, 0u, rng, 3, 2)}, 4);
    const auto back = tuple_from_json(nlohmann::json::parse(tuple_to_json(s).dump()));
    EXPECT_EQ(back.ground_truth(), s.ground_truth());
    EXPECT_EQ(realize(back), realize(s));
    EXPECT_THROW(tuple_from_json(nlohmann::json::parse(R"({"n":1})")), IoError);
}
