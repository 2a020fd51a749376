#include <gtest/gtest.h>

#include "reflex/edge_ops.hpp"
#include "test_util.hpp"

using namespace reflex;

TEST(EdgeOps, UnitStepReadsOneOnBothSidesOfTheJump) {
    // Hand-evaluated 3x3 Sobel: at the two columns adjacent to the jump the horizontal
    // response is (1+2+1)*1 = 4, scaled by 1/4; elsewhere it vanishes.
    const Image step = fixtures::step_image(8, 12, 3, 6);
    const GradientMap g = gradient_map(step);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 12; ++x) {
            const float expect = (x == 5 || x == 6) ? 1.0f : 0.0f;
            EXPECT_NEAR(g.values.at(y, x, 0), expect, 1e-6) << y << "," << x;
        }
}

TEST(EdgeOps, HalfStepScalesLinearly) {
    const Image step = fixtures::step_image(6, 10, 1, 5, 0.2f, 0.7f);
    EXPECT_NEAR(gradient_map(step).values.at(3, 4, 0), 0.5f, 1e-6);
}

TEST(EdgeOps, DiagonalGradientMagnitude) {
    // I = a*x + b*y: Sobel/4 is a central difference over two pixels, so the magnitude is 2*|(a, b)|.
    Image ramp(9, 9, 1);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x) ramp.at(y, x, 0) = 0.03f * x + 0.04f * y;
    EXPECT_NEAR(gradient_map(ramp).values.at(4, 4, 0), 0.1f, 1e-6);
}

TEST(EdgeOps, GradientMapCommutesWithMirroring) {
    std::mt19937_64 rng(31);
    const Image img = fixtures::random_image(11, 13, 3, rng);
    const Orientation mirror{0, true};
    const GradientMap a = gradient_map(transform(img, mirror));
    const GradientMap b = gradient_map(img);
    const Image bm = transform(b.values, mirror);
    for (std::size_t i = 0; i < bm.data().size(); ++i) EXPECT_NEAR(a.values.data()[i], bm.data()[i], 1e-6);
}

TEST(EdgeOps, EdgeImageIsPerChannel) {
    Image img(6, 10, 3);
    for (int y = 0; y < 6; ++y)
        for (int x = 5; x < 10; ++x) img.at(y, x, 0) = 1.0f;  // red-only step
    const EdgeImage e = edge_image(img);
    EXPECT_NEAR(e.values.at(2, 4, 0), 1.0f, 1e-6);
    EXPECT_EQ(e.values.at(2, 4, 1), 0.0f);
    EXPECT_EQ(e.values.at(2, 4, 2), 0.0f);
}

TEST(EdgeOps, BinarizeUsesChannelMaximumInclusive) {
    EdgeImage e{Image(1, 3, 3)};
    e.values.at(0, 0, 2) = 0.05f;
    e.values.at(0, 1, 0) = 0.049f;
    const BinaryEdgeMask m = binarize_edges(e, 0.05f);
    EXPECT_TRUE(m.at(0, 0));
    EXPECT_FALSE(m.at(0, 1));
    EXPECT_FALSE(m.at(0, 2));
}

TEST(EdgeOps, BinarizeRejectsNonPositiveSigma) {
    EdgeImage e{Image(2, 2, 3)};
    EXPECT_THROW((void)binarize_edges(e, 0.0f), std::invalid_argument);
    EXPECT_THROW((void)binarize_edges(e, -1.0f), std::invalid_argument);
}

TEST(EdgeOps, ResidualMaskExample) {
    BinaryEdgeMask me(1, 4), mb(1, 4);
    me.set(0, 0, true);
    me.set(0, 1, true);
    mb.set(0, 1, true);
    mb.set(0, 2, true);
    const BinaryEdgeMask r = residual_mask(me, mb);
    EXPECT_TRUE(r.at(0, 0));
    EXPECT_FALSE(r.at(0, 1));
    EXPECT_FALSE(r.at(0, 2));
    EXPECT_FALSE(r.at(0, 3));
}

TEST(EdgeOps, MaskedInputsMatchDefinition) {
    std::mt19937_64 rng(2);
    const Image ref = fixtures::random_image(5, 6, 3, rng);
    const BinaryEdgeMask mb = fixtures::random_mask(5, 6, 0.3, rng);
    const BinaryEdgeMask mr = fixtures::random_mask(5, 6, 0.3, rng);
    const MaskedInputs in = masked_inputs(ref, mb, mr);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 6; ++x)
            for (int c = 0; c < 3; ++c) {
                EXPECT_EQ(in.without_reflection_edges.at(y, x, c), mr.at(y, x) ? 0.0f : ref.at(y, x, c));
                EXPECT_EQ(in.background_edges.at(y, x, c), mb.at(y, x) ? ref.at(y, x, c) : 0.0f);
            }
}

TEST(EdgeOps, ShapeMismatchThrows) {
    EXPECT_THROW((void)residual_mask(BinaryEdgeMask(2, 2), BinaryEdgeMask(2, 3)), ShapeError);
    EXPECT_THROW((void)masked_inputs(Image(2, 2, 3), BinaryEdgeMask(2, 2), BinaryEdgeMask(3, 2)), ShapeError);
}

TEST(EdgeOps, WithoutBorderClearsBand) {
    const BinaryEdgeMask full(10, 10, 1);
    const BinaryEdgeMask m = without_border(full, 2);
    EXPECT_EQ(m.count(), 36u);
    EXPECT_FALSE(m.at(1, 5));
    EXPECT_TRUE(m.at(2, 2));
}

TEST(EdgeOps, UniformImageHasNoEdges) {
    const Image flat(7, 7, 3, 0.4f);
    EXPECT_EQ(binarize_edges(edge_image(flat)).count(), 0u);
}
