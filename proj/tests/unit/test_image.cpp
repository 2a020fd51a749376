#include <filesystem>

#include <gtest/gtest.h>

#include "reflex/image.hpp"
#include "test_util.hpp"

using namespace reflex;

TEST(Image, ConstructsFilledAndIndexesRowMajor) {
    Image img(2, 3, 2, 0.25f);
    EXPECT_EQ(img.data().size(), 12u);
    img.at(1, 2, 1) = 0.75f;
    EXPECT_FLOAT_EQ(img.data()[11], 0.75f);
    EXPECT_FLOAT_EQ(img.at(0, 0, 0), 0.25f);
}

TEST(Image, ClampedReadsBorder) {
    std::mt19937_64 rng(1);
    const Image img = fixtures::random_image(4, 5, 1, rng);
    EXPECT_EQ(img.clamped(-3, 2, 0), img.at(0, 2, 0));
    EXPECT_EQ(img.clamped(9, 9, 0), img.at(3, 4, 0));
}

TEST(Image, MaskSubsetAndCount) {
    BinaryEdgeMask a(3, 3), b(3, 3);
    a.set(1, 1, true);
    b.set(1, 1, true);
    b.set(0, 2, true);
    EXPECT_TRUE(a.subset_of(b));
    EXPECT_FALSE(b.subset_of(a));
    EXPECT_EQ(b.count(), 2u);
}

TEST(Image, SameShapeCheckThrows) {
    EXPECT_THROW(require_same_shape(Image(2, 2, 3), Image(2, 3, 3), "t"), ShapeError);
    EXPECT_NO_THROW(require_same_shape(Image(2, 2, 3), Image(2, 2, 3), "t"));
}

TEST(Orientation, IndexRoundTrip) {
    for (int i = 0; i < 8; ++i) EXPECT_EQ(Orientation::from_index(i).index(), i);
}

TEST(Orientation, QuarterTurnMapsCorners) {
    // 2x3 image, one CCW quarter turn gives 3x2; the top-right pixel moves to the top-left.
    Image img(2, 3, 1);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) img.at(y, x, 0) = static_cast<float>(10 * y + x);
    const Image r = transform(img, Orientation{1, false});
    ASSERT_EQ(r.height(), 3);
    ASSERT_EQ(r.width(), 2);
    EXPECT_EQ(r.at(0, 0, 0), 2.0f);
    EXPECT_EQ(r.at(2, 0, 0), 0.0f);
    EXPECT_EQ(r.at(0, 1, 0), 12.0f);
}

TEST(Orientation, MirrorFlipsColumns) {
    Image img(1, 3, 1);
    for (int x = 0; x < 3; ++x) img.at(0, x, 0) = static_cast<float>(x);
    const Image m = transform(img, Orientation{0, true});
    EXPECT_EQ(m.at(0, 0, 0), 2.0f);
    EXPECT_EQ(m.at(0, 2, 0), 0.0f);
}

TEST(Orientation, FourQuarterTurnsIsIdentity) {
    std::mt19937_64 rng(3);
    const Image img = fixtures::random_image(5, 7, 3, rng);
    Image r = img;
    for (int i = 0; i < 4; ++i) r = transform(r, Orientation{1, false});
    EXPECT_EQ(r, img);
}

TEST(Orientation, DirectionFollowsPixelContent) {
    // A pixel and its +x neighbour must stay neighbours along the transformed direction.
    Image img(6, 6, 1);
    img.at(2, 3, 0) = 1.0f;
    img.at(2, 4, 0) = 2.0f;
    for (int i = 0; i < 8; ++i) {
        const Orientation o = Orientation::from_index(i);
        const Image t = transform(img, o);
        const auto [dy, dx] = transform_direction(0, 1, o);
        int fy = -1, fx = -1;
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x)
                if (t.at(y, x, 0) == 1.0f) fy = y, fx = x;
        ASSERT_GE(fy, 0);
        EXPECT_EQ(t.at(fy + dy, fx + dx, 0), 2.0f) << "orientation " << i;
    }
}

TEST(Image, PngRoundTripIsQuantized) {
    std::mt19937_64 rng(4);
    const Image img = fixtures::random_image(6, 5, 3, rng);
    const auto path = std::filesystem::temp_directory_path() / "reflex_test_roundtrip.png";
    save_png(img, path);
    const Image back = load_png(path);
    EXPECT_EQ(back, quantize8(img));
    std::filesystem::remove(path);
}

TEST(Image, CropOutOfRangeThrows) {
    EXPECT_THROW((void)crop(Image(4, 4, 1), 2, 2, 3, 3), std::invalid_argument);
}
