#include <gtest/gtest.h>

#include "relight/resize.hpp"
#include "test_util.hpp"

using namespace relight;

TEST(Resize, SameSizeIsIdentity) {
    Rng rng(1);
    const auto img = relight::testing::random_image(9, 7, rng);
    EXPECT_EQ(resize(img, 9, 7), img);
}

TEST(Resize, ConstantStaysExact) {
    DepthMap d(13, 29, 0.3f);
    const auto out = resize(d, 64, 64);
    for (float v : out.data()) ASSERT_EQ(v, 0.3f);
}

TEST(Resize, UpsampleWithPixelCenters) {
    // 2 -> 4 samples: centers at -0.25, 0.25, 0.75, 1.25 in source units,
    // clamped at the edges.
    Mask m(2, 1);
    m.at(0, 0) = 0.0f;
    m.at(1, 0) = 1.0f;
    const auto out = resize(m, 4, 1);
    EXPECT_FLOAT_EQ(out.at(0, 0), 0.0f);
    EXPECT_FLOAT_EQ(out.at(1, 0), 0.25f);
    EXPECT_FLOAT_EQ(out.at(2, 0), 0.75f);
    EXPECT_FLOAT_EQ(out.at(3, 0), 1.0f);
}

TEST(Resize, DownsampleByTwoAveragesPairs) {
    Mask m(4, 2);
    const float v[8] = {0, 1, 2, 3, 4, 5, 6, 7};
    std::copy(v, v + 8, m.data().begin());
    const auto out = resize(m, 2, 1);
    EXPECT_FLOAT_EQ(out.at(0, 0), (0 + 1 + 4 + 5) / 4.0f);
    EXPECT_FLOAT_EQ(out.at(1, 0), (2 + 3 + 6 + 7) / 4.0f);
}

TEST(Resize, RejectsBadTargets) {
    ImageRGB img(4, 4);
    EXPECT_THROW(resize(img, 0, 4), Error);
    EXPECT_THROW(resize(ImageRGB{}, 4, 4), Error);
}
