#include <gtest/gtest.h>

#include <array>

#include "relight/shadows.hpp"
#include "test_util.hpp"

using namespace relight;

TEST(Patterns, NamesRoundTrip) {
    for (auto k : all_pattern_kinds) EXPECT_EQ(parse_pattern_kind(to_string(k)), k);
    EXPECT_FALSE(parse_pattern_kind("disco_ball"));
    int additions = 0;
    for (auto k : all_pattern_kinds) additions += is_engine_addition(k);
    EXPECT_GT(additions, 0);
    EXPECT_LT(additions, 10);
}

class PatternKindTest : public ::testing::TestWithParam<PatternKind> {};

TEST_P(PatternKindTest, DeterministicBoundedAndPartial) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto a = generate_pattern(GetParam(), 64, 48, seed);
        ASSERT_EQ(a, generate_pattern(GetParam(), 64, 48, seed));
        for (float v : a.data()) {
            ASSERT_GE(v, 0.0f);
            ASSERT_LE(v, 1.0f);
        }
        const double m = patterns::mean(a);
        EXPECT_GT(m, 0.05) << to_string(GetParam()) << " seed " << seed;
        EXPECT_LT(m, 0.95) << to_string(GetParam()) << " seed " << seed;
    }
    EXPECT_NE(generate_pattern(GetParam(), 64, 64, 1), generate_pattern(GetParam(), 64, 64, 2));
}

INSTANTIATE_TEST_SUITE_P(AllKinds, PatternKindTest, ::testing::ValuesIn(all_pattern_kinds),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Patterns, TooSmallThrows) { EXPECT_THROW(generate_pattern(PatternKind::Fence, 8, 64, 0), Error); }

TEST(Patterns, BlindsCoverageFollowsDuty) {
    patterns::BlindsShape b;
    b.period = 8;
    b.duty = 0.25;
    EXPECT_NEAR(patterns::mean(patterns::venetian_blinds(64, 64, b)), 0.25, 1e-6);
}

TEST(SelectPattern, FollowsWeights) {
    PatternWeights w{};
    w[static_cast<std::size_t>(PatternKind::Lattice)] = 3.0;
    w[static_cast<std::size_t>(PatternKind::Curtains)] = 1.0;
    Rng rng(5);
    std::array<int, pattern_kind_count> hist{};
    for (int i = 0; i < 40000; ++i) ++hist[static_cast<std::size_t>(select_pattern(w, rng))];
    EXPECT_EQ(hist[static_cast<std::size_t>(PatternKind::Lattice)] + hist[static_cast<std::size_t>(PatternKind::Curtains)],
              40000);
    EXPECT_NEAR(hist[static_cast<std::size_t>(PatternKind::Lattice)] / 40000.0, 0.75, 0.01);
    EXPECT_THROW(select_pattern(PatternWeights{}, rng), Error);
    w[0] = -1.0;
    EXPECT_THROW(select_pattern(w, rng), Error);
}

TEST(SelectPattern, UniformCoversAllKinds) {
    Rng rng(8);
    std::array<int, pattern_kind_count> hist{};
    for (int i = 0; i < 20000; ++i) ++hist[static_cast<std::size_t>(select_pattern(uniform_pattern_weights(), rng))];
    for (int h : hist) EXPECT_NEAR(h, 2000, 200);
}

TEST(Composite, DarkeningBound) {
    Rng rng(13);
    for (int t = 0; t < 10; ++t) {
        const auto img = relight::testing::random_image(48, 48, rng);
        const auto kind = all_pattern_kinds[t];
        const ShadowParams p{kind, rng.uniform(0.35, 0.6), rng.uniform(0.5, 4.0), rng()};
        const auto out = composite_shadow(img, generate_pattern(kind, 48, 48, p.pattern_seed), Mask(48, 48, 1.0f), p);
        for (std::size_t i = 0; i < out.data().size(); ++i) {
            ASSERT_LE(out.data()[i], img.data()[i]);
            ASSERT_GE(out.data()[i], (1.0 - p.opacity) * img.data()[i] - 1e-6);
        }
    }
}

TEST(Composite, ZeroOpacityAndBackgroundAreUntouched) {
    Rng rng(2);
    const auto img = relight::testing::random_image(32, 32, rng);
    const auto pat = generate_pattern(PatternKind::VenetianBlinds, 32, 32, 1);
    EXPECT_EQ(composite_shadow(img, pat, Mask(32, 32, 1.0f), {PatternKind::VenetianBlinds, 0.0, 2.0, 1}), img);
    EXPECT_EQ(composite_shadow(img, pat, Mask(32, 32, 0.0f), {PatternKind::VenetianBlinds, 0.5, 2.0, 1}), img);
    EXPECT_THROW(composite_shadow(img, pat, Mask(32, 32, 1.0f), {PatternKind::VenetianBlinds, 1.5, 2.0, 1}), Error);
}

TEST(PlaceOnGray, BlendsByMask) {
    ImageRGB img(2, 1, 0.9f);
    Mask m(2, 1);
    m.at(0, 0) = 0.0f;
    m.at(1, 0) = 1.0f;
    const auto out = place_on_gray(img, m, 0.5);
    EXPECT_EQ(out.at(0, 0, 0), 0.5f);
    EXPECT_EQ(out.at(1, 0, 2), 0.9f);
    m.at(0, 0) = 0.25f;
    EXPECT_FLOAT_EQ(place_on_gray(img, m, 0.5).at(0, 0, 1), 0.25f * 0.9f + 0.75f * 0.5f);
}
