#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "relight/random.hpp"

using namespace relight;

// Reference outputs from an independent big-integer implementation of
// splitmix64 / xoshiro256** / FNV-1a.
TEST(Random, SplitmixReferenceValue) {
    std::uint64_t s = 0;
    EXPECT_EQ(splitmix64(s), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(mix64(0), 0xe220a8397b1dcdafULL);
}

TEST(Random, XoshiroReferenceStreams) {
    Rng a(0);
    EXPECT_EQ(a(), 0x99ec5f36cb75f2b4ULL);
    EXPECT_EQ(a(), 0xbf6e1f784956452aULL);
    EXPECT_EQ(a(), 0x1a5f849d4933e6e0ULL);
    Rng b(42);
    EXPECT_EQ(b(), 0x15780b2e0c2ec716ULL);
    EXPECT_EQ(b(), 0x6104d9866d113a7eULL);
    EXPECT_EQ(b(), 0xae17533239e499a1ULL);
}

TEST(Random, UniformUsesTop53Bits) {
    Rng r(42);
    EXPECT_DOUBLE_EQ(r.uniform(), 0.08386297105988216);
    EXPECT_DOUBLE_EQ(r.uniform(), 0.3789802506626686);
}

TEST(Random, Fnv1aReferenceValues) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a64("face_0000"), 0x3e687d1b165c94a9ULL);
}

TEST(Random, UniformStaysInRange) {
    Rng r(7);
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        const double v = r.uniform(0.35, 0.6);
        ASSERT_GE(v, 0.35);
        ASSERT_LE(v, 0.6);
    }
    EXPECT_EQ(r.uniform(0.3, 0.3), 0.3);
}

TEST(Random, BelowIsRoughlyUniform) {
    Rng r(11);
    std::vector<int> hist(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto v = r.below(7);
        ASSERT_LT(v, 7u);
        ++hist[v];
    }
    for (int c : hist) EXPECT_NEAR(c, n / 7, 5 * std::sqrt(n / 7.0));
    EXPECT_EQ(r.below(1), 0u);
}

TEST(Random, SameSeedSameStream) {
    Rng a(123), b(123), c(124);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
    EXPECT_NE(Rng(123)(), c());
}
